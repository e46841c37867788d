#include "qdc/scheduler.h"

#include <algorithm>
#include <limits>
#include <queue>
#include <set>

#include "json.hpp"

namespace qdc {

// ---------------------------------------------------------------------------
// ResourceLedger

ResourceLedger::ResourceLedger(const Fabric& fabric, std::size_t comm_qubits_per_qpu)
    : channels_(fabric.links().size(), 0),
      comm_cap_(comm_qubits_per_qpu),
      comm_(fabric.qpu_count(), 0),
      bsm_cap_(fabric.bsm_counts().begin(), fabric.bsm_counts().end()),
      bsm_(fabric.switch_count(), 0) {
  for (const auto& link : fabric.links()) channel_cap_.push_back(static_cast<std::size_t>(link.channels));
}

void ResourceLedger::take_channel(std::size_t edge) {
  if (free_channels(edge) == 0) throw std::logic_error("channel over-reserved");
  ++channels_[edge];
}

void ResourceLedger::take_comm(std::size_t qpu, std::size_t count) {
  if (free_comm(qpu) < count) throw std::logic_error("communication qubits over-reserved");
  comm_[qpu] += count;
}

void ResourceLedger::take_bsm(std::size_t sw) {
  if (free_bsm(sw) == 0) throw std::logic_error("BSM over-reserved");
  ++bsm_[sw];
}

void ResourceLedger::release_all() {
  std::fill(channels_.begin(), channels_.end(), 0);
  std::fill(comm_.begin(), comm_.end(), 0);
  std::fill(bsm_.begin(), bsm_.end(), 0);
}

bool ResourceLedger::empty() const {
  const auto zero = [](std::size_t v) { return v == 0; };
  return std::all_of(channels_.begin(), channels_.end(), zero) &&
         std::all_of(comm_.begin(), comm_.end(), zero) && std::all_of(bsm_.begin(), bsm_.end(), zero);
}

bool ResourceLedger::within_capacity() const {
  for (std::size_t e = 0; e < channels_.size(); ++e) {
    if (channels_[e] > channel_cap_[e]) return false;
  }
  for (std::size_t q = 0; q < comm_.size(); ++q) {
    if (comm_[q] > comm_cap_) return false;
  }
  for (std::size_t s = 0; s < bsm_.size(); ++s) {
    if (bsm_[s] > bsm_cap_[s]) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// EprLatencyModel

EprLatencyModel::EprLatencyModel(PhysParams params, SwapProtocol protocol, std::size_t trials,
                                 std::uint64_t mc_seed, ChainLatencyCache* cache)
    : params_(params), protocol_(protocol), trials_(trials), mc_seed_(mc_seed), cache_(cache) {
  params_.validate();
  if (!cache_) {
    own_cache_ = std::make_unique<ChainLatencyCache>();
    cache_ = own_cache_.get();
  }
}

double EprLatencyModel::expected_latency(const PathDescriptor& path) const {
  if (!path.server_centric()) return expected_epr_latency_switch(path, params_);
  const ChainSpec spec = chain_spec(path, protocol_, params_);
  const std::uint64_t stream = 2 * path.segments.size() + static_cast<std::uint64_t>(protocol_);
  const ChainEstimate est = cache_->estimate(spec, trials_, mix_seed(mc_seed_, stream));
  return est.mean_slots * attempt_duration(path, params_);
}

// ---------------------------------------------------------------------------
// PathFinder

namespace {

constexpr std::size_t kInf = std::numeric_limits<std::size_t>::max() / 4;

}  // namespace

struct PathFinder::Search {
  const Fabric& f;
  const std::vector<std::vector<Adjacent>>& adj;
  const ResourceLedger& ledger;
  bool server;
  std::size_t src;
  std::size_t dst;
  std::vector<std::size_t> dist;      // hops to dst
  std::vector<std::size_t> via_bsm;   // hops to dst through some switch with a free BSM
  std::vector<char> on_path;
  std::vector<std::size_t> nodes;
  std::vector<std::size_t> edges;
  std::size_t target = 0;

  bool passable(std::size_t v) const {
    if (f.is_switch(v)) return !server || ledger.free_bsm(f.switch_index(v)) > 0;
    // Only server-centric fabrics relay through QPUs; a repeater holds two halves.
    return server && v != src && v != dst && ledger.free_comm(v) >= 2;
  }

  bool bsm_switch(std::size_t v) const { return f.is_switch(v) && ledger.free_bsm(f.switch_index(v)) > 0; }

  void compute_bounds() {
    const std::size_t n = f.node_count();
    dist.assign(n, kInf);
    std::queue<std::size_t> q;
    dist[dst] = 0;
    q.push(dst);
    while (!q.empty()) {
      const auto u = q.front();
      q.pop();
      for (const auto& [v, e] : adj[u]) {
        if (dist[v] != kInf || ledger.free_channels(e) == 0) continue;
        if (v == src) {
          dist[v] = dist[u] + 1;
        } else if (passable(v)) {
          dist[v] = dist[u] + 1;
          q.push(v);
        }
      }
    }
    if (server) return;

    via_bsm.assign(n, kInf);
    using Item = std::pair<std::size_t, std::size_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    for (std::size_t v = 0; v < n; ++v) {
      if (bsm_switch(v) && dist[v] != kInf) {
        via_bsm[v] = dist[v];
        pq.emplace(dist[v], v);
      }
    }
    while (!pq.empty()) {
      const auto [d, u] = pq.top();
      pq.pop();
      if (d != via_bsm[u] || u == src) continue;
      for (const auto& [v, e] : adj[u]) {
        if (ledger.free_channels(e) == 0) continue;
        if (v != src && !passable(v)) continue;
        if (d + 1 < via_bsm[v]) {
          via_bsm[v] = d + 1;
          pq.emplace(d + 1, v);
        }
      }
    }
  }

  std::size_t bound(std::size_t v, bool has_bsm) const { return server || has_bsm ? dist[v] : via_bsm[v]; }

  bool dfs(std::size_t v, bool has_bsm) {
    const std::size_t depth = edges.size();
    if (v == dst) return depth == target;
    for (const auto& [w, e] : adj[v]) {
      if (on_path[w] || ledger.free_channels(e) == 0) continue;
      if (w != dst && !passable(w)) continue;
      const std::size_t remaining = target - depth - 1;
      if (w == dst && remaining != 0) continue;
      const bool next_has = has_bsm || bsm_switch(w);
      if (bound(w, next_has) > remaining) continue;
      on_path[w] = 1;
      nodes.push_back(w);
      edges.push_back(e);
      if (dfs(w, next_has)) return true;
      on_path[w] = 0;
      nodes.pop_back();
      edges.pop_back();
    }
    return false;
  }
};

PathFinder::PathFinder(const Fabric& fabric, std::size_t max_hops)
    : fabric_(fabric), max_hops_(max_hops), sorted_adj_(fabric.node_count()) {
  for (std::size_t v = 0; v < fabric.node_count(); ++v) {
    const auto nbrs = fabric.neighbors(v);
    sorted_adj_[v].assign(nbrs.begin(), nbrs.end());
    std::sort(sorted_adj_[v].begin(), sorted_adj_[v].end(),
              [](const Adjacent& a, const Adjacent& b) { return std::tie(a.node, a.edge) < std::tie(b.node, b.edge); });
  }
  const std::size_t n = fabric.qpu_count();
  const ResourceLedger idle(fabric, 2);
  idle_hops_.assign(n * n, kInf);
  for (std::size_t dst = 0; dst < n; ++dst) {
    for (std::size_t src = 0; src < n; ++src) {
      if (src == dst) continue;
      Search s = make_search(src, dst, idle);
      s.compute_bounds();
      idle_hops_[src * n + dst] = s.bound(s.src, false);
    }
  }
}

std::size_t PathFinder::hop_cap(std::size_t src_qpu, std::size_t dst_qpu) const {
  const std::size_t idle = idle_hops_[src_qpu * fabric_.qpu_count() + dst_qpu];
  return idle == kInf ? max_hops_ : std::max(max_hops_, idle);
}

PathFinder::Search PathFinder::make_search(std::size_t src_qpu, std::size_t dst_qpu,
                                           const ResourceLedger& ledger) const {
  return Search{fabric_,
                sorted_adj_,
                ledger,
                is_server_centric(fabric_.arch()),
                fabric_.qpu_node(src_qpu),
                fabric_.qpu_node(dst_qpu),
                {},
                {},
                std::vector<char>(fabric_.node_count(), 0),
                {},
                {}};
}

std::optional<PathReservation> PathFinder::find(std::size_t src_qpu, std::size_t dst_qpu,
                                                const ResourceLedger& ledger) const {
  if (src_qpu == dst_qpu) throw std::logic_error("path search requires two distinct QPUs");
  if (ledger.free_comm(src_qpu) == 0 || ledger.free_comm(dst_qpu) == 0) return std::nullopt;

  Search s = make_search(src_qpu, dst_qpu, ledger);
  s.compute_bounds();
  const std::size_t cap = hop_cap(src_qpu, dst_qpu);
  const std::size_t lower = s.bound(s.src, false);
  if (lower == kInf || lower > cap) return std::nullopt;

  std::optional<std::size_t> found;
  for (std::size_t h = std::max<std::size_t>(lower, 2); h <= cap; ++h) {
    s.target = h;
    std::fill(s.on_path.begin(), s.on_path.end(), 0);
    s.on_path[s.src] = 1;
    s.nodes.assign(1, s.src);
    s.edges.clear();
    if (s.dfs(s.src, false)) {
      found = h;
      break;
    }
  }
  if (!found) return std::nullopt;

  PathReservation r;
  r.nodes = s.nodes;
  r.edges = s.edges;
  const std::size_t h = r.edges.size();
  const auto radix_at = [&](std::size_t node) { return fabric_.switch_radix(fabric_.switch_index(node)); };
  const auto length_at = [&](std::size_t i) { return fabric_.links()[r.edges[i]].length_km; };

  r.comm.emplace_back(src_qpu, 1);
  r.comm.emplace_back(dst_qpu, 1);
  PathDescriptor& d = r.descriptor;
  d.hops = h;
  for (std::size_t i = 0; i < h; ++i) d.fiber_km += length_at(i);
  for (std::size_t i = 1; i < h; ++i) {
    if (fabric_.is_switch(r.nodes[i])) d.switch_radices.push_back(radix_at(r.nodes[i]));
  }

  if (s.server) {
    for (std::size_t i = 1; i < h; ++i) {
      const std::size_t v = r.nodes[i];
      if (fabric_.is_switch(v)) {
        r.bsm_switches.push_back(fabric_.switch_index(v));
      } else {
        r.comm.emplace_back(v, 2);
      }
    }
    d.repeaters = r.bsm_switches.size() - 1;
    if (d.repeaters > 0) {
      for (std::size_t i = 0; i + 1 < h; i += 2) {
        PathDescriptor seg;
        seg.hops = 2;
        seg.fiber_km = length_at(i) + length_at(i + 1);
        seg.switch_radices.push_back(radix_at(r.nodes[i + 1]));
        d.segments.push_back(std::move(seg));
      }
    }
  } else {
    // One BSM, at the free switch nearest the path midpoint (ties: lower index).
    std::optional<std::pair<std::size_t, std::size_t>> best;  // (distance*2, switch)
    for (std::size_t i = 1; i < h; ++i) {
      const std::size_t v = r.nodes[i];
      if (!s.bsm_switch(v)) continue;
      const std::size_t off = 2 * i > h ? 2 * i - h : h - 2 * i;
      const std::pair cand{off, fabric_.switch_index(v)};
      if (!best || cand < *best) best = cand;
    }
    r.bsm_switches.push_back(best->second);
  }
  return r;
}

void reserve(ResourceLedger& ledger, const PathReservation& r) {
  for (std::size_t e : r.edges) ledger.take_channel(e);
  for (const auto& [qpu, count] : r.comm) ledger.take_comm(qpu, count);
  for (std::size_t sw : r.bsm_switches) ledger.take_bsm(sw);
}

std::optional<PathReservation> find_path(const Gate& gate, const PathFinder& finder, const Mapping& mapping,
                                         ResourceLedger& ledger, const EprLatencyModel& model) {
  if (!gate.q1) throw std::logic_error("find_path called on a single-qubit gate");
  const std::size_t a = mapping.qpu_of[gate.q0];
  const std::size_t b = mapping.qpu_of[*gate.q1];
  if (a == b) throw std::logic_error("find_path called on a local gate");
  auto r = finder.find(a, b, ledger);
  if (!r) return std::nullopt;
  r->expected_latency_s = model.expected_latency(r->descriptor);
  reserve(ledger, *r);
  return r;
}

// ---------------------------------------------------------------------------
// Execution

std::string to_json(const RunRecord& record) {
  nlohmann::ordered_json j;
  j["t_dist_s"] = record.t_dist_s;
  j["t_mono_s"] = record.t_mono_s;
  j["rho_lat"] = record.rho_lat;
  j["gates"] = record.gates;
  j["nonlocal_gates"] = record.nonlocal_gates;
  j["deferrals"] = record.deferrals;
  nlohmann::ordered_json hist = nlohmann::ordered_json::object();
  for (const auto& [hops, count] : record.hop_histogram) hist[std::to_string(hops)] = count;
  j["hop_histogram"] = std::move(hist);
  j["layers"] = record.layer_latencies_s.size();
  j["layer_latencies_s"] = record.layer_latencies_s;
  return j.dump(2);
}

LayerResult schedule_layer(std::span<const std::size_t> frontier_gates, const GateDag& dag,
                           const Mapping& mapping, const PathFinder& finder, ResourceLedger& ledger,
                           const EprLatencyModel& model, std::mt19937_64& rng,
                           std::map<std::size_t, std::size_t>& hop_histogram,
                           const SchedulerOptions& options) {
  if (frontier_gates.empty()) throw std::invalid_argument("schedule_layer needs a nonempty frontier");
  const PhysParams& p = model.params();
  LayerResult result;
  std::vector<std::size_t> remote;
  for (std::size_t g : frontier_gates) {
    const Gate& gate = dag.gate(g);
    if (gate.q1 && mapping.qpu_of[gate.q0] != mapping.qpu_of[*gate.q1]) {
      remote.push_back(g);
    } else {
      result.committed.push_back(g);
    }
  }
  std::shuffle(remote.begin(), remote.end(), rng);

  // Usage only grows within a layer, so a failed QPU pair stays infeasible.
  std::set<std::pair<std::size_t, std::size_t>> failed;
  std::optional<double> slowest;
  for (std::size_t g : remote) {
    const Gate& gate = dag.gate(g);
    const std::pair<std::size_t, std::size_t> key = std::minmax(mapping.qpu_of[gate.q0], mapping.qpu_of[*gate.q1]);
    std::optional<PathReservation> r;
    if (!failed.contains(key)) r = find_path(gate, finder, mapping, ledger, model);
    if (!r) {
      failed.insert(key);
      ++result.deferred;
      continue;
    }
    if (options.audit) options.audit(ledger);
    ++hop_histogram[r->hops()];
    slowest = std::max(slowest.value_or(0.0), r->expected_latency_s);
    result.committed.push_back(g);
  }
  result.latency_s = slowest ? std::max(p.t_local_s, p.reconfig_delay_s + *slowest) : p.t_local_s;
  ledger.release_all();
  return result;
}

RunRecord run_distributed(const GateDag& dag, const Fabric& fabric, const Mapping& mapping,
                          const PhysParams& p, std::uint64_t seed, const SchedulerOptions& options) {
  if (mapping.qpu_of.size() != dag.width()) throw std::invalid_argument("mapping does not cover the circuit");
  if (mapping.parts() != fabric.qpu_count()) {
    throw std::invalid_argument("mapping targets " + std::to_string(mapping.parts()) +
                                " QPUs but the fabric has " + std::to_string(fabric.qpu_count()));
  }
  const PathFinder finder(fabric, options.max_hops);
  ResourceLedger ledger(fabric, options.comm_qubits);
  const EprLatencyModel model(p, options.protocol, options.mc_trials, options.mc_seed, options.cache);
  std::mt19937_64 rng(seed);

  RunRecord record;
  record.gates = dag.size();
  std::vector<std::size_t> pending(dag.size());
  std::vector<std::size_t> ready;
  for (std::size_t g = 0; g < dag.size(); ++g) {
    pending[g] = dag.preds(g).size();
    if (pending[g] == 0) ready.push_back(g);
  }

  std::size_t done = 0;
  double t = 0.0;
  while (done < dag.size()) {
    const std::size_t layer = record.layer_latencies_s.size();
    LayerResult step = schedule_layer(ready, dag, mapping, finder, ledger, model, rng, record.hop_histogram, options);
    if (step.committed.empty()) {
      // Nothing was reserved, so every gate failed against an empty ledger and
      // any repetition of this frontier fails identically.
      throw DeadlockError("deadlock: " + std::to_string(ready.size()) +
                          " non-local gates in the frontier cannot be routed even on an idle fabric");
    }
    record.deferrals += step.deferred;
    t += step.latency_s;
    record.layer_latencies_s.push_back(step.latency_s);

    std::vector<char> committed(dag.size(), 0);
    for (std::size_t g : step.committed) {
      committed[g] = 1;
      const Gate& gate = dag.gate(g);
      if (gate.q1 && mapping.qpu_of[gate.q0] != mapping.qpu_of[*gate.q1]) ++record.nonlocal_gates;
      if (options.on_commit) options.on_commit(g, layer);
    }
    std::vector<std::size_t> next;
    for (std::size_t g : ready) {
      if (!committed[g]) next.push_back(g);
    }
    for (std::size_t g : step.committed) {
      for (std::size_t s : dag.succs(g)) {
        if (--pending[s] == 0) next.push_back(s);
      }
    }
    std::sort(next.begin(), next.end());
    ready = std::move(next);
    done += step.committed.size();
  }

  record.t_dist_s = t;
  record.t_mono_s = run_monolithic(dag, p);
  record.rho_lat = record.t_mono_s > 0.0 ? record.t_dist_s / record.t_mono_s : 1.0;
  return record;
}

double run_monolithic(const GateDag& dag, const PhysParams& p) {
  std::vector<std::size_t> depth(dag.size(), 0);
  std::size_t layers = 0;
  for (std::size_t g = 0; g < dag.size(); ++g) {
    for (std::size_t pred : dag.preds(g)) depth[g] = std::max(depth[g], depth[pred] + 1);
    layers = std::max(layers, depth[g] + 1);
  }
  // Summed layer by layer, exactly as the distributed run accumulates time.
  double t = 0.0;
  for (std::size_t i = 0; i < layers; ++i) t += p.t_local_s;
  return t;
}

}  // namespace qdc
