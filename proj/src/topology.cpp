#include "qdc/topology.h"

#include <algorithm>
#include <array>
#include <limits>
#include <map>
#include <queue>
#include <sstream>

#include "json.hpp"

#include "internal/text.h"

namespace qdc {

namespace {

constexpr std::array<ArchTag, 7> kAllArchs = {
    ArchTag::kQFlyFull,  ArchTag::kQFlyHalf,    ArchTag::kQFlyResidual, ArchTag::kClosTight,
    ArchTag::kClosCompact, ArchTag::kFatTree, ArchTag::kBCube,
};

std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

std::size_t ipow(std::size_t base, int exp) {
  std::size_t r = 1;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}

}  // namespace

std::string_view to_string(ArchTag tag) {
  switch (tag) {
    case ArchTag::kFatTree: return "fattree";
    case ArchTag::kClosTight: return "clos_tight";
    case ArchTag::kClosCompact: return "clos_compact";
    case ArchTag::kQFlyFull: return "qfly_full";
    case ArchTag::kQFlyHalf: return "qfly_half";
    case ArchTag::kQFlyResidual: return "qfly_residual";
    case ArchTag::kBCube: return "bcube";
  }
  return "unknown";
}

ArchTag parse_arch(std::string_view name) {
  for (ArchTag tag : kAllArchs) {
    if (to_string(tag) == name) return tag;
  }
  if (name == "fat-tree" || name == "fat_tree") return ArchTag::kFatTree;
  throw std::invalid_argument("unknown architecture '" + std::string(name) + "'");
}

std::span<const ArchTag> all_archs() { return kAllArchs; }

bool is_server_centric(ArchTag tag) { return tag == ArchTag::kBCube; }

std::string to_string(const BsmModel& model) {
  return (model.kind == BsmModelKind::kPerSwitch ? "per-switch:" : "total:") +
         std::to_string(model.count);
}

BsmModel parse_bsm_model(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) {
    throw std::invalid_argument("bsm model must be per-switch:<c> or total:<B>, got '" +
                                std::string(text) + "'");
  }
  const auto kind = text.substr(0, colon);
  const auto count = internal::parse_number<std::size_t>(text.substr(colon + 1), "BSM count");
  if (kind == "per-switch") return BsmModel::per_switch(count);
  if (kind == "total") return BsmModel::total_budget(count);
  throw std::invalid_argument("unknown bsm model '" + std::string(kind) + "'");
}

// ---------------------------------------------------------------------------
// Fabric

Fabric::Fabric(ArchTag tag, ArchParams params, std::size_t n_qpus)
    : tag_(tag), params_(params), n_qpus_(n_qpus), adj_(n_qpus) {}

NodeId Fabric::node_id(std::size_t node) const {
  if (is_qpu(node)) return {NodeKind::kQpu, node, std::nullopt};
  const auto sw = switch_index(node);
  return {NodeKind::kSwitch, sw, switch_layer_[sw]};
}

std::size_t Fabric::add_switch(std::optional<int> layer, int radix) {
  switch_layer_.push_back(layer);
  switch_radix_.push_back(radix);
  bsm_.push_back(0);
  adj_.emplace_back();
  return switch_layer_.size() - 1;
}

std::size_t Fabric::add_link(std::size_t a, std::size_t b, const LinkDefaults& defaults) {
  if (a == b || a >= node_count() || b >= node_count()) {
    throw std::invalid_argument("invalid link endpoints");
  }
  if (defaults.channels < 1) {
    throw std::invalid_argument("link channel capacity must be >= 1");
  }
  const std::size_t e = links_.size();
  links_.push_back({std::min(a, b), std::max(a, b), defaults.channels, defaults.length_km});
  adj_[a].push_back({b, e});
  adj_[b].push_back({a, e});
  return e;
}

std::size_t Fabric::port_budget() const {
  switch (tag_) {
    case ArchTag::kFatTree: return static_cast<std::size_t>(params_.k);
    case ArchTag::kBCube: return static_cast<std::size_t>(params_.bcube_n);
    case ArchTag::kQFlyHalf:
    case ArchTag::kQFlyResidual: return params_.qpus_per_switch + params_.k_ring;
    // Full-mesh QFly and full-bipartite Clos wiring exceed k by construction.
    case ArchTag::kQFlyFull:
    case ArchTag::kClosTight:
    case ArchTag::kClosCompact: return kUnbounded;
  }
  return kUnbounded;
}

bool Fabric::connected() const {
  if (n_qpus_ == 0) return true;
  std::vector<char> seen(node_count(), 0);
  std::queue<std::size_t> frontier;
  frontier.push(0);
  seen[0] = 1;
  while (!frontier.empty()) {
    const auto u = frontier.front();
    frontier.pop();
    for (const auto& [v, e] : adj_[u]) {
      if (!seen[v]) {
        seen[v] = 1;
        frontier.push(v);
      }
    }
  }
  return std::all_of(seen.begin(), seen.begin() + static_cast<std::ptrdiff_t>(n_qpus_),
                     [](char c) { return c != 0; });
}

// ---------------------------------------------------------------------------
// Builders

int fattree_radix(std::size_t n_qpus) {
  if (n_qpus == 0) throw std::invalid_argument("fat-tree needs N >= 1");
  int k = 2;
  while (static_cast<std::size_t>(k) * k * k / 4 < n_qpus) k += 2;
  return k;
}

Fabric build_fattree(std::size_t n_qpus, const LinkDefaults& links) {
  const int k = fattree_radix(n_qpus);
  const std::size_t half = static_cast<std::size_t>(k) / 2;
  const std::size_t pods = static_cast<std::size_t>(k);

  ArchParams params;
  params.n_qpus = n_qpus;
  params.k = k;
  Fabric fabric(ArchTag::kFatTree, params, n_qpus);

  const std::size_t n_edge = pods * half;
  const std::size_t n_core = half * half;
  for (std::size_t i = 0; i < n_edge; ++i) fabric.add_switch(0, k);
  for (std::size_t i = 0; i < n_edge; ++i) fabric.add_switch(1, k);
  for (std::size_t i = 0; i < n_core; ++i) fabric.add_switch(2, k);

  const auto edge_sw = [&](std::size_t pod, std::size_t j) { return fabric.switch_node(pod * half + j); };
  const auto agg_sw = [&](std::size_t pod, std::size_t a) {
    return fabric.switch_node(n_edge + pod * half + a);
  };
  const auto core_sw = [&](std::size_t c) { return fabric.switch_node(2 * n_edge + c); };

  for (std::size_t q = 0; q < n_qpus; ++q) {
    fabric.add_link(fabric.qpu_node(q), fabric.switch_node(q / half), links);
  }
  for (std::size_t pod = 0; pod < pods; ++pod) {
    for (std::size_t j = 0; j < half; ++j) {
      for (std::size_t a = 0; a < half; ++a) fabric.add_link(edge_sw(pod, j), agg_sw(pod, a), links);
    }
    for (std::size_t a = 0; a < half; ++a) {
      for (std::size_t i = 0; i < half; ++i) fabric.add_link(agg_sw(pod, a), core_sw(a * half + i), links);
    }
  }
  return fabric;
}

namespace {

struct ClosLayout {
  int k = 0;
  std::size_t tors = 0;
  std::size_t rack = 0;
  std::size_t switches = 0;
  std::size_t unused = 0;
};

ClosLayout choose_clos_layout(std::size_t n_qpus, ClosPolicy policy) {
  int k_max = 4;
  while (static_cast<std::size_t>(k_max) * k_max / 4 < n_qpus) k_max += 2;

  std::optional<ClosLayout> best;
  for (int k = 4; k <= k_max; k += 2) {
    ClosLayout c;
    c.k = k;
    c.tors = static_cast<std::size_t>(k) * k / 4;
    c.rack = ceil_div(n_qpus, c.tors);
    if (c.rack > static_cast<std::size_t>(k - 2)) continue;
    c.switches = c.tors + static_cast<std::size_t>(k) + static_cast<std::size_t>(k) / 2;
    c.unused = c.tors * c.rack - n_qpus;
    if (!best) {
      best = c;
      continue;
    }
    // Candidates arrive in increasing k, so strict comparison keeps the smaller k on ties.
    const auto key = [policy](const ClosLayout& l) {
      return policy == ClosPolicy::kTight ? std::pair{l.unused, l.switches}
                                          : std::pair{l.switches, l.unused};
    };
    if (key(c) < key(*best)) best = c;
  }
  if (!best) throw std::logic_error("no feasible Clos layout");
  return *best;
}

}  // namespace

Fabric build_clos(std::size_t n_qpus, ClosPolicy policy, const LinkDefaults& links) {
  if (n_qpus == 0) throw std::invalid_argument("Clos needs N >= 1");
  const ClosLayout layout = choose_clos_layout(n_qpus, policy);
  const std::size_t n_agg = static_cast<std::size_t>(layout.k);
  const std::size_t n_core = n_agg / 2;

  ArchParams params;
  params.n_qpus = n_qpus;
  params.k = layout.k;
  params.tors = layout.tors;
  params.rack = layout.rack;
  Fabric fabric(policy == ClosPolicy::kTight ? ArchTag::kClosTight : ArchTag::kClosCompact, params,
                n_qpus);

  for (std::size_t i = 0; i < layout.tors; ++i) fabric.add_switch(0, layout.k);
  for (std::size_t i = 0; i < n_agg; ++i) fabric.add_switch(1, layout.k);
  for (std::size_t i = 0; i < n_core; ++i) fabric.add_switch(2, layout.k);

  for (std::size_t q = 0; q < n_qpus; ++q) {
    fabric.add_link(fabric.qpu_node(q), fabric.switch_node(q / layout.rack), links);
  }
  for (std::size_t t = 0; t < layout.tors; ++t) {
    for (std::size_t a = 0; a < n_agg; ++a) {
      fabric.add_link(fabric.switch_node(t), fabric.switch_node(layout.tors + a), links);
    }
  }
  for (std::size_t a = 0; a < n_agg; ++a) {
    for (std::size_t c = 0; c < n_core; ++c) {
      fabric.add_link(fabric.switch_node(layout.tors + a),
                      fabric.switch_node(layout.tors + n_agg + c), links);
    }
  }
  return fabric;
}

Fabric build_qfly(std::size_t n_qpus, RingPolicy policy, int k_ref, const LinkDefaults& links) {
  if (n_qpus == 0) throw std::invalid_argument("QFly needs N >= 1");
  if (k_ref < 2 || k_ref % 2 != 0) throw std::invalid_argument("QFly reference radix must be even and >= 2");

  const std::size_t m = static_cast<std::size_t>(k_ref) / 2;
  const std::size_t s = ceil_div(n_qpus, m);

  std::size_t k_ring = 0;
  ArchTag tag = ArchTag::kQFlyFull;
  switch (policy) {
    case RingPolicy::kFull:
      k_ring = s - 1;
      tag = ArchTag::kQFlyFull;
      break;
    case RingPolicy::kHalf:
      k_ring = ceil_div(m, 2);
      tag = ArchTag::kQFlyHalf;
      break;
    case RingPolicy::kResidual:
      k_ring = static_cast<std::size_t>(k_ref) - m;
      tag = ArchTag::kQFlyResidual;
      break;
  }
  std::size_t ring = std::min(k_ring, s - 1);
  if (s > 1 && ring == 0) {
    throw DegenerateTopologyError("QFly ring policy yields no inter-switch links for " +
                                  std::to_string(s) + " switches");
  }
  // A perfect matching cannot connect more than two switches; fall back to a ring.
  if (ring == 1 && s > 2) ring = 2;

  ArchParams params;
  params.n_qpus = n_qpus;
  params.k = k_ref;
  params.k_ring = ring;
  params.qpus_per_switch = m;
  Fabric fabric(tag, params, n_qpus);

  for (std::size_t i = 0; i < s; ++i) fabric.add_switch(std::nullopt, k_ref);
  for (std::size_t q = 0; q < n_qpus; ++q) {
    fabric.add_link(fabric.qpu_node(q), fabric.switch_node(q / m), links);
  }

  // Circulant wiring: offsets 1..ring/2, plus the antipodal offset for odd ring.
  // With odd S and odd ring the antipodal matching leaves the last switch one short.
  const std::size_t half_ring = ring / 2;
  for (std::size_t d = 1; d <= half_ring; ++d) {
    for (std::size_t i = 0; i < s; ++i) {
      const std::size_t j = (i + d) % s;
      fabric.add_link(fabric.switch_node(i), fabric.switch_node(j), links);
    }
  }
  if (ring % 2 == 1 && s > 1) {
    const std::size_t d = s / 2;
    for (std::size_t i = 0; i < d; ++i) {
      fabric.add_link(fabric.switch_node(i), fabric.switch_node(i + d), links);
    }
  }
  return fabric;
}

Fabric build_bcube(std::size_t n_qpus, int k_ref, const LinkDefaults& links) {
  if (n_qpus == 0) throw std::invalid_argument("BCube needs N >= 1");
  if (k_ref < 2) throw std::invalid_argument("BCube radix must be >= 2");
  const std::size_t n = static_cast<std::size_t>(k_ref);

  int digits = 0;  // smallest L with n^L >= N
  while (ipow(n, digits) < n_qpus) ++digits;
  const int k_bcube = std::max(digits - 1, 0);
  const int levels = k_bcube + 1;

  ArchParams params;
  params.n_qpus = n_qpus;
  params.k = k_ref;
  params.bcube_n = k_ref;
  params.bcube_levels = levels;
  Fabric fabric(ArchTag::kBCube, params, n_qpus);

  // Level-l switch key drops digit l from the QPU identifier.
  const auto key = [n](std::size_t q, int level) {
    const std::size_t low = ipow(n, level);
    return (q / (low * n)) * low + q % low;
  };
  std::vector<std::map<std::size_t, std::size_t>> active(static_cast<std::size_t>(levels));
  for (int l = 0; l < levels; ++l) {
    for (std::size_t q = 0; q < n_qpus; ++q) active[static_cast<std::size_t>(l)].emplace(key(q, l), 0);
    for (auto& [k, sw] : active[static_cast<std::size_t>(l)]) sw = fabric.add_switch(l, k_ref);
  }
  for (std::size_t q = 0; q < n_qpus; ++q) {
    for (int l = 0; l < levels; ++l) {
      const auto sw = active[static_cast<std::size_t>(l)].at(key(q, l));
      fabric.add_link(fabric.qpu_node(q), fabric.switch_node(sw), links);
    }
  }
  return fabric;
}

Fabric build_fabric(ArchTag tag, std::size_t n_qpus, const LinkDefaults& links) {
  switch (tag) {
    case ArchTag::kFatTree: return build_fattree(n_qpus, links);
    case ArchTag::kClosTight: return build_clos(n_qpus, ClosPolicy::kTight, links);
    case ArchTag::kClosCompact: return build_clos(n_qpus, ClosPolicy::kCompact, links);
    case ArchTag::kQFlyFull: return build_qfly(n_qpus, RingPolicy::kFull, fattree_radix(n_qpus), links);
    case ArchTag::kQFlyHalf: return build_qfly(n_qpus, RingPolicy::kHalf, fattree_radix(n_qpus), links);
    case ArchTag::kQFlyResidual:
      return build_qfly(n_qpus, RingPolicy::kResidual, fattree_radix(n_qpus), links);
    case ArchTag::kBCube: return build_bcube(n_qpus, fattree_radix(n_qpus), links);
  }
  throw std::invalid_argument("unknown architecture");
}

void allocate_bsms(Fabric& fabric, const BsmModel& model) {
  const std::size_t s = fabric.switch_count();
  if (s == 0) return;
  for (std::size_t sw = 0; sw < s; ++sw) {
    if (model.kind == BsmModelKind::kPerSwitch) {
      fabric.set_bsm(sw, model.count);
    } else {
      fabric.set_bsm(sw, model.count / s + (sw < model.count % s ? 1 : 0));
    }
  }
}

SummaryRow topology_summary(const Fabric& fabric) {
  const auto& p = fabric.params();
  SummaryRow row;
  row.arch = fabric.arch();
  row.total_switches = fabric.switch_count();
  row.n_capacity = fabric.qpu_count();

  std::size_t max_hosted = 0;
  for (std::size_t sw = 0; sw < fabric.switch_count(); ++sw) {
    const auto node = fabric.switch_node(sw);
    const auto nbrs = fabric.neighbors(node);
    const auto hosted = static_cast<std::size_t>(
        std::count_if(nbrs.begin(), nbrs.end(), [&](const Adjacent& a) { return fabric.is_qpu(a.node); }));
    max_hosted = std::max(max_hosted, hosted);
    row.max_degree = std::max(row.max_degree, nbrs.size());
  }
  row.qpus_per_rack = static_cast<double>(max_hosted);

  switch (fabric.arch()) {
    case ArchTag::kFatTree:
      row.ports_per_switch = static_cast<std::size_t>(p.k);
      row.tor_count = static_cast<std::size_t>(p.k) * static_cast<std::size_t>(p.k) / 2;
      break;
    case ArchTag::kClosTight:
    case ArchTag::kClosCompact:
      row.ports_per_switch = static_cast<std::size_t>(p.k);
      row.tor_count = p.tors;
      row.n_capacity = p.tors * p.rack;
      break;
    case ArchTag::kQFlyFull:
    case ArchTag::kQFlyHalf:
    case ArchTag::kQFlyResidual:
      row.ports_per_switch = p.qpus_per_switch + p.k_ring;
      row.tor_count = fabric.switch_count();
      break;
    case ArchTag::kBCube:
      // No rack abstraction: report QPUs per active switch.
      row.ports_per_switch = static_cast<std::size_t>(p.bcube_n);
      row.tor_count = fabric.switch_count();
      row.qpus_per_rack =
          static_cast<double>(fabric.qpu_count()) / static_cast<double>(fabric.switch_count());
      break;
  }
  return row;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

std::string node_label(const Fabric& f, std::size_t node) {
  return f.is_qpu(node) ? "q" + std::to_string(node) : "s" + std::to_string(f.switch_index(node));
}

std::size_t parse_label(std::string_view label, std::size_t n_qpus) {
  if (label.size() < 2 || (label[0] != 'q' && label[0] != 's')) {
    throw std::invalid_argument("bad node label '" + std::string(label) + "'");
  }
  const auto idx = internal::parse_number<std::size_t>(label.substr(1), "node index");
  return label[0] == 'q' ? idx : n_qpus + idx;
}

}  // namespace

std::string write_fabric_text(const Fabric& fabric) {
  std::ostringstream out;
  out << "arch " << to_string(fabric.arch()) << ' ' << fabric.qpu_count() << ' ' << fabric.params().k
      << '\n';
  for (std::size_t q = 0; q < fabric.qpu_count(); ++q) out << "node qpu " << q << '\n';
  for (std::size_t sw = 0; sw < fabric.switch_count(); ++sw) {
    out << "node switch " << sw;
    if (auto layer = fabric.switch_layer(sw)) out << ' ' << *layer;
    out << '\n';
  }
  for (const auto& l : fabric.links()) {
    out << "edge " << node_label(fabric, l.a) << ' ' << node_label(fabric, l.b) << ' ' << l.channels
        << ' ' << internal::format_double(l.length_km) << '\n';
  }
  for (std::size_t sw = 0; sw < fabric.switch_count(); ++sw) {
    out << "bsm s" << sw << ' ' << fabric.bsm(sw) << '\n';
  }
  return out.str();
}

Fabric read_fabric_text(std::string_view text) {
  std::optional<Fabric> fabric;
  std::size_t line_no = 0;
  std::size_t expected_qpus = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const auto line = internal::trim(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const auto tok = internal::split_ws(line);
    const auto fail = [&](const std::string& why) {
      throw std::invalid_argument("fabric line " + std::to_string(line_no) + ": " + why);
    };
    if (tok[0] == "arch") {
      if (tok.size() != 4) fail("expected 'arch <tag> <n_qpus> <k>'");
      ArchParams params;
      params.n_qpus = internal::parse_number<std::size_t>(tok[2], "QPU count");
      params.k = internal::parse_number<int>(tok[3], "radix");
      fabric.emplace(parse_arch(tok[1]), params, params.n_qpus);
      expected_qpus = params.n_qpus;
      continue;
    }
    if (!fabric) fail("missing 'arch' header");
    if (tok[0] == "node") {
      if (tok.size() < 3) fail("expected 'node <kind> <index> [layer]'");
      const auto idx = internal::parse_number<std::size_t>(tok[2], "node index");
      if (tok[1] == "qpu") {
        if (idx >= expected_qpus) fail("QPU index out of range");
      } else if (tok[1] == "switch") {
        if (idx != fabric->switch_count()) fail("switch indices must be dense and ordered");
        std::optional<int> layer;
        if (tok.size() > 3) layer = internal::parse_number<int>(tok[3], "layer");
        fabric->add_switch(layer, fabric->params().k);
      } else {
        fail("unknown node kind '" + std::string(tok[1]) + "'");
      }
    } else if (tok[0] == "edge") {
      if (tok.size() != 5) fail("expected 'edge <idA> <idB> <channels> <length_km>'");
      LinkDefaults d;
      d.channels = internal::parse_number<int>(tok[3], "channel count");
      d.length_km = internal::parse_number<double>(tok[4], "length");
      fabric->add_link(parse_label(tok[1], expected_qpus), parse_label(tok[2], expected_qpus), d);
    } else if (tok[0] == "bsm") {
      if (tok.size() != 3) fail("expected 'bsm <switch_id> <count>'");
      const auto node = parse_label(tok[1], expected_qpus);
      if (!fabric->is_switch(node) || fabric->switch_index(node) >= fabric->switch_count()) {
        fail("bsm target is not a switch");
      }
      fabric->set_bsm(fabric->switch_index(node), internal::parse_number<std::size_t>(tok[2], "BSM count"));
    } else {
      fail("unknown directive '" + std::string(tok[0]) + "'");
    }
  }
  if (!fabric) throw std::invalid_argument("empty fabric document");
  return std::move(*fabric);
}

std::string write_fabric_json(const Fabric& fabric) {
  using nlohmann::json;
  json doc;
  doc["arch"] = to_string(fabric.arch());
  doc["n_qpus"] = fabric.qpu_count();
  doc["k"] = fabric.params().k;
  json nodes = json::array();
  for (std::size_t node = 0; node < fabric.node_count(); ++node) {
    const auto id = fabric.node_id(node);
    json n{{"id", node_label(fabric, node)},
           {"kind", id.kind == NodeKind::kQpu ? "qpu" : "switch"},
           {"index", id.index}};
    if (id.layer) n["layer"] = *id.layer;
    if (id.kind == NodeKind::kSwitch) n["bsm"] = fabric.bsm(id.index);
    nodes.push_back(std::move(n));
  }
  json edges = json::array();
  for (const auto& l : fabric.links()) {
    edges.push_back({{"a", node_label(fabric, l.a)},
                     {"b", node_label(fabric, l.b)},
                     {"channels", l.channels},
                     {"length_km", l.length_km}});
  }
  doc["nodes"] = std::move(nodes);
  doc["edges"] = std::move(edges);
  const auto s = topology_summary(fabric);
  doc["summary"] = {{"n_capacity", s.n_capacity},       {"switches", s.total_switches},
                    {"qpus_per_rack", s.qpus_per_rack}, {"ports_per_switch", s.ports_per_switch},
                    {"max_degree", s.max_degree},       {"tors", s.tor_count}};
  return doc.dump(2);
}

}  // namespace qdc
