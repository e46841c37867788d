#include "qdc/circuits.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "internal/text.h"

namespace qdc {

std::string_view to_string(GateKind kind) {
  switch (kind) {
    case GateKind::kSingle: return "single";
    case GateKind::kTwo: return "cx";
    case GateKind::kT: return "t";
    case GateKind::kTdg: return "tdg";
  }
  return "unknown";
}

std::string_view to_string(Workload w) {
  switch (w) {
    case Workload::kNearestNeighbor: return "nearest_neighbor";
    case Workload::kCliffordT: return "clifford_t";
    case Workload::kLongRange: return "long_range";
  }
  return "unknown";
}

Workload parse_workload(std::string_view name) {
  if (name == "nearest_neighbor" || name == "nn") return Workload::kNearestNeighbor;
  if (name == "clifford_t" || name == "clifford") return Workload::kCliffordT;
  if (name == "long_range" || name == "lr") return Workload::kLongRange;
  throw std::invalid_argument("unknown workload '" + std::string(name) + "'");
}

GateDag::GateDag(std::size_t width, std::vector<Gate> gates)
    : width_(width), gates_(std::move(gates)), preds_(gates_.size()), succs_(gates_.size()) {
  constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  std::vector<std::size_t> last(width_, kNone);
  for (std::size_t i = 0; i < gates_.size(); ++i) {
    Gate& g = gates_[i];
    g.id = i;
    if (g.q0 >= width_ || (g.q1 && (*g.q1 >= width_ || *g.q1 == g.q0))) {
      throw std::invalid_argument("gate " + std::to_string(i) + " has invalid qubit operands");
    }
    if (g.two_qubit() != (g.kind == GateKind::kTwo)) {
      throw std::invalid_argument("gate " + std::to_string(i) + " arity does not match its kind");
    }
    auto link = [&](std::uint32_t q) {
      const std::size_t p = last[q];
      if (p != kNone && std::find(preds_[i].begin(), preds_[i].end(), p) == preds_[i].end()) {
        preds_[i].push_back(p);
        succs_[p].push_back(i);
        ++edge_count_;
      }
      last[q] = i;
    };
    link(g.q0);
    if (g.q1) link(*g.q1);
  }
}

std::size_t GateDag::two_qubit_count() const {
  return static_cast<std::size_t>(
      std::count_if(gates_.begin(), gates_.end(), [](const Gate& g) { return g.two_qubit(); }));
}

GateDag gen_workload(Workload family, std::size_t width, std::size_t two_q_gates, std::uint64_t seed,
                     const CliffordTOptions& clifford) {
  if (width < 2) throw std::invalid_argument("workload width must be >= 2");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::uint32_t> any_qubit(0, static_cast<std::uint32_t>(width - 1));
  std::uniform_int_distribution<std::uint32_t> other_qubit(0, static_cast<std::uint32_t>(width - 2));

  const auto random_pair = [&] {
    const std::uint32_t a = any_qubit(rng);
    std::uint32_t b = other_qubit(rng);
    if (b >= a) ++b;
    return std::pair{a, b};
  };

  std::vector<Gate> gates;
  gates.reserve(two_q_gates * 3);
  const auto two = [&](std::uint32_t a, std::uint32_t b) {
    gates.push_back({gates.size(), GateKind::kTwo, a, b});
  };

  switch (family) {
    case Workload::kNearestNeighbor:
      for (std::size_t i = 0; i < two_q_gates; ++i) {
        const std::uint32_t q = other_qubit(rng);
        two(q, q + 1);
      }
      break;
    case Workload::kLongRange:
      for (std::size_t i = 0; i < two_q_gates; ++i) {
        const auto [a, b] = random_pair();
        two(a, b);
      }
      break;
    case Workload::kCliffordT: {
      std::poisson_distribution<int> singles(clifford.singles_per_two);
      std::bernoulli_distribution is_t(clifford.t_fraction);
      std::bernoulli_distribution dagger(0.5);
      for (std::size_t i = 0; i < two_q_gates; ++i) {
        const int n_single = clifford.singles_per_two > 0.0 ? singles(rng) : 0;
        for (int s = 0; s < n_single; ++s) {
          GateKind kind = GateKind::kSingle;
          if (is_t(rng)) kind = dagger(rng) ? GateKind::kTdg : GateKind::kT;
          gates.push_back({gates.size(), kind, any_qubit(rng), std::nullopt});
        }
        const auto [a, b] = random_pair();
        two(a, b);
      }
      break;
    }
  }
  return GateDag(width, std::move(gates));
}

std::size_t scale_gate_count(std::size_t n_qpus) {
  if (n_qpus == 0) throw std::invalid_argument("QPU count must be >= 1");
  const double raw = 200.0 + 100.0 * (std::log2(static_cast<double>(n_qpus)) - 3.0);
  const double rounded = std::round(raw / 50.0) * 50.0;
  return static_cast<std::size_t>(std::max(50.0, rounded));
}

Mapping contiguous_mapping(std::size_t width, std::size_t num_parts, std::size_t capacity) {
  if (num_parts == 0) throw std::invalid_argument("need at least one part");
  if (num_parts * capacity < width) {
    throw std::invalid_argument("infeasible partition: " + std::to_string(num_parts) + " parts x " +
                                std::to_string(capacity) + " capacity < " + std::to_string(width) +
                                " qubits");
  }
  const std::size_t block = (width + num_parts - 1) / num_parts;
  Mapping m;
  m.capacity = capacity;
  m.qpu_of.resize(width);
  m.load.assign(num_parts, 0);
  for (std::size_t q = 0; q < width; ++q) {
    m.qpu_of[q] = q / block;
    ++m.load[q / block];
  }
  return m;
}

std::uint64_t cut_weight(const GateDag& dag, const Mapping& mapping) {
  std::uint64_t cut = 0;
  for (const Gate& g : dag.gates()) {
    if (g.q1 && mapping.qpu_of[g.q0] != mapping.qpu_of[*g.q1]) ++cut;
  }
  return cut;
}

namespace {

using Adjacency = std::vector<std::vector<std::pair<std::size_t, std::int64_t>>>;

Adjacency interaction_graph(const GateDag& dag) {
  std::map<std::pair<std::size_t, std::size_t>, std::int64_t> weights;
  for (const Gate& g : dag.gates()) {
    if (!g.q1) continue;
    const auto a = std::min<std::size_t>(g.q0, *g.q1);
    const auto b = std::max<std::size_t>(g.q0, *g.q1);
    ++weights[{a, b}];
  }
  Adjacency adj(dag.width());
  for (const auto& [edge, w] : weights) {
    adj[edge.first].emplace_back(edge.second, w);
    adj[edge.second].emplace_back(edge.first, w);
  }
  return adj;
}

class KlRefiner {
 public:
  KlRefiner(const Adjacency& adj, Mapping& mapping, std::vector<std::size_t> priority)
      : adj_(adj), mapping_(mapping), priority_(std::move(priority)), members_(mapping.parts()) {
    for (std::size_t q = 0; q < mapping_.qpu_of.size(); ++q) members_[mapping_.qpu_of[q]].push_back(q);
  }

  bool pass() {
    bool improved = false;
    for (std::size_t a = 0; a < members_.size(); ++a) {
      for (std::size_t b = a + 1; b < members_.size(); ++b) {
        // With no cross edges every swap gain is non-positive.
        if (cross_weight(a, b) == 0) continue;
        improved = refine_pair(a, b) || improved;
      }
    }
    return improved;
  }

 private:
  std::int64_t cross_weight(std::size_t a, std::size_t b) const {
    std::int64_t w = 0;
    for (std::size_t q : members_[a]) {
      for (const auto& [v, wt] : adj_[q]) {
        if (mapping_.qpu_of[v] == b) w += wt;
      }
    }
    return w;
  }

  bool refine_pair(std::size_t pa, std::size_t pb) {
    std::vector<std::size_t> nodes = members_[pa];
    const std::size_t na = nodes.size();
    nodes.insert(nodes.end(), members_[pb].begin(), members_[pb].end());
    const std::size_t n = nodes.size();
    const std::size_t steps = std::min(na, n - na);
    if (steps == 0) return false;

    std::vector<std::size_t> local_of;  // qubit -> local slot, via sorted lookup
    std::vector<std::pair<std::size_t, std::size_t>> index;
    for (std::size_t i = 0; i < n; ++i) index.emplace_back(nodes[i], i);
    std::sort(index.begin(), index.end());
    const auto local = [&](std::size_t q) -> std::optional<std::size_t> {
      auto it = std::lower_bound(index.begin(), index.end(), std::pair{q, std::size_t{0}});
      if (it == index.end() || it->first != q) return std::nullopt;
      return it->second;
    };

    std::vector<std::int64_t> w(n * n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      for (const auto& [v, wt] : adj_[nodes[i]]) {
        if (auto j = local(v)) w[i * n + *j] = wt;
      }
    }
    const auto side = [na](std::size_t i) { return i < na ? 0 : 1; };
    std::vector<std::int64_t> d(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j || w[i * n + j] == 0) continue;
        d[i] += side(i) == side(j) ? -w[i * n + j] : w[i * n + j];
      }
    }

    // Seeded priority fixes the scan order, and therefore tie-breaking.
    std::vector<std::size_t> order_a(na), order_b(n - na);
    std::iota(order_a.begin(), order_a.end(), 0);
    std::iota(order_b.begin(), order_b.end(), na);
    const auto by_priority = [&](std::size_t x, std::size_t y) {
      return priority_[nodes[x]] < priority_[nodes[y]];
    };
    std::sort(order_a.begin(), order_a.end(), by_priority);
    std::sort(order_b.begin(), order_b.end(), by_priority);

    std::vector<char> locked(n, 0);
    std::vector<std::pair<std::size_t, std::size_t>> swaps;
    std::vector<std::int64_t> gains;
    for (std::size_t step = 0; step < steps; ++step) {
      std::optional<std::int64_t> best;
      std::size_t bx = 0, by = 0;
      for (std::size_t x : order_a) {
        if (locked[x]) continue;
        for (std::size_t y : order_b) {
          if (locked[y]) continue;
          const std::int64_t g = d[x] + d[y] - 2 * w[x * n + y];
          if (!best || g > *best) {
            best = g;
            bx = x;
            by = y;
          }
        }
      }
      locked[bx] = locked[by] = 1;
      swaps.emplace_back(bx, by);
      gains.push_back(*best);
      for (std::size_t u = 0; u < n; ++u) {
        if (locked[u]) continue;
        const std::int64_t toward_x = 2 * w[u * n + bx] - 2 * w[u * n + by];
        d[u] += side(u) == 0 ? toward_x : -toward_x;
      }
    }

    std::int64_t running = 0, best_sum = 0;
    std::size_t best_k = 0;
    for (std::size_t k = 0; k < gains.size(); ++k) {
      running += gains[k];
      if (running > best_sum) {
        best_sum = running;
        best_k = k + 1;
      }
    }
    if (best_k == 0) return false;

    for (std::size_t k = 0; k < best_k; ++k) {
      const std::size_t qa = nodes[swaps[k].first];
      const std::size_t qb = nodes[swaps[k].second];
      mapping_.qpu_of[qa] = pb;
      mapping_.qpu_of[qb] = pa;
    }
    members_[pa].clear();
    members_[pb].clear();
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t q = nodes[i];
      members_[mapping_.qpu_of[q]].push_back(q);
    }
    std::sort(members_[pa].begin(), members_[pa].end());
    std::sort(members_[pb].begin(), members_[pb].end());
    return true;
  }

  const Adjacency& adj_;
  Mapping& mapping_;
  std::vector<std::size_t> priority_;
  std::vector<std::vector<std::size_t>> members_;
};

}  // namespace

Mapping kl_partition(const GateDag& dag, std::size_t num_parts, std::size_t capacity, std::uint64_t seed,
                     int max_passes) {
  Mapping mapping = contiguous_mapping(dag.width(), num_parts, capacity);
  if (num_parts < 2) return mapping;

  std::vector<std::size_t> priority(dag.width());
  std::iota(priority.begin(), priority.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(priority.begin(), priority.end(), rng);

  const Adjacency adj = interaction_graph(dag);
  KlRefiner refiner(adj, mapping, std::move(priority));
  for (int pass = 0; pass < max_passes; ++pass) {
    if (!refiner.pass()) break;
  }
  return mapping;
}

std::vector<std::size_t> frontier(const GateDag& dag, std::span<const char> completed) {
  if (completed.size() != dag.size()) throw std::invalid_argument("completion mask size mismatch");
  std::vector<std::size_t> ready;
  for (std::size_t i = 0; i < dag.size(); ++i) {
    if (completed[i]) continue;
    const auto preds = dag.preds(i);
    if (std::all_of(preds.begin(), preds.end(), [&](std::size_t p) { return completed[p] != 0; })) {
      ready.push_back(i);
    }
  }
  return ready;
}

std::string write_circuit_text(const GateDag& dag) {
  std::ostringstream out;
  out << "width " << dag.width() << '\n';
  for (const Gate& g : dag.gates()) {
    out << "g " << g.id << ' ' << to_string(g.kind) << ' ' << g.q0;
    if (g.q1) out << ' ' << *g.q1;
    out << '\n';
  }
  return out.str();
}

GateDag read_circuit_text(std::string_view text) {
  std::optional<std::size_t> width;
  std::vector<Gate> gates;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = internal::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto tok = internal::split_ws(line);
    const auto fail = [&](const std::string& why) {
      throw std::invalid_argument("circuit line " + std::to_string(line_no) + ": " + why);
    };
    if (tok[0] == "width") {
      if (tok.size() != 2) fail("expected 'width <n>'");
      width = internal::parse_number<std::size_t>(tok[1], "width");
    } else if (tok[0] == "g") {
      if (tok.size() < 4 || tok.size() > 5) fail("expected 'g <id> <kind> <q0> [q1]'");
      Gate g;
      g.id = internal::parse_number<std::size_t>(tok[1], "gate id");
      if (g.id != gates.size()) fail("gate ids must be dense and ordered");
      if (tok[2] == "single") g.kind = GateKind::kSingle;
      else if (tok[2] == "cx") g.kind = GateKind::kTwo;
      else if (tok[2] == "t") g.kind = GateKind::kT;
      else if (tok[2] == "tdg") g.kind = GateKind::kTdg;
      else fail("unknown gate kind '" + std::string(tok[2]) + "'");
      g.q0 = internal::parse_number<std::uint32_t>(tok[3], "qubit");
      if (tok.size() == 5) g.q1 = internal::parse_number<std::uint32_t>(tok[4], "qubit");
      gates.push_back(g);
    } else {
      fail("unknown directive '" + std::string(tok[0]) + "'");
    }
  }
  if (!width) throw std::invalid_argument("circuit is missing a 'width' line");
  return GateDag(*width, std::move(gates));
}

std::string write_mapping_text(const Mapping& mapping) {
  std::ostringstream out;
  for (std::size_t q = 0; q < mapping.qpu_of.size(); ++q) out << "map " << q << ' ' << mapping.qpu_of[q] << '\n';
  return out.str();
}

}  // namespace qdc
