#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace qdc {

enum class NodeKind : std::uint8_t { kQpu, kSwitch };

enum class ArchTag : std::uint8_t {
  kFatTree,
  kClosTight,
  kClosCompact,
  kQFlyFull,
  kQFlyHalf,
  kQFlyResidual,
  kBCube,
};

std::string_view to_string(ArchTag tag);
ArchTag parse_arch(std::string_view name);
std::span<const ArchTag> all_archs();
bool is_server_centric(ArchTag tag);

class DegenerateTopologyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct NodeId {
  NodeKind kind = NodeKind::kQpu;
  std::size_t index = 0;
  std::optional<int> layer;

  friend bool operator==(const NodeId&, const NodeId&) = default;
};

struct ArchParams {
  std::size_t n_qpus = 0;
  int k = 0;            // switch radix / port budget
  std::size_t tors = 0;  // Clos ToR count
  std::size_t rack = 0;  // Clos QPUs per rack
  int bcube_n = 0;
  int bcube_levels = 0;  // k_bcube + 1
  std::size_t k_ring = 0;
  std::size_t qpus_per_switch = 0;  // QFly m
};

struct Link {
  std::size_t a = 0;  // dense node index
  std::size_t b = 0;
  int channels = 5;
  double length_km = 0.1;
};

struct Adjacent {
  std::size_t node;
  std::size_t edge;
};

enum class BsmModelKind : std::uint8_t { kPerSwitch, kTotalBudget };

struct BsmModel {
  BsmModelKind kind = BsmModelKind::kPerSwitch;
  std::size_t count = 2;

  static BsmModel per_switch(std::size_t c) { return {BsmModelKind::kPerSwitch, c}; }
  static BsmModel total_budget(std::size_t b) { return {BsmModelKind::kTotalBudget, b}; }
};

std::string to_string(const BsmModel& model);
BsmModel parse_bsm_model(std::string_view text);

struct LinkDefaults {
  int channels = 5;
  double length_km = 0.1;
};

/// Fabric graph. Dense node indices place the QPUs first (0..N-1) followed by
/// the switches (N..N+S-1), so `qpu_node(i) == i` and
/// `switch_node(j) == N + j`.
class Fabric {
 public:
  Fabric(ArchTag tag, ArchParams params, std::size_t n_qpus);

  ArchTag arch() const { return tag_; }
  const ArchParams& params() const { return params_; }

  std::size_t qpu_count() const { return n_qpus_; }
  std::size_t switch_count() const { return switch_layer_.size(); }
  std::size_t node_count() const { return n_qpus_ + switch_layer_.size(); }

  std::size_t qpu_node(std::size_t qpu) const { return qpu; }
  std::size_t switch_node(std::size_t sw) const { return n_qpus_ + sw; }
  bool is_qpu(std::size_t node) const { return node < n_qpus_; }
  bool is_switch(std::size_t node) const { return node >= n_qpus_; }
  std::size_t switch_index(std::size_t node) const { return node - n_qpus_; }

  NodeId node_id(std::size_t node) const;

  std::size_t add_switch(std::optional<int> layer, int radix);
  std::size_t add_link(std::size_t a, std::size_t b, const LinkDefaults& defaults);

  std::span<const Link> links() const { return links_; }
  std::span<const Adjacent> neighbors(std::size_t node) const { return adj_[node]; }
  std::size_t degree(std::size_t node) const { return adj_[node].size(); }

  /// Radix used for the switch's insertion loss.
  int switch_radix(std::size_t sw) const { return switch_radix_[sw]; }
  std::optional<int> switch_layer(std::size_t sw) const { return switch_layer_[sw]; }

  std::size_t bsm(std::size_t sw) const { return bsm_[sw]; }
  std::span<const std::size_t> bsm_counts() const { return bsm_; }
  void set_bsm(std::size_t sw, std::size_t count) { bsm_[sw] = count; }

  /// Per-switch port budget; `kUnbounded` for fabrics allowed to exceed it.
  static constexpr std::size_t kUnbounded = static_cast<std::size_t>(-1);
  std::size_t port_budget() const;

  bool connected() const;

 private:
  ArchTag tag_;
  ArchParams params_;
  std::size_t n_qpus_;
  std::vector<Link> links_;
  std::vector<std::vector<Adjacent>> adj_;
  std::vector<std::optional<int>> switch_layer_;
  std::vector<int> switch_radix_;
  std::vector<std::size_t> bsm_;
};

enum class ClosPolicy : std::uint8_t { kTight, kCompact };
enum class RingPolicy : std::uint8_t { kFull, kHalf, kResidual };

int fattree_radix(std::size_t n_qpus);

Fabric build_fattree(std::size_t n_qpus, const LinkDefaults& links = {});
Fabric build_clos(std::size_t n_qpus, ClosPolicy policy, const LinkDefaults& links = {});
Fabric build_qfly(std::size_t n_qpus, RingPolicy policy, int k_ref,
                  const LinkDefaults& links = {});
Fabric build_bcube(std::size_t n_qpus, int k_ref, const LinkDefaults& links = {});

/// Builds any architecture with the Fat-Tree radix as the shared port budget.
Fabric build_fabric(ArchTag tag, std::size_t n_qpus, const LinkDefaults& links = {});

void allocate_bsms(Fabric& fabric, const BsmModel& model);

struct SummaryRow {
  ArchTag arch = ArchTag::kFatTree;
  std::size_t n_capacity = 0;  // rack capacity T*R for Clos, placed QPUs otherwise
  std::size_t total_switches = 0;
  double qpus_per_rack = 0.0;
  std::size_t ports_per_switch = 0;  // declared ports (m + k_ring for QFly)
  std::size_t max_degree = 0;        // measured max non-BSM switch degree
  std::size_t tor_count = 0;
};

SummaryRow topology_summary(const Fabric& fabric);

// Edge-list text format.
std::string write_fabric_text(const Fabric& fabric);
Fabric read_fabric_text(std::string_view text);
std::string write_fabric_json(const Fabric& fabric);

}  // namespace qdc
