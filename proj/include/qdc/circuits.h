#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qdc {

enum class GateKind : std::uint8_t { kSingle, kTwo, kT, kTdg };

std::string_view to_string(GateKind kind);

struct Gate {
  std::size_t id = 0;
  GateKind kind = GateKind::kSingle;
  std::uint32_t q0 = 0;
  std::optional<std::uint32_t> q1;

  bool two_qubit() const { return q1.has_value(); }
};

/// Gate dependency DAG: g_i -> g_j when they share a qubit and g_i is the
/// previous gate on that qubit.
class GateDag {
 public:
  GateDag() = default;
  GateDag(std::size_t width, std::vector<Gate> gates);

  std::size_t width() const { return width_; }
  std::size_t size() const { return gates_.size(); }
  const Gate& gate(std::size_t i) const { return gates_[i]; }
  std::span<const Gate> gates() const { return gates_; }
  std::span<const std::size_t> preds(std::size_t i) const { return preds_[i]; }
  std::span<const std::size_t> succs(std::size_t i) const { return succs_[i]; }
  std::size_t edge_count() const { return edge_count_; }
  std::size_t two_qubit_count() const;

 private:
  std::size_t width_ = 0;
  std::vector<Gate> gates_;
  std::vector<std::vector<std::size_t>> preds_;
  std::vector<std::vector<std::size_t>> succs_;
  std::size_t edge_count_ = 0;
};

enum class Workload : std::uint8_t { kNearestNeighbor, kCliffordT, kLongRange };

std::string_view to_string(Workload w);
Workload parse_workload(std::string_view name);

struct CliffordTOptions {
  double singles_per_two = 2.0;  // mean single-qubit gates per two-qubit gate
  double t_fraction = 0.05;      // share of single-qubit slots that are T or T-dagger
};

GateDag gen_workload(Workload family, std::size_t width, std::size_t two_q_gates, std::uint64_t seed,
                     const CliffordTOptions& clifford = {});

/// Two-qubit gate count for an N-QPU system: 200 at N=8 rising by 100 per
/// doubling to 600 at N=128, rounded to the nearest 50 (minimum 50).
std::size_t scale_gate_count(std::size_t n_qpus);

struct Mapping {
  std::vector<std::size_t> qpu_of;  // indexed by qubit
  std::vector<std::size_t> load;    // indexed by QPU
  std::size_t capacity = 0;

  std::size_t parts() const { return load.size(); }
};

Mapping contiguous_mapping(std::size_t width, std::size_t num_parts, std::size_t capacity);

/// Weight of two-qubit gates whose operands land on different parts.
std::uint64_t cut_weight(const GateDag& dag, const Mapping& mapping);

Mapping kl_partition(const GateDag& dag, std::size_t num_parts, std::size_t capacity, std::uint64_t seed,
                     int max_passes = 10);

/// Ready gates: not completed and every predecessor completed.
std::vector<std::size_t> frontier(const GateDag& dag, std::span<const char> completed);

std::string write_circuit_text(const GateDag& dag);
GateDag read_circuit_text(std::string_view text);
std::string write_mapping_text(const Mapping& mapping);

}  // namespace qdc
