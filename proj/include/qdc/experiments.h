#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qdc/circuits.h"
#include "qdc/photonics.h"
#include "qdc/repeater_chain.h"
#include "qdc/scheduler.h"
#include "qdc/topology.h"

namespace qdc {

struct SystemParams {
  std::size_t comm_qubits = 5;
  int channels = 5;
  std::size_t capacity = 16;  // data qubits per QPU
  double link_km = 0.1;
  std::size_t max_hops = 8;
  std::size_t mc_trials = 20'000;
  SwapProtocol protocol = SwapProtocol::kParallel;
};

struct ExperimentSpec {
  std::vector<ArchTag> archs{all_archs().begin(), all_archs().end()};
  std::vector<std::size_t> scales{8, 16, 32, 64, 128};
  std::vector<Workload> workloads{Workload::kNearestNeighbor, Workload::kCliffordT, Workload::kLongRange};
  BsmModel bsm = BsmModel::per_switch(2);
  std::vector<double> swept_values;  // ignored by the scale sweep
  std::size_t replicas = 50;
  std::uint64_t base_seed = 1;
  std::optional<std::size_t> two_q_gates;  // default: scale_gate_count(N)
  PhysParams phys;
  SystemParams system;

  void validate() const;
};

struct ExecOptions {
  bool parallel = true;
  int jobs = 0;  // 0: OpenMP default
};

/// One replica of one grid point.
struct ReplicaRow {
  ArchTag arch = ArchTag::kFatTree;
  std::size_t n = 0;
  Workload workload = Workload::kLongRange;
  std::string bsm_model;
  std::string swept_name;
  double swept_value = 0.0;
  std::uint64_t seed = 0;
  double t_dist_s = 0.0;
  double t_mono_s = 0.0;
  double rho_lat = 0.0;
  std::size_t deferrals = 0;
  std::array<std::size_t, 6> hops{};  // 2, 3, 4, 5, 6, 7+
};

struct AggregateRow {
  ArchTag arch = ArchTag::kFatTree;
  std::size_t n = 0;
  Workload workload = Workload::kLongRange;
  std::string bsm_model;
  std::string swept_name;
  double swept_value = 0.0;
  double mean_t_dist_s = 0.0;
  double mean_t_mono_s = 0.0;
  double mean_deferrals = 0.0;
  std::array<double, 6> mean_hops{};
  double mean_rho_lat = 0.0;
  double se_rho_lat = 0.0;
  std::size_t replicas = 0;
};

struct RatioRow {
  ArchTag arch = ArchTag::kFatTree;
  std::size_t n = 0;
  Workload workload = Workload::kLongRange;
  std::string bsm_model;
  double tau_cut_us = 0.0;
  double mean_t_dist_s = 0.0;
  double bcube_mean_t_dist_s = 0.0;
  double ratio_to_bcube = 0.0;
};

struct SweepResult {
  std::string kind;
  std::vector<ReplicaRow> replicas;
  std::vector<AggregateRow> aggregates;
  std::vector<RatioRow> ratios;  // cutoff sweep only
};

std::array<std::size_t, 6> hop_columns(const std::map<std::size_t, std::size_t>& histogram);

/// Mean, standard error and hop means over rows that share a grid point.
/// Rows are folded in seed order, so the result ignores input order.
std::vector<AggregateRow> aggregate(std::vector<ReplicaRow> rows);

SweepResult sweep_scale(const ExperimentSpec& spec, const ExecOptions& exec = {});
/// Sweeps the 2x2 element loss over `spec.swept_values` (dB) on the long-range workload.
SweepResult sweep_switch_loss(const ExperimentSpec& spec, const ExecOptions& exec = {});
/// Sweeps the cutoff over `spec.swept_values` (microseconds); BCube must be present.
SweepResult sweep_cutoff(const ExperimentSpec& spec, const ExecOptions& exec = {});

struct SanityRow {
  double rho_ell = 0.0;
  std::string protocol;               // switch, sequential, parallel
  std::optional<double> tau_cut_us;   // absent for the switch-centric curve
  double rho_epr = 0.0;
};

struct SanitySpec {
  std::vector<double> rho_ell = default_grid();  // 0, 0.05, ..., 1
  std::vector<double> tau_cut_us{50.0, 200.0};
  std::size_t hops = 4;
  double link_km = 0.1;
  int radix = 2;
  std::size_t mc_trials = 20'000;
  std::uint64_t seed = 1;
  PhysParams phys = sanity_phys();

  static PhysParams sanity_phys();
  static std::vector<double> default_grid();
};

std::vector<SanityRow> sanity_curves(const SanitySpec& spec);

std::string replica_csv(const std::vector<ReplicaRow>& rows);
std::string aggregate_csv(const std::vector<AggregateRow>& rows);
std::string ratio_csv(const std::vector<RatioRow>& rows);
std::string sanity_csv(const std::vector<SanityRow>& rows);
std::string sweep_json(const SweepResult& result);
std::string sanity_json(const std::vector<SanityRow>& rows);

extern const char* const kReplicaHeader;
extern const char* const kAggregateHeader;
extern const char* const kRatioHeader;
extern const char* const kSanityHeader;

}  // namespace qdc
