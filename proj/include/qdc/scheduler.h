#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "qdc/circuits.h"
#include "qdc/photonics.h"
#include "qdc/repeater_chain.h"
#include "qdc/topology.h"

namespace qdc {

class DeadlockError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Live occupancy of channels, communication qubits and BSMs within one layer.
class ResourceLedger {
 public:
  ResourceLedger(const Fabric& fabric, std::size_t comm_qubits_per_qpu);

  std::size_t free_channels(std::size_t edge) const { return channel_cap_[edge] - channels_[edge]; }
  std::size_t free_comm(std::size_t qpu) const { return comm_cap_ - comm_[qpu]; }
  std::size_t free_bsm(std::size_t sw) const { return bsm_cap_[sw] - bsm_[sw]; }

  std::size_t channels_used(std::size_t edge) const { return channels_[edge]; }
  std::size_t comm_used(std::size_t qpu) const { return comm_[qpu]; }
  std::size_t bsm_used(std::size_t sw) const { return bsm_[sw]; }
  std::size_t comm_capacity() const { return comm_cap_; }

  void take_channel(std::size_t edge);
  void take_comm(std::size_t qpu, std::size_t count);
  void take_bsm(std::size_t sw);

  void release_all();
  bool empty() const;
  bool within_capacity() const;

 private:
  std::vector<std::size_t> channel_cap_;
  std::vector<std::size_t> channels_;
  std::size_t comm_cap_;
  std::vector<std::size_t> comm_;
  std::vector<std::size_t> bsm_cap_;
  std::vector<std::size_t> bsm_;
};

struct PathReservation {
  std::vector<std::size_t> nodes;  // dense fabric node ids, source QPU first
  std::vector<std::size_t> edges;
  std::vector<std::size_t> bsm_switches;
  std::vector<std::pair<std::size_t, std::size_t>> comm;  // (qpu, qubits)
  PathDescriptor descriptor;
  double expected_latency_s = 0.0;

  std::size_t hops() const { return edges.size(); }
};

/// Expected EPR latency for a path: closed form for single-BSM paths, cached
/// Monte Carlo for repeater chains. The Monte Carlo seed depends only on the
/// chain length and protocol, so estimates are common-random-number coupled
/// across loss and cutoff settings and do not depend on evaluation order.
class EprLatencyModel {
 public:
  /// Uses a private cache when `cache` is null.
  EprLatencyModel(PhysParams params, SwapProtocol protocol, std::size_t trials, std::uint64_t mc_seed,
                  ChainLatencyCache* cache = nullptr);

  double expected_latency(const PathDescriptor& path) const;
  const PhysParams& params() const { return params_; }

 private:
  PhysParams params_;
  SwapProtocol protocol_;
  std::size_t trials_;
  std::uint64_t mc_seed_;
  std::unique_ptr<ChainLatencyCache> own_cache_;
  ChainLatencyCache* cache_;
};

/// Shortest feasible path search over a fabric, honoring a ledger.
class PathFinder {
 public:
  PathFinder(const Fabric& fabric, std::size_t max_hops = 8);

  /// Candidates are simple paths in increasing hop count and, within a hop
  /// count, lexicographic node order from the source. Returns the first
  /// feasible one without reserving anything. Pairs whose shortest route on
  /// an idle fabric exceeds `max_hops` are searched up to that route length.
  std::optional<PathReservation> find(std::size_t src_qpu, std::size_t dst_qpu,
                                      const ResourceLedger& ledger) const;

  const Fabric& fabric() const { return fabric_; }
  std::size_t hop_cap(std::size_t src_qpu, std::size_t dst_qpu) const;

 private:
  struct Search;
  Search make_search(std::size_t src_qpu, std::size_t dst_qpu, const ResourceLedger& ledger) const;

  const Fabric& fabric_;
  std::size_t max_hops_;
  std::vector<std::vector<Adjacent>> sorted_adj_;
  std::vector<std::size_t> idle_hops_;  // row-major [src][dst] shortest feasible route on an idle fabric
};

void reserve(ResourceLedger& ledger, const PathReservation& r);

/// Find and reserve a path for a non-local gate.
std::optional<PathReservation> find_path(const Gate& gate, const PathFinder& finder, const Mapping& mapping,
                                         ResourceLedger& ledger, const EprLatencyModel& model);

struct RunRecord {
  double t_dist_s = 0.0;
  double t_mono_s = 0.0;
  double rho_lat = 0.0;
  std::map<std::size_t, std::size_t> hop_histogram;
  std::size_t deferrals = 0;
  std::size_t nonlocal_gates = 0;
  std::size_t gates = 0;
  std::vector<double> layer_latencies_s;
};

std::string to_json(const RunRecord& record);

struct SchedulerOptions {
  SwapProtocol protocol = SwapProtocol::kParallel;
  std::size_t comm_qubits = 5;
  std::size_t max_hops = 8;
  std::size_t mc_trials = 20'000;
  std::uint64_t mc_seed = 0x51C0FFEEULL;
  ChainLatencyCache* cache = nullptr;  // a private cache is used when null
  std::function<void(const ResourceLedger&)> audit;
  std::function<void(std::size_t gate, std::size_t layer)> on_commit;
};

struct LayerResult {
  std::vector<std::size_t> committed;
  std::size_t deferred = 0;
  double latency_s = 0.0;
};

/// One scheduling step over a frontier. Local gates commit; non-local gates
/// are tried in a seeded random order and either reserve a path or defer.
LayerResult schedule_layer(std::span<const std::size_t> frontier_gates, const GateDag& dag,
                           const Mapping& mapping, const PathFinder& finder, ResourceLedger& ledger,
                           const EprLatencyModel& model, std::mt19937_64& rng,
                           std::map<std::size_t, std::size_t>& hop_histogram,
                           const SchedulerOptions& options);

RunRecord run_distributed(const GateDag& dag, const Fabric& fabric, const Mapping& mapping,
                          const PhysParams& p, std::uint64_t seed, const SchedulerOptions& options = {});

double run_monolithic(const GateDag& dag, const PhysParams& p);

}  // namespace qdc
