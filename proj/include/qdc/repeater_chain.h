#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <shared_mutex>
#include <string_view>
#include <tuple>
#include <vector>

#include "qdc/photonics.h"

namespace qdc {

enum class SwapProtocol : std::uint8_t { kSequential, kParallel };

std::string_view to_string(SwapProtocol protocol);
SwapProtocol parse_protocol(std::string_view name);

inline constexpr std::uint64_t kNoCutoff = std::numeric_limits<std::uint64_t>::max();

/// Slotted repeater chain. Slot length is the segment attempt duration; a
/// pair created in slot b can take part in a swap completing in slot t only
/// if t - b <= cutoff_slots.
struct ChainSpec {
  std::vector<double> success_prob;  // per segment, per slot
  SwapProtocol protocol = SwapProtocol::kParallel;
  std::uint64_t cutoff_slots = kNoCutoff;
};

struct ChainEstimate {
  double mean_slots = 0.0;
  double se_slots = 0.0;
  std::size_t trials = 0;
};

inline constexpr std::size_t kTrialsPerBlock = 256;
inline constexpr std::uint64_t kDefaultSlotBudget = 100'000'000;

/// Rejects chains that can never complete.
void validate_chain(const ChainSpec& spec);

/// Reference kernel: one thread, one trial after another.
ChainEstimate simulate_chain_serial(const ChainSpec& spec, std::size_t trials, std::uint64_t seed,
                                    std::uint64_t slot_budget = kDefaultSlotBudget);

/// OpenMP kernel over trial blocks. Bit-identical to the serial kernel for
/// any thread count: every block of kTrialsPerBlock trials owns its own
/// generator seeded from (seed, block index), and the reductions are exact.
ChainEstimate simulate_chain(const ChainSpec& spec, std::size_t trials, std::uint64_t seed,
                             std::uint64_t slot_budget = kDefaultSlotBudget);

/// floor(tau_cut / t_att), or kNoCutoff for an infinite cutoff.
std::uint64_t cutoff_slots(double tau_cut_s, double t_att_s);

ChainSpec chain_spec(const PathDescriptor& path, SwapProtocol protocol, const PhysParams& p);

/// Monte Carlo estimate of E[T_pair] for a server-centric path, in seconds.
double repeater_chain_latency(const PathDescriptor& path, SwapProtocol protocol, const PhysParams& p,
                              std::size_t trials, std::uint64_t seed);

/// Memoized chain estimates, safe for concurrent use.
class ChainLatencyCache {
 public:
  ChainEstimate estimate(const ChainSpec& spec, std::size_t trials, std::uint64_t seed);
  std::size_t size() const;
  std::size_t hits() const;

 private:
  using Key = std::tuple<std::vector<double>, SwapProtocol, std::uint64_t, std::size_t, std::uint64_t>;
  mutable std::shared_mutex mutex_;
  std::map<Key, ChainEstimate> entries_;
  std::atomic<std::size_t> hits_{0};
};

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

}  // namespace qdc
