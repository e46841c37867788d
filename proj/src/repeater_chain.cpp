#include "qdc/repeater_chain.h"

#include <cmath>
#include <mutex>
#include <random>
#include <string>

namespace qdc {

std::string_view to_string(SwapProtocol protocol) {
  return protocol == SwapProtocol::kParallel ? "parallel" : "sequential";
}

SwapProtocol parse_protocol(std::string_view name) {
  if (name == "parallel") return SwapProtocol::kParallel;
  if (name == "sequential") return SwapProtocol::kSequential;
  throw std::invalid_argument("unknown swap protocol '" + std::string(name) + "'");
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  // splitmix64 finalizer over a combined word.
  std::uint64_t z = a + 0x9E3779B97F4A7C15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

void validate_chain(const ChainSpec& spec) {
  if (spec.success_prob.empty()) throw std::invalid_argument("chain needs at least one segment");
  for (double p : spec.success_prob) {
    if (!(p > 0.0)) throw UnreachableEntanglementError("segment success probability is zero");
    if (p > 1.0) throw std::invalid_argument("segment success probability exceeds one");
  }
  if (spec.protocol == SwapProtocol::kSequential &&
      spec.success_prob.size() - 1 > spec.cutoff_slots) {
    throw CutoffTooSmallError("cutoff of " + std::to_string(spec.cutoff_slots) +
                              " slots cannot hold pairs across " +
                              std::to_string(spec.success_prob.size()) + " sequential segments");
  }
}

namespace {

using Rng = std::mt19937_64;
__extension__ using U128 = unsigned __int128;

struct TrialKernel {
  const ChainSpec& spec;
  std::uint64_t slot_budget;
  std::vector<double> draw;
  std::vector<std::uint64_t> born;  // kNoCutoff marks an empty memory

  TrialKernel(const ChainSpec& s, std::uint64_t budget)
      : spec(s), slot_budget(budget), draw(s.success_prob.size()), born(s.success_prob.size()) {}

  // Every segment consumes one uniform per slot, whether or not it attempts,
  // so protocols and parameters share random numbers slot by slot.
  void fill(Rng& rng) {
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    for (auto& u : draw) u = uniform(rng);
  }

  bool expired(std::uint64_t t, std::uint64_t b) const { return t - b > spec.cutoff_slots; }

  std::uint64_t run_parallel(Rng& rng) {
    const std::size_t n = born.size();
    std::fill(born.begin(), born.end(), kNoCutoff);
    for (std::uint64_t t = 0; t < slot_budget; ++t) {
      fill(rng);
      bool all_held = true;
      for (std::size_t j = 0; j < n; ++j) {
        if (born[j] != kNoCutoff && expired(t, born[j])) born[j] = kNoCutoff;
        if (born[j] == kNoCutoff && draw[j] < spec.success_prob[j]) born[j] = t;
        all_held = all_held && born[j] != kNoCutoff;
      }
      if (all_held) return t + 1;
    }
    throw UnreachableEntanglementError("repeater chain exceeded its slot budget");
  }

  std::uint64_t run_sequential(Rng& rng) {
    const std::size_t n = born.size();
    std::size_t next = 0;
    std::uint64_t oldest = 0;
    for (std::uint64_t t = 0; t < slot_budget; ++t) {
      fill(rng);
      if (next > 0 && expired(t, oldest)) next = 0;
      if (draw[next] < spec.success_prob[next]) {
        if (next == 0) oldest = t;
        if (++next == n) return t + 1;
      }
    }
    throw UnreachableEntanglementError("repeater chain exceeded its slot budget");
  }

  std::uint64_t run(Rng& rng) {
    return spec.protocol == SwapProtocol::kParallel ? run_parallel(rng) : run_sequential(rng);
  }
};

Rng block_rng(std::uint64_t seed, std::size_t block) { return Rng(mix_seed(seed, block)); }

ChainEstimate finish(U128 sum, U128 sum_sq, std::size_t trials) {
  ChainEstimate est;
  est.trials = trials;
  const double n = static_cast<double>(trials);
  est.mean_slots = static_cast<double>(sum) / n;
  if (trials > 1) {
    const double mean_sq = static_cast<double>(sum_sq) / n;
    const double var = std::max(0.0, (mean_sq - est.mean_slots * est.mean_slots) * n / (n - 1.0));
    est.se_slots = std::sqrt(var / n);
  }
  return est;
}

}  // namespace

ChainEstimate simulate_chain_serial(const ChainSpec& spec, std::size_t trials, std::uint64_t seed,
                                    std::uint64_t slot_budget) {
  validate_chain(spec);
  if (trials == 0) throw std::invalid_argument("trials must be >= 1");
  TrialKernel kernel(spec, slot_budget);
  U128 sum = 0;
  U128 sum_sq = 0;
  Rng rng;
  for (std::size_t i = 0; i < trials; ++i) {
    if (i % kTrialsPerBlock == 0) rng = block_rng(seed, i / kTrialsPerBlock);
    const std::uint64_t slots = kernel.run(rng);
    sum += slots;
    sum_sq += static_cast<U128>(slots) * slots;
  }
  return finish(sum, sum_sq, trials);
}

ChainEstimate simulate_chain(const ChainSpec& spec, std::size_t trials, std::uint64_t seed,
                             std::uint64_t slot_budget) {
  validate_chain(spec);
  if (trials == 0) throw std::invalid_argument("trials must be >= 1");
  const std::size_t blocks = (trials + kTrialsPerBlock - 1) / kTrialsPerBlock;
  std::vector<std::uint64_t> block_sum(blocks, 0);
  std::vector<U128> block_sum_sq(blocks, 0);
  bool failed = false;

#pragma omp parallel for schedule(dynamic) if (blocks > 1)
  for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(blocks); ++b) {
    const auto block = static_cast<std::size_t>(b);
    TrialKernel kernel(spec, slot_budget);
    Rng rng = block_rng(seed, block);
    const std::size_t begin = block * kTrialsPerBlock;
    const std::size_t end = std::min(trials, begin + kTrialsPerBlock);
    try {
      for (std::size_t i = begin; i < end; ++i) {
        const std::uint64_t slots = kernel.run(rng);
        block_sum[block] += slots;
        block_sum_sq[block] += static_cast<U128>(slots) * slots;
      }
    } catch (const UnreachableEntanglementError&) {
#pragma omp atomic write
      failed = true;
    }
  }
  if (failed) throw UnreachableEntanglementError("repeater chain exceeded its slot budget");

  U128 sum = 0;
  U128 sum_sq = 0;
  for (std::size_t b = 0; b < blocks; ++b) {
    sum += block_sum[b];
    sum_sq += block_sum_sq[b];
  }
  return finish(sum, sum_sq, trials);
}

std::uint64_t cutoff_slots(double tau_cut_s, double t_att_s) {
  if (!(t_att_s > 0.0)) throw std::invalid_argument("attempt duration must be positive");
  if (std::isinf(tau_cut_s)) return kNoCutoff;
  // Relative nudge so exact multiples are not lost to rounding.
  const double ratio = tau_cut_s / t_att_s * (1.0 + 1e-12);
  if (ratio >= 1.8e19) return kNoCutoff;
  return static_cast<std::uint64_t>(std::floor(ratio));
}

ChainSpec chain_spec(const PathDescriptor& path, SwapProtocol protocol, const PhysParams& p) {
  if (!path.server_centric()) throw std::invalid_argument("repeater chain needs at least one repeater");
  ChainSpec spec;
  spec.protocol = protocol;
  for (std::size_t i = 0; i < path.segments.size(); ++i) {
    spec.success_prob.push_back(transmittance(segment_loss(path, i, p)));
  }
  const double t_att = attempt_duration(path, p);
  if (p.tau_cut_s < t_att) {
    throw CutoffTooSmallError("cutoff is shorter than one attempt; no pair can be held");
  }
  spec.cutoff_slots = cutoff_slots(p.tau_cut_s, t_att);
  return spec;
}

double repeater_chain_latency(const PathDescriptor& path, SwapProtocol protocol, const PhysParams& p,
                              std::size_t trials, std::uint64_t seed) {
  const ChainSpec spec = chain_spec(path, protocol, p);
  return simulate_chain(spec, trials, seed).mean_slots * attempt_duration(path, p);
}

ChainEstimate ChainLatencyCache::estimate(const ChainSpec& spec, std::size_t trials, std::uint64_t seed) {
  Key key{spec.success_prob, spec.protocol, spec.cutoff_slots, trials, seed};
  {
    std::shared_lock lock(mutex_);
    if (auto it = entries_.find(key); it != entries_.end()) {
      hits_.fetch_add(1, std::memory_order_relaxed);
      return it->second;
    }
  }
  // Estimates are pure functions of the key, so a racing duplicate is harmless.
  const ChainEstimate est = simulate_chain(spec, trials, seed);
  std::unique_lock lock(mutex_);
  entries_.emplace(std::move(key), est);
  return est;
}

std::size_t ChainLatencyCache::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

std::size_t ChainLatencyCache::hits() const { return hits_.load(std::memory_order_relaxed); }

}  // namespace qdc
