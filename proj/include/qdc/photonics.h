#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace qdc {

/// Loss in dB, times in seconds, lengths in km.
struct PhysParams {
  double alpha_db_per_km = 0.1;
  double l2x2_db = 0.3;
  double l_bsm_db = 0.0;
  double l_mem_db = 3.0;
  double t_src_s = 1e-6;  // 1 / EPR source rate
  double t_reset_s = 10e-6;
  double v_fiber_km_per_s = 2e5;
  double t_local_s = 10e-6;
  double tau_cut_s = 200e-6;
  double reconfig_delay_s = 10e-6;

  void validate() const;
};

class UnreachableEntanglementError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CutoffTooSmallError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A physical route between two endpoint QPUs.
///
/// Switch-centric paths carry no segments and `repeaters == 0`. Server-centric
/// paths carry one two-hop sub-descriptor per QPU-switch-QPU segment, with
/// `segments.size() == repeaters + 1`.
struct PathDescriptor {
  std::size_t hops = 0;
  double fiber_km = 0.0;
  std::vector<int> switch_radices;  // one entry per traversed switch
  std::size_t repeaters = 0;
  std::vector<PathDescriptor> segments;

  bool server_centric() const { return repeaters > 0; }
};

/// Uniform-length switch-centric path: `hops` links, `hops - 1` switches of radix `k`.
PathDescriptor switch_centric_path(std::size_t hops, double link_km, int k);

/// Uniform-length server-centric chain of `segments` QPU-switch-QPU segments.
PathDescriptor server_centric_path(std::size_t segments, double link_km, int k);

double switch_insertion_loss(int k, double l2x2_db);

/// Total loss of the whole path (chain total for server-centric paths).
double path_loss(const PathDescriptor& path, const PhysParams& p);

/// Loss of segment `index` of a server-centric path, including half of the
/// memory loss for each endpoint that is a repeater.
double segment_loss(const PathDescriptor& path, std::size_t index, const PhysParams& p);

double transmittance(double loss_db);

double attempt_duration(const PathDescriptor& path, const PhysParams& p);

double expected_epr_latency_switch(const PathDescriptor& path, const PhysParams& p);

double epr_latency_ratio(double e_pair_s, const PhysParams& p);

double loss_ratio(int k, const PhysParams& p);

}  // namespace qdc
