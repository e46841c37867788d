#include "qdc/photonics.h"

#include <cmath>
#include <numeric>
#include <string>

namespace qdc {

void PhysParams::validate() const {
  const double values[] = {alpha_db_per_km, l2x2_db,   l_bsm_db,   l_mem_db,        t_src_s,
                           t_reset_s,       t_local_s, tau_cut_s, reconfig_delay_s};
  for (double v : values) {
    if (!(v >= 0.0)) throw std::invalid_argument("physical parameters must be non-negative");
  }
  if (!(v_fiber_km_per_s > 0.0)) throw std::invalid_argument("fiber light speed must be positive");
  if (!(t_src_s > 0.0)) throw std::invalid_argument("source repetition time must be positive");
}

PathDescriptor switch_centric_path(std::size_t hops, double link_km, int k) {
  if (hops < 2) throw std::invalid_argument("a remote path has at least two hops");
  PathDescriptor p;
  p.hops = hops;
  p.fiber_km = static_cast<double>(hops) * link_km;
  p.switch_radices.assign(hops - 1, k);
  return p;
}

PathDescriptor server_centric_path(std::size_t segments, double link_km, int k) {
  if (segments < 1) throw std::invalid_argument("a chain has at least one segment");
  PathDescriptor p;
  p.hops = 2 * segments;
  p.fiber_km = static_cast<double>(p.hops) * link_km;
  p.switch_radices.assign(segments, k);
  p.repeaters = segments - 1;
  if (segments > 1) p.segments.assign(segments, switch_centric_path(2, link_km, k));
  return p;
}

double switch_insertion_loss(int k, double l2x2_db) {
  if (k < 2) throw std::invalid_argument("switch radix must be >= 2");
  int stages = 0;
  while ((1 << stages) < k) ++stages;  // ceil(log2 k)
  return static_cast<double>(2 * stages - 1) * l2x2_db;
}

namespace {

double single_link_loss(const PathDescriptor& path, const PhysParams& p) {
  double sw = 0.0;
  for (int k : path.switch_radices) sw += switch_insertion_loss(k, p.l2x2_db);
  return p.alpha_db_per_km * path.fiber_km + sw + p.l_bsm_db;
}

}  // namespace

double segment_loss(const PathDescriptor& path, std::size_t index, const PhysParams& p) {
  if (!path.server_centric()) {
    if (index != 0) throw std::out_of_range("switch-centric path has one segment");
    return single_link_loss(path, p);
  }
  if (index >= path.segments.size()) throw std::out_of_range("segment index out of range");
  const std::size_t repeater_ends = (index > 0 ? 1 : 0) + (index + 1 < path.segments.size() ? 1 : 0);
  return single_link_loss(path.segments[index], p) + 0.5 * p.l_mem_db * static_cast<double>(repeater_ends);
}

double path_loss(const PathDescriptor& path, const PhysParams& p) {
  if (!path.server_centric()) return single_link_loss(path, p);
  double total = 0.0;
  for (std::size_t i = 0; i < path.segments.size(); ++i) total += segment_loss(path, i, p);
  return total;
}

double transmittance(double loss_db) {
  if (loss_db < 0.0) throw std::invalid_argument("loss must be non-negative");
  return std::pow(10.0, -loss_db / 10.0);
}

double attempt_duration(const PathDescriptor& path, const PhysParams& p) {
  if (path.server_centric()) {
    // Slot length is set by the slowest segment.
    double slot = 0.0;
    for (const auto& seg : path.segments) slot = std::max(slot, attempt_duration(seg, p));
    return slot;
  }
  return p.t_src_s + 2.0 * path.fiber_km / p.v_fiber_km_per_s + p.t_reset_s;
}

double expected_epr_latency_switch(const PathDescriptor& path, const PhysParams& p) {
  if (path.server_centric()) {
    throw std::invalid_argument("closed-form EPR latency applies to switch-centric paths only");
  }
  const double t_chan = transmittance(path_loss(path, p));
  if (t_chan <= 0.0) throw UnreachableEntanglementError("path transmittance underflows to zero");
  return attempt_duration(path, p) / t_chan;
}

double epr_latency_ratio(double e_pair_s, const PhysParams& p) {
  if (!(p.t_local_s > 0.0)) throw std::invalid_argument("local gate time must be positive");
  return e_pair_s / p.t_local_s;
}

double loss_ratio(int k, const PhysParams& p) {
  if (!(p.l_mem_db > 0.0)) throw std::invalid_argument("memory loss must be positive for the loss ratio");
  return switch_insertion_loss(k, p.l2x2_db) / p.l_mem_db;
}

}  // namespace qdc
