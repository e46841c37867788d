#include "qdc/experiments.h"

#include <algorithm>
#include <cmath>
#include <exception>
#include <sstream>
#include <tuple>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "internal/text.h"
#include "json.hpp"

namespace qdc {

using internal::format_double;

const char* const kReplicaHeader =
    "arch,N,workload,bsm_model,swept_name,swept_value,seed,t_dist_s,t_mono_s,rho_lat,deferrals,"
    "hops2,hops3,hops4,hops5,hops6,hops7plus";
const char* const kAggregateHeader =
    "arch,N,workload,bsm_model,swept_name,swept_value,t_dist_s,t_mono_s,deferrals,"
    "hops2,hops3,hops4,hops5,hops6,hops7plus,mean_rho_lat,se_rho_lat,replicas";
const char* const kRatioHeader =
    "arch,N,workload,bsm_model,tau_cut_us,mean_t_dist_s,bcube_mean_t_dist_s,ratio_to_bcube";
const char* const kSanityHeader = "rho_ell,protocol,tau_cut_us,rho_epr";

void ExperimentSpec::validate() const {
  if (archs.empty()) throw std::invalid_argument("at least one architecture is required");
  if (scales.empty()) throw std::invalid_argument("at least one scale is required");
  if (workloads.empty()) throw std::invalid_argument("at least one workload is required");
  if (replicas < 1) throw std::invalid_argument("replicas must be >= 1");
  if (system.capacity == 0) throw std::invalid_argument("QPU capacity must be >= 1");
  if (system.comm_qubits == 0) throw std::invalid_argument("communication qubits must be >= 1");
  if (system.channels < 1) throw std::invalid_argument("channels per link must be >= 1");
  if (!(system.link_km >= 0.0)) throw std::invalid_argument("link length must be non-negative");
  if (system.mc_trials == 0) throw std::invalid_argument("Monte Carlo trials must be >= 1");
  for (std::size_t n : scales) {
    if (n < 2) throw std::invalid_argument("scales must be >= 2 QPUs");
  }
  phys.validate();
}

std::array<std::size_t, 6> hop_columns(const std::map<std::size_t, std::size_t>& histogram) {
  std::array<std::size_t, 6> cols{};
  for (const auto& [hops, count] : histogram) {
    if (hops < 2) throw std::logic_error("remote path shorter than two hops");
    cols[std::min<std::size_t>(hops, 7) - 2] += count;
  }
  return cols;
}

namespace {

struct GridPoint {
  ArchTag arch;
  std::size_t n;
  Workload workload;
  double swept;
  PhysParams phys;
};

struct Instance {
  GateDag dag;
  Mapping mapping;
};

// Independent streams derived from one replica seed.
constexpr std::uint64_t kCircuitStream = 0;
constexpr std::uint64_t kPartitionStream = 1;
constexpr std::uint64_t kScheduleStream = 2;

template <typename Fn>
void run_indexed(std::size_t count, const ExecOptions& exec, Fn&& fn) {
  std::vector<std::exception_ptr> errors(count);
#ifdef _OPENMP
  const int threads = exec.jobs > 0 ? exec.jobs : omp_get_max_threads();
#endif
#pragma omp parallel for schedule(dynamic) if (exec.parallel && count > 1) num_threads(threads)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(count); ++i) {
    try {
      fn(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

SweepResult run_grid(const ExperimentSpec& spec, const std::string& kind, const std::string& swept_name,
                     const std::vector<GridPoint>& points, const ExecOptions& exec) {
  const LinkDefaults links{spec.system.channels, spec.system.link_km};
  std::map<std::pair<ArchTag, std::size_t>, Fabric> fabrics;
  for (const auto& pt : points) {
    const auto key = std::pair{pt.arch, pt.n};
    if (fabrics.contains(key)) continue;
    Fabric f = build_fabric(pt.arch, pt.n, links);
    allocate_bsms(f, spec.bsm);
    fabrics.emplace(key, std::move(f));
  }

  // Circuits and partitions depend only on (N, workload, seed), so every
  // architecture and swept value sees the same instances.
  std::vector<std::pair<std::size_t, Workload>> families;
  for (const auto& pt : points) {
    const auto fam = std::pair{pt.n, pt.workload};
    if (std::find(families.begin(), families.end(), fam) == families.end()) families.push_back(fam);
  }
  const std::size_t r = spec.replicas;
  std::vector<Instance> instances(families.size() * r);
  run_indexed(instances.size(), exec, [&](std::size_t i) {
    const auto [n, workload] = families[i / r];
    const std::uint64_t seed = spec.base_seed + i % r;
    const std::size_t gates = spec.two_q_gates.value_or(scale_gate_count(n));
    GateDag dag = gen_workload(workload, spec.system.capacity * n, gates, mix_seed(seed, kCircuitStream));
    Mapping mapping = kl_partition(dag, n, spec.system.capacity, mix_seed(seed, kPartitionStream));
    instances[i] = Instance{std::move(dag), std::move(mapping)};
  });
  const auto instance_of = [&](const GridPoint& pt, std::size_t replica) -> const Instance& {
    const auto it = std::find(families.begin(), families.end(), std::pair{pt.n, pt.workload});
    return instances[static_cast<std::size_t>(it - families.begin()) * r + replica];
  };

  ChainLatencyCache cache;
  SchedulerOptions options;
  options.protocol = spec.system.protocol;
  options.comm_qubits = spec.system.comm_qubits;
  options.max_hops = spec.system.max_hops;
  options.mc_trials = spec.system.mc_trials;
  options.cache = &cache;
  const std::string bsm = to_string(spec.bsm);

  SweepResult result;
  result.kind = kind;
  result.replicas.resize(points.size() * r);
  run_indexed(result.replicas.size(), exec, [&](std::size_t i) {
    const GridPoint& pt = points[i / r];
    const std::size_t replica = i % r;
    const std::uint64_t seed = spec.base_seed + replica;
    const Instance& inst = instance_of(pt, replica);
    const RunRecord rec = run_distributed(inst.dag, fabrics.at({pt.arch, pt.n}), inst.mapping, pt.phys,
                                          mix_seed(seed, kScheduleStream), options);
    ReplicaRow& row = result.replicas[i];
    row.arch = pt.arch;
    row.n = pt.n;
    row.workload = pt.workload;
    row.bsm_model = bsm;
    row.swept_name = swept_name;
    row.swept_value = pt.swept;
    row.seed = seed;
    row.t_dist_s = rec.t_dist_s;
    row.t_mono_s = rec.t_mono_s;
    row.rho_lat = rec.rho_lat;
    row.deferrals = rec.deferrals;
    row.hops = hop_columns(rec.hop_histogram);
  });
  result.aggregates = aggregate(result.replicas);
  return result;
}

}  // namespace

std::vector<AggregateRow> aggregate(std::vector<ReplicaRow> rows) {
  const auto key = [](const ReplicaRow& x) {
    return std::tuple{x.arch, x.n, x.workload, x.bsm_model, x.swept_name, x.swept_value};
  };
  std::sort(rows.begin(), rows.end(), [&](const ReplicaRow& a, const ReplicaRow& b) {
    return std::tuple_cat(key(a), std::tuple{a.seed}) < std::tuple_cat(key(b), std::tuple{b.seed});
  });
  std::vector<AggregateRow> out;
  for (std::size_t begin = 0; begin < rows.size();) {
    std::size_t end = begin;
    while (end < rows.size() && key(rows[end]) == key(rows[begin])) ++end;
    const auto count = static_cast<double>(end - begin);
    AggregateRow a;
    a.arch = rows[begin].arch;
    a.n = rows[begin].n;
    a.workload = rows[begin].workload;
    a.bsm_model = rows[begin].bsm_model;
    a.swept_name = rows[begin].swept_name;
    a.swept_value = rows[begin].swept_value;
    a.replicas = end - begin;
    for (std::size_t i = begin; i < end; ++i) {
      a.mean_t_dist_s += rows[i].t_dist_s;
      a.mean_t_mono_s += rows[i].t_mono_s;
      a.mean_deferrals += static_cast<double>(rows[i].deferrals);
      a.mean_rho_lat += rows[i].rho_lat;
      for (std::size_t h = 0; h < a.mean_hops.size(); ++h) a.mean_hops[h] += static_cast<double>(rows[i].hops[h]);
    }
    a.mean_t_dist_s /= count;
    a.mean_t_mono_s /= count;
    a.mean_deferrals /= count;
    a.mean_rho_lat /= count;
    for (double& h : a.mean_hops) h /= count;
    if (a.replicas > 1) {
      double ss = 0.0;
      for (std::size_t i = begin; i < end; ++i) ss += (rows[i].rho_lat - a.mean_rho_lat) * (rows[i].rho_lat - a.mean_rho_lat);
      a.se_rho_lat = std::sqrt(ss / (count - 1.0) / count);
    }
    out.push_back(std::move(a));
    begin = end;
  }
  return out;
}

SweepResult sweep_scale(const ExperimentSpec& spec, const ExecOptions& exec) {
  spec.validate();
  std::vector<GridPoint> points;
  for (ArchTag arch : spec.archs) {
    for (std::size_t n : spec.scales) {
      for (Workload w : spec.workloads) points.push_back({arch, n, w, static_cast<double>(n), spec.phys});
    }
  }
  return run_grid(spec, "scale", "N", points, exec);
}

SweepResult sweep_switch_loss(const ExperimentSpec& spec, const ExecOptions& exec) {
  spec.validate();
  if (spec.swept_values.empty()) throw std::invalid_argument("switch-loss sweep needs loss values");
  std::vector<GridPoint> points;
  for (ArchTag arch : spec.archs) {
    for (std::size_t n : spec.scales) {
      for (double l : spec.swept_values) {
        PhysParams p = spec.phys;
        p.l2x2_db = l;
        p.validate();
        points.push_back({arch, n, Workload::kLongRange, l, p});
      }
    }
  }
  return run_grid(spec, "switch-loss", "l2x2_db", points, exec);
}

SweepResult sweep_cutoff(const ExperimentSpec& spec, const ExecOptions& exec) {
  spec.validate();
  if (spec.swept_values.empty()) throw std::invalid_argument("cutoff sweep needs cutoff values");
  if (std::find(spec.archs.begin(), spec.archs.end(), ArchTag::kBCube) == spec.archs.end()) {
    throw std::invalid_argument("cutoff sweep needs bcube among the architectures");
  }
  if (spec.system.protocol != SwapProtocol::kParallel) {
    throw std::invalid_argument("cutoff sweep runs with the parallel swap protocol");
  }
  std::vector<GridPoint> points;
  for (ArchTag arch : spec.archs) {
    for (std::size_t n : spec.scales) {
      for (Workload w : spec.workloads) {
        for (double tau : spec.swept_values) {
          PhysParams p = spec.phys;
          p.tau_cut_s = tau * 1e-6;
          p.validate();
          points.push_back({arch, n, w, tau, p});
        }
      }
    }
  }
  SweepResult result = run_grid(spec, "cutoff", "tau_cut_us", points, exec);

  for (const auto& a : result.aggregates) {
    if (a.arch == ArchTag::kBCube) continue;
    const auto ref = std::find_if(result.aggregates.begin(), result.aggregates.end(), [&](const AggregateRow& b) {
      return b.arch == ArchTag::kBCube && b.n == a.n && b.workload == a.workload && b.swept_value == a.swept_value;
    });
    RatioRow row;
    row.arch = a.arch;
    row.n = a.n;
    row.workload = a.workload;
    row.bsm_model = a.bsm_model;
    row.tau_cut_us = a.swept_value;
    row.mean_t_dist_s = a.mean_t_dist_s;
    row.bcube_mean_t_dist_s = ref->mean_t_dist_s;
    row.ratio_to_bcube = a.mean_t_dist_s / ref->mean_t_dist_s;
    result.ratios.push_back(std::move(row));
  }
  return result;
}

PhysParams SanitySpec::sanity_phys() {
  PhysParams p;
  p.alpha_db_per_km = 0.2;
  p.l_mem_db = 3.0;
  p.reconfig_delay_s = 0.0;
  return p;
}

std::vector<double> SanitySpec::default_grid() {
  std::vector<double> grid;
  for (int i = 0; i <= 20; ++i) grid.push_back(i / 20.0);
  return grid;
}

std::vector<SanityRow> sanity_curves(const SanitySpec& spec) {
  if (spec.hops < 4 || spec.hops % 2 != 0) throw std::invalid_argument("sanity path needs an even hop count >= 4");
  if (!(spec.phys.l_mem_db > 0.0)) throw std::invalid_argument("sanity curves need a positive memory loss");
  spec.phys.validate();
  const double stage_factor = switch_insertion_loss(spec.radix, 1.0);
  const PathDescriptor sw = switch_centric_path(spec.hops, spec.link_km, spec.radix);
  const PathDescriptor chain = server_centric_path(spec.hops / 2, spec.link_km, spec.radix);

  std::vector<SanityRow> rows;
  for (double rho : spec.rho_ell) {
    if (!(rho >= 0.0)) throw std::invalid_argument("loss ratio must be non-negative");
    PhysParams p = spec.phys;
    p.l2x2_db = rho * p.l_mem_db / stage_factor;
    rows.push_back({rho, "switch", std::nullopt, epr_latency_ratio(expected_epr_latency_switch(sw, p), p)});
    for (SwapProtocol proto : {SwapProtocol::kSequential, SwapProtocol::kParallel}) {
      for (double tau : spec.tau_cut_us) {
        p.tau_cut_s = tau * 1e-6;
        const ChainSpec cs = chain_spec(chain, proto, p);
        const std::uint64_t stream = 2 * chain.segments.size() + static_cast<std::uint64_t>(proto);
        const ChainEstimate est = simulate_chain(cs, spec.mc_trials, mix_seed(spec.seed, stream));
        rows.push_back({rho, std::string(to_string(proto)), tau,
                        epr_latency_ratio(est.mean_slots * attempt_duration(chain, p), p)});
      }
    }
  }
  return rows;
}

namespace {

template <typename Row, typename Fn>
std::string to_csv(const char* header, const std::vector<Row>& rows, Fn&& fields) {
  std::ostringstream out;
  out << header << '\n';
  for (const auto& row : rows) {
    const std::vector<std::string> cols = fields(row);
    for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
    out << '\n';
  }
  return out.str();
}

std::vector<std::string> key_fields(ArchTag arch, std::size_t n, Workload w, const std::string& bsm) {
  return {std::string(to_string(arch)), std::to_string(n), std::string(to_string(w)), bsm};
}

nlohmann::ordered_json replica_json(const ReplicaRow& r) {
  nlohmann::ordered_json j;
  j["arch"] = to_string(r.arch);
  j["N"] = r.n;
  j["workload"] = to_string(r.workload);
  j["bsm_model"] = r.bsm_model;
  j["swept_name"] = r.swept_name;
  j["swept_value"] = r.swept_value;
  j["seed"] = r.seed;
  j["t_dist_s"] = r.t_dist_s;
  j["t_mono_s"] = r.t_mono_s;
  j["rho_lat"] = r.rho_lat;
  j["deferrals"] = r.deferrals;
  j["hops"] = r.hops;
  return j;
}

nlohmann::ordered_json aggregate_json(const AggregateRow& a) {
  nlohmann::ordered_json j;
  j["arch"] = to_string(a.arch);
  j["N"] = a.n;
  j["workload"] = to_string(a.workload);
  j["bsm_model"] = a.bsm_model;
  j["swept_name"] = a.swept_name;
  j["swept_value"] = a.swept_value;
  j["t_dist_s"] = a.mean_t_dist_s;
  j["t_mono_s"] = a.mean_t_mono_s;
  j["deferrals"] = a.mean_deferrals;
  j["hops"] = a.mean_hops;
  j["mean_rho_lat"] = a.mean_rho_lat;
  j["se_rho_lat"] = a.se_rho_lat;
  j["replicas"] = a.replicas;
  return j;
}

nlohmann::ordered_json ratio_json(const RatioRow& r) {
  nlohmann::ordered_json j;
  j["arch"] = to_string(r.arch);
  j["N"] = r.n;
  j["workload"] = to_string(r.workload);
  j["bsm_model"] = r.bsm_model;
  j["tau_cut_us"] = r.tau_cut_us;
  j["mean_t_dist_s"] = r.mean_t_dist_s;
  j["bcube_mean_t_dist_s"] = r.bcube_mean_t_dist_s;
  j["ratio_to_bcube"] = r.ratio_to_bcube;
  return j;
}

}  // namespace

std::string replica_csv(const std::vector<ReplicaRow>& rows) {
  return to_csv(kReplicaHeader, rows, [](const ReplicaRow& r) {
    auto cols = key_fields(r.arch, r.n, r.workload, r.bsm_model);
    cols.insert(cols.end(), {r.swept_name, format_double(r.swept_value), std::to_string(r.seed),
                             format_double(r.t_dist_s), format_double(r.t_mono_s), format_double(r.rho_lat),
                             std::to_string(r.deferrals)});
    for (std::size_t h : r.hops) cols.push_back(std::to_string(h));
    return cols;
  });
}

std::string aggregate_csv(const std::vector<AggregateRow>& rows) {
  return to_csv(kAggregateHeader, rows, [](const AggregateRow& a) {
    auto cols = key_fields(a.arch, a.n, a.workload, a.bsm_model);
    cols.insert(cols.end(), {a.swept_name, format_double(a.swept_value), format_double(a.mean_t_dist_s),
                             format_double(a.mean_t_mono_s), format_double(a.mean_deferrals)});
    for (double h : a.mean_hops) cols.push_back(format_double(h));
    cols.insert(cols.end(), {format_double(a.mean_rho_lat), format_double(a.se_rho_lat), std::to_string(a.replicas)});
    return cols;
  });
}

std::string ratio_csv(const std::vector<RatioRow>& rows) {
  return to_csv(kRatioHeader, rows, [](const RatioRow& r) {
    auto cols = key_fields(r.arch, r.n, r.workload, r.bsm_model);
    cols.insert(cols.end(), {format_double(r.tau_cut_us), format_double(r.mean_t_dist_s),
                             format_double(r.bcube_mean_t_dist_s), format_double(r.ratio_to_bcube)});
    return cols;
  });
}

std::string sanity_csv(const std::vector<SanityRow>& rows) {
  return to_csv(kSanityHeader, rows, [](const SanityRow& r) {
    return std::vector<std::string>{format_double(r.rho_ell), r.protocol,
                                    r.tau_cut_us ? format_double(*r.tau_cut_us) : std::string(),
                                    format_double(r.rho_epr)};
  });
}

std::string sweep_json(const SweepResult& result) {
  nlohmann::ordered_json j;
  j["kind"] = result.kind;
  j["replicas"] = nlohmann::ordered_json::array();
  for (const auto& r : result.replicas) j["replicas"].push_back(replica_json(r));
  j["aggregates"] = nlohmann::ordered_json::array();
  for (const auto& a : result.aggregates) j["aggregates"].push_back(aggregate_json(a));
  if (!result.ratios.empty()) {
    j["ratio_to_bcube"] = nlohmann::ordered_json::array();
    for (const auto& r : result.ratios) j["ratio_to_bcube"].push_back(ratio_json(r));
  }
  return j.dump(2) + "\n";
}

std::string sanity_json(const std::vector<SanityRow>& rows) {
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    nlohmann::ordered_json o;
    o["rho_ell"] = r.rho_ell;
    o["protocol"] = r.protocol;
    o["tau_cut_us"] = r.tau_cut_us ? nlohmann::ordered_json(*r.tau_cut_us) : nlohmann::ordered_json(nullptr);
    o["rho_epr"] = r.rho_epr;
    j.push_back(std::move(o));
  }
  return j.dump(2) + "\n";
}

}  // namespace qdc
