#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <random>
#include <set>
#include <sstream>

#include "qdc/experiments.h"

using namespace qdc;

namespace {

ExperimentSpec small_spec() {
  ExperimentSpec s;
  s.archs = {ArchTag::kFatTree, ArchTag::kQFlyFull, ArchTag::kBCube};
  s.scales = {8};
  s.workloads = {Workload::kLongRange};
  s.replicas = 3;
  s.two_q_gates = 80;
  s.system.mc_trials = 2000;
  return s;
}

std::size_t columns(const std::string& line) { return static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1; }

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST_CASE("hop columns bucket long paths together") {
  const auto cols = hop_columns({{2, 3}, {4, 1}, {7, 2}, {9, 5}});
  CHECK(cols == std::array<std::size_t, 6>{3, 0, 1, 0, 0, 7});
}

TEST_CASE("aggregation is a pure fold") {
  std::mt19937_64 rng(1);
  std::vector<ReplicaRow> rows;
  for (std::size_t arch = 0; arch < 2; ++arch) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      ReplicaRow r;
      r.arch = arch ? ArchTag::kBCube : ArchTag::kFatTree;
      r.n = 8;
      r.seed = seed;
      r.rho_lat = 1.0 + std::uniform_real_distribution<double>(0, 3)(rng);
      r.t_dist_s = r.rho_lat * 1e-3;
      r.t_mono_s = 1e-3;
      r.hops = {seed, 1, 0, 0, 0, arch};
      rows.push_back(r);
    }
  }
  const auto base = aggregate_csv(aggregate(rows));
  for (int i = 0; i < 10; ++i) {
    std::shuffle(rows.begin(), rows.end(), rng);
    CHECK(aggregate_csv(aggregate(rows)) == base);
  }
  const auto agg = aggregate(rows);
  REQUIRE(agg.size() == 2);
  for (const auto& a : agg) {
    CHECK(a.replicas == 5);
    CHECK(a.mean_hops[0] == doctest::Approx(3.0));
    double mean = 0;
    std::vector<double> vals;
    for (const auto& r : rows) {
      if (r.arch == a.arch) vals.push_back(r.rho_lat);
    }
    for (double v : vals) mean += v / 5;
    double var = 0;
    for (double v : vals) var += (v - mean) * (v - mean) / 4;
    CHECK(a.mean_rho_lat == doctest::Approx(mean));
    CHECK(a.se_rho_lat == doctest::Approx(std::sqrt(var / 5)));
  }
  CHECK(aggregate({}).empty());
}

TEST_CASE("scale sweep covers the grid with the requested replicas") {
  ExperimentSpec s = small_spec();
  s.scales = {4, 8};
  s.workloads = {Workload::kNearestNeighbor, Workload::kLongRange};
  const auto r = sweep_scale(s);
  CHECK(r.replicas.size() == 3 * 2 * 2 * 3);
  CHECK(r.aggregates.size() == 3 * 2 * 2);
  for (const auto& a : r.aggregates) {
    CHECK(a.replicas == 3);
    CHECK(a.mean_rho_lat >= 1.0);
    CHECK(a.swept_name == "N");
  }
  std::set<std::uint64_t> seeds;
  for (const auto& row : r.replicas) seeds.insert(row.seed);
  CHECK(seeds == std::set<std::uint64_t>{1, 2, 3});
  CHECK(std::is_sorted(r.aggregates.begin(), r.aggregates.end(), [](const auto& x, const auto& y) {
    return std::tie(x.arch, x.n, x.workload, x.swept_value) < std::tie(y.arch, y.n, y.workload, y.swept_value);
  }));
}

TEST_CASE("parallel and serial sweeps agree exactly") {
  const ExperimentSpec s = small_spec();
  const auto par = sweep_scale(s, {true, 4});
  const auto ser = sweep_scale(s, {false, 1});
  CHECK(replica_csv(par.replicas) == replica_csv(ser.replicas));
  CHECK(aggregate_csv(par.aggregates) == aggregate_csv(ser.aggregates));
  CHECK(sweep_json(par) == sweep_json(ser));
  CHECK(sweep_json(sweep_scale(s)) == sweep_json(par));
}

TEST_CASE("switch-loss sweep") {
  ExperimentSpec s = small_spec();
  s.scales = {16};
  s.swept_values = {0.0, 0.3, 0.6, 1.0};
  s.workloads = {Workload::kNearestNeighbor};  // replaced by the long-range workload
  const auto r = sweep_switch_loss(s);
  CHECK(r.aggregates.size() == 3 * 4);
  for (const auto& row : r.replicas) CHECK(row.workload == Workload::kLongRange);
  for (auto arch : s.archs) {
    double prev = 0.0;
    for (const auto& a : r.aggregates) {
      if (a.arch != arch) continue;
      CHECK(a.swept_name == "l2x2_db");
      CHECK(a.mean_rho_lat >= prev);
      prev = a.mean_rho_lat;
    }
  }
}

TEST_CASE("cutoff sweep reports ratios to BCube") {
  ExperimentSpec s = small_spec();
  s.swept_values = {50, 100, 200, 400};
  s.bsm = BsmModel::total_budget(100);
  const auto r = sweep_cutoff(s);
  CHECK(r.ratios.size() == 2 * 4);  // BCube rows are the reference
  std::map<ArchTag, std::vector<double>> t;
  for (const auto& a : r.aggregates) t[a.arch].push_back(a.mean_t_dist_s);
  for (auto arch : {ArchTag::kFatTree, ArchTag::kQFlyFull}) {
    for (double v : t[arch]) CHECK(v == t[arch][0]);
  }
  for (const auto& row : r.ratios) {
    CHECK(row.ratio_to_bcube == doctest::Approx(row.mean_t_dist_s / row.bcube_mean_t_dist_s));
    CHECK(row.arch != ArchTag::kBCube);
  }

  ExperimentSpec no_bcube = s;
  no_bcube.archs = {ArchTag::kFatTree};
  CHECK_THROWS(sweep_cutoff(no_bcube));
  ExperimentSpec sequential = s;
  sequential.system.protocol = SwapProtocol::kSequential;
  CHECK_THROWS(sweep_cutoff(sequential));
}

TEST_CASE("spec validation") {
  ExperimentSpec s = small_spec();
  s.replicas = 0;
  CHECK_THROWS(s.validate());
  s = small_spec();
  s.archs.clear();
  CHECK_THROWS(s.validate());
  s = small_spec();
  CHECK_THROWS(sweep_switch_loss(s));  // no swept values
}

TEST_CASE("csv schemas") {
  const auto r = sweep_scale(small_spec());
  const auto rep = lines(replica_csv(r.replicas));
  CHECK(rep.front() == kReplicaHeader);
  CHECK(rep.front() == "arch,N,workload,bsm_model,swept_name,swept_value,seed,t_dist_s,t_mono_s,rho_lat,deferrals,"
                       "hops2,hops3,hops4,hops5,hops6,hops7plus");
  CHECK(rep.size() == 1 + r.replicas.size());
  for (const auto& l : rep) CHECK(columns(l) == 17);
  const auto agg = lines(aggregate_csv(r.aggregates));
  CHECK(agg.front() == kAggregateHeader);
  CHECK(agg.front().ends_with("mean_rho_lat,se_rho_lat,replicas"));
  for (const auto& l : agg) CHECK(columns(l) == columns(agg.front()));
  CHECK(columns(kRatioHeader) == 8);
  CHECK(std::string(kSanityHeader) == "rho_ell,protocol,tau_cut_us,rho_epr");
  const auto json = sweep_json(r);
  CHECK(json.find("\"replicas\"") != std::string::npos);
  CHECK(json.find("\"aggregates\"") != std::string::npos);
}

TEST_CASE("sanity curves") {
  SanitySpec s;
  s.mc_trials = 5000;
  const auto rows = sanity_curves(s);
  CHECK(rows.size() == s.rho_ell.size() * (1 + 2 * s.tau_cut_us.size()));
  std::map<std::pair<std::string, double>, std::vector<double>> curves;
  for (const auto& r : rows) curves[{r.protocol, r.tau_cut_us.value_or(-1)}].push_back(r.rho_epr);

  const auto& sw = curves.at({"switch", -1});
  for (std::size_t i = 1; i < sw.size(); ++i) CHECK(sw[i] > sw[i - 1]);
  for (const auto& [key, curve] : curves) {
    if (key.first != "switch") CHECK(sw[0] < curve[0]);
  }
  const auto& par = curves.at({"parallel", 200});
  const auto& seq = curves.at({"sequential", 200});
  for (std::size_t i = 0; i < par.size(); ++i) CHECK(par[i] <= seq[i] * 1.02);
  CHECK(lines(sanity_csv(rows)).size() == rows.size() + 1);
}
