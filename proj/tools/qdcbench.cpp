// qdcbench: topology, single-run, sweep and report commands.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qdc/circuits.h"
#include "qdc/config.h"
#include "qdc/experiments.h"
#include "qdc/scheduler.h"
#include "qdc/topology.h"

namespace fs = std::filesystem;

namespace {

struct Flags {
  std::optional<std::string> arch;
  std::optional<std::size_t> n;
  std::optional<int> kref;
  std::optional<std::string> workload;
  std::optional<std::string> bsm_model;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> replicas;
  std::optional<std::string> out;
  std::optional<std::string> config;
  std::optional<std::string> json_config;
  std::optional<std::string> kind;
  std::optional<std::string> in;
  int jobs = 0;
  bool table = false;
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Stages files next to their targets and renames them only once all are written.
class OutputSet {
 public:
  void add(fs::path path, std::string content) { files_.emplace_back(std::move(path), std::move(content)); }

  void commit() {
    std::vector<fs::path> staged;
    try {
      for (const auto& [path, content] : files_) {
        if (path.has_parent_path()) fs::create_directories(path.parent_path());
        fs::path tmp = path;
        tmp += ".tmp";
        staged.push_back(tmp);
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out << content;
        out.close();
        if (!out) throw std::runtime_error("failed to write '" + tmp.string() + "'");
      }
      for (std::size_t i = 0; i < files_.size(); ++i) fs::rename(staged[i], files_[i].first);
    } catch (...) {
      std::error_code ec;
      for (const auto& tmp : staged) fs::remove(tmp, ec);
      throw;
    }
  }

  const std::vector<std::pair<fs::path, std::string>>& files() const { return files_; }

 private:
  std::vector<std::pair<fs::path, std::string>> files_;
};

qdc::Config load_config(const Flags& f, bool required) {
  qdc::Config cfg;
  if (f.config && f.json_config) throw std::invalid_argument("--config and --json-config are exclusive");
  if (f.config) {
    cfg = qdc::parse_config_text(read_file(*f.config));
  } else if (f.json_config) {
    cfg = qdc::parse_config_json(read_file(*f.json_config));
  } else if (required) {
    throw std::invalid_argument("a config file is required (--config or --json-config)");
  }
  if (!f.seed && !cfg.has("seed")) {
    if (const char* env = std::getenv("QDCBENCH_SEED"); env && *env) qdc::apply_config_entry(cfg, "seed", env);
  }
  if (f.arch) qdc::apply_config_entry(cfg, "archs", *f.arch);
  if (f.n) qdc::apply_config_entry(cfg, "scales", std::to_string(*f.n));
  if (f.kref) qdc::apply_config_entry(cfg, "kref", std::to_string(*f.kref));
  if (f.workload) qdc::apply_config_entry(cfg, "workloads", *f.workload);
  if (f.bsm_model) qdc::apply_config_entry(cfg, "bsm_model", *f.bsm_model);
  if (f.seed) qdc::apply_config_entry(cfg, "seed", std::to_string(*f.seed));
  if (f.replicas) qdc::apply_config_entry(cfg, "replicas", std::to_string(*f.replicas));
  if (f.kind) qdc::apply_config_entry(cfg, "sweep", *f.kind);
  if (f.out) cfg.out_dir = *f.out;
  return cfg;
}

qdc::Fabric build(qdc::ArchTag tag, std::size_t n, std::optional<int> kref, const qdc::Config& cfg) {
  const qdc::LinkDefaults links{cfg.spec.system.channels, cfg.spec.system.link_km};
  qdc::Fabric fabric = [&] {
    if (!kref) return qdc::build_fabric(tag, n, links);
    switch (tag) {
      case qdc::ArchTag::kQFlyFull: return qdc::build_qfly(n, qdc::RingPolicy::kFull, *kref, links);
      case qdc::ArchTag::kQFlyHalf: return qdc::build_qfly(n, qdc::RingPolicy::kHalf, *kref, links);
      case qdc::ArchTag::kQFlyResidual: return qdc::build_qfly(n, qdc::RingPolicy::kResidual, *kref, links);
      case qdc::ArchTag::kBCube: return qdc::build_bcube(n, *kref, links);
      default: throw std::invalid_argument("--kref applies to qfly and bcube only");
    }
  }();
  qdc::allocate_bsms(fabric, cfg.spec.bsm);
  return fabric;
}

const char* const kSummaryHeader = "arch,N,n_capacity,switches,qpus_per_rack,ports,max_degree,tors";

std::string summary_line(const qdc::SummaryRow& row, std::size_t n) {
  std::ostringstream out;
  out << qdc::to_string(row.arch) << ',' << n << ',' << row.n_capacity << ',' << row.total_switches << ','
      << row.qpus_per_rack << ',' << row.ports_per_switch << ',' << row.max_degree << ',' << row.tor_count;
  return out.str();
}

int cmd_topology(const Flags& f) {
  const qdc::Config cfg = load_config(f, false);
  if (f.table) {
    std::cout << kSummaryHeader << '\n';
    for (std::size_t n : {16, 64, 128}) {
      for (qdc::ArchTag tag : qdc::all_archs()) {
        std::cout << summary_line(qdc::topology_summary(build(tag, n, std::nullopt, cfg)), n) << '\n';
      }
    }
    return 0;
  }
  if (!f.arch || !f.n) throw CLI::ValidationError("topology", "--arch and --n are required without --table");
  const qdc::ArchTag tag = qdc::parse_arch(*f.arch);
  const qdc::Fabric fabric = build(tag, *f.n, cfg.kref, cfg);
  std::cout << kSummaryHeader << '\n' << summary_line(qdc::topology_summary(fabric), *f.n) << '\n';
  if (f.out) {
    const std::string stem = std::string(qdc::to_string(tag)) + "_N" + std::to_string(*f.n);
    OutputSet out;
    out.add(fs::path(*f.out) / (stem + ".edges"), qdc::write_fabric_text(fabric));
    out.add(fs::path(*f.out) / (stem + ".json"), qdc::write_fabric_json(fabric));
    out.commit();
  }
  return 0;
}

int cmd_run(const Flags& f) {
  const qdc::Config cfg = load_config(f, true);
  const qdc::ExperimentSpec& s = cfg.spec;
  s.validate();
  const qdc::ArchTag tag = s.archs.front();
  const std::size_t n = s.scales.front();
  const qdc::Workload w = s.workloads.front();
  const qdc::Fabric fabric = build(tag, n, cfg.kref, cfg);
  const std::uint64_t seed = s.base_seed;
  const qdc::GateDag dag = qdc::gen_workload(w, s.system.capacity * n, s.two_q_gates.value_or(qdc::scale_gate_count(n)),
                                             qdc::mix_seed(seed, 0));
  const qdc::Mapping mapping = qdc::kl_partition(dag, n, s.system.capacity, qdc::mix_seed(seed, 1));
  qdc::SchedulerOptions opts;
  opts.protocol = s.system.protocol;
  opts.comm_qubits = s.system.comm_qubits;
  opts.max_hops = s.system.max_hops;
  opts.mc_trials = s.system.mc_trials;
  const qdc::RunRecord rec = qdc::run_distributed(dag, fabric, mapping, s.phys, qdc::mix_seed(seed, 2), opts);
  const std::string json = qdc::to_json(rec) + "\n";
  if (f.out) {
    OutputSet out;
    out.add(fs::path(*f.out) / "run.json", json);
    out.commit();
  } else {
    std::cout << json;
  }
  return 0;
}

int cmd_sweep(const Flags& f) {
  const qdc::Config cfg = load_config(f, true);
  const qdc::ExecOptions exec{true, f.jobs};
  const fs::path dir(cfg.out_dir);
  OutputSet out;
  if (cfg.sweep == "sanity") {
    const auto rows = qdc::sanity_curves(cfg.sanity_spec());
    out.add(dir / "sanity.csv", qdc::sanity_csv(rows));
    out.add(dir / "sanity.json", qdc::sanity_json(rows));
  } else {
    const qdc::ExperimentSpec spec = cfg.sweep_spec();
    qdc::SweepResult result;
    if (cfg.sweep == "scale") {
      result = qdc::sweep_scale(spec, exec);
    } else if (cfg.sweep == "switch-loss") {
      result = qdc::sweep_switch_loss(spec, exec);
    } else {
      result = qdc::sweep_cutoff(spec, exec);
    }
    out.add(dir / (cfg.sweep + "_replicas.csv"), qdc::replica_csv(result.replicas));
    out.add(dir / (cfg.sweep + "_aggregate.csv"), qdc::aggregate_csv(result.aggregates));
    if (!result.ratios.empty()) out.add(dir / (cfg.sweep + "_ratio_to_bcube.csv"), qdc::ratio_csv(result.ratios));
    out.add(dir / (cfg.sweep + ".json"), qdc::sweep_json(result));
  }
  out.commit();
  for (const auto& [path, content] : out.files()) std::cout << "wrote " << path.string() << '\n';
  return 0;
}

// Prints an aggregate CSV as an aligned table.
int cmd_report(const Flags& f) {
  if (!f.in) throw CLI::ValidationError("report", "--in <aggregate.csv> is required");
  std::istringstream in(read_file(*f.in));
  std::string header;
  std::getline(in, header);
  if (header != qdc::kAggregateHeader) {
    throw std::runtime_error("'" + *f.in + "' is not an aggregate CSV (unexpected header)");
  }
  std::vector<std::vector<std::string>> rows;
  rows.push_back({"arch", "N", "workload", "bsm_model", "swept", "mean_rho_lat", "se_rho_lat", "replicas"});
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> c;
    std::stringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) c.push_back(cell);
    if (c.size() != 18) throw std::runtime_error("malformed row: " + line);
    rows.push_back({c[0], c[1], c[2], c[3], c[4] + "=" + c[5], c[15], c[16], c[17]});
  }
  std::vector<std::size_t> width(rows.front().size(), 0);
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) width[i] = std::max(width[i], r[i].size());
  }
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      std::cout << r[i] << std::string(width[i] - r[i].size() + (i + 1 < r.size() ? 2 : 0), ' ');
    }
    std::cout << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum data-center interconnect benchmark"};
  app.require_subcommand(1);
  Flags f;

  const auto common = [&f](CLI::App* sub) {
    sub->add_option("--config", f.config, "key = value config file");
    sub->add_option("--json-config", f.json_config, "JSON config file");
    sub->add_option("--arch", f.arch, "architecture(s), comma separated");
    sub->add_option("--n", f.n, "number of QPUs");
    sub->add_option("--bsm-model", f.bsm_model, "per-switch:<c> or total:<B>");
    sub->add_option("--seed", f.seed, "base seed (fallback: QDCBENCH_SEED)");
    sub->add_option("--out", f.out, "output directory");
  };

  auto* topo = app.add_subcommand("topology", "build a fabric and print its summary");
  common(topo);
  topo->add_option("--kref", f.kref, "reference radix for qfly and bcube");
  topo->add_flag("--table", f.table, "print the summary grid for N in {16, 64, 128}");

  auto* run = app.add_subcommand("run", "simulate one circuit and print its run record");
  common(run);
  run->add_option("--workload", f.workload, "nearest_neighbor, clifford_t or long_range");
  run->add_option("--kref", f.kref, "reference radix for qfly and bcube");

  auto* sweep = app.add_subcommand("sweep", "run an experiment sweep and write CSV and JSON");
  common(sweep);
  sweep->add_option("--workload", f.workload, "workload(s), comma separated");
  sweep->add_option("--replicas", f.replicas, "replicas per grid point");
  sweep->add_option("--kind", f.kind, "scale, switch-loss, cutoff or sanity");
  sweep->add_option("--jobs", f.jobs, "concurrent replicas (default: all cores)")->check(CLI::NonNegativeNumber);

  auto* report = app.add_subcommand("report", "print an aggregate CSV as a table");
  report->add_option("--in", f.in, "aggregate CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (topo->parsed()) return cmd_topology(f);
    if (run->parsed()) return cmd_run(f);
    if (sweep->parsed()) return cmd_sweep(f);
    return cmd_report(f);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const qdc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
