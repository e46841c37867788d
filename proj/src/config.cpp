#include "qdc/config.h"

#include <algorithm>
#include <array>
#include <functional>
#include <map>

#include "internal/text.h"
#include "json.hpp"

namespace qdc {

namespace {

using internal::parse_number;
using internal::split;
using internal::trim;

constexpr std::array<std::string_view, 4> kSweepKinds{"scale", "switch-loss", "cutoff", "sanity"};

template <typename T>
std::vector<T> parse_list(std::string_view value, std::string_view what) {
  std::vector<T> out;
  for (auto item : split(value, ',')) {
    if (item.empty()) throw std::invalid_argument("empty entry in " + std::string(what) + " list");
    out.push_back(parse_number<T>(item, what));
  }
  return out;
}

template <typename T>
T positive(T v, std::string_view what) {
  if (!(v > T{})) throw std::invalid_argument(std::string(what) + " must be positive");
  return v;
}

double us(std::string_view v, std::string_view what) { return parse_number<double>(v, what) * 1e-6; }

using Setter = std::function<void(Config&, std::string_view)>;

const std::map<std::string_view, Setter>& setters() {
  static const std::map<std::string_view, Setter> table = {
      {"sweep",
       [](Config& c, std::string_view v) {
         if (std::find(kSweepKinds.begin(), kSweepKinds.end(), v) == kSweepKinds.end()) {
           throw std::invalid_argument("unknown sweep kind '" + std::string(v) +
                                       "' (expected scale, switch-loss, cutoff or sanity)");
         }
         c.sweep = v;
       }},
      {"archs",
       [](Config& c, std::string_view v) {
         c.spec.archs.clear();
         for (auto a : split(v, ',')) c.spec.archs.push_back(parse_arch(a));
       }},
      {"scales", [](Config& c, std::string_view v) { c.spec.scales = parse_list<std::size_t>(v, "scale"); }},
      {"workloads",
       [](Config& c, std::string_view v) {
         c.spec.workloads.clear();
         for (auto w : split(v, ',')) c.spec.workloads.push_back(parse_workload(w));
       }},
      {"bsm_model", [](Config& c, std::string_view v) { c.spec.bsm = parse_bsm_model(v); }},
      {"replicas",
       [](Config& c, std::string_view v) {
         c.spec.replicas = positive(parse_number<std::size_t>(v, "replicas"), "replicas");
       }},
      {"seed", [](Config& c, std::string_view v) { c.spec.base_seed = parse_number<std::uint64_t>(v, "seed"); }},
      {"two_q_gates",
       [](Config& c, std::string_view v) { c.spec.two_q_gates = parse_number<std::size_t>(v, "two_q_gates"); }},
      {"kref", [](Config& c, std::string_view v) { c.kref = positive(parse_number<int>(v, "kref"), "kref"); }},
      {"out_dir", [](Config& c, std::string_view v) { c.out_dir = v; }},
      {"comm_qubits",
       [](Config& c, std::string_view v) {
         c.spec.system.comm_qubits = positive(parse_number<std::size_t>(v, "comm_qubits"), "comm_qubits");
       }},
      {"channels",
       [](Config& c, std::string_view v) {
         c.spec.system.channels = positive(parse_number<int>(v, "channels"), "channels");
       }},
      {"capacity",
       [](Config& c, std::string_view v) {
         c.spec.system.capacity = positive(parse_number<std::size_t>(v, "capacity"), "capacity");
       }},
      {"link_km", [](Config& c, std::string_view v) { c.spec.system.link_km = parse_number<double>(v, "link_km"); }},
      {"max_hops",
       [](Config& c, std::string_view v) {
         c.spec.system.max_hops = positive(parse_number<std::size_t>(v, "max_hops"), "max_hops");
       }},
      {"mc_trials",
       [](Config& c, std::string_view v) {
         c.spec.system.mc_trials = positive(parse_number<std::size_t>(v, "mc_trials"), "mc_trials");
       }},
      {"protocol", [](Config& c, std::string_view v) { c.spec.system.protocol = parse_protocol(v); }},
      {"alpha_db_per_km",
       [](Config& c, std::string_view v) { c.spec.phys.alpha_db_per_km = parse_number<double>(v, "alpha_db_per_km"); }},
      {"l2x2_db", [](Config& c, std::string_view v) { c.spec.phys.l2x2_db = parse_number<double>(v, "l2x2_db"); }},
      {"l_bsm_db", [](Config& c, std::string_view v) { c.spec.phys.l_bsm_db = parse_number<double>(v, "l_bsm_db"); }},
      {"l_mem_db", [](Config& c, std::string_view v) { c.spec.phys.l_mem_db = parse_number<double>(v, "l_mem_db"); }},
      {"t_src_us", [](Config& c, std::string_view v) { c.spec.phys.t_src_s = us(v, "t_src_us"); }},
      {"t_reset_us", [](Config& c, std::string_view v) { c.spec.phys.t_reset_s = us(v, "t_reset_us"); }},
      {"t_local_us", [](Config& c, std::string_view v) { c.spec.phys.t_local_s = us(v, "t_local_us"); }},
      {"tau_cut_us", [](Config& c, std::string_view v) { c.spec.phys.tau_cut_s = us(v, "tau_cut_us"); }},
      {"reconfig_delay_us",
       [](Config& c, std::string_view v) { c.spec.phys.reconfig_delay_s = us(v, "reconfig_delay_us"); }},
      {"fiber_speed_km_per_s",
       [](Config& c, std::string_view v) {
         c.spec.phys.v_fiber_km_per_s = parse_number<double>(v, "fiber_speed_km_per_s");
       }},
      {"l2x2_values_db",
       [](Config& c, std::string_view v) { c.l2x2_values_db = parse_list<double>(v, "l2x2_values_db"); }},
      {"tau_cut_values_us",
       [](Config& c, std::string_view v) { c.tau_cut_values_us = parse_list<double>(v, "tau_cut_values_us"); }},
      {"rho_ell_values",
       [](Config& c, std::string_view v) { c.sanity.rho_ell = parse_list<double>(v, "rho_ell_values"); }},
      {"sanity_tau_cut_values_us",
       [](Config& c, std::string_view v) {
         c.sanity.tau_cut_us = parse_list<double>(v, "sanity_tau_cut_values_us");
       }},
      {"sanity_hops",
       [](Config& c, std::string_view v) { c.sanity.hops = parse_number<std::size_t>(v, "sanity_hops"); }},
      {"sanity_radix",
       [](Config& c, std::string_view v) { c.sanity.radix = parse_number<int>(v, "sanity_radix"); }},
  };
  return table;
}

const std::map<std::string_view, std::string_view>& aliases() {
  static const std::map<std::string_view, std::string_view> table = {
      {"arch", "archs"}, {"n", "scales"}, {"workload", "workloads"}};
  return table;
}

}  // namespace

std::span<const std::string_view> config_keys() {
  static const std::vector<std::string_view> keys = [] {
    std::vector<std::string_view> k;
    for (const auto& [name, fn] : setters()) k.push_back(name);
    return k;
  }();
  return keys;
}

std::span<const std::string_view> sweep_kinds() { return kSweepKinds; }

void apply_config_entry(Config& config, std::string_view key, std::string_view value) {
  if (auto a = aliases().find(key); a != aliases().end()) key = a->second;
  const auto it = setters().find(key);
  if (it == setters().end()) throw ConfigError("unknown key '" + std::string(key) + "'");
  value = trim(value);
  if (value.empty()) throw ConfigError("empty value for '" + std::string(key) + "'");
  try {
    it->second(config, value);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string(key) + ": " + e.what());
  }
  config.explicit_keys.emplace(key);
}

Config parse_config_text(std::string_view text, Config base) {
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = std::min(text.find('\n', start), text.size());
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    try {
      if (eq == std::string_view::npos) throw ConfigError("expected 'key = value'");
      apply_config_entry(base, trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return base;
}

Config parse_config_json(std::string_view text, Config base) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("JSON config must be an object");
  const auto scalar = [](const nlohmann::json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_unsigned() || v.is_number_integer()) return v.dump();
    if (v.is_number_float()) return internal::format_double(v.get<double>());
    throw ConfigError("values must be strings, numbers or arrays of them");
  };
  for (const auto& [key, v] : doc.items()) {
    std::string value;
    if (v.is_array()) {
      for (std::size_t i = 0; i < v.size(); ++i) value += (i ? "," : "") + scalar(v[i]);
    } else {
      value = scalar(v);
    }
    try {
      apply_config_entry(base, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError("key '" + key + "': " + e.what());
    }
  }
  return base;
}

ExperimentSpec Config::sweep_spec() const {
  ExperimentSpec s = spec;
  if (sweep == "switch-loss") {
    s.swept_values = l2x2_values_db;
    s.workloads = {Workload::kLongRange};
  } else if (sweep == "cutoff") {
    s.swept_values = tau_cut_values_us;
  }
  return s;
}

SanitySpec Config::sanity_spec() const {
  SanitySpec s = sanity;
  s.phys = spec.phys;
  if (!has("alpha_db_per_km")) s.phys.alpha_db_per_km = SanitySpec::sanity_phys().alpha_db_per_km;
  s.phys.reconfig_delay_s = 0.0;
  s.link_km = spec.system.link_km;
  s.mc_trials = spec.system.mc_trials;
  s.seed = spec.base_seed;
  return s;
}

}  // namespace qdc
