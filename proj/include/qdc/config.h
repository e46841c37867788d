#pragma once

#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "qdc/experiments.h"

namespace qdc {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Flat key/value settings. Durations are microseconds, losses dB and
/// lengths km, as the key suffixes say.
struct Config {
  ExperimentSpec spec;
  std::string sweep = "scale";
  std::vector<double> l2x2_values_db{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  std::vector<double> tau_cut_values_us{50.0, 100.0, 200.0, 400.0};
  SanitySpec sanity;
  std::optional<int> kref;
  std::string out_dir = "results";
  std::set<std::string> explicit_keys;

  bool has(const std::string& key) const { return explicit_keys.contains(key); }

  /// Experiment spec for the configured sweep, with the swept values filled in.
  ExperimentSpec sweep_spec() const;
  SanitySpec sanity_spec() const;
};

std::span<const std::string_view> config_keys();
std::span<const std::string_view> sweep_kinds();

void apply_config_entry(Config& config, std::string_view key, std::string_view value);

/// `key = value` lines; `#` starts a comment. Errors carry the line number.
Config parse_config_text(std::string_view text, Config base = {});

/// A JSON object with the same keys; lists may be arrays.
Config parse_config_json(std::string_view text, Config base = {});

}  // namespace qdc
