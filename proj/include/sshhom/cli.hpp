#pragma once

// Command-line front end. Every run is described by one JSON document;
// command-line flags override keys of that document.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sshhom/model.hpp"

namespace sshhom::cli {

inline constexpr const char* kToolVersion = "1.0.0";

struct GridSpec {
  double start = 0.0;
  double stop = 0.0;
  int count = 0;

  std::vector<double> values() const;
};

struct RunConfig {
  LatticeSpec lattice;
  std::optional<double> t_final;  // unset: command default
  int n_steps = 0;                // 0: default step rule
  std::uint64_t seed = 1;
  int workers = 0;
  DisorderSpec disorder;
  std::optional<std::string> phase;
  GridSpec phase_grid;                 // count 0: default
  std::optional<std::string> regime;
  std::vector<double> strengths;       // empty: default
  std::optional<std::string> experiment;
  int realizations = 100;
  GridSpec tf_grid;
  std::optional<double> t_probe;       // symmetry-check time
  int samples = 201;
  int sample_stride = 64;
};

/// Strict parse: unknown keys and wrong types raise ConfigError naming the key.
RunConfig parse_config(const nlohmann::json& doc);
nlohmann::json to_json(const RunConfig& cfg);

/// Reads a config file, or the config embedded in a run manifest.
/// Returns the command recorded in a manifest, if any.
std::optional<std::string> load_config_file(const std::string& path, RunConfig& cfg);

/// "pi/4", "3*pi/2", "2pi", "0.785" ...
double parse_phase(const std::string& text);
/// "a:step:b" (inclusive) or a comma list.
std::vector<double> parse_range(const std::string& text);

/// Runs the tool. Returns the process exit code: 0 ok, 2 config error,
/// 3 numerical-check failure, 1 anything else.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sshhom::cli
