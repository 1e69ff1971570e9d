#include <cmath>
#include <fstream>
#include <numbers>
#include <regex>
#include <set>
#include <sstream>

#include "sshhom/cli.hpp"
#include "sshhom/errors.hpp"
#include "sshhom/output.hpp"

namespace sshhom::cli {

using nlohmann::json;

std::vector<double> GridSpec::values() const {
  std::vector<double> v;
  if (count == 1) return {start};
  for (int i = 0; i < count; ++i) v.push_back(start + (stop - start) * i / (count - 1));
  return v;
}

namespace {

void reject_unknown(const json& obj, const std::string& where, const std::set<std::string>& allowed) {
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) throw ConfigError("unknown config key '" + where + key + "'");
  }
}

const json& require_object(const json& j, const std::string& key) {
  if (!j.is_object()) throw ConfigError("config key '" + key + "' must be an object");
  return j;
}

double get_number(const json& j, const std::string& key) {
  if (!j.is_number()) throw ConfigError("config key '" + key + "' must be a number");
  return j.get<double>();
}

int get_int(const json& j, const std::string& key) {
  if (!j.is_number_integer()) throw ConfigError("config key '" + key + "' must be an integer");
  return j.get<int>();
}

std::string get_string(const json& j, const std::string& key) {
  if (!j.is_string()) throw ConfigError("config key '" + key + "' must be a string");
  return j.get<std::string>();
}

GridSpec get_grid(const json& j, const std::string& key) {
  require_object(j, key);
  reject_unknown(j, key + ".", {"start", "stop", "count"});
  GridSpec g;
  if (!j.contains("start") || !j.contains("stop") || !j.contains("count")) {
    throw ConfigError("config key '" + key + "' needs start, stop and count");
  }
  g.start = get_number(j["start"], key + ".start");
  g.stop = get_number(j["stop"], key + ".stop");
  g.count = get_int(j["count"], key + ".count");
  if (g.count < 1) throw ConfigError("config key '" + key + ".count' must be >= 1");
  return g;
}

}  // namespace

RunConfig parse_config(const json& doc) {
  if (!doc.is_object()) throw ConfigError("config document must be a JSON object");
  reject_unknown(doc, "", {"lattice", "t_final", "n_steps", "seed", "workers", "disorder", "phase",
                           "phase_grid", "regime", "strengths", "experiment", "realizations", "tf_grid",
                           "t_probe", "samples", "sample_stride"});
  RunConfig cfg;
  if (doc.contains("lattice")) {
    const json& l = require_object(doc["lattice"], "lattice");
    reject_unknown(l, "lattice.", {"n_cells", "v0"});
    if (l.contains("n_cells")) cfg.lattice.n_cells = get_int(l["n_cells"], "lattice.n_cells");
    if (l.contains("v0")) cfg.lattice.v0 = get_number(l["v0"], "lattice.v0");
  }
  if (doc.contains("t_final") && !doc["t_final"].is_null()) cfg.t_final = get_number(doc["t_final"], "t_final");
  if (doc.contains("n_steps")) cfg.n_steps = get_int(doc["n_steps"], "n_steps");
  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned()) throw ConfigError("config key 'seed' must be an unsigned integer");
    cfg.seed = doc["seed"].get<std::uint64_t>();
  }
  if (doc.contains("workers")) cfg.workers = get_int(doc["workers"], "workers");
  if (doc.contains("disorder")) {
    const json& d = require_object(doc["disorder"], "disorder");
    reject_unknown(d, "disorder.", {"kind", "strength", "policy", "refresh_interval"});
    try {
      if (d.contains("kind")) cfg.disorder.kind = parse_disorder_kind(get_string(d["kind"], "disorder.kind"));
      if (d.contains("policy")) {
        cfg.disorder.policy = parse_temporal_policy(get_string(d["policy"], "disorder.policy"));
      }
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("config key 'disorder': ") + e.what());
    }
    if (d.contains("strength")) cfg.disorder.strength = get_number(d["strength"], "disorder.strength");
    if (d.contains("refresh_interval") && !d["refresh_interval"].is_null()) {
      cfg.disorder.refresh_interval = get_number(d["refresh_interval"], "disorder.refresh_interval");
    }
  }
  if (doc.contains("phase") && !doc["phase"].is_null()) {
    const json& p = doc["phase"];
    if (p.is_number()) {
      cfg.phase = output::format_number(p.get<double>());
    } else {
      cfg.phase = get_string(p, "phase");
      parse_phase(*cfg.phase);
    }
  }
  if (doc.contains("phase_grid")) cfg.phase_grid = get_grid(doc["phase_grid"], "phase_grid");
  if (doc.contains("regime") && !doc["regime"].is_null()) cfg.regime = get_string(doc["regime"], "regime");
  if (doc.contains("strengths")) {
    const json& s = doc["strengths"];
    if (!s.is_array()) throw ConfigError("config key 'strengths' must be an array of numbers");
    for (const auto& v : s) cfg.strengths.push_back(get_number(v, "strengths"));
  }
  if (doc.contains("experiment") && !doc["experiment"].is_null()) {
    cfg.experiment = get_string(doc["experiment"], "experiment");
  }
  if (doc.contains("realizations")) cfg.realizations = get_int(doc["realizations"], "realizations");
  if (doc.contains("tf_grid")) cfg.tf_grid = get_grid(doc["tf_grid"], "tf_grid");
  if (doc.contains("t_probe") && !doc["t_probe"].is_null()) cfg.t_probe = get_number(doc["t_probe"], "t_probe");
  if (doc.contains("samples")) cfg.samples = get_int(doc["samples"], "samples");
  if (doc.contains("sample_stride")) cfg.sample_stride = get_int(doc["sample_stride"], "sample_stride");
  return cfg;
}

json to_json(const RunConfig& cfg) {
  json j;
  j["lattice"] = {{"n_cells", cfg.lattice.n_cells}, {"v0", cfg.lattice.v0}};
  j["t_final"] = cfg.t_final ? json(*cfg.t_final) : json(nullptr);
  j["n_steps"] = cfg.n_steps;
  j["seed"] = cfg.seed;
  j["workers"] = cfg.workers;
  j["disorder"] = {{"kind", to_string(cfg.disorder.kind)},
                   {"strength", cfg.disorder.strength},
                   {"policy", to_string(cfg.disorder.policy)},
                   {"refresh_interval",
                    cfg.disorder.refresh_interval ? json(*cfg.disorder.refresh_interval) : json(nullptr)}};
  j["phase"] = cfg.phase ? json(*cfg.phase) : json(nullptr);
  if (cfg.phase_grid.count > 0) {
    j["phase_grid"] = {{"start", cfg.phase_grid.start}, {"stop", cfg.phase_grid.stop}, {"count", cfg.phase_grid.count}};
  }
  j["regime"] = cfg.regime ? json(*cfg.regime) : json(nullptr);
  j["strengths"] = cfg.strengths;
  j["experiment"] = cfg.experiment ? json(*cfg.experiment) : json(nullptr);
  j["realizations"] = cfg.realizations;
  if (cfg.tf_grid.count > 0) {
    j["tf_grid"] = {{"start", cfg.tf_grid.start}, {"stop", cfg.tf_grid.stop}, {"count", cfg.tf_grid.count}};
  }
  j["t_probe"] = cfg.t_probe ? json(*cfg.t_probe) : json(nullptr);
  j["samples"] = cfg.samples;
  j["sample_stride"] = cfg.sample_stride;
  return j;
}

std::optional<std::string> load_config_file(const std::string& path, RunConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  if (doc.is_object() && doc.contains("config") && doc.contains("command")) {
    cfg = parse_config(doc["config"]);
    return get_string(doc["command"], "command");
  }
  cfg = parse_config(doc);
  return std::nullopt;
}

double parse_phase(const std::string& text) {
  // [coef][*]pi[/den] or a plain number.
  static const std::regex pi_form(R"(^\s*([0-9]*\.?[0-9]*)\s*\*?\s*pi\s*(?:/\s*([0-9]*\.?[0-9]+))?\s*$)");
  std::smatch m;
  if (std::regex_match(text, m, pi_form)) {
    double coef = m[1].length() ? std::stod(m[1].str()) : 1.0;
    double den = m[2].length() ? std::stod(m[2].str()) : 1.0;
    if (den == 0.0) throw ConfigError("phase '" + text + "' divides by zero");
    return coef * std::numbers::pi / den;
  }
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError("cannot parse phase '" + text + "'");
}

std::vector<double> parse_range(const std::string& text) {
  std::vector<double> out;
  try {
    if (text.find(':') != std::string::npos) {
      std::stringstream ss(text);
      std::string a, step, b;
      std::getline(ss, a, ':');
      std::getline(ss, step, ':');
      std::getline(ss, b, ':');
      const double lo = std::stod(a), dx = std::stod(step), hi = std::stod(b);
      if (!(dx > 0.0) || hi < lo) throw ConfigError("range '" + text + "' must be lo:step:hi with step > 0");
      const int n = static_cast<int>(std::floor((hi - lo) / dx + 1e-9));
      for (int i = 0; i <= n; ++i) out.push_back(lo + i * dx);
      return out;
    }
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    throw ConfigError("cannot parse range '" + text + "'");
  }
  if (out.empty()) throw ConfigError("range '" + text + "' is empty");
  return out;
}

}  // namespace sshhom::cli
