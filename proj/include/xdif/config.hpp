/// @file config.hpp
/// @brief Declarative run configuration: TOML-subset/JSON parsing, validation
///        with unknown-key rejection, and echo for reproducibility.
#pragma once

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "xdif/galerkin.hpp"
#include "xdif/model.hpp"
#include "xdif/serialize.hpp"
#include "xdif/spectral.hpp"
#include "xdif/sweeps.hpp"

namespace xdif {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// TOML subset: [nested.tables], scalar keys (string/bool/number) and flat
// arrays. Exactly what RunConfig needs, diff-friendly and hand-editable.
// ---------------------------------------------------------------------------

namespace toml {

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

inline std::string strip_comment(const std::string& line) {
  bool in_str = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') in_str = !in_str;
    if (line[i] == '#' && !in_str) return line.substr(0, i);
  }
  return line;
}

inline nlohmann::json parse_scalar(const std::string& tok, int lineno) {
  if (tok.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty value");
  if (tok.front() == '"') {
    if (tok.size() < 2 || tok.back() != '"')
      throw ConfigError("config line " + std::to_string(lineno) + ": unterminated string");
    return tok.substr(1, tok.size() - 2);
  }
  if (tok == "true") return true;
  if (tok == "false") return false;
  try {
    std::size_t pos = 0;
    if (tok.find_first_of(".eE") == std::string::npos) {
      const long long v = std::stoll(tok, &pos);
      if (pos == tok.size()) return v;
    }
    pos = 0;
    const double d = std::stod(tok, &pos);
    if (pos == tok.size()) return d;
  } catch (const std::exception&) {
  }
  throw ConfigError("config line " + std::to_string(lineno) + ": cannot parse value '" + tok + "'");
}

inline nlohmann::json parse_value(const std::string& raw, int lineno) {
  const std::string v = trim(raw);
  if (!v.empty() && v.front() == '[') {
    if (v.back() != ']') throw ConfigError("config line " + std::to_string(lineno) + ": unterminated array");
    nlohmann::json arr = nlohmann::json::array();
    std::string body = v.substr(1, v.size() - 2);
    std::string cur;
    bool in_str = false;
    for (char ch : body) {
      if (ch == '"') in_str = !in_str;
      if (ch == ',' && !in_str) {
        if (!trim(cur).empty()) arr.push_back(parse_scalar(trim(cur), lineno));
        cur.clear();
      } else {
        cur += ch;
      }
    }
    if (!trim(cur).empty()) arr.push_back(parse_scalar(trim(cur), lineno));
    return arr;
  }
  return parse_scalar(v, lineno);
}

}  // namespace detail

inline nlohmann::json parse(const std::string& text) {
  nlohmann::json root = nlohmann::json::object();
  nlohmann::json* table = &root;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string t = detail::trim(detail::strip_comment(line));
    if (t.empty()) continue;
    if (t.front() == '[') {
      if (t.back() != ']') throw ConfigError("config line " + std::to_string(lineno) + ": bad table header");
      const std::string path = detail::trim(t.substr(1, t.size() - 2));
      if (path.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty table name");
      table = &root;
      std::string part;
      std::istringstream ps(path);
      while (std::getline(ps, part, '.')) {
        part = detail::trim(part);
        if (part.empty())
          throw ConfigError("config line " + std::to_string(lineno) + ": empty table path segment");
        table = &(*table)[part];
        if (!table->is_object() && !table->is_null())
          throw ConfigError("config line " + std::to_string(lineno) + ": table clashes with key '" + part + "'");
        if (table->is_null()) *table = nlohmann::json::object();
      }
      continue;
    }
    const std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = detail::trim(t.substr(0, eq));
    if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    if (table->contains(key))
      throw ConfigError("config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    (*table)[key] = detail::parse_value(t.substr(eq + 1), lineno);
  }
  return root;
}

inline void emit_value(std::ostream& os, const nlohmann::json& v) {
  if (v.is_string()) {
    os << '"' << v.get<std::string>() << '"';
  } else if (v.is_boolean()) {
    os << (v.get<bool>() ? "true" : "false");
  } else if (v.is_number_integer()) {
    os << v.get<long long>();
  } else if (v.is_number()) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v.get<double>());
    // plain integers printed by %.17g would re-parse as integers
    std::string s(buf);
    if (s.find_first_of(".eEnN") == std::string::npos) s += ".0";
    os << s;
  } else if (v.is_array()) {
    os << '[';
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) os << ", ";
      emit_value(os, v[i]);
    }
    os << ']';
  } else {
    throw ConfigError("config emit: unsupported value type");
  }
}

inline void emit(std::ostream& os, const nlohmann::json& j, const std::string& prefix = "") {
  // scalars and arrays first, then subtables
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (it.value().is_object()) continue;
    os << it.key() << " = ";
    emit_value(os, it.value());
    os << '\n';
  }
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!it.value().is_object()) continue;
    const std::string path = prefix.empty() ? it.key() : prefix + "." + it.key();
    os << '\n' << '[' << path << "]\n";
    emit(os, it.value(), path);
  }
}

inline std::string dump(const nlohmann::json& j) {
  std::ostringstream os;
  emit(os, j);
  return os.str();
}

}  // namespace toml

// ---------------------------------------------------------------------------
// RunConfig
// ---------------------------------------------------------------------------

struct InitialSpec {
  enum class Preset { Constant, GaussianBump, TwoBump, File };
  Preset preset = Preset::Constant;
  double u_value = 1.0, v_value = 1.0;
  double u_center = 0.5, u_width = 0.1, u_amplitude = 1.0, u_floor = 0.1, u_center2 = 0.0;
  double v_center = 0.5, v_width = 0.1, v_amplitude = 1.0, v_floor = 0.1, v_center2 = 0.0;
  std::string u_file, v_file;
  double lift = 0.1;
  double target_mass_u = std::numeric_limits<double>::quiet_NaN();
  double target_mass_v = std::numeric_limits<double>::quiet_NaN();

  /// Closed-form (or file-backed) sampler for one species on a given domain.
  std::function<double(double, double)> sampler(int species, const Domain& dom) const {
    const bool u = species == 1;
    switch (preset) {
      case Preset::Constant: {
        const double c = u ? u_value : v_value;
        return [c](double, double) { return c; };
      }
      case Preset::GaussianBump: {
        const double ctr = u ? u_center : v_center, wid = u ? u_width : v_width;
        const double amp = u ? u_amplitude : v_amplitude, flr = u ? u_floor : v_floor;
        const bool two_d = dom.dim() == 2;
        return [=](double x, double y) {
          double r2 = (x - ctr) * (x - ctr);
          if (two_d) r2 += (y - ctr) * (y - ctr);
          return flr + amp * std::exp(-r2 / (2.0 * wid * wid));
        };
      }
      case Preset::TwoBump: {
        const double c1 = u ? u_center : v_center, c2 = u ? u_center2 : v_center2;
        const double wid = u ? u_width : v_width;
        const double amp = u ? u_amplitude : v_amplitude, flr = u ? u_floor : v_floor;
        const bool two_d = dom.dim() == 2;
        return [=](double x, double y) {
          auto bump = [&](double c) {
            double r2 = (x - c) * (x - c);
            if (two_d) r2 += (y - c) * (y - c);
            return std::exp(-r2 / (2.0 * wid * wid));
          };
          return flr + amp * (bump(c1) + bump(c2));
        };
      }
      case Preset::File: {
        const std::string path = u ? u_file : v_file;
        std::ifstream f(path, std::ios::binary);
        if (!f) throw ConfigError("initial: cannot open field file '" + path + "'");
        SpectralField fld = read_field(f);
        if (fld.domain.shape != dom.shape)
          throw ConfigError("initial: field file domain shape mismatch for '" + path + "'");
        auto shared = std::make_shared<SpectralField>(std::move(fld));
        return [shared](double x, double y) {
          const Domain& d = shared->domain;
          double acc = 0.0;
          if (d.dim() == 1) {
            for (int j = 0; j < shared->k; ++j)
              acc += shared->coeffs[j] * detail::phi_1d(j, d.Lx, x);
          } else {
            for (int jx = 0; jx < shared->k; ++jx)
              for (int jy = 0; jy < shared->k; ++jy)
                acc += shared->coeffs[static_cast<std::size_t>(jx) * shared->k + jy] *
                       detail::phi_1d(jx, d.Lx, x) * detail::phi_1d(jy, d.Ly, y);
          }
          return acc;
        };
      }
    }
    throw ConfigError("initial: bad preset");
  }
};

struct SweepSpec {
  std::vector<RegularizationLevel> schedule;
  std::vector<double> comparison_times;
};

struct RunConfig {
  ModelParams model;
  RegularizationLevel level;
  Domain domain;
  SolverConfig solver;
  InitialSpec initial;
  std::optional<SweepSpec> sweep;
  std::string out_dir = "out";
  bool deterministic = false;
  long seed = 0;

  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j, bool need_solver = true);
};

namespace detail {

inline void reject_unknown(const nlohmann::json& j, const std::string& section,
                           const std::set<std::string>& allowed) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key()))
      throw ConfigError("config: unknown key '" + (section.empty() ? it.key() : section + "." + it.key()) +
                        "'");
}

inline double num(const nlohmann::json& j, const char* section, const char* key, double fallback,
                  bool required = false) {
  if (!j.contains(key)) {
    if (required) throw ConfigError(std::string("config: missing key '") + section + "." + key + "'");
    return fallback;
  }
  if (!j.at(key).is_number())
    throw ConfigError(std::string("config: key '") + section + "." + key + "' must be a number");
  return j.at(key).get<double>();
}

}  // namespace detail

inline nlohmann::json RunConfig::to_json() const {
  nlohmann::json j;
  j["model"] = model;
  j["level"] = level;
  j["domain"] = domain;
  j["solver"] = {{"rel_tol", solver.rel_tol},
                 {"abs_tol", solver.abs_tol},
                 {"dt_init", solver.dt_init},
                 {"dt_min", solver.dt_min},
                 {"dt_max", solver.dt_max},
                 {"blowup_threshold", solver.blowup_threshold},
                 {"t_end", solver.t_end},
                 {"snapshot_stride", solver.snapshot_stride},
                 {"state_cap", solver.state_cap}};
  if (std::isfinite(solver.dt_max)) j["solver"]["dt_max"] = solver.dt_max;
  else j["solver"].erase("dt_max");
  nlohmann::json init;
  switch (initial.preset) {
    case InitialSpec::Preset::Constant:
      init["preset"] = "constant";
      init["u_value"] = initial.u_value;
      init["v_value"] = initial.v_value;
      break;
    case InitialSpec::Preset::GaussianBump:
      init["preset"] = "gaussian-bump";
      break;
    case InitialSpec::Preset::TwoBump:
      init["preset"] = "two-bump";
      break;
    case InitialSpec::Preset::File:
      init["preset"] = "file";
      init["u_file"] = initial.u_file;
      init["v_file"] = initial.v_file;
      break;
  }
  if (initial.preset == InitialSpec::Preset::GaussianBump ||
      initial.preset == InitialSpec::Preset::TwoBump) {
    init["u_center"] = initial.u_center;
    init["u_width"] = initial.u_width;
    init["u_amplitude"] = initial.u_amplitude;
    init["u_floor"] = initial.u_floor;
    init["v_center"] = initial.v_center;
    init["v_width"] = initial.v_width;
    init["v_amplitude"] = initial.v_amplitude;
    init["v_floor"] = initial.v_floor;
    if (initial.preset == InitialSpec::Preset::TwoBump) {
      init["u_center2"] = initial.u_center2;
      init["v_center2"] = initial.v_center2;
    }
  }
  init["lift"] = initial.lift;
  if (std::isfinite(initial.target_mass_u)) init["target_mass_u"] = initial.target_mass_u;
  if (std::isfinite(initial.target_mass_v)) init["target_mass_v"] = initial.target_mass_v;
  j["initial"] = init;
  if (sweep) {
    nlohmann::json sw;
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& l : sweep->schedule) pts.push_back(nlohmann::json(l));
    sw["points"] = pts;
    sw["comparison_times"] = sweep->comparison_times;
    j["sweep"] = sw;
  }
  j["output"] = {{"directory", out_dir}, {"deterministic", deterministic}, {"seed", seed}};
  return j;
}

inline RunConfig RunConfig::from_json(const nlohmann::json& j, bool need_solver) {
  if (!j.is_object()) throw ConfigError("config: document must be a table");
  detail::reject_unknown(j, "", {"model", "level", "domain", "solver", "initial", "sweep", "output"});
  RunConfig c;

  if (!j.contains("model")) throw ConfigError("config: missing [model]");
  detail::reject_unknown(j.at("model"), "model",
                         {"d1", "d2", "chi1", "chi2", "m1", "m2", "q1", "q2", "lambda1", "lambda2",
                          "mu1", "mu2", "a1", "a2", "kinetics", "n"});
  try {
    c.model = j.at("model").get<ModelParams>();
    c.model.validate();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config: [model] ") + e.what());
  }

  if (j.contains("level")) {
    detail::reject_unknown(j.at("level"), "level", {"alpha", "delta", "epsilon", "k"});
    try {
      c.level = j.at("level").get<RegularizationLevel>();
      c.level.validate();
    } catch (const std::exception& e) {
      throw ConfigError(std::string("config: [level] ") + e.what());
    }
  }

  if (j.contains("domain")) {
    detail::reject_unknown(j.at("domain"), "domain", {"shape", "L", "Lx", "Ly", "oversample"});
    try {
      c.domain = j.at("domain").get<Domain>();
      c.domain.validate();
    } catch (const std::exception& e) {
      throw ConfigError(std::string("config: [domain] ") + e.what());
    }
    if ((c.domain.dim() == 1) != (c.model.n == 1))
      throw ConfigError("config: domain shape and model.n disagree");
  }

  if (j.contains("solver")) {
    const nlohmann::json& s = j.at("solver");
    detail::reject_unknown(s, "solver",
                           {"rel_tol", "abs_tol", "dt_init", "dt_min", "dt_max", "blowup_threshold",
                            "t_end", "snapshot_stride", "state_cap", "capture_times"});
    c.solver.rel_tol = detail::num(s, "solver", "rel_tol", c.solver.rel_tol);
    c.solver.abs_tol = detail::num(s, "solver", "abs_tol", c.solver.abs_tol);
    c.solver.dt_init = detail::num(s, "solver", "dt_init", c.solver.dt_init);
    c.solver.dt_min = detail::num(s, "solver", "dt_min", c.solver.dt_min);
    c.solver.dt_max = detail::num(s, "solver", "dt_max", c.solver.dt_max);
    c.solver.blowup_threshold = detail::num(s, "solver", "blowup_threshold", c.solver.blowup_threshold);
    c.solver.t_end = detail::num(s, "solver", "t_end", c.solver.t_end, true);
    c.solver.snapshot_stride = static_cast<int>(detail::num(s, "solver", "snapshot_stride", 10));
    c.solver.state_cap = detail::num(s, "solver", "state_cap", 0.0);
    if (s.contains("capture_times")) c.solver.capture_times = s.at("capture_times").get<std::vector<double>>();
    try {
      c.solver.validate();
    } catch (const std::exception& e) {
      throw ConfigError(std::string("config: [solver] ") + e.what());
    }
  } else if (need_solver) {
    throw ConfigError("config: missing [solver]");
  }

  if (j.contains("initial")) {
    const nlohmann::json& s = j.at("initial");
    detail::reject_unknown(s, "initial",
                           {"preset", "u_value", "v_value", "u_center", "u_width", "u_amplitude",
                            "u_floor", "u_center2", "v_center", "v_width", "v_amplitude", "v_floor",
                            "v_center2", "u_file", "v_file", "lift", "target_mass_u", "target_mass_v"});
    const std::string preset = s.value("preset", "constant");
    if (preset == "constant")
      c.initial.preset = InitialSpec::Preset::Constant;
    else if (preset == "gaussian-bump")
      c.initial.preset = InitialSpec::Preset::GaussianBump;
    else if (preset == "two-bump")
      c.initial.preset = InitialSpec::Preset::TwoBump;
    else if (preset == "file")
      c.initial.preset = InitialSpec::Preset::File;
    else
      throw ConfigError("config: initial.preset must be constant, gaussian-bump, two-bump or file");
    c.initial.u_value = detail::num(s, "initial", "u_value", 1.0);
    c.initial.v_value = detail::num(s, "initial", "v_value", 1.0);
    c.initial.u_center = detail::num(s, "initial", "u_center", 0.5);
    c.initial.u_width = detail::num(s, "initial", "u_width", 0.1);
    c.initial.u_amplitude = detail::num(s, "initial", "u_amplitude", 1.0);
    c.initial.u_floor = detail::num(s, "initial", "u_floor", 0.1);
    c.initial.u_center2 = detail::num(s, "initial", "u_center2", 0.0);
    c.initial.v_center = detail::num(s, "initial", "v_center", 0.5);
    c.initial.v_width = detail::num(s, "initial", "v_width", 0.1);
    c.initial.v_amplitude = detail::num(s, "initial", "v_amplitude", 1.0);
    c.initial.v_floor = detail::num(s, "initial", "v_floor", 0.1);
    c.initial.v_center2 = detail::num(s, "initial", "v_center2", 0.0);
    c.initial.u_file = s.value("u_file", "");
    c.initial.v_file = s.value("v_file", "");
    c.initial.lift = detail::num(s, "initial", "lift", 0.1);
    c.initial.target_mass_u =
        detail::num(s, "initial", "target_mass_u", std::numeric_limits<double>::quiet_NaN());
    c.initial.target_mass_v =
        detail::num(s, "initial", "target_mass_v", std::numeric_limits<double>::quiet_NaN());
    if (!(c.initial.lift > 0.0)) throw ConfigError("config: initial.lift must be positive");
  }

  if (j.contains("sweep")) {
    const nlohmann::json& s = j.at("sweep");
    detail::reject_unknown(s, "sweep", {"axis", "values", "points", "comparison_times"});
    SweepSpec sw;
    if (s.contains("points")) {
      for (const auto& pj : s.at("points")) {
        RegularizationLevel l = c.level;
        if (pj.contains("alpha")) l.alpha = pj.at("alpha").get<double>();
        if (pj.contains("delta")) l.delta = pj.at("delta").get<double>();
        if (pj.contains("epsilon")) l.epsilon = pj.at("epsilon").get<double>();
        if (pj.contains("k")) l.k = pj.at("k").get<int>();
        sw.schedule.push_back(l);
      }
    } else if (s.contains("axis") && s.contains("values")) {
      const std::string axis = s.at("axis").get<std::string>();
      for (const auto& vj : s.at("values")) {
        RegularizationLevel l = c.level;
        if (axis == "k")
          l.k = vj.get<int>();
        else if (axis == "delta")
          l.delta = vj.get<double>();
        else if (axis == "epsilon")
          l.epsilon = vj.get<double>();
        else if (axis == "alpha")
          l.alpha = vj.get<double>();
        else
          throw ConfigError("config: sweep.axis must be k, delta, epsilon or alpha");
        sw.schedule.push_back(l);
      }
    }
    if (sw.schedule.empty()) throw ConfigError("config: sweep schedule is empty");
    if (s.contains("comparison_times"))
      sw.comparison_times = s.at("comparison_times").get<std::vector<double>>();
    if (sw.comparison_times.empty()) sw.comparison_times = {c.solver.t_end};
    for (double t : sw.comparison_times)
      if (!(t >= 0.0 && t <= c.solver.t_end))
        throw ConfigError("config: sweep comparison times must lie in [0, t_end]");
    c.sweep = std::move(sw);
  }

  if (j.contains("output")) {
    const nlohmann::json& s = j.at("output");
    detail::reject_unknown(s, "output", {"directory", "deterministic", "seed"});
    c.out_dir = s.value("directory", c.out_dir);
    c.deterministic = s.value("deterministic", false);
    c.seed = s.value("seed", 0L);
  }
  return c;
}

inline RunConfig parse_config_text(const std::string& text, bool json_format, bool need_solver = true) {
  nlohmann::json j;
  if (json_format) {
    try {
      j = nlohmann::json::parse(text);
    } catch (const std::exception& e) {
      throw ConfigError(std::string("config: JSON parse error: ") + e.what());
    }
  } else {
    j = toml::parse(text);
  }
  return RunConfig::from_json(j, need_solver);
}

inline RunConfig load_config(const std::string& path, bool json_format, bool need_solver = true) {
  std::ifstream f(path);
  if (!f) throw ConfigError("config: cannot open '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str(), json_format, need_solver);
}

}  // namespace xdif
