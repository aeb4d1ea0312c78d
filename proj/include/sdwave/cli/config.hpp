#pragma once

// Run configuration: one JSON document, validated with defaults applied.
// Every error message carries the line of the offending key.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <optional>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sdwave/domain.hpp"
#include "sdwave/errors.hpp"
#include "sdwave/functionals.hpp"
#include "sdwave/galerkin.hpp"
#include "sdwave/random_fields.hpp"

namespace sdwave::cli {

using nlohmann::json;

enum class InitialType { Eigenmode, Random, File };

struct InitialSpec {
  InitialType type = InitialType::Eigenmode;
  double amplitude = 0.0;
  MultiIndex mode;  // empty means (1, ..., 1)
  double velocity_amplitude = 0.0;
  std::uint64_t seed = 1;
  std::string path;
};

struct WellSpec {
  int trial_count = 32;
  double safety = 0.5;
  std::uint64_t seed = 12345;
};

struct OutputSpec {
  std::string csv_path = "trajectory.csv";
  std::string json_path = "summary.json";
};

struct ConvergeSpec {
  std::vector<int> m_list{4, 8, 16};
};

struct DependSpec {
  std::vector<double> epsilons{1e-3, 1e-4};
  std::vector<double> sample_times;  // empty: ten evenly spaced times up to t_end
  std::uint64_t seed = 7;
};

struct RunConfig {
  DomainSpec domain;
  ModelParams model;
  SolverConfig solver;
  InitialSpec initial;
  WellSpec well;
  OutputSpec outputs;
  ConvergeSpec converge;
  DependSpec depend;

  /// --seed on the command line replaces every seed in the document.
  void override_seed(std::uint64_t seed) {
    initial.seed = seed;
    well.seed = seed;
    depend.seed = seed;
  }

  std::vector<double> depend_times() const {
    if (!depend.sample_times.empty()) return depend.sample_times;
    std::vector<double> t;
    for (int i = 1; i <= 10; ++i) t.push_back(solver.t_end * i / 10.0);
    return t;
  }
};

namespace detail {

inline int line_of_offset(const std::string& text, std::size_t offset) {
  offset = std::min(offset, text.size());
  int line = 1;
  for (std::size_t i = 0; i < offset; ++i)
    if (text[i] == '\n') ++line;
  return line;
}

// Locates `"section"` then `"key"` after it; falls back to the section line
// (or line 1) when the key is absent.
inline int line_of_key(const std::string& text, const std::string& section, const std::string& key) {
  std::size_t from = 0;
  if (!section.empty()) {
    const auto s = text.find("\"" + section + "\"");
    if (s == std::string::npos) return 1;
    from = s;
    if (key.empty()) return line_of_offset(text, s);
  }
  const auto k = text.find("\"" + key + "\"", from);
  return line_of_offset(text, k == std::string::npos ? from : k);
}

class Reader {
 public:
  explicit Reader(const std::string& text) : text_(text) {}

  [[noreturn]] void fail(const std::string& section, const std::string& key, const std::string& msg) const {
    std::ostringstream os;
    os << "config line " << line_of_key(text_, section, key) << ": ";
    os << section << (!section.empty() && !key.empty() ? "." : "") << key << ": " << msg;
    throw ConfigError(os.str());
  }

  const json& object(const json& root, const std::string& section, bool required) const {
    static const json empty = json::object();
    if (!root.contains(section)) {
      if (required) fail("", section, "missing required section");
      return empty;
    }
    const auto& v = root.at(section);
    if (!v.is_object()) fail("", section, "expected an object");
    return v;
  }

  void reject_unknown(const json& obj, const std::string& section, const std::set<std::string>& allowed) const {
    for (const auto& [k, v] : obj.items()) {
      (void)v;
      if (!allowed.count(k)) fail(section, k, "unknown key");
    }
  }

  double number(const json& obj, const std::string& section, const std::string& key, std::optional<double> def) const {
    if (!obj.contains(key)) {
      if (!def) fail(section, key, "missing required key");
      return *def;
    }
    const auto& v = obj.at(key);
    if (!v.is_number()) fail(section, key, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(section, key, "value is not finite");
    return d;
  }

  long long integer(const json& obj, const std::string& section, const std::string& key,
                    std::optional<long long> def) const {
    if (!obj.contains(key)) {
      if (!def) fail(section, key, "missing required key");
      return *def;
    }
    const auto& v = obj.at(key);
    if (!v.is_number_integer()) fail(section, key, "expected an integer");
    return v.get<long long>();
  }

  bool boolean(const json& obj, const std::string& section, const std::string& key, bool def) const {
    if (!obj.contains(key)) return def;
    const auto& v = obj.at(key);
    if (!v.is_boolean()) fail(section, key, "expected true or false");
    return v.get<bool>();
  }

  std::string string(const json& obj, const std::string& section, const std::string& key,
                     const std::string& def) const {
    if (!obj.contains(key)) return def;
    const auto& v = obj.at(key);
    if (!v.is_string()) fail(section, key, "expected a string");
    return v.get<std::string>();
  }

  /// A number, or a string "pi", "2pi", "0.5*pi".
  double length(const json& obj, const std::string& section, const std::string& key) const {
    if (!obj.contains(key)) fail(section, key, "missing required key");
    const auto& v = obj.at(key);
    if (v.is_number()) return number(obj, section, key, std::nullopt);
    if (v.is_string()) {
      static const std::regex pi_form(R"(^\s*([0-9]*\.?[0-9]*(?:[eE][+-]?[0-9]+)?)\s*\*?\s*pi\s*$)");
      std::smatch m;
      const auto s = v.get<std::string>();
      if (std::regex_match(s, m, pi_form)) {
        const double factor = m[1].str().empty() ? 1.0 : std::stod(m[1].str());
        return factor * std::numbers::pi;
      }
    }
    fail(section, key, "expected a number or a multiple of pi such as \"pi\" or \"2pi\"");
  }

 private:
  const std::string& text_;
};

}  // namespace detail

inline RunConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("config line " + std::to_string(detail::line_of_offset(text, e.byte > 0 ? e.byte - 1 : 0)) +
                      ": malformed JSON: " + e.what());
  }
  if (!root.is_object()) throw ConfigError("config line 1: top level must be an object");

  const detail::Reader rd(text);
  rd.reject_unknown(root, "",
                    {"domain", "model", "solver", "initial", "well", "outputs", "converge", "depend"});
  RunConfig cfg;

  const auto& dom = rd.object(root, "domain", true);
  rd.reject_unknown(dom, "domain", {"dim", "length", "modes_per_dim", "oversample"});
  cfg.domain.dim = static_cast<int>(rd.integer(dom, "domain", "dim", std::nullopt));
  cfg.domain.length = rd.length(dom, "domain", "length");
  cfg.domain.modes_per_dim = static_cast<int>(rd.integer(dom, "domain", "modes_per_dim", 8));
  cfg.domain.oversample = static_cast<int>(rd.integer(dom, "domain", "oversample", 2));
  try {
    cfg.domain.validate();
  } catch (const ParameterError& e) {
    rd.fail("domain", "", e.what());
  }

  const auto& mod = rd.object(root, "model", true);
  rd.reject_unknown(mod, "model", {"gamma", "unsafe_gamma", "source_enabled"});
  cfg.model.gamma = rd.number(mod, "model", "gamma", std::nullopt);
  cfg.model.unsafe_gamma = rd.boolean(mod, "model", "unsafe_gamma", false);
  cfg.model.source_enabled = rd.boolean(mod, "model", "source_enabled", true);
  cfg.model.dim = cfg.domain.dim;
  try {
    cfg.model.validate();
  } catch (const ParameterError& e) {
    rd.fail("model", "gamma", e.what());
  }

  const auto& sol = rd.object(root, "solver", false);
  rd.reject_unknown(sol, "solver", {"dt", "t_end", "scheme", "blowup_threshold", "report_every"});
  cfg.solver.dt = rd.number(sol, "solver", "dt", 1e-3);
  cfg.solver.t_end = rd.number(sol, "solver", "t_end", 20.0);
  cfg.solver.blowup_threshold = rd.number(sol, "solver", "blowup_threshold", 1e8);
  cfg.solver.report_every = static_cast<int>(rd.integer(sol, "solver", "report_every", 10));
  const auto scheme = rd.string(sol, "solver", "scheme", "IMEX2");
  if (scheme == "IMEX2")
    cfg.solver.scheme = Scheme::IMEX2;
  else if (scheme == "IMEX1")
    cfg.solver.scheme = Scheme::IMEX1;
  else
    rd.fail("solver", "scheme", "expected \"IMEX2\" or \"IMEX1\"");
  try {
    cfg.solver.validate();
  } catch (const ParameterError& e) {
    rd.fail("solver", "", e.what());
  }

  const auto& ini = rd.object(root, "initial", true);
  rd.reject_unknown(ini, "initial", {"type", "amplitude", "mode", "velocity_amplitude", "seed", "path"});
  const auto type = rd.string(ini, "initial", "type", "eigenmode");
  if (type == "eigenmode")
    cfg.initial.type = InitialType::Eigenmode;
  else if (type == "random")
    cfg.initial.type = InitialType::Random;
  else if (type == "file")
    cfg.initial.type = InitialType::File;
  else
    rd.fail("initial", "type", "expected \"eigenmode\", \"random\" or \"file\"");
  if (cfg.initial.type == InitialType::File) {
    cfg.initial.amplitude = rd.number(ini, "initial", "amplitude", 1.0);
    cfg.initial.path = rd.string(ini, "initial", "path", "");
    if (cfg.initial.path.empty()) rd.fail("initial", "path", "required when type is \"file\"");
  } else {
    cfg.initial.amplitude = rd.number(ini, "initial", "amplitude", std::nullopt);
  }
  cfg.initial.velocity_amplitude = rd.number(ini, "initial", "velocity_amplitude", 0.0);
  cfg.initial.seed = static_cast<std::uint64_t>(rd.integer(ini, "initial", "seed", 1));
  if (ini.contains("mode")) {
    const auto& m = ini.at("mode");
    if (!m.is_array()) rd.fail("initial", "mode", "expected an array of integers");
    for (const auto& v : m) {
      if (!v.is_number_integer()) rd.fail("initial", "mode", "expected an array of integers");
      cfg.initial.mode.push_back(v.get<int>());
    }
    try {
      (void)eigenpair(cfg.domain, cfg.initial.mode);
    } catch (const std::exception& e) {
      rd.fail("initial", "mode", e.what());
    }
  }

  const auto& well = rd.object(root, "well", false);
  rd.reject_unknown(well, "well", {"trial_count", "safety", "seed"});
  cfg.well.trial_count = static_cast<int>(rd.integer(well, "well", "trial_count", 32));
  cfg.well.safety = rd.number(well, "well", "safety", 0.5);
  cfg.well.seed = static_cast<std::uint64_t>(rd.integer(well, "well", "seed", 12345));
  if (cfg.well.trial_count < 0) rd.fail("well", "trial_count", "must be >= 0");
  if (!(cfg.well.safety > 0.0 && cfg.well.safety <= 1.0)) rd.fail("well", "safety", "must lie in (0, 1]");

  const auto& out = rd.object(root, "outputs", false);
  rd.reject_unknown(out, "outputs", {"csv_path", "json_path"});
  cfg.outputs.csv_path = rd.string(out, "outputs", "csv_path", cfg.outputs.csv_path);
  cfg.outputs.json_path = rd.string(out, "outputs", "json_path", cfg.outputs.json_path);
  if (cfg.outputs.csv_path.empty()) rd.fail("outputs", "csv_path", "must not be empty");
  if (cfg.outputs.json_path.empty()) rd.fail("outputs", "json_path", "must not be empty");

  const auto& conv = rd.object(root, "converge", false);
  rd.reject_unknown(conv, "converge", {"m_list"});
  if (conv.contains("m_list")) {
    const auto& ml = conv.at("m_list");
    if (!ml.is_array() || ml.empty()) rd.fail("converge", "m_list", "expected a nonempty array of integers");
    cfg.converge.m_list.clear();
    for (const auto& v : ml) {
      if (!v.is_number_integer() || v.get<int>() < 1) rd.fail("converge", "m_list", "entries must be integers >= 1");
      if (!cfg.converge.m_list.empty() && v.get<int>() <= cfg.converge.m_list.back())
        rd.fail("converge", "m_list", "entries must be strictly increasing");
      cfg.converge.m_list.push_back(v.get<int>());
    }
  }

  const auto& dep = rd.object(root, "depend", false);
  rd.reject_unknown(dep, "depend", {"epsilons", "sample_times", "seed"});
  const auto real_list = [&](const char* key, std::vector<double>& dst) {
    if (!dep.contains(key)) return;
    const auto& a = dep.at(key);
    if (!a.is_array() || a.empty()) rd.fail("depend", key, "expected a nonempty array of numbers");
    dst.clear();
    for (const auto& v : a) {
      if (!v.is_number() || v.get<double>() < 0.0) rd.fail("depend", key, "entries must be numbers >= 0");
      dst.push_back(v.get<double>());
    }
  };
  real_list("epsilons", cfg.depend.epsilons);
  real_list("sample_times", cfg.depend.sample_times);
  cfg.depend.seed = static_cast<std::uint64_t>(rd.integer(dep, "depend", "seed", 7));

  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

/// Initial displacement and velocity on `domain`. The velocity has the same
/// shape as the displacement, scaled by velocity_amplitude.
inline std::pair<ModalField, ModalField> build_initial(const RunConfig& cfg, const DomainPtr& domain) {
  const auto& ini = cfg.initial;
  ModalField shape(domain);
  switch (ini.type) {
    case InitialType::Eigenmode: {
      auto k = ini.mode.empty() ? MultiIndex(static_cast<std::size_t>(domain->dim()), 1) : ini.mode;
      shape = eigenmode(domain, k);
      break;
    }
    case InitialType::Random:
      shape = random_band_limited(domain, ini.seed);
      break;
    case InitialType::File: {
      std::ifstream in(ini.path);
      if (!in) throw ConfigError("cannot open initial-data file " + ini.path);
      json doc;
      try {
        doc = json::parse(in);
      } catch (const json::parse_error& e) {
        throw ConfigError("initial-data file " + ini.path + ": " + e.what());
      }
      const auto coeffs = [&](const char* key) {
        if (!doc.contains(key)) return std::vector<double>(domain->mode_count(), 0.0);
        auto v = doc.at(key).get<std::vector<double>>();
        if (v.size() != domain->mode_count())
          throw ConfigError("initial-data file " + ini.path + ": \"" + key + "\" has " + std::to_string(v.size()) +
                            " coefficients, expected " + std::to_string(domain->mode_count()));
        return v;
      };
      ModalField u0(domain, coeffs("u0"));
      ModalField u1(domain, coeffs("u1"));
      u0 *= ini.amplitude;
      u1 *= ini.amplitude;
      return {u0, u1};
    }
  }
  return {ini.amplitude * shape, ini.velocity_amplitude * shape};
}

}  // namespace sdwave::cli
