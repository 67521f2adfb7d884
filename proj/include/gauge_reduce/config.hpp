#pragma once

#include <cerrno>
#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "gauge_reduce/errors.hpp"
#include "gauge_reduce/lattice.hpp"
#include "gauge_reduce/stochastic.hpp"

namespace gauge_reduce {

enum class ValueKind { integer, unsigned_integer, real, boolean, text };

struct ConfigKey {
  const char* key;
  ValueKind kind;
  const char* fallback;
  const char* help;
  const char* choices = nullptr;  ///< '|'-separated allowed values for text keys
};

/// Every accepted key. Anything else in a config file is an error.
inline const std::vector<ConfigKey>& config_schema() {
  static const std::vector<ConfigKey> schema = {
      {"lattice.dim", ValueKind::integer, "2", "spatial dimension s (1..3)"},
      {"lattice.n", ValueKind::integer, "4", "sites per direction (>= 2)"},
      {"lattice.spacing", ValueKind::real, "1", "lattice spacing h (> 0)"},
      {"model.g0", ValueKind::real, "1", "gauge coupling (> 0)"},
      {"model.mu", ValueKind::real, "1", "mu, with mu^2 = hbar (> 0)"},
      {"model.kappa", ValueKind::real, "1", "kappa (> 0)"},
      {"model.m", ValueKind::real, "1", "mass parameter of the quantum correction (> 0)"},
      {"model.lambda", ValueKind::real, "0", "quartic self-coupling (>= 0)"},
      {"model.vev", ValueKind::real, "0", "vacuum value of |f| in the quartic term"},
      {"sde.dt", ValueKind::real, "0.001", "Euler-Maruyama step (> 0)"},
      {"sde.n_steps", ValueKind::unsigned_integer, "100", "number of steps (>= 1)"},
      {"sde.n_paths", ValueKind::unsigned_integer, "1000", "number of paths (>= 2)"},
      {"sde.seed", ValueKind::unsigned_integer, "1", "run seed"},
      {"check.trials", ValueKind::unsigned_integer, "10", "random points per randomized check"},
      {"check.seed", ValueKind::unsigned_integer, "12345", "seed of the check suite"},
      {"check.corrupt_projector", ValueKind::boolean, "false", "perturb P_perp before checking (negative control)"},
      {"jacobian.field", ValueKind::text, "random", "source of f~", "uniform|random|file"},
      {"jacobian.amplitude", ValueKind::real, "1", "amplitude of generated fields"},
      {"jacobian.seed", ValueKind::unsigned_integer, "1", "seed of the random field"},
      {"jacobian.file", ValueKind::text, "", "field file used with jacobian.field=file"},
      {"simulate.process", ValueKind::text, "original", "process to integrate", "original|reduced"},
      {"simulate.observable", ValueKind::text, "one", "phi0 at the end point", "one|f2|a2"},
      {"simulate.potential", ValueKind::text, "zero", "V in the Feynman-Kac weight", "zero|constant|lattice|effective"},
      {"simulate.constant", ValueKind::real, "0", "value of V for simulate.potential=constant"},
      {"simulate.flat_override", ValueKind::boolean, "false", "drop the reduced drift"},
      {"simulate.init_amplitude", ValueKind::real, "1", "amplitude of the random initial field"},
      {"simulate.init_seed", ValueKind::unsigned_integer, "7", "seed of the random initial field"},
      {"oracle.toy", ValueKind::text, "mehler", "toy problem", "mehler|girsanov"},
      {"oracle.dof", ValueKind::integer, "1", "degrees of freedom of the Mehler toy (1..3)"},
      {"oracle.omega", ValueKind::real, "1", "omega in V = -omega^2 |x|^2 / 2"},
      {"oracle.width", ValueKind::real, "1", "width of the Gaussian phi0"},
      {"oracle.x0", ValueKind::real, "0.3", "start point (every coordinate)"},
      {"oracle.grid_points", ValueKind::integer, "101", "interior grid points per axis (odd)"},
      {"oracle.box_halfwidth", ValueKind::real, "6", "half width of the grid box"},
      {"output.dir", ValueKind::text, ".", "directory for CSV output"},
  };
  return schema;
}

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline const ConfigKey* find_key(std::string_view key) {
  for (const auto& k : config_schema()) {
    if (key == k.key) return &k;
  }
  return nullptr;
}

inline std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_real(const std::string& key, const std::string& v) {
  errno = 0;
  char* end = nullptr;
  const double d = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size() || errno == ERANGE || !std::isfinite(d)) {
    throw ConfigError(key + ": expected a finite real number, got '" + v + "'");
  }
  return d;
}

inline long long parse_integer(const std::string& key, const std::string& v) {
  errno = 0;
  char* end = nullptr;
  const long long i = std::strtoll(v.c_str(), &end, 10);
  if (v.empty() || end != v.c_str() + v.size() || errno == ERANGE) {
    throw ConfigError(key + ": expected an integer, got '" + v + "'");
  }
  return i;
}

inline std::uint64_t parse_unsigned(const std::string& key, const std::string& v) {
  errno = 0;
  char* end = nullptr;
  if (!v.empty() && v[0] == '-') throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  const unsigned long long i = std::strtoull(v.c_str(), &end, 10);
  if (v.empty() || end != v.c_str() + v.size() || errno == ERANGE) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  }
  return i;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

/// Normal form of a value, so that equivalent spellings hash alike.
inline std::string canonical_value(const ConfigKey& k, const std::string& v) {
  switch (k.kind) {
    case ValueKind::integer: return std::to_string(parse_integer(k.key, v));
    case ValueKind::unsigned_integer: return std::to_string(parse_unsigned(k.key, v));
    case ValueKind::real: return format_real(parse_real(k.key, v));
    case ValueKind::boolean: return parse_bool(k.key, v) ? "true" : "false";
    case ValueKind::text:
      if (k.choices) {
        std::string_view all(k.choices);
        bool ok = false;
        while (!all.empty()) {
          const auto bar = all.find('|');
          if (all.substr(0, bar) == v) ok = true;
          if (bar == std::string_view::npos) break;
          all.remove_prefix(bar + 1);
        }
        if (!ok) throw ConfigError(std::string(k.key) + ": '" + v + "' is not one of " + k.choices);
      }
      return v;
  }
  return v;
}

}  // namespace detail

/// FNV-1a, 64 bit.
inline std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Flat key=value configuration. Lines may carry '#' comments; keys are
/// dotted (section.name) and must appear in config_schema().
class KeyValueConfig {
 public:
  KeyValueConfig() {
    for (const auto& k : config_schema()) values_[k.key] = detail::canonical_value(k, k.fallback);
  }

  static KeyValueConfig parse(std::string_view text, const std::string& source = "<config>") {
    KeyValueConfig cfg;
    std::map<std::string, int> seen;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      const std::string t = detail::trim(line);
      if (t.empty()) continue;
      const auto eq = t.find('=');
      const std::string where = source + ":" + std::to_string(lineno) + ": ";
      if (eq == std::string::npos) throw ConfigError(where + "expected key=value");
      const std::string key = detail::trim(std::string_view(t).substr(0, eq));
      const std::string value = detail::trim(std::string_view(t).substr(eq + 1));
      if (seen.count(key)) {
        throw ConfigError(where + "duplicate key '" + key + "' (first on line " + std::to_string(seen[key]) + ")");
      }
      seen[key] = lineno;
      try {
        cfg.set(key, value);
      } catch (const ConfigError& e) {
        throw ConfigError(where + e.what());
      }
    }
    return cfg;
  }

  static KeyValueConfig load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path);
  }

  void set(const std::string& key, const std::string& value) {
    const ConfigKey* k = detail::find_key(key);
    if (!k) throw ConfigError("unknown key '" + key + "'");
    values_[key] = detail::canonical_value(*k, value);
  }

  /// "key=value" override as given on the command line.
  void set_assignment(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' is not key=value");
    set(detail::trim(std::string_view(assignment).substr(0, eq)),
        detail::trim(std::string_view(assignment).substr(eq + 1)));
  }

  [[nodiscard]] const std::string& raw(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("unknown key '" + key + "'");
    return it->second;
  }
  [[nodiscard]] double real(const std::string& key) const { return detail::parse_real(key, raw(key)); }
  [[nodiscard]] long long integer(const std::string& key) const { return detail::parse_integer(key, raw(key)); }
  [[nodiscard]] std::uint64_t unsigned_integer(const std::string& key) const {
    return detail::parse_unsigned(key, raw(key));
  }
  [[nodiscard]] bool boolean(const std::string& key) const { return detail::parse_bool(key, raw(key)); }

  /// Sorted key=value lines of every key, defaults included. The output
  /// directory is left out: it does not change any result.
  [[nodiscard]] std::string canonical() const {
    std::string out;
    for (const auto& [k, v] : values_) {
      if (k != "output.dir") out += k + "=" + v + "\n";
    }
    return out;
  }
  [[nodiscard]] std::uint64_t hash() const { return fnv1a64(canonical()); }

 private:
  std::map<std::string, std::string> values_;
};

/// Typed, validated run parameters.
struct RunConfig {
  LatticeSpec lattice;
  double g0 = 1.0;
  double m = 1.0;
  double lambda = 0.0;
  double vev = 0.0;
  SDEConfig sde;

  struct {
    std::size_t trials = 10;
    std::uint64_t seed = 12345;
    bool corrupt_projector = false;
  } check;

  struct {
    std::string field = "random";
    double amplitude = 1.0;
    std::uint64_t seed = 1;
    std::string file;
  } jacobian;

  struct {
    std::string process = "original";
    std::string observable = "one";
    std::string potential = "zero";
    double constant = 0.0;
    bool flat_override = false;
    double init_amplitude = 1.0;
    std::uint64_t init_seed = 7;
  } simulate;

  struct {
    std::string toy = "mehler";
    int dof = 1;
    double omega = 1.0;
    double width = 1.0;
    double x0 = 0.3;
    int grid_points = 101;
    double box_halfwidth = 6.0;
  } oracle;

  std::string output_dir = ".";
  std::uint64_t hash = 0;

  static RunConfig from(const KeyValueConfig& kv) {
    RunConfig c;
    auto positive = [](const char* key, double v) {
      if (!(v > 0.0)) throw ConfigError(std::string(key) + " must be positive");
      return v;
    };
    c.lattice.dim = static_cast<int>(kv.integer("lattice.dim"));
    c.lattice.sites_per_dim = static_cast<int>(kv.integer("lattice.n"));
    c.lattice.spacing = kv.real("lattice.spacing");
    try {
      c.lattice.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    if (c.lattice.volume() > kMaxDenseSites) {
      throw ConfigError("lattice has " + std::to_string(c.lattice.volume()) + " sites; the limit is " +
                        std::to_string(kMaxDenseSites));
    }
    c.g0 = positive("model.g0", kv.real("model.g0"));
    c.m = positive("model.m", kv.real("model.m"));
    c.lambda = kv.real("model.lambda");
    if (c.lambda < 0.0) throw ConfigError("model.lambda must be non-negative");
    c.vev = kv.real("model.vev");
    c.sde.mu = positive("model.mu", kv.real("model.mu"));
    c.sde.kappa = positive("model.kappa", kv.real("model.kappa"));
    c.sde.dt = positive("sde.dt", kv.real("sde.dt"));
    c.sde.n_steps = kv.unsigned_integer("sde.n_steps");
    c.sde.n_paths = kv.unsigned_integer("sde.n_paths");
    c.sde.seed = kv.unsigned_integer("sde.seed");
    try {
      c.sde.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }

    c.check.trials = kv.unsigned_integer("check.trials");
    if (c.check.trials == 0) throw ConfigError("check.trials must be at least 1");
    c.check.seed = kv.unsigned_integer("check.seed");
    c.check.corrupt_projector = kv.boolean("check.corrupt_projector");

    c.jacobian.field = kv.raw("jacobian.field");
    c.jacobian.amplitude = kv.real("jacobian.amplitude");
    c.jacobian.seed = kv.unsigned_integer("jacobian.seed");
    c.jacobian.file = kv.raw("jacobian.file");

    c.simulate.process = kv.raw("simulate.process");
    c.simulate.observable = kv.raw("simulate.observable");
    c.simulate.potential = kv.raw("simulate.potential");
    c.simulate.constant = kv.real("simulate.constant");
    c.simulate.flat_override = kv.boolean("simulate.flat_override");
    c.simulate.init_amplitude = kv.real("simulate.init_amplitude");
    c.simulate.init_seed = kv.unsigned_integer("simulate.init_seed");
    if (c.simulate.potential == "effective" && c.simulate.process != "reduced") {
      throw ConfigError("simulate.potential=effective needs simulate.process=reduced");
    }

    c.oracle.toy = kv.raw("oracle.toy");
    c.oracle.dof = static_cast<int>(kv.integer("oracle.dof"));
    if (c.oracle.dof < 1 || c.oracle.dof > 3) throw ConfigError("oracle.dof must be 1, 2 or 3");
    c.oracle.omega = kv.real("oracle.omega");
    c.oracle.width = positive("oracle.width", kv.real("oracle.width"));
    c.oracle.x0 = kv.real("oracle.x0");
    c.oracle.grid_points = static_cast<int>(kv.integer("oracle.grid_points"));
    if (c.oracle.grid_points < 3 || c.oracle.grid_points % 2 == 0) {
      throw ConfigError("oracle.grid_points must be odd and at least 3");
    }
    c.oracle.box_halfwidth = positive("oracle.box_halfwidth", kv.real("oracle.box_halfwidth"));

    c.output_dir = kv.raw("output.dir");
    c.hash = kv.hash();
    return c;
  }
};

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
  return buf;
}

}  // namespace gauge_reduce
