#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "gauge_reduce/csv.hpp"
#include "gauge_reduce/errors.hpp"
#include "gauge_reduce/gauge.hpp"
#include "gauge_reduce/lattice.hpp"

namespace gauge_reduce {

/// Field file: a header line "dim N kind", then one line per site (site
/// order as in Lattice::site) holding that site's components. Lines starting
/// with '#' are ignored.
struct FieldFile {
  int dim = 1;
  int sites_per_dim = 2;
  FieldKind kind = FieldKind::doublet;
  Eigen::VectorXd values;  ///< SiteField layout
};

namespace detail {
inline double field_real(const std::string& tok, const std::string& source, int lineno) {
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end != tok.c_str() + tok.size() || !std::isfinite(v)) {
    throw ConfigError(source + ":" + std::to_string(lineno) + ": bad number '" + tok + "'");
  }
  return v;
}
}  // namespace detail

inline FieldKind parse_field_kind(const std::string& s) {
  if (s == "scalar") return FieldKind::scalar;
  if (s == "vector") return FieldKind::vector;
  if (s == "doublet") return FieldKind::doublet;
  throw ConfigError("field file: unknown kind '" + s + "'");
}

inline FieldFile parse_field_text(const std::string& text, const std::string& source = "<field>") {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  auto next = [&](std::string& out) {
    while (std::getline(in, line)) {
      ++lineno;
      const auto b = line.find_first_not_of(" \t\r");
      if (b == std::string::npos || line[b] == '#') continue;
      out = line;
      return true;
    }
    return false;
  };
  std::string hdr;
  if (!next(hdr)) throw ConfigError(source + ": empty field file");
  FieldFile ff;
  std::string kind;
  {
    std::istringstream h(hdr);
    std::string extra;
    if (!(h >> ff.dim >> ff.sites_per_dim >> kind) || (h >> extra)) {
      throw ConfigError(source + ":" + std::to_string(lineno) + ": header must be 'dim N kind'");
    }
  }
  ff.kind = parse_field_kind(kind);
  const LatticeSpec spec{ff.dim, ff.sites_per_dim, 1.0};
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(source + ": " + e.what());
  }
  const std::size_t V = spec.volume();
  const std::size_t per = components_per_site(ff.kind, ff.dim);
  ff.values.resize(static_cast<Eigen::Index>(V * per));
  for (std::size_t x = 0; x < V; ++x) {
    std::string row;
    if (!next(row)) throw ConfigError(source + ": expected " + std::to_string(V) + " site lines");
    std::istringstream r(row);
    for (std::size_t c = 0; c < per; ++c) {
      std::string tok;
      if (!(r >> tok)) throw ConfigError(source + ":" + std::to_string(lineno) + ": too few components");
      const double v = detail::field_real(tok, source, lineno);
      const Eigen::Index idx = ff.kind == FieldKind::vector ? static_cast<Eigen::Index>(c * V + x)
                                                            : static_cast<Eigen::Index>(per * x + c);
      ff.values[idx] = v;
    }
    std::string extra;
    if (r >> extra) throw ConfigError(source + ":" + std::to_string(lineno) + ": too many components");
  }
  std::string extra;
  if (next(extra)) throw ConfigError(source + ":" + std::to_string(lineno) + ": unexpected trailing line");
  return ff;
}

inline FieldFile read_field_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open field file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_field_text(ss.str(), path);
}

template <FieldKind K>
std::string format_field_file(const Lattice& lat, const SiteField<K>& u) {
  detail::require_matches(lat, u, "format_field_file");
  std::string out = std::to_string(lat.dim()) + " " + std::to_string(lat.extent()) + " " + to_string(K) + "\n";
  const std::size_t per = components_per_site(K, lat.dim());
  for (std::size_t x = 0; x < lat.volume(); ++x) {
    for (std::size_t c = 0; c < per; ++c) {
      if (c) out += ' ';
      const Eigen::Index idx = K == FieldKind::vector ? vector_index(lat, static_cast<int>(c), x)
                                                      : static_cast<Eigen::Index>(per * x + c);
      out += csv_real(u[idx]);
    }
    out += '\n';
  }
  return out;
}

/// Random fields with i.i.d. N(0, amplitude^2) components.
template <FieldKind K>
SiteField<K> random_field(const Lattice& lat, std::mt19937_64& rng, double amplitude = 1.0) {
  std::normal_distribution<double> nd(0.0, 1.0);
  SiteField<K> u = SiteField<K>::zeros(lat);
  for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = amplitude * nd(rng);
  return u;
}

inline FieldPair random_field_pair(const Lattice& lat, double g0, std::mt19937_64& rng, double amplitude = 1.0) {
  SiteVector A = random_field<FieldKind::vector>(lat, rng, amplitude);
  SiteDoublet f = random_field<FieldKind::doublet>(lat, rng, amplitude);
  return {std::move(A), std::move(f), g0};
}

}  // namespace gauge_reduce
