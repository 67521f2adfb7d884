#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <filesystem>
#include <optional>
#include <ostream>
#include <random>
#include <string>

#include "gauge_reduce/config.hpp"
#include "gauge_reduce/csv.hpp"
#include "gauge_reduce/field_io.hpp"
#include "gauge_reduce/invariants.hpp"
#include "gauge_reduce/kolmogorov.hpp"
#include "gauge_reduce/orbit_geometry.hpp"
#include "gauge_reduce/stochastic.hpp"

#ifndef GAUGE_REDUCE_VERSION
#define GAUGE_REDUCE_VERSION "0.1.0"
#endif

namespace gauge_reduce {

inline constexpr const char* kVersion = GAUGE_REDUCE_VERSION;

enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitUsage = 2 };

inline std::string provenance_line(const RunConfig& cfg, std::uint64_t seed) {
  return std::string("gauge_reduce ") + kVersion + " config_hash=" + hex64(cfg.hash) + " seed=" + std::to_string(seed);
}

inline std::string output_path(const RunConfig& cfg, const std::string& file) {
  std::filesystem::create_directories(cfg.output_dir);
  return (std::filesystem::path(cfg.output_dir) / file).string();
}

inline int cmd_check(const RunConfig& cfg, std::ostream& log) {
  InvariantSuiteOptions opt;
  opt.lattice = cfg.lattice;
  opt.g0 = cfg.g0;
  opt.self_interaction = {cfg.lambda, cfg.vev};
  opt.trials = cfg.check.trials;
  opt.seed = cfg.check.seed;
  opt.corrupt_projector = cfg.check.corrupt_projector;
  const auto results = run_invariant_suite(opt);

  CsvTable t(provenance_line(cfg, cfg.check.seed), {"check_name", "residual", "tolerance", "pass"});
  bool all = true;
  for (const auto& r : results) {
    t.add_row({r.name, csv_real(r.residual), csv_real(r.tolerance), r.pass ? "true" : "false"});
    all = all && r.pass;
    if (!r.pass) log << "check failed: " << r.name << " residual " << csv_real(r.residual) << "\n";
  }
  const std::string path = output_path(cfg, "check.csv");
  t.write(path);
  log << results.size() << " checks, " << (all ? "all passed" : "FAILURES") << "; wrote " << path << "\n";
  return all ? kExitOk : kExitFailure;
}

/// f~ for `jacobian`: from a field file, a uniform (amplitude, 0) doublet, or
/// a seeded random doublet.
inline SiteDoublet jacobian_field(const RunConfig& cfg, const Lattice& lat, const std::optional<std::string>& file) {
  const std::string source = file ? "file" : cfg.jacobian.field;
  if (source == "file") {
    const std::string path = file ? *file : cfg.jacobian.file;
    if (path.empty()) throw ConfigError("jacobian.field=file needs jacobian.file or --field");
    const FieldFile ff = read_field_file(path);
    if (ff.kind != FieldKind::doublet) throw ConfigError(path + ": expected a doublet field");
    if (ff.dim != lat.dim() || ff.sites_per_dim != lat.extent()) {
      throw ConfigError(path + ": field lattice does not match lattice.dim / lattice.n");
    }
    return SiteDoublet(ff.values);
  }
  if (source == "uniform") {
    SiteDoublet f = SiteDoublet::zeros(lat);
    for (std::size_t x = 0; x < lat.volume(); ++x) f[doublet_index(x, 0)] = cfg.jacobian.amplitude;
    return f;
  }
  std::mt19937_64 rng(cfg.jacobian.seed);
  return random_field<FieldKind::doublet>(lat, rng, cfg.jacobian.amplitude);
}

inline int cmd_jacobian(const RunConfig& cfg, const std::optional<std::string>& field_file, std::ostream& log) {
  const GaugeOperators ops(cfg.lattice);
  const Lattice& lat = ops.lattice();
  const SiteDoublet f = jacobian_field(cfg, lat, field_file);
  const std::string source = field_file ? "file" : cfg.jacobian.field;

  double min_f2 = std::numeric_limits<double>::infinity(), max_f2 = 0.0, sum_f2 = 0.0;
  for (std::size_t x = 0; x < lat.volume(); ++x) {
    const double r = f[doublet_index(x, 0)] * f[doublet_index(x, 0)] + f[doublet_index(x, 1)] * f[doublet_index(x, 1)];
    min_f2 = std::min(min_f2, r);
    max_f2 = std::max(max_f2, r);
    sum_f2 += r;
  }
  CsvTable t(provenance_line(cfg, cfg.jacobian.seed),
             {"field", "sites", "min_f2", "mean_f2", "max_f2", "logdet", "laplace_term", "grad_term", "J",
              "V_correction", "status"});
  std::vector<std::string> row{source, std::to_string(lat.volume()), csv_real(min_f2),
                               csv_real(sum_f2 / static_cast<double>(lat.volume())), csv_real(max_f2)};
  int code = kExitOk;
  try {
    const AdaptedCoords c{SiteVector::zeros(lat), f, SiteScalar::zeros(lat)};
    const JacobianReport r = reduction_jacobian(ops, c, cfg.g0, cfg.sde.mu, cfg.sde.kappa, cfg.m);
    for (double v : {r.logdet, r.laplace_term, r.grad_term, r.J, r.V_correction}) row.push_back(csv_real(v));
    row.emplace_back("ok");
  } catch (const SingularOrbitMetric& e) {
    for (int i = 0; i < 5; ++i) row.emplace_back("nan");
    row.emplace_back("singular_orbit_metric");
    log << "error: " << e.what() << "\n";
    code = kExitFailure;
  }
  t.add_row(std::move(row));
  const std::string path = output_path(cfg, "jacobian.csv");
  t.write(path);
  log << "wrote " << path << "\n";
  return code;
}

inline std::vector<std::string> estimate_row(const RunConfig& cfg, const FKEstimate& e) {
  return {cfg.simulate.process,
          cfg.simulate.observable,
          cfg.simulate.potential,
          std::to_string(cfg.sde.n_paths),
          std::to_string(cfg.sde.n_steps),
          csv_real(cfg.sde.dt),
          csv_real(e.mean),
          csv_real(e.std_error),
          std::to_string(e.n_aborted),
          csv_real(e.abort_fraction),
          std::to_string(e.n_flagged),
          csv_real(e.max_exponent),
          e.reliable ? "true" : "false"};
}

inline int cmd_simulate(const RunConfig& cfg, std::ostream& log) {
  const GaugeOperators ops(cfg.lattice);
  const Lattice& lat = ops.lattice();
  const QuarticSelfInteraction v0{cfg.lambda, cfg.vev};
  std::mt19937_64 init_rng(cfg.simulate.init_seed);
  const FieldPair p0 = random_field_pair(lat, cfg.g0, init_rng, cfg.simulate.init_amplitude);
  const auto& s = cfg.simulate;

  FKEstimate e;
  if (s.process == "original") {
    auto V = [&](const FieldPair& p) {
      if (s.potential == "constant") return s.constant;
      if (s.potential == "lattice") return potential(lat, p, v0);
      return 0.0;
    };
    auto phi = [&](const FieldPair& p) {
      if (s.observable == "f2") return p.f.values.squaredNorm();
      if (s.observable == "a2") return p.A.values.squaredNorm();
      return 1.0;
    };
    e = feynman_kac(OriginalLatticeProcess(ops), p0, V, phi, cfg.sde);
  } else {
    const double g0 = cfg.g0;
    auto V = [&](const AdaptedCoords& c) {
      if (s.potential == "constant") return s.constant;
      if (s.potential == "lattice" || s.potential == "effective") {
        double v = potential(lat, from_adapted(ops, c, g0), v0);
        if (s.potential == "effective") {
          v += OrbitGeometry(ops, c, g0).reduction_jacobian(cfg.sde.mu, cfg.sde.kappa, cfg.m).V_correction;
        }
        return v;
      }
      return 0.0;
    };
    auto phi = [&](const AdaptedCoords& c) {
      if (s.observable == "f2") return c.f_tilde.values.squaredNorm();
      if (s.observable == "a2") return c.A_star.values.squaredNorm();
      return 1.0;
    };
    e = feynman_kac(ReducedLatticeProcess(ops, g0, s.flat_override), to_adapted(ops, p0), V, phi, cfg.sde);
  }

  CsvTable t(provenance_line(cfg, cfg.sde.seed),
             {"process", "observable", "potential", "n_paths", "n_steps", "dt", "mean", "std_error", "n_aborted",
              "abort_fraction", "n_flagged", "max_exponent", "reliable"});
  t.add_row(estimate_row(cfg, e));
  const std::string path = output_path(cfg, "simulate.csv");
  t.write(path);
  log << "mean " << csv_real(e.mean) << " +- " << csv_real(e.std_error) << "; wrote " << path << "\n";
  if (!e.reliable) {
    log << "estimate unreliable: " << e.n_flagged << " flagged paths, abort fraction " << csv_real(e.abort_fraction)
        << "\n";
    return kExitFailure;
  }
  return kExitOk;
}

/// Quadratic-potential toy: V = -omega^2 |x|^2 / 2 and a Gaussian phi0.
struct MehlerToy {
  int dof = 1;
  double omega = 1.0;
  double width = 1.0;
  double x0 = 0.3;

  [[nodiscard]] double potential(const Eigen::VectorXd& x) const { return -0.5 * omega * omega * x.squaredNorm(); }
  [[nodiscard]] double initial(const Eigen::VectorXd& x) const {
    return std::exp(-x.squaredNorm() / (2.0 * width * width));
  }
  [[nodiscard]] Eigen::VectorXd start() const { return Eigen::VectorXd::Constant(dof, x0); }
};

inline int cmd_compare_oracle(const RunConfig& cfg, std::ostream& log) {
  CsvTable t(provenance_line(cfg, cfg.sde.seed),
             {"toy", "mc_mean", "mc_std_error", "reference", "reference_std_error", "difference", "budget",
              "tolerance", "verdict"});
  bool pass = false;
  bool reliable = true;
  if (cfg.oracle.toy == "mehler") {
    const MehlerToy toy{cfg.oracle.dof, cfg.oracle.omega, cfg.oracle.width, cfg.oracle.x0};
    auto V = [&](const Eigen::VectorXd& x) { return toy.potential(x); };
    auto phi = [&](const Eigen::VectorXd& x) { return toy.initial(x); };
    const FKEstimate e = feynman_kac(FlatDiffusion{}, toy.start(), V, phi, cfg.sde);
    const KolmogorovReference ref =
        kolmogorov_reference({cfg.oracle.dof, cfg.oracle.grid_points, cfg.oracle.box_halfwidth}, cfg.sde.mu,
                             cfg.sde.kappa, V, phi, cfg.sde.horizon(), toy.start());
    if (ref.boundary_warning) {
      log << "warning: grid boundary layer holds " << csv_real(ref.boundary_mass) << " of the mass\n";
    }
    const Verdict v = compare(e.mean, e.std_error, ref.value, ref.budget);
    pass = v.pass;
    reliable = e.reliable;
    t.add_row({"mehler", csv_real(e.mean), csv_real(e.std_error), csv_real(ref.value), csv_real(0.0),
               csv_real(v.difference), csv_real(ref.budget), csv_real(v.tolerance), v.pass ? "PASS" : "FAIL"});
  } else {
    const GaugeOperators ops(cfg.lattice);
    const Lattice& lat = ops.lattice();
    if (lat.volume() * 2 > 8) throw ConfigError("the girsanov toy needs at most 4 lattice sites");
    std::mt19937_64 init_rng(cfg.simulate.init_seed);
    const Eigen::VectorXd f0 = random_field<FieldKind::doublet>(lat, init_rng, cfg.simulate.init_amplitude).values;
    const double g0 = cfg.g0;
    auto drift = [&](const Eigen::VectorXd& f) { return orbit_mean_curvature(ops, SiteDoublet(f), g0).values; };
    auto phi = [](const Eigen::VectorXd& f) { return f.squaredNorm(); };
    const GirsanovResult r = girsanov_check(drift, f0, phi, cfg.sde, lat.cell_volume());
    pass = r.agree;
    reliable = r.drifted.reliable && r.weighted.reliable;
    t.add_row({"girsanov", csv_real(r.drifted.mean), csv_real(r.drifted.std_error), csv_real(r.weighted.mean),
               csv_real(r.weighted.std_error), csv_real(r.difference), csv_real(0.0),
               csv_real(3.0 * r.combined_std_error), r.agree ? "PASS" : "FAIL"});
  }
  const std::string path = output_path(cfg, "compare_oracle.csv");
  t.write(path);
  log << (pass ? "PASS" : "FAIL") << "; wrote " << path << "\n";
  if (!reliable) log << "estimate unreliable\n";
  return pass && reliable ? kExitOk : kExitFailure;
}

}  // namespace gauge_reduce
