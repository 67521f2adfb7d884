#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "gauge_reduce/field_io.hpp"
#include "gauge_reduce/gauge.hpp"
#include "gauge_reduce/orbit_geometry.hpp"

namespace gauge_reduce {

struct CheckResult {
  std::string name;
  double residual = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct InvariantSuiteOptions {
  LatticeSpec lattice{2, 4, 1.0};
  double g0 = 1.0;
  QuarticSelfInteraction self_interaction{};
  std::size_t trials = 10;
  std::uint64_t seed = 12345;
  bool corrupt_projector = false;  ///< test hook: perturbs P_perp before the projector checks
  double fd_step = 1e-5;
};

inline double max_abs(const Eigen::MatrixXd& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

inline double relative_max_error(const Eigen::MatrixXd& approx, const Eigen::MatrixXd& exact) {
  const double scale = max_abs(exact);
  return max_abs(approx - exact) / (scale > 0.0 ? scale : 1.0);
}

/// sigma_a by central differences of ln det D.
inline Eigen::VectorXd sigma_gradient_fd(const GaugeOperators& ops, const SiteDoublet& f, double g0, double step) {
  Eigen::VectorXd g(f.size());
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    SiteDoublet up = f, dn = f;
    up[i] += step;
    dn[i] -= step;
    g[i] = (orbit_metric(ops, up, g0).logdet - orbit_metric(ops, dn, g0).logdet) / (2.0 * step);
  }
  return g;
}

/// sigma_ab by central differences of the closed-form sigma_a.
inline Eigen::MatrixXd sigma_hessian_fd(const GaugeOperators& ops, const SiteDoublet& f, double g0, double step) {
  Eigen::MatrixXd h(f.size(), f.size());
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    SiteDoublet up = f, dn = f;
    up[i] += step;
    dn[i] -= step;
    h.col(i) = (sigma_derivatives(orbit_metric(ops, up, g0), up, g0, false).grad.values -
                sigma_derivatives(orbit_metric(ops, dn, g0), dn, g0, false).grad.values) /
               (2.0 * step);
  }
  return h;
}

/// The invariant suite behind `gauge_reduce check`.
inline std::vector<CheckResult> run_invariant_suite(const InvariantSuiteOptions& opt) {
  const GaugeOperators ops(opt.lattice);
  const Lattice& lat = ops.lattice();
  const double g0 = opt.g0;
  std::mt19937_64 rng(opt.seed);
  std::vector<CheckResult> out;
  auto record = [&](std::string name, double residual, double tol) {
    out.push_back({std::move(name), residual, tol, std::isfinite(residual) && residual <= tol});
  };

  // Gauge invariance of the potential.
  {
    double worst = 0.0;
    for (std::size_t t = 0; t < opt.trials; ++t) {
      const FieldPair p = random_field_pair(lat, g0, rng);
      const SiteScalar eps = random_field<FieldKind::scalar>(lat, rng);
      const double v = potential(lat, p, opt.self_interaction);
      const double vg = potential(lat, gauge_transform(lat, p, eps), opt.self_interaction);
      worst = std::max(worst, std::abs(vg - v) / (1.0 + std::abs(v)));
    }
    record("gauge_invariance", worst, 1e-9);
  }

  // Projectors.
  Eigen::MatrixXd P = ops.transverse_projector();
  if (opt.corrupt_projector) P(0, 0) += 1e-3;
  record("projector_idempotent", max_abs(P * P - P), 1e-10);
  record("projector_symmetric", max_abs(P - P.transpose()), 1e-12);
  record("projector_divergence_free", max_abs(ops.div() * P), 1e-10);
  record("projector_kills_gradients", max_abs(P * ops.grad()), 1e-10);
  {
    const SiteDoublet f = random_field<FieldKind::doublet>(lat, rng);
    record("projector_NA_equals_P_perp", max_abs(projector_N(ops, f, g0).NA - P), 1e-12);
  }

  // Faddeev-Popov pseudo-inverse.
  {
    const Eigen::Index V = ops.volume();
    const Eigen::MatrixXd target =
        Eigen::MatrixXd::Identity(V, V) - Eigen::MatrixXd::Constant(V, V, 1.0 / static_cast<double>(V));
    record("fp_inverse", max_abs(ops.faddeev_popov().matrix * ops.faddeev_popov().green - target), 1e-10);
  }

  // Adapted coordinates.
  std::vector<AdaptedCoords> points;
  {
    double round_trip = 0.0, condition = 0.0;
    for (std::size_t t = 0; t < opt.trials; ++t) {
      const FieldPair p = random_field_pair(lat, g0, rng);
      const AdaptedCoords c = to_adapted(ops, p);
      const FieldPair q = from_adapted(ops, c, g0);
      round_trip = std::max({round_trip, max_abs(q.A.values - p.A.values), max_abs(q.f.values - p.f.values)});
      condition = std::max(condition, max_abs(divergence(lat, c.A_star).values));
      points.push_back(c);
    }
    record("adapted_round_trip", round_trip, 1e-10);
    record("adapted_gauge_condition", condition, 1e-10);
  }

  // Derivatives of sigma = ln det d.
  {
    double e1 = 0.0, e2 = 0.0;
    const std::size_t n = std::min<std::size_t>(points.size(), 3);
    for (std::size_t t = 0; t < n; ++t) {
      const SiteDoublet& f = points[t].f_tilde;
      const SigmaDerivatives s = sigma_derivatives(ops, f, g0);
      e1 = std::max(e1, relative_max_error(sigma_gradient_fd(ops, f, g0, opt.fd_step), s.grad.values));
      e2 = std::max(e2, relative_max_error(sigma_hessian_fd(ops, f, g0, opt.fd_step), s.hess));
    }
    record("sigma_gradient_fd", e1, 1e-6);
    record("sigma_hessian_fd", e2, 1e-4);
  }

  // Horizontal metric and connection.
  {
    double pinv = 0.0, repro = 0.0, horiz = 0.0, transverse = 0.0, jac = 0.0;
    for (const auto& c : points) {
      pinv = std::max(pinv, horizontal_metric(ops, c, g0).pseudoinverse_residual());
      const OrbitGeometry geo(ops, c, g0);
      const SiteScalar eps = random_field<FieldKind::scalar>(lat, rng);
      const MechanicalConnection conn = mechanical_connection(ops, c.f_tilde, g0);
      const KillingVector k = killing_vector(lat, FieldPair{c.A_star, c.f_tilde, g0}, eps);
      repro = std::max(repro, max_abs(conn(k).values - eps.values));
      const Eigen::MatrixXd H = horizontal_projector(ops, conn, c.f_tilde, g0);
      Eigen::MatrixXd omega(ops.volume(), H.rows());
      omega << conn.A_gauge, conn.A_scalar;
      horiz = std::max(horiz, max_abs(omega * H));
      const DriftSplit d = geo.reduced_drift();
      transverse = std::max(transverse, max_abs(divergence(lat, d.A).values));
      const JacobianReport r = geo.reduction_jacobian(1.0, 1.0);
      const double scale = std::max(1.0, std::abs(r.laplace_term) + std::abs(r.grad_term));
      jac = std::max(jac, (std::abs(r.laplace_term_full - r.laplace_term) +
                           std::abs(r.grad_term_full - r.grad_term)) / scale);
    }
    record("pseudoinverse_identity", pinv, 1e-9);
    record("connection_reproduction", repro, 1e-9);
    record("horizontality", horiz, 1e-9);
    record("reduced_drift_transverse", transverse, 1e-9);
    record("jacobian_full_form", jac, 1e-10);
  }
  return out;
}

}  // namespace gauge_reduce
