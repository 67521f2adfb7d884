#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <memory>
#include <span>
#include <stdexcept>

#include "gauge_reduce/lattice.hpp"

namespace gauge_reduce {

/// A point (A, f) of the product of gauge potentials and scalar doublets.
struct FieldPair {
  SiteVector A;
  SiteDoublet f;
  double g0 = 1.0;

  void validate(const Lattice& lat) const {
    detail::require_matches(lat, A, "FieldPair.A");
    detail::require_matches(lat, f, "FieldPair.f");
    if (!(g0 > 0.0) || !std::isfinite(g0)) throw std::invalid_argument("FieldPair: g0 must be positive");
    if (!A.all_finite() || !f.all_finite()) throw std::invalid_argument("FieldPair: non-finite entries");
  }
};

/// Bundle coordinates: transverse potential A*, rotated scalar f~, mean-zero gauge parameter a.
struct AdaptedCoords {
  SiteVector A_star;
  SiteDoublet f_tilde;
  SiteScalar a;
};

/// Sitewise rotation f -> Dbar(theta) f with Dbar(t) = [[cos t, sin t], [-sin t, cos t]] = exp(t Jbar).
inline SiteDoublet rotate(const SiteDoublet& f, const SiteScalar& angle) {
  if (f.size() != 2 * angle.size()) throw std::invalid_argument("rotate: size mismatch");
  SiteDoublet out = f;
  for (Eigen::Index x = 0; x < angle.size(); ++x) {
    const double c = std::cos(angle[x]);
    const double s = std::sin(angle[x]);
    const double f1 = f[2 * x];
    const double f2 = f[2 * x + 1];
    out[2 * x] = c * f1 + s * f2;
    out[2 * x + 1] = -s * f1 + c * f2;
  }
  return out;
}

inline SiteDoublet rotate(const SiteDoublet& f, double angle) {
  return rotate(f, SiteScalar(Eigen::VectorXd::Constant(f.size() / 2, angle)));
}

/// Jbar f sitewise, Jbar = [[0, 1], [-1, 0]].
inline SiteDoublet apply_generator(const SiteDoublet& f) {
  SiteDoublet out = f;
  for (Eigen::Index x = 0; 2 * x < f.size(); ++x) {
    out[2 * x] = f[2 * x + 1];
    out[2 * x + 1] = -f[2 * x];
  }
  return out;
}

/// (A, f) -> (A + grad eps, Dbar(g0 eps) f).
inline FieldPair gauge_transform(const Lattice& lat, const FieldPair& p, const SiteScalar& eps) {
  detail::require_matches(lat, eps, "gauge_transform");
  FieldPair out{p.A + gradient(lat, eps), rotate(p.f, p.g0 * eps), p.g0};
  return out;
}

struct KillingVector {
  SiteVector A;
  SiteDoublet f;
};

/// Generator of the gauge action along eps: (grad eps, g0 eps Jbar f).
inline KillingVector killing_vector(const Lattice& lat, const FieldPair& p, const SiteScalar& eps) {
  detail::require_matches(lat, eps, "killing_vector");
  SiteDoublet kf = apply_generator(p.f);
  for (Eigen::Index x = 0; x < eps.size(); ++x) {
    kf[2 * x] *= p.g0 * eps[x];
    kf[2 * x + 1] *= p.g0 * eps[x];
  }
  return {gradient(lat, eps), kf};
}

/// (2V x V) matrix of the scalar part of the Killing vectors: column x holds g0 Jbar f(x) on site x.
inline Eigen::MatrixXd scalar_killing_matrix(const SiteDoublet& f, double g0) {
  const Eigen::Index V = f.size() / 2;
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(2 * V, V);
  for (Eigen::Index x = 0; x < V; ++x) {
    k(2 * x, x) = g0 * f[2 * x + 1];
    k(2 * x + 1, x) = -g0 * f[2 * x];
  }
  return k;
}

/// Faddeev-Popov operator of the Coulomb gauge, Phi = div o grad (the lattice
/// Laplacian), and its Green function. The periodic Laplacian annihilates
/// constants, so `green` is the pseudo-inverse: Phi * green = I - ones/V.
struct FaddeevPopov {
  Eigen::MatrixXd matrix;
  Eigen::MatrixXd green;

  explicit FaddeevPopov(const Lattice& lat) : matrix(laplacian_matrix(lat)) {
    const Eigen::Index V = matrix.rows();
    const Eigen::MatrixXd mean = Eigen::MatrixXd::Constant(V, V, 1.0 / static_cast<double>(V));
    // mean - Phi is positive definite: it is -Phi on mean-zero functions and 1 on constants.
    Eigen::LLT<Eigen::MatrixXd> llt(mean - matrix);
    if (llt.info() != Eigen::Success) throw std::runtime_error("FaddeevPopov: factorization failed");
    green = mean - llt.solve(Eigen::MatrixXd::Identity(V, V));
    green = 0.5 * (green + green.transpose()).eval();
  }
};

/// Lattice-level dense operators shared by every field configuration:
/// gradient (= gauge part of the Killing vectors), divergence (= gauge
/// condition), the FP operator and the transverse projector.
class GaugeOperators {
 public:
  explicit GaugeOperators(LatticeSpec spec)
      : lattice_(spec),
        grad_(gradient_matrix(lattice_)),
        div_(divergence_matrix(lattice_)),
        fp_(lattice_) {
    // Lambda = Phi^+ chi maps a potential to its gauge parameter.
    lambda_ = fp_.green * div_;
    const auto n = grad_.rows();
    transverse_ = Eigen::MatrixXd::Identity(n, n) - grad_ * lambda_;
    transverse_ = 0.5 * (transverse_ + transverse_.transpose()).eval();
  }

  [[nodiscard]] const Lattice& lattice() const { return lattice_; }
  [[nodiscard]] const Eigen::MatrixXd& grad() const { return grad_; }
  [[nodiscard]] const Eigen::MatrixXd& div() const { return div_; }
  [[nodiscard]] const FaddeevPopov& faddeev_popov() const { return fp_; }
  /// Lambda = Phi^+ chi, (V x sV).
  [[nodiscard]] const Eigen::MatrixXd& lambda() const { return lambda_; }
  /// P_perp = I - grad Phi^+ div, projector onto divergence-free potentials.
  [[nodiscard]] const Eigen::MatrixXd& transverse_projector() const { return transverse_; }

  [[nodiscard]] Eigen::Index gauge_dim() const { return grad_.rows(); }
  [[nodiscard]] Eigen::Index volume() const { return grad_.cols(); }

 private:
  Lattice lattice_;
  Eigen::MatrixXd grad_;
  Eigen::MatrixXd div_;
  FaddeevPopov fp_;
  Eigen::MatrixXd lambda_;
  Eigen::MatrixXd transverse_;
};

inline Eigen::MatrixXd transverse_projector(const GaugeOperators& ops) { return ops.transverse_projector(); }

/// Solves div(A - grad a) = 0 for mean-zero a.
inline SiteScalar solve_gauge_parameter(const GaugeOperators& ops, const SiteVector& A) {
  detail::require_matches(ops.lattice(), A, "solve_gauge_parameter");
  Eigen::VectorXd a = ops.lambda() * A.values;
  a.array() -= a.mean();
  return SiteScalar(std::move(a));
}

inline AdaptedCoords to_adapted(const GaugeOperators& ops, const FieldPair& p) {
  p.validate(ops.lattice());
  SiteScalar a = solve_gauge_parameter(ops, p.A);
  SiteVector a_star = p.A - gradient(ops.lattice(), a);
  SiteDoublet f_tilde = rotate(p.f, -p.g0 * a);
  return {std::move(a_star), std::move(f_tilde), std::move(a)};
}

inline FieldPair from_adapted(const GaugeOperators& ops, const AdaptedCoords& c, double g0) {
  FieldPair p{c.A_star + gradient(ops.lattice(), c.a), rotate(c.f_tilde, g0 * c.a), g0};
  return p;
}

/// Blocks of the projector N at a point of the gauge surface:
///   NA = I - K_A Phi^+ chi   (sV x sV),  equal to P_perp in the abelian case
///   Na = -K_f Phi^+ chi      (2V x sV)
struct NProjector {
  Eigen::MatrixXd NA;
  Eigen::MatrixXd Na;
};

inline NProjector projector_N(const GaugeOperators& ops, const SiteDoublet& f_tilde, double g0) {
  detail::require_matches(ops.lattice(), f_tilde, "projector_N");
  const Eigen::MatrixXd& killing_A = ops.grad();
  const Eigen::MatrixXd& lambda = ops.lambda();  // Phi^+ chi
  NProjector n;
  n.NA = Eigen::MatrixXd::Identity(killing_A.rows(), killing_A.rows()) - killing_A * lambda;
  n.Na = -scalar_killing_matrix(f_tilde, g0) * lambda;
  return n;
}

inline NProjector projector_N(const GaugeOperators& ops, const AdaptedCoords& c, double g0) {
  return projector_N(ops, c.f_tilde, g0);
}

/// Sitewise self-interaction V0(A(x), f(x)).
struct NoSelfInteraction {
  double operator()(std::span<const double> /*A*/, const Eigen::Vector2d& /*f*/) const { return 0.0; }
};

/// lambda (|f|^2 - vev^2)^2
struct QuarticSelfInteraction {
  double lambda = 0.0;
  double vev = 0.0;
  double operator()(std::span<const double> /*A*/, const Eigen::Vector2d& f) const {
    const double r = f.squaredNorm() - vev * vev;
    return lambda * r * r;
  }
};

/// Magnetic term 1/4 F_ij F_ij on each site.
inline double magnetic_energy_density(const Lattice& lat, const SiteVector& A, std::size_t x) {
  const double inv_h = 1.0 / lat.spacing();
  double acc = 0.0;
  for (int i = 0; i < lat.dim(); ++i) {
    for (int j = 0; j < lat.dim(); ++j) {
      if (i == j) continue;
      const double di_Aj = (A[vector_index(lat, j, lat.forward(x, i))] - A[vector_index(lat, j, x)]) * inv_h;
      const double dj_Ai = (A[vector_index(lat, i, lat.forward(x, j))] - A[vector_index(lat, i, x)]) * inv_h;
      const double f_ij = di_Aj - dj_Ai;
      acc += 0.25 * f_ij * f_ij;
    }
  }
  return acc;
}

/// V[A, f] = h^s sum_x [ 1/4 F_ij F_ij + 1/2 |(nabla f)_i|^2 + V0 ].
///
/// The covariant difference uses the link rotation
///   (nabla f)_i(x) = [Dbar(-g0 h A_i(x)) f(x + e_i) - f(x)] / h,
/// which tends to d_i f - g0 A_i Jbar f as h -> 0 and transforms covariantly
/// under the lattice gauge law, so V is exactly gauge invariant.
template <class SelfInteraction = NoSelfInteraction>
double potential(const Lattice& lat, const FieldPair& p, const SelfInteraction& v0 = {}) {
  p.validate(lat);
  const double h = lat.spacing();
  const double inv_h = 1.0 / h;
  double total = 0.0;
  std::array<double, 3> a_site{};
  for (std::size_t x = 0; x < lat.volume(); ++x) {
    double site = magnetic_energy_density(lat, p.A, x);
    const Eigen::Vector2d fx(p.f[doublet_index(x, 0)], p.f[doublet_index(x, 1)]);
    for (int i = 0; i < lat.dim(); ++i) {
      const std::size_t y = lat.forward(x, i);
      const double theta = -p.g0 * h * p.A[vector_index(lat, i, x)];
      const double c = std::cos(theta);
      const double s = std::sin(theta);
      const double y1 = p.f[doublet_index(y, 0)];
      const double y2 = p.f[doublet_index(y, 1)];
      const double d1 = (c * y1 + s * y2 - fx[0]) * inv_h;
      const double d2 = (-s * y1 + c * y2 - fx[1]) * inv_h;
      site += 0.5 * (d1 * d1 + d2 * d2);
      a_site[static_cast<std::size_t>(i)] = p.A[vector_index(lat, i, x)];
    }
    site += v0(std::span<const double>(a_site.data(), static_cast<std::size_t>(lat.dim())), fx);
    total += site;
  }
  return lat.cell_volume() * total;
}

}  // namespace gauge_reduce
