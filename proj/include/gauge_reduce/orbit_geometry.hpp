#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <string>

#include "gauge_reduce/errors.hpp"
#include "gauge_reduce/gauge.hpp"

namespace gauge_reduce {

/// Below this value of sum_x |f~(x)|^2 the orbit metric is treated as singular.
inline constexpr double kSingularFieldNorm2 = 1e-10;

/// Orbit metric D = -Laplacian + diag(g0^2 |f~|^2). The metric on the orbit
/// is d = h^s D; both share the inverse up to that factor and the log-det up
/// to the constant V log h^s.
struct OrbitMetric {
  Eigen::MatrixXd D;
  Eigen::LLT<Eigen::MatrixXd> factor;
  Eigen::MatrixXd Dinv;
  double logdet = 0.0;
  std::size_t volume = 0;
};

inline Eigen::MatrixXd orbit_metric_matrix(const GaugeOperators& ops, const SiteDoublet& f_tilde, double g0) {
  detail::require_matches(ops.lattice(), f_tilde, "orbit_metric");
  Eigen::MatrixXd D = -ops.faddeev_popov().matrix;
  for (Eigen::Index x = 0; x < D.rows(); ++x) {
    D(x, x) += g0 * g0 * (f_tilde[2 * x] * f_tilde[2 * x] + f_tilde[2 * x + 1] * f_tilde[2 * x + 1]);
  }
  return D;
}

inline OrbitMetric orbit_metric(const GaugeOperators& ops, const SiteDoublet& f_tilde, double g0) {
  OrbitMetric m;
  m.D = orbit_metric_matrix(ops, f_tilde, g0);
  if (f_tilde.values.squaredNorm() < kSingularFieldNorm2) {
    throw SingularOrbitMetric("orbit metric is singular: scalar field vanishes on every site");
  }
  m.factor.compute(m.D);
  if (m.factor.info() != Eigen::Success) {
    throw SingularOrbitMetric("orbit metric is not positive definite");
  }
  const Eigen::Index V = m.D.rows();
  m.Dinv = m.factor.solve(Eigen::MatrixXd::Identity(V, V));
  m.Dinv = 0.5 * (m.Dinv + m.Dinv.transpose()).eval();
  const Eigen::MatrixXd& l = m.factor.matrixLLT();
  m.logdet = 2.0 * l.diagonal().array().log().sum();
  m.volume = static_cast<std::size_t>(V);
  return m;
}

/// sigma = ln det D and its derivatives with respect to f~.
/// Only scalar-field derivatives exist: D does not depend on A*.
struct SigmaDerivatives {
  double sigma = 0.0;
  SiteDoublet grad;
  Eigen::MatrixXd hess;
};

inline SigmaDerivatives sigma_derivatives(const OrbitMetric& m, const SiteDoublet& f, double g0,
                                          bool with_hessian = true) {
  const Eigen::Index V = m.D.rows();
  const double g2 = g0 * g0;
  SigmaDerivatives s;
  s.sigma = m.logdet;
  s.grad = SiteDoublet(Eigen::VectorXd(2 * V));
  for (Eigen::Index x = 0; x < V; ++x) {
    s.grad[2 * x] = 2.0 * g2 * f[2 * x] * m.Dinv(x, x);
    s.grad[2 * x + 1] = 2.0 * g2 * f[2 * x + 1] * m.Dinv(x, x);
  }
  if (with_hessian) {
    s.hess.resize(2 * V, 2 * V);
    for (Eigen::Index x = 0; x < V; ++x) {
      for (Eigen::Index y = 0; y < V; ++y) {
        const double dxy2 = m.Dinv(x, y) * m.Dinv(x, y);
        for (int a = 0; a < 2; ++a) {
          for (int b = 0; b < 2; ++b) {
            double v = -4.0 * g2 * g2 * f[2 * x + a] * f[2 * y + b] * dxy2;
            if (x == y && a == b) v += 2.0 * g2 * m.Dinv(x, x);
            s.hess(2 * x + a, 2 * y + b) = v;
          }
        }
      }
    }
  }
  return s;
}

inline SigmaDerivatives sigma_derivatives(const GaugeOperators& ops, const SiteDoublet& f_tilde, double g0) {
  return sigma_derivatives(orbit_metric(ops, f_tilde, g0), f_tilde, g0);
}

/// Components of the mechanical (Coulomb) connection,
///   A_gauge(x; j,y)  = d_j(y) D^{-1}(x, y)       (V x sV)
///   A_scalar(x; a,y) = D^{-1}(x, y) (g0 Jbar f~(y))_a   (V x 2V)
struct MechanicalConnection {
  Eigen::MatrixXd A_gauge;
  Eigen::MatrixXd A_scalar;

  /// omega(u) for a tangent vector u = (u_A, u_f).
  [[nodiscard]] SiteScalar operator()(const SiteVector& u_A, const SiteDoublet& u_f) const {
    return SiteScalar(A_gauge * u_A.values + A_scalar * u_f.values);
  }
  [[nodiscard]] SiteScalar operator()(const KillingVector& k) const { return (*this)(k.A, k.f); }
};

inline MechanicalConnection mechanical_connection(const GaugeOperators& ops, const OrbitMetric& m,
                                                  const SiteDoublet& f_tilde, double g0) {
  return {m.Dinv * ops.grad().transpose(), m.Dinv * scalar_killing_matrix(f_tilde, g0).transpose()};
}

inline MechanicalConnection mechanical_connection(const GaugeOperators& ops, const SiteDoublet& f_tilde, double g0) {
  return mechanical_connection(ops, orbit_metric(ops, f_tilde, g0), f_tilde, g0);
}

/// Projector of the original tangent space onto the horizontal subspace
/// (G-orthogonal complement of every Killing vector), I - K omega.
inline Eigen::MatrixXd horizontal_projector(const GaugeOperators& ops, const MechanicalConnection& conn,
                                            const SiteDoublet& f_tilde, double g0) {
  const Eigen::Index nA = ops.gauge_dim();
  const Eigen::Index nf = f_tilde.size();
  Eigen::MatrixXd K(nA + nf, ops.volume());
  K.topRows(nA) = ops.grad();
  K.bottomRows(nf) = scalar_killing_matrix(f_tilde, g0);
  Eigen::MatrixXd omega(ops.volume(), nA + nf);
  omega.leftCols(nA) = conn.A_gauge;
  omega.rightCols(nf) = conn.A_scalar;
  return Eigen::MatrixXd::Identity(nA + nf, nA + nf) - K * omega;
}

/// The original flat metric written in the coordinate basis
/// (d/dA*, d/df~, d/da) and its pseudo-inverse h.
///
/// A* is constrained to the gauge surface, so its coordinate vectors are taken
/// through P_perp. On the torus the gauge parameter is mean-zero, so its
/// coordinate vectors are taken through Pi0 = I - ones/V, and the gauge
/// sector of the identity G~^{-1} G~ is Pi0.
struct HorizontalMetric {
  // Blocks of G~. The (A*, f~) block vanishes.
  Eigen::MatrixXd G_AA, G_Aalpha, G_ff, G_falpha, G_alphaalpha;
  // Blocks of the pseudo-inverse h.
  Eigen::MatrixXd h_AA, h_Af, h_ff, h_Aalpha, h_falpha, h_alphaalpha;
  Eigen::MatrixXd P_perp;

  [[nodiscard]] Eigen::MatrixXd metric() const {
    return assemble(G_AA, Eigen::MatrixXd::Zero(G_AA.rows(), G_ff.cols()), G_Aalpha, G_ff, G_falpha, G_alphaalpha);
  }
  [[nodiscard]] Eigen::MatrixXd inverse() const {
    return assemble(h_AA, h_Af, h_Aalpha, h_ff, h_falpha, h_alphaalpha);
  }
  /// blockdiag(P_perp, I, Pi0).
  [[nodiscard]] Eigen::MatrixXd identity_target() const {
    const Eigen::Index nA = G_AA.rows(), nf = G_ff.rows(), V = G_alphaalpha.rows();
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(nA + nf + V, nA + nf + V);
    t.topLeftCorner(nA, nA) = P_perp;
    t.block(nA, nA, nf, nf).setIdentity();
    t.bottomRightCorner(V, V) = mean_zero_projector(V);
    return t;
  }
  /// max |h G~ - blockdiag(P_perp, I, Pi0)|
  [[nodiscard]] double pseudoinverse_residual() const {
    return (inverse() * metric() - identity_target()).cwiseAbs().maxCoeff();
  }

  static Eigen::MatrixXd mean_zero_projector(Eigen::Index V) {
    return Eigen::MatrixXd::Identity(V, V) - Eigen::MatrixXd::Constant(V, V, 1.0 / static_cast<double>(V));
  }

 private:
  static Eigen::MatrixXd assemble(const Eigen::MatrixXd& aa, const Eigen::MatrixXd& af, const Eigen::MatrixXd& ag,
                                  const Eigen::MatrixXd& ff, const Eigen::MatrixXd& fg, const Eigen::MatrixXd& gg) {
    const Eigen::Index nA = aa.rows(), nf = ff.rows(), V = gg.rows();
    Eigen::MatrixXd m(nA + nf + V, nA + nf + V);
    m.block(0, 0, nA, nA) = aa;
    m.block(0, nA, nA, nf) = af;
    m.block(0, nA + nf, nA, V) = ag;
    m.block(nA, 0, nf, nA) = af.transpose();
    m.block(nA, nA, nf, nf) = ff;
    m.block(nA, nA + nf, nf, V) = fg;
    m.block(nA + nf, 0, V, nA) = ag.transpose();
    m.block(nA + nf, nA, V, nf) = fg.transpose();
    m.block(nA + nf, nA + nf, V, V) = gg;
    return m;
  }
};

inline HorizontalMetric horizontal_metric(const GaugeOperators& ops, const SiteDoublet& f_tilde, double g0) {
  detail::require_matches(ops.lattice(), f_tilde, "horizontal_metric");
  const double w = ops.lattice().cell_volume();
  const Eigen::Index nf = f_tilde.size();
  const Eigen::Index V = ops.volume();
  const Eigen::MatrixXd& P = ops.transverse_projector();
  const Eigen::MatrixXd Kf = scalar_killing_matrix(f_tilde, g0);
  const Eigen::MatrixXd Pi0 = HorizontalMetric::mean_zero_projector(V);
  const NProjector N = projector_N(ops, f_tilde, g0);
  const Eigen::MatrixXd& Lambda = ops.lambda();

  HorizontalMetric hm;
  hm.P_perp = P;
  hm.G_AA = w * P.transpose() * P;
  hm.G_Aalpha = w * P.transpose() * ops.grad() * Pi0;
  hm.G_ff = w * Eigen::MatrixXd::Identity(nf, nf);
  hm.G_falpha = w * Kf * Pi0;
  hm.G_alphaalpha = Pi0 * (w * orbit_metric_matrix(ops, f_tilde, g0)) * Pi0;

  const double inv_w = 1.0 / w;
  hm.h_AA = inv_w * N.NA * N.NA.transpose();
  hm.h_Af = inv_w * N.NA * N.Na.transpose();
  hm.h_ff = inv_w * (Eigen::MatrixXd::Identity(nf, nf) + N.Na * N.Na.transpose());
  hm.h_Aalpha = inv_w * N.NA * Lambda.transpose();
  hm.h_falpha = inv_w * N.Na * Lambda.transpose();
  hm.h_alphaalpha = inv_w * Lambda * Lambda.transpose();
  return hm;
}

inline HorizontalMetric horizontal_metric(const GaugeOperators& ops, const AdaptedCoords& c, double g0) {
  return horizontal_metric(ops, c.f_tilde, g0);
}

/// A drift split into its gauge-potential and scalar sectors.
struct DriftSplit {
  SiteVector A;
  SiteDoublet f;
};

/// Mean curvature drifts: j1 (orbit space) and j2 (orbit).
struct MeanCurvatureTerms {
  SiteVector j1_A;
  SiteDoublet j1_f;
  SiteVector j2_A;
  SiteDoublet j2_f;
};

struct JacobianReport {
  double logdet = 0.0;
  std::size_t volume = 0;
  double laplace_term = 0.0;       ///< h^ab s_ab - h Gamma^a s_a
  double grad_term = 0.0;          ///< h^ab s_a s_b
  double laplace_term_full = 0.0;  ///< full form with the A* sector included
  double grad_term_full = 0.0;
  double J = 0.0;
  double V_correction = 0.0;
};

/// Geometry of the reduction at one point of the gauge surface. Everything is
/// expressed through D^{-1}, the Killing matrices and the N projectors; the
/// f~-derivatives needed by the Christoffel symbols use
/// d D^{-1} / d f~^q = -2 g0^2 f~^q D^{-1} e_x e_x^T D^{-1}  (x = site of q).
class OrbitGeometry {
 public:
  OrbitGeometry(const GaugeOperators& ops, const SiteDoublet& f_tilde, double g0)
      : ops_(&ops), f_(f_tilde), g0_(g0), metric_(orbit_metric(ops, f_tilde, g0)) {
    w_ = ops.lattice().cell_volume();
    Kf_ = scalar_killing_matrix(f_, g0_);
    conn_ = mechanical_connection(ops, metric_, f_, g0_);
    N_ = projector_N(ops, f_, g0_);
    // h = hh / w
    hh_AA_ = ops.transverse_projector();
    hh_Af_ = N_.NA * N_.Na.transpose();
    hh_ff_ = N_.Na * N_.Na.transpose();
    hh_ff_.diagonal().array() += 1.0;
  }

  OrbitGeometry(const GaugeOperators& ops, const AdaptedCoords& c, double g0) : OrbitGeometry(ops, c.f_tilde, g0) {}

  [[nodiscard]] const OrbitMetric& metric() const { return metric_; }
  [[nodiscard]] const MechanicalConnection& connection() const { return conn_; }
  [[nodiscard]] const NProjector& projector() const { return N_; }
  [[nodiscard]] Eigen::MatrixXd h_AA() const { return hh_AA_ / w_; }
  [[nodiscard]] Eigen::MatrixXd h_Af() const { return hh_Af_ / w_; }
  [[nodiscard]] Eigen::MatrixXd h_ff() const { return hh_ff_ / w_; }

  [[nodiscard]] SigmaDerivatives sigma(bool with_hessian = true) const {
    return sigma_derivatives(metric_, f_, g0_, with_hessian);
  }

  /// X^R = h^{BM} Gamma^R_{BM}, summed over both sectors of B and M, with the
  /// Christoffel symbols of the horizontal metric raised by the flat metric.
  [[nodiscard]] DriftSplit christoffel_contraction() const {
    const Eigen::Index V = metric_.D.rows();
    const Eigen::MatrixXd& Dinv = metric_.Dinv;
    const double g2 = g0_ * g0_;

    const Eigen::MatrixXd M_f = conn_.A_scalar * hh_ff_;  // A_scalar h^{ff}
    const Eigen::MatrixXd M_A = conn_.A_gauge * hh_Af_;   // A_gauge h^{Af}
    auto site_trace = [&](const Eigen::MatrixXd& M) {
      Eigen::VectorXd t(V);
      for (Eigen::Index x = 0; x < V; ++x) t[x] = f_[2 * x] * M(x, 2 * x) + f_[2 * x + 1] * M(x, 2 * x + 1);
      return t;
    };

    // c_A(beta) = h^{Bm} d_m A^beta_B
    const Eigen::VectorXd c_A = -2.0 * g2 * (Dinv * site_trace(M_A));
    // c_f(beta) = h^{pq} d_q A^beta_p; the second part comes from d_q K^p.
    Eigen::VectorXd jt(V);
    for (Eigen::Index x = 0; x < V; ++x) jt[x] = g0_ * (hh_ff_(2 * x, 2 * x + 1) - hh_ff_(2 * x + 1, 2 * x));
    const Eigen::VectorXd c_f = -2.0 * g2 * (Dinv * site_trace(M_f)) + Dinv * jt;

    DriftSplit X{SiteVector(Eigen::VectorXd(ops_->gauge_dim())), SiteDoublet(Eigen::VectorXd(2 * V))};

    // Gamma^A_{BM} = 0.
    // Gamma^A_{Bm} = Gamma^A_{mB} = -1/2 d_m A^b_B K^A_b  and
    // Gamma^A_{pq} = -1/2 (d_q A^b_p + d_p A^b_q) K^A_b  contract to -K_A (c_A + c_f).
    X.A.values = -(ops_->grad() * (c_A + c_f));

    // Gamma^r_{AB}: 1/2 (K^r_{m,p} K^p_s)(A^s_A A^m_B + A^m_A A^s_B), with
    // K^r_{m,p} K^p_s = -g0^2 f~^r on the site of r.
    const Eigen::VectorXd q_AA = (conn_.A_gauge * hh_AA_).cwiseProduct(conn_.A_gauge).rowwise().sum();
    // Gamma^r_{pB}, counted twice in the contraction.
    const Eigen::VectorXd q_Af = (conn_.A_gauge * hh_Af_).cwiseProduct(conn_.A_scalar).rowwise().sum();
    // Gamma^r_{pq}.
    const Eigen::VectorXd q_ff = M_f.cwiseProduct(conn_.A_scalar).rowwise().sum();

    for (Eigen::Index x = 0; x < V; ++x) {
      const Eigen::Index r0 = 2 * x;
      const Eigen::Index r1 = 2 * x + 1;
      const double k0 = g0_ * f_[r1];   // K^{r0}_x
      const double k1 = -g0_ * f_[r0];  // K^{r1}_x
      const double quad = q_AA[x] + 2.0 * q_Af[x] + q_ff[x];
      const double c = c_A[x] + c_f[x];
      // -2 (A^x_p K^r_{x,q}) h^{pq} - 2 (A^x_B K^r_{x,p}) h^{Bp}, with K^r_{x,p} = g0 Jbar_{ab}
      const double m0 = M_A(x, r1) + M_f(x, r1);
      const double m1 = -(M_A(x, r0) + M_f(x, r0));
      X.f[r0] = -g2 * f_[r0] * quad - k0 * c - 2.0 * g0_ * m0;
      X.f[r1] = -g2 * f_[r1] * quad - k1 * c - 2.0 * g0_ * m1;
    }
    X.A.values /= w_;
    X.f.values /= w_;
    return X;
  }

  /// -1/2 h Gamma, the Christoffel part of the reduced drift (per unit mu^2 kappa).
  [[nodiscard]] DriftSplit christoffel_drift() const {
    DriftSplit X = christoffel_contraction();
    X.A.values *= -0.5;
    X.f.values *= -0.5;
    return X;
  }

  [[nodiscard]] MeanCurvatureTerms mean_curvature_terms() const { return mean_curvature_terms(christoffel_contraction()); }

  [[nodiscard]] MeanCurvatureTerms mean_curvature_terms(const DriftSplit& X) const {
    const Eigen::Index V = metric_.D.rows();
    const SigmaDerivatives s = sigma(false);
    MeanCurvatureTerms t;

    // j2 = 1/4 h (sigma_C, sigma_b) with sigma_C = 0.
    t.j2_A = SiteVector(0.25 / w_ * (hh_Af_ * s.grad.values));
    t.j2_f = SiteDoublet(0.25 / w_ * (hh_ff_ * s.grad.values));

    // j1^A = 1/2 h^{BM} N^A_{B,M} + 1/2 (X^A - N^A_C X^C); N^A is constant.
    t.j1_A = SiteVector(0.5 * (X.A.values - N_.NA * X.A.values));

    // j1^a = 1/2 h^{Cm} d_m N^a_C - 1/2 N^a_C X^C, d_m N^a_C = -K^a_{x,m} Lambda^x_C.
    const Eigen::MatrixXd LhAf = ops_->lambda() * hh_Af_;
    Eigen::VectorXd dN(2 * V);
    for (Eigen::Index x = 0; x < V; ++x) {
      dN[2 * x] = -g0_ * LhAf(x, 2 * x + 1);
      dN[2 * x + 1] = g0_ * LhAf(x, 2 * x);
    }
    t.j1_f = SiteDoublet(0.5 / w_ * dN - 0.5 * (N_.Na * X.A.values));
    return t;
  }

  /// -1/2 h Gamma + j1 + j2, per unit mu^2 kappa.
  [[nodiscard]] DriftSplit reduced_drift() const {
    const DriftSplit X = christoffel_contraction();
    const MeanCurvatureTerms t = mean_curvature_terms(X);
    DriftSplit d;
    d.A = SiteVector(-0.5 * X.A.values + t.j1_A.values + t.j2_A.values);
    d.f = SiteDoublet(-0.5 * X.f.values + t.j1_f.values + t.j2_f.values);
    return d;
  }

  [[nodiscard]] JacobianReport reduction_jacobian(double mu, double kappa, double m = 1.0) const {
    const SigmaDerivatives s = sigma(true);
    const DriftSplit X = christoffel_contraction();
    const Eigen::MatrixXd hff = hh_ff_ / w_;
    const Eigen::MatrixXd hAA = hh_AA_ / w_;
    const Eigen::MatrixXd hAf = hh_Af_ / w_;

    JacobianReport r;
    r.logdet = metric_.logdet;
    r.volume = metric_.volume;
    r.laplace_term = hff.cwiseProduct(s.hess).sum() - X.f.values.dot(s.grad.values);
    r.grad_term = s.grad.values.dot(hff * s.grad.values);

    // Full form; the A* derivatives of sigma vanish identically.
    const Eigen::Index nA = hAA.rows();
    const Eigen::VectorXd sigma_A = Eigen::VectorXd::Zero(nA);
    const Eigen::MatrixXd sigma_AA = Eigen::MatrixXd::Zero(nA, nA);
    const Eigen::MatrixXd sigma_Af = Eigen::MatrixXd::Zero(nA, s.grad.size());
    r.laplace_term_full = hAA.cwiseProduct(sigma_AA).sum() + 2.0 * hAf.cwiseProduct(sigma_Af).sum() +
                          hff.cwiseProduct(s.hess).sum() - X.A.values.dot(sigma_A) - X.f.values.dot(s.grad.values);
    r.grad_term_full = sigma_A.dot(hAA * sigma_A) + 2.0 * s.grad.values.dot(hAf.transpose() * sigma_A) +
                       s.grad.values.dot(hff * s.grad.values);

    const double bracket = r.laplace_term + 0.25 * r.grad_term;
    r.J = -0.125 * mu * mu * kappa * bracket;
    r.V_correction = -(mu * mu * kappa / (8.0 * m)) * bracket;
    return r;
  }

 private:
  const GaugeOperators* ops_;
  SiteDoublet f_;
  double g0_;
  double w_ = 1.0;
  OrbitMetric metric_;
  Eigen::MatrixXd Kf_;
  MechanicalConnection conn_;
  NProjector N_;
  Eigen::MatrixXd hh_AA_, hh_Af_, hh_ff_;
};

inline DriftSplit christoffel_drift(const GaugeOperators& ops, const AdaptedCoords& c, double g0) {
  return OrbitGeometry(ops, c, g0).christoffel_drift();
}

inline MeanCurvatureTerms mean_curvature_terms(const GaugeOperators& ops, const AdaptedCoords& c, double g0) {
  return OrbitGeometry(ops, c, g0).mean_curvature_terms();
}

inline JacobianReport reduction_jacobian(const GaugeOperators& ops, const AdaptedCoords& c, double g0, double mu,
                                         double kappa, double m = 1.0) {
  return OrbitGeometry(ops, c, g0).reduction_jacobian(mu, kappa, m);
}

/// Classical potential of the configuration plus the quantum correction
/// -(mu^2 kappa / 8m) [Laplace sigma + 1/4 <d sigma, d sigma>].
template <class SelfInteraction = NoSelfInteraction>
double effective_potential(const GaugeOperators& ops, const AdaptedCoords& c, double g0, double mu, double kappa,
                           double m, const SelfInteraction& v0 = {}) {
  const double classical = potential(ops.lattice(), from_adapted(ops, c, g0), v0);
  return classical + reduction_jacobian(ops, c, g0, mu, kappa, m).V_correction;
}

/// j2^f alone, the orbit mean-curvature drift of the scalar sector, without
/// assembling the Christoffel contractions. Used as a drift field.
inline SiteDoublet orbit_mean_curvature(const GaugeOperators& ops, const SiteDoublet& f_tilde, double g0) {
  const OrbitMetric m = orbit_metric(ops, f_tilde, g0);
  const SigmaDerivatives s = sigma_derivatives(m, f_tilde, g0, false);
  const Eigen::MatrixXd Kf = scalar_killing_matrix(f_tilde, g0);
  // h^ff = (I - K_f Phi^+ K_f^T) / w
  const Eigen::VectorXd hs = s.grad.values - Kf * (ops.faddeev_popov().green * (Kf.transpose() * s.grad.values));
  return SiteDoublet(0.25 / ops.lattice().cell_volume() * hs);
}

}  // namespace gauge_reduce
