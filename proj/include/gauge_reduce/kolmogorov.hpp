#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace gauge_reduce {

/// Uniform grid on the box [-L, L]^dof with M interior points per axis and
/// Dirichlet-zero walls. M odd puts a node at the origin.
struct GridSpec {
  int dof = 1;
  int points = 101;
  double halfwidth = 6.0;

  void validate() const {
    if (dof < 1 || dof > 3) throw std::invalid_argument("grid: dof must be 1, 2 or 3");
    if (points < 3 || points % 2 == 0) throw std::invalid_argument("grid: points per axis must be odd and >= 3");
    if (!(halfwidth > 0.0)) throw std::invalid_argument("grid: halfwidth must be positive");
  }
  [[nodiscard]] double spacing() const { return 2.0 * halfwidth / (points + 1); }
  [[nodiscard]] Eigen::Index size() const {
    Eigen::Index n = 1;
    for (int d = 0; d < dof; ++d) n *= points;
    return n;
  }
  /// Grid with half the spacing and the same nodes plus midpoints.
  [[nodiscard]] GridSpec refined() const { return {dof, 2 * points + 1, halfwidth}; }
};

using GridFunction = std::function<double(const Eigen::VectorXd&)>;

struct EvolveResult {
  Eigen::VectorXd psi;
  double boundary_mass = 0.0;  ///< share of sum |psi| within two cells of a wall
  bool boundary_warning = false;
};

inline constexpr double kBoundaryMassWarning = 1e-3;

/// Backward Kolmogorov equation with killing/creation rate,
///   d psi / dt = 1/2 mu^2 kappa Laplace psi + (1 / mu^2 kappa) V psi,
/// whose solution is the Feynman-Kac expectation for X = x0 + mu sqrt(kappa) W.
class GridPDE {
 public:
  GridPDE(GridSpec spec, double mu, double kappa, GridFunction potential)
      : spec_(spec), mu2kappa_(mu * mu * kappa), potential_(std::move(potential)) {
    spec_.validate();
    if (!(mu2kappa_ > 0.0)) throw std::invalid_argument("grid: mu^2 kappa must be positive");
    build();
  }

  [[nodiscard]] const GridSpec& spec() const { return spec_; }
  [[nodiscard]] const Eigen::SparseMatrix<double>& generator() const { return gen_; }

  [[nodiscard]] Eigen::VectorXd node(Eigen::Index k) const {
    Eigen::VectorXd x(spec_.dof);
    for (int d = 0; d < spec_.dof; ++d) {
      x[d] = coord(static_cast<int>(k % spec_.points));
      k /= spec_.points;
    }
    return x;
  }

  [[nodiscard]] Eigen::VectorXd sample(const GridFunction& phi) const {
    Eigen::VectorXd v(spec_.size());
    for (Eigen::Index k = 0; k < v.size(); ++k) v[k] = phi(node(k));
    return v;
  }

  /// psi(T) = exp(T G) phi0. Dense eigendecomposition for small grids,
  /// otherwise a truncated Taylor series on substeps with tau |G|_1 <= 1.
  [[nodiscard]] EvolveResult evolve(const Eigen::VectorXd& phi0, double T) const {
    if (phi0.size() != spec_.size()) throw std::invalid_argument("grid: initial data has the wrong size");
    if (T < 0.0) throw std::invalid_argument("grid: negative time");
    EvolveResult r;
    if (T == 0.0) {
      r.psi = phi0;
    } else if (spec_.size() <= 1200) {
      const Eigen::MatrixXd dense(gen_);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense);
      const Eigen::VectorXd growth = (T * es.eigenvalues().array()).exp();
      r.psi = es.eigenvectors() * (growth.asDiagonal() * (es.eigenvectors().transpose() * phi0));
    } else {
      r.psi = taylor_action(phi0, T);
    }
    double edge = 0.0, total = 0.0;
    for (Eigen::Index k = 0; k < r.psi.size(); ++k) {
      const double a = std::abs(r.psi[k]);
      total += a;
      if (near_wall(k)) edge += a;
    }
    r.boundary_mass = total > 0.0 ? edge / total : 0.0;
    r.boundary_warning = r.boundary_mass > kBoundaryMassWarning;
    return r;
  }

  /// Multilinear interpolation; the walls carry the value zero.
  [[nodiscard]] double interpolate(const Eigen::VectorXd& psi, const Eigen::VectorXd& x) const {
    if (x.size() != spec_.dof) throw std::invalid_argument("grid: point has the wrong dimension");
    const double h = spec_.spacing();
    std::vector<int> lo(spec_.dof);
    std::vector<double> frac(spec_.dof);
    for (int d = 0; d < spec_.dof; ++d) {
      const double u = (x[d] + spec_.halfwidth) / h - 1.0;  // node index coordinate
      if (u < -1.0 || u > spec_.points) return 0.0;
      int k = static_cast<int>(std::floor(u));
      k = std::min(std::max(k, -1), spec_.points - 1);
      lo[d] = k;
      frac[d] = u - k;
    }
    double acc = 0.0;
    for (int corner = 0; corner < (1 << spec_.dof); ++corner) {
      double wgt = 1.0;
      Eigen::Index idx = 0, stride = 1;
      bool wall = false;
      for (int d = 0; d < spec_.dof; ++d) {
        const int up = (corner >> d) & 1;
        const int k = lo[d] + up;
        wgt *= up ? frac[d] : 1.0 - frac[d];
        if (k < 0 || k >= spec_.points) wall = true;
        idx += k * stride;
        stride *= spec_.points;
      }
      if (!wall && wgt != 0.0) acc += wgt * psi[idx];
    }
    return acc;
  }

 private:
  [[nodiscard]] double coord(int k) const { return -spec_.halfwidth + (k + 1) * spec_.spacing(); }

  [[nodiscard]] bool near_wall(Eigen::Index k) const {
    for (int d = 0; d < spec_.dof; ++d) {
      const int i = static_cast<int>(k % spec_.points);
      if (i < 2 || i >= spec_.points - 2) return true;
      k /= spec_.points;
    }
    return false;
  }

  void build() {
    const Eigen::Index n = spec_.size();
    const double h = spec_.spacing();
    const double c = 0.5 * mu2kappa_ / (h * h);
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(static_cast<std::size_t>(n) * (2 * spec_.dof + 1));
    for (Eigen::Index k = 0; k < n; ++k) {
      t.emplace_back(k, k, -2.0 * spec_.dof * c + potential_(node(k)) / mu2kappa_);
      Eigen::Index stride = 1;
      for (int d = 0; d < spec_.dof; ++d) {
        const int i = static_cast<int>((k / stride) % spec_.points);
        if (i > 0) t.emplace_back(k, k - stride, c);
        if (i + 1 < spec_.points) t.emplace_back(k, k + stride, c);
        stride *= spec_.points;
      }
    }
    gen_.resize(n, n);
    gen_.setFromTriplets(t.begin(), t.end());
    gen_.makeCompressed();
    norm1_ = 0.0;
    for (Eigen::Index j = 0; j < gen_.outerSize(); ++j) {
      double s = 0.0;
      for (Eigen::SparseMatrix<double>::InnerIterator it(gen_, j); it; ++it) s += std::abs(it.value());
      norm1_ = std::max(norm1_, s);
    }
  }

  [[nodiscard]] Eigen::VectorXd taylor_action(const Eigen::VectorXd& phi0, double T) const {
    const auto substeps = static_cast<long>(std::ceil(T * norm1_));
    const long m = std::max(1L, substeps);
    const double tau = T / static_cast<double>(m);
    Eigen::VectorXd v = phi0;
    for (long s = 0; s < m; ++s) {
      Eigen::VectorXd term = v;
      Eigen::VectorXd acc = v;
      for (int k = 1; k <= 60; ++k) {
        term = (tau / k) * (gen_ * term);
        acc += term;
        if (term.lpNorm<Eigen::Infinity>() <= 1e-17 * acc.lpNorm<Eigen::Infinity>()) break;
      }
      v = acc;
    }
    return v;
  }

  GridSpec spec_;
  double mu2kappa_;
  GridFunction potential_;
  Eigen::SparseMatrix<double> gen_;
  double norm1_ = 0.0;
};

/// Grid value at x0 on the refined grid, with the change from the coarse grid
/// as the discretisation budget.
struct KolmogorovReference {
  double value = 0.0;
  double coarse_value = 0.0;
  double budget = 0.0;
  double boundary_mass = 0.0;
  bool boundary_warning = false;
};

inline KolmogorovReference kolmogorov_reference(const GridSpec& coarse, double mu, double kappa,
                                                const GridFunction& potential, const GridFunction& phi0, double T,
                                                const Eigen::VectorXd& x0) {
  const GridPDE c(coarse, mu, kappa, potential);
  const GridPDE f(coarse.refined(), mu, kappa, potential);
  const EvolveResult rc = c.evolve(c.sample(phi0), T);
  const EvolveResult rf = f.evolve(f.sample(phi0), T);
  KolmogorovReference r;
  r.coarse_value = c.interpolate(rc.psi, x0);
  r.value = f.interpolate(rf.psi, x0);
  r.budget = std::abs(r.value - r.coarse_value);
  r.boundary_mass = rf.boundary_mass;
  r.boundary_warning = rf.boundary_warning;
  return r;
}

struct Verdict {
  double difference = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

/// PASS iff |mean - reference| <= 3 se + budget.
inline Verdict compare(double mc_mean, double mc_std_error, double reference, double budget) {
  Verdict v;
  v.difference = mc_mean - reference;
  v.tolerance = 3.0 * mc_std_error + budget;
  v.pass = std::isfinite(v.difference) && std::abs(v.difference) <= v.tolerance;
  return v;
}

}  // namespace gauge_reduce
