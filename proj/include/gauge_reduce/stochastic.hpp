#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "gauge_reduce/gauge.hpp"
#include "gauge_reduce/orbit_geometry.hpp"
#include "gauge_reduce/rng.hpp"

namespace gauge_reduce {

/// Exponents of the Feynman-Kac weight above this are clamped and the path flagged.
inline constexpr double kExponentGuard = 700.0;
/// An estimate with a larger fraction of aborted paths is reported unreliable.
inline constexpr double kMaxAbortFraction = 0.01;

struct SDEConfig {
  double dt = 1e-3;
  std::size_t n_steps = 100;
  std::size_t n_paths = 1000;
  std::uint64_t seed = 1;
  double mu = 1.0;
  double kappa = 1.0;
  unsigned threads = 0;  ///< 0: GAUGE_REDUCE_THREADS, else hardware concurrency

  void validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("SDEConfig: dt must be positive");
    if (n_steps == 0) throw std::invalid_argument("SDEConfig: n_steps must be positive");
    if (n_paths < 2) throw std::invalid_argument("SDEConfig: need at least 2 paths");
    if (!(mu > 0.0) || !(kappa > 0.0)) throw std::invalid_argument("SDEConfig: mu and kappa must be positive");
  }
  [[nodiscard]] double horizon() const { return dt * static_cast<double>(n_steps); }
  /// mu^2 kappa, the diffusion constant.
  [[nodiscard]] double mu2kappa() const { return mu * mu * kappa; }
  [[nodiscard]] double sigma() const { return mu * std::sqrt(kappa); }
};

inline unsigned thread_count(const SDEConfig& cfg) {
  if (cfg.threads > 0) return cfg.threads;
  if (const char* env = std::getenv("GAUGE_REDUCE_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs fn(i) for i in [0, n) on `threads` workers with a static interleaved
/// assignment. Results are stored by index, so the output does not depend on
/// the thread count.
template <class Result, class Fn>
std::vector<Result> run_indexed(std::size_t n, unsigned threads, Fn&& fn) {
  std::vector<Result> out(n);
  threads = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, threads), std::max<std::size_t>(n, 1)));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
    return out;
  }
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < n; i += threads) out[i] = fn(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

/// Pairwise summation in index order.
inline double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

struct PathOutcome {
  double value = 0.0;
  double exponent = 0.0;
  bool aborted = false;
  bool flagged = false;
};

struct FKEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n_paths = 0;
  std::size_t n_aborted = 0;
  double abort_fraction = 0.0;
  std::size_t n_flagged = 0;
  double max_exponent = -std::numeric_limits<double>::infinity();
  bool reliable = false;
};

/// Sample mean and two-pass standard error over the paths that did not abort.
inline FKEstimate summarize(const std::vector<PathOutcome>& paths) {
  FKEstimate e;
  e.n_paths = paths.size();
  std::vector<double> vals;
  vals.reserve(paths.size());
  for (const auto& p : paths) {
    if (p.aborted) {
      ++e.n_aborted;
      continue;
    }
    if (p.flagged) ++e.n_flagged;
    e.max_exponent = std::max(e.max_exponent, p.exponent);
    vals.push_back(p.value);
  }
  e.abort_fraction = e.n_paths ? static_cast<double>(e.n_aborted) / static_cast<double>(e.n_paths) : 0.0;
  const std::size_t n = vals.size();
  if (n == 0) {
    e.mean = std::numeric_limits<double>::quiet_NaN();
    e.std_error = std::numeric_limits<double>::quiet_NaN();
    return e;
  }
  e.mean = pairwise_sum(vals) / static_cast<double>(n);
  if (n > 1) {
    std::vector<double> sq(n);
    for (std::size_t i = 0; i < n; ++i) sq[i] = (vals[i] - e.mean) * (vals[i] - e.mean);
    e.std_error = std::sqrt(pairwise_sum(sq) / static_cast<double>(n - 1) / static_cast<double>(n));
  }
  e.reliable = n > 1 && e.n_flagged == 0 && e.abort_fraction <= kMaxAbortFraction && std::isfinite(e.mean);
  return e;
}

template <class P>
concept Process = requires(const P& p, typename P::State& s, const SDEConfig& cfg, PathRng& rng) {
  { p.step(s, cfg, rng) } -> std::convertible_to<bool>;
};

/// dX = mu sqrt(kappa) dW on R^dof, Var dW = dt / weight.
struct FlatDiffusion {
  using State = Eigen::VectorXd;
  double weight = 1.0;

  bool step(State& x, const SDEConfig& cfg, PathRng& rng) const {
    x += cfg.sigma() * wiener_increment(rng, x.size(), cfg.dt, weight);
    return true;
  }
};

/// dX = mu^2 kappa b(X) dt + mu sqrt(kappa) dW. The drift is given per unit
/// mu^2 kappa; a drift that throws SingularOrbitMetric aborts the path.
struct DriftedDiffusion {
  using State = Eigen::VectorXd;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> drift;
  double weight = 1.0;

  bool step(State& x, const SDEConfig& cfg, PathRng& rng) const {
    Eigen::VectorXd b;
    try {
      b = drift(x);
    } catch (const SingularOrbitMetric&) {
      return false;
    }
    const Eigen::VectorXd dw = wiener_increment(rng, x.size(), cfg.dt, weight);
    x += cfg.mu2kappa() * cfg.dt * b + cfg.sigma() * dw;
    return x.allFinite();
  }
};

/// Free diffusion of (A, f) with the flat metric h^s sum_x.
struct OriginalLatticeProcess {
  using State = FieldPair;
  const GaugeOperators* ops = nullptr;

  explicit OriginalLatticeProcess(const GaugeOperators& o) : ops(&o) {}

  bool step(State& p, const SDEConfig& cfg, PathRng& rng) const {
    const double w = ops->lattice().cell_volume();
    p.A.values += cfg.sigma() * wiener_increment(rng, p.A.size(), cfg.dt, w);
    p.f.values += cfg.sigma() * wiener_increment(rng, p.f.size(), cfg.dt, w);
    return true;
  }
};

/// The projected process on the gauge surface: A* and f~ follow
///   dq = mu^2 kappa (-1/2 h Gamma + j1 + j2) dt + mu sqrt(kappa) N dW,
/// with the gauge parameter a held fixed. With flat_override the drift is
/// dropped and only the projected noise remains.
struct ReducedLatticeProcess {
  using State = AdaptedCoords;
  const GaugeOperators* ops = nullptr;
  double g0 = 1.0;
  bool flat_override = false;

  ReducedLatticeProcess(const GaugeOperators& o, double g, bool flat = false) : ops(&o), g0(g), flat_override(flat) {}

  bool step(State& c, const SDEConfig& cfg, PathRng& rng) const {
    if (c.f_tilde.values.squaredNorm() < kSingularFieldNorm2) return false;
    const double w = ops->lattice().cell_volume();
    DriftSplit b;
    if (!flat_override) {
      try {
        b = OrbitGeometry(*ops, c.f_tilde, g0).reduced_drift();
      } catch (const SingularOrbitMetric&) {
        return false;
      }
    }
    const Eigen::VectorXd dwA = wiener_increment(rng, c.A_star.size(), cfg.dt, w);
    const Eigen::VectorXd dwf = wiener_increment(rng, c.f_tilde.size(), cfg.dt, w);
    const Eigen::MatrixXd& P = ops->transverse_projector();

    // N^a dW_A = -K_f Lambda dW_A
    const Eigen::VectorXd lam = ops->lambda() * dwA;
    Eigen::VectorXd noise_f = dwf;
    for (Eigen::Index x = 0; x < lam.size(); ++x) {
      noise_f[2 * x] -= g0 * c.f_tilde[2 * x + 1] * lam[x];
      noise_f[2 * x + 1] += g0 * c.f_tilde[2 * x] * lam[x];
    }
    const double k = cfg.mu2kappa() * cfg.dt;
    if (!flat_override) {
      c.A_star.values += k * b.A.values;
      c.f_tilde.values += k * b.f.values;
    }
    c.A_star.values += cfg.sigma() * (P * dwA);
    c.A_star.values = P * c.A_star.values;
    c.f_tilde.values += cfg.sigma() * noise_f;
    return c.A_star.all_finite() && c.f_tilde.all_finite() &&
           c.f_tilde.values.squaredNorm() >= kSingularFieldNorm2;
  }
};

/// One trajectory (states at t = 0, dt, ..., T) of path `index`.
/// Stops early if the process aborts.
template <Process P>
std::vector<typename P::State> sample_path(const P& proc, const typename P::State& x0, const SDEConfig& cfg,
                                           std::size_t index = 0) {
  cfg.validate();
  PathRng rng(cfg.seed, index);
  std::vector<typename P::State> traj;
  traj.reserve(cfg.n_steps + 1);
  traj.push_back(x0);
  typename P::State s = x0;
  for (std::size_t n = 0; n < cfg.n_steps; ++n) {
    if (!proc.step(s, cfg, rng)) break;
    traj.push_back(s);
  }
  return traj;
}

/// E_x0[ exp( (1/mu^2 kappa) int_0^T V(X_t) dt ) phi(X_T) ], with the time
/// integral by the trapezoid rule on the Euler-Maruyama grid.
template <Process P, class Potential, class Observable>
FKEstimate feynman_kac(const P& proc, const typename P::State& x0, Potential&& V, Observable&& phi,
                       const SDEConfig& cfg) {
  cfg.validate();
  const double scale = 1.0 / cfg.mu2kappa();
  auto one_path = [&](std::size_t i) {
    PathRng rng(cfg.seed, i);
    typename P::State s = x0;
    PathOutcome out;
    double v_prev = V(s);
    double expo = 0.0;
    for (std::size_t n = 0; n < cfg.n_steps; ++n) {
      if (!proc.step(s, cfg, rng)) {
        out.aborted = true;
        return out;
      }
      const double v = V(s);
      expo += 0.5 * cfg.dt * scale * (v_prev + v);
      v_prev = v;
    }
    out.exponent = expo;
    if (expo > kExponentGuard || !std::isfinite(expo)) {
      out.flagged = true;
      expo = std::isfinite(expo) ? kExponentGuard : (expo > 0 ? kExponentGuard : -kExponentGuard);
    }
    out.value = std::exp(expo) * phi(s);
    return out;
  };
  return summarize(run_indexed<PathOutcome>(cfg.n_paths, thread_count(cfg), one_path));
}

struct GirsanovResult {
  FKEstimate drifted;   ///< E[phi(X_T)] with X the drifted process
  FKEstimate weighted;  ///< E[Z_T phi(W_T)] with the Girsanov density Z
  double difference = 0.0;
  double combined_std_error = 0.0;
  bool agree = false;
};

/// Compares a drifted diffusion with the driftless one reweighted by
///   Z = exp{ (w/sigma) sum beta.dW - (w / 2 sigma^2) sum |beta|^2 dt },
/// beta = mu^2 kappa b, sigma = mu sqrt(kappa). Both estimators use the same
/// Wiener increments on each path. For Euler-Maruyama the identity is exact
/// at every dt, so the two agree up to sampling error.
template <class Drift, class Observable>
GirsanovResult girsanov_check(Drift&& b, const Eigen::VectorXd& x0, Observable&& phi, const SDEConfig& cfg,
                              double weight = 1.0) {
  cfg.validate();
  if (x0.size() > 8) throw std::invalid_argument("girsanov_check: at most 8 degrees of freedom");
  const double sigma = cfg.sigma();
  const double m2k = cfg.mu2kappa();
  struct Pair {
    PathOutcome drifted, weighted;
  };
  auto one_path = [&](std::size_t i) {
    PathRng rng(cfg.seed, i);
    Eigen::VectorXd x = x0;
    Eigen::VectorXd y = x0;
    double log_z = 0.0;
    Pair out;
    for (std::size_t n = 0; n < cfg.n_steps; ++n) {
      Eigen::VectorXd bx, by;
      try {
        bx = m2k * b(x);
        by = m2k * b(y);
      } catch (const SingularOrbitMetric&) {
        out.drifted.aborted = out.weighted.aborted = true;
        return out;
      }
      const Eigen::VectorXd dw = wiener_increment(rng, x.size(), cfg.dt, weight);
      log_z += (weight / sigma) * by.dot(dw) - 0.5 * (weight / (sigma * sigma)) * by.squaredNorm() * cfg.dt;
      x += bx * cfg.dt + sigma * dw;
      y += sigma * dw;
    }
    out.drifted.value = phi(x);
    out.weighted.exponent = log_z;
    if (log_z > kExponentGuard) {
      out.weighted.flagged = true;
      log_z = kExponentGuard;
    }
    out.weighted.value = std::exp(log_z) * phi(y);
    return out;
  };
  const auto pairs = run_indexed<Pair>(cfg.n_paths, thread_count(cfg), one_path);
  std::vector<PathOutcome> d, w;
  d.reserve(pairs.size());
  w.reserve(pairs.size());
  for (const auto& p : pairs) {
    d.push_back(p.drifted);
    w.push_back(p.weighted);
  }
  GirsanovResult r;
  r.drifted = summarize(d);
  r.weighted = summarize(w);
  r.difference = r.drifted.mean - r.weighted.mean;
  r.combined_std_error = std::hypot(r.drifted.std_error, r.weighted.std_error);
  r.agree = std::abs(r.difference) <= 3.0 * r.combined_std_error;
  return r;
}

}  // namespace gauge_reduce
