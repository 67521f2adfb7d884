#include <gtest/gtest.h>

#include <numeric>
#include <random>

#include "gauge_reduce/field_io.hpp"
#include "gauge_reduce/stochastic.hpp"
#include "oracles.hpp"

using namespace gauge_reduce;

namespace {

SDEConfig config(double dt, std::size_t steps, std::size_t paths, std::uint64_t seed = 1) {
  SDEConfig c;
  c.dt = dt;
  c.n_steps = steps;
  c.n_paths = paths;
  c.seed = seed;
  return c;
}

double one(const Eigen::VectorXd&) { return 1.0; }
double zero(const Eigen::VectorXd&) { return 0.0; }

}  // namespace

TEST(PathRng, ReproducibleAndIndependentPerPath) {
  PathRng a(5, 3), b(5, 3), c(5, 4), d(6, 3);
  for (int i = 0; i < 100; ++i) {
    const double x = a.normal();
    EXPECT_EQ(x, b.normal());
    EXPECT_NE(x, c.normal());
    EXPECT_NE(x, d.normal());
  }
  EXPECT_NE(path_seed(1, 0), path_seed(1, 1));
  EXPECT_NE(path_seed(1, 0), path_seed(2, 0));
}

TEST(PathRng, WienerIncrementMoments) {
  PathRng rng(9, 0);
  const double dt = 0.01, w = 0.25;
  const Eigen::VectorXd dw = wiener_increment(rng, 1000000, dt, w);
  const double mean = dw.mean();
  const double var = (dw.array() - mean).square().sum() / static_cast<double>(dw.size() - 1);
  EXPECT_NEAR(mean, 0.0, 5.0 * std::sqrt(dt / w / 1e6));
  EXPECT_NEAR(var / (dt / w), 1.0, 0.01);
}

TEST(PairwiseSum, MatchesExtendedPrecision) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n;
  std::vector<double> v(100001);
  long double ref = 0;
  for (auto& x : v) {
    x = n(rng);
    ref += x;
  }
  EXPECT_NEAR(pairwise_sum(v), static_cast<double>(ref), 1e-10);
  std::vector<double> ints(37);
  std::iota(ints.begin(), ints.end(), 1.0);
  EXPECT_EQ(pairwise_sum(ints), 703.0);
  EXPECT_EQ(pairwise_sum(std::vector<double>{}), 0.0);
}

TEST(SDEConfig, Validation) {
  SDEConfig c;
  EXPECT_NO_THROW(c.validate());
  c.n_paths = 1;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = SDEConfig{};
  c.mu = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = SDEConfig{};
  c.dt = -1.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(FlatDiffusion, MartingaleWithExpectedVariance) {
  SDEConfig cfg = config(0.05, 10, 100000, 3);
  cfg.mu = 1.5;
  cfg.kappa = 2.0;
  const double w = 0.5;
  const Eigen::VectorXd x0 = Eigen::VectorXd::Constant(1, 0.7);
  const FKEstimate m = feynman_kac(FlatDiffusion{w}, x0, zero, [](const Eigen::VectorXd& x) { return x[0]; }, cfg);
  const FKEstimate v =
      feynman_kac(FlatDiffusion{w}, x0, zero, [](const Eigen::VectorXd& x) { return (x[0] - 0.7) * (x[0] - 0.7); }, cfg);
  EXPECT_NEAR(m.mean, 0.7, 4.0 * m.std_error);
  const double expected = cfg.mu2kappa() * cfg.horizon() / w;
  EXPECT_NEAR(v.mean / expected, 1.0, 0.05);
}

TEST(FeynmanKac, ZeroPotentialAndUnitObservableIsExact) {
  const SDEConfig cfg = config(0.01, 50, 200);
  const FKEstimate e = feynman_kac(FlatDiffusion{}, Eigen::VectorXd::Zero(2), zero, one, cfg);
  EXPECT_EQ(e.mean, 1.0);
  EXPECT_EQ(e.std_error, 0.0);
  EXPECT_TRUE(e.reliable);
}

TEST(FeynmanKac, ConstantPotentialGivesExponentialWeight) {
  SDEConfig cfg = config(0.01, 50, 100);
  cfg.mu = 0.8;
  const double c = 1.3;
  const FKEstimate e =
      feynman_kac(FlatDiffusion{}, Eigen::VectorXd::Zero(1), [c](const Eigen::VectorXd&) { return c; }, one, cfg);
  EXPECT_NEAR(e.mean, std::exp(c * cfg.horizon() / cfg.mu2kappa()), 1e-12);
  EXPECT_NEAR(e.std_error, 0.0, 1e-14);
}

TEST(FeynmanKac, QuadraticPotentialMatchesMehlerKernel) {
  const SDEConfig cfg = config(1e-3, 500, 20000, 5);
  auto V = [](const Eigen::VectorXd& x) { return -0.5 * x.squaredNorm(); };
  auto phi = [](const Eigen::VectorXd& x) { return std::exp(-0.5 * x.squaredNorm()); };
  const FKEstimate e = feynman_kac(FlatDiffusion{}, Eigen::VectorXd::Constant(1, 0.3), V, phi, cfg);
  EXPECT_NEAR(e.mean, oracle::mehler(0.3, 1.0, 1.0, 1.0, 0.5), 3.0 * e.std_error + 2e-3);
}

TEST(FeynmanKac, ExponentGuardFlagsPaths) {
  const SDEConfig cfg = config(0.01, 50, 10);
  const FKEstimate e =
      feynman_kac(FlatDiffusion{}, Eigen::VectorXd::Zero(1), [](const Eigen::VectorXd&) { return 2000.0; }, one, cfg);
  EXPECT_EQ(e.n_flagged, 10u);
  EXPECT_FALSE(e.reliable);
  EXPECT_NEAR(e.max_exponent, 1000.0, 1e-9);
  EXPECT_TRUE(std::isfinite(e.mean));
}

TEST(FeynmanKac, IndependentOfThreadCount) {
  SDEConfig cfg = config(0.01, 40, 5001, 17);
  auto V = [](const Eigen::VectorXd& x) { return -x.squaredNorm(); };
  auto phi = [](const Eigen::VectorXd& x) { return std::cos(x.sum()); };
  cfg.threads = 1;
  const FKEstimate a = feynman_kac(FlatDiffusion{}, Eigen::VectorXd::Constant(3, 0.1), V, phi, cfg);
  cfg.threads = 4;
  const FKEstimate b = feynman_kac(FlatDiffusion{}, Eigen::VectorXd::Constant(3, 0.1), V, phi, cfg);
  cfg.threads = 7;
  const FKEstimate c = feynman_kac(FlatDiffusion{}, Eigen::VectorXd::Constant(3, 0.1), V, phi, cfg);
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.std_error, b.std_error);
  EXPECT_EQ(a.mean, c.mean);
}

TEST(RunIndexed, PropagatesExceptions) {
  EXPECT_THROW(run_indexed<int>(100, 4,
                                [](std::size_t i) -> int {
                                  if (i == 57) throw std::runtime_error("boom");
                                  return 0;
                                }),
               std::runtime_error);
}

TEST(DriftedDiffusion, SingularDriftAbortsPath) {
  DriftedDiffusion proc{[](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    if (x[0] > 0.0) throw SingularOrbitMetric("test");
    return Eigen::VectorXd::Zero(1);
  }};
  const SDEConfig cfg = config(0.01, 100, 1000);
  const FKEstimate e = feynman_kac(proc, Eigen::VectorXd::Constant(1, -0.2), zero, one, cfg);
  EXPECT_GT(e.n_aborted, 100u);
  EXPECT_FALSE(e.reliable);
}

TEST(ReducedProcess, AbortsAtVanishingScalar) {
  const GaugeOperators ops({1, 2, 1.0});
  const AdaptedCoords z{SiteVector::zeros(ops.lattice()), SiteDoublet::zeros(ops.lattice()),
                        SiteScalar::zeros(ops.lattice())};
  const SDEConfig cfg = config(0.01, 10, 20);
  const FKEstimate e = feynman_kac(
      ReducedLatticeProcess(ops, 1.0), z, [](const AdaptedCoords&) { return 0.0; },
      [](const AdaptedCoords&) { return 1.0; }, cfg);
  EXPECT_EQ(e.n_aborted, 20u);
  EXPECT_TRUE(std::isnan(e.mean));
  EXPECT_FALSE(e.reliable);
}

TEST(ReducedProcess, StaysOnGaugeSurface) {
  std::mt19937_64 rng(4);
  const GaugeOperators ops({2, 3, 1.0});
  const AdaptedCoords c0 = to_adapted(ops, random_field_pair(ops.lattice(), 1.0, rng));
  for (bool flat : {true, false}) {
    const auto traj = sample_path(ReducedLatticeProcess(ops, 1.0, flat), c0, config(0.01, 100, 2), 3);
    ASSERT_EQ(traj.size(), 101u);
    for (const auto& c : traj) {
      EXPECT_LE(divergence(ops.lattice(), c.A_star).values.cwiseAbs().maxCoeff(), 1e-10);
    }
  }
}

TEST(ReducedProcess, OneStepMeanMatchesDrift) {
  std::mt19937_64 rng(5);
  const GaugeOperators ops({1, 3, 1.0});
  const double g0 = 1.2;
  const AdaptedCoords c0 = to_adapted(ops, random_field_pair(ops.lattice(), g0, rng));
  const DriftSplit b = OrbitGeometry(ops, c0.f_tilde, g0).reduced_drift();
  SDEConfig cfg = config(0.01, 1, 200000, 8);
  cfg.kappa = 0.5;
  const ReducedLatticeProcess proc(ops, g0);
  const Eigen::Index nf = c0.f_tilde.size();
  for (Eigen::Index i = 0; i < nf; ++i) {
    auto phi = [&](const AdaptedCoords& c) { return (c.f_tilde[i] - c0.f_tilde[i]) / (cfg.mu2kappa() * cfg.dt); };
    const FKEstimate e = feynman_kac(proc, c0, [](const AdaptedCoords&) { return 0.0; }, phi, cfg);
    EXPECT_NEAR(e.mean, b.f[i], 5.0 * e.std_error) << "component " << i;
  }
}

TEST(OriginalProcess, DiffusesWithLatticeWeight) {
  const GaugeOperators ops({1, 2, 0.5});
  const FieldPair p0{SiteVector::zeros(ops.lattice()), SiteDoublet::zeros(ops.lattice()), 1.0};
  const SDEConfig cfg = config(0.1, 5, 40000, 2);
  const FKEstimate e = feynman_kac(
      OriginalLatticeProcess(ops), p0, [](const FieldPair&) { return 0.0; },
      [](const FieldPair& p) { return p.f.values.squaredNorm(); }, cfg);
  const double expected = 4.0 * cfg.horizon() / 0.5;
  EXPECT_NEAR(e.mean, expected, 4.0 * e.std_error);
}

TEST(Girsanov, ZeroDriftGivesIdenticalEstimates) {
  const SDEConfig cfg = config(0.01, 20, 1000);
  const GirsanovResult r = girsanov_check([](const Eigen::VectorXd& x) { return Eigen::VectorXd::Zero(x.size()); },
                                          Eigen::VectorXd::Constant(2, 0.5),
                                          [](const Eigen::VectorXd& x) { return x.squaredNorm(); }, cfg);
  EXPECT_EQ(r.drifted.mean, r.weighted.mean);
  EXPECT_EQ(r.difference, 0.0);
  EXPECT_TRUE(r.agree);
}

TEST(Girsanov, ConstantDriftShiftsMean) {
  SDEConfig cfg = config(0.01, 50, 100000, 4);
  cfg.mu = 0.9;
  const double w = 2.0;
  const Eigen::VectorXd b = Eigen::VectorXd::Constant(1, 0.8);
  const GirsanovResult r = girsanov_check([&](const Eigen::VectorXd&) { return b; }, Eigen::VectorXd::Zero(1),
                                          [](const Eigen::VectorXd& x) { return x[0]; }, cfg, w);
  const double expected = cfg.mu2kappa() * 0.8 * cfg.horizon();
  EXPECT_NEAR(r.drifted.mean, expected, 1e-9 + 4.0 * r.drifted.std_error);
  EXPECT_NEAR(r.weighted.mean, expected, 4.0 * r.weighted.std_error);
  EXPECT_TRUE(r.agree);
}

TEST(Girsanov, RejectsLargeSystems) {
  const SDEConfig cfg = config(0.01, 2, 2);
  EXPECT_THROW(girsanov_check([](const Eigen::VectorXd& x) { return x; }, Eigen::VectorXd::Zero(9),
                              [](const Eigen::VectorXd&) { return 1.0; }, cfg),
               std::invalid_argument);
}
