#include <gtest/gtest.h>

#include <random>

#include "gauge_reduce/field_io.hpp"
#include "gauge_reduce/gauge.hpp"
#include "oracles.hpp"

using namespace gauge_reduce;

namespace {

double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

SiteScalar mean_zero(SiteScalar u) {
  u.values.array() -= u.values.mean();
  return u;
}

}  // namespace

TEST(Rotation, GeneratorIsTheDerivative) {
  std::mt19937_64 rng(1);
  const Lattice lat({1, 3, 1.0});
  const SiteDoublet f = random_field<FieldKind::doublet>(lat, rng);
  const double t = 1e-6;
  const SiteDoublet fd((rotate(f, t).values - rotate(f, -t).values) / (2 * t));
  EXPECT_LT(max_abs(fd.values - apply_generator(f).values), 1e-9);
  EXPECT_LT(max_abs(rotate(rotate(f, 0.4), -0.4).values - f.values), 1e-15);
  EXPECT_NEAR(rotate(f, 1.1).values.norm(), f.values.norm(), 1e-14);
}

TEST(GaugeTransform, ComposesAdditively) {
  std::mt19937_64 rng(2);
  const Lattice lat({2, 3, 0.9});
  const FieldPair p = random_field_pair(lat, 0.7, rng);
  const SiteScalar e1 = random_field<FieldKind::scalar>(lat, rng);
  const SiteScalar e2 = random_field<FieldKind::scalar>(lat, rng);
  const FieldPair a = gauge_transform(lat, gauge_transform(lat, p, e1), e2);
  const FieldPair b = gauge_transform(lat, p, e1 + e2);
  EXPECT_LT(max_abs(a.A.values - b.A.values), 1e-13);
  EXPECT_LT(max_abs(a.f.values - b.f.values), 1e-13);
}

TEST(GaugeTransform, KillingVectorIsTheGenerator) {
  std::mt19937_64 rng(3);
  const Lattice lat({2, 3, 1.0});
  const FieldPair p = random_field_pair(lat, 1.3, rng);
  const SiteScalar eps = random_field<FieldKind::scalar>(lat, rng);
  const double t = 1e-6;
  const FieldPair up = gauge_transform(lat, p, t * eps);
  const FieldPair dn = gauge_transform(lat, p, -t * eps);
  const KillingVector k = killing_vector(lat, p, eps);
  EXPECT_LT(max_abs((up.A.values - dn.A.values) / (2 * t) - k.A.values), 1e-8);
  EXPECT_LT(max_abs((up.f.values - dn.f.values) / (2 * t) - k.f.values), 1e-8);
  const Eigen::MatrixXd Kf = scalar_killing_matrix(p.f, p.g0);
  EXPECT_LT(max_abs(Kf * eps.values - k.f.values), 1e-14);
}

TEST(Potential, IsGaugeInvariant) {
  std::mt19937_64 rng(4);
  const QuarticSelfInteraction quartic{0.3, 1.2};
  for (auto spec : {LatticeSpec{1, 4, 1.0}, LatticeSpec{2, 4, 0.6}, LatticeSpec{3, 3, 1.4}}) {
    const Lattice lat(spec);
    for (int t = 0; t < 10; ++t) {
      const FieldPair p = random_field_pair(lat, 0.9, rng);
      const SiteScalar eps = random_field<FieldKind::scalar>(lat, rng, 2.0);
      const double v = potential(lat, p, quartic);
      const double vg = potential(lat, gauge_transform(lat, p, eps), quartic);
      EXPECT_LE(std::abs(vg - v) / (1 + std::abs(v)), 1e-12);
    }
  }
}

TEST(Potential, PureGaugeHasNoMagneticEnergy) {
  std::mt19937_64 rng(5);
  const Lattice lat({3, 3, 1.0});
  const SiteVector A = gradient(lat, random_field<FieldKind::scalar>(lat, rng));
  for (std::size_t x = 0; x < lat.volume(); ++x) EXPECT_NEAR(magnetic_energy_density(lat, A, x), 0.0, 1e-13);
}

TEST(Potential, ReducesToGradientEnergyWithoutGaugeField) {
  std::mt19937_64 rng(6);
  const Lattice lat({2, 4, 0.5});
  FieldPair p = random_field_pair(lat, 1.0, rng);
  p.A = SiteVector::zeros(lat);
  double expected = 0.0;
  for (int a = 0; a < 2; ++a) {
    SiteScalar comp = SiteScalar::zeros(lat);
    for (std::size_t x = 0; x < lat.volume(); ++x) comp[static_cast<Eigen::Index>(x)] = p.f[doublet_index(x, a)];
    expected += 0.5 * inner(lat, gradient(lat, comp), gradient(lat, comp));
  }
  EXPECT_NEAR(potential(lat, p), expected, 1e-12 * (1 + expected));
}

TEST(TransverseProjector, MatchesKernelOfDivergence) {
  for (auto spec : {LatticeSpec{1, 4, 1.0}, LatticeSpec{2, 4, 1.0}, LatticeSpec{2, 3, 0.5}, LatticeSpec{3, 2, 1.0}}) {
    const GaugeOperators ops(spec);
    const Eigen::MatrixXd ref =
        oracle::kernel_projector(oracle::divergence_from_coords(spec.dim, spec.sites_per_dim, spec.spacing));
    const Eigen::MatrixXd& P = ops.transverse_projector();
    EXPECT_LT(max_abs(P - ref), 1e-12);
    EXPECT_LT(max_abs(P * P - P), 1e-12);
    EXPECT_LT(max_abs(ops.div() * P), 1e-12);
    EXPECT_LT(max_abs(P * ops.grad()), 1e-12);
  }
}

TEST(FaddeevPopov, PseudoInverseOnMeanZeroFunctions) {
  for (auto spec : {LatticeSpec{1, 2, 1.0}, LatticeSpec{2, 4, 1.0}, LatticeSpec{3, 3, 0.8}}) {
    const GaugeOperators ops(spec);
    const auto& fp = ops.faddeev_popov();
    const Eigen::Index V = ops.volume();
    const Eigen::MatrixXd target = Eigen::MatrixXd::Identity(V, V) - Eigen::MatrixXd::Constant(V, V, 1.0 / V);
    EXPECT_LT(max_abs(fp.matrix * fp.green - target), 1e-12);
    EXPECT_LT(max_abs(fp.green * fp.matrix - target), 1e-12);
    EXPECT_LT(max_abs(fp.green - fp.green.transpose()), 1e-15);
    EXPECT_LT(max_abs(fp.green * Eigen::VectorXd::Ones(V)), 1e-12);
    // Dense check through a full eigendecomposition.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(fp.matrix);
    Eigen::VectorXd inv = es.eigenvalues();
    for (Eigen::Index i = 0; i < inv.size(); ++i) inv[i] = std::abs(inv[i]) > 1e-9 ? 1.0 / inv[i] : 0.0;
    EXPECT_LT(max_abs(es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose() - fp.green), 1e-12);
  }
}

TEST(FaddeevPopov, TwoSiteGreenFunction) {
  const GaugeOperators ops({1, 2, 1.0});
  EXPECT_NEAR(ops.faddeev_popov().green(0, 0), -0.125, 1e-15);
  EXPECT_NEAR(ops.faddeev_popov().green(0, 1), 0.125, 1e-15);
}

TEST(AdaptedCoordinates, RoundTripAndGaugeCondition) {
  std::mt19937_64 rng(7);
  for (auto spec : {LatticeSpec{1, 3, 1.0}, LatticeSpec{2, 4, 1.0}, LatticeSpec{3, 2, 0.7}}) {
    const GaugeOperators ops(spec);
    for (int t = 0; t < 10; ++t) {
      const FieldPair p = random_field_pair(ops.lattice(), 1.1, rng);
      const AdaptedCoords c = to_adapted(ops, p);
      EXPECT_LT(max_abs(divergence(ops.lattice(), c.A_star).values), 1e-12);
      EXPECT_NEAR(c.a.values.mean(), 0.0, 1e-14);
      const FieldPair q = from_adapted(ops, c, p.g0);
      EXPECT_LT(max_abs(q.A.values - p.A.values), 1e-12);
      EXPECT_LT(max_abs(q.f.values - p.f.values), 1e-12);
    }
  }
}

TEST(AdaptedCoordinates, GaugeOrbitMapsToOnePointUpToGlobalPhase) {
  std::mt19937_64 rng(8);
  const GaugeOperators ops({2, 3, 1.0});
  const Lattice& lat = ops.lattice();
  const FieldPair p = random_field_pair(lat, 0.8, rng);
  const SiteScalar eps = random_field<FieldKind::scalar>(lat, rng);
  const AdaptedCoords c1 = to_adapted(ops, p);
  const AdaptedCoords c2 = to_adapted(ops, gauge_transform(lat, p, eps));
  EXPECT_LT(max_abs(c1.A_star.values - c2.A_star.values), 1e-12);
  // The mean of eps is a global rotation that the Coulomb condition leaves free.
  const SiteDoublet rotated = rotate(c1.f_tilde, p.g0 * eps.values.mean());
  EXPECT_LT(max_abs(rotated.values - c2.f_tilde.values), 1e-12);
  EXPECT_LT(max_abs(c2.a.values - c1.a.values - mean_zero(eps).values), 1e-12);
}

TEST(AdaptedCoordinates, SolveGaugeParameterOnPureGauge) {
  std::mt19937_64 rng(9);
  const GaugeOperators ops({2, 4, 1.0});
  const SiteScalar eps = mean_zero(random_field<FieldKind::scalar>(ops.lattice(), rng));
  const SiteScalar a = solve_gauge_parameter(ops, gradient(ops.lattice(), eps));
  EXPECT_LT(max_abs(a.values - eps.values), 1e-12);
}

TEST(ProjectorN, BlocksAndAnnihilatedKillingVectors) {
  std::mt19937_64 rng(10);
  const GaugeOperators ops({2, 3, 1.0});
  const Lattice& lat = ops.lattice();
  const FieldPair p = random_field_pair(lat, 1.2, rng);
  const AdaptedCoords c = to_adapted(ops, p);
  const NProjector N = projector_N(ops, c, p.g0);
  EXPECT_LT(max_abs(N.NA - ops.transverse_projector()), 1e-12);
  // N maps a vertical vector with mean-zero parameter to zero.
  const SiteScalar eps = mean_zero(random_field<FieldKind::scalar>(lat, rng));
  const KillingVector k = killing_vector(lat, FieldPair{c.A_star, c.f_tilde, p.g0}, eps);
  EXPECT_LT(max_abs(N.NA * k.A.values), 1e-12);
  EXPECT_LT(max_abs(N.Na * k.A.values + k.f.values), 1e-12);
}

TEST(ProjectorN, MatchesDerivativeOfCoordinateMap) {
  std::mt19937_64 rng(11);
  const GaugeOperators ops({1, 3, 1.0});
  const Lattice& lat = ops.lattice();
  // A point on the gauge surface with a = 0.
  FieldPair p = random_field_pair(lat, 0.9, rng);
  p = from_adapted(ops, AdaptedCoords{to_adapted(ops, p).A_star, p.f, SiteScalar::zeros(lat)}, p.g0);
  const Eigen::MatrixXd J = oracle::coordinate_jacobian(ops, p);
  const NProjector N = projector_N(ops, p.f, p.g0);
  const Eigen::Index nA = ops.gauge_dim();
  EXPECT_LT(max_abs(J.topLeftCorner(nA, nA) - N.NA), 1e-8);
  EXPECT_LT(max_abs(J.bottomLeftCorner(J.rows() - nA, nA) - N.Na), 1e-8);
  EXPECT_LT(max_abs(J.bottomRightCorner(J.rows() - nA, J.rows() - nA) -
                    Eigen::MatrixXd::Identity(J.rows() - nA, J.rows() - nA)),
            1e-8);
}

TEST(FieldPair, ValidationRejectsBadInput) {
  const Lattice lat({1, 2, 1.0});
  FieldPair p{SiteVector::zeros(lat), SiteDoublet::zeros(lat), 1.0};
  EXPECT_NO_THROW(p.validate(lat));
  p.g0 = -1.0;
  EXPECT_THROW(p.validate(lat), std::invalid_argument);
  p.g0 = 1.0;
  p.f[0] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(p.validate(lat), std::invalid_argument);
}
