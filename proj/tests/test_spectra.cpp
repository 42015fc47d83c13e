#include <gtest/gtest.h>

#include <random>

#include "ifk/spectra.hpp"
#include "oracles.hpp"

using namespace ifk;

namespace {

constexpr double pi = std::numbers::pi;

Matrix scalar(cplx v) { return Matrix::Constant(1, 1, v); }

InterfaceOperator hopping_1d() {
  return InterfaceOperator::shift(Lattice(1, 1), {1}) + InterfaceOperator::shift(Lattice(1, 1), {-1});
}

TranslationInvariantSystem ssh_bulk(double m) {
  TranslationInvariantSystem s{Lattice(1, 2), {}};
  Matrix b0 = Matrix::Zero(2, 2), up = Matrix::Zero(2, 2), down = Matrix::Zero(2, 2);
  b0(0, 1) = b0(1, 0) = m;
  up(1, 0) = 1.0;
  down(0, 1) = 1.0;
  if (m != 0.0) s.symbol.emplace(ShiftVector{0}, b0);
  s.symbol.emplace(ShiftVector{1}, up);
  s.symbol.emplace(ShiftVector{-1}, down);
  return s;
}

void expect_hull(const SpectrumSet& s, std::vector<Interval> want, double tol) {
  ASSERT_EQ(s.hull().size(), want.size());
  for (std::size_t i = 0; i < want.size(); ++i) {
    EXPECT_NEAR(s.hull()[i].lower, want[i].lower, tol);
    EXPECT_NEAR(s.hull()[i].upper, want[i].upper, tol);
  }
}

}  // namespace

TEST(BlochSymbol, HoppingIsTwoCos) {
  auto s = quasi_orbits(hopping_1d())[0].invariant();
  Eigen::VectorXd th(1);
  th << 0.0;
  EXPECT_NEAR(bloch_symbol(s, th)(0, 0).real(), 2.0, 1e-15);
  th << 1.1;
  EXPECT_NEAR(std::abs(bloch_symbol(s, th)(0, 0) - 2.0 * std::cos(1.1)), 0.0, 1e-15);
}

TEST(BlochSymbol, IdentityEverywhere) {
  TranslationInvariantSystem s{Lattice(2, 3), {{ShiftVector{0, 0}, Matrix::Identity(3, 3)}}};
  Eigen::VectorXd th(2);
  th << 0.4, 2.2;
  EXPECT_EQ(max_abs(bloch_symbol(s, th) - Matrix::Identity(3, 3)), 0.0);
}

TEST(BlochSymbol, MasslessSshHasUnitEigenvalues) {
  auto s = ssh_bulk(0.0);
  for (double t : {0.0, 0.7, 2.5}) {
    Eigen::VectorXd th(1);
    th << t;
    Matrix h = bloch_symbol(s, th);
    EXPECT_NEAR(std::abs(h(0, 1) - std::polar(1.0, -t)), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(h(1, 0) - std::polar(1.0, t)), 0.0, 1e-15);
    auto e = dense_eigensolve(h, true, false).values;
    EXPECT_NEAR(e(0).real(), -1.0, 1e-14);
    EXPECT_NEAR(e(1).real(), 1.0, 1e-14);
  }
}

TEST(BulkSpectrum, HoppingFillsInterval) {
  auto s = bulk_spectrum(quasi_orbits(hopping_1d())[0].invariant(), BlochGrid::uniform(1, 1024));
  EXPECT_EQ(s.kind(), SpectrumKind::real_line);
  expect_hull(s, {{-2.0, 2.0}}, 2 * pi / 1024);
}

TEST(BulkSpectrum, SshBandEdges) {
  auto s = bulk_spectrum(ssh_bulk(0.5), BlochGrid::uniform(1, 1024));
  expect_hull(s, {{-1.5, -0.5}, {0.5, 1.5}}, 1e-12);
}

TEST(BulkSpectrum, ShiftFillsCircle) {
  auto s = bulk_spectrum(quasi_orbits(InterfaceOperator::shift(Lattice(1, 1), {1}))[0].invariant(),
                         BlochGrid::uniform(1, 64));
  EXPECT_EQ(s.kind(), SpectrumKind::unit_circle);
  expect_hull(s, {{-pi, pi}}, 0.0);
  for (const auto& z : s.points()) EXPECT_LE(std::abs(std::abs(z) - 1.0), 1e-10);
}

TEST(BulkSpectrum, CoarseGridRejected) {
  EXPECT_THROW(bulk_spectrum(ssh_bulk(0.5), BlochGrid::uniform(1, 4)), config_error);
  EXPECT_THROW(bulk_spectrum(ssh_bulk(0.5), BlochGrid::uniform(2, 16)), dimension_mismatch);
}

TEST(EssentialSpectrum, SshWallIsUnionOfBulks) {
  auto s = essential_spectrum(oracle::ssh_wall_operator(0.5, 2.0, 3.0), BlochGrid::uniform(1, 1024));
  expect_hull(s, {{-3.0, -0.5}, {0.5, 3.0}}, 1e-12);
}

TEST(EssentialSpectrum, CompactPerturbationIsInvisible) {
  auto t = oracle::ssh_wall_operator(0.5, 2.0, 3.0);
  auto bump = InterfaceOperator::multiplication(
      Lattice(1, 2), CoefficientProfile::compact(1, 2, 4, [](const Site& x) { return Matrix::Constant(2, 2, 0.3 * x[0]); }));
  auto a = essential_spectrum(t, BlochGrid::uniform(1, 256));
  auto b = essential_spectrum(t + bump, BlochGrid::uniform(1, 256));
  ASSERT_EQ(a.points().size(), b.points().size());
  for (std::size_t i = 0; i < a.points().size(); ++i) EXPECT_EQ(a.points()[i], b.points()[i]);
  EXPECT_EQ(a.hull(), b.hull());
}

TEST(EssentialSpectrum, PureBulkEqualsBulkSpectrum) {
  auto t = oracle::ssh_wall_operator(0.7, 0.7, 3.0);
  auto a = essential_spectrum(t, BlochGrid::uniform(1, 512));
  auto b = bulk_spectrum(ssh_bulk(0.7), BlochGrid::uniform(1, 512));
  EXPECT_EQ(a.hull(), b.hull());
}

TEST(EssentialSpectrum, ChiralSymmetry) {
  auto s = essential_spectrum(oracle::ssh_wall_operator(0.3, 1.7, 2.0), BlochGrid::uniform(1, 512));
  for (const auto& iv : s.hull()) EXPECT_LE(s.distance(-0.5 * (iv.lower + iv.upper)), s.resolution());
  ASSERT_EQ(s.hull().size() % 2, 0u);
  for (std::size_t i = 0; i < s.hull().size(); ++i) {
    const auto& a = s.hull()[i];
    const auto& b = s.hull()[s.hull().size() - 1 - i];
    EXPECT_NEAR(a.lower, -b.upper, s.resolution());
  }
}

TEST(EssentialSpectrum, GridRefinementConverges) {
  auto t = oracle::ssh_wall_operator(0.5, 2.0, 3.0);
  double prev = 1.0;
  SpectrumSet coarse = essential_spectrum(t, BlochGrid::uniform(1, 16));
  for (int n : {32, 64, 128, 256}) {
    SpectrumSet fine = essential_spectrum(t, BlochGrid::uniform(1, n));
    EXPECT_GE(fine.points().size(), coarse.points().size());
    double d = hausdorff(coarse, fine);
    EXPECT_LE(d, 3.0 * two_pi / (n / 2));
    prev = d;
    coarse = fine;
  }
  EXPECT_LT(prev, 0.05);
}

// Random 1D hermitian bulks (shift radius <= 2, N <= 2) against a periodic ring.
TEST(EssentialSpectrum, MatchesPeriodicRingOracle) {
  std::mt19937_64 rng(2024);
  const double pitch = two_pi / 1024;
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 1 + trial % 2;
    const int radius = 1 + (trial / 2) % 2;
    std::vector<std::pair<int, Matrix>> symbol;
    std::vector<std::pair<ShiftVector, CoefficientProfile>> terms;
    for (int g = 0; g <= radius; ++g) {
      Matrix b = 0.5 * oracle::random_matrix(n, rng);
      if (g == 0) b = 0.5 * (b + b.adjoint()).eval();
      symbol.emplace_back(g, b);
      terms.emplace_back(ShiftVector{g}, CoefficientProfile::constant(1, b));
      if (g != 0) {
        symbol.emplace_back(-g, b.adjoint());
        terms.emplace_back(ShiftVector{-g}, CoefficientProfile::constant(1, b.adjoint()));
      }
    }
    InterfaceOperator t(Lattice(1, n), terms);
    SpectrumSet ess = essential_spectrum(t, BlochGrid::uniform(1, 1024));
    auto ring = oracle::periodic_ring_spectrum(symbol, 400);
    double lip = 0.0;
    for (const auto& [g, b] : symbol) lip += std::abs(g) * op_norm(b);
    std::vector<cplx> pts(ring.begin(), ring.end());
    SpectrumSet ring_set = SpectrumSet::from_points(pts, lip * two_pi / 400 * 1.000001, SpectrumKind::real_line);
    EXPECT_LE(hausdorff(ess, ring_set), 2 * pitch) << "trial " << trial;
  }
}

TEST(SpectralGap, Examples) {
  auto ssh = bulk_spectrum(ssh_bulk(0.5), BlochGrid::uniform(1, 1024));
  Gap g = spectral_gap(ssh, 0.0);
  EXPECT_NEAR(g.lower, -0.5, 1e-12);
  EXPECT_NEAR(g.upper, 0.5, 1e-12);
  auto band = bulk_spectrum(quasi_orbits(hopping_1d())[0].invariant(), BlochGrid::uniform(1, 1024));
  EXPECT_THROW(spectral_gap(band, 0.0), no_gap);
  auto heavy = bulk_spectrum(ssh_bulk(2.0), BlochGrid::uniform(1, 1024));
  g = spectral_gap(heavy, 0.0);
  EXPECT_NEAR(g.lower, -1.0, 1e-12);
  EXPECT_NEAR(g.upper, 1.0, 1e-12);
}

TEST(SpectrumSetOps, ArcsWrapAcrossCut) {
  std::vector<cplx> pts;
  for (int k = -5; k <= 5; ++k) pts.push_back(std::polar(1.0, pi + 0.01 * k));
  auto s = SpectrumSet::from_points(pts, 0.011, SpectrumKind::unit_circle);
  ASSERT_EQ(s.hull().size(), 1u);
  EXPECT_NEAR(s.hull()[0].width(), 0.1, 1e-12);
  Gap g = spectral_gap(s, 1.0);
  EXPECT_NEAR(g.lower, -pi + 0.05, 1e-12);
  EXPECT_NEAR(g.upper, pi - 0.05, 1e-12);
  EXPECT_THROW(spectral_gap(s, -1.0), no_gap);
}

TEST(SpectrumSetOps, HausdorffOfIntervals) {
  auto a = SpectrumSet::from_hull({{0.0, 1.0}, {2.0, 3.0}}, 0.0, SpectrumKind::real_line);
  auto b = SpectrumSet::from_hull({{0.0, 3.0}}, 0.0, SpectrumKind::real_line);
  EXPECT_NEAR(hausdorff(a, b), 0.5, 1e-15);
  EXPECT_NEAR(hausdorff_points({0.0, 3.0}, {{0.0, 3.0}}), 1.5, 1e-15);
  auto u = unite(a, b);
  ASSERT_EQ(u.hull().size(), 1u);
}

TEST(EssentialSpectrum, TwoDimensionalLaplacian) {
  std::vector<std::pair<ShiftVector, CoefficientProfile>> terms;
  for (int axis = 0; axis < 2; ++axis)
    for (int s : {-1, 1}) terms.emplace_back(LatticeVector::unit(2, axis, s), CoefficientProfile::identity(2, 1));
  auto s = essential_spectrum(InterfaceOperator(Lattice(2, 1), terms));
  expect_hull(s, {{-4.0, 4.0}}, 1e-12);
}

TEST(EssentialSpectrum, FaceFiberedFlaggedApproximate) {
  // Laplacian plus a Cartesian on-site step sign(x1)·0.5 seen from all four faces.
  CartesianPayload p;
  p.dimension = 2;
  p.bulk_function = [](const Site& x) { return scalar(0.5 * std::tanh(x[0] / 2.0)); };
  p.envelope = exponential_envelope(1.0001, 1.0);
  DomainWallPayload w{scalar(-0.5), scalar(0.5), [](const Site& y) { return scalar(0.5 * std::tanh(y[0] / 2.0)); },
                      exponential_envelope(1.0001, 1.0)};
  p.face_limits = {CoefficientProfile::constant(1, scalar(-0.5)), CoefficientProfile::constant(1, scalar(0.5)),
                   make_domain_wall(w, 1), make_domain_wall(w, 1)};
  std::vector<std::pair<ShiftVector, CoefficientProfile>> terms{{ShiftVector{0, 0}, make_cartesian(p, 1)}};
  for (int axis = 0; axis < 2; ++axis)
    for (int s : {-1, 1}) terms.emplace_back(LatticeVector::unit(2, axis, s), CoefficientProfile::identity(2, 1));
  SpectralOptions o;
  o.face_angle_points = 64;
  o.fiber_points = 128;
  auto ess = essential_spectrum_by_orbit(InterfaceOperator(Lattice(2, 1), terms), o);
  EXPECT_EQ(ess.orbits.size(), 4u);
  EXPECT_TRUE(ess.total.approximate());
  // Faces x1 -> ±∞ carry the bulks ±0.5 + 2cosθ1 + 2cosθ2.
  expect_hull(ess.total, {{-4.5, 4.5}}, 0.05);
}
