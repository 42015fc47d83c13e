#include <gtest/gtest.h>

#include "ifk/bulk.hpp"
#include "oracles.hpp"

using namespace ifk;

namespace {

Matrix scalar(cplx v) { return Matrix::Constant(1, 1, v); }

CoefficientProfile step_wall(double left, double right, double width) {
  DomainWallPayload p{scalar(left), scalar(right),
                      [=](const Site& x) { return scalar(left + (right - left) / (1.0 + std::exp(-x[0] / width))); },
                      exponential_envelope(std::abs(right - left) * 1.0001, 1.0 / width)};
  return make_domain_wall(p, 1);
}

CoefficientProfile cos_radial(double v0) {
  RadialPayload p{2, [=](const Direction& w) { return scalar(v0 * w(0)); }, std::abs(v0),
                  [](const Site&) { return Matrix::Zero(1, 1); }, [](double) { return 0.0; }};
  return make_radial(p, 1);
}

}  // namespace

TEST(Profile, DomainWallEvaluatesTransition) {
  auto f = step_wall(0.0, 1.0, 2.0);
  double v = f.evaluate({0})(0, 0).real();
  EXPECT_GT(v, 0.0);
  EXPECT_LT(v, 1.0);
  EXPECT_EQ(f.wall_limit(Side::minus)(0, 0), cplx(0.0));
  EXPECT_EQ(f.wall_limit(Side::plus)(0, 0), cplx(1.0));
}

TEST(Profile, EmptyCompactIsZero) {
  auto f = CoefficientProfile::compact(2, 3, std::map<Site, Matrix>{});
  EXPECT_EQ(max_abs(f.evaluate({4, -7})), 0.0);
  EXPECT_EQ(f.variant(), Asymptotics::compactly_supported);
}

TEST(Profile, ConstantRadial) {
  Matrix c(2, 2);
  c << 1, 2, 3, 4;
  RadialPayload p{2, [=](const Direction&) { return c; }, 0.0, [](const Site&) { return Matrix::Zero(2, 2); },
                  [](double) { return 0.0; }};
  auto f = make_radial(p, 2);
  EXPECT_EQ(max_abs(f.evaluate({3, -5}) - c), 0.0);
}

TEST(Profile, EnvelopeViolationRejected) {
  DomainWallPayload p{scalar(0.0), scalar(1.0), [](const Site& x) { return scalar(x[0] > 0 ? 1.0 - 1.0 / x[0] : 0.0); },
                      exponential_envelope(1.0, 1.0)};
  EXPECT_THROW(make_domain_wall(p, 1), certificate_error);
}

TEST(Profile, OverlappingCapsRejected) {
  Direction a(2), b(2);
  a << 1, 0;
  b << std::cos(0.5), std::sin(0.5);
  ConePayload p{2, {{a, 0.3}, {b, 0.3}}, {[](const Direction&) { return scalar(1.0); }, [](const Direction&) { return scalar(1.0); }},
                0.0, [](const Site&) { return Matrix::Zero(1, 1); }, [](double) { return 0.0; }};
  EXPECT_THROW(make_cone(p, 1), certificate_error);
}

TEST(Profile, OscillationMustVanish) {
  VanishingOscillationPayload bad{1, [](const Site& x) { return scalar(x[0] % 2 ? 1.0 : -1.0); }, {scalar(1.0), scalar(-1.0)},
                                  0.1, power_envelope(1.0, 0.5)};
  EXPECT_THROW(make_vanishing_oscillation(bad, 1), certificate_error);
  VanishingOscillationPayload good{1, [](const Site& x) { return scalar(std::sin(std::sqrt(std::abs(x[0])))); },
                                   {}, 0.05, power_envelope(0.6, 0.5)};
  for (int k = 0; k <= 40; ++k) good.asymptotic_range.push_back(scalar(-1.0 + k / 20.0));
  EXPECT_NO_THROW(make_vanishing_oscillation(good, 1));
}

TEST(QuasiOrbits, SshWallHasTwoBulks) {
  auto t = oracle::ssh_wall_operator(0.5, 2.0, 3.0);
  auto orbits = quasi_orbits(t);
  ASSERT_EQ(orbits.size(), 2u);
  EXPECT_EQ(orbits[0].label, "-inf");
  const auto& left = orbits[0].invariant().symbol;
  const auto& right = orbits[1].invariant().symbol;
  EXPECT_EQ(left.at(ShiftVector{0})(0, 1), cplx(0.5));
  EXPECT_EQ(right.at(ShiftVector{0})(0, 1), cplx(2.0));
  EXPECT_EQ(left.at(ShiftVector{1})(1, 0), cplx(1.0));
}

TEST(QuasiOrbits, PureBulkIsItsOwnSymbol) {
  auto t = InterfaceOperator::shift(Lattice(1, 1), {1}) + InterfaceOperator::shift(Lattice(1, 1), {-1});
  auto orbits = quasi_orbits(t);
  ASSERT_EQ(orbits.size(), 1u);
  EXPECT_TRUE(approx_equal(orbits[0].invariant().as_operator(), t, 0.0));
}

TEST(QuasiOrbits, CartesianHasFourFaces) {
  CartesianPayload p;
  p.dimension = 2;
  p.bulk_function = [](const Site& x) { return scalar(std::tanh(x[0] / 2.0) * std::tanh(x[1] / 2.0)); };
  p.envelope = exponential_envelope(2.0001, 1.0);
  // Faces: f -> ±tanh(y/2).
  for (int axis = 0; axis < 2; ++axis)
    for (int s : {-1, 1}) {
      DomainWallPayload w{scalar(-s), scalar(s), [s](const Site& y) { return scalar(s * std::tanh(y[0] / 2.0)); },
                          exponential_envelope(2.0001, 1.0)};
      p.face_limits.push_back(make_domain_wall(w, 1));
    }
  auto f = make_cartesian(p, 1);
  InterfaceOperator t(Lattice(2, 1), {{ShiftVector{0, 0}, f},
                                      {ShiftVector{1, 0}, CoefficientProfile::identity(2, 1)},
                                      {ShiftVector{0, 1}, CoefficientProfile::identity(2, 1)}});
  auto orbits = quasi_orbits(t);
  ASSERT_EQ(orbits.size(), 4u);
  for (const auto& b : orbits) {
    EXPECT_FALSE(b.translation_invariant());
    EXPECT_EQ(b.fibered().fiber_lattice().dimension, 1);
  }
  // Laplacian-type face: the e_1 shift becomes the phase e^{iθ}.
  auto fiber = orbits[1].fibered().at(0.3);  // face (1,+)
  Matrix diag = fiber.terms().at(ShiftVector{0}).evaluate({4});
  EXPECT_NEAR(std::abs(diag(0, 0) - (std::tanh(2.0) + std::polar(1.0, 0.3))), 0.0, 1e-14);
}

TEST(QuasiOrbits, RadialDirectionsOnGrid) {
  InterfaceOperator t(Lattice(2, 1), {{ShiftVector{0, 0}, cos_radial(0.5)}, {ShiftVector{1, 0}, CoefficientProfile::identity(2, 1)}});
  QuasiOrbitOptions o;
  o.sphere_points = 12;
  auto orbits = quasi_orbits(t, o);
  ASSERT_EQ(orbits.size(), 12u);
  EXPECT_NEAR(orbits[0].invariant().symbol.at(ShiftVector{0, 0})(0, 0).real(), 0.5, 1e-15);
  EXPECT_NEAR(orbits[6].invariant().symbol.at(ShiftVector{0, 0})(0, 0).real(), -0.5, 1e-15);
  Direction w(2);
  w << 0, 1;
  auto b = directional_limit(t, w);
  // The on-site limit vanishes exactly there and is pruned from the symbol.
  EXPECT_EQ(b.invariant().symbol.count(ShiftVector{0, 0}), 0u);
}

TEST(QuasiOrbits, ConeComplementIsZeroLimit) {
  Direction e(2);
  e << 1, 0;
  ConePayload p{2, {{e, 0.5}}, {[](const Direction&) { return scalar(2.0); }}, 0.0,
                [](const Site&) { return Matrix::Zero(1, 1); }, [](double) { return 0.0; }};
  auto f = make_cone(p, 1);
  InterfaceOperator t(Lattice(2, 1), {{ShiftVector{0, 0}, f + CoefficientProfile::constant(2, scalar(1.0))}});
  QuasiOrbitOptions o;
  o.sphere_points = 36;
  auto orbits = quasi_orbits(t, o);
  ASSERT_FALSE(orbits.empty());
  EXPECT_EQ(orbits.back().label, "outside-caps");
  EXPECT_TRUE(orbits.back().zero_limit);
  EXPECT_EQ(orbits.back().invariant().symbol.at(ShiftVector{0, 0})(0, 0), cplx(1.0));
  EXPECT_EQ(orbits.front().invariant().symbol.at(ShiftVector{0, 0})(0, 0), cplx(3.0));
}

TEST(QuasiOrbits, MixingRules) {
  auto wall = step_wall(0.0, 1.0, 2.0);
  VanishingOscillationPayload vo{1, [](const Site& x) { return scalar(std::sin(std::sqrt(std::abs(x[0])))); }, {}, 0.05,
                                 power_envelope(0.6, 0.5)};
  for (int k = 0; k <= 40; ++k) vo.asymptotic_range.push_back(scalar(-1.0 + k / 20.0));
  auto osc = make_vanishing_oscillation(vo, 1);
  InterfaceOperator bad(Lattice(1, 1), {{ShiftVector{0}, wall}, {ShiftVector{1}, osc}});
  EXPECT_THROW(quasi_orbits(bad), inconsistent_asymptotics);
  EXPECT_THROW(quasi_orbits(InterfaceOperator::zero(Lattice(1, 1))), inconsistent_asymptotics);
}

TEST(QuasiOrbits, CompactAbsorptionIsExact) {
  auto t = oracle::ssh_wall_operator(0.5, 2.0, 3.0);
  auto bump = InterfaceOperator::multiplication(
      Lattice(1, 2), CoefficientProfile::compact(1, 2, 5, [](const Site& x) { return Matrix::Constant(2, 2, 0.1 * x[0]); }));
  auto a = quasi_orbits(t);
  auto b = quasi_orbits(t + bump);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& sa = a[i].invariant().symbol;
    const auto& sb = b[i].invariant().symbol;
    ASSERT_EQ(sa.size(), sb.size());
    for (const auto& [g, m] : sa) EXPECT_EQ(max_abs(m - sb.at(g)), 0.0);
  }
}

TEST(QuasiOrbits, TranslationCovariance) {
  auto t = oracle::ssh_wall_operator(0.5, 2.0, 3.0);
  auto a = quasi_orbits(t);
  auto b = quasi_orbits(translate(t, ShiftVector{7}));
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].label, b[i].label);
    for (const auto& [g, m] : a[i].invariant().symbol) EXPECT_EQ(max_abs(m - b[i].invariant().symbol.at(g)), 0.0);
  }
}

TEST(QuasiOrbits, VanishingOscillationOnePerSample) {
  VanishingOscillationPayload vo{1, [](const Site& x) { return scalar(std::sin(std::sqrt(std::abs(x[0])))); }, {}, 0.05,
                                 power_envelope(0.6, 0.5)};
  for (int k = 0; k <= 40; ++k) vo.asymptotic_range.push_back(scalar(-1.0 + k / 20.0));
  auto osc = make_vanishing_oscillation(vo, 1);
  InterfaceOperator t(Lattice(1, 1), {{ShiftVector{0}, osc}, {ShiftVector{1}, CoefficientProfile::identity(1, 1)}});
  auto orbits = quasi_orbits(t);
  ASSERT_EQ(orbits.size(), 41u);
  EXPECT_EQ(orbits[40].invariant().symbol.at(ShiftVector{0})(0, 0), cplx(1.0));
}
