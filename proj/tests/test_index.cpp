#include <gtest/gtest.h>

#include "ifk/index.hpp"
#include "oracles.hpp"

using namespace ifk;

namespace {

const ChiralSymmetry sigma_z = ChiralSymmetry::sublattice(1, 1);

InterfaceOperator ssh_bulk(double m) { return oracle::ssh_wall_operator(m, m, 3.0); }

std::function<Matrix(double)> mass_plus_shift(double m) {
  return [m](double theta) { return Matrix::Constant(1, 1, m + std::polar(1.0, theta)); };
}

// (m_L, m_R) pairs avoiding |m| = 1.
const std::vector<std::pair<double, double>> wall_grid = {{0.5, 2.0}, {2.0, 0.5}, {0.5, 0.25}, {2.0, 4.0},
                                                          {0.3, 1.7}, {1.7, 0.3}, {0.2, 0.7}, {1.5, 3.0},
                                                          {-0.5, 2.0}, {0.6, -3.0}, {-2.5, -0.4}, {0.8, 1.3}};

}  // namespace

TEST(ChiralSymmetry, ValidatesInvolution) {
  Matrix bad = Matrix::Identity(2, 2) * 2.0;
  EXPECT_THROW(ChiralSymmetry{bad}, hypothesis_violation);
  Matrix rot(2, 2);
  rot << 0, 1, 1, 0;
  ChiralSymmetry px(rot);
  EXPECT_EQ(px.plus_dim(), 1);
  EXPECT_EQ(px.minus_dim(), 1);
  EXPECT_NO_THROW(sigma_z.require_chiral(ssh_bulk(0.5)));
  EXPECT_THROW(px.require_chiral(ssh_bulk(0.5)), hypothesis_violation);
}

TEST(ChiralSymmetry, OffDiagonalBlockOfSsh) {
  Matrix h(2, 2);
  h << 0, 3, 5, 0;
  EXPECT_EQ(sigma_z.off_diagonal(h)(0, 0), cplx(5.0));
}

TEST(Winding, SpecExamples) {
  EXPECT_EQ(winding_number(mass_plus_shift(0.5)).value, 1);
  EXPECT_EQ(winding_number(mass_plus_shift(2.0)).value, 0);
  EXPECT_THROW(winding_number(mass_plus_shift(1.0)), not_invertible);
}

TEST(Winding, MatchesArgumentPrinciple) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<std::pair<int, cplx>> coeffs;
    for (int k = -2; k <= 2; ++k) coeffs.emplace_back(k, cplx(u(rng), u(rng)));
    auto q = [&](double theta) {
      cplx s = 0.0;
      for (const auto& [k, c] : coeffs) s += c * std::polar(1.0, k * theta);
      return Matrix::Constant(1, 1, s);
    };
    try {
      EXPECT_EQ(winding_number(q).value, oracle::laurent_winding(coeffs));
    } catch (const not_invertible&) {
    }
  }
}

TEST(Winding, HomotopyInvariance) {
  // q_s(θ) = (0.5 + s) + e^{iθ} + s·e^{2iθ}/4 stays invertible for s ∈ [0, 0.2].
  for (int k = 0; k <= 10; ++k) {
    const double s = 0.02 * k;
    auto q = [s](double theta) {
      return Matrix::Constant(1, 1, 0.5 + s + std::polar(1.0, theta) + 0.25 * s * std::polar(1.0, 2 * theta));
    };
    EXPECT_EQ(winding_number(q).value, 1);
  }
}

TEST(Winding, MatrixValuedDeterminant) {
  auto q = [](double theta) {
    Matrix m = Matrix::Zero(2, 2);
    m(0, 0) = 0.5 + std::polar(1.0, theta);
    m(1, 1) = 0.3 + std::polar(1.0, -theta);
    m(0, 1) = 0.1;
    return m;
  };
  auto coeffs = std::vector<std::pair<int, cplx>>{{-1, 0.5}, {0, 0.15 + 1.0}, {1, 0.3}};
  EXPECT_EQ(winding_number(q).value, oracle::laurent_winding(coeffs));
}

TEST(Winding, SshBulks) {
  EXPECT_EQ(bulk_winding(quasi_orbits(ssh_bulk(0.5))[0].invariant(), sigma_z).value, 1);
  EXPECT_EQ(bulk_winding(quasi_orbits(ssh_bulk(2.0))[0].invariant(), sigma_z).value, 0);
  EXPECT_EQ(bulk_winding(quasi_orbits(ssh_bulk(-0.5))[0].invariant(), sigma_z).value, 1);
}

TEST(Fredholm, SpecExamples) {
  auto wall = oracle::ssh_wall_operator(0.5, 2.0, 3.0);
  auto c = fredholm_check(wall, 0.0);
  EXPECT_TRUE(c.fredholm);
  EXPECT_NEAR(c.epsilon, 0.5, 1e-3);
  Lattice lat(1, 1);
  EXPECT_FALSE(fredholm_check(InterfaceOperator::shift(lat, {1}) + InterfaceOperator::shift(lat, {-1}), 0.0).fredholm);
  EXPECT_FALSE(fredholm_check(wall, 1.2).fredholm);
}

TEST(ChiralIndex, SpecExamples) {
  TruncationBox box(1, 100);
  EXPECT_EQ(chiral_interface_index(oracle::ssh_wall_operator(0.5, 2.0, 3.0), sigma_z, box), 1);
  EXPECT_EQ(chiral_interface_index(ssh_bulk(0.5), sigma_z, box), 0);
  EXPECT_EQ(chiral_interface_index(oracle::ssh_wall_operator(2.0, 0.5, 3.0), sigma_z, box), -1);
}

TEST(ChiralIndex, MatchesChainOracle) {
  for (auto [ml, mr] : wall_grid)
    EXPECT_EQ(chiral_interface_index(oracle::ssh_wall_operator(ml, mr, 3.0), sigma_z, TruncationBox(1, 80)),
              oracle::ssh_wall_zero_mode_chirality(ml, mr, 3.0, 80))
        << ml << " " << mr;
}

TEST(ChiralIndex, GapClosedRejected) {
  EXPECT_THROW(chiral_interface_index(oracle::ssh_wall_operator(1.0, 2.0, 3.0), sigma_z, TruncationBox(1, 60)),
               not_invertible);
}

TEST(ChiralIndex, NonChiralRejected) {
  auto t = ssh_bulk(0.5) + InterfaceOperator::identity(Lattice(1, 2));
  EXPECT_THROW(chiral_interface_index(t, sigma_z, TruncationBox(1, 30)), hypothesis_violation);
}

TEST(ChiralIndex, CompactPerturbationInvariance) {
  auto wall = oracle::ssh_wall_operator(0.5, 2.0, 3.0);
  for (unsigned seed : {1u, 2u, 3u}) {
    std::mt19937_64 rng(seed);
    std::map<Site, Matrix> values;
    for (int x = -4; x <= 4; ++x) {
      cplx z(std::normal_distribution<double>()(rng), std::normal_distribution<double>()(rng));
      Matrix m = Matrix::Zero(2, 2);
      m(0, 1) = 0.3 * z;
      m(1, 0) = 0.3 * std::conj(z);
      values[Site{x}] = m;
    }
    auto k = InterfaceOperator::multiplication(Lattice(1, 2), CoefficientProfile::compact(1, 2, values));
    EXPECT_EQ(chiral_interface_index(wall + k, sigma_z, TruncationBox(1, 80)), 1);
  }
}

TEST(DomainWallDecomposition, SpecExamples) {
  TruncationBox box(1, 100);
  struct Case {
    double ml, mr;
    int index, wl, wr;
  };
  for (auto c : {Case{0.5, 2.0, 1, 1, 0}, Case{0.5, 0.25, 0, 1, 1}, Case{2.0, 4.0, 0, 0, 0}}) {
    auto r = domain_wall_decomposition(oracle::ssh_wall_operator(c.ml, c.mr, 3.0), sigma_z, box);
    EXPECT_EQ(r.interface_index, c.index);
    ASSERT_EQ(r.per_bulk.size(), 2u);
    EXPECT_EQ(r.per_bulk[0].label, "-inf");
    EXPECT_EQ(r.per_bulk[0].invariant, c.wl);
    EXPECT_EQ(r.per_bulk[0].sign, 1);
    EXPECT_EQ(r.per_bulk[1].invariant, c.wr);
    EXPECT_EQ(r.per_bulk[1].sign, -1);
    EXPECT_EQ(r.identity_residual, 0);
  }
}

TEST(DomainWallDecomposition, AdditivityGridAndAntisymmetry) {
  TruncationBox box(1, 80);
  for (auto [ml, mr] : wall_grid) {
    auto r = domain_wall_decomposition(oracle::ssh_wall_operator(ml, mr, 3.0), sigma_z, box);
    EXPECT_EQ(r.identity_residual, 0) << ml << " " << mr;
    auto s = domain_wall_decomposition(oracle::ssh_wall_operator(mr, ml, 3.0), sigma_z, box);
    EXPECT_EQ(s.interface_index, -r.interface_index);
  }
}

TEST(ConeDecomposition, OneDimensionalMatchesDomainWall) {
  TruncationBox box(1, 100);
  for (auto [ml, mr] : wall_grid) {
    auto t = oracle::ssh_wall_operator(ml, mr, 3.0);
    auto a = domain_wall_decomposition(t, sigma_z, box);
    auto b = cone_decomposition(t, sigma_z, box);
    EXPECT_TRUE(b.experimental);
    EXPECT_EQ(a.interface_index, b.interface_index);
    ASSERT_EQ(b.per_bulk.size(), 2u);
    for (std::size_t j = 0; j < 2; ++j) {
      EXPECT_EQ(a.per_bulk[j].invariant, b.per_bulk[j].invariant) << ml << " " << mr;
      EXPECT_EQ(a.per_bulk[j].sign, b.per_bulk[j].sign);
    }
    EXPECT_EQ(b.identity_residual, 0);
  }
}

TEST(ConeDecomposition, OverlappingSectorsRejected) {
  auto t = oracle::ssh_wall_operator(0.5, 2.0, 3.0);
  SectorAssignment s{{"a", "b"}, {[](const Site&) { return true; }, [](const Site& x) { return x[0] > 0; }}};
  EXPECT_THROW(cone_decomposition(t, sigma_z, TruncationBox(1, 40), s), config_error);
}

TEST(SpectralFlow, ConstantPathIsZero) {
  std::vector<InterfaceOperator> path(5, oracle::ssh_wall_operator(0.5, 2.0, 3.0) +
                                             chiral_mass(Lattice(1, 2), sigma_z, 0.2));
  EXPECT_EQ(spectral_flow(path, TruncationBox(1, 40)), 0);
}

TEST(SpectralFlow, ChiralLoopEqualsIndexChange) {
  std::vector<InterfaceOperator> path;
  for (int k = 0; k <= 30; ++k) path.push_back(oracle::ssh_wall_operator(0.5 + 0.05 * k, 2.0, 3.0));
  TruncationBox box(1, 40);
  const int change = chiral_interface_index(path.back(), sigma_z, box) - chiral_interface_index(path.front(), sigma_z, box);
  EXPECT_EQ(change, -1);
  auto loop = chiral_mass_loop(path, sigma_z);
  EXPECT_EQ(spectral_flow(loop, box), change);
  std::reverse(loop.begin(), loop.end());
  EXPECT_EQ(spectral_flow(loop, box), -change);
}

TEST(SpectralFlow, CoarseStepRejected) {
  std::vector<InterfaceOperator> path{ssh_bulk(0.5) + chiral_mass(Lattice(1, 2), sigma_z, 0.2),
                                      ssh_bulk(0.5) + chiral_mass(Lattice(1, 2), sigma_z, -0.2)};
  SpectralFlowOptions o;
  o.max_step = 0.1;
  EXPECT_THROW(spectral_flow(path, TruncationBox(1, 20), o), unstable_result);
}
