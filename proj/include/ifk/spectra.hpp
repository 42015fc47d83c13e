#pragma once

// Bloch symbols, bulk spectra and the essential spectrum as a union over
// quasi-orbits.

#include <cstring>
#include <map>
#include <optional>
#include <string>

#include "ifk/bulk.hpp"
#include "ifk/eigen_tools.hpp"
#include "ifk/spectrum_set.hpp"

namespace ifk {

// Uniform grid θ_k = 2πk/n on each torus coordinate.
struct BlochGrid {
  std::vector<int> counts;

  BlochGrid() = default;
  explicit BlochGrid(std::vector<int> c) : counts(std::move(c)) {}

  static BlochGrid uniform(int dim, int n) { return BlochGrid(std::vector<int>(static_cast<std::size_t>(dim), n)); }
  // Level-0 defaults: 1024 on the circle, 128² and 32³ on higher tori.
  static BlochGrid default_for(int dim) { return uniform(dim, dim == 1 ? 1024 : dim == 2 ? 128 : 32); }

  int dimension() const { return static_cast<int>(counts.size()); }
  std::size_t size() const {
    std::size_t s = 1;
    for (int c : counts) s *= static_cast<std::size_t>(c);
    return s;
  }
  double pitch() const {
    double p = 0.0;
    for (int c : counts) p = std::max(p, two_pi / c);
    return p;
  }
  Eigen::VectorXd point(std::size_t index) const {
    Eigen::VectorXd th(dimension());
    for (int i = dimension() - 1; i >= 0; --i) {
      const auto c = static_cast<std::size_t>(counts[static_cast<std::size_t>(i)]);
      th(i) = two_pi * static_cast<double>(index % c) / static_cast<double>(c);
      index /= c;
    }
    return th;
  }
  void validate(int dim) const {
    if (dimension() != dim) throw dimension_mismatch("Bloch grid dimension does not match the lattice");
    for (int c : counts)
      if (c < 8) throw config_error("Bloch grid too coarse: need at least 8 points per direction");
  }
};

inline Matrix bloch_symbol(const TranslationInvariantSystem& s, const Eigen::VectorXd& theta) {
  const int n = s.lattice.fiber_dim;
  if (theta.size() != s.lattice.dimension) throw dimension_mismatch("quasi-momentum of wrong dimension");
  Matrix h = Matrix::Zero(n, n);
  for (const auto& [g, b] : s.symbol) {
    double phase = 0.0;
    for (int i = 0; i < g.dim(); ++i) phase += theta(i) * g[i];
    h += std::polar(1.0, phase) * b;
  }
  return h;
}

// Lipschitz constant of θ -> H(θ): Σ_g |g| |b_g|.
inline double symbol_lipschitz(const TranslationInvariantSystem& s) {
  double l = 0.0;
  for (const auto& [g, b] : s.symbol) l += g.norm() * op_norm(b);
  return l;
}

inline bool symbol_is_hermitian(const TranslationInvariantSystem& s, double tol = 1e-12) {
  for (const auto& [g, b] : s.symbol) {
    auto it = s.symbol.find(-g);
    Matrix partner = it == s.symbol.end() ? Matrix::Zero(b.rows(), b.cols()) : it->second;
    if (max_abs(partner - b.adjoint()) > tol * std::max(1.0, max_abs(b))) return false;
  }
  return true;
}

inline SpectrumSet bulk_spectrum(const TranslationInvariantSystem& s, const BlochGrid& grid) {
  grid.validate(s.lattice.dimension);
  const int n = s.lattice.fiber_dim;
  if (s.symbol.empty()) return SpectrumSet::from_points({cplx(0.0)}, 0.0, SpectrumKind::real_line);
  const bool herm = symbol_is_hermitian(s);
  const std::size_t count = grid.size();
  std::vector<cplx> values(count * static_cast<std::size_t>(n));
  std::vector<char> unitary(count, 1);
  parallel_for(count, [&](std::size_t k) {
    Matrix h = bloch_symbol(s, grid.point(k));
    cplx* out = values.data() + k * static_cast<std::size_t>(n);
    if (n == 1) {
      out[0] = herm ? cplx(h(0, 0).real()) : h(0, 0);
    } else {
      DenseEigen e = dense_eigensolve(h, herm, false);
      for (int i = 0; i < n; ++i) out[i] = e.values(i);
    }
    if (!herm) unitary[k] = max_abs(h.adjoint() * h - Matrix::Identity(n, n)) <= 1e-10;
  });
  const double step = symbol_lipschitz(s) * grid.pitch() * (1.0 + 1e-9) + 1e-13;
  if (herm) return SpectrumSet::from_points(std::move(values), step, SpectrumKind::real_line);
  if (std::all_of(unitary.begin(), unitary.end(), [](char u) { return u != 0; }))
    return SpectrumSet::from_points(std::move(values), 0.5 * std::numbers::pi * step, SpectrumKind::unit_circle);
  return SpectrumSet::from_points(std::move(values), step, SpectrumKind::generic);
}

struct SpectralOptions {
  std::optional<BlochGrid> grid;  // level 0; BlochGrid::default_for when absent
  int face_angle_points = 256;    // θ_j samples of a face-fibered system
  int deep_angle_points = 64;     // θ samples below the first fibering level
  int fiber_points = 256;         // per-direction grid for 1D fibers
  int deep_fiber_points = 64;     // per-direction grid for 2D fibers
  int fiber_box_1d = 30;          // truncation used for fiber discrete spectra
  int fiber_box_2d = 8;
  QuasiOrbitOptions orbits;
};

struct OrbitSpectrum {
  std::string label;
  SpectrumSet spectrum;
};

struct EssentialSpectrum {
  SpectrumSet total;
  std::vector<OrbitSpectrum> orbits;
};

EssentialSpectrum essential_spectrum_by_orbit(const InterfaceOperator& t, const SpectralOptions& opts = {});

namespace detail {

inline std::string symbol_key(const TranslationInvariantSystem& s) {
  std::string key;
  for (const auto& [g, b] : s.symbol) {
    key += g.str();
    key.append(reinterpret_cast<const char*>(b.data()), sizeof(cplx) * static_cast<std::size_t>(b.size()));
  }
  return key;
}

// Eigenvalues of a fiber truncation lying off its essential spectrum and not
// sitting on the box edge: the discrete-spectrum estimate of one fiber.
inline std::vector<cplx> fiber_discrete(const InterfaceOperator& fiber, const SpectrumSet& ess, int half_width) {
  TruncationBox box(fiber.dimension(), half_width);
  const bool herm = is_hermitian(fiber);
  if (!herm) return {};
  DenseEigen e = dense_eigensolve(assemble_dense(fiber, box), true, true);
  const int n = fiber.fiber_dim();
  const auto edge = boundary_indicator(box, n, 5 * std::max(1, fiber.shift_radius()));
  const double tol = std::max(ess.resolution(), 1e-9);
  std::vector<cplx> out;
  for (Eigen::Index k = 0; k < e.values.size(); ++k) {
    if (ess.distance(e.values(k)) <= tol) continue;
    if (mass_fraction(e.vectors.col(k), edge) >= 0.9) continue;
    out.push_back(e.values(k));
  }
  return out;
}

inline SpectrumSet face_fibered_spectrum(const FaceFiberedSystem& sys, const SpectralOptions& opts) {
  const int fiber_dim = sys.fiber_lattice().dimension;
  const int angles = opts.face_angle_points;
  SpectralOptions child = opts;
  child.grid = BlochGrid::uniform(fiber_dim, fiber_dim == 1 ? opts.fiber_points : opts.deep_fiber_points);
  child.face_angle_points = opts.deep_angle_points;
  const int box = fiber_dim == 1 ? opts.fiber_box_1d : opts.fiber_box_2d;

  std::vector<SpectrumSet> per_angle(static_cast<std::size_t>(angles));
  const double theta_lipschitz = sys.theta_lipschitz();
  for (std::size_t k = 0; k < per_angle.size(); ++k) {
    const double theta = two_pi * static_cast<double>(k) / angles;
    InterfaceOperator f = sys.at(theta);
    SpectrumSet ess = essential_spectrum_by_orbit(f, child).total;
    std::vector<cplx> disc = fiber_discrete(f, ess, box);
    per_angle[k] = disc.empty() ? ess : unite(ess, SpectrumSet::from_points(disc, 0.0, ess.kind()));
  }
  // Neighbouring angles move the spectrum by at most L_θ·Δθ; close those gaps.
  SpectrumSet out;
  for (auto& s : per_angle) out = unite(out, s);
  const double tol = std::max(out.resolution(), theta_lipschitz * two_pi / angles);
  std::vector<Interval> hull = out.hull();
  if (out.kind() == SpectrumKind::real_line) {
    SpectrumSet merged = SpectrumSet::from_hull(detail::merge_intervals(hull, tol), tol, SpectrumKind::real_line);
    merged.set_approximate(true);
    return merged;
  }
  out.set_approximate(true);
  return out;
}

inline EssentialSpectrum essential_impl(const InterfaceOperator& t, const SpectralOptions& opts) {
  const BlochGrid grid = opts.grid ? *opts.grid : BlochGrid::default_for(t.dimension());
  grid.validate(t.dimension());
  EssentialSpectrum out;
  std::map<std::string, SpectrumSet> cache;
  for (const auto& b : quasi_orbits(t, opts.orbits)) {
    SpectrumSet s;
    if (b.translation_invariant()) {
      auto key = symbol_key(b.invariant());
      auto it = cache.find(key);
      if (it == cache.end()) it = cache.emplace(key, bulk_spectrum(b.invariant(), grid)).first;
      s = it->second;
    } else {
      s = face_fibered_spectrum(b.fibered(), opts);
    }
    out.total = unite(out.total, s);
    out.orbits.push_back({b.label, std::move(s)});
  }
  return out;
}

}  // namespace detail

inline EssentialSpectrum essential_spectrum_by_orbit(const InterfaceOperator& t, const SpectralOptions& opts) {
  return detail::essential_impl(t, opts);
}

inline SpectrumSet essential_spectrum(const InterfaceOperator& t, const SpectralOptions& opts = {}) {
  return essential_spectrum_by_orbit(t, opts).total;
}

inline SpectrumSet essential_spectrum(const InterfaceOperator& t, const BlochGrid& grid) {
  SpectralOptions o;
  o.grid = grid;
  return essential_spectrum(t, o);
}

}  // namespace ifk
