#pragma once

// Interface operators T = Σ_g S_g f_g acting on ℓ²(ℤ^l, ℂ^N) by
//   (Tψ)(x) = Σ_g f_g(x) ψ(x - g).

#include <Eigen/Sparse>

#include <map>
#include <random>
#include <utility>
#include <vector>

#include "ifk/parallel.hpp"
#include "ifk/profile.hpp"

namespace ifk {

using SparseMatrix = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;

inline constexpr double prune_threshold = 1e-15;
inline constexpr std::size_t default_row_cap = 200000;

struct Claims {
  bool hermitian = false;
  bool unitary = false;
};

class InterfaceOperator {
 public:
  using TermMap = std::map<ShiftVector, CoefficientProfile>;

  explicit InterfaceOperator(Lattice lattice) : lattice_(lattice) {}

  // Terms sharing a shift are merged additively; numerically zero profiles are pruned.
  InterfaceOperator(Lattice lattice, const std::vector<std::pair<ShiftVector, CoefficientProfile>>& terms,
                    Claims claims = {})
      : lattice_(lattice), claims_(claims) {
    for (const auto& [g, f] : terms) accumulate(g, f);
    prune();
  }

  static InterfaceOperator identity(Lattice lat) {
    return InterfaceOperator(lat, {{ShiftVector(lat.dimension), CoefficientProfile::identity(lat.dimension, lat.fiber_dim)}},
                             {true, true});
  }
  static InterfaceOperator zero(Lattice lat) { return InterfaceOperator(lat); }
  // S_g with identity fiber.
  static InterfaceOperator shift(Lattice lat, const ShiftVector& g) {
    return InterfaceOperator(lat, {{g, CoefficientProfile::identity(lat.dimension, lat.fiber_dim)}}, {g.is_zero(), true});
  }
  static InterfaceOperator multiplication(Lattice lat, const CoefficientProfile& f) {
    return InterfaceOperator(lat, {{ShiftVector(lat.dimension), f}});
  }

  const Lattice& lattice() const { return lattice_; }
  int dimension() const { return lattice_.dimension; }
  int fiber_dim() const { return lattice_.fiber_dim; }
  const TermMap& terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }
  const Claims& claims() const { return claims_; }

  InterfaceOperator with_claims(Claims c) const {
    InterfaceOperator r = *this;
    r.claims_ = c;
    return r;
  }

  // Largest |g|_inf over the support.
  int shift_radius() const {
    int r = 0;
    for (const auto& [g, f] : terms_) r = std::max(r, g.max_norm());
    return r;
  }

 private:
  void accumulate(const ShiftVector& g, const CoefficientProfile& f) {
    if (g.dim() != lattice_.dimension) throw lattice_mismatch("shift " + g.str() + " has wrong dimension");
    if (f.dimension() != lattice_.dimension || f.fiber_dim() != lattice_.fiber_dim)
      throw lattice_mismatch("profile does not match the operator lattice");
    auto it = terms_.find(g);
    if (it == terms_.end())
      terms_.emplace(g, f);
    else
      it->second = it->second + f;
  }
  void prune() {
    for (auto it = terms_.begin(); it != terms_.end();)
      it = sampled_sup_norm(it->second) <= prune_threshold ? terms_.erase(it) : std::next(it);
  }

  Lattice lattice_;
  TermMap terms_;
  Claims claims_;
};

// ---------------------------------------------------------------------------
// *-algebra

inline void require_same_lattice(const InterfaceOperator& a, const InterfaceOperator& b) {
  if (!(a.lattice() == b.lattice())) throw lattice_mismatch("operators live on different lattices");
}

inline InterfaceOperator add(const InterfaceOperator& a, const InterfaceOperator& b) {
  require_same_lattice(a, b);
  std::vector<std::pair<ShiftVector, CoefficientProfile>> t(a.terms().begin(), a.terms().end());
  t.insert(t.end(), b.terms().begin(), b.terms().end());
  return InterfaceOperator(a.lattice(), t,
                           {a.claims().hermitian && b.claims().hermitian, false});
}

inline InterfaceOperator scale(const InterfaceOperator& a, cplx z) {
  std::vector<std::pair<ShiftVector, CoefficientProfile>> t;
  for (const auto& [g, f] : a.terms()) t.emplace_back(g, scale(f, z));
  const bool real = z.imag() == 0.0;
  const bool phase = std::abs(std::abs(z) - 1.0) < 1e-15;
  return InterfaceOperator(a.lattice(), t, {a.claims().hermitian && real, a.claims().unitary && phase});
}

// Term at -g is x -> f_g(x + g)^†.
inline InterfaceOperator adjoint(const InterfaceOperator& a) {
  std::vector<std::pair<ShiftVector, CoefficientProfile>> t;
  for (const auto& [g, f] : a.terms()) t.emplace_back(-g, adjoint(translate(f, -g)));
  return InterfaceOperator(a.lattice(), t, a.claims());
}

// (S_g f)(S_h k) = S_{g+h} · (x -> f(x) k(x - g)); `a` is applied last.
inline InterfaceOperator compose(const InterfaceOperator& a, const InterfaceOperator& b) {
  require_same_lattice(a, b);
  std::vector<std::pair<ShiftVector, CoefficientProfile>> t;
  for (const auto& [g, f] : a.terms())
    for (const auto& [h, k] : b.terms()) t.emplace_back(g + h, f * translate(k, g));
  return InterfaceOperator(a.lattice(), t, {false, a.claims().unitary && b.claims().unitary});
}

// U_a T U_a^{-1}: every profile moves by a.
inline InterfaceOperator translate(const InterfaceOperator& a, const ShiftVector& shift) {
  std::vector<std::pair<ShiftVector, CoefficientProfile>> t;
  for (const auto& [g, f] : a.terms()) t.emplace_back(g, translate(f, shift));
  return InterfaceOperator(a.lattice(), t, a.claims());
}

inline InterfaceOperator operator+(const InterfaceOperator& a, const InterfaceOperator& b) { return add(a, b); }
inline InterfaceOperator operator*(const InterfaceOperator& a, const InterfaceOperator& b) { return compose(a, b); }

// ---------------------------------------------------------------------------
// Finite-volume action

inline void require_box(const InterfaceOperator& t, const TruncationBox& box) {
  if (box.dimension() != t.dimension()) throw dimension_mismatch("box dimension does not match the lattice");
}

inline Vector apply(const InterfaceOperator& t, const Vector& psi, const TruncationBox& box) {
  require_box(t, box);
  const int n = t.fiber_dim();
  if (static_cast<std::size_t>(psi.size()) != box.vector_size(n))
    throw dimension_mismatch("vector size does not match box and fiber");
  Vector out = Vector::Zero(psi.size());
  for (std::size_t s = 0; s < box.site_count(); ++s) {
    const Site x = box.site_at(s);
    for (const auto& [g, f] : t.terms()) {
      auto src = box.index_of(x - g);
      if (!src) continue;
      site_block(out, s, n) += f.evaluate(x) * site_block(psi, *src, n);
    }
  }
  return out;
}

inline SparseMatrix assemble_truncation(const InterfaceOperator& t, const TruncationBox& box,
                                        std::size_t row_cap = default_row_cap) {
  require_box(t, box);
  const int n = t.fiber_dim();
  const std::size_t rows = box.vector_size(n);
  if (rows > row_cap)
    throw size_cap_exceeded("truncation has " + std::to_string(rows) + " rows, cap is " + std::to_string(row_cap));
  // Site rows are filled independently, then concatenated in site order.
  std::vector<std::vector<Eigen::Triplet<cplx>>> per_site(box.site_count());
  parallel_for(box.site_count(), [&](std::size_t s) {
    const Site x = box.site_at(s);
    auto& out = per_site[s];
    for (const auto& [g, f] : t.terms()) {
      auto src = box.index_of(x - g);
      if (!src) continue;
      const Matrix block = f.evaluate(x);
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
          if (block(a, b) != cplx(0.0))
            out.emplace_back(static_cast<int>(s * n + a), static_cast<int>(*src * n + b), block(a, b));
    }
  });
  std::vector<Eigen::Triplet<cplx>> all;
  for (auto& v : per_site) all.insert(all.end(), v.begin(), v.end());
  SparseMatrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(rows));
  m.setFromTriplets(all.begin(), all.end());
  return m;
}

inline Matrix assemble_dense(const InterfaceOperator& t, const TruncationBox& box,
                             std::size_t row_cap = default_row_cap) {
  return Matrix(assemble_truncation(t, box, row_cap));
}

// ---------------------------------------------------------------------------
// Claimed-flag verification

// Sup over probe sites of |f(x) - k(x)| for all shifts of either operator.
inline double sampled_distance(const InterfaceOperator& a, const InterfaceOperator& b) {
  require_same_lattice(a, b);
  double d = 0.0;
  auto sites = probe_sites(a.dimension());
  std::map<ShiftVector, std::pair<const CoefficientProfile*, const CoefficientProfile*>> joint;
  for (const auto& [g, f] : a.terms()) joint[g].first = &f;
  for (const auto& [g, f] : b.terms()) joint[g].second = &f;
  for (const auto& [g, pair] : joint)
    for (const auto& x : sites) {
      Matrix fa = pair.first ? pair.first->evaluate(x) : Matrix::Zero(a.fiber_dim(), a.fiber_dim());
      Matrix fb = pair.second ? pair.second->evaluate(x) : Matrix::Zero(a.fiber_dim(), a.fiber_dim());
      d = std::max(d, max_abs(fa - fb));
    }
  return d;
}

inline bool approx_equal(const InterfaceOperator& a, const InterfaceOperator& b, double tol = 1e-12) {
  return sampled_distance(a, b) <= tol;
}

inline bool is_hermitian(const InterfaceOperator& t, double tol = 1e-12) { return approx_equal(adjoint(t), t, tol); }

// Random vectors supported a few shift radii inside the box; returns the worst
// residual max(|(U*U - 1)ψ|, |(UU* - 1)ψ|) / |ψ|.
inline double unitarity_defect(const InterfaceOperator& u, int half_width = 0, unsigned seed = 7) {
  const int r = std::max(1, u.shift_radius());
  const int l = u.dimension();
  if (half_width == 0) half_width = l == 1 ? 12 * r : (l == 2 ? 5 * r : 3 * r);
  TruncationBox box(l, half_width);
  const int n = u.fiber_dim();
  SparseMatrix m = assemble_truncation(u, box);
  SparseMatrix md = m.adjoint();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  double worst = 0.0;
  for (int trial = 0; trial < 3; ++trial) {
    Vector psi = Vector::Zero(static_cast<Eigen::Index>(box.vector_size(n)));
    for (std::size_t s = 0; s < box.site_count(); ++s)
      if (box.distance_to_boundary(box.site_at(s)) > 2 * r)
        for (int a = 0; a < n; ++a) psi(static_cast<Eigen::Index>(s * n + a)) = cplx(gauss(rng), gauss(rng));
    psi.normalize();
    worst = std::max(worst, (md * (m * psi) - psi).norm());
    worst = std::max(worst, (m * (md * psi) - psi).norm());
  }
  return worst;
}

inline bool is_unitary(const InterfaceOperator& u, double tol = 1e-12) { return unitarity_defect(u) <= tol; }

// Throws if a claimed flag does not survive verification.
inline void verify_claims(const InterfaceOperator& t) {
  if (t.claims().hermitian && !is_hermitian(t)) throw certificate_error("operator claimed hermitian but is not");
  if (t.claims().unitary && !is_unitary(t)) throw certificate_error("operator claimed unitary but is not");
}

// ---------------------------------------------------------------------------
// Cocompact crystals: ℓ²(X) ≅ ℓ²(ℤ^l, ℂ^{|X_0|·N})

struct CrystalHopping {
  int to_site = 0;    // index in the unit cell X_0
  int from_site = 0;
  ShiftVector cell_offset;  // (Hψ)(c, to) += amplitude(c) ψ(c - offset, from)
  CoefficientProfile amplitude;
};

struct Crystal {
  int dimension = 1;
  int cell_size = 1;  // |X_0|
  int fiber_dim = 1;  // N of the internal fiber per crystal site
  std::vector<CrystalHopping> hoppings;
};

namespace detail {

// x -> E_{to,from} ⊗ f(x) inside M_{cells·N}.
struct BlockEmbedNode final : ProfileNode {
  CoefficientProfile f;
  int cells, to, from;
  BlockEmbedNode(CoefficientProfile p, int c, int t, int s) : f(std::move(p)), cells(c), to(t), from(s) {
    dim = f.dimension();
    fiber = f.fiber_dim() * cells;
    family = f.variant();
    caps = f.caps();
    range_count = f.range_size();
  }
  Matrix embed(const Matrix& m) const {
    Matrix out = Matrix::Zero(fiber, fiber);
    const int n = f.fiber_dim();
    out.block(to * n, from * n, n, n) = m;
    return out;
  }
  Matrix value(const Site& x) const override { return embed(f.evaluate(x)); }
  Matrix limit(const LimitPoint& p) const override { return embed(f.limit(p)); }
  CoefficientProfile face(int axis, Side s) const override {
    return CoefficientProfile(std::make_shared<BlockEmbedNode>(f.face(axis, s), cells, to, from));
  }
};

}  // namespace detail

inline InterfaceOperator fold_cocompact(const Crystal& crystal) {
  if (crystal.cell_size < 1) throw dimension_mismatch("unit cell must be non-empty");
  Lattice lat(crystal.dimension, crystal.cell_size * crystal.fiber_dim);
  std::vector<std::pair<ShiftVector, CoefficientProfile>> terms;
  for (const auto& h : crystal.hoppings) {
    if (h.to_site < 0 || h.to_site >= crystal.cell_size || h.from_site < 0 || h.from_site >= crystal.cell_size)
      throw lattice_mismatch("hopping references a site outside the unit cell");
    if (h.cell_offset.dim() != crystal.dimension) throw lattice_mismatch("hopping offset has wrong dimension");
    if (!h.amplitude || h.amplitude.dimension() != crystal.dimension || h.amplitude.fiber_dim() != crystal.fiber_dim)
      throw lattice_mismatch("hopping amplitude has wrong shape");
    terms.emplace_back(h.cell_offset, CoefficientProfile(std::make_shared<detail::BlockEmbedNode>(
                                          h.amplitude, crystal.cell_size, h.to_site, h.from_site)));
  }
  return InterfaceOperator(lat, terms);
}

}  // namespace ifk
