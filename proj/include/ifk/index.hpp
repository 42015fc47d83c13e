#pragma once

// Interface indices in the complex chiral class, bulk windings and the
// decomposition identities relating them.

#include <functional>

#include "ifk/truncation.hpp"

namespace ifk {

// Unitary involution Π on the fiber; T is chiral when ΠT = −TΠ.
class ChiralSymmetry {
 public:
  explicit ChiralSymmetry(Matrix pi) : pi_(std::move(pi)) {
    const auto n = pi_.rows();
    if (pi_.cols() != n || n == 0) throw dimension_mismatch("chiral involution must be square");
    const Matrix id = Matrix::Identity(n, n);
    if (max_abs(pi_ * pi_.adjoint() - id) > 1e-12) throw hypothesis_violation("chiral involution is not unitary");
    if (max_abs(pi_ * pi_ - id) > 1e-12) throw hypothesis_violation("chiral involution does not square to 1");
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (pi_ + pi_.adjoint()));
    // Eigenvalues ascend: the −1 eigenspace comes first.
    for (Eigen::Index k = 0; k < n; ++k) (es.eigenvalues()(k) < 0 ? minus_ : plus_) += 1;
    basis_ = Matrix(n, n);
    basis_.leftCols(plus_) = es.eigenvectors().rightCols(plus_);
    basis_.rightCols(minus_) = es.eigenvectors().leftCols(minus_);
  }

  // diag(1_{plus}, −1_{minus}).
  static ChiralSymmetry sublattice(int plus, int minus) {
    Eigen::VectorXcd d(plus + minus);
    d.head(plus).setOnes();
    d.tail(minus).setConstant(-1.0);
    return ChiralSymmetry(d.asDiagonal());
  }

  const Matrix& matrix() const { return pi_; }
  int dimension() const { return static_cast<int>(pi_.rows()); }
  int plus_dim() const { return plus_; }
  int minus_dim() const { return minus_; }
  // Columns: orthonormal +1 eigenvectors, then −1 eigenvectors.
  const Matrix& basis() const { return basis_; }

  // Block of h mapping the +1 eigenspace into the −1 eigenspace.
  Matrix off_diagonal(const Matrix& h) const {
    return basis_.rightCols(minus_).adjoint() * h * basis_.leftCols(plus_);
  }

  // Largest sampled |Π f_g(x) + f_g(x) Π| over all terms.
  double anticommutator_defect(const InterfaceOperator& t) const {
    if (t.fiber_dim() != dimension()) throw dimension_mismatch("chiral involution and fiber differ in size");
    double d = 0.0;
    for (const auto& [g, f] : t.terms())
      for (const auto& x : probe_sites(t.dimension())) {
        const Matrix m = f.evaluate(x);
        d = std::max(d, max_abs(pi_ * m + m * pi_));
      }
    return d;
  }

  void require_chiral(const InterfaceOperator& t, double tol = 1e-10) const {
    if (anticommutator_defect(t) > tol) throw hypothesis_violation("operator does not anticommute with the chiral involution");
  }

  // ⟨v, Π v⟩ with Π acting site by site.
  double chirality(const Vector& v) const {
    const int n = dimension();
    double s = 0.0;
    for (Eigen::Index k = 0; k < v.size() / n; ++k) {
      const auto b = v.segment(k * n, n);
      s += b.dot(pi_ * b).real();
    }
    return s;
  }

 private:
  Matrix pi_;
  Matrix basis_;
  int plus_ = 0;
  int minus_ = 0;
};

// ---------------------------------------------------------------------------
// Bulk windings

inline constexpr double winding_det_tolerance = 1e-8;
inline constexpr double winding_residual_bound = 0.1;
inline constexpr int default_winding_points = 4096;

struct Winding {
  int value = 0;
  double raw = 0.0;       // accumulated phase / 2π before rounding
  double residual = 0.0;  // |raw − value|
  double min_abs_det = 0.0;
};

// Degree of θ ↦ det q(θ) on [−π, π], by phase accumulation.
inline Winding winding_number(const std::function<Matrix(double)>& symbol, int points = default_winding_points,
                              double det_tolerance = winding_det_tolerance) {
  if (points < 8) throw config_error("winding grid needs at least 8 points");
  Winding w;
  w.min_abs_det = std::numeric_limits<double>::infinity();
  cplx prev;
  double phase = 0.0;
  for (int k = 0; k <= points; ++k) {
    const double theta = -std::numbers::pi + two_pi * k / points;
    const Matrix q = symbol(theta);
    const cplx d = q.rows() == 0 ? cplx(1.0) : cplx(q.determinant());
    w.min_abs_det = std::min(w.min_abs_det, std::abs(d));
    if (std::abs(d) <= det_tolerance)
      throw not_invertible("symbol determinant " + std::to_string(std::abs(d)) + " at θ = " + std::to_string(theta));
    if (k > 0) phase += std::arg(d / prev);
    prev = d;
  }
  w.raw = phase / two_pi;
  w.value = static_cast<int>(std::lround(w.raw));
  w.residual = std::abs(w.raw - w.value);
  if (w.residual >= winding_residual_bound)
    throw unstable_result("winding rounding residual " + std::to_string(w.residual) + " exceeds 0.1");
  return w;
}

// Winding of the chiral off-diagonal block of a 1D bulk symbol.
inline Winding bulk_winding(const TranslationInvariantSystem& s, const ChiralSymmetry& pi,
                            int points = default_winding_points) {
  if (s.lattice.dimension != 1) throw dimension_mismatch("bulk windings are defined for one-dimensional bulks");
  if (pi.dimension() != s.lattice.fiber_dim) throw dimension_mismatch("chiral involution and fiber differ in size");
  if (pi.plus_dim() != pi.minus_dim())
    throw not_invertible("unbalanced chiral grading: the off-diagonal block is not square");
  return winding_number(
      [&](double theta) { return pi.off_diagonal(bloch_symbol(s, Eigen::VectorXd::Constant(1, theta))); }, points);
}

// ---------------------------------------------------------------------------
// Fredholm check

struct FredholmCertificate {
  bool fredholm = false;
  double epsilon = 0.0;  // half-width of the symmetric gap around E
  Gap gap;
  std::string reason;
};

inline FredholmCertificate fredholm_check(const InterfaceOperator& t, cplx e, const SpectralOptions& opts = {}) {
  FredholmCertificate c;
  SpectrumSet ess;
  try {
    ess = essential_spectrum(t, opts);
  } catch (const error& ex) {
    c.reason = ex.what();
    return c;
  }
  if (ess.kind() == SpectrumKind::generic) {
    c.epsilon = ess.distance(e) - ess.resolution();
    c.fredholm = c.epsilon > 0.0;
    if (!c.fredholm) c.reason = "point within resolution of the essential spectrum";
    return c;
  }
  try {
    c.gap = spectral_gap(ess, e);
  } catch (const no_gap& ex) {
    c.reason = ex.what();
    return c;
  }
  const double x = ess.kind() == SpectrumKind::real_line ? e.real() : wrap_angle(std::arg(e));
  c.epsilon = std::min(x - c.gap.lower, c.gap.upper - x);
  c.fredholm = c.epsilon > 0.0;
  return c;
}

// ---------------------------------------------------------------------------
// Chiral interface index

struct ChiralCount {
  int index = 0;
  double trace = 0.0;             // Σ ⟨ψ, Πψ⟩ over interior window states
  std::size_t window_states = 0;  // eigenvalues in the zero window
  std::size_t filtered = 0;       // boundary artifacts removed
};

namespace detail {

// Signed chirality count of the window states of a hermitian matrix acting
// on the given box sites. States whose mass sits mostly on sites nearer the
// outer box boundary than the interface locus are boundary artifacts.
inline ChiralCount chiral_count(const Matrix& h, const std::vector<std::size_t>& sites, const TruncationBox& box,
                                const ChiralSymmetry& pi, double window, const Locus& locus) {
  const int n = pi.dimension();
  DenseEigen e = dense_eigensolve(h, true, true);
  std::vector<Eigen::Index> cols;
  for (Eigen::Index k = 0; k < e.values.size(); ++k)
    if (std::abs(e.values(k).real()) < window) cols.push_back(k);
  ChiralCount c;
  c.window_states = cols.size();
  if (cols.empty()) return c;
  Matrix v(h.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) v.col(static_cast<Eigen::Index>(k)) = e.vectors.col(cols[k]);
  Eigen::VectorXd outer = Eigen::VectorXd::Zero(h.rows());
  for (std::size_t s = 0; s < sites.size(); ++s) {
    const Site x = box.site_at(sites[s]);
    if (box.distance_to_boundary(x) < locus(x)) outer.segment(static_cast<Eigen::Index>(s) * n, n).setOnes();
  }
  auto [rot, masses] = diagonalize_mass(v, outer);
  for (Eigen::Index k = 0; k < rot.cols(); ++k) {
    if (masses(k) >= 0.5) {
      ++c.filtered;
      continue;
    }
    c.trace += pi.chirality(rot.col(k));
  }
  c.index = static_cast<int>(std::lround(c.trace));
  if (std::abs(c.trace - c.index) >= 0.1)
    throw unstable_result("chirality trace " + std::to_string(c.trace) + " is not close to an integer");
  return c;
}

inline std::vector<std::size_t> all_sites(const TruncationBox& box) {
  std::vector<std::size_t> s(box.site_count());
  std::iota(s.begin(), s.end(), std::size_t{0});
  return s;
}

inline Matrix restrict_to_sites(const Matrix& h, const std::vector<std::size_t>& sites, int n) {
  const auto m = static_cast<Eigen::Index>(sites.size()) * n;
  Matrix out(m, m);
  for (std::size_t a = 0; a < sites.size(); ++a)
    for (std::size_t b = 0; b < sites.size(); ++b)
      out.block(static_cast<Eigen::Index>(a) * n, static_cast<Eigen::Index>(b) * n, n, n) =
          h.block(static_cast<Eigen::Index>(sites[a]) * n, static_cast<Eigen::Index>(sites[b]) * n, n, n);
  return out;
}

}  // namespace detail

struct ChiralIndexOptions {
  std::optional<double> zero_window;      // default: 0.2 · certified gap radius
  std::optional<int> stability_half_width;  // second box; default 3/4 of the first
  Locus locus = origin_locus();
  SpectralOptions spectral;
};

struct ChiralIndexReport {
  int index = 0;
  double epsilon = 0.0;  // certified gap radius at 0
  double zero_window = 0.0;
  ChiralCount primary;
  ChiralCount secondary;
  int primary_half_width = 0;
  int secondary_half_width = 0;
};

inline int stability_width(const InterfaceOperator& t, int half_width, const ChiralIndexOptions& opts) {
  if (opts.stability_half_width) return *opts.stability_half_width;
  const int layer = boundary_layer(t);
  int w = (3 * half_width) / 4;
  if (w < 2 * layer + 2) w = half_width + layer;
  return w;
}

inline ChiralIndexReport chiral_interface_index_report(const InterfaceOperator& t, const ChiralSymmetry& pi,
                                                       const TruncationBox& box, const ChiralIndexOptions& opts = {}) {
  require_box(t, box);
  if (!is_hermitian(t)) throw hypothesis_violation("chiral index needs a hermitian operator");
  pi.require_chiral(t);
  FredholmCertificate cert = fredholm_check(t, 0.0, opts.spectral);
  if (!cert.fredholm) throw not_invertible("0 is not in a gap of the essential spectrum: " + cert.reason);
  ChiralIndexReport r;
  r.epsilon = cert.epsilon;
  r.zero_window = opts.zero_window.value_or(0.2 * cert.epsilon);
  auto count = [&](int half_width) {
    TruncationBox b(t.dimension(), half_width);
    return detail::chiral_count(assemble_dense(t, b, dense_size_cap), detail::all_sites(b), b, pi, r.zero_window,
                                opts.locus);
  };
  r.primary_half_width = box.half_width();
  r.secondary_half_width = stability_width(t, box.half_width(), opts);
  r.primary = count(r.primary_half_width);
  r.secondary = count(r.secondary_half_width);
  if (r.primary.index != r.secondary.index)
    throw unstable_result("index changes with the box: " + std::to_string(r.primary.index) + " at L=" +
                          std::to_string(r.primary_half_width) + ", " + std::to_string(r.secondary.index) +
                          " at L=" + std::to_string(r.secondary_half_width));
  r.index = r.primary.index;
  return r;
}

inline int chiral_interface_index(const InterfaceOperator& t, const ChiralSymmetry& pi, const TruncationBox& box,
                                  const ChiralIndexOptions& opts = {}) {
  return chiral_interface_index_report(t, pi, box, opts).index;
}

// ---------------------------------------------------------------------------
// Decompositions

struct BulkInvariant {
  std::string label;
  int invariant = 0;
  int sign = 1;
};

struct IndexReport {
  int interface_index = 0;
  std::vector<BulkInvariant> per_bulk;
  int identity_residual = 0;  // interface_index − Σ sign · invariant
  bool experimental = false;
  double epsilon = 0.0;
  double zero_window = 0.0;
};

inline int signed_sum(const std::vector<BulkInvariant>& v) {
  int s = 0;
  for (const auto& b : v) s += b.sign * b.invariant;
  return s;
}

// Index = w_L − w_R for a chiral 1D domain wall.
inline IndexReport domain_wall_decomposition(const InterfaceOperator& t, const ChiralSymmetry& pi,
                                             const TruncationBox& box, const ChiralIndexOptions& opts = {}) {
  if (t.dimension() != 1 || operator_family(t) != Asymptotics::domain_wall)
    throw hypothesis_violation("domain wall decomposition needs one-dimensional domain-wall asymptotics");
  pi.require_chiral(t);
  auto orbits = quasi_orbits(t);
  IndexReport r;
  for (const auto& b : orbits) {
    const int sign = b.side == Side::minus ? 1 : -1;
    r.per_bulk.push_back({b.label, bulk_winding(b.invariant(), pi).value, sign});
  }
  auto idx = chiral_interface_index_report(t, pi, box, opts);
  r.interface_index = idx.index;
  r.epsilon = idx.epsilon;
  r.zero_window = idx.zero_window;
  r.identity_residual = r.interface_index - signed_sum(r.per_bulk);
  return r;
}

// Disjoint sets of box sites, one per cap.
struct SectorAssignment {
  std::vector<std::string> labels;
  std::vector<std::function<bool(const Site&)>> members;
};

// Angular Voronoi cells of the cap centres; the origin joins the cap whose
// centre is closest to e_1.
inline SectorAssignment voronoi_sectors(const std::vector<Cap>& caps) {
  SectorAssignment s;
  std::size_t origin_cap = 0;
  for (std::size_t j = 0; j < caps.size(); ++j)
    if (caps[j].center(0) > caps[origin_cap].center(0)) origin_cap = j;
  for (std::size_t j = 0; j < caps.size(); ++j) {
    s.labels.push_back("cap" + std::to_string(j) + ":" + detail::direction_label(caps[j].center));
    s.members.push_back([caps, j, origin_cap](const Site& x) {
      if (x.is_zero()) return j == origin_cap;
      Direction w(x.dim());
      for (int i = 0; i < x.dim(); ++i) w(i) = x[i];
      w.normalize();
      std::size_t best = 0;
      for (std::size_t k = 1; k < caps.size(); ++k)
        if (caps[k].center.dot(w) > caps[best].center.dot(w)) best = k;
      return best == j;
    });
  }
  return s;
}

inline std::vector<Cap> decomposition_caps(const InterfaceOperator& t) {
  const Asymptotics fam = operator_family(t);
  if (fam == Asymptotics::cone) return detail::operator_caps(t);
  if (fam == Asymptotics::domain_wall && t.dimension() == 1)
    return {Cap{Direction::Constant(1, -1.0), 0.0}, Cap{Direction::Constant(1, 1.0), 0.0}};
  throw hypothesis_violation("cone decomposition needs cone-supported asymptotics (or a 1D domain wall)");
}

// EXPERIMENTAL. Per cap: chirality count of the operator compressed to the
// cap's sector, with the cap orientation sgn = −sign(ω·e_1) (+1 when
// orthogonal) and per-cap invariant sgn · count.
inline IndexReport cone_decomposition(const InterfaceOperator& t, const ChiralSymmetry& pi, const TruncationBox& box,
                                      std::optional<SectorAssignment> sectors = std::nullopt,
                                      const ChiralIndexOptions& opts = {}) {
  const auto caps = decomposition_caps(t);
  SectorAssignment sa = sectors ? *sectors : voronoi_sectors(caps);
  if (sa.members.size() != caps.size() || sa.labels.size() != caps.size())
    throw config_error("sector assignment must provide one sector per cap");
  auto idx = chiral_interface_index_report(t, pi, box, opts);
  IndexReport r;
  r.experimental = true;
  r.interface_index = idx.index;
  r.epsilon = idx.epsilon;
  r.zero_window = idx.zero_window;

  std::vector<std::vector<std::size_t>> members(caps.size());
  for (std::size_t s = 0; s < box.site_count(); ++s) {
    const Site x = box.site_at(s);
    int hits = 0;
    for (std::size_t j = 0; j < caps.size(); ++j)
      if (sa.members[j](x)) {
        members[j].push_back(s);
        ++hits;
      }
    if (hits > 1) throw config_error("sectors overlap at site " + x.str());
  }
  const Matrix h = assemble_dense(t, box, dense_size_cap);
  const int n = t.fiber_dim();
  for (std::size_t j = 0; j < caps.size(); ++j) {
    const double e1 = caps[j].center(0);
    const int sign = e1 > 1e-12 ? -1 : 1;
    int count = 0;
    if (!members[j].empty()) {
      try {
        count = detail::chiral_count(detail::restrict_to_sites(h, members[j], n), members[j], box, pi, r.zero_window,
                                     opts.locus)
                    .index;
      } catch (const unstable_result& ex) {
        throw unstable_result(std::string("ambiguous sector assignment for ") + sa.labels[j] + ": " + ex.what());
      }
    }
    r.per_bulk.push_back({sa.labels[j], sign * count, sign});
  }
  r.identity_residual = r.interface_index - signed_sum(r.per_bulk);
  return r;
}

// ---------------------------------------------------------------------------
// Spectral flow

struct SpectralFlowOptions {
  double max_step = 0.5;         // sampled sup-distance between consecutive operators
  double consistency_tol = 0.1;  // |unweighted flux + Δneg| per step
  bool check_endpoints = true;
  SpectralOptions spectral;
};

struct SpectralFlowReport {
  int flow = 0;
  double raw = 0.0;
  std::vector<double> step_flux;
};

// Net upward crossings of 0 along a path of hermitian operators, from the
// overlap of negative and positive spectral subspaces of consecutive
// truncations. Each step's flux is weighted by interior mass so that states
// crossing at the box boundary do not count.
inline SpectralFlowReport spectral_flow_report(const std::vector<InterfaceOperator>& path, const TruncationBox& box,
                                               const SpectralFlowOptions& opts = {}) {
  if (path.empty()) throw config_error("spectral flow needs a non-empty path");
  for (const auto& t : path) {
    require_box(t, box);
    if (!is_hermitian(t)) throw hypothesis_violation("spectral flow needs hermitian operators");
  }
  if (opts.check_endpoints)
    for (const auto* t : {&path.front(), &path.back()})
      if (!fredholm_check(*t, 0.0, opts.spectral).fredholm)
        throw not_invertible("path endpoint is not gapped at 0");
  for (std::size_t k = 0; k + 1 < path.size(); ++k)
    if (sampled_distance(path[k], path[k + 1]) > opts.max_step)
      throw unstable_result("step too coarse: operators " + std::to_string(k) + " and " + std::to_string(k + 1) +
                            " are far apart");
  const int n = path.front().fiber_dim();
  const Eigen::VectorXd interior =
      Eigen::VectorXd::Ones(static_cast<Eigen::Index>(box.vector_size(n))) -
      boundary_indicator(box, n, boundary_layer(path.front()));
  std::vector<DenseEigen> eig(path.size());
  parallel_for(path.size(), [&](std::size_t k) { eig[k] = dense_eigensolve(assemble_dense(path[k], box, dense_size_cap), true, true); });
  auto negatives = [](const DenseEigen& e) {
    Eigen::Index c = 0;
    while (c < e.values.size() && e.values(c).real() < 0.0) ++c;
    return c;
  };
  SpectralFlowReport r;
  for (std::size_t k = 0; k + 1 < path.size(); ++k) {
    const auto& a = eig[k];
    const auto& b = eig[k + 1];
    const Eigen::Index na = negatives(a), nb = negatives(b), dim = a.values.size();
    // Old negative subspace seen from the new positive one, and vice versa.
    const Matrix up = b.vectors.rightCols(dim - nb).adjoint() * a.vectors.leftCols(na);
    const Matrix down = b.vectors.leftCols(nb).adjoint() * a.vectors.rightCols(dim - na);
    const double raw_flux = up.squaredNorm() - down.squaredNorm();
    if (std::abs(raw_flux + double(nb - na)) > opts.consistency_tol)
      throw unstable_result("step too coarse: crossings at step " + std::to_string(k) + " are ambiguous");
    const Matrix up_sites = interior.cast<cplx>().asDiagonal() * (b.vectors.rightCols(dim - nb) * up);
    const Matrix down_sites = interior.cast<cplx>().asDiagonal() * (b.vectors.leftCols(nb) * down);
    r.step_flux.push_back(up_sites.squaredNorm() - down_sites.squaredNorm());
    r.raw += r.step_flux.back();
  }
  r.flow = static_cast<int>(std::lround(r.raw));
  if (std::abs(r.raw - r.flow) >= 0.25)
    throw unstable_result("step too coarse: spectral flow " + std::to_string(r.raw) + " is not close to an integer");
  return r;
}

inline int spectral_flow(const std::vector<InterfaceOperator>& path, const TruncationBox& box,
                         const SpectralFlowOptions& opts = {}) {
  return spectral_flow_report(path, box, opts).flow;
}

inline InterfaceOperator chiral_mass(const Lattice& lat, const ChiralSymmetry& pi, double mu) {
  return InterfaceOperator::multiplication(lat, CoefficientProfile::constant(lat.dimension, Matrix(mu * pi.matrix())));
}

// Closes a chiral path into a loop that breaks the symmetry by a mass μΠ:
// T_0 + μΠ with μ from +μ0 to −μ0, then T_s − μ0Π, then T_1 + μΠ with μ back to
// +μ0. Its spectral flow equals ind(T_1) − ind(T_0).
inline std::vector<InterfaceOperator> chiral_mass_loop(const std::vector<InterfaceOperator>& path,
                                                       const ChiralSymmetry& pi, double mu0 = 0.2,
                                                       int mass_steps = 16) {
  if (path.empty()) throw config_error("chiral mass loop needs a non-empty path");
  if (mass_steps < 2 || mass_steps % 2) throw config_error("mass_steps must be even and at least 2");
  const Lattice lat = path.front().lattice();
  std::vector<InterfaceOperator> loop;
  auto mu_at = [&](int k) { return mu0 * (1.0 - 2.0 * (k + 0.5) / mass_steps); };
  loop.push_back(path.front() + chiral_mass(lat, pi, mu0));
  for (int k = 0; k < mass_steps; ++k) loop.push_back(path.front() + chiral_mass(lat, pi, mu_at(k)));
  for (const auto& t : path) loop.push_back(t + chiral_mass(lat, pi, -mu0));
  for (int k = mass_steps - 1; k >= 0; --k) loop.push_back(path.back() + chiral_mass(lat, pi, mu_at(k)));
  loop.push_back(path.back() + chiral_mass(lat, pi, mu0));
  for (auto& t : loop) t = t.with_claims({true, false});
  return loop;
}

}  // namespace ifk
