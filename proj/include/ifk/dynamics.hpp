#pragma once

// Functional calculus and time evolution on truncation boxes, and the
// non-propagation experiment for filtered states.

#include <cmath>
#include <functional>

#include "ifk/spectra.hpp"

namespace ifk {

inline constexpr double default_filter_budget = 1e-6;
inline constexpr int default_filter_max_degree = 2000;
inline constexpr int boundary_margin = 10;
inline constexpr int samples_per_unit_time = 64;

// Relative mass ‖ψ‖² allowed in the boundary margin during evolution.
inline constexpr double boundary_mass_tolerance = 1e-12;

enum class FilterBasis { chebyshev, trigonometric };

// η as a polynomial in T: Σ c_k T_k((T − centre)/half_width) on the hull
// (Chebyshev), or Σ_{|k|≤d} c_k U^k (trigonometric, c stored from k = −d).
struct SpectralFilter {
  FilterBasis basis = FilterBasis::chebyshev;
  std::vector<cplx> coefficients;
  Interval support;  // energies, or angles for trigonometric filters
  Interval hull;     // Chebyshev domain
  double approximation_error = 0.0;
  double budget = default_filter_budget;
  std::function<double(double)> target;

  int degree() const {
    const int n = static_cast<int>(coefficients.size());
    return basis == FilterBasis::chebyshev ? n - 1 : (n - 1) / 2;
  }
  double evaluate(double x) const;
};

// Smooth bump equal to 1 well inside `support` and below 1e-7 outside it:
// a difference of error functions whose edges take `edge_fraction` of the
// support width each.
inline std::function<double(double)> smooth_window(Interval support, double edge_fraction = 0.25) {
  if (!(support.upper > support.lower)) throw config_error("window support must have positive width");
  if (edge_fraction <= 0.0 || edge_fraction > 0.5) throw config_error("edge_fraction must lie in (0, 0.5]");
  constexpr double c = 3.9;  // erfc(3.9)/2 < 2e-8
  const double s = edge_fraction * (support.upper - support.lower) / (2 * c);
  const double a = support.lower, b = support.upper;
  return [=](double x) { return 0.5 * (std::erf((x - a) / s - c) - std::erf((x - b) / s + c)); };
}

namespace detail {

inline double clenshaw(const std::vector<cplx>& c, int degree, double y) {
  double b1 = 0.0, b2 = 0.0;
  for (int k = degree; k >= 1; --k) {
    const double b0 = 2 * y * b1 - b2 + c[static_cast<std::size_t>(k)].real();
    b2 = b1;
    b1 = b0;
  }
  return y * b1 - b2 + c[0].real();
}

inline double trig_eval(const std::vector<cplx>& c, int degree, double phi) {
  const int d_all = (static_cast<int>(c.size()) - 1) / 2;
  cplx s = 0.0;
  for (int k = -degree; k <= degree; ++k) s += c[static_cast<std::size_t>(k + d_all)] * std::polar(1.0, k * phi);
  return s.real();
}

inline constexpr int check_points = 4001;

// Sampled sup-error of the degree-d truncation plus the next block of
// coefficients as a tail estimate.
template <class Eval>
double truncation_error(const std::function<double(double)>& f, Interval domain, Eval&& eval, double tail) {
  double err = 0.0;
  for (int i = 0; i < check_points; ++i) {
    const double x = domain.lower + (domain.upper - domain.lower) * i / (check_points - 1);
    err = std::max(err, std::abs(f(x) - eval(x)));
  }
  return err + tail;
}

inline void check_vanishes_outside(const std::function<double(double)>& f, Interval domain, Interval support,
                                   double budget) {
  for (int i = 0; i < check_points; ++i) {
    const double x = domain.lower + (domain.upper - domain.lower) * i / (check_points - 1);
    if ((x < support.lower || x > support.upper) && std::abs(f(x)) > budget)
      throw config_error("filter does not vanish outside its declared support (|η(" + std::to_string(x) +
                         ")| = " + std::to_string(std::abs(f(x))) + ")");
  }
}

// Smallest degree in [1, max_degree] passing `ok`, assuming ok is monotone.
template <class Ok>
int smallest_degree(int max_degree, Ok&& ok) {
  int hi = 1;
  while (hi < max_degree && !ok(hi)) hi = std::min(2 * hi, max_degree);
  if (!ok(hi)) return -1;
  int lo = hi / 2;
  while (hi - lo > 1) {
    const int mid = (lo + hi) / 2;
    (ok(mid) ? hi : lo) = mid;
  }
  return hi;
}

}  // namespace detail

inline double SpectralFilter::evaluate(double x) const {
  if (coefficients.empty()) return 0.0;
  if (basis == FilterBasis::chebyshev) {
    const double c = 0.5 * (hull.lower + hull.upper), h = 0.5 * (hull.upper - hull.lower);
    return detail::clenshaw(coefficients, degree(), h > 0 ? (x - c) / h : 0.0);
  }
  return detail::trig_eval(coefficients, degree(), x);
}

// Chebyshev interpolant of f on `hull` meeting `budget` in sup norm.
inline SpectralFilter chebyshev_filter(std::function<double(double)> f, Interval hull, Interval support,
                                       double budget = default_filter_budget,
                                       int max_degree = default_filter_max_degree) {
  if (!(hull.upper > hull.lower)) throw hypothesis_violation("hull estimate missing: filter domain is empty");
  detail::check_vanishes_outside(f, hull, support, budget);
  const int nodes = std::max(4096, 2 * max_degree + 2);
  const double c = 0.5 * (hull.lower + hull.upper), h = 0.5 * (hull.upper - hull.lower);
  std::vector<double> values(static_cast<std::size_t>(nodes));
  for (int j = 0; j < nodes; ++j) values[static_cast<std::size_t>(j)] = f(c + h * std::cos(std::numbers::pi * (j + 0.5) / nodes));
  const int top = std::min(max_degree + 64, nodes - 1);
  std::vector<cplx> coeff(static_cast<std::size_t>(top + 1));
  parallel_for(static_cast<std::size_t>(top + 1), [&](std::size_t k) {
    double s = 0.0;
    for (int j = 0; j < nodes; ++j) s += values[static_cast<std::size_t>(j)] * std::cos(std::numbers::pi * k * (j + 0.5) / nodes);
    coeff[k] = (k == 0 ? 1.0 : 2.0) * s / nodes;
  });
  auto error_at = [&](int d) {
    double tail = 0.0;
    for (int k = d + 1; k <= std::min(top, 2 * d + 16); ++k) tail += std::abs(coeff[static_cast<std::size_t>(k)]);
    return detail::truncation_error(f, hull, [&](double x) { return detail::clenshaw(coeff, d, (x - c) / h); }, tail);
  };
  const int d = detail::smallest_degree(max_degree, [&](int deg) { return error_at(deg) <= budget; });
  if (d < 0)
    throw solver_error("filter budget " + std::to_string(budget) + " unreachable at degree " + std::to_string(max_degree));
  SpectralFilter out;
  out.basis = FilterBasis::chebyshev;
  out.coefficients.assign(coeff.begin(), coeff.begin() + d + 1);
  out.support = support;
  out.hull = hull;
  out.approximation_error = error_at(d);
  out.budget = budget;
  out.target = std::move(f);
  return out;
}

// Trigonometric polynomial approximating f(φ), φ ∈ [−π, π], for unitaries.
inline SpectralFilter trigonometric_filter(std::function<double(double)> f, Interval support,
                                           double budget = default_filter_budget,
                                           int max_degree = default_filter_max_degree) {
  const Interval circle{-std::numbers::pi, std::numbers::pi};
  detail::check_vanishes_outside(f, circle, support, budget);
  const int nodes = std::max(4096, 2 * max_degree + 2);
  const int top = std::min(max_degree + 64, nodes / 2 - 1);
  std::vector<double> values(static_cast<std::size_t>(nodes));
  for (int j = 0; j < nodes; ++j) values[static_cast<std::size_t>(j)] = f(-std::numbers::pi + two_pi * j / nodes);
  std::vector<cplx> coeff(static_cast<std::size_t>(2 * top + 1));
  parallel_for(static_cast<std::size_t>(2 * top + 1), [&](std::size_t i) {
    const int k = static_cast<int>(i) - top;
    cplx s = 0.0;
    for (int j = 0; j < nodes; ++j) s += values[static_cast<std::size_t>(j)] * std::polar(1.0, -k * (-std::numbers::pi + two_pi * j / nodes));
    coeff[i] = s / double(nodes);
  });
  auto error_at = [&](int d) {
    double tail = 0.0;
    for (int k = d + 1; k <= std::min(top, 2 * d + 16); ++k)
      tail += std::abs(coeff[static_cast<std::size_t>(top + k)]) + std::abs(coeff[static_cast<std::size_t>(top - k)]);
    return detail::truncation_error(f, circle, [&](double x) { return detail::trig_eval(coeff, d, x); }, tail);
  };
  const int d = detail::smallest_degree(max_degree, [&](int deg) { return error_at(deg) <= budget; });
  if (d < 0)
    throw solver_error("filter budget " + std::to_string(budget) + " unreachable at degree " + std::to_string(max_degree));
  SpectralFilter out;
  out.basis = FilterBasis::trigonometric;
  out.coefficients.assign(coeff.begin() + (top - d), coeff.begin() + (top + d + 1));
  out.support = support;
  out.hull = circle;
  out.approximation_error = error_at(d);
  out.budget = budget;
  out.target = std::move(f);
  return out;
}

// ---------------------------------------------------------------------------
// Propagation on a box

// Smallest R such that the mass of ψ outside the cube of half-width R is at
// most `tail` · ‖ψ‖².
inline int effective_radius(const Vector& psi, const TruncationBox& box, int n, double tail = 1e-24) {
  std::vector<double> shell(static_cast<std::size_t>(box.half_width() + 1), 0.0);
  for (std::size_t s = 0; s < box.site_count(); ++s)
    shell[static_cast<std::size_t>(box.site_at(s).max_norm())] += site_block(psi, s, n).squaredNorm();
  const double total = psi.squaredNorm();
  double outside = 0.0;
  for (int r = box.half_width(); r >= 0; --r) {
    outside += shell[static_cast<std::size_t>(r)];
    if (outside > tail * total) return r;
  }
  return 0;
}

inline double margin_mass(const Vector& psi, const TruncationBox& box, int n) {
  double m = 0.0;
  for (std::size_t s = 0; s < box.site_count(); ++s)
    if (box.distance_to_boundary(box.site_at(s)) < boundary_margin) m += site_block(psi, s, n).squaredNorm();
  return m;
}

class Propagator {
 public:
  Propagator(const InterfaceOperator& t, const TruncationBox& box)
      : box_(box), n_(t.fiber_dim()), radius_(std::max(1, t.shift_radius())) {
    require_box(t, box);
    hermitian_ = is_hermitian(t);
    unitary_ = !hermitian_ && is_unitary(t);
    if (!hermitian_ && !unitary_) throw hypothesis_violation("evolution needs a hermitian or unitary operator");
    m_ = assemble_truncation(t, box);
    if (unitary_) md_ = m_.adjoint();
    if (hermitian_) hull_ = gershgorin(m_);
  }

  bool hermitian() const { return hermitian_; }
  bool unitary() const { return unitary_; }
  const TruncationBox& box() const { return box_; }
  int fiber_dim() const { return n_; }
  Interval hull() const { return hull_; }
  const SparseMatrix& matrix() const { return m_; }

  // U^n ψ. The support may grow by one shift radius per step and must stay
  // `boundary_margin` sites inside the box.
  Vector power(const Vector& psi, long steps) const {
    if (!unitary_) throw hypothesis_violation("integer time evolution needs a unitary operator");
    require_room(psi, std::labs(steps));
    Vector v = psi;
    for (long k = 0; k < std::labs(steps); ++k) v = steps > 0 ? Vector(m_ * v) : Vector(md_ * v);
    if (std::abs(v.norm() - psi.norm()) > 1e-10 * std::max(1.0, psi.norm()))
      throw solver_error("unitary evolution lost norm");
    return v;
  }

  // e^{−itH} ψ by the Chebyshev–Bessel expansion of degree ≥ 1.2·|t|·h + 40,
  // h the half-width of the Gershgorin hull.
  Vector exp_step(const Vector& psi, double t) const {
    if (!hermitian_) throw hypothesis_violation("real time evolution needs a hermitian operator");
    if (t == 0.0) return psi;
    const double c = 0.5 * (hull_.lower + hull_.upper), h = std::max(0.5 * (hull_.upper - hull_.lower), 1e-12);
    const double z = t * h;
    const int degree = static_cast<int>(std::ceil(1.2 * std::abs(z))) + 40;
    // x = (H − c)/h on [−1, 1]; e^{−itH} = e^{−itc} Σ (2 − δ_k0)(−i)^k J_k(th) T_k(x).
    auto x_apply = [&](const Vector& v) { return Vector((m_ * v - c * v) / h); };
    Vector prev = psi, cur = x_apply(psi);
    Vector out = std::cyl_bessel_j(0.0, std::abs(z)) * psi;
    const double sign = z < 0 ? -1.0 : 1.0;  // J_k(−z) = (−1)^k J_k(z)
    cplx phase(0.0, -1.0);
    for (int k = 1; k <= degree; ++k) {
      const double jk = std::cyl_bessel_j(double(k), std::abs(z)) * std::pow(sign, k);
      // Beyond k > |z| the Bessel coefficients decay faster than geometrically;
      // terms below 1e-20 do not change the sum in double precision.
      if (k > std::abs(z) + 1 && std::abs(jk) < 1e-20) break;
      out += 2.0 * phase * jk * cur;
      Vector next = 2.0 * x_apply(cur) - prev;
      prev = std::move(cur);
      cur = std::move(next);
      phase *= cplx(0.0, -1.0);
    }
    return std::polar(1.0, -t * c) * out;
  }

  // e^{−itH}ψ in sub-steps of 1/64, checking the boundary margin after each.
  Vector evolve_time(const Vector& psi, double t) const {
    const int steps = static_cast<int>(std::ceil(std::abs(t) * samples_per_unit_time));
    Vector v = psi;
    for (int k = 0; k < steps; ++k) {
      v = exp_step(v, t / steps);
      check_margin(v, psi.squaredNorm());
    }
    return v;
  }

  void check_margin(const Vector& v, double reference) const {
    if (margin_mass(v, box_, n_) > boundary_mass_tolerance * std::max(reference, 1e-300))
      throw boundary_reached("evolved state reached the box margin; enlarge the box");
  }

  void require_room(const Vector& psi, long steps) const {
    const long reach = effective_radius(psi, box_, n_) + steps * radius_;
    if (reach > box_.half_width() - boundary_margin)
      throw boundary_reached("support can grow to radius " + std::to_string(reach) + ", box half-width is " +
                             std::to_string(box_.half_width()));
  }

 private:
  TruncationBox box_;
  int n_;
  int radius_;
  bool hermitian_ = false;
  bool unitary_ = false;
  SparseMatrix m_, md_;
  Interval hull_{0.0, 0.0};
};

// η(M)ψ for a matrix whose spectrum lies in the filter domain: the hull for
// Chebyshev filters, the unit circle (M unitary) for trigonometric ones.
inline Vector apply_filter(const SparseMatrix& m, const SpectralFilter& eta, const Vector& psi) {
  if (eta.coefficients.empty()) return Vector::Zero(psi.size());
  if (eta.basis == FilterBasis::chebyshev) {
    const double c = 0.5 * (eta.hull.lower + eta.hull.upper), h = 0.5 * (eta.hull.upper - eta.hull.lower);
    auto x_apply = [&](const Vector& v) { return Vector((m * v - c * v) / h); };
    Vector prev = psi, out = eta.coefficients[0] * psi;
    if (eta.degree() == 0) return out;
    Vector cur = x_apply(psi);
    out += eta.coefficients[1] * cur;
    for (int k = 2; k <= eta.degree(); ++k) {
      Vector next = 2.0 * x_apply(cur) - prev;
      prev = std::move(cur);
      cur = std::move(next);
      out += eta.coefficients[static_cast<std::size_t>(k)] * cur;
    }
    return out;
  }
  const int d = eta.degree();
  const SparseMatrix md = m.adjoint();
  Vector out = eta.coefficients[static_cast<std::size_t>(d)] * psi;
  Vector fwd = psi, back = psi;
  for (int k = 1; k <= d; ++k) {
    fwd = m * fwd;
    back = md * back;
    out += eta.coefficients[static_cast<std::size_t>(d + k)] * fwd + eta.coefficients[static_cast<std::size_t>(d - k)] * back;
  }
  return out;
}

inline Vector apply_filter(const Propagator& p, const SpectralFilter& eta, const Vector& psi) {
  if (eta.coefficients.empty()) return Vector::Zero(psi.size());
  if (eta.basis == FilterBasis::chebyshev) {
    if (!p.hermitian()) throw hypothesis_violation("Chebyshev filters need a hermitian operator");
    const Interval g = p.hull();
    if (g.lower < eta.hull.lower - 1e-9 || g.upper > eta.hull.upper + 1e-9)
      throw hypothesis_violation("hull estimate missing: truncation spectrum [" + std::to_string(g.lower) + ", " +
                                 std::to_string(g.upper) + "] is not inside the filter domain");
  } else {
    if (!p.unitary()) throw hypothesis_violation("trigonometric filters need a unitary operator");
    // Away from the box edge the truncation acts like U and its adjoint like U^{-1}.
    p.require_room(psi, eta.degree());
  }
  return apply_filter(p.matrix(), eta, psi);
}

inline Vector apply_filter(const InterfaceOperator& t, const SpectralFilter& eta, const Vector& psi,
                           const TruncationBox& box) {
  return apply_filter(Propagator(t, box), eta, psi);
}

// Filter on the Gershgorin hull of the truncation (hermitian) or the circle.
inline SpectralFilter filter_for(const Propagator& p, std::function<double(double)> f, Interval support,
                                 double budget = default_filter_budget) {
  if (p.hermitian()) {
    Interval g = p.hull();
    if (g.width() == 0.0) g = {g.lower - 1.0, g.upper + 1.0};
    return chebyshev_filter(std::move(f), g, support, budget);
  }
  return trigonometric_filter(std::move(f), support, budget);
}

// Unitary: integer n; hermitian: real t.
inline Vector evolve(const InterfaceOperator& t, const Vector& psi, double time, const TruncationBox& box) {
  Propagator p(t, box);
  if (p.unitary()) {
    if (time != std::round(time)) throw config_error("unitary evolution takes an integer number of steps");
    return p.power(psi, std::lround(time));
  }
  return p.evolve_time(psi, time);
}

// ---------------------------------------------------------------------------
// Regions

// Nested family W_r = {x in shape : depth(x) ≥ r}.
struct Region {
  enum class Kind { half_line, truncated_cone, custom } kind = Kind::half_line;
  int axis = 0;
  int sign = 1;
  Cap cap;
  double radius = 0.0;
  std::function<bool(const Site&)> predicate;

  static Region half_line(int axis, int sign, double r) {
    Region w;
    w.kind = Kind::half_line;
    w.axis = axis;
    w.sign = sign;
    w.radius = r;
    return w;
  }
  static Region truncated_cone(Cap cap, double r) {
    Region w;
    w.kind = Kind::truncated_cone;
    w.cap = std::move(cap);
    w.radius = r;
    return w;
  }
  static Region custom(std::function<bool(const Site&)> p) {
    Region w;
    w.kind = Kind::custom;
    w.predicate = std::move(p);
    return w;
  }

  // −∞ outside the shape.
  double depth(const Site& x) const {
    constexpr double out = -std::numeric_limits<double>::infinity();
    switch (kind) {
      case Kind::half_line:
        return sign * double(x[axis]);
      case Kind::truncated_cone: {
        if (x.is_zero()) return 0.0 >= radius ? 0.0 : out;
        Direction w(x.dim());
        for (int i = 0; i < x.dim(); ++i) w(i) = x[i];
        return cap.contains(w.normalized()) ? x.norm() : out;
      }
      case Kind::custom:
        return predicate(x) ? std::numeric_limits<double>::infinity() : out;
    }
    return out;
  }
  bool contains(const Site& x) const { return depth(x) >= radius; }
  Region with_radius(double r) const {
    Region w = *this;
    w.radius = r;
    return w;
  }

  std::string describe() const {
    char buf[160];
    switch (kind) {
      case Kind::half_line:
        std::snprintf(buf, sizeof buf, "half_line(axis=%d, sign=%+d, r=%g)", axis + 1, sign, radius);
        return buf;
      case Kind::truncated_cone:
        std::snprintf(buf, sizeof buf, "truncated_cone(%s, aperture=%g, r=%g)", detail::direction_label(cap.center).c_str(),
                      cap.angular_radius, radius);
        return buf;
      case Kind::custom:
        return "custom";
    }
    return "";
  }
};

inline Eigen::VectorXd region_indicator(const Region& w, const TruncationBox& box, int n) {
  Eigen::VectorXd d = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(box.vector_size(n)));
  for (std::size_t s = 0; s < box.site_count(); ++s)
    if (w.contains(box.site_at(s))) d.segment(static_cast<Eigen::Index>(s) * n, n).setOnes();
  return d;
}

// Metric neighbourhood family of a quasi-orbit: half-lines for wall ends,
// half-spaces for Cartesian faces, cones around directions.
inline Region neighbourhood(const BulkSystem& b, int dimension, double aperture) {
  if (b.side) return Region::half_line(0, *b.side == Side::plus ? 1 : -1, 0.0);
  if (b.direction) return Region::truncated_cone(Cap{*b.direction, aperture}, 0.0);
  if (!b.translation_invariant()) {
    const auto& f = b.fibered();
    return Region::half_line(f.axis(), f.side() == Side::plus ? 1 : -1, 0.0);
  }
  (void)dimension;
  throw hypothesis_violation("quasi-orbit '" + b.label + "' has no spatial neighbourhood; pass a custom region");
}

// ---------------------------------------------------------------------------
// Non-propagation

struct NonPropagationOptions {
  double epsilon = 1e-3;
  std::vector<double> radii;  // default: 0, Δ, 2Δ, ... with Δ = max(1, L/40)
  double aperture = std::numbers::pi / 12;  // cones around radial directions
  std::optional<Region> region;             // overrides the neighbourhood family
  bool record_history = false;
  SpectralOptions spectral;
};

struct NonPropagationReport {
  std::string target;
  std::string region;
  std::vector<double> radii;
  std::vector<double> max_mass;  // max over sampled times of ‖χ_W φ_t‖ / ‖ψ‖
  std::optional<double> achieved_radius;
  bool pass = false;
  double filtered_norm = 0.0;
  std::size_t samples = 0;
  // With record_history: sample times and the mass in every W_r at each.
  std::vector<double> times;
  std::vector<std::vector<double>> history;
};

// Refuses when supp(η) meets the spectrum of the target bulk.
inline void require_disjoint_support(const InterfaceOperator& t, const SpectralFilter& eta, const BulkSystem& target,
                                     const SpectralOptions& opts) {
  SpectrumSet s;
  if (target.translation_invariant()) {
    BlochGrid grid = opts.grid ? *opts.grid : BlochGrid::default_for(t.dimension());
    s = bulk_spectrum(target.invariant(), grid);
  } else {
    s = detail::face_fibered_spectrum(target.fibered(), opts);
  }
  const double tol = s.resolution();
  if (s.kind() == SpectrumKind::generic) throw hypothesis_violation("target bulk spectrum is neither real nor circular");
  auto meets = [&](const Interval& iv) { return iv.lower <= eta.support.upper + tol && iv.upper >= eta.support.lower - tol; };
  const auto hull = s.kind() == SpectrumKind::unit_circle ? detail::periodic_copies(s.hull()) : s.hull();
  for (const auto& iv : hull)
    if (meets(iv))
      throw hypothesis_violation("filter support [" + std::to_string(eta.support.lower) + ", " +
                                 std::to_string(eta.support.upper) + "] meets the spectrum of quasi-orbit '" +
                                 target.label + "' at [" + std::to_string(iv.lower) + ", " + std::to_string(iv.upper) + "]");
}

// Evolves η(T)ψ over `duration` (steps for unitaries, time for hermitian
// operators: all integers, resp. 64 samples per unit time) and records the
// largest mass in each W_r.
inline NonPropagationReport non_propagation_experiment(const InterfaceOperator& t, const SpectralFilter& eta,
                                                       const std::string& target_label, const Vector& psi,
                                                       const TruncationBox& box, double duration,
                                                       const NonPropagationOptions& opts = {}) {
  const auto orbits = quasi_orbits(t, opts.spectral.orbits);
  const BulkSystem* target = nullptr;
  for (const auto& b : orbits)
    if (b.label == target_label) target = &b;
  if (!target) throw config_error("unknown quasi-orbit '" + target_label + "'");
  require_disjoint_support(t, eta, *target, opts.spectral);

  Propagator p(t, box);
  const int n = t.fiber_dim();
  const Region family = opts.region ? *opts.region : neighbourhood(*target, t.dimension(), opts.aperture);
  NonPropagationReport r;
  r.target = target_label;
  r.region = family.describe();
  r.radii = opts.radii;
  if (r.radii.empty()) {
    const double step = std::max(1, box.half_width() / 40);
    for (double x = 0.0; x <= box.half_width(); x += step) r.radii.push_back(x);
  }
  std::sort(r.radii.begin(), r.radii.end());
  r.max_mass.assign(r.radii.size(), 0.0);

  // Sites of the shape sorted by depth; suffix sums give every W_r at once.
  std::vector<std::pair<double, std::size_t>> order;
  for (std::size_t s = 0; s < box.site_count(); ++s) {
    const double d = family.depth(box.site_at(s));
    if (d > -std::numeric_limits<double>::infinity()) order.emplace_back(d, s);
  }
  std::sort(order.begin(), order.end());
  const double reference = psi.norm();
  const double dt = p.unitary() ? 1.0 : 1.0 / samples_per_unit_time;
  auto record = [&](const Vector& v) {
    std::vector<double> suffix(order.size() + 1, 0.0);
    for (std::size_t i = order.size(); i-- > 0;) suffix[i] = suffix[i + 1] + site_block(v, order[i].second, n).squaredNorm();
    for (std::size_t k = 0; k < r.radii.size(); ++k) {
      auto it = std::lower_bound(order.begin(), order.end(), std::pair{r.radii[k], std::size_t{0}});
      const double mass = reference > 0 ? std::sqrt(suffix[static_cast<std::size_t>(it - order.begin())]) / reference : 0.0;
      r.max_mass[k] = std::max(r.max_mass[k], mass);
      if (opts.record_history) {
        if (k == 0) {
          r.times.push_back(dt * static_cast<double>(r.samples));
          r.history.emplace_back();
        }
        r.history.back().push_back(mass);
      }
    }
    ++r.samples;
  };

  Vector phi = apply_filter(p, eta, psi);
  r.filtered_norm = phi.norm();
  record(phi);
  if (p.unitary()) {
    const long steps = std::lround(duration);
    p.require_room(phi, steps);
    for (long k = 0; k < steps; ++k) {
      phi = p.matrix() * phi;
      record(phi);
    }
  } else {
    const long samples = std::lround(duration * samples_per_unit_time);
    for (long k = 0; k < samples; ++k) {
      phi = p.exp_step(phi, 1.0 / samples_per_unit_time);
      p.check_margin(phi, std::max(psi.squaredNorm(), 1e-300));
      record(phi);
    }
  }
  for (std::size_t k = 0; k < r.radii.size(); ++k)
    if (r.max_mass[k] <= opts.epsilon) {
      r.achieved_radius = r.radii[k];
      break;
    }
  r.pass = r.achieved_radius.has_value();
  return r;
}

}  // namespace ifk
