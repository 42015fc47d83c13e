#pragma once

// Finite samples of a spectrum together with the closed-union ("hull") they
// certify up to a resolution.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "ifk/lattice.hpp"

namespace ifk {

enum class SpectrumKind { real_line, unit_circle, generic };

// Closed interval of energies (real line) or of angles (unit circle, with
// lower in [-π, π) and lower <= upper < lower + 2π).
struct Interval {
  double lower = 0.0;
  double upper = 0.0;

  double width() const { return upper - lower; }
  bool contains(double x) const { return lower <= x && x <= upper; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

struct Gap {
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
};

inline constexpr double two_pi = 2.0 * std::numbers::pi;

// Angle mapped to [-π, π).
inline double wrap_angle(double a) {
  a = std::fmod(a + std::numbers::pi, two_pi);
  if (a < 0) a += two_pi;
  return a - std::numbers::pi;
}

namespace detail {

// Merges sorted-by-lower intervals whose gaps are at most `tol`.
inline std::vector<Interval> merge_intervals(std::vector<Interval> v, double tol) {
  std::sort(v.begin(), v.end(), [](const Interval& a, const Interval& b) {
    return a.lower < b.lower || (a.lower == b.lower && a.upper < b.upper);
  });
  std::vector<Interval> out;
  for (const auto& iv : v) {
    if (!out.empty() && iv.lower - out.back().upper <= tol)
      out.back().upper = std::max(out.back().upper, iv.upper);
    else
      out.push_back(iv);
  }
  return out;
}

// Arcs given as angle intervals; merged with wraparound. A full circle is
// returned as the single arc [-π, π].
inline std::vector<Interval> merge_arcs(std::vector<Interval> v, double tol) {
  std::vector<Interval> flat;
  for (auto iv : v) {
    if (iv.width() >= two_pi - tol) return {{-std::numbers::pi, std::numbers::pi}};
    double lo = wrap_angle(iv.lower);
    double hi = lo + iv.width();
    if (hi > std::numbers::pi) {
      flat.push_back({lo, std::numbers::pi});
      flat.push_back({-std::numbers::pi, hi - two_pi});
    } else {
      flat.push_back({lo, hi});
    }
  }
  auto m = merge_intervals(flat, tol);
  if (m.empty()) return m;
  if (m.size() == 1 && m.front().width() >= two_pi - tol) return {{-std::numbers::pi, std::numbers::pi}};
  // Join the last arc with the first across the cut at ±π.
  if (m.size() > 1 && (m.front().lower + two_pi) - m.back().upper <= tol) {
    Interval joined{m.back().lower, m.front().upper + two_pi};
    m.erase(m.begin());
    m.back() = joined;
  }
  return m;
}

// sup_{a in A} dist(a, B) for finite unions of closed intervals on the line.
// dist(., B) is piecewise linear, so the sup is attained at endpoints of A or
// at midpoints of gaps of B lying inside A.
inline double directed_hausdorff(const std::vector<Interval>& a, const std::vector<Interval>& b) {
  if (a.empty()) return 0.0;
  if (b.empty()) return std::numeric_limits<double>::infinity();
  auto dist = [&](double x) {
    auto it = std::lower_bound(b.begin(), b.end(), x, [](const Interval& iv, double v) { return iv.upper < v; });
    double d = std::numeric_limits<double>::infinity();
    if (it != b.end()) d = std::min(d, it->contains(x) ? 0.0 : it->lower - x);
    if (it != b.begin()) d = std::min(d, x - std::prev(it)->upper);
    return d;
  };
  double worst = 0.0;
  for (const auto& iv : a) {
    worst = std::max({worst, dist(iv.lower), dist(iv.upper)});
    for (std::size_t k = 0; k + 1 < b.size(); ++k) {
      double mid = 0.5 * (b[k].upper + b[k + 1].lower);
      if (iv.contains(mid)) worst = std::max(worst, dist(mid));
    }
  }
  return worst;
}

inline std::vector<Interval> sorted_copy(std::vector<Interval> v) {
  std::sort(v.begin(), v.end(), [](const Interval& x, const Interval& y) { return x.lower < y.lower; });
  return v;
}

// Arcs unrolled onto the line with copies at ±2π so that line distance
// becomes angular distance.
inline std::vector<Interval> periodic_copies(const std::vector<Interval>& arcs) {
  std::vector<Interval> out;
  for (int k = -1; k <= 1; ++k)
    for (const auto& a : arcs) out.push_back({a.lower + k * two_pi, a.upper + k * two_pi});
  return merge_intervals(out, 0.0);
}

}  // namespace detail

class SpectrumSet {
 public:
  SpectrumSet() = default;

  // Builds the hull from samples: real parts (real_line), arguments
  // (unit_circle) or nothing (generic).
  static SpectrumSet from_points(std::vector<cplx> points, double resolution, SpectrumKind kind) {
    SpectrumSet s;
    s.points_ = std::move(points);
    s.resolution_ = resolution;
    s.kind_ = kind;
    std::vector<Interval> iv;
    iv.reserve(s.points_.size());
    if (kind == SpectrumKind::real_line) {
      for (const auto& z : s.points_) iv.push_back({z.real(), z.real()});
      s.hull_ = detail::merge_intervals(std::move(iv), resolution);
    } else if (kind == SpectrumKind::unit_circle) {
      for (const auto& z : s.points_) {
        double a = wrap_angle(std::arg(z));
        iv.push_back({a, a});
      }
      s.hull_ = detail::merge_arcs(std::move(iv), resolution);
    }
    return s;
  }

  // Closed union given directly by intervals (real line) or arcs.
  static SpectrumSet from_hull(std::vector<Interval> hull, double resolution, SpectrumKind kind) {
    SpectrumSet s;
    s.resolution_ = resolution;
    s.kind_ = kind;
    s.hull_ = kind == SpectrumKind::unit_circle ? detail::merge_arcs(std::move(hull), 0.0)
                                                : detail::merge_intervals(std::move(hull), 0.0);
    for (const auto& iv : s.hull_) {
      if (kind == SpectrumKind::unit_circle) {
        s.points_.push_back(std::polar(1.0, iv.lower));
        s.points_.push_back(std::polar(1.0, iv.upper));
      } else {
        s.points_.push_back(iv.lower);
        s.points_.push_back(iv.upper);
      }
    }
    return s;
  }

  const std::vector<cplx>& points() const { return points_; }
  const std::vector<Interval>& hull() const { return hull_; }
  double resolution() const { return resolution_; }
  SpectrumKind kind() const { return kind_; }
  bool approximate() const { return approximate_; }
  void set_approximate(bool a) { approximate_ = a; }
  bool empty() const { return points_.empty(); }

  // Distance from z to the set (hull for real_line/unit_circle; angular
  // distance on the circle).
  double distance(cplx z) const {
    if (points_.empty()) return std::numeric_limits<double>::infinity();
    if (kind_ == SpectrumKind::real_line)
      return detail::directed_hausdorff({{z.real(), z.real()}}, hull_);
    if (kind_ == SpectrumKind::unit_circle) {
      double a = wrap_angle(std::arg(z));
      return detail::directed_hausdorff({{a, a}}, detail::periodic_copies(hull_));
    }
    double d = std::numeric_limits<double>::infinity();
    for (const auto& p : points_) d = std::min(d, std::abs(p - z));
    return d;
  }

  bool contains(cplx z, double tol = 0.0) const { return distance(z) <= tol; }

  friend SpectrumSet unite(const SpectrumSet& a, const SpectrumSet& b) {
    if (a.empty()) return b;
    if (b.empty()) return a;
    SpectrumSet s;
    s.points_ = a.points_;
    s.points_.insert(s.points_.end(), b.points_.begin(), b.points_.end());
    s.resolution_ = std::max(a.resolution_, b.resolution_);
    s.approximate_ = a.approximate_ || b.approximate_;
    s.kind_ = a.kind_ == b.kind_ ? a.kind_ : SpectrumKind::generic;
    if (s.kind_ == SpectrumKind::real_line) {
      auto h = a.hull_;
      h.insert(h.end(), b.hull_.begin(), b.hull_.end());
      s.hull_ = detail::merge_intervals(std::move(h), 0.0);
    } else if (s.kind_ == SpectrumKind::unit_circle) {
      auto h = a.hull_;
      h.insert(h.end(), b.hull_.begin(), b.hull_.end());
      s.hull_ = detail::merge_arcs(std::move(h), 0.0);
    }
    return s;
  }

 private:
  std::vector<cplx> points_;
  std::vector<Interval> hull_;
  double resolution_ = 0.0;
  SpectrumKind kind_ = SpectrumKind::real_line;
  bool approximate_ = false;
};

// Hausdorff distance between hulls (angular metric on the circle, point
// clouds for generic sets).
inline double hausdorff(const SpectrumSet& a, const SpectrumSet& b) {
  if (a.empty() && b.empty()) return 0.0;
  if (a.empty() || b.empty()) return std::numeric_limits<double>::infinity();
  if (a.kind() == SpectrumKind::real_line && b.kind() == SpectrumKind::real_line)
    return std::max(detail::directed_hausdorff(a.hull(), b.hull()), detail::directed_hausdorff(b.hull(), a.hull()));
  if (a.kind() == SpectrumKind::unit_circle && b.kind() == SpectrumKind::unit_circle)
    return std::max(detail::directed_hausdorff(a.hull(), detail::periodic_copies(b.hull())),
                    detail::directed_hausdorff(b.hull(), detail::periodic_copies(a.hull())));
  double d = 0.0;
  for (const auto& p : a.points()) d = std::max(d, b.distance(p));
  for (const auto& p : b.points()) d = std::max(d, a.distance(p));
  return d;
}

// Hausdorff distance between a finite point set on the real line and a hull.
inline double hausdorff_points(const std::vector<double>& points, const std::vector<Interval>& hull) {
  std::vector<Interval> p;
  for (double x : points) p.push_back({x, x});
  p = detail::sorted_copy(std::move(p));
  auto h = detail::sorted_copy(hull);
  return std::max(detail::directed_hausdorff(p, h), detail::directed_hausdorff(h, p));
}

// Maximal spectral gap of the hull containing E: an open energy interval on
// the real line, an open arc (angles) on the circle.
inline Gap spectral_gap(const SpectrumSet& s, cplx e) {
  if (s.kind() == SpectrumKind::generic) throw no_gap("spectral gaps need a real-line or unit-circle spectrum");
  if (s.kind() == SpectrumKind::real_line) {
    const double x = e.real();
    Gap g;
    for (const auto& iv : s.hull()) {
      if (iv.contains(x)) throw no_gap("energy " + std::to_string(x) + " lies in the spectrum");
      if (iv.upper < x) g.lower = std::max(g.lower, iv.upper);
      if (iv.lower > x) g.upper = std::min(g.upper, iv.lower);
    }
    return g;
  }
  const double a = wrap_angle(std::arg(e));
  if (s.hull().empty()) return {a - std::numbers::pi, a + std::numbers::pi};
  // Unroll the arcs around a and look for the neighbours.
  Gap g;
  for (const auto& iv : detail::periodic_copies(s.hull())) {
    if (iv.contains(a)) throw no_gap("point lies in the spectrum");
    if (iv.upper < a) g.lower = std::max(g.lower, iv.upper);
    if (iv.lower > a) g.upper = std::min(g.upper, iv.lower);
  }
  return g;
}

}  // namespace ifk
