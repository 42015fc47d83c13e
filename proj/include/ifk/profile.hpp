#pragma once

// Coefficient profiles f: ℤ^l -> M_N(ℂ) tagged with the asymptotics algebra
// they belong to. A profile knows its values on the lattice and its limit
// data at infinity (wall limits, sphere function, face profiles, asymptotic
// range points); the bulk systems of an interface operator are read off the
// limit data, never off samples.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <numbers>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ifk/lattice.hpp"

namespace ifk {

enum class Asymptotics {
  constant,  // f - c is in C_0 for a single matrix c
  compactly_supported,
  domain_wall,
  cartesian,
  radial,
  cone,
  vanishing_oscillation,
};

inline std::string_view to_string(Asymptotics a) {
  switch (a) {
    case Asymptotics::constant: return "Constant";
    case Asymptotics::compactly_supported: return "CompactlySupported";
    case Asymptotics::domain_wall: return "DomainWall1D";
    case Asymptotics::cartesian: return "CartesianAniso";
    case Asymptotics::radial: return "Radial";
    case Asymptotics::cone: return "ConeSupported";
    case Asymptotics::vanishing_oscillation: return "VanishingOscillation";
  }
  return "?";
}

enum class Side { minus = -1, plus = 1 };

inline int sign_of(Side s) { return static_cast<int>(s); }
inline std::string_view to_string(Side s) { return s == Side::minus ? "-" : "+"; }

using Direction = Eigen::VectorXd;
using ProfileFunction = std::function<Matrix(const Site&)>;
using SphereFunction = std::function<Matrix(const Direction&)>;
// Declared decay bound as a function of the distance R from the origin.
using Envelope = std::function<double(double)>;

inline Envelope exponential_envelope(double amplitude, double rate) {
  return [=](double r) { return amplitude * std::exp(-rate * r); };
}
inline Envelope power_envelope(double amplitude, double power) {
  return [=](double r) { return amplitude * std::pow(std::max(r, 1.0), -power); };
}

// Radii at which payload certificates are sampled.
inline constexpr std::array<double, 3> certificate_radii{10.0, 50.0, 100.0};
// Absolute allowance for rounding in sampled certificate checks.
inline constexpr double certificate_slack = 1e-12;

inline double angle_between(const Direction& a, const Direction& b) {
  double c = a.dot(b) / (a.norm() * b.norm());
  return std::acos(std::clamp(c, -1.0, 1.0));
}

inline Direction direction_of(const Site& x) {
  Direction d(x.dim());
  for (int i = 0; i < x.dim(); ++i) d(i) = x[i];
  double n = d.norm();
  if (n > 0) d /= n;
  return d;
}

// Closed spherical cap on S^{l-1}.
struct Cap {
  Direction center;
  double angular_radius = 0.0;

  bool contains(const Direction& omega) const { return angle_between(center, omega) <= angular_radius + 1e-12; }
  friend bool operator==(const Cap& a, const Cap& b) {
    return a.angular_radius == b.angular_radius && a.center.size() == b.center.size() && a.center == b.center;
  }
};

// A point at infinity where a profile can be evaluated.
struct LimitPoint {
  enum class Kind { wall, sphere, range } kind = Kind::wall;
  Side side = Side::plus;
  Direction omega;
  std::size_t index = 0;

  static LimitPoint wall(Side s) { return {Kind::wall, s, {}, 0}; }
  static LimitPoint sphere(Direction w) { return {Kind::sphere, Side::plus, std::move(w), 0}; }
  static LimitPoint range(std::size_t k) { return {Kind::range, Side::plus, {}, k}; }
};

class CoefficientProfile;

namespace detail {

struct ProfileNode {
  int dim = 1;
  int fiber = 1;
  Asymptotics family = Asymptotics::constant;
  std::vector<Cap> caps;         // cone family
  std::size_t range_count = 0;   // vanishing-oscillation family

  virtual ~ProfileNode() = default;
  virtual Matrix value(const Site& x) const = 0;
  virtual Matrix limit(const LimitPoint& p) const = 0;
  virtual CoefficientProfile face(int axis, Side side) const = 0;
};

}  // namespace detail

// Immutable handle; copies share the node.
class CoefficientProfile {
 public:
  CoefficientProfile() = default;
  explicit CoefficientProfile(std::shared_ptr<const detail::ProfileNode> node) : node_(std::move(node)) {}

  // --- factories -----------------------------------------------------------
  static CoefficientProfile constant(int dim, Matrix c);
  static CoefficientProfile identity(int dim, int n) { return constant(dim, Matrix::Identity(n, n)); }
  static CoefficientProfile zero(int dim, int n);
  // Finitely supported profile given by its values.
  static CoefficientProfile compact(int dim, int n, std::map<Site, Matrix> values);
  // f(x) = fn(x) for |x|_inf <= radius, zero elsewhere.
  static CoefficientProfile compact(int dim, int n, int radius, ProfileFunction fn);

  int dimension() const { return node_->dim; }
  int fiber_dim() const { return node_->fiber; }
  Asymptotics variant() const { return node_->family; }
  const std::vector<Cap>& caps() const { return node_->caps; }
  std::size_t range_size() const { return node_->range_count; }

  Matrix evaluate(const Site& x) const {
    if (x.dim() != node_->dim) throw dimension_mismatch("site dimension does not match profile");
    return node_->value(x);
  }
  Matrix limit(const LimitPoint& p) const { return node_->limit(p); }
  Matrix wall_limit(Side s) const { return node_->limit(LimitPoint::wall(s)); }
  Matrix sphere_limit(const Direction& omega) const { return node_->limit(LimitPoint::sphere(omega)); }
  Matrix range_point(std::size_t k) const { return node_->limit(LimitPoint::range(k)); }
  // The (l-1)-dimensional profile f_{j±}; defined for Cartesian, constant and compact families.
  CoefficientProfile face(int axis, Side side) const {
    if (axis < 0 || axis >= node_->dim) throw dimension_mismatch("face axis out of range");
    if (node_->dim < 2) throw dimension_mismatch("faces need dimension >= 2");
    return node_->face(axis, side);
  }

  bool uniform_at_infinity() const {
    return variant() == Asymptotics::constant || variant() == Asymptotics::compactly_supported;
  }
  const detail::ProfileNode* node() const { return node_.get(); }
  explicit operator bool() const { return static_cast<bool>(node_); }

 private:
  std::shared_ptr<const detail::ProfileNode> node_;
};

CoefficientProfile operator+(const CoefficientProfile& a, const CoefficientProfile& b);
// Pointwise product x -> a(x) b(x).
CoefficientProfile operator*(const CoefficientProfile& a, const CoefficientProfile& b);
CoefficientProfile scale(const CoefficientProfile& a, cplx z);
// x -> a(x)^†
CoefficientProfile adjoint(const CoefficientProfile& a);
// x -> a(x - g)
CoefficientProfile translate(const CoefficientProfile& a, const ShiftVector& g);

// ---------------------------------------------------------------------------
// Payloads

struct DomainWallPayload {
  Matrix left_limit;
  Matrix right_limit;
  ProfileFunction transition;  // the full profile x -> f(x) on ℤ
  Envelope envelope;           // bound on |f(±R) - f(±∞)|
};

struct CartesianPayload {
  int dimension = 2;
  ProfileFunction bulk_function;
  // Index 2*axis + (side == plus): the (l-1)-dimensional face limit f_{j±}.
  std::vector<CoefficientProfile> face_limits;
  Envelope envelope;
};

struct RadialPayload {
  int dimension = 2;
  SphereFunction sphere_function;
  double modulus_of_continuity = 0.0;  // Lipschitz constant in the geodesic angle
  ProfileFunction remainder;           // decays at infinity, |remainder(x)| <= envelope(|x|)
  Envelope envelope;
};

struct ConePayload {
  int dimension = 2;
  std::vector<Cap> caps;
  std::vector<SphereFunction> cap_functions;  // one per cap, evaluated inside its cap
  double modulus_of_continuity = 0.0;
  ProfileFunction remainder;
  Envelope envelope;
};

struct VanishingOscillationPayload {
  int dimension = 1;
  ProfileFunction function;
  // Finite list claimed to cover the asymptotic range within coverage_tolerance.
  std::vector<Matrix> asymptotic_range;
  double coverage_tolerance = 0.1;
  Envelope envelope;  // bound on |f(x + e_i) - f(x)| for |x| >= R
};

CoefficientProfile make_domain_wall(DomainWallPayload p, int fiber_dim);
CoefficientProfile make_cartesian(CartesianPayload p, int fiber_dim);
CoefficientProfile make_radial(RadialPayload p, int fiber_dim);
CoefficientProfile make_cone(ConePayload p, int fiber_dim);
CoefficientProfile make_vanishing_oscillation(VanishingOscillationPayload p, int fiber_dim);

// Sample points used for numerical sup-norm checks: a small cube around the
// origin plus far points on the coordinate axes and diagonals.
inline std::vector<Site> probe_sites(int dim) {
  const int cube = dim == 1 ? 12 : dim == 2 ? 6 : 3;
  std::vector<Site> out;
  TruncationBox box(dim, cube);
  out.reserve(box.site_count() + 64);
  for (std::size_t i = 0; i < box.site_count(); ++i) out.push_back(box.site_at(i));
  for (int r : {10, 50, 100, 1000}) {
    for (int axis = 0; axis < dim; ++axis)
      for (int s : {-1, 1}) {
        Site x(dim);
        x[axis] = s * r;
        out.push_back(x);
      }
    Site diag(dim), anti(dim);
    for (int i = 0; i < dim; ++i) {
      diag[i] = r;
      anti[i] = (i % 2 ? r : -r);
    }
    out.push_back(diag);
    out.push_back(-diag);
    out.push_back(anti);
    out.push_back(-anti);
  }
  return out;
}

// Directions on S^{l-1} used to enumerate quasi-orbits of radial/cone profiles.
// l = 1: {-1, +1}; l = 2: `count` equally spaced angles; l = 3: icosahedral
// refinement with `count` subdivision levels.
std::vector<Direction> sphere_grid(int dim, int count);

double sampled_sup_norm(const CoefficientProfile& f);

// ---------------------------------------------------------------------------
// Implementation

namespace detail {

inline Matrix zero_matrix(int n) { return Matrix::Zero(n, n); }

inline void check_shape(const Matrix& m, int n, const char* what) {
  if (m.rows() != n || m.cols() != n)
    throw dimension_mismatch(std::string(what) + ": expected " + std::to_string(n) + "x" + std::to_string(n) +
                             " matrix");
}

struct ConstantNode final : ProfileNode {
  Matrix c;
  ConstantNode(int d, Matrix m) : c(std::move(m)) {
    dim = d;
    fiber = static_cast<int>(c.rows());
    family = Asymptotics::constant;
  }
  Matrix value(const Site&) const override { return c; }
  Matrix limit(const LimitPoint&) const override { return c; }
  CoefficientProfile face(int, Side) const override { return CoefficientProfile::constant(dim - 1, c); }
};

struct CompactNode final : ProfileNode {
  std::map<Site, Matrix> values;
  int radius = -1;
  ProfileFunction fn;
  Matrix value(const Site& x) const override {
    if (fn) return x.max_norm() <= radius ? fn(x) : zero_matrix(fiber);
    auto it = values.find(x);
    return it == values.end() ? zero_matrix(fiber) : it->second;
  }
  Matrix limit(const LimitPoint&) const override { return zero_matrix(fiber); }
  CoefficientProfile face(int, Side) const override { return CoefficientProfile::zero(dim - 1, fiber); }
};

struct DomainWallNode final : ProfileNode {
  DomainWallPayload p;
  Matrix value(const Site& x) const override { return p.transition(x); }
  Matrix limit(const LimitPoint& q) const override {
    if (q.kind != LimitPoint::Kind::wall) throw inconsistent_asymptotics("domain-wall profile queried off the wall");
    return q.side == Side::minus ? p.left_limit : p.right_limit;
  }
  CoefficientProfile face(int, Side) const override {
    throw inconsistent_asymptotics("domain-wall profiles have no faces");
  }
};

struct CartesianNode final : ProfileNode {
  CartesianPayload p;
  Matrix value(const Site& x) const override { return p.bulk_function(x); }
  Matrix limit(const LimitPoint&) const override {
    throw inconsistent_asymptotics("Cartesian profiles have face limits, not point limits");
  }
  CoefficientProfile face(int axis, Side side) const override {
    return p.face_limits[static_cast<std::size_t>(2 * axis + (side == Side::plus ? 1 : 0))];
  }
};

struct RadialNode final : ProfileNode {
  RadialPayload p;
  Matrix value(const Site& x) const override {
    Matrix r = p.remainder(x);
    if (!x.is_zero()) r += p.sphere_function(direction_of(x));
    return r;
  }
  Matrix limit(const LimitPoint& q) const override {
    if (q.kind != LimitPoint::Kind::sphere) throw inconsistent_asymptotics("radial profile queried off the sphere");
    return p.sphere_function(q.omega);
  }
  CoefficientProfile face(int, Side) const override { throw inconsistent_asymptotics("radial profiles have no faces"); }
};

struct ConeNode final : ProfileNode {
  ConePayload p;
  Matrix on_sphere(const Direction& omega) const {
    for (std::size_t j = 0; j < p.caps.size(); ++j)
      if (p.caps[j].contains(omega)) return p.cap_functions[j](omega);
    return zero_matrix(fiber);
  }
  Matrix value(const Site& x) const override {
    Matrix r = p.remainder(x);
    if (!x.is_zero()) r += on_sphere(direction_of(x));
    return r;
  }
  Matrix limit(const LimitPoint& q) const override {
    if (q.kind != LimitPoint::Kind::sphere) throw inconsistent_asymptotics("cone profile queried off the sphere");
    return on_sphere(q.omega);
  }
  CoefficientProfile face(int, Side) const override { throw inconsistent_asymptotics("cone profiles have no faces"); }
};

struct VanishingOscillationNode final : ProfileNode {
  VanishingOscillationPayload p;
  Matrix value(const Site& x) const override { return p.function(x); }
  Matrix limit(const LimitPoint& q) const override {
    if (q.kind != LimitPoint::Kind::range || q.index >= p.asymptotic_range.size())
      throw inconsistent_asymptotics("vanishing-oscillation profile queried off its asymptotic range");
    return p.asymptotic_range[q.index];
  }
  CoefficientProfile face(int, Side) const override {
    throw inconsistent_asymptotics("vanishing-oscillation profiles have no faces");
  }
};

// Family of a sum: uniform families are absorbed.
inline Asymptotics combine_sum(const ProfileNode& a, const ProfileNode& b) {
  if (a.family == Asymptotics::compactly_supported) return b.family;
  if (b.family == Asymptotics::compactly_supported) return a.family;
  if (a.family == Asymptotics::constant) return b.family;
  if (b.family == Asymptotics::constant) return a.family;
  if (a.family == b.family) return a.family;
  // Cone profiles are radial profiles vanishing off their caps.
  if ((a.family == Asymptotics::radial && b.family == Asymptotics::cone) ||
      (a.family == Asymptotics::cone && b.family == Asymptotics::radial))
    return Asymptotics::radial;
  throw inconsistent_asymptotics("cannot mix " + std::string(to_string(a.family)) + " and " +
                                 std::string(to_string(b.family)) + " profiles");
}

inline Asymptotics combine_product(const ProfileNode& a, const ProfileNode& b) {
  if (a.family == Asymptotics::compactly_supported || b.family == Asymptotics::compactly_supported) {
    combine_sum(a, b);  // still reject incompatible families
    return Asymptotics::compactly_supported;
  }
  if (a.family == Asymptotics::cone || b.family == Asymptotics::cone) {
    // cone * radial vanishes off the caps too
    Asymptotics f = combine_sum(a, b);
    return f == Asymptotics::radial ? Asymptotics::cone : f;
  }
  return combine_sum(a, b);
}

inline void inherit_geometry(ProfileNode& out, const ProfileNode& a, const ProfileNode& b) {
  if (!a.caps.empty() && !b.caps.empty() && !(a.caps == b.caps))
    throw inconsistent_asymptotics("cone profiles with different cap geometries");
  out.caps = !a.caps.empty() ? a.caps : b.caps;
  if (a.range_count && b.range_count && a.range_count != b.range_count)
    throw inconsistent_asymptotics("vanishing-oscillation profiles with different asymptotic range sizes");
  out.range_count = std::max(a.range_count, b.range_count);
}

inline void check_pair(const ProfileNode& a, const ProfileNode& b) {
  if (a.dim != b.dim || a.fiber != b.fiber) throw lattice_mismatch("profiles on different lattices");
}

struct SumNode final : ProfileNode {
  CoefficientProfile a, b;
  SumNode(CoefficientProfile x, CoefficientProfile y) : a(std::move(x)), b(std::move(y)) {
    check_pair(*a.node(), *b.node());
    dim = a.dimension();
    fiber = a.fiber_dim();
    family = combine_sum(*a.node(), *b.node());
    inherit_geometry(*this, *a.node(), *b.node());
  }
  Matrix value(const Site& x) const override { return a.evaluate(x) + b.evaluate(x); }
  Matrix limit(const LimitPoint& p) const override {
    // Compact summands contribute nothing at infinity; skipping them keeps limits bit-identical.
    if (b.variant() == Asymptotics::compactly_supported) return a.limit(p);
    if (a.variant() == Asymptotics::compactly_supported) return b.limit(p);
    return a.limit(p) + b.limit(p);
  }
  CoefficientProfile face(int axis, Side s) const override { return a.face(axis, s) + b.face(axis, s); }
};

struct ProductNode final : ProfileNode {
  CoefficientProfile a, b;
  ProductNode(CoefficientProfile x, CoefficientProfile y) : a(std::move(x)), b(std::move(y)) {
    check_pair(*a.node(), *b.node());
    dim = a.dimension();
    fiber = a.fiber_dim();
    family = combine_product(*a.node(), *b.node());
    inherit_geometry(*this, *a.node(), *b.node());
  }
  Matrix value(const Site& x) const override { return a.evaluate(x) * b.evaluate(x); }
  Matrix limit(const LimitPoint& p) const override {
    if (family == Asymptotics::compactly_supported) return zero_matrix(fiber);
    return a.limit(p) * b.limit(p);
  }
  CoefficientProfile face(int axis, Side s) const override { return a.face(axis, s) * b.face(axis, s); }
};

struct ScaleNode final : ProfileNode {
  CoefficientProfile a;
  cplx z;
  ScaleNode(CoefficientProfile x, cplx s) : a(std::move(x)), z(s) {
    dim = a.dimension();
    fiber = a.fiber_dim();
    family = a.variant();
    caps = a.caps();
    range_count = a.range_size();
  }
  Matrix value(const Site& x) const override { return z * a.evaluate(x); }
  Matrix limit(const LimitPoint& p) const override { return z * a.limit(p); }
  CoefficientProfile face(int axis, Side s) const override { return scale(a.face(axis, s), z); }
};

struct AdjointNode final : ProfileNode {
  CoefficientProfile a;
  explicit AdjointNode(CoefficientProfile x) : a(std::move(x)) {
    dim = a.dimension();
    fiber = a.fiber_dim();
    family = a.variant();
    caps = a.caps();
    range_count = a.range_size();
  }
  Matrix value(const Site& x) const override { return a.evaluate(x).adjoint(); }
  Matrix limit(const LimitPoint& p) const override { return a.limit(p).adjoint(); }
  CoefficientProfile face(int axis, Side s) const override { return adjoint(a.face(axis, s)); }
};

// Limits at infinity are translation invariant; faces translate by the
// remaining coordinates.
struct TranslateNode final : ProfileNode {
  CoefficientProfile a;
  ShiftVector g;
  TranslateNode(CoefficientProfile x, ShiftVector s) : a(std::move(x)), g(std::move(s)) {
    if (g.dim() != a.dimension()) throw dimension_mismatch("translation of wrong dimension");
    dim = a.dimension();
    fiber = a.fiber_dim();
    family = a.variant();
    caps = a.caps();
    range_count = a.range_size();
  }
  Matrix value(const Site& x) const override { return a.evaluate(x - g); }
  Matrix limit(const LimitPoint& p) const override { return a.limit(p); }
  CoefficientProfile face(int axis, Side s) const override { return translate(a.face(axis, s), g.drop(axis)); }
};

}  // namespace detail

inline CoefficientProfile CoefficientProfile::constant(int dim, Matrix c) {
  if (c.rows() != c.cols()) throw dimension_mismatch("constant profile must be square");
  if (dim < 0 || dim > max_dimension) throw dimension_mismatch("profile dimension out of range");
  return CoefficientProfile(std::make_shared<detail::ConstantNode>(dim, std::move(c)));
}

inline CoefficientProfile CoefficientProfile::zero(int dim, int n) {
  auto node = std::make_shared<detail::CompactNode>();
  node->dim = dim;
  node->fiber = n;
  node->family = Asymptotics::compactly_supported;
  return CoefficientProfile(std::move(node));
}

inline CoefficientProfile CoefficientProfile::compact(int dim, int n, std::map<Site, Matrix> values) {
  for (const auto& [x, m] : values) {
    if (x.dim() != dim) throw dimension_mismatch("compact profile site of wrong dimension");
    detail::check_shape(m, n, "compact profile value");
  }
  auto node = std::make_shared<detail::CompactNode>();
  node->dim = dim;
  node->fiber = n;
  node->family = Asymptotics::compactly_supported;
  node->values = std::move(values);
  return CoefficientProfile(std::move(node));
}

inline CoefficientProfile CoefficientProfile::compact(int dim, int n, int radius, ProfileFunction fn) {
  auto node = std::make_shared<detail::CompactNode>();
  node->dim = dim;
  node->fiber = n;
  node->family = Asymptotics::compactly_supported;
  node->radius = radius;
  node->fn = std::move(fn);
  return CoefficientProfile(std::move(node));
}

inline CoefficientProfile operator+(const CoefficientProfile& a, const CoefficientProfile& b) {
  return CoefficientProfile(std::make_shared<detail::SumNode>(a, b));
}
inline CoefficientProfile operator*(const CoefficientProfile& a, const CoefficientProfile& b) {
  return CoefficientProfile(std::make_shared<detail::ProductNode>(a, b));
}
inline CoefficientProfile scale(const CoefficientProfile& a, cplx z) {
  return CoefficientProfile(std::make_shared<detail::ScaleNode>(a, z));
}
inline CoefficientProfile adjoint(const CoefficientProfile& a) {
  return CoefficientProfile(std::make_shared<detail::AdjointNode>(a));
}
inline CoefficientProfile translate(const CoefficientProfile& a, const ShiftVector& g) {
  if (g.is_zero()) return a;
  return CoefficientProfile(std::make_shared<detail::TranslateNode>(a, g));
}

// ---------------------------------------------------------------------------
// Certified constructors

inline CoefficientProfile make_domain_wall(DomainWallPayload p, int n) {
  detail::check_shape(p.left_limit, n, "left limit");
  detail::check_shape(p.right_limit, n, "right limit");
  if (!p.transition || !p.envelope) throw certificate_error("domain wall needs a transition and an envelope");
  for (double r : certificate_radii) {
    int R = static_cast<int>(r);
    double dl = op_norm(p.transition(Site{-R}) - p.left_limit);
    double dr = op_norm(p.transition(Site{R}) - p.right_limit);
    if (dl > p.envelope(r) + certificate_slack || dr > p.envelope(r) + certificate_slack)
      throw certificate_error("domain wall deviates from its limits beyond the envelope at R=" + std::to_string(R));
  }
  auto node = std::make_shared<detail::DomainWallNode>();
  node->dim = 1;
  node->fiber = n;
  node->family = Asymptotics::domain_wall;
  node->p = std::move(p);
  return CoefficientProfile(std::move(node));
}

inline CoefficientProfile make_cartesian(CartesianPayload p, int n) {
  const int l = p.dimension;
  if (l < 2 || l > max_dimension) throw dimension_mismatch("Cartesian anisotropy needs dimension 2 or 3");
  if (p.face_limits.size() != static_cast<std::size_t>(2 * l))
    throw dimension_mismatch("Cartesian payload needs 2l face limits");
  for (const auto& f : p.face_limits)
    if (!f || f.dimension() != l - 1 || f.fiber_dim() != n)
      throw dimension_mismatch("face limit of wrong dimension");
  if (!p.bulk_function || !p.envelope) throw certificate_error("Cartesian payload needs a bulk function and envelope");

  // Sample |f(x) - f_{j±}(x)| on the slab ±x_j = R, other coordinates on a coarse grid.
  for (double r : certificate_radii) {
    const int R = static_cast<int>(r);
    const std::array<int, 5> others{-R, -R / 2, 0, R / 2, R};
    for (int axis = 0; axis < l; ++axis)
      for (Side side : {Side::minus, Side::plus}) {
        const auto& face = p.face_limits[static_cast<std::size_t>(2 * axis + (side == Side::plus ? 1 : 0))];
        TruncationBox grid(l - 1, 2);
        for (std::size_t i = 0; i < grid.site_count(); ++i) {
          Site y = grid.site_at(i);
          Site yv(l - 1);
          for (int k = 0; k < l - 1; ++k) yv[k] = others[static_cast<std::size_t>(y[k] + 2)];
          Site x = yv.insert(axis, sign_of(side) * R);
          double dev = op_norm(p.bulk_function(x) - face.evaluate(yv));
          if (dev > p.envelope(r) + certificate_slack)
            throw certificate_error("Cartesian profile deviates from face (" + std::to_string(axis) +
                                    std::string(to_string(side)) + ") at " + x.str());
        }
      }
    // Corner consistency: limits of adjacent faces agree far out.
    if (l == 2) {
      for (Side s0 : {Side::minus, Side::plus})
        for (Side s1 : {Side::minus, Side::plus}) {
          Matrix a = p.face_limits[s0 == Side::plus ? 1 : 0].evaluate(Site{sign_of(s1) * R});
          Matrix b = p.face_limits[s1 == Side::plus ? 3 : 2].evaluate(Site{sign_of(s0) * R});
          if (op_norm(a - b) > 2 * p.envelope(r) + certificate_slack)
            throw certificate_error("Cartesian face limits disagree on a corner");
        }
    }
  }
  auto node = std::make_shared<detail::CartesianNode>();
  node->dim = l;
  node->fiber = n;
  node->family = Asymptotics::cartesian;
  node->p = std::move(p);
  return CoefficientProfile(std::move(node));
}

inline std::vector<Direction> sphere_grid(int dim, int count) {
  std::vector<Direction> out;
  if (dim == 1) {
    out.push_back(Direction::Constant(1, -1.0));
    out.push_back(Direction::Constant(1, 1.0));
    return out;
  }
  if (dim == 2) {
    if (count < 4) throw dimension_mismatch("sphere grid needs at least 4 points");
    for (int k = 0; k < count; ++k) {
      double phi = 2.0 * std::numbers::pi * k / count;
      Direction d(2);
      d << std::cos(phi), std::sin(phi);
      out.push_back(d);
    }
    return out;
  }
  // Icosahedron, refined `count` times by edge midpoints.
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Eigen::Vector3d> v{{-1, t, 0}, {1, t, 0},   {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                                 {0, -1, -t}, {0, 1, -t}, {t, 0, -1},  {t, 0, 1},  {-t, 0, -1}, {-t, 0, 1}};
  std::vector<std::array<int, 3>> f{{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                                    {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                                    {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                                    {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (auto& p : v) p.normalize();
  for (int level = 0; level < count; ++level) {
    std::map<std::pair<int, int>, int> mid;
    auto midpoint = [&](int a, int b) {
      auto key = std::minmax(a, b);
      auto it = mid.find(key);
      if (it != mid.end()) return it->second;
      v.push_back((v[static_cast<std::size_t>(a)] + v[static_cast<std::size_t>(b)]).normalized());
      int id = static_cast<int>(v.size()) - 1;
      mid.emplace(key, id);
      return id;
    };
    std::vector<std::array<int, 3>> next;
    for (auto [a, b, c] : f) {
      int ab = midpoint(a, b), bc = midpoint(b, c), ca = midpoint(c, a);
      next.push_back({a, ab, ca});
      next.push_back({b, bc, ab});
      next.push_back({c, ca, bc});
      next.push_back({ab, bc, ca});
    }
    f = std::move(next);
  }
  for (const auto& p : v) out.push_back(Direction(p));
  return out;
}

namespace detail {

// Lattice point nearest to R·ω.
inline Site ray_point(const Direction& omega, double r) {
  Site x(static_cast<int>(omega.size()));
  for (int i = 0; i < x.dim(); ++i) x[i] = static_cast<int>(std::lround(r * omega(i)));
  return x;
}

inline void certify_sphere_limits(const std::function<Matrix(const Site&)>& value,
                                  const std::function<Matrix(const Direction&)>& on_sphere,
                                  const std::vector<Direction>& dirs, double modulus, const Envelope& envelope,
                                  const char* what) {
  for (double r : certificate_radii)
    for (const auto& w : dirs) {
      Site x = ray_point(w, r);
      if (x.is_zero()) continue;
      double slack = modulus * angle_between(direction_of(x), w);
      double dev = op_norm(value(x) - on_sphere(w));
      if (dev > envelope(r) + slack + certificate_slack)
        throw certificate_error(std::string(what) + " deviates from its sphere limit along a ray at " + x.str());
    }
}

}  // namespace detail

inline CoefficientProfile make_radial(RadialPayload p, int n) {
  const int l = p.dimension;
  if (l < 1 || l > max_dimension) throw dimension_mismatch("radial profile dimension out of range");
  if (!p.sphere_function || !p.remainder || !p.envelope) throw certificate_error("radial payload incomplete");
  auto node = std::make_shared<detail::RadialNode>();
  node->dim = l;
  node->fiber = n;
  node->family = Asymptotics::radial;
  node->p = p;
  auto dirs = sphere_grid(l, l == 2 ? 24 : 0);
  detail::certify_sphere_limits([&](const Site& x) { return node->value(x); }, p.sphere_function, dirs,
                                p.modulus_of_continuity, p.envelope, "radial profile");
  return CoefficientProfile(std::move(node));
}

inline CoefficientProfile make_cone(ConePayload p, int n) {
  const int l = p.dimension;
  if (l < 1 || l > max_dimension) throw dimension_mismatch("cone profile dimension out of range");
  if (p.caps.empty() || p.caps.size() != p.cap_functions.size())
    throw certificate_error("cone payload needs one sphere function per cap");
  if (!p.remainder || !p.envelope) throw certificate_error("cone payload incomplete");
  for (auto& c : p.caps) {
    if (c.center.size() != l) throw dimension_mismatch("cap center of wrong dimension");
    c.center.normalize();
  }
  // Closed caps are disjoint iff the center angle exceeds the sum of radii.
  for (std::size_t i = 0; i < p.caps.size(); ++i)
    for (std::size_t j = i + 1; j < p.caps.size(); ++j)
      if (angle_between(p.caps[i].center, p.caps[j].center) <= p.caps[i].angular_radius + p.caps[j].angular_radius)
        throw certificate_error("cone caps " + std::to_string(i) + " and " + std::to_string(j) + " overlap");

  auto node = std::make_shared<detail::ConeNode>();
  node->dim = l;
  node->fiber = n;
  node->family = Asymptotics::cone;
  node->caps = p.caps;
  node->p = p;
  // Rays well inside caps, and rays well outside every cap where f must decay.
  std::vector<Direction> dirs;
  const double margin = l == 1 ? 0.0 : 0.05;
  for (const auto& w : sphere_grid(l, l == 2 ? 72 : 1)) {
    bool inside = false, near = false;
    for (const auto& c : p.caps) {
      double a = angle_between(c.center, w);
      if (a <= c.angular_radius - margin) inside = true;
      if (std::abs(a - c.angular_radius) < margin) near = true;
    }
    if (inside || !near) dirs.push_back(w);
  }
  for (const auto& c : p.caps) dirs.push_back(c.center);
  detail::certify_sphere_limits([&](const Site& x) { return node->value(x); },
                                [&](const Direction& w) { return node->on_sphere(w); }, dirs, p.modulus_of_continuity,
                                p.envelope, "cone profile");
  return CoefficientProfile(std::move(node));
}

inline CoefficientProfile make_vanishing_oscillation(VanishingOscillationPayload p, int n) {
  const int l = p.dimension;
  if (l < 1 || l > max_dimension) throw dimension_mismatch("profile dimension out of range");
  if (!p.function || !p.envelope) throw certificate_error("vanishing-oscillation payload incomplete");
  if (p.asymptotic_range.empty()) throw certificate_error("asymptotic range sampler is empty");
  for (const auto& h : p.asymptotic_range) detail::check_shape(h, n, "asymptotic range point");
  const auto dirs = sphere_grid(l, l == 2 ? 16 : 0);
  for (double r : certificate_radii)
    for (const auto& w : dirs) {
      Site x = detail::ray_point(w, r);
      Matrix fx = p.function(x);
      for (int axis = 0; axis < l; ++axis) {
        double osc = op_norm(p.function(x + LatticeVector::unit(l, axis)) - fx);
        if (osc > p.envelope(r) + certificate_slack)
          throw certificate_error("oscillation does not vanish along a ray at " + x.str());
      }
      double best = std::numeric_limits<double>::infinity();
      for (const auto& h : p.asymptotic_range) best = std::min(best, op_norm(fx - h));
      if (r >= 50.0 && best > p.coverage_tolerance)
        throw certificate_error("asymptotic range sampler misses the value at " + x.str());
    }
  auto node = std::make_shared<detail::VanishingOscillationNode>();
  node->dim = l;
  node->fiber = n;
  node->family = Asymptotics::vanishing_oscillation;
  node->range_count = p.asymptotic_range.size();
  node->p = std::move(p);
  return CoefficientProfile(std::move(node));
}

inline double sampled_sup_norm(const CoefficientProfile& f) {
  double m = 0.0;
  for (const auto& x : probe_sites(f.dimension())) m = std::max(m, max_abs(f.evaluate(x)));
  return m;
}

}  // namespace ifk
