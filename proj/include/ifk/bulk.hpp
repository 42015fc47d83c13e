#pragma once

// Bulk systems at infinity: the images q_j(T) of an interface operator under
// the quotient maps onto its quasi-orbits.

#include <numbers>
#include <optional>
#include <string>
#include <variant>

#include "ifk/operator.hpp"

namespace ifk {

// Constant-coefficient operator Σ_g S_g b_g.
struct TranslationInvariantSystem {
  Lattice lattice;
  std::map<ShiftVector, Matrix> symbol;

  InterfaceOperator as_operator() const {
    std::vector<std::pair<ShiftVector, CoefficientProfile>> t;
    for (const auto& [g, b] : symbol) t.emplace_back(g, CoefficientProfile::constant(lattice.dimension, b));
    return InterfaceOperator(lattice, t);
  }
};

// θ -> T_{j±}(θ): the (l-1)-dimensional face operator with the j-th shift
// component s turned into the phase e^{isθ}.
class FaceFiberedSystem {
 public:
  FaceFiberedSystem(Lattice parent, int axis, Side side, std::vector<std::pair<ShiftVector, CoefficientProfile>> faces,
                    bool hermitian)
      : parent_(parent), axis_(axis), side_(side), faces_(std::move(faces)), hermitian_(hermitian) {}

  int axis() const { return axis_; }
  Side side() const { return side_; }
  const Lattice& parent_lattice() const { return parent_; }
  Lattice fiber_lattice() const { return Lattice(parent_.dimension - 1, parent_.fiber_dim); }
  bool hermitian() const { return hermitian_; }

  // Bound on the variation of T_{j±}(θ) per unit θ: Σ_g |g_j| sup|f_g,face|.
  double theta_lipschitz() const {
    double l = 0.0;
    for (const auto& [g, f] : faces_) l += std::abs(g[axis_]) * sampled_sup_norm(f);
    return l;
  }

  InterfaceOperator at(double theta) const {
    std::vector<std::pair<ShiftVector, CoefficientProfile>> t;
    for (const auto& [g, f] : faces_) {
      const int s = g[axis_];
      t.emplace_back(g.drop(axis_), s == 0 ? f : scale(f, std::polar(1.0, s * theta)));
    }
    return InterfaceOperator(fiber_lattice(), t, {hermitian_, false});
  }

 private:
  Lattice parent_;
  int axis_;
  Side side_;
  std::vector<std::pair<ShiftVector, CoefficientProfile>> faces_;
  bool hermitian_;
};

struct BulkSystem {
  std::string label;
  std::variant<TranslationInvariantSystem, FaceFiberedSystem> system;
  bool zero_limit = false;  // direction outside every cone cap
  std::optional<Direction> direction;  // radial/cone quasi-orbits
  std::optional<Side> side;             // domain-wall quasi-orbits

  bool translation_invariant() const { return std::holds_alternative<TranslationInvariantSystem>(system); }
  const TranslationInvariantSystem& invariant() const { return std::get<TranslationInvariantSystem>(system); }
  const FaceFiberedSystem& fibered() const { return std::get<FaceFiberedSystem>(system); }
};

struct QuasiOrbitOptions {
  int sphere_points = 360;    // l = 2
  int icosahedral_level = 2;  // l = 3
};

// Family shared by all profiles of T (Constant/Compact absorbed).
inline Asymptotics operator_family(const InterfaceOperator& t) {
  if (t.empty()) throw inconsistent_asymptotics("operator has no terms");
  std::optional<CoefficientProfile> acc;
  for (const auto& [g, f] : t.terms()) acc = acc ? *acc + f : f;
  return acc->variant();
}

namespace detail {

inline TranslationInvariantSystem symbol_at(const InterfaceOperator& t, const LimitPoint& p) {
  TranslationInvariantSystem s{t.lattice(), {}};
  for (const auto& [g, f] : t.terms()) {
    if (f.variant() == Asymptotics::compactly_supported) continue;
    Matrix b = f.limit(p);
    if (max_abs(b) == 0.0) continue;
    s.symbol.emplace(g, std::move(b));
  }
  return s;
}

inline std::string direction_label(const Direction& w) {
  if (w.size() == 1) return w(0) < 0 ? "dir(-1)" : "dir(+1)";
  if (w.size() == 2) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "dir(%.6f)", std::atan2(w(1), w(0)));
    return buf;
  }
  char buf[96];
  std::snprintf(buf, sizeof buf, "dir(%.6f,%.6f,%.6f)", w(0), w(1), w(2));
  return buf;
}

inline const std::vector<Cap>& operator_caps(const InterfaceOperator& t) {
  static const std::vector<Cap> none;
  for (const auto& [g, f] : t.terms())
    if (!f.caps().empty()) return f.caps();
  return none;
}

inline std::size_t operator_range_size(const InterfaceOperator& t) {
  std::size_t k = 0;
  for (const auto& [g, f] : t.terms()) {
    if (f.range_size() && k && f.range_size() != k)
      throw inconsistent_asymptotics("asymptotic range sizes differ between terms");
    k = std::max(k, f.range_size());
  }
  return k;
}

}  // namespace detail

inline BulkSystem directional_limit(const InterfaceOperator& t, const Direction& omega) {
  const Asymptotics fam = operator_family(t);
  if (fam != Asymptotics::radial && fam != Asymptotics::cone && fam != Asymptotics::constant &&
      fam != Asymptotics::compactly_supported)
    throw inconsistent_asymptotics("directional limits need radial or cone profiles");
  if (omega.size() != t.dimension()) throw dimension_mismatch("direction of wrong dimension");
  Direction w = omega.normalized();
  BulkSystem b{detail::direction_label(w), detail::symbol_at(t, LimitPoint::sphere(w)), false, w, std::nullopt};
  if (fam == Asymptotics::cone) {
    bool inside = false;
    for (const auto& c : detail::operator_caps(t)) inside = inside || c.contains(w);
    b.zero_limit = !inside;
  }
  return b;
}

inline BulkSystem face_limit(const InterfaceOperator& t, int axis, Side side) {
  if (axis < 0 || axis >= t.dimension()) throw dimension_mismatch("face axis out of range");
  if (t.dimension() < 2) throw dimension_mismatch("face limits need dimension >= 2");
  const Asymptotics fam = operator_family(t);
  if (fam != Asymptotics::cartesian && fam != Asymptotics::constant && fam != Asymptotics::compactly_supported)
    throw inconsistent_asymptotics("face limits need Cartesian profiles");
  std::vector<std::pair<ShiftVector, CoefficientProfile>> faces;
  for (const auto& [g, f] : t.terms())
    if (f.variant() != Asymptotics::compactly_supported) faces.emplace_back(g, f.face(axis, side));
  std::string label = "face(" + std::to_string(axis + 1) + std::string(to_string(side)) + ")";
  return BulkSystem{label, FaceFiberedSystem(t.lattice(), axis, side, std::move(faces), is_hermitian(t)), false,
                    std::nullopt, std::nullopt};
}

// Representatives of a covering of the boundary at infinity by quasi-orbits.
inline std::vector<BulkSystem> quasi_orbits(const InterfaceOperator& t, const QuasiOrbitOptions& opts = {}) {
  const Asymptotics fam = operator_family(t);
  const int l = t.dimension();
  std::vector<BulkSystem> out;
  switch (fam) {
    case Asymptotics::compactly_supported:
      out.push_back({"zero", TranslationInvariantSystem{t.lattice(), {}}, true, std::nullopt, std::nullopt});
      break;
    case Asymptotics::constant:
      out.push_back({"bulk", detail::symbol_at(t, LimitPoint::wall(Side::plus)), false, std::nullopt, std::nullopt});
      break;
    case Asymptotics::domain_wall:
      out.push_back({"-inf", detail::symbol_at(t, LimitPoint::wall(Side::minus)), false, std::nullopt, Side::minus});
      out.push_back({"+inf", detail::symbol_at(t, LimitPoint::wall(Side::plus)), false, std::nullopt, Side::plus});
      break;
    case Asymptotics::radial:
      for (const auto& w : sphere_grid(l, l == 2 ? opts.sphere_points : opts.icosahedral_level))
        out.push_back(directional_limit(t, w));
      break;
    case Asymptotics::cone: {
      const auto& caps = detail::operator_caps(t);
      const auto grid = sphere_grid(l, l == 2 ? opts.sphere_points : opts.icosahedral_level);
      for (std::size_t j = 0; j < caps.size(); ++j) {
        std::vector<Direction> dirs{caps[j].center};
        for (const auto& w : grid)
          if (caps[j].contains(w) && angle_between(w, caps[j].center) > 1e-12) dirs.push_back(w);
        for (const auto& w : dirs) {
          BulkSystem b = directional_limit(t, w);
          b.label = "cap" + std::to_string(j) + ":" + b.label;
          out.push_back(std::move(b));
        }
      }
      // One representative for the complement of the caps, if it is non-empty.
      for (const auto& w : grid) {
        bool inside = false;
        for (const auto& c : caps) inside = inside || c.contains(w);
        if (!inside) {
          BulkSystem b = directional_limit(t, w);
          b.label = "outside-caps";
          out.push_back(std::move(b));
          break;
        }
      }
      break;
    }
    case Asymptotics::cartesian:
      for (int axis = 0; axis < l; ++axis)
        for (Side s : {Side::minus, Side::plus}) out.push_back(face_limit(t, axis, s));
      break;
    case Asymptotics::vanishing_oscillation: {
      const std::size_t k = detail::operator_range_size(t);
      for (std::size_t i = 0; i < k; ++i)
        out.push_back({"range[" + std::to_string(i) + "]", detail::symbol_at(t, LimitPoint::range(i)), false,
                       std::nullopt, std::nullopt});
      break;
    }
  }
  return out;
}

}  // namespace ifk
