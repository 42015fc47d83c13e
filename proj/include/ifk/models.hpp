#pragma once

// Catalog of concrete interface models, one per asymptotics variant.

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ifk/index.hpp"

namespace ifk {

using ParamValue = std::variant<double, std::string>;
using ModelParams = std::map<std::string, ParamValue>;

struct ParamSpec {
  std::string key;
  ParamValue default_value;
  std::string help;
};

struct ModelDescriptor {
  std::string name;
  std::string summary;
  int dimension = 1;
  int fiber_dim = 1;
  Claims claims;
  bool chiral = false;
  std::vector<ParamSpec> params;
};

struct Model {
  ModelDescriptor descriptor;
  ModelParams params;  // defaults filled in
  InterfaceOperator op;
  std::optional<ChiralSymmetry> chiral;
};

namespace models {

inline Matrix sigma_x_mass(double m) {
  Matrix b = Matrix::Zero(2, 2);
  b(0, 1) = b(1, 0) = m;
  return b;
}

inline Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }

inline double wall(double left, double right, double width, double x) {
  return 0.5 * (left + right) + 0.5 * (right - left) * std::tanh(x / width);
}

// |wall(±R) − limit| ≤ |right − left|·e^{−2R/width}.
inline Envelope wall_envelope(double left, double right, double width) {
  return exponential_envelope(std::abs(right - left) * 1.0001, 2.0 / width);
}

inline Matrix coin(double theta) {
  Matrix c(2, 2);
  c << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
  return c;
}

inline InterfaceOperator hopping_laplacian(int dim, int n) {
  Lattice lat(dim, n);
  InterfaceOperator h = InterfaceOperator::zero(lat);
  for (int j = 0; j < dim; ++j) {
    ShiftVector e(dim);
    e[j] = 1;
    h = h + InterfaceOperator::shift(lat, e) + InterfaceOperator::shift(lat, -e);
  }
  return h;
}

// SSH: on-site σ_x·m(x), hopping B→A one cell to the right.
inline InterfaceOperator ssh_from_mass(const CoefficientProfile& mass) {
  Matrix up = Matrix::Zero(2, 2), down = Matrix::Zero(2, 2);
  up(1, 0) = 1.0;
  down(0, 1) = 1.0;
  const int d = mass.dimension();
  return InterfaceOperator(Lattice(d, 2),
                           {{ShiftVector(d), mass},
                            {ShiftVector{1}, CoefficientProfile::constant(d, up)},
                            {ShiftVector{-1}, CoefficientProfile::constant(d, down)}},
                           {true, false});
}

inline void require_gap(double m, const char* what) {
  if (std::abs(std::abs(m) - 1.0) < 1e-9)
    throw config_error(std::string(what) + " = ±1 closes the bulk gap at zero energy");
}

inline const std::vector<ModelDescriptor>& catalog() {
  static const std::vector<ModelDescriptor> list{
      {"ssh_wall", "SSH chain with a tanh mass wall from m_left to m_right", 1, 2, {true, false}, true,
       {{"m_left", 0.5, "intracell hopping at -inf"},
        {"m_right", 2.0, "intracell hopping at +inf"},
        {"width", 3.0, "wall width"},
        {"gap", 1.0, "nonzero: require both bulks gapped at 0"},
        {"asymptotics", std::string("domain_wall"), "domain_wall or cone (antipodal caps)"}}},
      {"ssh_bulk", "translation-invariant SSH chain", 1, 2, {true, false}, true,
       {{"m", 0.5, "intracell hopping"}, {"gap", 1.0, "nonzero: require a gap at 0"}}},
      {"split_step_walk_wall", "split-step quantum walk with coin angle walls", 1, 2, {false, true}, false,
       {{"theta1_left", 0.3, "first coin angle at -inf"},
        {"theta1_right", 1.2, "first coin angle at +inf"},
        {"theta2_left", 0.1, "second coin angle at -inf"},
        {"theta2_right", 0.2, "second coin angle at +inf"},
        {"width", 2.0, "wall width"}}},
      {"laplacian", "nearest-neighbour hopping on Z^l", 1, 1, {true, false}, false,
       {{"dimension", 1.0, "lattice dimension l in 1..3"}}},
      {"cartesian_2d_wall", "2D hopping plus potential v tanh(x1/w) tanh(x2/w)", 2, 1, {true, false}, false,
       {{"v", 1.5, "potential amplitude"}, {"width", 3.0, "wall width"}}},
      {"radial_2d", "2D hopping plus angular potential v cos(angle)", 2, 1, {true, false}, false,
       {{"v", 1.0, "potential amplitude"}}},
      {"cone_2d", "2D chiral model with mass caps", 2, 2, {true, false}, true,
       {{"m0", 3.0, "background mass"},
        {"mass_a", 1.0, "extra mass in cap a"},
        {"mass_b", 2.0, "extra mass in cap b"},
        {"angle_a", 0.0, "centre angle of cap a"},
        {"angle_b", std::numbers::pi, "centre angle of cap b"},
        {"cap_radius", std::numbers::pi / 4, "angular radius of both caps"}}},
      {"vo_1d", "1D hopping plus potential v sin(sqrt|x|)", 1, 1, {true, false}, false,
       {{"v", 1.0, "potential amplitude"}, {"samples", 41.0, "asymptotic range samples"}}},
  };
  return list;
}

inline const ModelDescriptor& descriptor(const std::string& name) {
  for (const auto& d : catalog())
    if (d.name == name) return d;
  std::string known;
  for (const auto& d : catalog()) known += (known.empty() ? "" : ", ") + d.name;
  throw config_error("unknown model '" + name + "' (known: " + known + ")");
}

// Fills defaults and rejects unknown keys or mistyped values.
inline ModelParams resolve(const ModelDescriptor& d, const ModelParams& given) {
  ModelParams out;
  for (const auto& p : d.params) out[p.key] = p.default_value;
  for (const auto& [k, v] : given) {
    auto it = out.find(k);
    if (it == out.end()) throw config_error("model '" + d.name + "' has no parameter '" + k + "'");
    if (it->second.index() != v.index())
      throw config_error("parameter '" + k + "' of model '" + d.name + "' must be a " +
                         (std::holds_alternative<double>(it->second) ? "number" : "string"));
    it->second = v;
  }
  return out;
}

inline double num(const ModelParams& p, const std::string& k) { return std::get<double>(p.at(k)); }
inline const std::string& text(const ModelParams& p, const std::string& k) { return std::get<std::string>(p.at(k)); }

inline void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw config_error(std::string(what) + " must be positive");
}

inline InterfaceOperator ssh_wall(const ModelParams& p) {
  const double ml = num(p, "m_left"), mr = num(p, "m_right"), w = num(p, "width");
  require_positive(w, "width");
  if (num(p, "gap") != 0.0) {
    require_gap(ml, "m_left");
    require_gap(mr, "m_right");
  }
  const std::string& kind = text(p, "asymptotics");
  if (kind == "domain_wall") {
    DomainWallPayload d{sigma_x_mass(ml), sigma_x_mass(mr),
                        [=](const Site& x) { return sigma_x_mass(wall(ml, mr, w, x[0])); }, wall_envelope(ml, mr, w)};
    return ssh_from_mass(make_domain_wall(d, 2));
  }
  if (kind == "cone") {
    // Antipodal caps {−1} and {+1} of S^0; the remainder carries the finite wall.
    ConePayload c;
    c.dimension = 1;
    c.caps = {Cap{Direction::Constant(1, -1.0), 0.5}, Cap{Direction::Constant(1, 1.0), 0.5}};
    c.cap_functions = {[=](const Direction&) { return sigma_x_mass(ml); },
                       [=](const Direction&) { return sigma_x_mass(mr); }};
    c.remainder = [=](const Site& x) {
      const Matrix m = sigma_x_mass(wall(ml, mr, w, x[0]));
      if (x[0] == 0) return m;
      return Matrix(m - sigma_x_mass(x[0] < 0 ? ml : mr));
    };
    c.envelope = wall_envelope(ml, mr, w);
    return ssh_from_mass(make_cone(c, 2));
  }
  throw config_error("ssh_wall asymptotics must be 'domain_wall' or 'cone', got '" + kind + "'");
}

inline InterfaceOperator ssh_bulk(const ModelParams& p) {
  const double m = num(p, "m");
  if (num(p, "gap") != 0.0) require_gap(m, "m");
  return ssh_from_mass(CoefficientProfile::constant(1, sigma_x_mass(m)));
}

// U = S_↓ C(θ₂) S_↑ C(θ₁): S_↑ moves the upper component right, S_↓ the lower one left.
inline InterfaceOperator split_step_walk_wall(const ModelParams& p) {
  const double a0 = num(p, "theta1_left"), a1 = num(p, "theta1_right");
  const double b0 = num(p, "theta2_left"), b1 = num(p, "theta2_right"), w = num(p, "width");
  require_positive(w, "width");
  Lattice lat(1, 2);
  auto coin_wall = [&](double l, double r) {
    // Entries of C(θ) are 1-Lipschitz in θ.
    DomainWallPayload d{coin(l), coin(r), [=](const Site& x) { return coin(wall(l, r, w, x[0])); },
                        exponential_envelope(2.0 * std::abs(r - l) * 1.0001, 2.0 / w)};
    return InterfaceOperator::multiplication(lat, make_domain_wall(d, 2));
  };
  Matrix up = Matrix::Zero(2, 2), down = Matrix::Zero(2, 2);
  up(0, 0) = 1.0;
  down(1, 1) = 1.0;
  InterfaceOperator s_up(lat, {{ShiftVector{1}, CoefficientProfile::constant(1, up)},
                               {ShiftVector{0}, CoefficientProfile::constant(1, down)}});
  InterfaceOperator s_down(lat, {{ShiftVector{-1}, CoefficientProfile::constant(1, down)},
                                 {ShiftVector{0}, CoefficientProfile::constant(1, up)}});
  return (s_down * coin_wall(b0, b1) * s_up * coin_wall(a0, a1)).with_claims({false, true});
}

inline InterfaceOperator laplacian(const ModelParams& p) {
  const double l = num(p, "dimension");
  if (l != std::round(l) || l < 1 || l > max_dimension) throw config_error("laplacian dimension must be 1, 2 or 3");
  return hopping_laplacian(static_cast<int>(l), 1).with_claims({true, false});
}

inline InterfaceOperator cartesian_2d_wall(const ModelParams& p) {
  const double v = num(p, "v"), w = num(p, "width");
  require_positive(w, "width");
  CartesianPayload c;
  c.dimension = 2;
  c.bulk_function = [=](const Site& x) { return scalar(v * std::tanh(x[0] / w) * std::tanh(x[1] / w)); };
  // |v tanh(y/w)(1 − tanh(R/w))| ≤ 2|v| e^{−2R/w}.
  c.envelope = exponential_envelope(2.0001 * std::abs(v), 2.0 / w);
  for (int axis = 0; axis < 2; ++axis)
    for (int s : {-1, 1}) {
      DomainWallPayload d{scalar(-s * v), scalar(s * v), [=](const Site& y) { return scalar(s * v * std::tanh(y[0] / w)); },
                          wall_envelope(-s * v, s * v, w)};
      c.face_limits.push_back(make_domain_wall(d, 1));
    }
  return (hopping_laplacian(2, 1) + InterfaceOperator::multiplication(Lattice(2, 1), make_cartesian(c, 1)))
      .with_claims({true, false});
}

inline InterfaceOperator radial_2d(const ModelParams& p) {
  const double v = num(p, "v");
  RadialPayload r{2, [=](const Direction& w) { return scalar(v * w(0)); }, std::abs(v),
                  [](const Site&) { return Matrix::Zero(1, 1); }, [](double) { return 0.0; }};
  return (hopping_laplacian(2, 1) + InterfaceOperator::multiplication(Lattice(2, 1), make_radial(r, 1)))
      .with_claims({true, false});
}

// H = [[0, D*], [D, 0]], D = m(x) + S_{e1} + S_{e2}; gapped whenever |m| > 2.
inline InterfaceOperator cone_2d(const ModelParams& p) {
  const double m0 = num(p, "m0"), ma = num(p, "mass_a"), mb = num(p, "mass_b"), rad = num(p, "cap_radius");
  require_positive(rad, "cap_radius");
  auto dir = [](double phi) {
    Direction d(2);
    d << std::cos(phi), std::sin(phi);
    return d;
  };
  ConePayload c;
  c.dimension = 2;
  c.caps = {Cap{dir(num(p, "angle_a")), rad}, Cap{dir(num(p, "angle_b")), rad}};
  c.cap_functions = {[=](const Direction&) { return sigma_x_mass(ma); }, [=](const Direction&) { return sigma_x_mass(mb); }};
  c.remainder = [](const Site&) { return Matrix::Zero(2, 2); };
  c.envelope = [](double) { return 0.0; };
  const CoefficientProfile mass = make_cone(c, 2) + CoefficientProfile::constant(2, sigma_x_mass(m0));
  for (double m : {m0, m0 + ma, m0 + mb})
    if (std::abs(m) <= 2.0) throw config_error("cone_2d masses must exceed 2 in modulus to keep the bulk gap");
  Matrix lower = Matrix::Zero(2, 2), upper = Matrix::Zero(2, 2);
  lower(1, 0) = 1.0;
  upper(0, 1) = 1.0;
  return InterfaceOperator(Lattice(2, 2),
                           {{ShiftVector{0, 0}, mass},
                            {ShiftVector{1, 0}, CoefficientProfile::constant(2, lower)},
                            {ShiftVector{0, 1}, CoefficientProfile::constant(2, lower)},
                            {ShiftVector{-1, 0}, CoefficientProfile::constant(2, upper)},
                            {ShiftVector{0, -1}, CoefficientProfile::constant(2, upper)}},
                           {true, false});
}

inline InterfaceOperator vo_1d(const ModelParams& p) {
  const double v = num(p, "v"), k = num(p, "samples");
  if (k != std::round(k) || k < 2) throw config_error("vo_1d samples must be an integer >= 2");
  const int count = static_cast<int>(k);
  // |v sin√(x+1) − v sin√x| ≤ |v|/(2√x).
  VanishingOscillationPayload o{1, [=](const Site& x) { return scalar(v * std::sin(std::sqrt(std::abs(x[0])))); }, {},
                                std::abs(v) / (count - 1) * 1.01, power_envelope(0.6 * std::abs(v), 0.5)};
  for (int i = 0; i < count; ++i) o.asymptotic_range.push_back(scalar(v * (-1.0 + 2.0 * i / (count - 1))));
  return (hopping_laplacian(1, 1) + InterfaceOperator::multiplication(Lattice(1, 1), make_vanishing_oscillation(o, 1)))
      .with_claims({true, false});
}

}  // namespace models

inline const std::vector<ModelDescriptor>& model_catalog() { return models::catalog(); }

// Constructs a catalog model and verifies its claimed flags.
inline Model build_model(const std::string& name, const ModelParams& given = {}) {
  const ModelDescriptor& d = models::descriptor(name);
  Model m{d, models::resolve(d, given), InterfaceOperator::zero(Lattice(d.dimension, d.fiber_dim)), std::nullopt};
  if (name == "ssh_wall") m.op = models::ssh_wall(m.params);
  else if (name == "ssh_bulk") m.op = models::ssh_bulk(m.params);
  else if (name == "split_step_walk_wall") m.op = models::split_step_walk_wall(m.params);
  else if (name == "laplacian") m.op = models::laplacian(m.params);
  else if (name == "cartesian_2d_wall") m.op = models::cartesian_2d_wall(m.params);
  else if (name == "radial_2d") m.op = models::radial_2d(m.params);
  else if (name == "cone_2d") m.op = models::cone_2d(m.params);
  else if (name == "vo_1d") m.op = models::vo_1d(m.params);
  m.descriptor.dimension = m.op.dimension();
  verify_claims(m.op);
  if (d.chiral) {
    m.chiral = ChiralSymmetry::sublattice(1, 1);
    m.chiral->require_chiral(m.op);
  }
  return m;
}

}  // namespace ifk
