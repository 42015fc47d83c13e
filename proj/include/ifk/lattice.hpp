#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <compare>
#include <cstddef>
#include <cstdlib>
#include <initializer_list>
#include <optional>
#include <ostream>
#include <string>

#include "ifk/errors.hpp"

namespace ifk {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

inline constexpr int max_dimension = 3;

// Γ = ℤ^l with matrix fiber M_N(ℂ).
struct Lattice {
  int dimension = 1;
  int fiber_dim = 1;

  Lattice() = default;
  Lattice(int l, int n) : dimension(l), fiber_dim(n) {
    if (l < 1 || l > max_dimension)
      throw dimension_mismatch("lattice dimension must be in [1, 3], got " + std::to_string(l));
    if (n < 1) throw dimension_mismatch("fiber dimension must be positive");
  }

  friend bool operator==(const Lattice&, const Lattice&) = default;
};

// Element of ℤ^l for l <= 3. Used both for shifts g and lattice sites x.
class LatticeVector {
 public:
  LatticeVector() = default;
  explicit LatticeVector(int dim) : dim_(dim) {
    if (dim < 0 || dim > max_dimension) throw dimension_mismatch("lattice vector dimension out of range");
  }
  LatticeVector(std::initializer_list<int> components) : dim_(static_cast<int>(components.size())) {
    if (dim_ > max_dimension) throw dimension_mismatch("lattice vector dimension out of range");
    std::copy(components.begin(), components.end(), c_.begin());
  }

  static LatticeVector unit(int dim, int axis, int sign = 1) {
    LatticeVector v(dim);
    v[axis] = sign;
    return v;
  }

  int dim() const { return dim_; }
  int operator[](int i) const { return c_[static_cast<std::size_t>(i)]; }
  int& operator[](int i) { return c_[static_cast<std::size_t>(i)]; }

  LatticeVector operator+(const LatticeVector& o) const {
    check_same(o);
    LatticeVector r(dim_);
    for (int i = 0; i < dim_; ++i) r[i] = c_[i] + o[i];
    return r;
  }
  LatticeVector operator-(const LatticeVector& o) const {
    check_same(o);
    LatticeVector r(dim_);
    for (int i = 0; i < dim_; ++i) r[i] = c_[i] - o[i];
    return r;
  }
  LatticeVector operator-() const {
    LatticeVector r(dim_);
    for (int i = 0; i < dim_; ++i) r[i] = -c_[i];
    return r;
  }

  int max_norm() const {
    int m = 0;
    for (int i = 0; i < dim_; ++i) m = std::max(m, std::abs(c_[i]));
    return m;
  }
  double norm() const {
    double s = 0.0;
    for (int i = 0; i < dim_; ++i) s += double(c_[i]) * c_[i];
    return std::sqrt(s);
  }
  bool is_zero() const { return max_norm() == 0; }

  // Removes coordinate `axis` (face projections ℤ^l -> ℤ^{l-1}).
  LatticeVector drop(int axis) const {
    LatticeVector r(dim_ - 1);
    for (int i = 0, k = 0; i < dim_; ++i)
      if (i != axis) r[k++] = c_[i];
    return r;
  }
  // Inverse of drop: inserts `value` at coordinate `axis`.
  LatticeVector insert(int axis, int value) const {
    LatticeVector r(dim_ + 1);
    for (int i = 0, k = 0; i < dim_ + 1; ++i) r[i] = (i == axis) ? value : c_[k++];
    return r;
  }

  std::string str() const {
    std::string s = "(";
    for (int i = 0; i < dim_; ++i) s += (i ? "," : "") + std::to_string(c_[i]);
    return s + ")";
  }

  friend bool operator==(const LatticeVector&, const LatticeVector&) = default;
  friend auto operator<=>(const LatticeVector&, const LatticeVector&) = default;

 private:
  void check_same(const LatticeVector& o) const {
    if (o.dim_ != dim_) throw dimension_mismatch("lattice vectors of different dimension");
  }

  // Unused trailing components stay zero so defaulted comparisons are exact.
  std::array<int, max_dimension> c_{};
  int dim_ = 0;
};

using ShiftVector = LatticeVector;
using Site = LatticeVector;

inline std::ostream& operator<<(std::ostream& os, const LatticeVector& v) { return os << v.str(); }

enum class Boundary { dirichlet };

// The cube [-L, L]^l with zero padding outside. Sites are enumerated in
// lexicographic order with the last coordinate fastest, fiber index fastest of all.
class TruncationBox {
 public:
  TruncationBox(int dimension, int half_width, Boundary boundary = Boundary::dirichlet)
      : dim_(dimension), half_width_(half_width), boundary_(boundary) {
    if (dimension < 1 || dimension > max_dimension) throw dimension_mismatch("box dimension out of range");
    if (half_width < 1) throw dimension_mismatch("box half width must be positive");
    side_ = 2 * half_width + 1;
    sites_ = 1;
    for (int i = 0; i < dim_; ++i) sites_ *= side_;
  }

  int dimension() const { return dim_; }
  int half_width() const { return half_width_; }
  Boundary boundary() const { return boundary_; }
  std::size_t site_count() const { return sites_; }
  std::size_t vector_size(int fiber_dim) const { return sites_ * static_cast<std::size_t>(fiber_dim); }

  bool contains(const Site& x) const { return x.dim() == dim_ && x.max_norm() <= half_width_; }

  std::optional<std::size_t> index_of(const Site& x) const {
    if (!contains(x)) return std::nullopt;
    std::size_t idx = 0;
    for (int i = 0; i < dim_; ++i) idx = idx * side_ + static_cast<std::size_t>(x[i] + half_width_);
    return idx;
  }

  Site site_at(std::size_t index) const {
    Site x(dim_);
    for (int i = dim_ - 1; i >= 0; --i) {
      x[i] = static_cast<int>(index % side_) - half_width_;
      index /= side_;
    }
    return x;
  }

  // Number of sites between x and the outside of the box along the worst axis.
  int distance_to_boundary(const Site& x) const { return half_width_ - x.max_norm(); }

  friend bool operator==(const TruncationBox&, const TruncationBox&) = default;

 private:
  int dim_;
  int half_width_;
  Boundary boundary_;
  std::size_t side_ = 1;
  std::size_t sites_ = 1;
};

// Per-site block of a box vector.
inline auto site_block(Vector& v, std::size_t site, int n) { return v.segment(static_cast<Eigen::Index>(site) * n, n); }
inline auto site_block(const Vector& v, std::size_t site, int n) {
  return v.segment(static_cast<Eigen::Index>(site) * n, n);
}

// Spectral norm of a small matrix.
inline double op_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  if (m.rows() == 1 && m.cols() == 1) return std::abs(m(0, 0));
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

inline double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

}  // namespace ifk
