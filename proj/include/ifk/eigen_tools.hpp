#pragma once

// Dense eigensolvers and localization diagnostics on truncation boxes.

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <numeric>
#include <vector>

#include "ifk/operator.hpp"
#include "ifk/spectrum_set.hpp"

namespace ifk {

// Largest matrix handed to the dense eigensolver.
inline constexpr std::size_t dense_size_cap = 8000;

struct DenseEigen {
  Vector values;   // sorted by real part, then imaginary part
  Matrix vectors;  // columns, empty unless requested
  bool hermitian = false;
};

inline DenseEigen dense_eigensolve(const Matrix& a, bool hermitian, bool want_vectors) {
  if (static_cast<std::size_t>(a.rows()) > dense_size_cap)
    throw size_cap_exceeded("dense eigensolve of size " + std::to_string(a.rows()) + " exceeds cap " +
                            std::to_string(dense_size_cap));
  DenseEigen out;
  out.hermitian = hermitian;
  if (a.rows() == 0) return out;
  if (hermitian) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(a, want_vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw solver_error("hermitian eigensolver did not converge");
    out.values = es.eigenvalues().cast<cplx>();
    if (want_vectors) out.vectors = es.eigenvectors();
    return out;
  }
  Eigen::ComplexEigenSolver<Matrix> es(a, want_vectors);
  if (es.info() != Eigen::Success) throw solver_error("eigensolver did not converge");
  std::vector<Eigen::Index> order(static_cast<std::size_t>(a.rows()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const auto& ev = es.eigenvalues();
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index i, Eigen::Index j) {
    return ev(i).real() < ev(j).real() || (ev(i).real() == ev(j).real() && ev(i).imag() < ev(j).imag());
  });
  out.values.resize(a.rows());
  if (want_vectors) out.vectors.resize(a.rows(), a.rows());
  for (Eigen::Index k = 0; k < a.rows(); ++k) {
    out.values(k) = ev(order[static_cast<std::size_t>(k)]);
    if (want_vectors) out.vectors.col(k) = es.eigenvectors().col(order[static_cast<std::size_t>(k)]).normalized();
  }
  return out;
}

// Diagonal of the projection onto sites within `layer` of the box edge.
inline Eigen::VectorXd boundary_indicator(const TruncationBox& box, int n, int layer) {
  Eigen::VectorXd d = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(box.vector_size(n)));
  for (std::size_t s = 0; s < box.site_count(); ++s)
    if (box.distance_to_boundary(box.site_at(s)) < layer) d.segment(static_cast<Eigen::Index>(s) * n, n).setOnes();
  return d;
}

inline double mass_fraction(const Vector& v, const Eigen::VectorXd& indicator) {
  double total = v.squaredNorm();
  if (total == 0.0) return 0.0;
  return (v.cwiseAbs2().cwiseProduct(indicator)).sum() / total;
}

// Rotates an orthonormal set of columns to diagonalize the compression of a
// diagonal projector; returns columns ordered by increasing mass.
inline std::pair<Matrix, Eigen::VectorXd> diagonalize_mass(const Matrix& cols, const Eigen::VectorXd& indicator) {
  if (cols.cols() == 0) return {cols, Eigen::VectorXd()};
  Matrix c = cols.adjoint() * indicator.cast<cplx>().asDiagonal() * cols;
  c = 0.5 * (c + c.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> es(c);
  return {cols * es.eigenvectors(), es.eigenvalues()};
}

// Gershgorin enclosure [lo, hi] of the real spectrum of a hermitian matrix.
inline Interval gershgorin(const SparseMatrix& m) {
  double lo = 0.0, hi = 0.0;
  bool first = true;
  for (Eigen::Index r = 0; r < m.outerSize(); ++r) {
    double centre = 0.0, radius = 0.0;
    for (SparseMatrix::InnerIterator it(m, r); it; ++it) {
      if (it.col() == r)
        centre = it.value().real();
      else
        radius += std::abs(it.value());
    }
    if (first) {
      lo = centre - radius;
      hi = centre + radius;
      first = false;
    } else {
      lo = std::min(lo, centre - radius);
      hi = std::max(hi, centre + radius);
    }
  }
  return {lo, hi};
}

}  // namespace ifk
