#pragma once

// Finite-volume eigenanalysis: truncation spectra, in-gap interface states and
// convergence of truncation spectra towards the essential spectrum.

#include <functional>

#include "ifk/spectra.hpp"

namespace ifk {

// States with at least this fraction of their mass in the boundary layer are
// Dirichlet artifacts, not interface states.
inline constexpr double artifact_mass = 0.9;

inline int boundary_layer(const InterfaceOperator& t) { return 5 * std::max(1, t.shift_radius()); }

// Distance of a site to the interface locus (wall point, cone apex, ...).
using Locus = std::function<double(const Site&)>;

inline Locus origin_locus() {
  return [](const Site& x) { return x.norm(); };
}

struct Localization {
  double decay_rate = 0.0;           // fitted κ in |ψ(x)| ~ e^{-κ d(x)}
  double participation_ratio = 0.0;  // 1 / Σ p_x², p_x the site mass
  double boundary_mass = 0.0;
  double interface_distance = 0.0;   // mass-weighted mean distance to the locus
  bool boundary_artifact = false;
};

struct EigenReport {
  std::vector<cplx> eigenvalues;
  std::optional<Matrix> eigenvectors;
  std::vector<Localization> localization;
  TruncationBox box{1, 1};
  bool hermitian = false;
  bool window_warning = false;
  std::size_t filtered_boundary_states = 0;
};

inline Localization localize(const Vector& v, const TruncationBox& box, int n, int layer, const Locus& locus) {
  Localization loc;
  const double total = v.squaredNorm();
  if (total == 0.0) return loc;
  std::map<long, double> shells;
  double pr = 0.0, edge = 0.0, mean = 0.0;
  for (std::size_t s = 0; s < box.site_count(); ++s) {
    const double p = site_block(v, s, n).squaredNorm() / total;
    if (p == 0.0) continue;
    const Site x = box.site_at(s);
    const double d = locus(x);
    pr += p * p;
    mean += p * d;
    if (box.distance_to_boundary(x) < layer) edge += p;
    else shells[std::lround(d)] += p;
  }
  loc.participation_ratio = pr > 0 ? 1.0 / pr : 0.0;
  loc.boundary_mass = edge;
  loc.interface_distance = mean;
  loc.boundary_artifact = edge >= artifact_mass;
  // Least-squares slope of log shell mass beyond the peak shell.
  long peak = 0;
  double best = -1.0;
  for (const auto& [r, m] : shells)
    if (m > best) best = m, peak = r;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int k = 0;
  for (const auto& [r, m] : shells) {
    if (r < peak || m < 1e-28) continue;
    const double y = std::log(m);
    sx += r, sy += y, sxx += double(r) * r, sxy += r * y;
    ++k;
  }
  if (k >= 3) {
    const double slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
    loc.decay_rate = -0.5 * slope;
  }
  return loc;
}

inline EigenReport spectrum_truncated(const InterfaceOperator& t, const TruncationBox& box, bool want_vectors,
                                      const Locus& locus = origin_locus()) {
  require_box(t, box);
  EigenReport r;
  r.box = box;
  r.hermitian = is_hermitian(t);
  if (t.claims().hermitian && !r.hermitian) throw certificate_error("operator claimed hermitian but is not");
  DenseEigen e = dense_eigensolve(assemble_dense(t, box, dense_size_cap), r.hermitian, want_vectors);
  r.eigenvalues.assign(e.values.data(), e.values.data() + e.values.size());
  if (want_vectors) {
    const int n = t.fiber_dim();
    const int layer = boundary_layer(t);
    r.localization.reserve(r.eigenvalues.size());
    for (Eigen::Index k = 0; k < e.vectors.cols(); ++k)
      r.localization.push_back(localize(e.vectors.col(k), box, n, layer, locus));
    r.eigenvectors = std::move(e.vectors);
  }
  return r;
}

struct InGapOptions {
  SpectralOptions spectral;
  Locus locus = origin_locus();
  double cluster_tolerance = 1e-8;  // eigenvalues closer than this are treated as degenerate
  bool keep_artifacts = false;
};

// Orthonormal window vectors rotated so that near-degenerate clusters
// separate into boundary and interior states.
inline std::pair<std::vector<cplx>, Matrix> separate_boundary_states(const std::vector<cplx>& values, const Matrix& vecs,
                                                                     const Matrix& op, const Eigen::VectorXd& edge,
                                                                     double cluster_tol) {
  Matrix out(vecs.rows(), vecs.cols());
  std::vector<cplx> vals(values.size());
  Eigen::Index start = 0;
  while (start < vecs.cols()) {
    Eigen::Index end = start + 1;
    while (end < vecs.cols() && std::abs(values[static_cast<std::size_t>(end)] - values[static_cast<std::size_t>(end - 1)]) <=
                                    cluster_tol * std::max(1.0, std::abs(values[static_cast<std::size_t>(end)])))
      ++end;
    auto [rot, masses] = diagonalize_mass(vecs.middleCols(start, end - start), edge);
    out.middleCols(start, end - start) = rot;
    for (Eigen::Index k = start; k < end; ++k) {
      const Vector v = out.col(k);
      vals[static_cast<std::size_t>(k)] = v.dot(op * v);
    }
    start = end;
  }
  return {vals, out};
}

inline EigenReport in_gap_states(const InterfaceOperator& t, const TruncationBox& box, Interval window,
                                 const InGapOptions& opts = {}) {
  EigenReport full = spectrum_truncated(t, box, true, opts.locus);
  SpectrumSet ess = essential_spectrum(t, opts.spectral);
  EigenReport r;
  r.box = box;
  r.hermitian = full.hermitian;
  for (const auto& iv : ess.hull())
    if (iv.lower < window.upper && iv.upper > window.lower) r.window_warning = true;

  std::vector<cplx> vals;
  std::vector<Eigen::Index> cols;
  for (std::size_t k = 0; k < full.eigenvalues.size(); ++k) {
    const double x = full.eigenvalues[k].real();
    if (x > window.lower && x < window.upper) {
      vals.push_back(full.eigenvalues[k]);
      cols.push_back(static_cast<Eigen::Index>(k));
    }
  }
  Matrix sel(full.eigenvectors->rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) sel.col(static_cast<Eigen::Index>(k)) = full.eigenvectors->col(cols[k]);

  const int n = t.fiber_dim();
  const int layer = boundary_layer(t);
  const auto edge = boundary_indicator(box, n, layer);
  Matrix vecs = sel;
  if (r.hermitian && sel.cols() > 1) {
    auto sep = separate_boundary_states(vals, sel, assemble_dense(t, box), edge, opts.cluster_tolerance);
    vals = std::move(sep.first);
    vecs = std::move(sep.second);
  }
  std::vector<Eigen::Index> keep;
  for (Eigen::Index k = 0; k < vecs.cols(); ++k) {
    Localization loc = localize(vecs.col(k), box, n, layer, opts.locus);
    if (loc.boundary_artifact && !opts.keep_artifacts) {
      ++r.filtered_boundary_states;
      continue;
    }
    keep.push_back(k);
    r.eigenvalues.push_back(vals[static_cast<std::size_t>(k)]);
    r.localization.push_back(loc);
  }
  Matrix kept(vecs.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) kept.col(static_cast<Eigen::Index>(k)) = vecs.col(keep[k]);
  r.eigenvectors = std::move(kept);
  return r;
}

struct ConvergenceRow {
  int half_width = 0;
  double distance = 0.0;  // Hausdorff distance to σ_ess ∪ in-gap set
  std::size_t in_gap = 0;
  std::size_t artifacts = 0;
};

struct ConvergenceReport {
  std::vector<ConvergenceRow> rows;
  SpectrumSet essential;
  std::vector<double> in_gap_set;  // interface eigenvalues off σ_ess at the largest box
  bool monotone = true;
  bool converged = true;
};

// For real-line spectra: truncated eigenvalues off the essential hull are
// either interface states (kept as part of the target set) or box artifacts
// (dropped); the Hausdorff distance is then taken between the remaining
// eigenvalues and σ_ess ∪ interface states.
inline ConvergenceReport convergence_study(const InterfaceOperator& t, const std::vector<int>& sizes,
                                           const SpectralOptions& spectral = {}, const Locus& locus = origin_locus()) {
  if (sizes.size() < 3) throw config_error("convergence study needs at least 3 box sizes");
  ConvergenceReport rep;
  rep.essential = essential_spectrum(t, spectral);
  if (rep.essential.kind() != SpectrumKind::real_line)
    throw hypothesis_violation("convergence study implemented for self-adjoint operators");
  const double tol = std::max(rep.essential.resolution(), 1e-9);
  std::vector<ConvergenceRow> rows(sizes.size());
  std::vector<std::vector<double>> gap_sets(sizes.size());
  parallel_for(sizes.size(), [&](std::size_t i) {
    TruncationBox box(t.dimension(), sizes[i]);
    EigenReport e = spectrum_truncated(t, box, true, locus);
    std::vector<double> kept;
    std::vector<Interval> target = rep.essential.hull();
    ConvergenceRow row{sizes[i], 0.0, 0, 0};
    for (std::size_t k = 0; k < e.eigenvalues.size(); ++k) {
      const double x = e.eigenvalues[k].real();
      if (rep.essential.distance(x) <= tol) {
        kept.push_back(x);
        continue;
      }
      if (e.localization[k].boundary_artifact) {
        ++row.artifacts;
        continue;
      }
      ++row.in_gap;
      kept.push_back(x);
      target.push_back({x, x});
      gap_sets[i].push_back(x);
    }
    row.distance = hausdorff_points(kept, detail::merge_intervals(target, 0.0));
    rows[i] = row;
  });
  rep.rows = std::move(rows);
  rep.in_gap_set = gap_sets.back();
  for (std::size_t i = 1; i < rep.rows.size(); ++i)
    if (rep.rows[i].distance > rep.rows[i - 1].distance + 1e-9) rep.monotone = false;
  rep.converged = rep.monotone && rep.rows.back().distance <= rep.rows.front().distance;
  return rep;
}

}  // namespace ifk
