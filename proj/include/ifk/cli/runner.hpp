#pragma once

// Executes an experiment config and renders its result files in memory.
// Bodies depend only on the canonical config, never on worker count or time.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "ifk/cli/config.hpp"
#include "ifk/dynamics.hpp"
#include "ifk/models.hpp"
#include "ifk/truncation.hpp"

namespace ifk::cli {

struct ResultFile {
  std::string name;
  std::string body;
};

struct RunResult {
  std::vector<ResultFile> files;
};

namespace detail {

inline std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x == 0.0 ? 0.0 : x);
  return buf;
}

inline std::string kind_name(SpectrumKind k) {
  switch (k) {
    case SpectrumKind::real_line: return "real_line";
    case SpectrumKind::unit_circle: return "unit_circle";
    default: return "generic";
  }
}

inline json certificates(const Model& m) {
  return {{"model", m.descriptor.name},
          {"asymptotics", std::string(to_string(operator_family(m.op)))},
          {"claims", {{"hermitian", m.op.claims().hermitian}, {"unitary", m.op.claims().unitary}}},
          {"claims_verified", true},
          {"payload_certificates", "passed"},
          {"chiral_symmetry", m.chiral.has_value()}};
}

inline std::string csv_header(const ExperimentConfig& c, const Model& m, const std::string& columns) {
  const json cert = certificates(m);
  std::string h = "# config_hash=" + c.hash + "\n";
  h += "# task=" + to_string(c.task) + " model=" + c.model + "\n";
  h += "# certificates=" + cert.dump() + "\n";
  return h + columns + "\n";
}

inline json envelope(const ExperimentConfig& c, const Model& m) {
  return {{"config_hash", c.hash}, {"task", to_string(c.task)}, {"config", c.canonical}, {"certificates", certificates(m)}};
}

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

inline SpectralOptions spectral_options(const ExperimentConfig& c, int dim) {
  SpectralOptions o;
  if (c.numerics.grid) o.grid = BlochGrid::uniform(dim, *c.numerics.grid);
  o.orbits.sphere_points = c.numerics.sphere_points;
  return o;
}

inline TruncationBox box_for(const ExperimentConfig& c, int dim) {
  return TruncationBox(dim, c.numerics.box ? *c.numerics.box : dim == 1 ? 100 : dim == 2 ? 10 : 4);
}

inline json interval_list(const std::vector<Interval>& v) {
  json a = json::array();
  for (const auto& iv : v) a.push_back({iv.lower, iv.upper});
  return a;
}

inline RunResult essential(const ExperimentConfig& c, const Model& m) {
  const auto opts = spectral_options(c, m.op.dimension());
  const EssentialSpectrum ess = essential_spectrum_by_orbit(m.op, opts);
  std::string hull = csv_header(c, m, "orbit,lower,upper");
  std::string points = csv_header(c, m, "orbit,re,im");
  std::string bands = csv_header(c, m, "orbit,theta,band,value");
  bool any_band = false;
  json orbits = json::array();
  const auto systems = quasi_orbits(m.op, opts.orbits);
  for (const auto& o : ess.orbits) {
    for (const auto& iv : o.spectrum.hull()) hull += o.label + "," + num(iv.lower) + "," + num(iv.upper) + "\n";
    for (const auto& z : o.spectrum.points()) points += o.label + "," + num(z.real()) + "," + num(z.imag()) + "\n";
    orbits.push_back({{"label", o.label},
                      {"kind", kind_name(o.spectrum.kind())},
                      {"resolution", o.spectrum.resolution()},
                      {"approximate", o.spectrum.approximate()},
                      {"hull", interval_list(o.spectrum.hull())}});
  }
  for (const auto& iv : ess.total.hull()) hull += "total," + num(iv.lower) + "," + num(iv.upper) + "\n";
  // Band plot data (θ, eigenvalue) for one-dimensional hermitian bulks.
  if (m.op.dimension() == 1 && m.op.claims().hermitian) {
    const BlochGrid grid = opts.grid ? *opts.grid : BlochGrid::default_for(1);
    for (const auto& b : systems) {
      if (!b.translation_invariant()) continue;
      any_band = true;
      for (std::size_t k = 0; k < grid.size(); ++k) {
        const Eigen::VectorXd th = grid.point(k);
        Eigen::SelfAdjointEigenSolver<Matrix> es(bloch_symbol(b.invariant(), th), Eigen::EigenvaluesOnly);
        for (Eigen::Index j = 0; j < es.eigenvalues().size(); ++j)
          bands += b.label + "," + num(th(0)) + "," + std::to_string(j) + "," + num(es.eigenvalues()(j)) + "\n";
      }
    }
  }
  json summary = envelope(c, m);
  summary["kind"] = kind_name(ess.total.kind());
  summary["resolution"] = ess.total.resolution();
  summary["approximate"] = ess.total.approximate();
  summary["hull"] = interval_list(ess.total.hull());
  summary["orbits"] = orbits;
  RunResult r;
  r.files.push_back({c.prefix + "_hull.csv", hull});
  r.files.push_back({c.prefix + "_points.csv", points});
  if (any_band) r.files.push_back({c.prefix + "_bands.csv", bands});
  r.files.push_back({c.prefix + ".json", dump(summary)});
  return r;
}

inline RunResult truncation(const ExperimentConfig& c, const Model& m) {
  const TruncationBox box = box_for(c, m.op.dimension());
  EigenReport e;
  if (c.numerics.window) {
    InGapOptions o;
    o.spectral = spectral_options(c, m.op.dimension());
    e = in_gap_states(m.op, box, *c.numerics.window, o);
  } else {
    e = spectrum_truncated(m.op, box, true);
  }
  std::string csv =
      csv_header(c, m, "k,re,im,decay_rate,participation_ratio,boundary_mass,interface_distance,boundary_artifact");
  for (std::size_t k = 0; k < e.eigenvalues.size(); ++k) {
    const auto& l = e.localization[k];
    csv += std::to_string(k) + "," + num(e.eigenvalues[k].real()) + "," + num(e.eigenvalues[k].imag()) + "," +
           num(l.decay_rate) + "," + num(l.participation_ratio) + "," + num(l.boundary_mass) + "," +
           num(l.interface_distance) + "," + (l.boundary_artifact ? "1" : "0") + "\n";
  }
  json s = envelope(c, m);
  s["half_width"] = box.half_width();
  s["count"] = e.eigenvalues.size();
  s["hermitian"] = e.hermitian;
  s["window_warning"] = e.window_warning;
  s["filtered_boundary_states"] = e.filtered_boundary_states;
  return {{{c.prefix + "_eigenvalues.csv", csv}, {c.prefix + ".json", dump(s)}}};
}

inline RunResult convergence(const ExperimentConfig& c, const Model& m) {
  const auto rep = convergence_study(m.op, c.numerics.sizes, spectral_options(c, m.op.dimension()));
  std::string csv = csv_header(c, m, "half_width,distance,in_gap,artifacts");
  for (const auto& row : rep.rows)
    csv += std::to_string(row.half_width) + "," + num(row.distance) + "," + std::to_string(row.in_gap) + "," +
           std::to_string(row.artifacts) + "\n";
  json s = envelope(c, m);
  s["essential_hull"] = interval_list(rep.essential.hull());
  s["in_gap_set"] = rep.in_gap_set;
  s["monotone"] = rep.monotone;
  s["converged"] = rep.converged;
  return {{{c.prefix + "_convergence.csv", csv}, {c.prefix + ".json", dump(s)}}};
}

inline json index_row(const ExperimentConfig& c, const Model& m) {
  if (!m.chiral) throw config_error("model '" + c.model + "' has no chiral symmetry; index tasks need one");
  const TruncationBox box = box_for(c, m.op.dimension());
  ChiralIndexOptions o;
  o.zero_window = c.numerics.zero_window;
  o.stability_half_width = c.numerics.stability_half_width;
  o.spectral = spectral_options(c, m.op.dimension());
  const Asymptotics fam = operator_family(m.op);
  IndexReport r;
  if (c.task == Task::domain_wall_decomposition || (c.task == Task::index && fam == Asymptotics::domain_wall)) {
    r = domain_wall_decomposition(m.op, *m.chiral, box, o);
  } else if (c.task == Task::cone_decomposition || (c.task == Task::index && fam == Asymptotics::cone)) {
    r = cone_decomposition(m.op, *m.chiral, box, std::nullopt, o);
  } else {
    const auto ir = chiral_interface_index_report(m.op, *m.chiral, box, o);
    r.interface_index = ir.index;
    r.epsilon = ir.epsilon;
    r.zero_window = ir.zero_window;
  }
  json bulks = json::array();
  for (const auto& b : r.per_bulk) bulks.push_back({{"label", b.label}, {"invariant", b.invariant}, {"sign", b.sign}});
  json row = {{"params", params_json(m.params)},
              {"interface_index", r.interface_index},
              {"epsilon", r.epsilon},
              {"zero_window", r.zero_window},
              {"half_width", box.half_width()}};
  if (!r.per_bulk.empty()) {
    row["per_bulk"] = bulks;
    row["identity_residual"] = r.identity_residual;
    row["experimental"] = r.experimental;
  }
  return row;
}

inline RunResult index_table(const ExperimentConfig& c, const Model& base) {
  const std::vector<ModelParams> rows = c.sweep.empty() ? std::vector<ModelParams>{base.params} : c.sweep;
  std::vector<json> out(rows.size());
  parallel_for(rows.size(), [&](std::size_t i) { out[i] = index_row(c, build_model(c.model, rows[i])); });
  json s = envelope(c, base);
  s["rows"] = out;
  int worst = 0;
  for (const auto& row : out)
    if (row.contains("identity_residual")) worst = std::max(worst, std::abs(row["identity_residual"].get<int>()));
  s["max_abs_residual"] = worst;
  return {{{c.prefix + ".json", dump(s)}}};
}

inline RunResult non_propagation(const ExperimentConfig& c, const Model& m) {
  const TruncationBox box = box_for(c, m.op.dimension());
  Propagator p(m.op, box);
  const FilterSpec& f = *c.filter;
  const DynamicsSpec& d = *c.dynamics;
  const SpectralFilter eta = filter_for(p, smooth_window(f.support, f.edge_fraction), f.support, f.budget);
  Site x(m.op.dimension());
  if (!d.site.empty()) {
    if (static_cast<int>(d.site.size()) != m.op.dimension()) throw config_error("'dynamics.site' has the wrong dimension");
    for (int i = 0; i < x.dim(); ++i) x[i] = d.site[static_cast<std::size_t>(i)];
  }
  const auto idx = box.index_of(x);
  if (!idx) throw config_error("'dynamics.site' lies outside the box");
  const int n = m.op.fiber_dim();
  Vector psi = Vector::Zero(static_cast<Eigen::Index>(box.vector_size(n)));
  psi(static_cast<Eigen::Index>(*idx * n + d.component)) = 1.0;
  NonPropagationOptions o;
  o.epsilon = d.epsilon;
  o.radii = d.radii;
  o.aperture = d.aperture;
  o.record_history = true;
  o.spectral = spectral_options(c, m.op.dimension());
  const auto r = non_propagation_experiment(m.op, eta, d.target, psi, box, d.duration, o);

  json s = envelope(c, m);
  s["target"] = r.target;
  s["region"] = r.region;
  s["radii"] = r.radii;
  s["max_mass"] = r.max_mass;
  s["achieved_radius"] = r.achieved_radius ? json(*r.achieved_radius) : json(nullptr);
  s["pass"] = r.pass;
  s["epsilon"] = d.epsilon;
  s["filtered_norm"] = r.filtered_norm;
  s["samples"] = r.samples;
  s["half_width"] = box.half_width();
  s["filter"] = {{"basis", eta.basis == FilterBasis::chebyshev ? "chebyshev" : "trigonometric"},
                 {"degree", eta.degree()},
                 {"approximation_error", eta.approximation_error},
                 {"budget", eta.budget}};
  // Mass history at the achieved radius, or the outermost one if none passed.
  std::size_t col = r.radii.size() - 1;
  for (std::size_t k = 0; k < r.radii.size(); ++k)
    if (r.achieved_radius && r.radii[k] == *r.achieved_radius) col = k;
  std::string csv = csv_header(c, m, "time,radius,mass");
  for (std::size_t t = 0; t < r.times.size(); ++t)
    csv += num(r.times[t]) + "," + num(r.radii[col]) + "," + num(r.history[t][col]) + "\n";
  return {{{c.prefix + ".json", dump(s)}, {c.prefix + "_mass.csv", csv}}};
}

}  // namespace detail

inline RunResult run_experiment(const ExperimentConfig& c) {
  const Model m = build_model(c.model, c.params);
  switch (c.task) {
    case Task::essential_spectrum: return detail::essential(c, m);
    case Task::truncation_spectrum: return detail::truncation(c, m);
    case Task::convergence: return detail::convergence(c, m);
    case Task::index:
    case Task::domain_wall_decomposition:
    case Task::cone_decomposition: return detail::index_table(c, m);
    case Task::non_propagation: return detail::non_propagation(c, m);
  }
  throw config_error("unhandled task");
}

inline void write_results(const std::filesystem::path& dir, const RunResult& r) {
  std::filesystem::create_directories(dir);
  for (const auto& f : r.files) {
    std::ofstream out(dir / f.name, std::ios::binary | std::ios::trunc);
    if (!out) throw config_error("cannot write '" + (dir / f.name).string() + "'");
    out << f.body;
  }
}

}  // namespace ifk::cli
