// ifk: batch front end for interface-operator experiments.
//
//   ifk run <config> [--out DIR] [--workers N]
//   ifk validate <config>
//   ifk list-models
//
// Exit codes: 0 success, 1 numerical failure, 2 config error.
// IFK_CACHE_DIR, when set, stores result bodies keyed by config hash.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "ifk/cli/runner.hpp"

namespace fs = std::filesystem;
using namespace ifk;
using namespace ifk::cli;

namespace {

std::string error_kind(const std::exception& e) {
#define IFK_KIND(T) \
  if (dynamic_cast<const T*>(&e)) return #T;
  IFK_KIND(config_error)
  IFK_KIND(certificate_error)
  IFK_KIND(inconsistent_asymptotics)
  IFK_KIND(not_invertible)
  IFK_KIND(no_gap)
  IFK_KIND(solver_error)
  IFK_KIND(boundary_reached)
  IFK_KIND(hypothesis_violation)
  IFK_KIND(unstable_result)
  IFK_KIND(size_cap_exceeded)
  IFK_KIND(dimension_mismatch)
  IFK_KIND(lattice_mismatch)
#undef IFK_KIND
  return "error";
}

int fail(const std::exception& e) {
  const bool config = dynamic_cast<const config_error*>(&e) != nullptr;
  std::cerr << json{{"error", error_kind(e)}, {"message", e.what()}}.dump() << "\n";
  return config ? 2 : 1;
}

std::optional<RunResult> cache_lookup(const fs::path& dir) {
  std::ifstream manifest(dir / "MANIFEST");
  if (!manifest) return std::nullopt;
  RunResult r;
  for (std::string name; std::getline(manifest, name);) {
    std::ifstream in(dir / name, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream ss;
    ss << in.rdbuf();
    r.files.push_back({name, ss.str()});
  }
  return r;
}

void cache_store(const fs::path& dir, const RunResult& r) {
  const fs::path tmp = dir.string() + ".tmp" + std::to_string(::getpid());
  std::error_code ec;
  fs::remove_all(tmp, ec);
  write_results(tmp, r);
  std::ofstream manifest(tmp / "MANIFEST");
  for (const auto& f : r.files) manifest << f.name << "\n";
  manifest.close();
  fs::rename(tmp, dir, ec);
  if (ec) fs::remove_all(tmp, ec);
}

void list_models() {
  for (const auto& d : model_catalog()) {
    std::cout << d.name << "  (l=" << d.dimension << ", N=" << d.fiber_dim
              << (d.claims.hermitian ? ", hermitian" : "") << (d.claims.unitary ? ", unitary" : "")
              << (d.chiral ? ", chiral" : "") << ")\n    " << d.summary << "\n";
    for (const auto& p : d.params) {
      std::cout << "    " << p.key << " = ";
      if (std::holds_alternative<double>(p.default_value)) std::cout << std::get<double>(p.default_value);
      else std::cout << '"' << std::get<std::string>(p.default_value) << '"';
      std::cout << "  " << p.help << "\n";
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Interface operator toolkit: spectra, indices and non-propagation experiments"};
  app.require_subcommand(1);
  unsigned workers_flag = 0;
  std::string out_dir = "results";
  std::string config_path;
  app.add_option("--workers", workers_flag, "worker threads (default: available cores)")->check(CLI::PositiveNumber);

  auto* run = app.add_subcommand("run", "run an experiment config");
  run->add_option("config", config_path, "JSON or TOML config")->required();
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--workers", workers_flag, "worker threads (default: available cores)")->check(CLI::PositiveNumber);
  auto* validate = app.add_subcommand("validate", "check a config against the schema");
  validate->add_option("config", config_path, "JSON or TOML config")->required();
  app.add_subcommand("list-models", "print the model catalog");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  set_workers(workers_flag);

  try {
    if (app.got_subcommand("list-models")) {
      list_models();
      return 0;
    }
    const ExperimentConfig c = load_config(config_path);
    if (app.got_subcommand("validate")) {
      build_model(c.model, c.params);
      std::cout << "valid " << to_string(c.task) << " config " << c.hash << "\n";
      return 0;
    }
    std::optional<RunResult> r;
    fs::path cache;
    if (const char* env = std::getenv("IFK_CACHE_DIR"); env && *env) {
      cache = fs::path(env) / c.hash;
      r = cache_lookup(cache);
    }
    if (!r) {
      r = run_experiment(c);
      if (!cache.empty()) {
        fs::create_directories(cache.parent_path());
        cache_store(cache, *r);
      }
    }
    write_results(out_dir, *r);
    for (const auto& f : r->files) std::cout << (fs::path(out_dir) / f.name).string() << "\n";
    return 0;
  } catch (const std::exception& e) {
    return fail(e);
  }
}
