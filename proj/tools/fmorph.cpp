// fmorph: command-line front end for the f-harmonic map calculus library.
//
//   fmorph check <problem.json | catalog://KEY> [--map NAME] [--points N]
//          [--seed S] [--tol T] [--json | --csv]
//   fmorph identities [--suite c2|c13|eq12|eq13|t29|all] [--seed S]
//   fmorph spin minimize <config.json> [--max-iter N] [--tol T]
//          [--out trace.csv] [--field-out field.json]
//   fmorph spin evolve <config.json> --dt DT --steps N
//          [--out trace.csv] [--field-out field.json]
//
// Exit codes: 0 success / expectations match, 1 analysis mismatch or solver
// failure, 2 usage or schema error.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "fmorph/identities.hpp"
#include "fmorph/problem.hpp"

namespace {

using namespace fmorph;

void write_file(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::SchemaError, "cannot write '" + path + "'");
  out << body;
}

struct CheckTarget {
  MapSpec map;
  std::optional<ExpectedBlock> expected;
};

std::vector<CheckTarget> resolve_check_targets(const std::string& source,
                                               const std::string& map_filter) {
  std::vector<CheckTarget> targets;
  const std::string scheme = "catalog://";
  if (source.rfind(scheme, 0) == 0) {
    const std::string key = source.substr(scheme.size());
    static const std::vector<CatalogEntry> cat = catalog();
    const CatalogEntry& e = catalog_entry(cat, key);
    ExpectedBlock blk;
    blk.map_name = e.map.name;
    blk.is_f_harmonic = e.expected.is_f_harmonic;
    blk.is_hwc = e.expected.is_hwc;
    blk.is_f_harmonic_morphism = e.expected.is_f_harmonic_morphism;
    targets.push_back({e.map, blk});
  } else {
    ProblemDoc doc = load_problem(source);
    for (const auto& m : doc.maps) {
      if (!map_filter.empty() && m.name != map_filter) continue;
      CheckTarget t{m, std::nullopt};
      for (const auto& b : doc.expected)
        if (b.map_name == m.name) t.expected = b;
      targets.push_back(std::move(t));
    }
    if (targets.empty())
      throw Error(ErrorCode::SchemaError,
                  map_filter.empty() ? "problem file defines no maps"
                                     : "no map named '" + map_filter + "' in problem file");
  }
  return targets;
}

int run_check(const std::string& source, const std::string& map_filter, int points,
              std::uint64_t seed, double tol, bool as_json, bool as_csv) {
  std::vector<CheckTarget> targets = resolve_check_targets(source, map_filter);
  SamplerConfig cfg;
  if (points > 0) cfg.count = points;
  cfg.seed = seed;
  if (tol > 0) cfg.tol_resid = cfg.tol_hwc = tol;

  bool all_match = true;
  auto payload = nlohmann::ordered_json::array();
  std::string csv;
  for (const auto& t : targets) {
    Verdict v = classify(t.map, cfg);
    bool match = true;
    if (t.expected) {
      const auto& e = *t.expected;
      if (e.is_f_harmonic && *e.is_f_harmonic != v.is_f_harmonic) match = false;
      if (e.is_hwc && *e.is_hwc != v.is_hwc) match = false;
      if (e.is_f_harmonic_morphism && *e.is_f_harmonic_morphism != v.is_f_harmonic_morphism)
        match = false;
    }
    all_match = all_match && match;
    if (as_json) {
      nlohmann::ordered_json row = verdict_to_json(v);
      if (t.expected) row["matches_expected"] = match;
      payload.push_back(std::move(row));
    } else if (as_csv) {
      csv += verdict_to_csv(v, t.map.source.coords);
    } else {
      std::printf("map %-22s f-harmonic=%-5s hwc=%-5s morphism=%-5s", v.map_name.c_str(),
                  v.is_f_harmonic ? "true" : "false", v.is_hwc ? "true" : "false",
                  v.is_f_harmonic_morphism ? "true" : "false");
      if (v.fibers_minimal)
        std::printf(" fibers-minimal=%s", *v.fibers_minimal ? "true" : "false");
      if (t.expected) std::printf("  [%s]", match ? "match" : "MISMATCH");
      std::printf("\n");
    }
  }
  if (as_json)
    std::cout << (payload.size() == 1 ? payload[0] : payload).dump(2) << "\n";
  else if (as_csv)
    std::cout << csv;
  return all_match ? 0 : 1;
}

int run_identities(const std::string& suite, std::uint64_t seed) {
  SamplerConfig cfg;
  cfg.seed = seed;
  std::vector<IdentityRow> rows = run_identity_suite(suite, cfg);
  bool ok = true;
  std::printf("%-6s %-34s %-14s\n", "suite", "subject", "max_residual");
  for (const auto& r : rows) {
    if (r.skipped) {
      std::printf("%-6s %-34s %-14s\n", r.suite.c_str(), r.subject.c_str(), "SKIP");
      continue;
    }
    ok = ok && r.max_residual <= 1e-8;
    std::printf("%-6s %-34s %.3e\n", r.suite.c_str(), r.subject.c_str(), r.max_residual);
  }
  std::printf("identities: %s\n", ok ? "all within 1e-08" : "FAILED");
  return ok ? 0 : 1;
}

int run_spin(bool do_minimize, const std::string& config_path, int max_iter, double tol,
             double dt, int steps, const std::string& out_path,
             const std::string& field_out_path) {
  SpinConfig cfg = load_spin_config(config_path);
  SpinField fld = build_spin_field(cfg);
  SolveTrace trace;
  try {
    if (do_minimize) {
      MinimizeOptions opts;
      if (max_iter > 0) opts.max_iter = max_iter;
      if (tol > 0) opts.tol = tol;
      opts.trace_every = std::max(1, opts.max_iter / 2000);
      trace = minimize(fld, opts);
    } else {
      trace = evolve(fld, dt, steps, std::max(1, steps / 2000));
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::StepUnderflow || e.code() == ErrorCode::BlowUp) {
      std::cerr << "solver failed: " << e.what() << "\n";
      return 1;
    }
    throw;
  }
  const std::string csv = trace_to_csv(trace);
  if (!out_path.empty())
    write_file(out_path, csv);
  else
    std::cout << csv;
  if (!field_out_path.empty()) write_file(field_out_path, spin_field_to_json(fld).dump(2) + "\n");
  const auto& last = trace.back();
  std::fprintf(stderr, "final: iter=%d energy=%.12g residual=%.3e\n", last.iteration, last.energy,
               last.max_residual);
  if (do_minimize && last.max_residual > (tol > 0 ? tol : MinimizeOptions{}.tol)) {
    std::cerr << "minimize: did not reach tolerance within iteration budget\n";
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fmorph: f-harmonic map calculus on Riemannian charts"};
  app.require_subcommand(1);

  // check
  std::string check_source, check_map;
  int check_points = 0;
  std::uint64_t check_seed = 1;
  double check_tol = 0;
  bool check_json = false, check_csv = false;
  auto* check = app.add_subcommand("check", "classify maps from a problem file or catalog://KEY");
  check->add_option("source", check_source, "problem JSON path or catalog://KEY")->required();
  check->add_option("--map", check_map, "restrict to one named map");
  check->add_option("--points", check_points, "sample count per map");
  check->add_option("--seed", check_seed, "sampler seed");
  check->add_option("--tol", check_tol, "residual tolerance");
  auto* jflag = check->add_flag("--json", check_json, "emit verdict JSON");
  check->add_flag("--csv", check_csv, "emit per-point CSV")->excludes(jflag);

  // identities
  std::string suite = "all";
  std::uint64_t id_seed = 1;
  auto* ident = app.add_subcommand("identities", "run built-in identity suites");
  ident->add_option("--suite", suite, "c2 | c13 | eq12 | eq13 | t29 | all");
  ident->add_option("--seed", id_seed, "sampler seed");

  // spin
  auto* spin = app.add_subcommand("spin", "discrete inhomogeneous Heisenberg model solvers");
  spin->require_subcommand(1);
  std::string spin_config, spin_out, spin_field_out;
  int spin_max_iter = 0, spin_steps = 0;
  double spin_tol = 0, spin_dt = 0;
  auto* smin = spin->add_subcommand("minimize", "projected gradient descent to a critical field");
  smin->add_option("config", spin_config, "spin config JSON")->required();
  smin->add_option("--max-iter", spin_max_iter, "iteration budget");
  smin->add_option("--tol", spin_tol, "tangential-residual tolerance");
  smin->add_option("--out", spin_out, "trace CSV path (default: stdout)");
  smin->add_option("--field-out", spin_field_out, "final field JSON path");
  auto* sevo = spin->add_subcommand("evolve", "RK4 Landau-Lifshitz time stepping");
  sevo->add_option("config", spin_config, "spin config JSON")->required();
  sevo->add_option("--dt", spin_dt, "time step")->required();
  sevo->add_option("--steps", spin_steps, "number of steps")->required();
  sevo->add_option("--out", spin_out, "trace CSV path (default: stdout)");
  sevo->add_option("--field-out", spin_field_out, "final field JSON path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (check->parsed())
      return run_check(check_source, check_map, check_points, check_seed, check_tol, check_json,
                       check_csv);
    if (ident->parsed()) return run_identities(suite, id_seed);
    if (spin->parsed())
      return run_spin(smin->parsed(), spin_config, spin_max_iter, spin_tol, spin_dt, spin_steps,
                      spin_out, spin_field_out);
  } catch (const fmorph::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == fmorph::ErrorCode::SchemaError ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
