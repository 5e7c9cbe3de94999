// Acceptance suite: one line per criterion, "PASS"/"FAIL", exit 1 on any FAIL.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "fmorph/identities.hpp"
#include "fmorph/problem.hpp"

using namespace fmorph;

namespace {

int failures = 0;

void report(int criterion, bool ok, const std::string& what, const std::string& detail = "") {
  std::printf("%s criterion %d: %s%s%s\n", ok ? "PASS" : "FAIL", criterion, what.c_str(),
              detail.empty() ? "" : " -- ", detail.c_str());
  if (!ok) ++failures;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

// 1. catalog verdicts match recorded claims at 200 seeded points
void criterion1() {
  SamplerConfig cfg;  // count = 200, seed = 1, tol 1e-8
  bool ok = true;
  std::string detail;
  for (const auto& e : catalog()) {
    Verdict v = classify(e.map, cfg);
    const bool match = v.is_f_harmonic == e.expected.is_f_harmonic &&
                       v.is_hwc == e.expected.is_hwc &&
                       v.is_f_harmonic_morphism == e.expected.is_f_harmonic_morphism;
    const bool residuals =
        (!e.expected.is_f_harmonic || v.max_f_tension_residual <= 1e-8) &&
        (!e.expected.is_hwc || v.max_hwc_residual <= 1e-8);
    if (!(match && residuals)) {
      ok = false;
      detail += e.key + " (tau_f " + fmt(v.max_f_tension_residual) + ", hwc " +
                fmt(v.max_hwc_residual) + ") ";
    }
  }
  report(1, ok, "catalog verdicts match recorded claims for all 8 entries", detail);
}

// 2. master pullback identity with 20 random test functions at 200 points
void criterion2() {
  SamplerConfig cfg;
  bool ok = true;
  double worst = 0.0;
  for (const auto& e : catalog()) {
    if (!e.expected.is_hwc) continue;
    PullbackTestResult r = morphism_pullback_test(e.map, 20, cfg);
    worst = std::max(worst, r.max_identity_residual);
    ok = ok && r.max_identity_residual <= 1e-8;
  }
  report(2, ok, "pullback identity holds for HWC catalog maps", "max residual " + fmt(worst));
}

double suite_worst(const std::string& suite, double tol, bool* ok, int K = 20) {
  SamplerConfig cfg;
  double worst = 0.0;
  for (const auto& row : run_identity_suite(suite, cfg, K)) {
    if (row.skipped) continue;
    worst = std::max(worst, row.max_residual);
    *ok = *ok && row.max_residual <= tol;
  }
  return worst;
}

void criterion3() {
  bool ok = true;
  const double worst = suite_worst("c2", 1e-8, &ok);
  report(3, ok, "conformal-rescale identity on m >= 3 catalog maps", "max residual " + fmt(worst));
}

void criterion4() {
  bool ok = true;
  const double worst = suite_worst("c13", 1e-10, &ok);
  report(4, ok, "F/p/f tension equivalence for p in {2,3,4}", "max residual " + fmt(worst));
}

void criterion5() {
  bool ok = true;
  const double worst = suite_worst("t29", 1e-8, &ok);
  const auto cat = catalog();
  const auto& rp = catalog_entry(cat, "radial_projection");
  SamplerConfig cfg;
  cfg.count = 100;
  double tw = 1.0;
  try {
    tw = two_weight_test(rp.map, parse("1 + x^2 + y^2 + z^2"),
                         parse("exp(sqrt(x^2 + y^2 + z^2))"), cfg);
  } catch (const Error&) {
    ok = false;
  }
  ok = ok && tw <= 1e-8;
  report(5, ok, "trichotomy identity and two-weight test",
         "max residual " + fmt(worst) + ", two-weight " + fmt(tw));
}

// 6. jet derivatives vs finite differences on random expressions and metrics
void criterion6() {
  std::mt19937_64 rng(424242);
  std::uniform_real_distribution<double> coef(-1.5, 1.5), pt(-0.8, 0.8);
  bool ok = true;
  int checked = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    // random smooth expression: quadratic + transcendental mix
    std::ostringstream os;
    os << coef(rng) << "*x^2 + " << coef(rng) << "*x*y + " << coef(rng) << "*y*z + " << coef(rng)
       << "*sin(x + " << coef(rng) << "*y) + " << coef(rng) << "*exp(" << 0.5 * coef(rng)
       << "*z) + " << coef(rng) << "*log(3 + x^2 + y^2)";
    Expr e = parse(os.str());
    std::map<std::string, double> env{{"x", pt(rng)}, {"y", pt(rng)}, {"z", pt(rng)}};
    std::map<std::string, Jet2> jets;
    int i = 0;
    for (auto& [k, v] : env) jets.emplace(k, Jet2::variable(v, 3, i++));
    Jet2 j = eval_jet(e, jets);
    const double h = 1e-4;
    int idx = 0;
    for (auto& [k, v] : env) {
      auto ep = env, em = env;
      ep[k] += h;
      em[k] -= h;
      const double fd = (eval_real(e, ep) - eval_real(e, em)) / (2 * h);
      ok = ok && std::abs(j.grad(idx) - fd) <= 1e-6 * (1 + std::abs(fd));
      auto epp = env;
      epp[k] += h;
      auto emm = env;
      emm[k] -= h;
      const double fd2 =
          (eval_real(e, epp) - 2 * eval_real(e, env) + eval_real(e, emm)) / (h * h);
      ok = ok && std::abs(j.hess(idx, idx) - fd2) <= 1e-4 * (1 + std::abs(fd2));
      ++idx;
    }
    ++checked;
  }
  // metric/Christoffel: FD-check d_k g_ij on curved charts
  for (const Chart& c : {charts::h3_halfspace(), charts::s2_stereo(), charts::s3_round()}) {
    PointSampler sampler(c, 5);
    for (int t = 0; t < 20; ++t) {
      Eigen::VectorXd p = sampler.next();
      MetricAtPoint m = metric_at(c, p);
      const double h = 1e-4;
      for (int k = 0; k < c.dim(); ++k) {
        Eigen::VectorXd pp = p, pm = p;
        pp(k) += h;
        pm(k) -= h;
        if (!in_domain(c, pp) || !in_domain(c, pm)) continue;
        MetricAtPoint mp = metric_at(c, pp), mm = metric_at(c, pm);
        Eigen::MatrixXd fd = (mp.g - mm.g) / (2 * h);
        ok = ok && (m.dg[k] - fd).norm() <= 1e-6 * (1 + fd.norm());
      }
    }
  }
  report(6, ok && checked == 1000, "jet derivatives agree with finite differences",
         std::to_string(checked) + " expressions + metric checks");
}

// 7. spin correspondence and the 33x33 disk minimizer
void criterion7() {
  bool ok = true;
  std::string detail;

  SpinConfig small;
  small.nx = small.ny = 3;
  small.hx = small.hy = 0.5;
  small.f_expr = parse("1 + 0.5*x^2 + y^2");
  small.init = "random";
  small.seed = 5;
  SpinField grid3 = build_spin_field(small);
  auto rhs = llg_rhs(grid3);
  TangentialResidual tr3 = tangential_residual(grid3);
  for (int i = 0; i < grid3.size(); ++i)
    ok = ok && std::abs(rhs[i].norm() - tr3.r_t[i].norm()) <= 1e-12;

  auto r = residual_field(grid3);
  const double V = grid3.cell_volume();
  const double eps = 1e-5;
  for (int i = 0; i < grid3.size(); ++i) {
    if (grid3.state[i] != NodeState::Interior) continue;
    for (int c = 0; c < 3; ++c) {
      SpinField plus = grid3, minus = grid3;
      plus.u[i](c) += eps;
      minus.u[i](c) -= eps;
      const double fd = (f_energy(plus) - f_energy(minus)) / (2 * eps);
      ok = ok && std::abs(fd + V * r[i](c)) <= 1e-10 * (1 + std::abs(fd));
    }
  }

  SpinConfig disk;
  disk.nx = disk.ny = 33;
  disk.hx = disk.hy = 2.0 / 32.0;
  disk.domain = "disk";
  disk.f_expr = parse("2/(1 + x^2 + y^2)");
  disk.init = "random";
  disk.seed = 1;
  SpinField fld = build_spin_field(disk);
  MinimizeOptions opts;
  opts.tol = 1e-6;
  opts.trace_every = 100;
  try {
    SolveTrace trace = minimize(fld, opts);
    ok = ok && trace.back().max_residual <= 1e-6 && trace.back().iteration < opts.max_iter;
    for (std::size_t k = 1; k < trace.size(); ++k)
      ok = ok && trace[k].energy <= trace[k - 1].energy + 1e-12;
    detail = "disk minimizer: " + std::to_string(trace.back().iteration) +
             " iterations, residual " + fmt(trace.back().max_residual);
  } catch (const Error& e) {
    ok = false;
    detail = e.what();
  }
  report(7, ok, "spin correspondence and 33x33 disk minimizer", detail);
}

// 8. determinism of the CLI outputs at fixed seeds
#ifndef FMORPH_CLI_PATH
#define FMORPH_CLI_PATH "fmorph"
#endif
#ifndef FMORPH_CONFIG_DIR
#define FMORPH_CONFIG_DIR "configs"
#endif

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void criterion8() {
  const std::string cli = FMORPH_CLI_PATH;
  const std::string cfgdir = FMORPH_CONFIG_DIR;
  bool ok = true;
  std::string detail;

  auto run = [&](const std::string& cmd) {
    const int rc = std::system(cmd.c_str());
    if (rc != 0) {
      ok = false;
      detail += "command failed: " + cmd + " ";
    }
  };
  run(cli + " check catalog://ex1_projection --points 50 --seed 9 --json > acc_verdict_1.json");
  run(cli + " check catalog://ex1_projection --points 50 --seed 9 --json > acc_verdict_2.json");
  run(cli + " spin minimize " + cfgdir + "/spin_disk9.json --out acc_trace_1.csv 2> /dev/null");
  run(cli + " spin minimize " + cfgdir + "/spin_disk9.json --out acc_trace_2.csv 2> /dev/null");
  if (ok) {
    const std::string v1 = slurp("acc_verdict_1.json"), v2 = slurp("acc_verdict_2.json");
    const std::string t1 = slurp("acc_trace_1.csv"), t2 = slurp("acc_trace_2.csv");
    ok = !v1.empty() && v1 == v2 && !t1.empty() && t1 == t2;
    if (!ok) detail = "outputs differ between runs";
  }
  report(8, ok, "identical seeds give byte-identical JSON and CSV", detail);
}

}  // namespace

int main() {
  criterion1();
  criterion2();
  criterion3();
  criterion4();
  criterion5();
  criterion6();
  criterion7();
  criterion8();
  if (failures == 0) {
    std::printf("acceptance: all 8 criteria passed\n");
    return 0;
  }
  std::printf("acceptance: %d criteria FAILED\n", failures);
  return 1;
}
