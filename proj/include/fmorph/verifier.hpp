#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "fmorph/conformal.hpp"
#include "fmorph/sampling.hpp"

namespace fmorph {

struct PointReport {
  Eigen::VectorXd point;
  double f_tension_residual = 0.0;  // h-norm of tau_f
  double hwc_residual = 0.0;
  double lambda_sq = 0.0;
  bool is_critical = false;
  bool is_submersive = false;
};

struct LambdaStats {
  double min = 0.0, max = 0.0, mean = 0.0;
};

/// Classification result over a seeded sample of in-domain points.
/// is_f_harmonic_morphism == is_f_harmonic && is_hwc (Fuglede-Ishihara-style
/// characterization for the weighted case).
struct Verdict {
  std::string map_name;
  std::vector<PointReport> points;
  double max_f_tension_residual = 0.0;
  double max_hwc_residual = 0.0;
  bool is_f_harmonic = false;
  bool is_hwc = false;
  bool is_f_harmonic_morphism = false;
  bool is_horizontally_homothetic = false;
  std::optional<bool> fibers_minimal;  // only defined for submersive m > n maps
  bool degenerate = false;             // constant map: critical everywhere, lambda == 0
  LambdaStats lambda_stats;
  double tol_resid = 1e-8;
  double tol_hwc = 1e-8;
  std::uint64_t seed = 0;
  int count = 0;
};

inline Verdict classify(const MapSpec& map, const SamplerConfig& cfg) {
  Verdict v;
  v.map_name = map.name;
  v.tol_resid = cfg.tol_resid;
  v.tol_hwc = cfg.tol_hwc;
  v.seed = cfg.seed;
  v.count = cfg.count;

  PointSampler sampler(map.source, cfg.seed, cfg.domain_margin);
  bool all_f_harmonic = true, all_hwc = true, all_critical = true;
  bool all_homothetic = true, any_homothety_tested = false;
  bool fibers_applicable = false, all_fibers_minimal = true;
  double lmin = 0.0, lmax = 0.0, lsum = 0.0;

  for (int s = 0; s < cfg.count; ++s) {
    Eigen::VectorXd p = sampler.next_for_map(map);
    MapJet mj = map_jet(map, p);
    Eigen::VectorXd tau_f = f_tension(map, p);
    PointReport pr;
    pr.point = p;
    pr.f_tension_residual = std::sqrt(tau_f.transpose() * mj.tgt.g * tau_f);
    ConformalityReport rep = hwc_test(mj, cfg.tol_hwc);
    pr.hwc_residual = rep.hwc_residual;
    pr.lambda_sq = rep.lambda_sq;
    pr.is_critical = rep.is_critical;
    pr.is_submersive = rep.is_submersive;

    all_f_harmonic = all_f_harmonic && pr.f_tension_residual <= cfg.tol_resid;
    all_hwc = all_hwc && rep.is_hwc;
    all_critical = all_critical && rep.is_critical;
    v.max_f_tension_residual = std::max(v.max_f_tension_residual, pr.f_tension_residual);
    v.max_hwc_residual = std::max(v.max_hwc_residual, pr.hwc_residual);
    if (s == 0) {
      lmin = lmax = rep.lambda_sq;
    } else {
      lmin = std::min(lmin, rep.lambda_sq);
      lmax = std::max(lmax, rep.lambda_sq);
    }
    lsum += rep.lambda_sq;

    if (rep.is_hwc && !rep.is_critical) {
      try {
        HomothetyReport hr = horizontal_homothety_test(map, p, cfg.tol_hwc);
        any_homothety_tested = true;
        all_homothetic = all_homothetic && hr.is_homothetic;
      } catch (const Error&) {
        all_homothetic = false;
      }
      if (map.m() > map.n() && rep.is_submersive) {
        fibers_applicable = true;
        FiberGeometry fg = fiber_geometry(map, p, cfg.tol_hwc);
        Eigen::VectorXd tau = tension(mj);
        const double scale = 1.0 + std::sqrt(double(tau.transpose() * mj.tgt.g * tau));
        all_fibers_minimal =
            all_fibers_minimal && fg.minimal_fiber_residual <= cfg.tol_resid * scale;
      }
    }
    v.points.push_back(std::move(pr));
  }

  v.is_f_harmonic = all_f_harmonic;
  v.is_hwc = all_hwc;
  v.is_f_harmonic_morphism = v.is_f_harmonic && v.is_hwc;
  v.degenerate = all_critical;
  v.is_horizontally_homothetic = any_homothety_tested && all_homothetic;
  if (fibers_applicable) v.fibers_minimal = all_fibers_minimal;
  v.lambda_stats = {lmin, lmax, lsum / std::max(1, cfg.count)};
  return v;
}

// --- Verdict serialization ---------------------------------------------------

inline nlohmann::ordered_json verdict_to_json(const Verdict& v, bool include_points = true) {
  nlohmann::ordered_json j;
  j["schema"] = "fmorph-verdict/1";
  j["map"] = v.map_name;
  j["config"] = {{"samples", v.count},
                 {"seed", v.seed},
                 {"tol_resid", v.tol_resid},
                 {"tol_hwc", v.tol_hwc}};
  nlohmann::ordered_json agg;
  agg["max_f_tension_residual"] = v.max_f_tension_residual;
  agg["max_hwc_residual"] = v.max_hwc_residual;
  agg["is_f_harmonic"] = v.is_f_harmonic;
  agg["is_hwc"] = v.is_hwc;
  agg["is_f_harmonic_morphism"] = v.is_f_harmonic_morphism;
  agg["is_horizontally_homothetic"] = v.is_horizontally_homothetic;
  if (v.fibers_minimal)
    agg["fibers_minimal"] = *v.fibers_minimal;
  else
    agg["fibers_minimal"] = nullptr;
  agg["degenerate"] = v.degenerate;
  agg["lambda_stats"] = {{"min", v.lambda_stats.min},
                         {"max", v.lambda_stats.max},
                         {"mean", v.lambda_stats.mean}};
  j["aggregate"] = std::move(agg);
  if (include_points) {
    j["points"] = nlohmann::ordered_json::array();
    for (const auto& pr : v.points) {
      nlohmann::ordered_json e;
      e["p"] = std::vector<double>(pr.point.data(), pr.point.data() + pr.point.size());
      e["f_tension_residual"] = pr.f_tension_residual;
      e["hwc_residual"] = pr.hwc_residual;
      e["lambda_sq"] = pr.lambda_sq;
      j["points"].push_back(std::move(e));
    }
  }
  return j;
}

inline std::string verdict_to_csv(const Verdict& v, const std::vector<std::string>& coords) {
  std::string out;
  for (std::size_t i = 0; i < coords.size(); ++i) {
    out += coords[i];
    out += ',';
  }
  out += "f_tension_residual,hwc_residual,lambda_sq\n";
  for (const auto& pr : v.points) {
    for (int i = 0; i < pr.point.size(); ++i) {
      out += detail::format_double(pr.point(i));
      out += ',';
    }
    out += detail::format_double(pr.f_tension_residual);
    out += ',';
    out += detail::format_double(pr.hwc_residual);
    out += ',';
    out += detail::format_double(pr.lambda_sq);
    out += '\n';
  }
  return out;
}

// --- Morphism pullback test (the master identity) ----------------------------

/// Random degree-<=2 polynomial plus one sin and one cos term on the target
/// coordinates, coefficients in [-1, 1].
inline Expr random_test_function(const Chart& target, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  const int n = target.dim();
  Expr u = num(coef(rng));
  for (int a = 0; a < n; ++a) u = add(u, mul(num(coef(rng)), var(target.coords[a])));
  for (int a = 0; a < n; ++a)
    for (int b = a; b < n; ++b)
      u = add(u, mul(num(coef(rng)), mul(var(target.coords[a]), var(target.coords[b]))));
  u = add(u, mul(num(coef(rng)), call("sin", {var(target.coords[0])})));
  u = add(u, mul(num(coef(rng)), call("cos", {var(target.coords[n - 1])})));
  return u;
}

struct PullbackTestResult {
  double max_identity_residual = 0.0;  // | LHS - f lam^2 (Delta u).phi - du(tau_f) | relative
  double max_tau_term = 0.0;           // max |du(tau_f(phi))|, vanishes for morphisms
  std::vector<double> per_fn;
};

/// Checks Delta_f(u.phi) = f lambda^2 (Delta u).phi + du(tau_f(phi)) for K
/// random test functions u. Requires the map to be HWC on the sample.
inline PullbackTestResult morphism_pullback_test(const MapSpec& map, int K,
                                                 const SamplerConfig& cfg) {
  if (!map.weight) throw Error(ErrorCode::WeightMissing, "map '" + map.name + "' has no weight");
  PointSampler sampler(map.source, cfg.seed, cfg.domain_margin);
  std::mt19937_64 fn_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);

  // Pre-draw the sample and require HWC everywhere on it.
  std::vector<Eigen::VectorXd> pts;
  for (int s = 0; s < cfg.count; ++s) pts.push_back(sampler.next_for_map(map));
  for (const auto& p : pts) {
    ConformalityReport rep = hwc_test(map, p, cfg.tol_hwc);
    if (!rep.is_hwc)
      throw Error(ErrorCode::NotHWC, "pullback test requires an HWC map, '" + map.name +
                                         "' fails at a sampled point");
  }

  std::map<std::string, Expr> subs;
  for (int a = 0; a < map.n(); ++a) subs[map.target.coords[a]] = map.components[a];

  PullbackTestResult out;
  for (int k = 0; k < K; ++k) {
    Expr u = random_test_function(map.target, fn_rng);
    Expr u_phi = substitute(u, subs);
    double worst = 0.0;
    for (const auto& p : pts) {
      const double lhs = f_laplacian(map.source, *map.weight, u_phi, p);
      ConformalityReport rep = hwc_test(map, p, cfg.tol_hwc);
      const double f = eval_real(*map.weight, real_env(map.source, p));
      Eigen::VectorXd q = map_image(map, p);
      const double lap_u = laplace_beltrami(map.target, u, q);
      Jet2 uj = eval_jet(u, jet_env(map.target, q));
      Eigen::VectorXd tau_f = f_tension(map, p);
      const double du_tau = uj.grad.dot(tau_f);
      const double rhs = f * rep.lambda_sq * lap_u + du_tau;
      worst = std::max(worst, std::abs(lhs - rhs) / (1.0 + std::abs(lhs)));
      out.max_tau_term = std::max(out.max_tau_term, std::abs(du_tau));
    }
    out.per_fn.push_back(worst);
    out.max_identity_residual = std::max(out.max_identity_residual, worst);
  }
  return out;
}

// --- Two-weight test ----------------------------------------------------------

/// If a map is f1-harmonic and f2-harmonic, grad(f1/f2) lies in ker dphi.
/// Returns max over points of || dphi(grad ln(f1/f2)) ||_h after first
/// verifying that both weights actually make the map f-harmonic.
inline double two_weight_test(const MapSpec& map, const Expr& f1, const Expr& f2,
                              const SamplerConfig& cfg) {
  MapSpec m1 = map, m2 = map;
  m1.weight = f1;
  m2.weight = f2;
  PointSampler sampler(map.source, cfg.seed, cfg.domain_margin);
  double worst = 0.0;
  for (int s = 0; s < cfg.count; ++s) {
    Eigen::VectorXd p = sampler.next_for_map(map);
    MapJet mj = map_jet(map, p);
    for (const MapSpec* mm : {&m1, &m2}) {
      Eigen::VectorXd tau_f = f_tension(*mm, p);
      const double resid = std::sqrt(tau_f.transpose() * mj.tgt.g * tau_f);
      if (resid > cfg.tol_resid)
        throw Error(ErrorCode::WeightMissing,
                    "two-weight test: map is not f-harmonic for weight of '" + mm->name + "'");
    }
    auto env = jet_env(map.source, p);
    Jet2 j1 = eval_jet(f1, env), j2 = eval_jet(f2, env);
    Eigen::VectorXd grad_ln = j1.grad / j1.val - j2.grad / j2.val;  // covariant
    Eigen::VectorXd pushed = mj.J * (mj.src.g_inv * grad_ln);
    worst = std::max(worst, std::sqrt(pushed.transpose() * mj.tgt.g * pushed));
  }
  return worst;
}

// --- Polynomial HWC check -----------------------------------------------------

inline bool is_polynomial_expr(const Node& n) {
  switch (n.kind) {
    case NodeKind::Number:
    case NodeKind::Pi:
    case NodeKind::Variable: return true;
    case NodeKind::Neg: return is_polynomial_expr(*n.args[0]);
    case NodeKind::Binary:
      if (n.op == '^')
        return is_polynomial_expr(*n.args[0]) && n.args[1]->kind == NodeKind::Number &&
               n.args[1]->number >= 0.0 && n.args[1]->number == std::floor(n.args[1]->number);
      if (n.op == '/') return is_polynomial_expr(*n.args[0]) && n.args[1]->kind == NodeKind::Number;
      return is_polynomial_expr(*n.args[0]) && is_polynomial_expr(*n.args[1]);
    case NodeKind::Call: return false;
  }
  return false;
}

inline bool chart_is_euclidean(const Chart& c) {
  for (int i = 0; i < c.dim(); ++i)
    for (int j = 0; j < c.dim(); ++j) {
      const Node& n = c.metric[i][j].node();
      if (n.kind != NodeKind::Number || n.number != (i == j ? 1.0 : 0.0)) return false;
    }
  return true;
}

struct PolynomialHwcResult {
  bool is_polynomial = false;
  bool is_hwc = false;
  bool is_harmonic = false;
  double max_tension_residual = 0.0;
};

/// Numeric witness that an HWC polynomial map between Euclidean spaces is
/// harmonic: checks tau(phi) = 0 on the sample whenever the map is a
/// polynomial and HWC there.
inline PolynomialHwcResult polynomial_hwc_check(const MapSpec& map, const SamplerConfig& cfg) {
  PolynomialHwcResult out;
  out.is_polynomial = chart_is_euclidean(map.source) && chart_is_euclidean(map.target);
  for (const auto& comp : map.components)
    out.is_polynomial = out.is_polynomial && is_polynomial_expr(comp.node());
  PointSampler sampler(map.source, cfg.seed, cfg.domain_margin);
  bool all_hwc = true;
  for (int s = 0; s < cfg.count; ++s) {
    Eigen::VectorXd p = sampler.next_for_map(map);
    ConformalityReport rep = hwc_test(map, p, cfg.tol_hwc);
    all_hwc = all_hwc && rep.is_hwc;
    Eigen::VectorXd tau = tension(map, p);
    out.max_tension_residual = std::max(out.max_tension_residual, tau.norm());
  }
  out.is_hwc = all_hwc;
  out.is_harmonic = out.max_tension_residual <= cfg.tol_resid;
  return out;
}

// --- Example catalog ----------------------------------------------------------

struct ExpectedVerdict {
  bool is_f_harmonic = false;
  bool is_hwc = false;
  bool is_f_harmonic_morphism = false;
};

struct CatalogEntry {
  std::string key;
  MapSpec map;
  ExpectedVerdict expected;
  std::string note;
};

namespace charts {

inline Chart euclid2() { return euclidean_chart("euclid2", {"u", "v"}); }
inline Chart euclid3() { return euclidean_chart("euclid3", {"x", "y", "z"}); }
inline Chart euclid3_target() { return euclidean_chart("euclid3_target", {"u1", "u2", "u3"}); }

inline Chart euclid3_punctured() {
  Chart c = euclidean_chart("euclid3_punctured", {"x", "y", "z"});
  c.domain = parse("x^2+y^2+z^2-0.25");
  c.description = "Euclidean 3-space minus a ball around the origin";
  return c;
}

inline Chart euclid3_halfspace() {
  Chart c = euclidean_chart("euclid3_halfspace", {"x", "y", "z"});
  c.domain = parse("z");
  c.box_lo << -2.0, -2.0, 0.1;
  c.box_hi << 2.0, 2.0, 2.0;
  c.description = "upper half-space of Euclidean 3-space";
  return c;
}

/// Hyperbolic plane as the half-plane chart, metric (1/t^2) I on {t > 0}.
inline Chart h2_halfplane() {
  Chart c;
  c.name = "h2_halfplane";
  c.coords = {"s", "t"};
  c.metric = {{parse("1/t^2"), num(0.0)}, {num(0.0), parse("1/t^2")}};
  c.domain = parse("t");
  c.box_lo = Eigen::VectorXd(2);
  c.box_hi = Eigen::VectorXd(2);
  c.box_lo << -2.0, 0.1;
  c.box_hi << 2.0, 2.0;
  c.description = "hyperbolic half-plane";
  return c;
}

/// Hyperbolic 3-space as the half-space chart, metric (1/z^2) I on {z > 0}.
inline Chart h3_halfspace() {
  Chart c;
  c.name = "h3_halfspace";
  c.coords = {"x", "y", "z"};
  Expr w = parse("1/z^2");
  c.metric = {{w, num(0.0), num(0.0)}, {num(0.0), w, num(0.0)}, {num(0.0), num(0.0), w}};
  c.domain = parse("z");
  c.box_lo = Eigen::VectorXd(3);
  c.box_hi = Eigen::VectorXd(3);
  c.box_lo << -2.0, -2.0, 0.1;
  c.box_hi << 2.0, 2.0, 2.0;
  c.description = "hyperbolic half-space";
  return c;
}

/// Round 2-sphere in the stereographic chart, metric 4/(1+s^2+t^2)^2 I.
inline Chart s2_stereo() {
  Chart c;
  c.name = "s2_stereo";
  c.coords = {"s", "t"};
  Expr w = parse("4/(1+s^2+t^2)^2");
  c.metric = {{w, num(0.0)}, {num(0.0), w}};
  c.box_lo = Eigen::VectorXd::Constant(2, -3.0);
  c.box_hi = Eigen::VectorXd::Constant(2, 3.0);
  c.description = "round 2-sphere, stereographic coordinates";
  return c;
}

/// Round 3-sphere minus a point in the stereographic chart on R^3.
inline Chart s3_round() {
  Chart c;
  c.name = "s3_round";
  c.coords = {"x", "y", "z"};
  Expr w = parse("4/(1+x^2+y^2+z^2)^2");
  c.metric = {{w, num(0.0), num(0.0)}, {num(0.0), w, num(0.0)}, {num(0.0), num(0.0), w}};
  c.box_lo = Eigen::VectorXd::Constant(3, -0.9);
  c.box_hi = Eigen::VectorXd::Constant(3, 0.9);
  c.description = "round 3-sphere minus north pole, stereographic coordinates";
  return c;
}

inline Chart cylinder3() {
  Chart c = euclidean_chart("cylinder3", {"t", "x", "y"});
  c.domain = parse("x^2+y^2-0.04");
  c.description = "R x C minus the axis {z = 0}";
  return c;
}

inline Chart hopf_source() {
  Chart c = euclidean_chart("hopf_source", {"x", "y", "z"}, 0.9);
  // Keep the stereographic image of the Hopf value away from its pole.
  c.domain = parse("(x^2+y^2+z^2)^2+1-2*x^2-2*y^2+2*z^2-0.2");
  c.description = "Euclidean 3-space, restricted away from the chart pole of the Hopf image";
  return c;
}

}  // namespace charts

namespace detail {

// Hopf value on S^2 in R^3 coordinates (a, b, c), then stereographic
// projection from the pole a = 1: (s, t) = (b, c) / (1 - a).
inline std::vector<Expr> hopf_components() {
  const char* denom = "(2*((x^2+y^2+z^2)^2+1-2*x^2-2*y^2+2*z^2))";
  std::string s = std::string("(8*x*z-4*y*(x^2+y^2+z^2-1))/") + denom;
  std::string t = std::string("(4*x*(x^2+y^2+z^2-1)+8*y*z)/") + denom;
  return {parse(s), parse(t)};
}

inline std::vector<Expr> radial_projection_components() {
  // x / |x| followed by stereographic projection from the north pole.
  return {parse("x/(sqrt(x^2+y^2+z^2)-z)"), parse("y/(sqrt(x^2+y^2+z^2)-z)")};
}

}  // namespace detail

inline std::vector<CatalogEntry> catalog() {
  std::vector<CatalogEntry> out;
  auto entry = [&](std::string key, Chart src, Chart tgt, std::vector<std::string> comps,
                   std::string weight, ExpectedVerdict exp, std::string note) {
    MapSpec m;
    m.name = key;
    m.source = std::move(src);
    m.target = std::move(tgt);
    for (const auto& c : comps) m.components.push_back(parse(c));
    m.weight = parse(weight);
    out.push_back(CatalogEntry{std::move(key), std::move(m), exp, std::move(note)});
  };

  entry("ex1_projection", charts::euclid3(), charts::euclid2(), {"x", "y"}, "exp(z)",
        {true, true, true}, "orthogonal projection; f-harmonic morphism with f = e^z");
  entry("ex1_psi", charts::euclid3(), charts::euclid2(), {"3*x", "x*y"}, "exp(z)",
        {true, false, false}, "f-harmonic with f = e^z but not horizontally weakly conformal");
  entry("ex1_phi", charts::euclid3(), charts::euclid2(), {"x", "y+z"}, "exp(y-z)",
        {true, false, false}, "submersion, f-harmonic with f = e^{y-z}, not HWC");
  entry("mobius_inversion", charts::euclid3_punctured(), charts::euclid3_target(),
        {"x/(x^2+y^2+z^2)", "y/(x^2+y^2+z^2)", "z/(x^2+y^2+z^2)"}, "1/(x^2+y^2+z^2)",
        {true, true, true},
        "inversion in the unit sphere (m = 3, r = 1, a = 0); f = (r/|x|)^{2(m-2)}");
  entry("euclid_to_hyperbolic", charts::euclid3_halfspace(), charts::h2_halfplane(),
        {"x", "sqrt(y^2+z^2)"}, "1/z", {true, true, true},
        "Euclidean half-space onto the hyperbolic plane; f-harmonic morphism with f = 1/z");
  {
    MapSpec m;
    m.name = "hopf_r3";
    m.source = charts::hopf_source();
    m.target = charts::s2_stereo();
    m.components = detail::hopf_components();
    m.weight = parse("2/(1+x^2+y^2+z^2)");
    out.push_back(CatalogEntry{"hopf_r3", std::move(m), {true, true, true},
                               "Hopf fibration in the Euclidean R^3 chart; f = 2/(1+|x|^2)"});
  }
  {
    MapSpec m;
    m.name = "radial_projection";
    m.source = charts::euclid3();
    m.source.box_lo = Eigen::VectorXd(3);
    m.source.box_hi = Eigen::VectorXd(3);
    m.source.box_lo << 0.5, 0.5, -1.5;
    m.source.box_hi << 1.5, 1.5, -0.5;
    m.target = charts::s2_stereo();
    m.components = detail::radial_projection_components();
    m.weight = parse("1+x^2+y^2+z^2");
    out.push_back(CatalogEntry{"radial_projection", std::move(m), {true, true, true},
                               "radial projection onto S^2; f = alpha(|x|) with alpha(t) = t^2+1"});
  }
  entry("poly_cyl", charts::cylinder3(), charts::euclid2(), {"x^2-y^2", "2*x*y"}, "exp(t)",
        {true, true, true}, "polynomial cylinder map p(z) = z^2; f = alpha(t) with alpha = exp");
  return out;
}

inline const CatalogEntry& catalog_entry(const std::vector<CatalogEntry>& cat,
                                         const std::string& key) {
  for (const auto& e : cat)
    if (e.key == key) return e;
  throw Error(ErrorCode::SchemaError, "unknown catalog key '" + key + "'");
}

}  // namespace fmorph
