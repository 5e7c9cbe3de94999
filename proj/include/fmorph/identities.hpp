#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "fmorph/verifier.hpp"

namespace fmorph {

struct IdentityRow {
  std::string suite;
  std::string subject;
  bool skipped = false;
  double max_residual = 0.0;
};

/// Conformal-rescale identity (m >= 3):
/// tau(phi; f^{2/(m-2)} g) = f^{-m/(m-2)} tau_f(phi; g), relative residual.
inline IdentityRow rescale_identity(const MapSpec& map, const SamplerConfig& cfg) {
  IdentityRow row{"c2", map.name, false, 0.0};
  const int m = map.m();
  if (m == 2) {
    row.skipped = true;  // exponent 2/(m-2) undefined
    return row;
  }
  if (!map.weight) throw Error(ErrorCode::WeightMissing, "map '" + map.name + "' has no weight");
  MapSpec rescaled = map;
  rescaled.source = conformal_scale(map.source, powx(*map.weight, num(2.0 / (m - 2))));
  PointSampler sampler(map.source, cfg.seed, cfg.domain_margin);
  for (int s = 0; s < cfg.count; ++s) {
    Eigen::VectorXd p = sampler.next_for_map(map);
    const double f = eval_real(*map.weight, real_env(map.source, p));
    Eigen::VectorXd lhs = tension(rescaled, p);
    Eigen::VectorXd rhs = std::pow(f, -double(m) / (m - 2)) * f_tension(map, p);
    const double rel = (lhs - rhs).norm() / (1.0 + rhs.norm());
    row.max_residual = std::max(row.max_residual, rel);
  }
  return row;
}

/// F-tension / p-tension / f-tension equivalence away from critical points:
/// with F(t) = (2t)^{p/2} / p all three routes must coincide.
inline IdentityRow fp_equivalence_identity(const MapSpec& map, double pexp,
                                           const SamplerConfig& cfg) {
  IdentityRow row{"c13", map.name + " (p=" + std::to_string(int(pexp)) + ")", false, 0.0};
  PointSampler sampler(map.source, cfg.seed, cfg.domain_margin);
  auto Fp = [pexp](double t) { return std::pow(2.0 * t, (pexp - 2.0) / 2.0); };
  auto Fpp = [pexp](double t) { return (pexp - 2.0) * std::pow(2.0 * t, (pexp - 4.0) / 2.0); };
  for (int s = 0; s < cfg.count; ++s) {
    Eigen::VectorXd p = sampler.next_for_map(map);
    Eigen::VectorXd tp = p_tension(map, p, pexp);
    Eigen::VectorXd tF =
        pexp == 2.0 ? tension(map, p) : F_tension(map, p, Fp, Fpp);
    // f-tension route with f = |dphi|^{p-2} supplied pointwise through jets.
    MapJet mj = map_jet(map, p);
    Jet2 e = energy_density_jet(map, p);
    Jet2 f = pow(2.0 * e, Jet2::constant((pexp - 2.0) / 2.0, map.m()));
    Eigen::VectorXd tf = f.val * tension(mj) + mj.J * (mj.src.g_inv * f.grad);
    const double scale = 1.0 + tp.norm();
    row.max_residual = std::max(row.max_residual, (tF - tp).norm() / scale);
    row.max_residual = std::max(row.max_residual, (tf - tp).norm() / scale);
  }
  return row;
}

/// Master pullback identity of the morphism characterization (the Eq.-12-style
/// check); wraps morphism_pullback_test.
inline IdentityRow pullback_identity(const MapSpec& map, int K, const SamplerConfig& cfg) {
  IdentityRow row{"eq12", map.name, false, 0.0};
  PullbackTestResult r = morphism_pullback_test(map, K, cfg);
  row.max_residual = r.max_identity_residual;
  return row;
}

/// Composition law self-consistency: direct tau_f(psi . phi) against
/// dpsi(tau_f(phi)) + f Tr_g nabla dpsi(dphi, dphi).
inline IdentityRow composition_identity(const MapSpec& phi, const MapSpec& psi,
                                        const SamplerConfig& cfg) {
  IdentityRow row{"eq13", psi.name + "." + phi.name, false, 0.0};
  PointSampler sampler(phi.source, cfg.seed, cfg.domain_margin);
  MapSpec composed = compose(psi, phi);
  for (int s = 0; s < cfg.count; ++s) {
    Eigen::VectorXd p = sampler.next_for_map(composed);
    CompositionFTension r = composition_f_tension(phi, psi, p);
    const double rel = (r.direct - r.via_identity).norm() / (1.0 + r.direct.norm());
    row.max_residual = std::max(row.max_residual, rel);
  }
  return row;
}

/// Trichotomy identity at submersive HWC points:
/// tau_f = f [ -(m-n) dphi(mu) + dphi(grad ln(f lambda^{2-n})) ].
inline IdentityRow trichotomy_identity(const MapSpec& map, const SamplerConfig& cfg) {
  IdentityRow row{"t29", map.name, false, 0.0};
  const int m = map.m(), n = map.n();
  if (m <= n || !map.weight) {
    row.skipped = true;
    return row;
  }
  PointSampler sampler(map.source, cfg.seed, cfg.domain_margin);
  for (int s = 0; s < cfg.count; ++s) {
    Eigen::VectorXd p = sampler.next_for_map(map);
    MapJet mj = map_jet(map, p);
    ConformalityReport rep = hwc_test(mj, cfg.tol_hwc);
    if (!rep.is_hwc || !rep.is_submersive || rep.is_critical) continue;
    FiberGeometry fg = fiber_geometry(map, p, cfg.tol_hwc);
    Jet2 lsq = dilation_jet(map, p, cfg.tol_hwc);
    Jet2 fj = eval_jet(*map.weight, jet_env(map.source, p));
    // grad ln(f lambda^{2-n}) = grad f / f + (2-n)/2 * grad lambda^2 / lambda^2
    Eigen::VectorXd cov = fj.grad / fj.val + ((2.0 - n) / 2.0) * lsq.grad / lsq.val;
    Eigen::VectorXd pushed = mj.J * (mj.src.g_inv * cov);
    Eigen::VectorXd tau_f = f_tension(map, p);
    Eigen::VectorXd rhs = fj.val * (-(double(m - n)) * fg.d_phi_mu + pushed);
    const double rel = (tau_f - rhs).norm() / (1.0 + tau_f.norm());
    row.max_residual = std::max(row.max_residual, rel);
  }
  return row;
}

/// Random euclidean chart pair with quadratic components and a log-linear
/// weight, for composition-law fuzzing. Deterministic in the seed.
inline std::pair<MapSpec, MapSpec> random_composition_pair(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coef(-0.5, 0.5);
  Chart a = euclidean_chart("rc_src", {"x", "y", "z"}, 1.0);
  Chart b = euclidean_chart("rc_mid", {"p", "q"}, 10.0);
  Chart c = euclidean_chart("rc_dst", {"r", "s"}, 100.0);
  auto quad = [&](const Chart& src) {
    Expr e = num(coef(rng));
    for (const auto& v : src.coords) e = add(e, mul(num(coef(rng)), var(v)));
    for (std::size_t i = 0; i < src.coords.size(); ++i)
      for (std::size_t j = i; j < src.coords.size(); ++j)
        e = add(e, mul(num(coef(rng)), mul(var(src.coords[i]), var(src.coords[j]))));
    return e;
  };
  MapSpec phi;
  phi.name = "rand_phi";
  phi.source = a;
  phi.target = b;
  phi.components = {quad(a), quad(a)};
  phi.weight = parse("exp(0.3*x-0.2*y+0.1*z)");
  MapSpec psi;
  psi.name = "rand_psi";
  psi.source = b;
  psi.target = c;
  psi.components = {quad(b), quad(b)};
  return {phi, psi};
}

/// Every suite over the shipped catalog, as the CLI presents them.
inline std::vector<IdentityRow> run_identity_suite(const std::string& suite,
                                                   const SamplerConfig& cfg, int K_eq12 = 20) {
  std::vector<IdentityRow> rows;
  auto cat = catalog();
  const bool all = suite == "all";
  if (all || suite == "c2") {
    for (const auto& e : cat) rows.push_back(rescale_identity(e.map, cfg));
  }
  if (all || suite == "c13") {
    for (const auto& e : cat)
      for (double p : {2.0, 3.0, 4.0}) rows.push_back(fp_equivalence_identity(e.map, p, cfg));
  }
  if (all || suite == "eq12") {
    for (const auto& e : cat) {
      if (!e.expected.is_hwc) continue;  // the identity presumes horizontal conformality
      rows.push_back(pullback_identity(e.map, K_eq12, cfg));
    }
  }
  if (all || suite == "eq13") {
    for (std::uint64_t i = 0; i < 5; ++i) {
      auto [phi, psi] = random_composition_pair(cfg.seed + i);
      SamplerConfig c = cfg;
      c.count = 50;
      rows.push_back(composition_identity(phi, psi, c));
    }
  }
  if (all || suite == "t29") {
    for (const auto& e : cat) {
      if (!e.expected.is_hwc) continue;
      rows.push_back(trichotomy_identity(e.map, cfg));
    }
  }
  if (rows.empty() && !all)
    throw Error(ErrorCode::SchemaError, "unknown identity suite '" + suite + "'");
  return rows;
}

}  // namespace fmorph
