#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fmorph/geometry.hpp"

namespace fmorph {

/// A map between charts: component expressions phi^alpha in the source
/// coordinates, plus an optional positive weight expression f.
struct MapSpec {
  std::string name;
  Chart source;  // dim m
  Chart target;  // dim n
  std::vector<Expr> components;  // n expressions
  std::optional<Expr> weight;

  int m() const { return source.dim(); }
  int n() const { return target.dim(); }
};

/// All pointwise raw ingredients of the map operators: Jacobian, second
/// derivatives, and metric data on both sides.
struct MapJet {
  Eigen::VectorXd point;
  Eigen::VectorXd image;
  Eigen::MatrixXd J;                  // n x m, J(a, i) = d_i phi^a
  std::vector<Eigen::MatrixXd> H;     // H[a](i, j) = d_i d_j phi^a
  MetricAtPoint src;
  MetricAtPoint tgt;
};

inline Eigen::VectorXd map_image(const MapSpec& map, const Eigen::VectorXd& p) {
  auto env = real_env(map.source, p);
  Eigen::VectorXd q(map.n());
  for (int a = 0; a < map.n(); ++a) q(a) = eval_real(map.components[a], env);
  return q;
}

inline MapJet map_jet(const MapSpec& map, const Eigen::VectorXd& p) {
  const int m = map.m(), n = map.n();
  if (!in_domain(map.source, p))
    throw Error(ErrorCode::OutOfDomain, "point outside source domain of map '" + map.name + "'");
  MapJet out;
  out.point = p;
  out.J.resize(n, m);
  out.H.assign(n, Eigen::MatrixXd::Zero(m, m));
  out.image.resize(n);
  auto env = jet_env(map.source, p);
  for (int a = 0; a < n; ++a) {
    Jet2 j = eval_jet(map.components[a], env);
    out.image(a) = j.val;
    out.J.row(a) = j.grad.transpose();
    out.H[a] = 0.5 * (j.hess + j.hess.transpose());
  }
  if (!in_domain(map.target, out.image))
    throw Error(ErrorCode::OutOfDomain, "image outside target domain of map '" + map.name + "'");
  out.src = metric_at(map.source, p, /*check_domain=*/false);
  out.tgt = metric_at(map.target, out.image, /*check_domain=*/false);
  return out;
}

/// (phi^* h)_ij = h_ab(phi(p)) d_i phi^a d_j phi^b.
inline Eigen::MatrixXd pullback_metric(const MapSpec& map, const Eigen::VectorXd& p) {
  MapJet mj = map_jet(map, p);
  return mj.J.transpose() * mj.tgt.g * mj.J;
}
inline Eigen::MatrixXd pullback_metric(const MapJet& mj) {
  return mj.J.transpose() * mj.tgt.g * mj.J;
}

/// e(phi) = |dphi|^2 / 2 = g^{ij} h_ab d_i phi^a d_j phi^b / 2.
inline double energy_density(const MapJet& mj) {
  return 0.5 * (mj.src.g_inv * (mj.J.transpose() * mj.tgt.g * mj.J)).trace();
}
inline double energy_density(const MapSpec& map, const Eigen::VectorXd& p) {
  return energy_density(map_jet(map, p));
}

/// tau^s = g^{ij} (d_i d_j phi^s - Gamma^k_ij d_k phi^s
///                 + Gbar^s_ab(phi) d_i phi^a d_j phi^b).
inline Eigen::VectorXd tension(const MapJet& mj) {
  const int m = static_cast<int>(mj.J.cols());
  const int n = static_cast<int>(mj.J.rows());
  Eigen::VectorXd tau = Eigen::VectorXd::Zero(n);
  for (int s = 0; s < n; ++s) {
    double acc = 0.0;
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) {
        double t = mj.H[s](i, j);
        for (int k = 0; k < m; ++k) t -= mj.src.christoffel[k](i, j) * mj.J(s, k);
        for (int a = 0; a < n; ++a)
          for (int b = 0; b < n; ++b)
            t += mj.tgt.christoffel[s](a, b) * mj.J(a, i) * mj.J(b, j);
        acc += mj.src.g_inv(i, j) * t;
      }
    tau(s) = acc;
  }
  return tau;
}
inline Eigen::VectorXd tension(const MapSpec& map, const Eigen::VectorXd& p) {
  return tension(map_jet(map, p));
}

/// tau_f = f tau(phi) + dphi(grad f).
inline Eigen::VectorXd f_tension(const MapSpec& map, const Eigen::VectorXd& p) {
  if (!map.weight) throw Error(ErrorCode::WeightMissing, "map '" + map.name + "' has no weight");
  MapJet mj = map_jet(map, p);
  Jet2 fj = eval_jet(*map.weight, jet_env(map.source, p));
  if (fj.val <= 0.0)
    throw Error(ErrorCode::WeightNotPositive,
                "weight of map '" + map.name + "' is not positive at sampled point");
  return fj.val * tension(mj) + mj.J * (mj.src.g_inv * fj.grad);
}

namespace detail {

/// First-derivative expressions of all components, d_i phi^a.
inline std::vector<std::vector<Expr>> component_derivatives(const MapSpec& map) {
  std::vector<std::vector<Expr>> d(map.n());
  for (int a = 0; a < map.n(); ++a) {
    d[a].reserve(map.m());
    for (int i = 0; i < map.m(); ++i)
      d[a].push_back(differentiate(map.components[a], map.source.coords[i]));
  }
  return d;
}

/// Target metric entries evaluated at phi(x), as jets in the source
/// coordinates (the chain rule happens inside eval_jet).
inline std::vector<std::vector<Jet2>> target_metric_jets_at_image(
    const MapSpec& map, const std::map<std::string, Jet2>& src_env) {
  const int n = map.n();
  std::map<std::string, Jet2> env;
  for (int a = 0; a < n; ++a)
    env[map.target.coords[a]] = eval_jet(map.components[a], src_env);
  std::vector<std::vector<Jet2>> h(n, std::vector<Jet2>(n, Jet2::constant(0.0, map.m())));
  for (int a = 0; a < n; ++a)
    for (int b = a; b < n; ++b) {
      h[a][b] = eval_jet(map.target.metric[a][b], env);
      h[b][a] = h[a][b];
    }
  return h;
}

}  // namespace detail

/// Energy density e(phi) as a jet in the source coordinates (value, gradient
/// and Hessian of e). Uses symbolic first derivatives of the components so
/// the jet pass reaches one derivative order deeper than MapJet.
inline Jet2 energy_density_jet(const MapSpec& map, const Eigen::VectorXd& p) {
  const int m = map.m(), n = map.n();
  auto env = jet_env(map.source, p);
  auto dphi = detail::component_derivatives(map);
  std::vector<std::vector<Jet2>> dj(n, std::vector<Jet2>(m, Jet2::constant(0.0, m)));
  for (int a = 0; a < n; ++a)
    for (int i = 0; i < m; ++i) dj[a][i] = eval_jet(dphi[a][i], env);
  auto ginv = jet_matrix_inverse(metric_jets(map.source, p));
  auto h = detail::target_metric_jets_at_image(map, env);
  Jet2 e = Jet2::constant(0.0, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
          e = e + ginv[i][j] * h[a][b] * dj[a][i] * dj[b][j];
  return 0.5 * e;
}

/// F-tension: F'(e) tau(phi) + dphi(grad F'(e)) with grad F'(e) = F''(e) grad e.
/// The caller supplies F' and F'' in closed form.
inline Eigen::VectorXd F_tension(const MapSpec& map, const Eigen::VectorXd& p,
                                 const std::function<double(double)>& Fprime,
                                 const std::function<double(double)>& Fsecond) {
  MapJet mj = map_jet(map, p);
  Jet2 e = energy_density_jet(map, p);
  if (2.0 * e.val < 1e-14)
    throw Error(ErrorCode::CriticalPoint, "F_tension at a critical point of '" + map.name + "'");
  Eigen::VectorXd grad_fp = Fsecond(e.val) * e.grad;  // covariant
  return Fprime(e.val) * tension(mj) + mj.J * (mj.src.g_inv * grad_fp);
}

/// p-tension: |dphi|^{p-2} tau(phi) + dphi(grad |dphi|^{p-2}).
inline Eigen::VectorXd p_tension(const MapSpec& map, const Eigen::VectorXd& p, double pexp) {
  if (pexp == 2.0) return tension(map, p);  // exact reduction
  MapJet mj = map_jet(map, p);
  Jet2 e = energy_density_jet(map, p);
  const double nd2 = 2.0 * e.val;  // |dphi|^2
  if (nd2 < 1e-14)
    throw Error(ErrorCode::CriticalPoint, "p_tension at a critical point of '" + map.name + "'");
  const double f = std::pow(nd2, (pexp - 2.0) / 2.0);
  // grad |dphi|^{p-2} = (p-2) (2e)^{(p-4)/2} grad e
  Eigen::VectorXd gf = (pexp - 2.0) * std::pow(nd2, (pexp - 4.0) / 2.0) * e.grad;
  return f * tension(mj) + mj.J * (mj.src.g_inv * gf);
}

/// Symbolic composition psi . phi (components of psi with phi substituted).
inline MapSpec compose(const MapSpec& psi, const MapSpec& phi) {
  if (phi.target.name != psi.source.name || phi.n() != psi.m())
    throw Error(ErrorCode::ChartMismatch,
                "compose: target of '" + phi.name + "' is not source of '" + psi.name + "'");
  std::map<std::string, Expr> subs;
  for (int a = 0; a < phi.n(); ++a) subs[psi.source.coords[a]] = phi.components[a];
  MapSpec out;
  out.name = psi.name + "." + phi.name;
  out.source = phi.source;
  out.target = psi.target;
  out.components.reserve(psi.n());
  for (const auto& comp : psi.components) out.components.push_back(substitute(comp, subs));
  out.weight = phi.weight;
  return out;
}

struct CompositionFTension {
  Eigen::VectorXd direct;        // tau_f(psi . phi) computed on the composed map
  Eigen::VectorXd via_identity;  // dpsi(tau_f(phi)) + f Tr_g nabla dpsi(dphi, dphi)
  Eigen::VectorXd dpsi_tau_f;    // the first term of the decomposition
  Eigen::VectorXd trace_term;    // the second term
};

/// Both sides of the composition law
/// tau_f(psi . phi) = dpsi(tau_f(phi)) + f Tr_g nabla dpsi(dphi, dphi).
inline CompositionFTension composition_f_tension(const MapSpec& phi, const MapSpec& psi,
                                                 const Eigen::VectorXd& p) {
  if (!phi.weight) throw Error(ErrorCode::WeightMissing, "map '" + phi.name + "' has no weight");
  MapSpec composed = compose(psi, phi);
  CompositionFTension out;
  out.direct = f_tension(composed, p);

  MapJet mphi = map_jet(phi, p);
  MapJet mpsi = map_jet(psi, mphi.image);
  const double f = eval_real(*phi.weight, real_env(phi.source, p));
  Eigen::VectorXd tau_f_phi = f_tension(phi, p);
  out.dpsi_tau_f = mpsi.J * tau_f_phi;

  // Second fundamental form of psi at phi(p):
  //   (nabla dpsi)^c_ab = d_a d_b psi^c - Gamma(N)^g_ab d_g psi^c
  //                       + Gamma(Q)^c_de d_a psi^d d_b psi^e
  const int n = phi.n(), l = psi.n(), m = phi.m();
  std::vector<Eigen::MatrixXd> ndd(l, Eigen::MatrixXd::Zero(n, n));
  for (int c = 0; c < l; ++c)
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        double t = mpsi.H[c](a, b);
        for (int g = 0; g < n; ++g) t -= mpsi.src.christoffel[g](a, b) * mpsi.J(c, g);
        for (int d = 0; d < l; ++d)
          for (int e = 0; e < l; ++e)
            t += mpsi.tgt.christoffel[c](d, e) * mpsi.J(d, a) * mpsi.J(e, b);
        ndd[c](a, b) = t;
      }
  out.trace_term = Eigen::VectorXd::Zero(l);
  for (int c = 0; c < l; ++c) {
    double acc = 0.0;
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j)
        for (int a = 0; a < n; ++a)
          for (int b = 0; b < n; ++b)
            acc += mphi.src.g_inv(i, j) * ndd[c](a, b) * mphi.J(a, i) * mphi.J(b, j);
    out.trace_term(c) = f * acc;
  }
  out.via_identity = out.dpsi_tau_f + out.trace_term;
  return out;
}

}  // namespace fmorph
