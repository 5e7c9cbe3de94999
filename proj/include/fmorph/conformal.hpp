#pragma once

#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "fmorph/mapcalc.hpp"

namespace fmorph {

/// Pointwise horizontal-weak-conformality report.
/// T_ab = g(grad phi^a, grad phi^b) is compared against lambda^2 h^{ab}(phi).
struct ConformalityReport {
  Eigen::VectorXd point;
  Eigen::MatrixXd T;        // n x n
  Eigen::MatrixXd h_inv;    // n x n at phi(p)
  double lambda_sq = 0.0;
  double hwc_residual = 0.0;  // ||T - lambda^2 h_inv||_F / ||T||_F
  int rank = 0;
  std::vector<Eigen::VectorXd> vertical_basis;    // g-orthonormal, m - rank vectors
  std::vector<Eigen::VectorXd> horizontal_basis;  // g-orthonormal, rank vectors
  bool is_critical = false;
  bool is_hwc = false;
  bool is_submersive = false;
  bool indeterminate = false;  // ||T|| between the critical cutoff and tol
};

namespace detail {

constexpr double kRankCutoff = 1e-9;  // singular values below cutoff * sigma_max count as kernel

}  // namespace detail

inline ConformalityReport hwc_test(const MapJet& mj, double tol = 1e-8) {
  const int m = static_cast<int>(mj.J.cols());
  const int n = static_cast<int>(mj.J.rows());
  ConformalityReport r;
  r.point = mj.point;
  r.h_inv = mj.tgt.g_inv;
  r.T = mj.J * mj.src.g_inv * mj.J.transpose();

  // Bases via SVD of the Jacobian expressed in orthonormal frames on both
  // sides: B = Lh^T J L^{-T} with g = L L^T and h = Lh Lh^T.
  Eigen::LLT<Eigen::MatrixXd> lltg(mj.src.g), llth(mj.tgt.g);
  Eigen::MatrixXd L = lltg.matrixL();
  Eigen::MatrixXd Lh = llth.matrixL();
  Eigen::MatrixXd B = Lh.transpose() * mj.J *
                      L.transpose().triangularView<Eigen::Upper>().solve(
                          Eigen::MatrixXd::Identity(m, m));
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(B, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double smax = sv.size() ? sv(0) : 0.0;
  r.rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > detail::kRankCutoff * smax && smax > 0.0) ++r.rank;
  r.is_submersive = (r.rank == n);
  // Columns of L^{-T} V are g-orthonormal; the trailing m - rank span ker J.
  Eigen::MatrixXd V = L.transpose().triangularView<Eigen::Upper>().solve(svd.matrixV());
  for (int i = 0; i < m; ++i) {
    if (i < r.rank)
      r.horizontal_basis.push_back(V.col(i));
    else
      r.vertical_basis.push_back(V.col(i));
  }

  const double tnorm = r.T.norm();
  const double critical_cutoff = 1e-10 * (1.0 + mj.src.g_inv.norm());
  if (tnorm < critical_cutoff) {
    // Paper's convention: lambda = 0 at critical points.
    r.is_critical = true;
    r.lambda_sq = 0.0;
    r.hwc_residual = 0.0;
    r.is_hwc = true;
    return r;
  }
  const double wnorm2 = r.h_inv.squaredNorm();
  r.lambda_sq = (r.T.cwiseProduct(r.h_inv)).sum() / wnorm2;
  r.hwc_residual = (r.T - r.lambda_sq * r.h_inv).norm() / tnorm;
  r.is_hwc = (r.hwc_residual <= tol) && (r.lambda_sq > 0.0);
  if (tnorm < tol * (1.0 + mj.src.g_inv.norm())) r.indeterminate = true;
  return r;
}

inline ConformalityReport hwc_test(const MapSpec& map, const Eigen::VectorXd& p,
                                   double tol = 1e-8) {
  return hwc_test(map_jet(map, p), tol);
}

/// lambda^2 as a jet in the source coordinates: the Frobenius fit
/// lambda^2 = <T, W> / <W, W> with T and W composed through jets.
/// Only meaningful where the map is HWC in a neighborhood; refuses otherwise.
inline Jet2 dilation_jet(const MapSpec& map, const Eigen::VectorXd& p, double tol = 1e-8) {
  ConformalityReport rep = hwc_test(map, p, tol);
  if (!rep.is_hwc || rep.is_critical)
    throw Error(ErrorCode::NotHWC,
                "dilation jet of '" + map.name + "' requested at a non-HWC or critical point");
  const int m = map.m(), n = map.n();
  auto env = jet_env(map.source, p);
  auto dphi = detail::component_derivatives(map);
  std::vector<std::vector<Jet2>> dj(n, std::vector<Jet2>(m, Jet2::constant(0.0, m)));
  for (int a = 0; a < n; ++a)
    for (int i = 0; i < m; ++i) dj[a][i] = eval_jet(dphi[a][i], env);
  auto ginv = jet_matrix_inverse(metric_jets(map.source, p));
  auto w = jet_matrix_inverse(detail::target_metric_jets_at_image(map, env));

  std::vector<std::vector<Jet2>> t(n, std::vector<Jet2>(n, Jet2::constant(0.0, m)));
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) t[a][b] = t[a][b] + ginv[i][j] * dj[a][i] * dj[b][j];

  Jet2 tw = Jet2::constant(0.0, m), ww = Jet2::constant(0.0, m);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      tw = tw + t[a][b] * w[a][b];
      ww = ww + w[a][b] * w[a][b];
    }
  return tw / ww;
}

struct HomothetyReport {
  bool is_homothetic = false;
  double horiz_grad_norm = 0.0;
  double lambda_sq = 0.0;
};

/// Horizontal homothety: grad lambda^2 must be vertical.
inline HomothetyReport horizontal_homothety_test(const MapSpec& map, const Eigen::VectorXd& p,
                                                 double tol = 1e-8) {
  ConformalityReport rep = hwc_test(map, p, tol);
  if (!rep.is_hwc || rep.is_critical)
    throw Error(ErrorCode::NotHWC, "homothety test requires an HWC non-critical point");
  Jet2 lsq = dilation_jet(map, p, tol);
  MetricAtPoint mp = metric_at(map.source, p);
  Eigen::VectorXd grad = mp.g_inv * lsq.grad;  // contravariant
  double acc = 0.0;
  for (const auto& x : rep.horizontal_basis) {
    const double c = x.transpose() * mp.g * grad;  // g(grad lambda^2, X)
    acc += c * c;
  }
  HomothetyReport out;
  out.lambda_sq = lsq.val;
  out.horiz_grad_norm = std::sqrt(acc);
  out.is_homothetic = out.horiz_grad_norm <= tol * (1.0 + std::abs(lsq.val));
  return out;
}

/// Fiber mean-curvature pushforward, recovered from the HWC tension formula
/// tau(phi) = -(m - n) dphi(mu) + (2 - n) dphi(grad ln lambda).
struct FiberGeometry {
  Eigen::VectorXd point;
  Eigen::VectorXd d_phi_mu;                     // target vector
  Eigen::VectorXd grad_ln_lambda_pushforward;   // dphi(grad ln lambda)
  double minimal_fiber_residual = 0.0;          // ||d_phi_mu||_h
};

inline FiberGeometry fiber_geometry(const MapSpec& map, const Eigen::VectorXd& p,
                                    double tol = 1e-8) {
  const int m = map.m(), n = map.n();
  if (m == n)
    throw Error(ErrorCode::EqualDimensions, "fiber geometry is undefined for m == n");
  MapJet mj = map_jet(map, p);
  ConformalityReport rep = hwc_test(mj, tol);
  if (!rep.is_submersive)
    throw Error(ErrorCode::NotSubmersive, "fiber geometry requires a submersive point");
  if (!rep.is_hwc || rep.is_critical)
    throw Error(ErrorCode::NotHWC, "fiber geometry requires an HWC point");
  Jet2 lsq = dilation_jet(map, p, tol);
  // grad ln lambda = grad lambda^2 / (2 lambda^2)
  Eigen::VectorXd gll = mj.src.g_inv * lsq.grad / (2.0 * lsq.val);
  Eigen::VectorXd tau = tension(mj);
  FiberGeometry out;
  out.point = p;
  out.grad_ln_lambda_pushforward = mj.J * gll;
  out.d_phi_mu =
      ((2.0 - n) * out.grad_ln_lambda_pushforward - tau) / static_cast<double>(m - n);
  out.minimal_fiber_residual =
      std::sqrt(out.d_phi_mu.transpose() * mj.tgt.g * out.d_phi_mu);
  return out;
}

/// Conformal-immersion analysis (m <= n):
/// tau_f(phi) = f [m lambda^2 eta + dphi(grad ln(lambda^{2-m} f))]
/// splits into the part normal to dphi(T_pM) (the eta term) and the
/// tangential remainder.
struct ImmersionReport {
  bool is_conformal_immersion = false;
  double lambda_sq = 0.0;
  double conformality_residual = 0.0;
  Eigen::VectorXd eta;         // mean-curvature vector estimate (normal part / (m lambda^2 f))
  Eigen::VectorXd tangential;  // tangential part of tau_f
};

inline ImmersionReport conformal_immersion_analysis(const MapSpec& map, const Eigen::VectorXd& p,
                                                    double tol = 1e-8) {
  const int m = map.m(), n = map.n();
  if (m > n) throw Error(ErrorCode::NotImmersion, "immersion analysis needs m <= n");
  MapJet mj = map_jet(map, p);
  Eigen::MatrixXd pb = pullback_metric(mj);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(mj.J);
  const auto& sv = svd.singularValues();
  if (sv(sv.size() - 1) <= detail::kRankCutoff * sv(0))
    throw Error(ErrorCode::NotImmersion, "Jacobian is rank-deficient at sampled point");

  ImmersionReport out;
  // lambda^2 fit on the pullback side: <phi^*h, g> / <g, g>.
  out.lambda_sq = pb.cwiseProduct(mj.src.g).sum() / mj.src.g.squaredNorm();
  out.conformality_residual = (pb - out.lambda_sq * mj.src.g).norm() / mj.src.g.norm();
  out.is_conformal_immersion = out.conformality_residual <= tol && out.lambda_sq > 0.0;

  Eigen::VectorXd tau_f = map.weight ? f_tension(map, p) : tension(mj);
  const double f = map.weight ? eval_real(*map.weight, real_env(map.source, p)) : 1.0;
  // h-orthogonal projection onto the column span of J.
  Eigen::MatrixXd JtHJ = mj.J.transpose() * mj.tgt.g * mj.J;
  Eigen::VectorXd coef = JtHJ.ldlt().solve(mj.J.transpose() * mj.tgt.g * tau_f);
  out.tangential = mj.J * coef;
  Eigen::VectorXd normal = tau_f - out.tangential;
  out.eta = normal / (m * out.lambda_sq * f);
  return out;
}

}  // namespace fmorph
