#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fmorph/expr.hpp"

namespace fmorph {

/// A single Riemannian coordinate patch: named coordinates, metric entries as
/// expressions in those coordinates, and an optional domain predicate
/// (inside iff predicate > 0). `box_lo`/`box_hi` bound the sampling region.
struct Chart {
  std::string name;
  std::vector<std::string> coords;
  std::vector<std::vector<Expr>> metric;  // m x m, symmetric
  std::optional<Expr> domain;
  Eigen::VectorXd box_lo, box_hi;
  std::string description;

  int dim() const { return static_cast<int>(coords.size()); }
};

/// Euclidean chart helper: identity metric on the given coordinates.
inline Chart euclidean_chart(std::string name, std::vector<std::string> coords, double box = 2.0) {
  Chart c;
  c.name = std::move(name);
  c.coords = std::move(coords);
  const int m = c.dim();
  c.metric.assign(m, std::vector<Expr>(m, num(0.0)));
  for (int i = 0; i < m; ++i) c.metric[i][i] = num(1.0);
  c.box_lo = Eigen::VectorXd::Constant(m, -box);
  c.box_hi = Eigen::VectorXd::Constant(m, box);
  return c;
}

inline std::map<std::string, double> real_env(const Chart& c, const Eigen::VectorXd& p) {
  std::map<std::string, double> env;
  for (int i = 0; i < c.dim(); ++i) env[c.coords[i]] = p(i);
  return env;
}

/// Coordinate-seeded jet environment of dimension m at point p.
inline std::map<std::string, Jet2> jet_env(const Chart& c, const Eigen::VectorXd& p) {
  std::map<std::string, Jet2> env;
  const int m = c.dim();
  for (int i = 0; i < m; ++i) env[c.coords[i]] = Jet2::variable(p(i), m, i);
  return env;
}

/// Domain predicate with a safety margin (> margin counts as inside).
inline bool in_domain(const Chart& c, const Eigen::VectorXd& p, double margin = 1e-3) {
  if (!c.domain) return true;
  return eval_real(*c.domain, real_env(c, p)) > margin;
}

/// Metric-level data at one point: g, its inverse, first derivatives of g,
/// and the Christoffel symbols of the Levi-Civita connection.
struct MetricAtPoint {
  Eigen::VectorXd point;
  Eigen::MatrixXd g;
  Eigen::MatrixXd g_inv;
  std::vector<Eigen::MatrixXd> dg;           // dg[k](i,j) = d_k g_ij
  std::vector<Eigen::MatrixXd> christoffel;  // christoffel[k](i,j) = Gamma^k_ij
};

/// Metric entries as jets (value + first + second derivatives).
inline std::vector<std::vector<Jet2>> metric_jets(const Chart& c, const Eigen::VectorXd& p) {
  const int m = c.dim();
  auto env = jet_env(c, p);
  std::vector<std::vector<Jet2>> g(m, std::vector<Jet2>(m, Jet2::constant(0.0, m)));
  for (int i = 0; i < m; ++i)
    for (int j = i; j < m; ++j) {
      g[i][j] = eval_jet(c.metric[i][j], env);
      if (j != i) {
        // g must be symmetric as a matrix of expressions; evaluate the lower
        // entry too and check numerically.
        Jet2 lower = eval_jet(c.metric[j][i], env);
        if (lower.val != g[i][j].val)
          throw Error(ErrorCode::SchemaError,
                      "metric of chart '" + c.name + "' is not symmetric");
        g[j][i] = g[i][j];
      }
    }
  return g;
}

inline MetricAtPoint metric_at(const Chart& c, const Eigen::VectorXd& p, bool check_domain = true) {
  const int m = c.dim();
  if (check_domain && !in_domain(c, p))
    throw Error(ErrorCode::OutOfDomain, "point outside domain of chart '" + c.name + "'");

  auto gj = metric_jets(c, p);
  MetricAtPoint out;
  out.point = p;
  out.g.resize(m, m);
  out.dg.assign(m, Eigen::MatrixXd::Zero(m, m));
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      out.g(i, j) = gj[i][j].val;
      for (int k = 0; k < m; ++k) out.dg[k](i, j) = gj[i][j].grad(k);
    }

  Eigen::LLT<Eigen::MatrixXd> llt(out.g);
  if (llt.info() != Eigen::Success)
    throw Error(ErrorCode::NotPositiveDefinite,
                "metric of chart '" + c.name + "' is not positive definite at sampled point");
  out.g_inv = llt.solve(Eigen::MatrixXd::Identity(m, m));

  // Gamma^k_ij = 1/2 g^{kl} (d_i g_jl + d_j g_il - d_l g_ij)
  out.christoffel.assign(m, Eigen::MatrixXd::Zero(m, m));
  for (int k = 0; k < m; ++k)
    for (int i = 0; i < m; ++i)
      for (int j = i; j < m; ++j) {
        double s = 0.0;
        for (int l = 0; l < m; ++l)
          s += out.g_inv(k, l) * (out.dg[i](j, l) + out.dg[j](i, l) - out.dg[l](i, j));
        out.christoffel[k](i, j) = 0.5 * s;
        out.christoffel[k](j, i) = out.christoffel[k](i, j);
      }
  return out;
}

/// Contravariant gradient: (grad u)^i = g^{ij} d_j u.
inline Eigen::VectorXd grad_scalar(const Chart& c, const Expr& u, const Eigen::VectorXd& p) {
  MetricAtPoint mp = metric_at(c, p);
  Jet2 uj = eval_jet(u, jet_env(c, p));
  return mp.g_inv * uj.grad;
}

/// Laplace-Beltrami: Delta u = g^{ij} (d_i d_j u - Gamma^k_ij d_k u).
inline double laplace_beltrami(const Chart& c, const Expr& u, const Eigen::VectorXd& p) {
  const int m = c.dim();
  MetricAtPoint mp = metric_at(c, p);
  Jet2 uj = eval_jet(u, jet_env(c, p));
  double acc = 0.0;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      double corr = 0.0;
      for (int k = 0; k < m; ++k) corr += mp.christoffel[k](i, j) * uj.grad(k);
      acc += mp.g_inv(i, j) * (uj.hess(i, j) - corr);
    }
  return acc;
}

/// Weighted Laplacian: f * Delta u + g(grad f, grad u).
inline double f_laplacian(const Chart& c, const Expr& f, const Expr& u, const Eigen::VectorXd& p) {
  const int m = c.dim();
  MetricAtPoint mp = metric_at(c, p);
  auto env = jet_env(c, p);
  Jet2 fj = eval_jet(f, env);
  if (fj.val <= 0.0)
    throw Error(ErrorCode::WeightNotPositive, "weight is not positive at sampled point");
  Jet2 uj = eval_jet(u, env);
  double lap = 0.0, cross = 0.0;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      double corr = 0.0;
      for (int k = 0; k < m; ++k) corr += mp.christoffel[k](i, j) * uj.grad(k);
      lap += mp.g_inv(i, j) * (uj.hess(i, j) - corr);
      cross += mp.g_inv(i, j) * fj.grad(i) * uj.grad(j);
    }
  return fj.val * lap + cross;
}

/// New chart with metric entries factor * g_ij. The factor is supplied
/// already exponentiated by the caller.
inline Chart conformal_scale(const Chart& c, const Expr& factor) {
  Chart out = c;
  out.name = c.name + "*scaled";
  for (auto& row : out.metric)
    for (auto& entry : row) entry = mul(factor, entry);
  return out;
}

}  // namespace fmorph
