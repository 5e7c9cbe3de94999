#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fmorph/error.hpp"
#include "fmorph/expr.hpp"

namespace fmorph {

// Discrete inhomogeneous Heisenberg spin system on a flat rectangular lattice
// (1D chain or 2D grid), with unit spins u into S^2 handled extrinsically in
// R^3. The discrete weighted Dirichlet energy uses edge-midpoint weights
// f_e = (f_a + f_b)/2, and the residual r below is exactly minus the discrete
// energy gradient per unit cell volume, which ties the minimizer to the
// stationarity test.

enum class NodeState : std::uint8_t { Inactive = 0, Interior = 1, Fixed = 2 };
enum class BoundaryKind : std::uint8_t { Dirichlet, Periodic };

struct SpinField {
  int nx = 0, ny = 1;      // ny == 1 means a 1D chain
  double hx = 1.0, hy = 1.0;
  BoundaryKind boundary = BoundaryKind::Dirichlet;
  std::vector<Eigen::Vector3d> u;   // nx * ny node values, row-major (ix + nx*iy)
  std::vector<double> f;            // per-node positive weights
  std::vector<NodeState> state;

  bool is_1d() const { return ny == 1; }
  int idx(int ix, int iy) const { return ix + nx * iy; }
  int size() const { return nx * ny; }

  /// Node coordinates; the grid is centered at the origin.
  Eigen::Vector2d coord(int ix, int iy) const {
    const double x0 = -0.5 * (nx - 1) * hx;
    const double y0 = -0.5 * (ny - 1) * hy;
    return {x0 + ix * hx, is_1d() ? 0.0 : y0 + iy * hy};
  }

  double cell_volume() const { return is_1d() ? hx : hx * hy; }

  void renormalize() {
    for (auto& v : u) {
      const double n = v.norm();
      if (!(n > 0.0) || !std::isfinite(n))
        throw Error(ErrorCode::BlowUp, "non-finite or zero spin during renormalization");
      v /= n;
    }
  }
};

struct SolveTraceRow {
  int iteration = 0;
  double energy = 0.0;
  double max_residual = 0.0;
  double step = 0.0;
};
using SolveTrace = std::vector<SolveTraceRow>;

namespace detail {

/// Visits every lattice edge between non-inactive nodes: callback(a, b, h).
template <class F>
void for_each_edge(const SpinField& fld, F&& cb) {
  const bool periodic = fld.boundary == BoundaryKind::Periodic;
  for (int iy = 0; iy < fld.ny; ++iy)
    for (int ix = 0; ix < fld.nx; ++ix) {
      const int a = fld.idx(ix, iy);
      if (fld.state[a] == NodeState::Inactive) continue;
      // +x neighbor
      if (ix + 1 < fld.nx) {
        const int b = fld.idx(ix + 1, iy);
        if (fld.state[b] != NodeState::Inactive) cb(a, b, fld.hx);
      } else if (periodic) {
        cb(a, fld.idx(0, iy), fld.hx);
      }
      // +y neighbor
      if (!fld.is_1d()) {
        if (iy + 1 < fld.ny) {
          const int b = fld.idx(ix, iy + 1);
          if (fld.state[b] != NodeState::Inactive) cb(a, b, fld.hy);
        } else if (periodic) {
          cb(a, fld.idx(ix, 0), fld.hy);
        }
      }
    }
}

}  // namespace detail

/// Discrete f-energy: 1/2 sum_edges f_mid |u_b - u_a|^2 / h^2 * cell volume.
inline double f_energy(const SpinField& fld) {
  double acc = 0.0;
  detail::for_each_edge(fld, [&](int a, int b, double h) {
    const double fmid = 0.5 * (fld.f[a] + fld.f[b]);
    acc += 0.5 * fmid * (fld.u[b] - fld.u[a]).squaredNorm() / (h * h);
  });
  return acc * fld.cell_volume();
}

/// Residual r_a = sum_{b ~ a} f_mid (u_b - u_a) / h^2 at interior nodes;
/// this is the divergence-form discretization of f Delta u + grad f . grad u
/// and exactly -1/V times the discrete energy gradient. Zero at fixed and
/// inactive nodes.
inline std::vector<Eigen::Vector3d> residual_field(const SpinField& fld) {
  std::vector<Eigen::Vector3d> r(fld.size(), Eigen::Vector3d::Zero());
  detail::for_each_edge(fld, [&](int a, int b, double h) {
    const double w = 0.5 * (fld.f[a] + fld.f[b]) / (h * h);
    const Eigen::Vector3d d = fld.u[b] - fld.u[a];
    r[a] += w * d;
    r[b] -= w * d;
  });
  for (int i = 0; i < fld.size(); ++i)
    if (fld.state[i] != NodeState::Interior) r[i].setZero();
  return r;
}

/// Right-hand side of the spin evolution equation, u x (f Delta u + grad f . grad u),
/// in its discrete divergence form u x r.
inline std::vector<Eigen::Vector3d> llg_rhs(const SpinField& fld) {
  std::vector<Eigen::Vector3d> r = residual_field(fld);
  for (int i = 0; i < fld.size(); ++i) r[i] = fld.u[i].cross(r[i]);
  return r;
}

struct TangentialResidual {
  std::vector<Eigen::Vector3d> r_t;
  double max_norm = 0.0;
};

/// r_T = r - (r . u) u, the tangential part of the residual. For unit spins
/// |u x r| = |r_T| nodewise, the discrete form of the stationarity test.
inline TangentialResidual tangential_residual(const SpinField& fld) {
  TangentialResidual out;
  out.r_t = residual_field(fld);
  for (int i = 0; i < fld.size(); ++i) {
    out.r_t[i] -= out.r_t[i].dot(fld.u[i]) * fld.u[i];
    if (fld.state[i] == NodeState::Interior)
      out.max_norm = std::max(out.max_norm, out.r_t[i].norm());
  }
  return out;
}

struct MinimizeOptions {
  int max_iter = 50000;
  double tol = 1e-6;
  double step0 = 0.0;  // 0 = choose from the stencil scale
  double armijo_c = 1e-4;
  double shrink = 0.5;
  int trace_every = 1;
};

/// Projected gradient descent on the discrete f-energy with Armijo
/// backtracking; the energy trace is non-increasing by construction.
inline SolveTrace minimize(SpinField& fld, const MinimizeOptions& opts = {}) {
  for (int i = 0; i < fld.size(); ++i)
    if (fld.state[i] != NodeState::Inactive && !(fld.f[i] > 0.0))
      throw Error(ErrorCode::NonPositiveWeight, "spin weight must be positive at active nodes");

  double fmax = 0.0;
  for (int i = 0; i < fld.size(); ++i)
    if (fld.state[i] != NodeState::Inactive) fmax = std::max(fmax, fld.f[i]);
  const double stencil = 1.0 / (fld.hx * fld.hx) + (fld.is_1d() ? 0.0 : 1.0 / (fld.hy * fld.hy));
  double step = opts.step0 > 0.0 ? opts.step0 : 1.0 / (4.0 * fmax * stencil);

  SolveTrace trace;
  const double vol = fld.cell_volume();
  double energy = f_energy(fld);
  for (int iter = 0; iter <= opts.max_iter; ++iter) {
    TangentialResidual tr = tangential_residual(fld);
    const bool done = tr.max_norm <= opts.tol || iter == opts.max_iter;
    if (iter % opts.trace_every == 0 || done) trace.push_back({iter, energy, tr.max_norm, step});
    if (done) return trace;

    double gsq = 0.0;
    for (int i = 0; i < fld.size(); ++i) gsq += tr.r_t[i].squaredNorm();
    gsq *= vol;

    const std::vector<Eigen::Vector3d> u0 = fld.u;
    double eta = step;
    for (;;) {
      for (int i = 0; i < fld.size(); ++i) {
        if (fld.state[i] != NodeState::Interior) continue;
        Eigen::Vector3d v = u0[i] + eta * tr.r_t[i];
        fld.u[i] = v / v.norm();
      }
      const double trial = f_energy(fld);
      if (trial <= energy - opts.armijo_c * eta * gsq) {
        energy = trial;
        step = std::min(eta * 1.5, 1.0 / (0.5 * fmax * stencil));
        break;
      }
      eta *= opts.shrink;
      if (eta < 1e-16) {
        fld.u = u0;
        throw Error(ErrorCode::StepUnderflow, "line search step fell below 1e-16");
      }
    }
  }
  return trace;
}

/// Explicit RK4 on du/dt = u x r with per-step renormalization. Fixed and
/// inactive nodes never move.
inline SolveTrace evolve(SpinField& fld, double dt, int steps, int trace_every = 1) {
  SolveTrace trace;
  auto rhs_of = [&](const std::vector<Eigen::Vector3d>& u) {
    SpinField tmp = fld;
    tmp.u = u;
    return llg_rhs(tmp);
  };
  auto axpy = [&](const std::vector<Eigen::Vector3d>& u, double a,
                  const std::vector<Eigen::Vector3d>& k) {
    std::vector<Eigen::Vector3d> out = u;
    for (int i = 0; i < fld.size(); ++i)
      if (fld.state[i] == NodeState::Interior) out[i] += a * k[i];
    return out;
  };
  for (int s = 0; s < steps; ++s) {
    if (s % trace_every == 0)
      trace.push_back({s, f_energy(fld), tangential_residual(fld).max_norm, dt});
    auto k1 = rhs_of(fld.u);
    auto k2 = rhs_of(axpy(fld.u, 0.5 * dt, k1));
    auto k3 = rhs_of(axpy(fld.u, 0.5 * dt, k2));
    auto k4 = rhs_of(axpy(fld.u, dt, k3));
    for (int i = 0; i < fld.size(); ++i) {
      if (fld.state[i] != NodeState::Interior) continue;
      fld.u[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
      const double n = fld.u[i].norm();
      if (!std::isfinite(n) || n == 0.0)
        throw Error(ErrorCode::BlowUp, "non-finite spin at step " + std::to_string(s));
      fld.u[i] /= n;
    }
  }
  trace.push_back({steps, f_energy(fld), tangential_residual(fld).max_norm, dt});
  return trace;
}

// --- Construction -------------------------------------------------------------

struct SpinConfig {
  int nx = 0, ny = 1;
  double hx = 1.0, hy = 1.0;
  std::string domain = "square";  // "square" | "disk"
  Expr f_expr;
  BoundaryKind boundary = BoundaryKind::Dirichlet;
  Eigen::Vector3d boundary_value{0.0, 0.0, 1.0};
  std::string init = "random";  // "random" | "constant"
  std::vector<Expr> init_exprs;  // optional expression triple
  std::uint64_t seed = 1;
};

inline SpinField build_spin_field(const SpinConfig& cfg) {
  SpinField fld;
  fld.nx = cfg.nx;
  fld.ny = cfg.ny;
  fld.hx = cfg.hx;
  fld.hy = cfg.hy;
  fld.boundary = cfg.boundary;
  fld.u.assign(fld.size(), Eigen::Vector3d::UnitZ());
  fld.f.assign(fld.size(), 1.0);
  fld.state.assign(fld.size(), NodeState::Interior);

  const double Rx = 0.5 * (fld.nx - 1) * fld.hx;
  const bool disk = cfg.domain == "disk";
  if (disk && cfg.boundary == BoundaryKind::Periodic)
    throw Error(ErrorCode::SchemaError, "periodic boundary is only supported on square domains");

  // Activity mask.
  for (int iy = 0; iy < fld.ny; ++iy)
    for (int ix = 0; ix < fld.nx; ++ix) {
      Eigen::Vector2d p = fld.coord(ix, iy);
      if (disk && p.norm() > Rx + 1e-12) fld.state[fld.idx(ix, iy)] = NodeState::Inactive;
    }
  // Dirichlet boundary: active nodes with a missing or inactive neighbor.
  if (cfg.boundary == BoundaryKind::Dirichlet) {
    for (int iy = 0; iy < fld.ny; ++iy)
      for (int ix = 0; ix < fld.nx; ++ix) {
        const int a = fld.idx(ix, iy);
        if (fld.state[a] == NodeState::Inactive) continue;
        auto missing = [&](int jx, int jy) {
          if (jx < 0 || jx >= fld.nx || jy < 0 || jy >= fld.ny) return true;
          return fld.state[fld.idx(jx, jy)] == NodeState::Inactive;
        };
        bool rim = missing(ix - 1, iy) || missing(ix + 1, iy);
        if (!fld.is_1d()) rim = rim || missing(ix, iy - 1) || missing(ix, iy + 1);
        if (rim) fld.state[a] = NodeState::Fixed;
      }
  }

  // Weights and initial values.
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int iy = 0; iy < fld.ny; ++iy)
    for (int ix = 0; ix < fld.nx; ++ix) {
      const int a = fld.idx(ix, iy);
      if (fld.state[a] == NodeState::Inactive) continue;
      Eigen::Vector2d p = fld.coord(ix, iy);
      std::map<std::string, double> env{{"x", p.x()}, {"y", p.y()}};
      fld.f[a] = eval_real(cfg.f_expr, env);
      if (!(fld.f[a] > 0.0))
        throw Error(ErrorCode::NonPositiveWeight, "coupling f must be positive on the grid");
      if (fld.state[a] == NodeState::Fixed) {
        fld.u[a] = cfg.boundary_value.normalized();
      } else if (!cfg.init_exprs.empty()) {
        Eigen::Vector3d v;
        for (int c = 0; c < 3; ++c) v(c) = eval_real(cfg.init_exprs[c], env);
        fld.u[a] = v.normalized();
      } else if (cfg.init == "constant") {
        fld.u[a] = cfg.boundary_value.normalized();
      } else {
        Eigen::Vector3d v{gauss(rng), gauss(rng), gauss(rng)};
        while (v.norm() < 1e-8) v = {gauss(rng), gauss(rng), gauss(rng)};
        fld.u[a] = v.normalized();
      }
    }
  return fld;
}

}  // namespace fmorph
