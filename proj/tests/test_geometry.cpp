#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "fmorph/geometry.hpp"
#include "fmorph/sampling.hpp"
#include "fmorph/verifier.hpp"

using namespace fmorph;

TEST_CASE("euclidean chart has vanishing Christoffels", "[geometry]") {
  const Chart c = charts::euclid3();
  const Eigen::Vector3d p(0.3, -0.7, 1.1);
  const MetricAtPoint m = metric_at(c, p);
  CHECK(m.g.isIdentity(1e-15));
  CHECK(m.g_inv.isIdentity(1e-15));
  for (const auto& gamma : m.christoffel) CHECK(gamma.norm() == 0.0);
}

TEST_CASE("hyperbolic half-space Christoffels at (0,0,1)", "[geometry]") {
  // H^3 upper half-space, g = z^{-2} I.  [DERIVED] from the standard formulas
  // Gamma^k_ij = -(d_i ln z) d_jk - (d_j ln z) d_ik + (d_k ln z) g_ij / z^...
  // at z = 1: Gamma^3_11 = Gamma^3_22 = 1, Gamma^1_13 = Gamma^2_23 = -1,
  // Gamma^3_33 = -1, all others zero.
  const Chart c = charts::h3_halfspace();
  Eigen::Vector3d p(0.2, -0.3, 1.0);
  const MetricAtPoint m = metric_at(c, p);
  const int Z = 2;  // index of the z coordinate
  auto gamma = [&](int k, int i, int j) { return m.christoffel[k](i, j); };
  CHECK(gamma(Z, 0, 0) == Catch::Approx(1.0));
  CHECK(gamma(Z, 1, 1) == Catch::Approx(1.0));
  CHECK(gamma(Z, Z, Z) == Catch::Approx(-1.0));
  CHECK(gamma(0, 0, Z) == Catch::Approx(-1.0));
  CHECK(gamma(0, Z, 0) == Catch::Approx(-1.0));
  CHECK(gamma(1, 1, Z) == Catch::Approx(-1.0));
  CHECK(gamma(Z, 0, 1) == Catch::Approx(0.0).margin(1e-14));
  CHECK(gamma(0, 1, 1) == Catch::Approx(0.0).margin(1e-14));
}

TEST_CASE("round sphere chart at the origin", "[geometry]") {
  // Stereographic S^3 of radius 1: g = 4 I at 0 and dg = 0 by symmetry.
  const Chart c = charts::s3_round();
  const Eigen::Vector3d p = Eigen::Vector3d::Zero();
  const MetricAtPoint m = metric_at(c, p);
  CHECK((m.g - 4.0 * Eigen::Matrix3d::Identity()).norm() == Catch::Approx(0.0).margin(1e-14));
  for (const auto& gamma : m.christoffel)
    CHECK(gamma.norm() == Catch::Approx(0.0).margin(1e-13));
}

TEST_CASE("metric compatibility nabla g = 0 at random points", "[geometry][oracle]") {
  // d_k g_ij = Gamma^l_ki g_lj + Gamma^l_kj g_il must hold identically; check
  // it with jet derivatives of the metric on curved charts.
  for (const Chart& c : {charts::h3_halfspace(), charts::s3_round(), charts::s2_stereo(),
                         charts::h2_halfplane()}) {
    PointSampler sampler(c, 7);
    const int m = c.dim();
    for (int t = 0; t < 25; ++t) {
      const Eigen::VectorXd p = sampler.next();
      const MetricAtPoint at = metric_at(c, p);
      for (int k = 0; k < m; ++k)
        for (int i = 0; i < m; ++i)
          for (int j = 0; j < m; ++j) {
            double rhs = 0.0;
            for (int l = 0; l < m; ++l)
              rhs += at.christoffel[l](k, i) * at.g(l, j) + at.christoffel[l](k, j) * at.g(i, l);
            INFO(c.name << " k,i,j = " << k << i << j);
            CHECK(at.dg[k](i, j) == Catch::Approx(rhs).margin(1e-10 * (1 + at.g.norm())));
          }
    }
  }
}

TEST_CASE("non-positive-definite metric is rejected", "[geometry]") {
  Chart bad = charts::euclid2();
  bad.metric[0][0] = parse("-1");
  CHECK_THROWS_MATCHES(metric_at(bad, Eigen::Vector2d(0.1, 0.2)), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.code() == ErrorCode::NotPositiveDefinite;
                       }));
}

TEST_CASE("domain predicate enforcement", "[geometry]") {
  const Chart c = charts::h2_halfplane();  // domain t > 0
  CHECK(in_domain(c, Eigen::Vector2d(0.0, 1.0)));
  CHECK_FALSE(in_domain(c, Eigen::Vector2d(0.0, -1.0)));
  CHECK_FALSE(in_domain(c, Eigen::Vector2d(0.0, 1e-5)));  // inside margin
  CHECK_THROWS_MATCHES(metric_at(c, Eigen::Vector2d(0.0, -1.0)), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.code() == ErrorCode::OutOfDomain;
                       }));
}

TEST_CASE("gradient and Laplace-Beltrami on flat space", "[geometry]") {
  const Chart c = charts::euclid3();
  const Eigen::Vector3d p(0.5, -0.2, 0.8);
  // [DERIVED] grad(x^2 y) = (2xy, x^2, 0); Delta(x^2 y) = 2y
  const Expr u = parse("x^2*y");
  const Eigen::VectorXd g = grad_scalar(c, u, p);
  CHECK(g(0) == Catch::Approx(2 * 0.5 * -0.2));
  CHECK(g(1) == Catch::Approx(0.25));
  CHECK(g(2) == Catch::Approx(0.0).margin(1e-15));
  CHECK(laplace_beltrami(c, u, p) == Catch::Approx(-0.4));
  // harmonic function
  CHECK(laplace_beltrami(c, parse("x^2 - y^2"), p) == Catch::Approx(0.0).margin(1e-13));
}

TEST_CASE("Laplace-Beltrami on the hyperbolic plane", "[geometry]") {
  // H^2 with g = t^{-2} I: Delta u = t^2 (u_ss + u_tt).  [DERIVED]
  const Chart c = charts::h2_halfplane();
  const Eigen::Vector2d p(0.4, 0.9);
  const Expr u = parse("s^2 + log(t)");
  // u_ss + u_tt = 2 - 1/t^2, so Delta u = 2 t^2 - 1
  CHECK(laplace_beltrami(c, u, p) == Catch::Approx(2 * 0.81 - 1.0));
  // log(t) is NOT harmonic here, but s is
  CHECK(laplace_beltrami(c, parse("s"), p) == Catch::Approx(0.0).margin(1e-13));
}

TEST_CASE("f-Laplacian agrees with f Delta u + <grad f, grad u>", "[geometry][oracle]") {
  const Chart c = charts::euclid3();
  const Expr f = parse("exp(z)");
  const Expr u = parse("sin(x) * y + z^2");
  PointSampler sampler(c, 11);
  for (int t = 0; t < 30; ++t) {
    const Eigen::VectorXd p = sampler.next();
    const double lhs = f_laplacian(c, f, u, p);
    // independent oracle: Delta_f u = f Delta u + g(grad f, grad u),
    // with grad f = exp(z) grad z
    const double delta = laplace_beltrami(c, u, p);
    const double f_val = std::exp(p(2));
    const Eigen::VectorXd gf = f_val * grad_scalar(c, parse("z"), p);
    const Eigen::VectorXd gu = grad_scalar(c, u, p);
    const MetricAtPoint m = metric_at(c, p);
    const double rhs = f_val * delta + gf.transpose() * m.g * gu;
    CHECK(lhs == Catch::Approx(rhs).margin(1e-10 * (1 + std::abs(rhs))));
  }
}

TEST_CASE("f-Laplacian rejects non-positive weights", "[geometry]") {
  const Chart c = charts::euclid2();
  CHECK_THROWS_MATCHES(f_laplacian(c, parse("u"), parse("u + v"), Eigen::Vector2d(-1.0, 0.0)),
                       Error, Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.code() == ErrorCode::WeightNotPositive;
                       }));
}

TEST_CASE("conformal scaling of a chart", "[geometry]") {
  const Chart flat = charts::euclid2();
  const Chart scaled = conformal_scale(flat, parse("exp(2*u)"));
  const Eigen::Vector2d p(0.3, -0.1);
  const MetricAtPoint m = metric_at(scaled, p);
  CHECK(m.g(0, 0) == Catch::Approx(std::exp(0.6)));
  CHECK(m.g(1, 1) == Catch::Approx(std::exp(0.6)));
  CHECK(m.g(0, 1) == 0.0);
  // The scaled flat plane has the Christoffels of a conformal metric:
  // Gamma^1_11 = d_u(ln e^{2u}) / ... = 1, Gamma^1_22 = -1, Gamma^2_12 = 1.
  CHECK(m.christoffel[0](0, 0) == Catch::Approx(1.0));
  CHECK(m.christoffel[0](1, 1) == Catch::Approx(-1.0));
  CHECK(m.christoffel[1](0, 1) == Catch::Approx(1.0));
}

TEST_CASE("log(z) Laplacian regression on the half-space", "[geometry]") {
  // On flat R^3 restricted to z > 0: Delta log z = -1/z^2.  [DERIVED]
  const Chart c = charts::euclid3_halfspace();
  const Eigen::Vector3d p(0.4, 0.2, 0.7);
  CHECK(laplace_beltrami(c, parse("log(z)"), p) == Catch::Approx(-1.0 / 0.49));
}

TEST_CASE("sampler respects box and domain with margin", "[geometry]") {
  const Chart c = charts::euclid3_punctured();  // |x|^2 > 0.25 required
  PointSampler sampler(c, 3);
  for (int t = 0; t < 200; ++t) {
    const Eigen::VectorXd p = sampler.next();
    CHECK(p.squaredNorm() > 0.25);
    for (int i = 0; i < 3; ++i) {
      CHECK(p(i) >= c.box_lo(i));
      CHECK(p(i) <= c.box_hi(i));
    }
  }
  // determinism: same seed, same stream
  PointSampler a(c, 42), b(c, 42);
  for (int t = 0; t < 10; ++t) CHECK(a.next() == b.next());
}
