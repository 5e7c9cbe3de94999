#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "fmorph/identities.hpp"
#include "fmorph/mapcalc.hpp"
#include "fmorph/sampling.hpp"
#include "fmorph/verifier.hpp"

using namespace fmorph;

namespace {

MapSpec make_map(std::string name, Chart src, Chart tgt, std::vector<std::string> comps,
                 const char* weight = nullptr) {
  MapSpec m;
  m.name = std::move(name);
  m.source = std::move(src);
  m.target = std::move(tgt);
  for (const auto& c : comps) m.components.push_back(parse(c));
  if (weight) m.weight = parse(weight);
  return m;
}

double h_norm(const MapSpec& map, const Eigen::VectorXd& p, const Eigen::VectorXd& v) {
  const MetricAtPoint tgt = metric_at(map.target, map_image(map, p));
  return std::sqrt((v.transpose() * tgt.g * v)(0));
}

}  // namespace

TEST_CASE("map_jet of psi = (3x, xy)", "[mapcalc]") {
  // [DERIVED] J = [[3,0],[y,x]], H[0] = 0, H[1] = [[0,1],[1,0]]
  const MapSpec psi =
      make_map("psi", euclidean_chart("e2", {"x", "y"}), charts::euclid2(), {"3*x", "x*y"});
  const Eigen::Vector2d p(0.5, -1.2);
  const MapJet mj = map_jet(psi, p);
  CHECK(mj.image(0) == Catch::Approx(1.5));
  CHECK(mj.image(1) == Catch::Approx(-0.6));
  CHECK(mj.J(0, 0) == 3.0);
  CHECK(mj.J(0, 1) == 0.0);
  CHECK(mj.J(1, 0) == Catch::Approx(-1.2));
  CHECK(mj.J(1, 1) == Catch::Approx(0.5));
  CHECK(mj.H[0].norm() == 0.0);
  CHECK(mj.H[1](0, 1) == 1.0);
  CHECK(mj.H[1](1, 0) == 1.0);
  CHECK(mj.H[1](0, 0) == 0.0);
}

TEST_CASE("pullback metric and energy density", "[mapcalc]") {
  // Mobius inversion x -> x/|x|^2 on flat R^3: phi* delta = |x|^{-4} delta,
  // so at |x| = 2 the pullback is (1/16) I and lambda = 1/4.  [DERIVED]
  const MapSpec mob = make_map("mobius", charts::euclid3_punctured(), charts::euclid3(),
                               {"x/(x^2+y^2+z^2)", "y/(x^2+y^2+z^2)", "z/(x^2+y^2+z^2)"});
  const Eigen::Vector3d p(2.0 / std::sqrt(3.0), 2.0 / std::sqrt(3.0), 2.0 / std::sqrt(3.0));
  REQUIRE(p.norm() == Catch::Approx(2.0));
  const Eigen::MatrixXd pb = pullback_metric(mob, p);
  CHECK((pb - Eigen::Matrix3d::Identity() / 16.0).norm() == Catch::Approx(0.0).margin(1e-12));
  // e = (1/2) tr(g^{-1} phi* h) = (3/2) lambda^2
  CHECK(energy_density(mob, p) == Catch::Approx(1.5 / 16.0));
  // identity map has e = m/2
  const MapSpec ident =
      make_map("id", charts::euclid3(), euclidean_chart("euclid3", {"a", "b", "c"}),
               {"x", "y", "z"});
  CHECK(energy_density(ident, Eigen::Vector3d(0.1, 0.2, 0.3)) == Catch::Approx(1.5));
}

TEST_CASE("tension of flat-space maps", "[mapcalc]") {
  const Chart e2 = euclidean_chart("e2", {"x", "y"});
  // [DERIVED] tau(x^2, y) = (Delta x^2, Delta y) = (2, 0)
  const MapSpec q = make_map("q", e2, charts::euclid2(), {"x^2", "y"});
  const Eigen::VectorXd tau = tension(q, Eigen::Vector2d(0.4, 0.1));
  CHECK(tau(0) == Catch::Approx(2.0));
  CHECK(tau(1) == Catch::Approx(0.0).margin(1e-14));
  // holomorphic => harmonic between flat spaces
  const MapSpec hol = make_map("hol", e2, charts::euclid2(), {"x^2 - y^2", "2*x*y"});
  CHECK(tension(hol, Eigen::Vector2d(0.7, -0.3)).norm() == Catch::Approx(0.0).margin(1e-13));
}

TEST_CASE("tension picks up target Christoffels", "[mapcalc]") {
  // Inclusion of a horocycle-like line into H^2: phi(s) = (s, 1).
  // tau^k = -Gamma^k_11 with Gamma^2_11 = 1/t = 1 at t = 1, so tau = (0, 1)
  // against the flat source line.  [DERIVED]
  Chart line;
  line.name = "line";
  line.coords = {"s"};
  line.metric = {{num(1.0)}};
  line.box_lo = Eigen::VectorXd::Constant(1, -2.0);
  line.box_hi = Eigen::VectorXd::Constant(1, 2.0);
  const MapSpec incl = make_map("horo", line, charts::h2_halfplane(), {"s", "1"});
  Eigen::VectorXd p(1);
  p << 0.3;
  const Eigen::VectorXd tau = tension(incl, p);
  CHECK(tau(0) == Catch::Approx(0.0).margin(1e-14));
  CHECK(tau(1) == Catch::Approx(1.0));
}

TEST_CASE("f-tension: weighted first example", "[mapcalc]") {
  // phi(x, y, z) = (x, y) with f = exp(z): tau = 0 and dphi(grad f) = 0, so
  // tau_f = 0 although f is non-constant.
  const MapSpec proj =
      make_map("proj", charts::euclid3(), charts::euclid2(), {"x", "y"}, "exp(z)");
  PointSampler sampler(proj.source, 5);
  for (int t = 0; t < 20; ++t) {
    const Eigen::VectorXd p = sampler.next();
    CHECK(f_tension(proj, p).norm() == Catch::Approx(0.0).margin(1e-12));
  }
  // but with a weight depending on x it is NOT f-harmonic:
  const MapSpec bad = make_map("projx", charts::euclid3(), charts::euclid2(), {"x", "y"}, "exp(x)");
  const Eigen::Vector3d p0(0.2, -0.4, 0.6);
  // tau_f = f tau + dphi(grad f) = (exp(x), 0)
  const Eigen::VectorXd tf = f_tension(bad, p0);
  CHECK(tf(0) == Catch::Approx(std::exp(0.2)));
  CHECK(tf(1) == Catch::Approx(0.0).margin(1e-13));
}

TEST_CASE("f_tension requires a weight", "[mapcalc]") {
  const MapSpec noweight = make_map("nw", charts::euclid3(), charts::euclid2(), {"x", "y"});
  CHECK_THROWS_MATCHES(f_tension(noweight, Eigen::Vector3d(0.1, 0.1, 0.1)), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.code() == ErrorCode::WeightMissing;
                       }));
}

TEST_CASE("p-tension and F-tension agree with the f-route", "[mapcalc][oracle]") {
  const MapSpec hol = make_map("hol", euclidean_chart("e2", {"x", "y"}), charts::euclid2(),
                               {"x^2 - y^2 + x", "2*x*y"});
  PointSampler sampler(hol.source, 9);
  for (double pexp : {2.0, 3.0, 4.0}) {
    for (int t = 0; t < 10; ++t) {
      const Eigen::VectorXd p = sampler.next();
      const Eigen::VectorXd via_p = p_tension(hol, p, pexp);
      // F(t) = (2t)^{p/2} / p gives the same Euler-Lagrange operator
      const auto Fp = [pexp](double e) { return std::pow(2 * e, (pexp - 2.0) / 2.0); };
      const auto Fpp = [pexp](double e) {
        return (pexp - 2.0) * std::pow(2 * e, (pexp - 4.0) / 2.0);
      };
      const Eigen::VectorXd via_F = F_tension(hol, p, Fp, Fpp);
      CHECK((via_p - via_F).norm() == Catch::Approx(0.0).margin(1e-10 * (1 + via_p.norm())));
    }
  }
  // p = 2 reduces exactly to the tension
  const Eigen::Vector2d p0(0.3, 0.4);
  CHECK((p_tension(hol, p0, 2.0) - tension(hol, p0)).norm() == 0.0);
}

TEST_CASE("F-tension rejects critical points", "[mapcalc]") {
  const MapSpec cst = make_map("cst", charts::euclid2(), charts::euclid2(), {"1", "2"});
  CHECK_THROWS_MATCHES(p_tension(cst, Eigen::Vector2d(0.1, 0.2), 4.0), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.code() == ErrorCode::CriticalPoint;
                       }));
}

TEST_CASE("compose substitutes symbolically and matches pointwise", "[mapcalc]") {
  const MapSpec phi = make_map("phi", charts::euclid3(), charts::euclid2(), {"x + y", "y*z"});
  const MapSpec psi =
      make_map("psi", charts::euclid2(), euclidean_chart("e2t", {"w1", "w2"}), {"u^2", "u - v"});
  const MapSpec comp = compose(psi, phi);
  CHECK(comp.m() == 3);
  CHECK(comp.n() == 2);
  const Eigen::Vector3d p(0.2, -0.5, 1.1);
  const Eigen::VectorXd direct = map_image(comp, p);
  const Eigen::VectorXd chained = map_image(psi, map_image(phi, p));
  CHECK((direct - chained).norm() == Catch::Approx(0.0).margin(1e-14));

  // chart mismatch is rejected
  const MapSpec wrong = make_map("w", charts::euclid3(), charts::euclid2(), {"x", "y", "z"});
  CHECK_THROWS_MATCHES(compose(wrong, phi), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.code() == ErrorCode::ChartMismatch;
                       }));
}

TEST_CASE("composition law for the f-tension at 50 random points", "[mapcalc][oracle]") {
  const MapSpec phi = make_map("phi", charts::euclid3(), charts::euclid2(),
                               {"x + 0.3*y*z", "y - 0.2*x^2"}, "exp(0.3*x - 0.2*y + 0.1*z)");
  const MapSpec psi = make_map("psi", charts::euclid2(), charts::s2_stereo(),
                               {"0.4*u + 0.1*v^2", "0.3*v - 0.2*u*v"});
  PointSampler sampler(phi.source, 13);
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    const Eigen::VectorXd p = sampler.next_for_map(phi);
    const CompositionFTension ct = composition_f_tension(phi, psi, p);
    const double denom = 1.0 + ct.direct.norm();
    worst = std::max(worst, (ct.direct - ct.via_identity).norm() / denom);
    CHECK((ct.via_identity - ct.dpsi_tau_f - ct.trace_term).norm() ==
          Catch::Approx(0.0).margin(1e-12 * denom));
  }
  CHECK(worst <= 1e-9);
}

TEST_CASE("composing with the identity preserves the f-tension", "[mapcalc]") {
  const MapSpec phi = make_map("phi", charts::euclid3(), charts::euclid2(), {"x*y", "z^2"},
                               "1 + x^2");
  const MapSpec ident =
      make_map("id2", charts::euclid2(), euclidean_chart("e2i", {"a", "b"}), {"u", "v"});
  PointSampler sampler(phi.source, 17);
  for (int t = 0; t < 10; ++t) {
    const Eigen::VectorXd p = sampler.next();
    const CompositionFTension ct = composition_f_tension(phi, ident, p);
    CHECK((ct.direct - f_tension(phi, p)).norm() == Catch::Approx(0.0).margin(1e-11));
    CHECK(ct.trace_term.norm() == Catch::Approx(0.0).margin(1e-11));
  }
}

TEST_CASE("post-composing a morphism with a rotation stays f-harmonic", "[mapcalc]") {
  // radial projection composed with a target rotation (an isometry) must keep
  // tau_f = 0, since nabla d(psi) = 0 for isometric linear maps of flat space.
  std::vector<CatalogEntry> cat = catalog();
  const CatalogEntry& rp = catalog_entry(cat, "radial_projection");
  // round-sphere chart in rotated coordinates; rotation about the pole axis
  // preserves s^2 + t^2, so this is an isometry of the target
  Chart s2_rot;
  s2_rot.name = "s2_stereo_rot";
  s2_rot.coords = {"w1", "w2"};
  Expr w = parse("4/(1+w1^2+w2^2)^2");
  s2_rot.metric = {{w, num(0.0)}, {num(0.0), w}};
  s2_rot.box_lo = Eigen::VectorXd::Constant(2, -3.0);
  s2_rot.box_hi = Eigen::VectorXd::Constant(2, 3.0);
  const MapSpec rot = make_map("rot", rp.map.target, s2_rot,
                               {"0.6*" + rp.map.target.coords[0] + " - 0.8*" + rp.map.target.coords[1],
                                "0.8*" + rp.map.target.coords[0] + " + 0.6*" + rp.map.target.coords[1]});
  PointSampler sampler(rp.map.source, 23);
  for (int t = 0; t < 10; ++t) {
    const Eigen::VectorXd p = sampler.next_for_map(rp.map);
    const CompositionFTension ct = composition_f_tension(rp.map, rot, p);
    CHECK(h_norm(rp.map, p, Eigen::VectorXd::Zero(2)) == 0.0);  // sanity on helper
    CHECK(ct.direct.norm() == Catch::Approx(0.0).margin(1e-9));
  }
}
