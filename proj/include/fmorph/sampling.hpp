#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

#include "fmorph/mapcalc.hpp"

namespace fmorph {

struct SamplerConfig {
  int count = 200;
  std::uint64_t seed = 1;
  double tol_resid = 1e-8;
  double tol_hwc = 1e-8;
  double domain_margin = 1e-3;
};

/// Rejection sampler over a chart's box, honoring the domain predicate with a
/// boundary margin. For map sampling the image must be in-domain too.
class PointSampler {
 public:
  PointSampler(const Chart& chart, std::uint64_t seed, double margin = 1e-3)
      : chart_(chart), rng_(seed), margin_(margin) {}

  Eigen::VectorXd next() {
    const int m = chart_.dim();
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
      Eigen::VectorXd p(m);
      for (int i = 0; i < m; ++i)
        p(i) = chart_.box_lo(i) + (chart_.box_hi(i) - chart_.box_lo(i)) * unit_(rng_);
      if (in_domain(chart_, p, margin_)) return p;
    }
    throw Error(ErrorCode::SamplerExhausted,
                "cannot find in-domain points of chart '" + chart_.name + "'");
  }

  Eigen::VectorXd next_for_map(const MapSpec& map) {
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
      Eigen::VectorXd p = next();
      Eigen::VectorXd q = map_image(map, p);
      if (in_domain(map.target, q, margin_)) return p;
    }
    throw Error(ErrorCode::SamplerExhausted,
                "cannot find points of '" + map.name + "' with in-domain image");
  }

  std::mt19937_64& rng() { return rng_; }

 private:
  static constexpr int kMaxAttempts = 100000;
  const Chart& chart_;
  std::mt19937_64 rng_;
  double margin_;
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
};

}  // namespace fmorph
