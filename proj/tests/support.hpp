#pragma once

#include "mflab/geometry.hpp"
#include "mflab/routh.hpp"

#include <random>

namespace testing {

using mflab::Config;
using mflab::Vec2;

// Rejection sample of n points with boundary and pair distances above margin.
inline Config random_config(const mflab::Domain& d, int n, std::mt19937_64& rng, double margin = 0.05) {
  const auto box = d.bounding_box();
  std::uniform_real_distribution<double> ux(box[0].x(), box[1].x()), uy(box[0].y(), box[1].y());
  Config c(2 * n);
  for (int i = 0; i < n;) {
    const Vec2 p(ux(rng), uy(rng));
    if (!d.contains(p) || d.distance_to_boundary(p) <= margin) continue;
    bool apart = true;
    for (int j = 0; j < i; ++j) apart = apart && (p - mflab::point_of(c, j)).norm() > margin;
    if (!apart) continue;
    c.segment<2>(2 * i) = p;
    ++i;
  }
  return c;
}

// Central differences of the value; relative error against the analytic gradient.
inline double gradient_mismatch(const mflab::PointField& f, const Config& c, double step = 1e-6) {
  const Eigen::VectorXd g = f.gradient(c);
  double worst = 0;
  for (int k = 0; k < c.size(); ++k) {
    Config p = c, m = c;
    p[k] += step;
    m[k] -= step;
    const double fd = (f.value(p) - f.value(m)) / (2 * step);
    worst = std::max(worst, std::abs(fd - g[k]) / std::max(1.0, std::abs(g[k])));
  }
  return worst;
}

inline double hessian_mismatch(const mflab::PointField& f, const Config& c, double step = 1e-5) {
  const Eigen::MatrixXd h = f.hessian(c);
  const Eigen::MatrixXd fd = mflab::fd_hessian(f, c, step);
  return (h - fd).norm() / std::max(1.0, h.norm());
}

}  // namespace testing
