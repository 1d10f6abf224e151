#include "mflab/errors.hpp"
#include "mflab/green.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace mflab;

namespace {

constexpr double kPi = std::numbers::pi;

// Disk image formula G = (1/2pi) ln(|y| |x - y*| / |x - y|), y* = y / |y|^2.
double disk_image(Vec2 x, Vec2 y) {
  if (y.norm() < 1e-14) return -std::log(x.norm()) / (2 * kPi);
  const Vec2 star = y / y.squaredNorm();
  return std::log(y.norm() * (x - star).norm() / (x - y).norm()) / (2 * kPi);
}

Domain two_holes() {
  return Domain::generic(FourierCurve::circle({0, 0}, 1),
                         {FourierCurve::circle({0.5, 0}, 0.15), FourierCurve::circle({-0.5, 0}, 0.15)});
}

Vec2 fd_grad(const std::function<double(Vec2)>& f, Vec2 x, double h = 1e-6) {
  return {(f(x + Vec2(h, 0)) - f(x - Vec2(h, 0))) / (2 * h), (f(x + Vec2(0, h)) - f(x - Vec2(0, h))) / (2 * h)};
}

}  // namespace

TEST_CASE("disk values") {
  const auto g = make_green(Domain::disk(1));
  CHECK(g->method() == GreenMethod::exact_disk);
  CHECK(g->green({0, 0}, {0.5, 0}) == doctest::Approx(std::log(2.0) / (2 * kPi)).epsilon(1e-12));
  CHECK(std::abs(g->green({1 - 1e-12, 0}, {0.3, 0.2})) < 1e-8);
  CHECK(g->robin({0, 0}) == doctest::Approx(0.0));
  CHECK(g->robin({0.6, 0}) == doctest::Approx(std::log(0.64) / (2 * kPi)).epsilon(1e-12));
  std::mt19937_64 rng(1);
  for (int k = 0; k < 50; ++k) {
    const Config c = testing::random_config(Domain::disk(1), 2, rng, 1e-3);
    CHECK(g->green(point_of(c, 0), point_of(c, 1)) ==
          doctest::Approx(disk_image(point_of(c, 0), point_of(c, 1))).epsilon(1e-11));
  }
}

TEST_CASE("half-plane kernel") {
  CHECK(halfplane_green(1.0, {0, 0}, {0, 0.5}) == doctest::Approx(std::log(3.0) / (2 * kPi)).epsilon(1e-13));
  const auto g = make_green(Domain::half_plane(1));
  CHECK(g->robin({0, 0}) == doctest::Approx(std::log(2.0) / (2 * kPi)));
  CHECK(std::abs(g->green_grad({0, 0}, {0, 0.5}).x()) < 1e-14);
}

TEST_CASE("symmetry and boundary vanishing for every evaluator") {
  std::mt19937_64 rng(2);
  struct Case {
    Domain d;
    bool bie;
  };
  for (const auto& [d, bie] : {Case{Domain::disk(1), false}, Case{Domain::annulus(0.4, 1), false},
                               Case{Domain::annulus(0.4, 1), true}, Case{two_holes(), false}}) {
    const auto g = make_green(d, bie);
    double asym = 0;
    for (int k = 0; k < 100; ++k) {
      const Config c = testing::random_config(d, 2, rng, 0.02);
      const Vec2 x = point_of(c, 0), y = point_of(c, 1);
      asym = std::max(asym, std::abs(g->green(x, y) - g->green(y, x)));
      CHECK(g->green(x, y) > 0);
    }
    CHECK(asym <= 1e-8);
    const Vec2 y(0.05, 0.7);
    double edge = 0;
    for (std::size_t c = 0; c < d.curves().size(); ++c)
      for (int i = 0; i < 16; ++i) {
        const double t = 2 * kPi * (i + 0.5) / 16;
        const auto& curve = d.curves()[c];
        const Vec2 tangent = curve.d1(t).normalized();
        const Vec2 inward(-tangent.y(), tangent.x());
        edge = std::max(edge, std::abs(g->green(curve.point(t) + 1e-9 * inward, y)));
      }
    CHECK(edge <= 1e-6);
  }
}

TEST_CASE("gradients match finite differences") {
  std::mt19937_64 rng(4);
  for (const Domain& d : {Domain::disk(1), Domain::annulus(0.4, 1), two_holes()}) {
    const auto g = make_green(d);
    for (int k = 0; k < 10; ++k) {
      const Config c = testing::random_config(d, 2, rng, 0.05);
      const Vec2 x = point_of(c, 0), y = point_of(c, 1);
      const Vec2 fd = fd_grad([&](Vec2 p) { return g->green(p, y); }, x);
      CHECK((fd - g->green_grad(x, y)).norm() <= 1e-6 * std::max(1.0, fd.norm()));
      const Vec2 fr = fd_grad([&](Vec2 p) { return g->robin(p); }, x);
      CHECK((fr - g->robin_grad(x)).norm() <= 1e-6 * std::max(1.0, fr.norm()));
    }
  }
  const auto disk = make_green(Domain::disk(1));
  const Vec2 y(0.5, 0);
  const Vec2 fd = fd_grad([&](Vec2 p) { return disk_image(p, y); }, {0.25, 0});
  CHECK((disk->green_grad({0.25, 0}, y) - fd).norm() < 1e-7);
}

TEST_CASE("boundary integral solver reproduces the disk") {
  const auto exact = make_green(Domain::disk(1));
  const auto bie = make_green(Domain::disk(1), true);
  CHECK(bie->method() == GreenMethod::boundary_integral);
  const Vec2 y(0.3, -0.2);
  double worst = 0;
  for (int i = 0; i < 20; ++i)
    for (int k = 0; k < 20; ++k) {
      const double r = 0.9 * (i + 1) / 20, t = 2 * kPi * k / 20;
      const Vec2 x(r * std::cos(t), r * std::sin(t));
      worst = std::max(worst, std::abs(bie->robin(x) - exact->robin(x)));
      if ((x - y).norm() > 1e-9) worst = std::max(worst, std::abs(bie->green(x, y) - exact->green(x, y)));
    }
  CHECK(worst < 1e-6);
}

TEST_CASE("robin function approaches the half-plane value at first order") {
  const auto g = make_green(Domain::disk(1));
  std::vector<double> ds, devs;
  for (double d : {0.08, 0.04, 0.02, 0.01}) {
    ds.push_back(d);
    devs.push_back(std::abs(g->robin({1 - d, 0}) - std::log(2 * d) / (2 * kPi)));
  }
  CHECK(observed_order(ds, devs) == doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("rescaled Green data converge at first order or better") {
  const auto g = make_green(Domain::disk(1));
  std::vector<Vec2> K;
  for (int k = 0; k < 8; ++k) K.push_back({0.5 * std::cos(k * kPi / 4), 0.25 * std::sin(k * kPi / 4)});
  const std::vector<double> rs{0.08, 0.04, 0.02};
  std::vector<double> whole, half;
  for (double r : rs) {
    whole.push_back(rescaled_green_error(*g, {0.0, 0.3}, r, K, RescaleRegime::whole_plane).max_deviation);
    const auto h = rescaled_green_error(*g, {0.0, 1.0 - r}, r, K, RescaleRegime::half_plane);
    CHECK(h.ratio == doctest::Approx(1.0));
    half.push_back(h.max_deviation);
  }
  CHECK(observed_order(rs, whole) >= 0.9);
  CHECK(observed_order(rs, half) >= 0.9);
  CHECK(half[0] / half[1] == doctest::Approx(2.0).epsilon(0.15));
}

TEST_CASE("evaluation errors") {
  const auto g = make_green(Domain::disk(1));
  CHECK_THROWS_AS(g->green({1.5, 0}, {0, 0}), DomainError);
  CHECK_THROWS_AS(g->robin({1.0, 0}), DomainError);
  CHECK_THROWS_AS(g->green({0.2, 0}, {0.2, 0}), SingularConfiguration);
}
