#include "mflab/errors.hpp"
#include "mflab/routh.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace mflab;

namespace {

constexpr double kPi = std::numbers::pi;

WeightProfile tilted(int n) {
  WeightProfile w = WeightProfile::standard(n);
  w.h = WeightFunction::linear({0.05, 0.02});
  return w;
}

// Point at distance dist from the outer circle of the annulus, at angle t.
Vec2 near_outer(double dist, double t) { return (1.0 - dist) * Vec2(std::cos(t), std::sin(t)); }

}  // namespace

TEST_CASE("phi on the disk, closed values") {
  const auto g = make_green(Domain::disk(1));
  const auto f = phi_field(*g, 1, WeightProfile::standard(1));
  const Config origin = Config::Zero(2);
  CHECK(f->value(origin) == doctest::Approx(0.0));
  CHECK(f->gradient(origin).norm() < 1e-14);
  CHECK(f->value(make_config(std::vector<Vec2>{{0.6, 0}})) == doctest::Approx(2 * std::log(0.64)).epsilon(1e-12));
}

TEST_CASE("phi is exchange symmetric for equal weights") {
  const auto g = make_green(Domain::annulus(0.4, 1));
  const auto f = phi_field(*g, 3, tilted(3));
  std::mt19937_64 rng(7);
  for (int k = 0; k < 20; ++k) {
    Config c = testing::random_config(g->domain(), 3, rng);
    Config swapped = c;
    swapped.segment<2>(0) = c.segment<2>(2);
    swapped.segment<2>(2) = c.segment<2>(0);
    CHECK(f->value(swapped) == doctest::Approx(f->value(c)).epsilon(1e-13));
  }
}

TEST_CASE("field derivatives match finite differences") {
  std::mt19937_64 rng(11);
  const Domain ann = Domain::annulus(0.4, 1);
  const auto exact = make_green(ann);
  const auto bie = make_green(ann, true);
  const auto th = RegionThresholds::defaults(ann.inradius());
  const auto b = BendingProfile::from(th);

  SUBCASE("phi, exact and boundary integral") {
    for (int t = 0; t < 2; ++t) {
      const auto& g = t == 0 ? exact : bie;
      const auto f = phi_field(*g, 2, tilted(2), 0.5);
      for (int k = 0; k < (t == 0 ? 100 : 10); ++k) {
        const Config c = testing::random_config(ann, 2, rng);
        CHECK(testing::gradient_mismatch(*f, c) < 1e-6);
        const Eigen::MatrixXd h = f->hessian(c);
        CHECK((h - h.transpose()).norm() <= 1e-8 * std::max(1.0, h.norm()));
        if (t == 0) CHECK(testing::hessian_mismatch(*f, c) < 1e-5);
      }
    }
  }
  SUBCASE("bent field inside the bending band") {
    const auto f = bent_phi_field(*exact, 2, b, tilted(2));
    for (int k = 0; k < 100; ++k) {
      Config c = testing::random_config(ann, 2, rng);
      c.segment<2>(0) = near_outer(b.delta_tilde * (0.2 + 0.4 * (k % 10) / 10.0), 0.3 * k);
      if (!f->admissible(c)) continue;
      CHECK(testing::gradient_mismatch(*f, c, 1e-8) < 1e-5);
      CHECK(testing::hessian_mismatch(*f, c, 1e-7) < 1e-4);
    }
  }
  SUBCASE("strip fields") {
    const auto sf = strip_fields(*exact, 2, b, tilted(2));
    for (int k = 0; k < 100; ++k) {
      Config c(4);
      c.segment<2>(0) = near_outer(b.delta_prime * (0.5 + 1.4 * (k % 7) / 7.0), 0.1 * k);
      c.segment<2>(2) = near_outer(b.delta_prime * (0.3 + 1.5 * (k % 5) / 5.0), 0.1 * k + 2.0);
      CHECK(testing::gradient_mismatch(*sf.psi, c, 1e-8) < 1e-5);
      CHECK(testing::gradient_mismatch(*sf.hat_phi, c, 1e-8) < 1e-5);
    }
  }
  SUBCASE("limiting functionals") {
    XiGeometry geo;
    geo.scale = 0.5;
    for (auto v : {XiVariant::plane, XiVariant::halfspace_plus, XiVariant::halfspace_minus, XiVariant::hat_halfspace,
                   XiVariant::mixed_phi}) {
      const auto f = xi_field(v, 3, geo, WeightProfile::standard(3));
      for (int k = 0; k < 100; ++k) {
        const Config c = sample_xi_config(v, 3, geo, rng);
        CHECK(testing::gradient_mismatch(*f, c, 1e-7) < 1e-5);
        CHECK(testing::hessian_mismatch(*f, c, 1e-6) < 1e-4);
      }
    }
  }
}

TEST_CASE("bending coincides exactly away from the boundary") {
  const Domain ann = Domain::annulus(0.4, 1);
  const auto g = make_green(ann);
  const auto b = BendingProfile::from(RegionThresholds::defaults(ann.inradius()));
  const auto plain = phi_field(*g, 2, tilted(2));
  const auto bent = bent_phi_field(*g, 2, b, tilted(2));
  std::mt19937_64 rng(13);
  for (int k = 0; k < 100; ++k) {
    const Config c = testing::random_config(ann, 2, rng, b.delta_tilde / 2);
    const auto a = plain->evaluate(c, Need::gradient), s = bent->evaluate(c, Need::gradient);
    CHECK(a.value == s.value);
    CHECK(a.grad == s.grad);
  }
}

TEST_CASE("bent self term flips sign next to the boundary") {
  const Domain disk = Domain::disk(1);
  const auto g = make_green(disk);
  const auto b = BendingProfile::from(RegionThresholds::defaults(disk.inradius()));
  const auto bent = bent_phi_field(*g, 1, b, WeightProfile::standard(1));
  const Vec2 x(1.0 - 0.2 * b.delta_tilde, 0.0);
  CHECK(bent->value(make_config(std::vector<Vec2>{x})) == doctest::Approx(-4 * kPi * g->robin(x)).epsilon(1e-12));
  // and grows without bound
  const Vec2 closer(1.0 - 1e-6, 0.0);
  CHECK(bent->value(make_config(std::vector<Vec2>{closer})) > bent->value(make_config(std::vector<Vec2>{x})));
}

TEST_CASE("cutoff plateaus and monotonicity") {
  CHECK(bend_cutoff(0.1).v == -1.0);
  CHECK(bend_cutoff(0.25).v == -1.0);
  CHECK(bend_cutoff(0.5).v == 1.0);
  CHECK(bend_cutoff(3.0).v == 1.0);
  CHECK(strip_barrier(0.5).v == 0.0);
  CHECK(strip_barrier(1.0).v == 0.0);
  CHECK(strip_barrier(1.7).v == doctest::Approx(std::log(1 / 0.3)));
  double prev_tau = -2, prev_sigma = -1;
  for (double t = 0; t < 1.999; t += 0.001) {
    CHECK(bend_cutoff(t).v >= prev_tau);
    CHECK(strip_barrier(t).v >= prev_sigma);
    prev_tau = bend_cutoff(t).v;
    prev_sigma = strip_barrier(t).v;
  }
  CHECK_THROWS_AS(strip_barrier(2.0), SingularConfiguration);
}

TEST_CASE("strip fields: plateau and barrier") {
  const Domain ann = Domain::annulus(0.4, 1);
  const auto g = make_green(ann);
  const auto b = BendingProfile::from(RegionThresholds::defaults(ann.inradius()));
  const auto sf = strip_fields(*g, 1, b, WeightProfile::standard(1));
  const auto bent = bent_phi_field(*g, 1, b, WeightProfile::standard(1));
  const Config in_band = make_config(std::vector<Vec2>{near_outer(0.9 * b.delta_prime, 0.4)});
  CHECK(sf.hat_phi->value(in_band) == doctest::Approx(bent->value(in_band)).epsilon(1e-14));
  const Config edge = make_config(std::vector<Vec2>{near_outer(2 * b.delta_prime * (1 - 1e-9), 0.4)});
  CHECK(sf.hat_phi->value(edge) - bent->value(edge) > 15.0);
}

TEST_CASE("limiting functionals: hand-computed gradients") {
  XiGeometry geo;
  const auto plane = xi_field(XiVariant::plane, 2, geo, WeightProfile::uniform(2, 1, 1, 1));
  const Eigen::VectorXd g = plane->gradient(make_config(std::vector<Vec2>{{0, 0}, {1, 0}}));
  CHECK(g[0] == doctest::Approx(2.0));
  CHECK(g[1] == doctest::Approx(0.0));

  const auto plus = xi_field(XiVariant::halfspace_plus, 1, geo, WeightProfile::uniform(1, 1, 1, 1));
  const Eigen::VectorXd gp = plus->gradient(make_config(std::vector<Vec2>{{0, 0}}));
  // d/dy (1/2pi) ln(2 (L - y)) at y = 0, L = 1
  CHECK(gp[1] == doctest::Approx(-1.0 / (2 * kPi)));

  const auto hat = xi_field(XiVariant::hat_halfspace, 1, geo, WeightProfile::uniform(1, 1, 1, 1));
  std::mt19937_64 rng(17);
  for (int k = 0; k < 100; ++k) {
    const Config c = sample_xi_config(XiVariant::hat_halfspace, 1, geo, rng);
    CHECK(hat->gradient(c).norm() >= 1.0 / (c[1] + geo.hat_offset) - 1e-12);
  }
}

TEST_CASE("limiting functionals never vanish and certificates hold") {
  XiGeometry geo;
  geo.scale = 0.5;
  std::mt19937_64 rng(19);
  for (auto v : {XiVariant::plane, XiVariant::halfspace_plus, XiVariant::halfspace_minus, XiVariant::hat_halfspace,
                 XiVariant::mixed_phi})
    for (int j = (v == XiVariant::plane ? 2 : 1); j <= 3; ++j) {
      const auto f = xi_field(v, j, geo, WeightProfile::standard(j));
      int violations = 0;
      for (int k = 0; k < 2000; ++k) {
        const XiCertificate cert = xi_certificate(v, *f, sample_xi_config(v, j, geo, rng));
        violations += !cert.holds || !(cert.grad_norm > 0);
      }
      CHECK(violations == 0);
    }
}

TEST_CASE("singular configurations and bad weights are rejected") {
  const auto g = make_green(Domain::disk(1));
  const auto f = phi_field(*g, 2, WeightProfile::standard(2));
  CHECK_THROWS_AS(f->value(make_config(std::vector<Vec2>{{0.1, 0}, {0.1, 0}})), SingularConfiguration);
  CHECK_THROWS_AS(f->value(make_config(std::vector<Vec2>{{1.5, 0}, {0.1, 0}})), SingularConfiguration);
  WeightProfile w = WeightProfile::standard(2);
  w.beta[0] = -1;
  CHECK_THROWS_AS(w.validate(2), std::invalid_argument);
  CHECK_THROWS_AS(xi_field(XiVariant::plane, 1, {}, WeightProfile::standard(1)), std::invalid_argument);
}
