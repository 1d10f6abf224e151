#include "mflab/errors.hpp"
#include "mflab/shooting.hpp"

#include <doctest.h>

#include <boost/math/special_functions/bessel.hpp>

#include <cmath>
#include <numbers>

using namespace mflab;

namespace {
constexpr double kFourPi = 4 * std::numbers::pi;
}

TEST_CASE("small amplitude limit is the first eigenvalue") {
  const double j01 = boost::math::cyl_bessel_j_zero(0.0, 1);
  const RadialSolution s = shoot(0.01, 2.0);
  CHECK(s.lambda == doctest::Approx(j01 * j01 / 2).epsilon(1e-3));
  CHECK(s.beta < 1e-2);
}

TEST_CASE("profiles: endpoints and monotonicity") {
  for (double p : {1.5, 2.0})
    for (double gamma : {0.5, 2.0, 6.0, 12.0}) {
      const RadialSolution s = shoot(gamma, p);
      CHECK(s.decreasing);
      CHECK(s.r.front() == 0.0);
      CHECK(s.u.front() == doctest::Approx(gamma).epsilon(1e-12));
      CHECK(s.r.back() == 1.0);
      CHECK(std::abs(s.u.back()) < 1e-10);
      for (std::size_t k = 1; k < s.u.size(); ++k) CHECK(s.u[k] < s.u[k - 1]);
    }
}

TEST_CASE("energy identity for p = 2") {
  for (double gamma : {0.5, 2.0, 6.0, 12.0, 30.0}) {
    const RadialSolution s = shoot(gamma, 2.0);
    CHECK(std::abs(s.beta - s.beta_def) <= 1e-8 * s.beta);
  }
  CHECK(shoot(6.0, 2.0).beta > kFourPi);
}

TEST_CASE("lambda-hat normalization leaves beta unchanged") {
  ShootOptions o;
  o.lambda_hat = 4.0;
  for (double gamma : {1.0, 6.0}) {
    const RadialSolution a = shoot(gamma, 2.0), b = shoot(gamma, 2.0, o);
    CHECK(std::abs(a.beta - b.beta) <= 1e-10 * a.beta);
    CHECK(a.lambda == doctest::Approx(b.lambda).epsilon(1e-10));
  }
}

TEST_CASE("bubble and direct variables agree") {
  ShootOptions direct;
  direct.variables = ShootingVariables::direct;
  for (double p : {1.5, 2.0})
    for (double gamma : {1.0, 3.0, 6.0}) {
      const RadialSolution a = shoot(gamma, p), b = shoot(gamma, p, direct);
      CHECK(a.beta == doctest::Approx(b.beta).epsilon(1e-9));
      CHECK(a.lambda == doctest::Approx(b.lambda).epsilon(1e-9));
    }
  CHECK_THROWS_AS(shoot(15.0, 2.0, direct), RegimeError);
}

TEST_CASE("integrator tolerance is converged") {
  ShootOptions tight;
  tight.rtol /= 2;
  tight.atol /= 2;
  CHECK(std::abs(shoot(6.0, 2.0).beta - shoot(6.0, 2.0, tight).beta) < 1e-9);
}

TEST_CASE("parallel and serial beta curves agree exactly") {
  const auto grid = log_spaced(0.5, 20.0, 24);
  const BetaCurve a = beta_curve(grid, 2.0), b = beta_curve_reference(grid, 2.0);
  REQUIRE(a.rows.size() == b.rows.size());
  for (std::size_t k = 0; k < a.rows.size(); ++k) {
    CHECK(a.rows[k].beta == b.rows[k].beta);
    CHECK(a.rows[k].lambda == b.rows[k].lambda);
  }
  CHECK(a.max_index == b.max_index);
}

TEST_CASE("beta is bounded on the disk and returns toward 4 pi") {
  const BetaCurve c = beta_curve(log_spaced(0.1, 10.0, 60), 2.0);
  CHECK(c.interior_max);
  CHECK(std::isfinite(c.rows[c.max_index].beta_def));
  const BetaCurve tail = beta_curve(log_spaced(4.0, 8.0, 17), 2.0);
  for (std::size_t k = 1; k < tail.rows.size(); ++k) {
    CHECK(tail.rows[k].beta_def < tail.rows[k - 1].beta_def);
    CHECK(tail.rows[k].excess > 0);
  }
}

TEST_CASE("excess decay rate tends to -2p on far windows") {
  double prev = 1e9;
  for (double lo : {4.0, 8.0, 16.0, 32.0}) {
    const ExcessFit f = excess_energy_fit(beta_curve(log_spaced(lo, 2 * lo, 17), 2.0), 2.0);
    CHECK(f.expected_slope == -4.0);
    CHECK(f.expected_constant == doctest::Approx(kFourPi));
    CHECK(std::abs(f.slope - f.expected_slope) < prev);
    prev = std::abs(f.slope - f.expected_slope);
  }
  CHECK(prev < 0.02 * 4);
}

TEST_CASE("p = 1.5: excess positive from gamma = 6, fit refuses a window with a deficit") {
  const BetaCurve upper = beta_curve(log_spaced(6.0, 8.0, 9), 1.5);
  for (const auto& r : upper.rows) CHECK(r.excess > 0);
  const ExcessFit f = excess_energy_fit(upper, 1.5);
  CHECK(f.expected_slope == -3.0);
  CHECK(f.expected_constant == doctest::Approx(kFourPi * 8 / 9));
  CHECK_THROWS_AS(excess_energy_fit(beta_curve(log_spaced(4.0, 8.0, 17), 1.5), 1.5), RegimeError);
}

TEST_CASE("no zero before the radius cap") {
  ShootOptions o;
  o.r_max = 1e-3;
  CHECK_THROWS_AS(shoot(1.0, 2.0, o), NoZeroCrossing);
}
