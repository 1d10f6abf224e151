#include "mflab/shooting.hpp"

#include "mflab/errors.hpp"

#include <boost/numeric/odeint.hpp>

#include <array>
#include <cmath>
#include <exception>
#include <numbers>

namespace mflab {

namespace odeint = boost::numeric::odeint;

namespace {

constexpr double kPi = std::numbers::pi;
using State = std::array<double, 5>;  // unknown, its s-derivative, energy, two constraint integrals
// The tail is nearly linear in s for hundreds of units and then bends within
// O(1) of the zero; unbounded steps jump straight over the bend.
constexpr double kMaxStep = 0.25;

struct Shot {
  double s_zero = 0.0;
  State end{};
  bool decreasing = true;
  std::vector<double> s, u;
};

// Integrates from s0 until g(y) = y[0] - target changes sign in the increasing
// direction of `sign * y[0]`, then pins the crossing by Newton on exact restarts.
template <class Rhs, class ToU>
Shot integrate_to_zero(const Rhs& rhs, const ToU& to_u, State y0, double s0, double s_max, double target, double sign,
                       const ShootOptions& o) {
  auto g = [&](const State& y) { return sign * (y[0] - target); };
  auto stepper = odeint::make_dense_output(o.atol, o.rtol, kMaxStep, odeint::runge_kutta_dopri5<State>());
  stepper.initialize(y0, s0, 1e-3);
  Shot shot;
  shot.s.push_back(s0);
  shot.u.push_back(to_u(y0));
  for (;;) {
    stepper.do_step(rhs);
    const State& yb = stepper.current_state();
    if (g(yb) >= 0.0) break;
    if (sign * yb[1] <= 0.0) shot.decreasing = false;
    shot.s.push_back(stepper.current_time());
    shot.u.push_back(to_u(yb));
    if (stepper.current_time() > s_max) throw NoZeroCrossing("no zero of u before r_max");
  }
  const double sa = stepper.previous_time();
  const State ya = stepper.previous_state();
  double lo = sa, hi = stepper.current_time();
  State tmp;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * (1.0 + std::abs(hi)); ++it) {
    double mid = 0.5 * (lo + hi);
    stepper.calc_state(mid, tmp);
    (g(tmp) < 0.0 ? lo : hi) = mid;
  }
  double sz = 0.5 * (lo + hi);
  State y{};
  for (int it = 0; it < 4; ++it) {
    y = ya;
    if (sz > sa)
      odeint::integrate_adaptive(odeint::make_controlled(o.atol, o.rtol, kMaxStep, odeint::runge_kutta_dopri5<State>()), rhs, y,
                                 sa, sz, 0.25 * (sz - sa));
    double step = g(y) / (sign * y[1]);
    sz -= step;
    if (std::abs(step) < 1e-15 * (1.0 + std::abs(sz))) break;
  }
  y = ya;
  odeint::integrate_adaptive(odeint::make_controlled(o.atol, o.rtol, kMaxStep, odeint::runge_kutta_dopri5<State>()), rhs, y, sa,
                             sz, 0.25 * (sz - sa));
  shot.s_zero = sz;
  shot.end = y;
  shot.s.push_back(sz);
  shot.u.push_back(0.0);
  return shot;
}

RadialSolution finish(const Shot& shot, double gamma, double p) {
  RadialSolution r;
  r.gamma = gamma;
  r.p = p;
  r.decreasing = shot.decreasing;
  r.r.reserve(shot.s.size() + 1);
  // the series start sits just off the axis; the center value is exact
  r.r.push_back(0.0);
  r.u.push_back(gamma);
  for (std::size_t i = 0; i < shot.s.size(); ++i) {
    r.r.push_back(std::exp(shot.s[i] - shot.s_zero));
    r.u.push_back(shot.u[i]);
  }
  r.r.back() = 1.0;
  return r;
}

// (p^2/2) X^((2-p)/p) Y^(2(p-1)/p) in logs.
double constraint_beta(double p, double log_x, double log_y) {
  return std::exp(std::log(p * p / 2.0) + (2.0 - p) / p * log_x + 2.0 * (p - 1.0) / p * log_y);
}

RadialSolution shoot_bubble(double gamma, double p, const ShootOptions& o) {
  const double gp = std::pow(gamma, p);
  const double lg = std::log(gamma);
  const double scale = 2.0 / (p * std::pow(gamma, p - 1.0));  // u = gamma - scale * w
  auto to_u = [&](const State& y) { return gamma - scale * y[0]; };
  auto rhs = [&](const State& y, State& dy, double s) {
    double u = gamma - scale * y[0];
    dy[0] = y[1];
    dy[2] = y[1] * y[1];
    if (u <= 0.0) {  // trial stages past the zero
      dy[1] = dy[3] = dy[4] = 0.0;
      return;
    }
    double ratio = u / gamma;
    double up = std::pow(u, p);
    // e^(2s) e^(u^p - gamma^p) as one exponential; s runs to ~gamma^p / 2
    double e = std::exp(2.0 * s + up - gp);
    dy[1] = 4.0 * std::pow(ratio, p - 1.0) * e;
    dy[3] = -2.0 * kPi * e * std::expm1(-up);
    dy[4] = 2.0 * kPi * std::pow(ratio, p) * e;
  };
  const double c = (-2.0 * (p - 1.0) / (p * gp) - 2.0) / 4.0;
  const double t = std::min(1e-3, 1e-3 / std::sqrt(std::abs(c)));
  const double t2 = t * t;
  State y0{t2 + c * t2 * t2, 2.0 * t2 + 4.0 * c * t2 * t2, t2 * t2, -kPi * t2 * std::expm1(-gp), kPi * t2};
  const double log_mu2 = std::log(8.0) - std::log(o.lambda_hat) - 2.0 * std::log(p) - 2.0 * (p - 1.0) * lg - gp;
  const double s_max = std::log(o.r_max) - 0.5 * log_mu2;
  Shot shot = integrate_to_zero(rhs, to_u, y0, std::log(t), s_max, p * gp / 2.0, 1.0, o);

  RadialSolution r = finish(shot, gamma, p);
  const State& y = shot.end;
  r.lambda = std::exp(std::log(o.lambda_hat) + log_mu2 + 2.0 * shot.s_zero);
  r.beta = 2.0 * kPi * scale * scale * y[2];
  const double pref = std::log(8.0) - 2.0 * std::log(p) - 2.0 * (p - 1.0) * lg;
  r.beta_def = constraint_beta(p, pref + std::log(y[3]), pref + p * lg + std::log(y[4]));
  return r;
}

RadialSolution shoot_direct(double gamma, double p, const ShootOptions& o) {
  const double gp = std::pow(gamma, p);
  if (gp > 200.0) throw RegimeError("direct shooting loses the core scale once gamma^p > 200; use bubble variables");
  const double lh = o.lambda_hat;
  auto to_u = [](const State& y) { return y[0]; };
  auto rhs = [&](const State& y, State& dy, double s) {
    dy[0] = y[1];
    dy[2] = y[1] * y[1];
    if (y[0] <= 0.0) {
      dy[1] = dy[3] = dy[4] = 0.0;
      return;
    }
    double u = y[0];
    double up = std::pow(u, p);
    double area = 2.0 * kPi * std::exp(2.0 * s);
    dy[1] = -lh * p * std::exp(2.0 * s) * std::pow(u, p - 1.0) * std::exp(up);
    dy[3] = area * std::expm1(up);
    dy[4] = area * up * std::exp(up);
  };
  const double c2 = lh * p * std::pow(gamma, p - 1.0) * std::exp(gp) / 4.0;
  const double r0 = 1e-4 * std::min(1.0, 1.0 / std::sqrt(c2));
  const double r2 = r0 * r0;
  State y0{gamma - c2 * r2, -2.0 * c2 * r2, c2 * c2 * r2 * r2, kPi * r2 * std::expm1(gp), kPi * r2 * gp * std::exp(gp)};
  Shot shot = integrate_to_zero(rhs, to_u, y0, std::log(r0), std::log(o.r_max), 0.0, -1.0, o);

  RadialSolution r = finish(shot, gamma, p);
  const State& y = shot.end;
  r.lambda = lh * std::exp(2.0 * shot.s_zero);
  r.beta = 2.0 * kPi * y[2];
  r.beta_def = constraint_beta(p, std::log(lh * y[3]), std::log(lh * y[4]));
  return r;
}

BetaCurve assemble(std::vector<BetaRow> rows, double p) {
  BetaCurve c;
  c.p = p;
  c.rows = std::move(rows);
  for (std::size_t i = 0; i < c.rows.size(); ++i)
    if (c.max_index < 0 || c.rows[i].beta_def > c.rows[c.max_index].beta_def) c.max_index = static_cast<int>(i);
  const int n = static_cast<int>(c.rows.size());
  c.interior_max = c.max_index > 0 && c.max_index < n - 1 && c.rows.back().beta_def < c.rows[c.max_index].beta_def;
  return c;
}

BetaRow row_of(double gamma, double p, const ShootOptions& o) {
  RadialSolution s = shoot(gamma, p, o);
  return {gamma, s.lambda, s.beta, s.beta_def, s.beta_def - 4.0 * kPi};
}

void check_grid(std::span<const double> gammas) {
  for (std::size_t i = 1; i < gammas.size(); ++i)
    if (!(gammas[i] > gammas[i - 1])) throw std::invalid_argument("gamma grid must be increasing");
}

}  // namespace

RadialSolution shoot(double gamma, double p, const ShootOptions& o) {
  if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be positive");
  if (!(p > 1.0 && p <= 2.0)) throw std::invalid_argument("p must lie in (1, 2]");
  if (!(o.lambda_hat > 0.0)) throw std::invalid_argument("lambda_hat must be positive");
  return o.variables == ShootingVariables::bubble ? shoot_bubble(gamma, p, o) : shoot_direct(gamma, p, o);
}

BetaCurve beta_curve(std::span<const double> gammas, double p, const ShootOptions& o) {
  check_grid(gammas);
  const int n = static_cast<int>(gammas.size());
  std::vector<BetaRow> rows(n);
  std::vector<std::exception_ptr> errors(n);
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    try {
      rows[i] = row_of(gammas[i], p, o);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return assemble(std::move(rows), p);
}

BetaCurve beta_curve_reference(std::span<const double> gammas, double p, const ShootOptions& o) {
  check_grid(gammas);
  std::vector<BetaRow> rows;
  for (double g : gammas) rows.push_back(row_of(g, p, o));
  return assemble(std::move(rows), p);
}

std::vector<double> log_spaced(double lo, double hi, int count) {
  if (!(lo > 0.0 && hi > lo && count >= 2)) throw std::invalid_argument("log_spaced needs 0 < lo < hi and count >= 2");
  std::vector<double> v(count);
  for (int i = 0; i < count; ++i) v[i] = std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * i / (count - 1));
  v.front() = lo;
  v.back() = hi;
  return v;
}

ExcessFit excess_energy_fit(const BetaCurve& table, double p) {
  if (table.rows.size() < 2) throw std::invalid_argument("fit needs at least two rows");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(table.rows.size());
  for (const auto& r : table.rows) {
    if (!(r.excess > 0.0))
      throw RegimeError("non-positive excess beta - 4 pi at gamma=" + std::to_string(r.gamma));
    double x = std::log(r.gamma), y = std::log(r.excess);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  ExcessFit f;
  f.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  f.constant = std::exp((sy - f.slope * sx) / n);
  f.expected_slope = -2.0 * p;
  f.expected_constant = 4.0 * kPi * 4.0 * (p - 1.0) / (p * p);
  f.gamma_lo = table.rows.front().gamma;
  f.gamma_hi = table.rows.back().gamma;
  f.points = static_cast<int>(table.rows.size());
  return f;
}

nlohmann::json to_json(const BetaRow& r) {
  return {{"gamma", r.gamma}, {"lambda", r.lambda}, {"beta", r.beta}, {"beta_def", r.beta_def}, {"excess", r.excess}};
}

nlohmann::json to_json(const ExcessFit& f) {
  return {{"slope", f.slope},
          {"constant", f.constant},
          {"expected_slope", f.expected_slope},
          {"expected_constant", f.expected_constant},
          {"gamma_range", {f.gamma_lo, f.gamma_hi}},
          {"points", f.points}};
}

}  // namespace mflab
