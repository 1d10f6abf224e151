#pragma once

#include <json.hpp>

#include <span>
#include <stdexcept>
#include <vector>

namespace mflab {

// Radial solutions of Delta u = p lambda u^(p-1) e^(u^p) on the unit disk with u(0) = gamma.
struct RadialSolution {
  double gamma = 0.0;
  double p = 2.0;
  double lambda = 0.0;
  double beta = 0.0;      // Dirichlet energy
  double beta_def = 0.0;  // (lambda p^2 / 2) (int e^(u^p) - 1)^((2-p)/p) (int u^p e^(u^p))^(2(p-1)/p)
  bool decreasing = false;  // u' < 0 at every accepted integration step
  std::vector<double> r;  // unit-disk radii from 0, increasing, last = 1
  std::vector<double> u;
};

enum class ShootingVariables {
  bubble,  // w = (p/2) gamma^(p-1) (gamma - u) against s = ln(r / mu)
  direct   // u against s = ln r; overflows once e^(gamma^p) leaves double range
};

struct ShootOptions {
  double rtol = 1e-12;
  double atol = 1e-13;
  double lambda_hat = 1.0;  // nonlinearity scale during integration; the zero is rescaled to r = 1
  double r_max = 1e3;       // in the lambda_hat coordinates
  ShootingVariables variables = ShootingVariables::bubble;
};

struct NoZeroCrossing : std::runtime_error {
  using std::runtime_error::runtime_error;
};

RadialSolution shoot(double gamma, double p, const ShootOptions& o = {});

struct BetaRow {
  double gamma = 0.0;
  double lambda = 0.0;
  double beta = 0.0;
  double beta_def = 0.0;
  double excess = 0.0;  // beta_def - 4 pi
};

struct BetaCurve {
  double p = 2.0;
  std::vector<BetaRow> rows;
  int max_index = -1;  // largest beta_def on the grid
  bool interior_max = false;  // the curve rises to the max and comes back below it
};

// One shot per grid point; the OpenMP and serial versions agree exactly.
BetaCurve beta_curve(std::span<const double> gammas, double p, const ShootOptions& o = {});
BetaCurve beta_curve_reference(std::span<const double> gammas, double p, const ShootOptions& o = {});

std::vector<double> log_spaced(double lo, double hi, int count);

struct ExcessFit {
  double slope = 0.0;
  double constant = 0.0;         // exp(intercept)
  double expected_slope = 0.0;   // -2p
  double expected_constant = 0.0;  // 4 pi * 4 (p - 1) / p^2
  double gamma_lo = 0.0, gamma_hi = 0.0;
  int points = 0;
};

// Least squares of ln(beta_def - 4 pi) against ln gamma; RegimeError on a non-positive excess.
ExcessFit excess_energy_fit(const BetaCurve& table, double p);

nlohmann::json to_json(const BetaRow& r);
nlohmann::json to_json(const ExcessFit& f);

}  // namespace mflab
