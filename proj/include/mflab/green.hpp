#pragma once

#include "mflab/geometry.hpp"

#include <memory>
#include <span>
#include <string>
#include <vector>

namespace mflab {

enum class GreenMethod { exact_disk, exact_halfplane, image_series_annulus, boundary_integral };
std::string to_string(GreenMethod m);

// Regular part H(x, y) and its derivatives in the first slot; the mixed block
// holds d^2 H / dx_i dy_j. Second derivatives are filled only by closed-form kinds.
struct RegularTerms {
  double value = 0.0;
  Vec2 grad = Vec2::Zero();
  Mat2 hess_xx = Mat2::Zero();
  Mat2 hess_xy = Mat2::Zero();
};

// All pairs among a point set, including the diagonal: entry i * n + j is
// H(p_i, p_j) with derivatives in p_i.
struct RegularBlock {
  int n = 0;
  bool has_hessian = false;
  std::vector<RegularTerms> terms;
  const RegularTerms& at(int i, int j) const { return terms[static_cast<std::size_t>(i * n + j)]; }
};

// G(x, y) = (1/2pi) ln(1/|x - y|) + H(x, y), with G = 0 on the boundary.
class GreenEvaluator {
 public:
  explicit GreenEvaluator(Domain d) : domain_(std::move(d)) {}
  virtual ~GreenEvaluator() = default;

  virtual GreenMethod method() const = 0;
  virtual bool analytic_hessian() const { return true; }
  virtual RegularTerms regular_terms(Vec2 x, Vec2 y) const = 0;
  virtual RegularBlock regular_block(std::span<const Vec2> pts) const;

  const Domain& domain() const { return domain_; }

  double regular(Vec2 x, Vec2 y) const;
  Vec2 regular_grad(Vec2 x, Vec2 y) const;
  double green(Vec2 x, Vec2 y) const;
  Vec2 green_grad(Vec2 x, Vec2 y) const;
  double robin(Vec2 x) const;
  Vec2 robin_grad(Vec2 x) const;

 protected:
  void require_inside(Vec2 x) const;

 private:
  Domain domain_;
};

// Builds the natural evaluator for the domain kind; generic domains, or any
// bounded domain when force_boundary_integral is set, use the Nystrom solver.
std::unique_ptr<GreenEvaluator> make_green(const Domain& d, bool force_boundary_integral = false);

// Exposed for tests and for the half-plane limit comparisons.
double halfplane_green(double offset, Vec2 z, Vec2 eta);
RegularTerms halfplane_regular(double offset, Vec2 z, Vec2 eta);

enum class RescaleRegime { whole_plane, half_plane };

struct RescaledError {
  RescaleRegime regime = RescaleRegime::whole_plane;
  double r = 0.0;
  double boundary_distance = 0.0;
  double ratio = 0.0;  // r / d
  double max_grad_deviation = 0.0;
  double max_value_deviation = 0.0;  // half-plane regime only
  double max_robin_grad_deviation = 0.0;
  double max_deviation = 0.0;
  int pairs = 0;
};

// Compares the Green data of (Omega - x0) / r, sampled over K x K, with the
// whole-plane log kernel or with the half-plane kernel {y < d / r} (the outward
// normal at the foot point of x0 is rotated onto +y).
RescaledError rescaled_green_error(const GreenEvaluator& e, Vec2 x0, double r, std::span<const Vec2> samples,
                                   RescaleRegime regime);

// Least-squares slope of ln(err) against ln(r).
double observed_order(std::span<const double> r, std::span<const double> err);

}  // namespace mflab
