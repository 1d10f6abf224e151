#pragma once

#include "mflab/geometry.hpp"
#include "mflab/green.hpp"

#include <functional>
#include <memory>
#include <random>
#include <string>

namespace mflab {

struct FieldSample {
  double value = 0.0;
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
};

enum class Need { value, gradient, hessian };

// Smooth scalar functional on N-point configurations.
class PointField {
 public:
  virtual ~PointField() = default;
  virtual int points() const = 0;
  int dimension() const { return 2 * points(); }
  virtual std::string tag() const = 0;
  // Throws SingularConfiguration off the admissible set.
  virtual FieldSample evaluate(const Config& c, Need need) const = 0;
  // Typical length of the underlying geometry; sets finite-difference and search scales.
  virtual double length_scale() const = 0;
  virtual bool analytic_hessian() const { return true; }
  // True when relabeling the points leaves the field invariant.
  virtual bool exchange_symmetric() const { return false; }
  // Cheap admissibility test; evaluate() still throws on anything it rejects.
  virtual bool admissible(const Config& c) const = 0;

  double value(const Config& c) const { return evaluate(c, Need::value).value; }
  Eigen::VectorXd gradient(const Config& c) const { return evaluate(c, Need::gradient).grad; }
  Eigen::MatrixXd hessian(const Config& c) const { return evaluate(c, Need::hessian).hess; }
};

// Positive weight h on the domain; the Hessian is only needed for analytic field Hessians.
struct WeightFunction {
  std::function<double(Vec2)> value = [](Vec2) { return 1.0; };
  std::function<Vec2(Vec2)> grad = [](Vec2) { return Vec2(Vec2::Zero()); };
  std::function<Mat2(Vec2)> hess = [](Vec2) { return Mat2(Mat2::Zero()); };
  std::string label = "1";

  static WeightFunction constant();
  // h(x) = 1 + slope . x
  static WeightFunction linear(Vec2 slope);
};

struct WeightProfile {
  Eigen::MatrixXd alpha;  // symmetric, diagonal unused
  Eigen::VectorXd beta;
  Eigen::VectorXd gamma;
  WeightFunction h;

  // alpha = 8 pi, beta = 4 pi, gamma = 1, h = 1
  static WeightProfile standard(int n);
  static WeightProfile uniform(int n, double alpha, double beta, double gamma);
  void validate(int n) const;
};

struct Cutoff {
  double v = 0.0, d1 = 0.0, d2 = 0.0;
};
// -1 below 1/4, +1 above 1/2, quintic smoothstep in between.
Cutoff bend_cutoff(double t);
// 0 on [0, 1], ln(1/(2 - t)) on [3/2, 2), smoothstep blend on [1, 3/2].
Cutoff strip_barrier(double t);

struct BendingProfile {
  double delta_tilde = 0.0;
  double delta_prime = 0.0;
  static BendingProfile from(const RegionThresholds& t) { return {t.delta_tilde, t.delta_prime}; }
};

enum class RouthVariant { phi, bent, hat, psi };

std::unique_ptr<PointField> phi_field(const GreenEvaluator& e, int n, WeightProfile w, double t = 1.0);
std::unique_ptr<PointField> bent_phi_field(const GreenEvaluator& e, int n, BendingProfile b,
                                           WeightProfile w, double t = 1.0);
struct StripFields {
  std::unique_ptr<PointField> hat_phi;
  std::unique_ptr<PointField> psi;
};
StripFields strip_fields(const GreenEvaluator& e, int j, BendingProfile b, WeightProfile w, double t = 1.0);

enum class XiVariant { plane, halfspace_plus, halfspace_minus, hat_halfspace, mixed_phi };
std::string to_string(XiVariant v);
XiVariant xi_variant_from_string(const std::string& s);

// Half-plane H = {y < offset}; the hat variant uses {y > -hat_offset};
// mixed_phi adds gamma_i * barrier(scale * (offset - y_i)), finite for y > offset - 2/scale.
struct XiGeometry {
  double offset = 1.0;
  double hat_offset = 1.0;
  double scale = 1.0;
};

std::unique_ptr<PointField> xi_field(XiVariant v, int n, XiGeometry g, WeightProfile w);

struct XiCertificate {
  bool holds = false;
  std::string rule;  // which directional derivative was checked
  int point = -1;
  double derivative = 0.0;
  double grad_norm = 0.0;
};
// Evaluates the directional sign that rules out critical points at c.
XiCertificate xi_certificate(XiVariant v, const PointField& f, const Config& c);
// Uniform sample of an admissible configuration for the variant.
Config sample_xi_config(XiVariant v, int n, XiGeometry g, std::mt19937_64& rng);

// Central differences of the gradient, symmetrized.
Eigen::MatrixXd fd_hessian(const PointField& f, const Config& c, double step);

}  // namespace mflab
