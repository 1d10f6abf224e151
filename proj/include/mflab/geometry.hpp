#pragma once

#include <Eigen/Dense>
#include <json.hpp>

#include <array>
#include <span>
#include <vector>

namespace mflab {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

// Flat layout (x0, y0, x1, y1, ...) used for every configuration of N points.
using Config = Eigen::VectorXd;

inline Vec2 point_of(const Config& c, int i) { return c.segment<2>(2 * i); }
inline int point_count(const Config& c) { return static_cast<int>(c.size() / 2); }
Config make_config(std::span<const Vec2> pts);

// Closed curve x(t) = sum_k xc[k] cos(kt) + xs[k] sin(kt), same for y, t in [0, 2pi).
class FourierCurve {
 public:
  FourierCurve(std::vector<double> xc, std::vector<double> xs, std::vector<double> yc,
               std::vector<double> ys);
  static FourierCurve circle(Vec2 center, double radius);
  static FourierCurve ellipse(Vec2 center, double a, double b);

  Vec2 point(double t) const { return eval(t, 0); }
  Vec2 d1(double t) const { return eval(t, 1); }
  Vec2 d2(double t) const { return eval(t, 2); }

  FourierCurve reversed() const;
  double signed_area() const;
  int degree() const { return static_cast<int>(xc_.size()) - 1; }

  const std::vector<double>& xc() const { return xc_; }
  const std::vector<double>& xs() const { return xs_; }
  const std::vector<double>& yc() const { return yc_; }
  const std::vector<double>& ys() const { return ys_; }

 private:
  Vec2 eval(double t, int deriv) const;
  std::vector<double> xc_, xs_, yc_, ys_;
};

enum class DomainKind { disk, annulus, half_plane, generic };

struct BoundaryPoint {
  double distance = 0.0;  // clamped to 0 outside
  bool outside = false;
  Vec2 nearest = Vec2::Zero();
  Vec2 inward_normal = Vec2::UnitX();
  double curvature = 0.0;  // > 0 when the boundary bends toward the domain
  int curve = 0;           // 0 outer, k >= 1 hole k, -1 for the half-plane line
  double param = 0.0;      // curve parameter of the nearest point
};

// Disk and annulus are centered at the origin; the half-plane is {y < L}.
// Curves are stored with the outer curve counterclockwise and holes clockwise,
// so the left normal always points into the domain.
class Domain {
 public:
  static Domain disk(double radius);
  static Domain annulus(double inner, double outer);
  static Domain half_plane(double offset);
  static Domain generic(FourierCurve outer, std::vector<FourierCurve> holes);

  DomainKind kind() const { return kind_; }
  double radius() const { return r_out_; }
  double inner_radius() const { return r_in_; }
  double offset() const { return offset_; }

  // Empty for the half-plane.
  const std::vector<FourierCurve>& curves() const { return curves_; }
  int hole_count() const;
  int euler_characteristic() const { return 1 - hole_count(); }

  BoundaryPoint boundary_query(Vec2 x) const;
  double distance_to_boundary(Vec2 x) const { return boundary_query(x).distance; }
  bool contains(Vec2 x) const;
  Vec2 distance_gradient(Vec2 x) const;
  Mat2 distance_hessian(Vec2 x) const;
  // Nearest point on one stored curve, with the signed test against that curve only.
  BoundaryPoint curve_query(int curve, Vec2 x) const;

  double inradius() const { return inradius_; }
  // Axis-aligned box containing the closure; throws for the half-plane.
  std::array<Vec2, 2> bounding_box() const;

  // Nodes of the fixed quadrature grid for each curve.
  static constexpr int kNodesPerCurve = 256;
  const std::vector<std::vector<Vec2>>& samples() const { return samples_; }

 private:
  Domain() = default;
  void finalize();

  DomainKind kind_ = DomainKind::disk;
  double r_out_ = 1.0, r_in_ = 0.0, offset_ = 0.0;
  std::vector<FourierCurve> curves_;
  std::vector<std::vector<Vec2>> samples_;
  double inradius_ = 0.0;
};

Domain build_domain(const nlohmann::json& spec);
nlohmann::json domain_to_json(const Domain& d);

struct RegionThresholds {
  double delta = 0.0;
  double delta_prime = 0.0;
  double delta_tilde = 0.0;
  double delta_pp = 0.0;

  static RegionThresholds defaults(double inradius);
  bool valid() const;
  void validate() const;  // throws std::invalid_argument
};

bool in_delta_region(const Config& c, const Domain& d, double delta);
double min_pair_distance(const Config& c);

// chi (chi-1) ... (chi-N+1)
long long config_space_euler(int chi, int n);

}  // namespace mflab
