#include "mflab/geometry.hpp"

#include "mflab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace mflab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void pad(std::vector<double>& v, std::size_t n) {
  if (v.size() < n) v.resize(n, 0.0);
}

// Winding-number test against a closed polygon.
bool inside_polygon(const std::vector<Vec2>& poly, Vec2 p) {
  int wn = 0;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % n];
    const double cross = (b.x() - a.x()) * (p.y() - a.y()) - (p.x() - a.x()) * (b.y() - a.y());
    if (a.y() <= p.y()) {
      if (b.y() > p.y() && cross > 0) ++wn;
    } else if (b.y() <= p.y() && cross < 0) {
      --wn;
    }
  }
  return wn != 0;
}

bool segments_cross(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
  auto orient = [](Vec2 p, Vec2 q, Vec2 r) {
    return (q.x() - p.x()) * (r.y() - p.y()) - (q.y() - p.y()) * (r.x() - p.x());
  };
  const double o1 = orient(a, b, c), o2 = orient(a, b, d);
  const double o3 = orient(c, d, a), o4 = orient(c, d, b);
  return o1 * o2 < 0 && o3 * o4 < 0;
}

std::vector<Vec2> sample_curve(const FourierCurve& c, int n) {
  std::vector<Vec2> pts(n);
  for (int j = 0; j < n; ++j) pts[j] = c.point(kTwoPi * j / n);
  return pts;
}

bool polygons_intersect(const std::vector<Vec2>& p, const std::vector<Vec2>& q) {
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = 0; j < q.size(); ++j)
      if (segments_cross(p[i], p[(i + 1) % p.size()], q[j], q[(j + 1) % q.size()])) return true;
  return false;
}

bool self_intersects(const std::vector<Vec2>& p) {
  const std::size_t n = p.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 2; j < n; ++j) {
      if (i == 0 && j == n - 1) continue;
      if (segments_cross(p[i], p[i + 1], p[j], p[(j + 1) % n])) return true;
    }
  return false;
}

BoundaryPoint circle_point(Vec2 x, double radius, bool hole, int curve) {
  BoundaryPoint b;
  const double r = x.norm();
  const Vec2 dir = r > 0 ? Vec2(x / r) : Vec2(Vec2::UnitX());
  b.nearest = radius * dir;
  b.curve = curve;
  b.param = std::atan2(dir.y(), dir.x());
  if (hole) b.param = -b.param;
  if (!hole) {
    const double s = radius - r;
    b.distance = std::max(s, 0.0);
    b.outside = s < 0;
    b.inward_normal = -dir;
    b.curvature = 1.0 / radius;
  } else {
    const double s = r - radius;
    b.distance = std::max(s, 0.0);
    b.outside = s < 0;
    b.inward_normal = dir;
    b.curvature = -1.0 / radius;
  }
  return b;
}

}  // namespace

Config make_config(std::span<const Vec2> pts) {
  Config c(2 * pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) c.segment<2>(2 * i) = pts[i];
  return c;
}

FourierCurve::FourierCurve(std::vector<double> xc, std::vector<double> xs, std::vector<double> yc,
                           std::vector<double> ys)
    : xc_(std::move(xc)), xs_(std::move(xs)), yc_(std::move(yc)), ys_(std::move(ys)) {
  const std::size_t n = std::max({xc_.size(), xs_.size(), yc_.size(), ys_.size(), std::size_t{2}});
  pad(xc_, n);
  pad(xs_, n);
  pad(yc_, n);
  pad(ys_, n);
  // sine coefficients of order 0 carry nothing
  xs_[0] = 0.0;
  ys_[0] = 0.0;
}

FourierCurve FourierCurve::circle(Vec2 center, double radius) {
  return ellipse(center, radius, radius);
}

FourierCurve FourierCurve::ellipse(Vec2 center, double a, double b) {
  return FourierCurve({center.x(), a}, {0.0, 0.0}, {center.y(), 0.0}, {0.0, b});
}

Vec2 FourierCurve::eval(double t, int deriv) const {
  Vec2 v = Vec2::Zero();
  if (deriv == 0) v = Vec2(xc_[0], yc_[0]);
  for (std::size_t k = 1; k < xc_.size(); ++k) {
    const double kk = static_cast<double>(k);
    const double c = std::cos(kk * t), s = std::sin(kk * t);
    double fc = c, fs = s;  // derivative of (cos, sin) pattern
    if (deriv == 1) {
      fc = -kk * s;
      fs = kk * c;
    } else if (deriv == 2) {
      fc = -kk * kk * c;
      fs = -kk * kk * s;
    }
    v.x() += xc_[k] * fc + xs_[k] * fs;
    v.y() += yc_[k] * fc + ys_[k] * fs;
  }
  return v;
}

FourierCurve FourierCurve::reversed() const {
  auto neg = [](std::vector<double> v) {
    for (double& x : v) x = -x;
    return v;
  };
  return FourierCurve(xc_, neg(xs_), yc_, neg(ys_));
}

double FourierCurve::signed_area() const {
  // exact for trig polynomials: area = pi * sum_k k (xc_k ys_k - xs_k yc_k)
  double a = 0.0;
  for (std::size_t k = 1; k < xc_.size(); ++k)
    a += static_cast<double>(k) * (xc_[k] * ys_[k] - xs_[k] * yc_[k]);
  return std::numbers::pi * a;
}

Domain Domain::disk(double radius) {
  if (!(radius > 0)) throw MalformedDomain("disk radius must be positive");
  Domain d;
  d.kind_ = DomainKind::disk;
  d.r_out_ = radius;
  d.curves_ = {FourierCurve::circle(Vec2::Zero(), radius)};
  d.finalize();
  return d;
}

Domain Domain::annulus(double inner, double outer) {
  if (!(inner > 0 && outer > inner)) throw MalformedDomain("annulus needs 0 < inner < outer");
  Domain d;
  d.kind_ = DomainKind::annulus;
  d.r_in_ = inner;
  d.r_out_ = outer;
  d.curves_ = {FourierCurve::circle(Vec2::Zero(), outer),
               FourierCurve::circle(Vec2::Zero(), inner).reversed()};
  d.finalize();
  return d;
}

Domain Domain::half_plane(double offset) {
  Domain d;
  d.kind_ = DomainKind::half_plane;
  d.offset_ = offset;
  d.inradius_ = std::numeric_limits<double>::infinity();
  return d;
}

Domain Domain::generic(FourierCurve outer, std::vector<FourierCurve> holes) {
  Domain d;
  d.kind_ = DomainKind::generic;
  if (std::abs(outer.signed_area()) < 1e-12) throw MalformedDomain("outer curve encloses no area");
  if (outer.signed_area() < 0) outer = outer.reversed();
  d.curves_.push_back(outer);
  for (auto& h : holes) {
    if (std::abs(h.signed_area()) < 1e-12) throw MalformedDomain("hole curve encloses no area");
    d.curves_.push_back(h.signed_area() > 0 ? h.reversed() : h);
  }

  constexpr int kCheck = 512;
  std::vector<std::vector<Vec2>> polys;
  for (const auto& c : d.curves_) polys.push_back(sample_curve(c, kCheck));
  for (std::size_t i = 0; i < polys.size(); ++i)
    if (self_intersects(polys[i])) throw MalformedDomain("curve " + std::to_string(i) + " self-intersects");
  for (std::size_t i = 1; i < polys.size(); ++i) {
    for (const Vec2& p : polys[i])
      if (!inside_polygon(polys[0], p)) throw MalformedDomain("hole escapes the outer curve");
    if (polygons_intersect(polys[0], polys[i])) throw MalformedDomain("hole touches the outer curve");
    for (std::size_t j = 1; j < i; ++j) {
      if (polygons_intersect(polys[i], polys[j]) || inside_polygon(polys[j], polys[i][0]) ||
          inside_polygon(polys[i], polys[j][0]))
        throw MalformedDomain("holes overlap");
    }
  }
  d.finalize();
  return d;
}

int Domain::hole_count() const {
  if (kind_ == DomainKind::half_plane) return 0;
  return static_cast<int>(curves_.size()) - 1;
}

void Domain::finalize() {
  samples_.clear();
  for (const auto& c : curves_) samples_.push_back(sample_curve(c, kNodesPerCurve));
  switch (kind_) {
    case DomainKind::disk:
      inradius_ = r_out_;
      return;
    case DomainKind::annulus:
      inradius_ = 0.5 * (r_out_ - r_in_);
      return;
    case DomainKind::half_plane:
      return;
    case DomainKind::generic:
      break;
  }
  // Grid search followed by compass refinement of the distance maximum.
  auto box = bounding_box();
  const int n = 64;
  Vec2 best = Vec2::Zero();
  double bd = -1.0;
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j <= n; ++j) {
      Vec2 p(box[0].x() + (box[1].x() - box[0].x()) * i / n,
             box[0].y() + (box[1].y() - box[0].y()) * j / n);
      const double dist = distance_to_boundary(p);
      if (dist > bd) {
        bd = dist;
        best = p;
      }
    }
  double step = (box[1] - box[0]).maxCoeff() / n;
  while (step > 1e-9) {
    bool moved = false;
    for (Vec2 dir : {Vec2(1, 0), Vec2(-1, 0), Vec2(0, 1), Vec2(0, -1)}) {
      const Vec2 p = best + step * dir;
      const double dist = distance_to_boundary(p);
      if (dist > bd) {
        bd = dist;
        best = p;
        moved = true;
      }
    }
    if (!moved) step *= 0.5;
  }
  inradius_ = bd;
}

std::array<Vec2, 2> Domain::bounding_box() const {
  if (kind_ == DomainKind::half_plane) throw std::logic_error("half-plane has no bounding box");
  Vec2 lo = Vec2::Constant(std::numeric_limits<double>::infinity());
  Vec2 hi = -lo;
  const auto pts = sample_curve(curves_[0], 1024);
  for (const Vec2& p : pts) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  // chords of a smooth curve sit slightly inside it
  const Vec2 pad = 1e-3 * (hi - lo);
  return {lo - pad, hi + pad};
}

BoundaryPoint Domain::curve_query(int c, Vec2 x) const {
  const FourierCurve& curve = curves_[c];
  const auto& nodes = samples_[c];
  const int n = static_cast<int>(nodes.size());
  int best = 0, second = 1;
  double b1 = std::numeric_limits<double>::infinity(), b2 = b1;
  for (int j = 0; j < n; ++j) {
    const double d2 = (nodes[j] - x).squaredNorm();
    if (d2 < b1) {
      b2 = b1;
      second = best;
      b1 = d2;
      best = j;
    } else if (d2 < b2) {
      b2 = d2;
      second = j;
    }
  }
  const double h = kTwoPi / n;
  auto refine = [&](int j) {
    // safeguarded Newton on |curve(t) - x|^2 / 2 within one node spacing on each side
    double lo = (j - 1) * h, hi = (j + 1) * h, t = j * h;
    for (int it = 0; it < 60; ++it) {
      const Vec2 r = curve.point(t) - x;
      const Vec2 g1 = curve.d1(t), g2 = curve.d2(t);
      const double f1 = r.dot(g1);
      const double f2 = g1.squaredNorm() + r.dot(g2);
      if (f1 > 0) hi = t; else lo = t;
      double next = f2 > 0 ? t - f1 / f2 : 0.5 * (lo + hi);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      if (std::abs(next - t) < 1e-14) {
        t = next;
        break;
      }
      t = next;
    }
    return t;
  };
  double t = refine(best);
  const double t2 = refine(second);
  if ((curve.point(t2) - x).squaredNorm() < (curve.point(t) - x).squaredNorm()) t = t2;

  BoundaryPoint b;
  b.curve = c;
  b.param = t;
  b.nearest = curve.point(t);
  const Vec2 g1 = curve.d1(t), g2 = curve.d2(t);
  const double speed = g1.norm();
  b.inward_normal = Vec2(-g1.y(), g1.x()) / speed;
  b.curvature = (g1.x() * g2.y() - g1.y() * g2.x()) / (speed * speed * speed);
  const double s = (x - b.nearest).dot(b.inward_normal);
  const double dist = (x - b.nearest).norm();
  b.outside = s < 0;
  b.distance = s < 0 ? 0.0 : dist;
  return b;
}

BoundaryPoint Domain::boundary_query(Vec2 x) const {
  switch (kind_) {
    case DomainKind::disk:
      return circle_point(x, r_out_, false, 0);
    case DomainKind::annulus: {
      auto outer = circle_point(x, r_out_, false, 0);
      auto inner = circle_point(x, r_in_, true, 1);
      if (outer.outside) return outer;
      if (inner.outside) return inner;
      return inner.distance < outer.distance ? inner : outer;
    }
    case DomainKind::half_plane: {
      BoundaryPoint b;
      const double s = offset_ - x.y();
      b.distance = std::max(s, 0.0);
      b.outside = s < 0;
      b.nearest = Vec2(x.x(), offset_);
      b.inward_normal = Vec2(0, -1);
      b.curvature = 0.0;
      b.curve = -1;
      return b;
    }
    case DomainKind::generic:
      break;
  }
  BoundaryPoint best;
  double bd = std::numeric_limits<double>::infinity();
  for (int c = 0; c < static_cast<int>(curves_.size()); ++c) {
    BoundaryPoint b = curve_query(c, x);
    const double raw = (x - b.nearest).norm();
    if (raw < bd) {
      bd = raw;
      best = b;
    }
  }
  return best;
}

bool Domain::contains(Vec2 x) const {
  const BoundaryPoint b = boundary_query(x);
  return !b.outside && b.distance > 0;
}

Vec2 Domain::distance_gradient(Vec2 x) const { return boundary_query(x).inward_normal; }

Mat2 Domain::distance_hessian(Vec2 x) const {
  const BoundaryPoint b = boundary_query(x);
  const Vec2 t(-b.inward_normal.y(), b.inward_normal.x());
  const double k = b.curvature;
  return (-k / (1.0 - k * b.distance)) * (t * t.transpose());
}

namespace {

FourierCurve curve_from_json(const nlohmann::json& j) {
  if (j.contains("circle")) {
    const auto& c = j.at("circle");
    return FourierCurve::circle(Vec2(c.at("center")[0], c.at("center")[1]), c.at("radius"));
  }
  if (j.contains("ellipse")) {
    const auto& c = j.at("ellipse");
    return FourierCurve::ellipse(Vec2(c.at("center")[0], c.at("center")[1]), c.at("a"), c.at("b"));
  }
  if (j.contains("fourier")) {
    const auto& f = j.at("fourier");
    auto get = [&](const char* key) {
      return f.contains(key) ? f.at(key).get<std::vector<double>>() : std::vector<double>{};
    };
    return FourierCurve(get("x_cos"), get("x_sin"), get("y_cos"), get("y_sin"));
  }
  throw MalformedDomain("curve needs one of circle, ellipse, fourier");
}

nlohmann::json curve_to_json(const FourierCurve& c) {
  return {{"fourier", {{"x_cos", c.xc()}, {"x_sin", c.xs()}, {"y_cos", c.yc()}, {"y_sin", c.ys()}}}};
}

}  // namespace

Domain build_domain(const nlohmann::json& spec) {
  const std::string kind = spec.at("kind");
  try {
    if (kind == "disk") return Domain::disk(spec.value("radius", 1.0));
    if (kind == "annulus") return Domain::annulus(spec.at("inner"), spec.value("outer", 1.0));
    if (kind == "half_plane") return Domain::half_plane(spec.at("L"));
    if (kind == "generic") {
      std::vector<FourierCurve> holes;
      if (spec.contains("holes"))
        for (const auto& h : spec.at("holes")) holes.push_back(curve_from_json(h));
      return Domain::generic(curve_from_json(spec.at("outer")), std::move(holes));
    }
  } catch (const nlohmann::json::exception& e) {
    throw MalformedDomain(std::string("domain description: ") + e.what());
  }
  throw MalformedDomain("unknown domain kind '" + kind + "'");
}

nlohmann::json domain_to_json(const Domain& d) {
  switch (d.kind()) {
    case DomainKind::disk:
      return {{"kind", "disk"}, {"radius", d.radius()}};
    case DomainKind::annulus:
      return {{"kind", "annulus"}, {"inner", d.inner_radius()}, {"outer", d.radius()}};
    case DomainKind::half_plane:
      return {{"kind", "half_plane"}, {"L", d.offset()}};
    case DomainKind::generic: {
      nlohmann::json holes = nlohmann::json::array();
      for (std::size_t i = 1; i < d.curves().size(); ++i) holes.push_back(curve_to_json(d.curves()[i]));
      return {{"kind", "generic"}, {"outer", curve_to_json(d.curves()[0])}, {"holes", holes}};
    }
  }
  return {};
}

RegionThresholds RegionThresholds::defaults(double inradius) {
  RegionThresholds t;
  t.delta = 0.2 * inradius;
  t.delta_prime = t.delta / 4;
  t.delta_tilde = t.delta_prime / 4;
  t.delta_pp = t.delta_tilde / 4;
  return t;
}

bool RegionThresholds::valid() const {
  return 0 < delta_pp && delta_pp < delta_tilde / 2 && delta_tilde / 2 < delta_prime / 4 &&
         delta_prime / 4 < delta / 8;
}

void RegionThresholds::validate() const {
  if (!valid())
    throw std::invalid_argument("thresholds must satisfy 0 < delta_pp < delta_tilde/2 < delta_prime/4 < delta/8");
}

double min_pair_distance(const Config& c) {
  const int n = point_count(c);
  double m = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) m = std::min(m, (point_of(c, i) - point_of(c, j)).norm());
  return m;
}

bool in_delta_region(const Config& c, const Domain& d, double delta) {
  const int n = point_count(c);
  for (int i = 0; i < n; ++i) {
    const BoundaryPoint b = d.boundary_query(point_of(c, i));
    if (b.outside || !(b.distance > delta)) return false;
  }
  return min_pair_distance(c) > delta;
}

long long config_space_euler(int chi, int n) {
  long long v = 1;
  for (int k = 0; k < n; ++k) v *= static_cast<long long>(chi - k);
  return v;
}

}  // namespace mflab
