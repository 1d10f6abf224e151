#include "mflab/green.hpp"

#include "mflab/errors.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <numbers>

namespace mflab {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInv2Pi = 0.5 / std::numbers::pi;

// Hessian of ln|r| with respect to r.
Mat2 log_hessian(const Vec2& r) {
  const double r2 = r.squaredNorm();
  return Mat2::Identity() / r2 - 2.0 * r * r.transpose() / (r2 * r2);
}

class DiskGreen final : public GreenEvaluator {
 public:
  using GreenEvaluator::GreenEvaluator;
  GreenMethod method() const override { return GreenMethod::exact_disk; }

  // H = (1/4pi) ln Q with Q = |x|^2 |y|^2 / R^2 - 2 x.y + R^2.
  RegularTerms regular_terms(Vec2 x, Vec2 y) const override {
    const double R2 = domain().radius() * domain().radius();
    const double q = x.squaredNorm() * y.squaredNorm() / R2 - 2.0 * x.dot(y) + R2;
    const Vec2 gx = 2.0 * x * y.squaredNorm() / R2 - 2.0 * y;
    const Vec2 gy = 2.0 * y * x.squaredNorm() / R2 - 2.0 * x;
    const Mat2 hxx = (2.0 * y.squaredNorm() / R2) * Mat2::Identity();
    const Mat2 hxy = 4.0 * x * y.transpose() / R2 - 2.0 * Mat2::Identity();
    const double c = 0.25 / kPi;
    RegularTerms t;
    t.value = c * std::log(q);
    t.grad = c * gx / q;
    t.hess_xx = c * (hxx / q - gx * gx.transpose() / (q * q));
    t.hess_xy = c * (hxy / q - gx * gy.transpose() / (q * q));
    return t;
  }
};

class HalfPlaneGreen final : public GreenEvaluator {
 public:
  using GreenEvaluator::GreenEvaluator;
  GreenMethod method() const override { return GreenMethod::exact_halfplane; }
  RegularTerms regular_terms(Vec2 x, Vec2 y) const override {
    return halfplane_regular(domain().offset(), x, y);
  }
};

// Unit annulus q < |z| < 1 from the product formula for the annulus prime function;
// the physical annulus is a dilation by the outer radius.
class AnnulusGreen final : public GreenEvaluator {
 public:
  using GreenEvaluator::GreenEvaluator;
  GreenMethod method() const override { return GreenMethod::image_series_annulus; }

  RegularTerms regular_terms(Vec2 x, Vec2 y) const override {
    const double R = domain().radius();
    const double q = domain().inner_radius() / R;
    const double lnq = std::log(q);
    const Vec2 z = x / R, a = y / R;
    const double a2 = a.squaredNorm();
    const Vec2 ainv = a / a2;
    const Mat2 jinv = (a2 * Mat2::Identity() - 2.0 * a * a.transpose()) / (a2 * a2);
    const double lna = 0.5 * std::log(a2);
    const double lnz = 0.5 * std::log(z.squaredNorm());

    RegularTerms acc;
    // weight * ln|u z - v w| where w is a or its inversion
    auto add = [&](double weight, double u, double v, bool inverted) {
      const Vec2 w = inverted ? ainv : a;
      const Vec2 r = u * z - v * w;
      const double r2 = r.squaredNorm();
      const Mat2 k = log_hessian(r);
      acc.value += weight * 0.5 * std::log(r2);
      acc.grad += weight * u * r / r2;
      acc.hess_xx += weight * u * u * k;
      acc.hess_xy -= weight * u * v * (inverted ? Mat2(k * jinv) : k);
    };

    add(1.0, -1.0, -1.0, true);  // ln|a* - z|
    acc.value += lna;
    const double bound = std::max({z.norm() / a.norm(), a.norm() / z.norm(), z.norm() * a.norm(),
                                   1.0 / (z.norm() * a.norm())});
    double c = 1.0;
    for (int k = 1; k < 100000; ++k) {
      c *= q * q;
      add(-1.0, -c, -1.0, false);  // -ln|a - c z|
      add(-1.0, 1.0, c, false);    // -ln|z - c a|
      add(1.0, -c, -1.0, true);    // +ln|a* - c z|
      add(1.0, 1.0, c, true);      // +ln|z - c a*|
      acc.value += 2.0 * lna;
      if (c * bound < 1e-13) break;
    }
    acc.value += lna * lnz / lnq;
    const Vec2 zr = z / z.squaredNorm();
    acc.grad += lna * zr / lnq;
    acc.hess_xx += lna * log_hessian(z) / lnq;
    acc.hess_xy += zr * (a / a2).transpose() / lnq;

    RegularTerms t;
    t.value = kInv2Pi * acc.value + kInv2Pi * std::log(R);
    t.grad = kInv2Pi * acc.grad / R;
    t.hess_xx = kInv2Pi * acc.hess_xx / (R * R);
    t.hess_xy = kInv2Pi * acc.hess_xy / (R * R);
    return t;
  }
};

// Modified double-layer representation
//   H(x, y) = D[mu](x) + sum_k (int_{hole k} mu) Phi(x, z_k),
// Phi the free-space kernel and z_k a point inside hole k, solved by Nystrom
// with the trapezoidal rule on the stored curve grids.
class BoundaryIntegralGreen final : public GreenEvaluator {
 public:
  explicit BoundaryIntegralGreen(Domain d) : GreenEvaluator(std::move(d)) { build(); }
  GreenMethod method() const override { return GreenMethod::boundary_integral; }
  bool analytic_hessian() const override { return false; }

  RegularTerms regular_terms(Vec2 x, Vec2 y) const override {
    const Density dens = solve(y);
    return evaluate(dens, x);
  }

  RegularBlock regular_block(std::span<const Vec2> pts) const override {
    const int n = static_cast<int>(pts.size());
    RegularBlock b;
    b.n = n;
    b.has_hessian = false;
    b.terms.resize(static_cast<std::size_t>(n * n));
    for (int j = 0; j < n; ++j) {
      const Density dens = solve(pts[j]);
      for (int i = 0; i < n; ++i) b.terms[static_cast<std::size_t>(i * n + j)] = evaluate(dens, pts[i]);
    }
    return b;
  }

 private:
  struct Node {
    Vec2 x;
    Vec2 nu;  // outward from the domain
    double w;
  };
  struct Density {
    Eigen::VectorXd mu;
    std::vector<std::vector<std::complex<double>>> spectrum;
    std::vector<double> flux;
    // harmonic part subtracted analytically for sources close to a curve
    bool imaged = false;
    Vec2 image = Vec2::Zero();
    double image_shift = 0.0;
  };
  static constexpr int kLevels = 6;

  static std::vector<Node> discretize(const FourierCurve& c, int m) {
    std::vector<Node> nodes(m);
    for (int j = 0; j < m; ++j) {
      const double t = 2.0 * kPi * j / m;
      const Vec2 g1 = c.d1(t);
      const double speed = g1.norm();
      nodes[j] = {c.point(t), Vec2(g1.y(), -g1.x()) / speed, speed * 2.0 * kPi / m};
    }
    return nodes;
  }

  void build() {
    const auto& curves = domain().curves();
    const int n = Domain::kNodesPerCurve;
    const int nc = static_cast<int>(curves.size());
    const int total = n * nc;
    std::vector<double> kdiag(total);
    for (int c = 0; c < nc; ++c) {
      auto nodes = discretize(curves[c], n);
      double length = 0.0;
      for (int j = 0; j < n; ++j) {
        const double t = 2.0 * kPi * j / n;
        const Vec2 g1 = curves[c].d1(t), g2 = curves[c].d2(t);
        const double speed = g1.norm();
        const double kappa = (g1.x() * g2.y() - g1.y() * g2.x()) / (speed * speed * speed);
        kdiag[c * n + j] = -kappa / (4.0 * kPi);
        length += nodes[j].w;
      }
      spacing_.push_back(length / n);
      nodes_.insert(nodes_.end(), nodes.begin(), nodes.end());
      std::vector<std::vector<Node>> levels;
      for (int l = 1; l <= kLevels; ++l) levels.push_back(discretize(curves[c], n << l));
      fine_.push_back(std::move(levels));
      if (c > 0) {
        Vec2 centroid = Vec2::Zero();
        for (const Node& nd : nodes) centroid += nd.x;
        centroid /= n;
        if (domain().contains(centroid))
          throw MalformedDomain("hole centroid lies in the domain; non-star holes are unsupported");
        hole_src_.push_back(centroid);
      }
    }

    Eigen::MatrixXd a(total, total);
    for (int i = 0; i < total; ++i) {
      const Vec2 xi = nodes_[i].x;
      for (int j = 0; j < total; ++j) {
        double k;
        if (i == j) {
          k = kdiag[i];
        } else {
          const Vec2 r = xi - nodes_[j].x;
          k = kInv2Pi * r.dot(nodes_[j].nu) / r.squaredNorm();
        }
        a(i, j) = k * nodes_[j].w;
        const int hole = j / n;
        if (hole > 0) a(i, j) += nodes_[j].w * free_kernel(xi, hole_src_[hole - 1]);
      }
      a(i, i) -= 0.5;
    }
    lu_.compute(a);
  }

  static double free_kernel(Vec2 x, Vec2 z) { return -kInv2Pi * std::log((x - z).norm()); }

  Density solve(Vec2 y) const {
    const int n = Domain::kNodesPerCurve;
    const int total = static_cast<int>(nodes_.size());
    Density d;
    // Near a curve the data ln|. - y| is too sharp for the grid. Reflecting y in the
    // osculating circle at its foot point gives a harmonic function with the same
    // trace on that circle, and only the smooth remainder goes to the solver.
    const BoundaryPoint foot = domain().boundary_query(y);
    if (foot.curve >= 0 && foot.distance < 6.0 * spacing_[foot.curve]) {
      Vec2 image;
      double shift = 0.0;
      if (std::abs(foot.curvature) * foot.distance < 1e-12) {
        image = y - 2.0 * foot.distance * foot.inward_normal;
      } else {
        const double rho = 1.0 / std::abs(foot.curvature);
        const Vec2 center = foot.nearest + foot.inward_normal / foot.curvature;
        const Vec2 rel = y - center;
        image = center + rho * rho * rel / rel.squaredNorm();
        shift = kInv2Pi * std::log(rel.norm() / rho);
      }
      if (!domain().contains(image)) {
        d.imaged = true;
        d.image = image;
        d.image_shift = shift;
      }
    }
    Eigen::VectorXd f(total);
    for (int i = 0; i < total; ++i) {
      f[i] = kInv2Pi * std::log((nodes_[i].x - y).norm());
      if (d.imaged) f[i] -= kInv2Pi * std::log((nodes_[i].x - d.image).norm()) + d.image_shift;
    }
    d.mu = lu_.solve(f);
    const int nc = total / n;
    Eigen::FFT<double> fft;
    for (int c = 0; c < nc; ++c) {
      std::vector<double> seg(d.mu.data() + c * n, d.mu.data() + (c + 1) * n);
      std::vector<std::complex<double>> spec;
      fft.fwd(spec, seg);
      d.spectrum.push_back(std::move(spec));
      if (c > 0) {
        double flux = 0.0;
        for (int j = 0; j < n; ++j) flux += nodes_[c * n + j].w * d.mu[c * n + j];
        d.flux.push_back(flux);
      }
    }
    return d;
  }

  static double interpolate(const std::vector<std::complex<double>>& spec, double t) {
    const int n = static_cast<int>(spec.size());
    double v = spec[0].real();
    for (int k = 1; k < n / 2; ++k) v += 2.0 * (spec[k] * std::polar(1.0, k * t)).real();
    v += spec[n / 2].real() * std::cos(0.5 * n * t);
    return v / n;
  }

  static std::vector<double> upsample(const std::vector<std::complex<double>>& spec, int factor) {
    const int n = static_cast<int>(spec.size());
    const int m = n * factor;
    std::vector<std::complex<double>> big(m, 0.0);
    for (int k = 0; k < n / 2; ++k) big[k] = spec[k] * double(factor);
    for (int k = 1; k < n / 2; ++k) big[m - k] = spec[n - k] * double(factor);
    big[n / 2] = big[m - n / 2] = 0.5 * spec[n / 2] * double(factor);
    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> out;
    fft.inv(out, big);
    std::vector<double> v(m);
    for (int j = 0; j < m; ++j) v[j] = out[j].real();
    return v;
  }

  RegularTerms evaluate(const Density& d, Vec2 x) const {
    const int n = Domain::kNodesPerCurve;
    const int nc = static_cast<int>(d.spectrum.size());
    RegularTerms t;
    if (d.imaged) {
      const Vec2 r = x - d.image;
      t.value = kInv2Pi * std::log(r.norm()) + d.image_shift;
      t.grad = kInv2Pi * r / r.squaredNorm();
    }
    for (int k = 0; k + 1 < nc; ++k) {
      const Vec2 r = x - hole_src_[k];
      t.value += d.flux[k] * free_kernel(x, hole_src_[k]);
      t.grad -= d.flux[k] * kInv2Pi * r / r.squaredNorm();
    }
    for (int c = 0; c < nc; ++c) {
      const BoundaryPoint bp = domain().curve_query(c, x);
      const double dist = (x - bp.nearest).norm();
      const double mu_p = interpolate(d.spectrum[c], bp.param);
      // subtracting the density at the foot point keeps the integrand bounded near the curve
      auto accumulate = [&](std::span<const Node> nodes, auto mu_at) {
        for (std::size_t j = 0; j < nodes.size(); ++j) {
          const Vec2 r = x - nodes[j].x;
          const double r2 = r.squaredNorm();
          const double rn = r.dot(nodes[j].nu);
          const double wm = nodes[j].w * (mu_at(j) - mu_p) * kInv2Pi;
          t.value += wm * rn / r2;
          t.grad += wm * (nodes[j].nu / r2 - 2.0 * rn * r / (r2 * r2));
        }
      };
      if (dist < 3.0 * spacing_[c]) {
        int level = 1;
        while (level < kLevels && double(1 << level) * dist < 4.0 * spacing_[c]) ++level;
        const std::vector<double> fine = upsample(d.spectrum[c], 1 << level);
        accumulate(std::span<const Node>(fine_[c][level - 1]), [&](std::size_t j) { return fine[j]; });
      } else {
        accumulate(std::span<const Node>(nodes_.data() + c * n, static_cast<std::size_t>(n)),
                   [&](std::size_t j) { return d.mu[c * n + static_cast<int>(j)]; });
      }
      if (c == 0) t.value -= mu_p;
    }
    return t;
  }

  std::vector<Node> nodes_;
  std::vector<double> spacing_;
  std::vector<std::vector<std::vector<Node>>> fine_;
  std::vector<Vec2> hole_src_;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
};

}  // namespace

std::string to_string(GreenMethod m) {
  switch (m) {
    case GreenMethod::exact_disk: return "exact_disk";
    case GreenMethod::exact_halfplane: return "exact_halfplane";
    case GreenMethod::image_series_annulus: return "image_series_annulus";
    case GreenMethod::boundary_integral: return "boundary_integral";
  }
  return "unknown";
}

RegularBlock GreenEvaluator::regular_block(std::span<const Vec2> pts) const {
  const int n = static_cast<int>(pts.size());
  RegularBlock b;
  b.n = n;
  b.has_hessian = analytic_hessian();
  b.terms.resize(static_cast<std::size_t>(n * n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) b.terms[static_cast<std::size_t>(i * n + j)] = regular_terms(pts[i], pts[j]);
  return b;
}

void GreenEvaluator::require_inside(Vec2 x) const {
  if (!domain_.contains(x)) throw DomainError("point outside the open domain");
}

double GreenEvaluator::regular(Vec2 x, Vec2 y) const {
  require_inside(x);
  require_inside(y);
  return regular_terms(x, y).value;
}

Vec2 GreenEvaluator::regular_grad(Vec2 x, Vec2 y) const {
  require_inside(x);
  require_inside(y);
  return regular_terms(x, y).grad;
}

double GreenEvaluator::green(Vec2 x, Vec2 y) const {
  require_inside(x);
  require_inside(y);
  const double r = (x - y).norm();
  if (r < 1e-12) throw SingularConfiguration("green evaluated on the diagonal");
  return -kInv2Pi * std::log(r) + regular_terms(x, y).value;
}

Vec2 GreenEvaluator::green_grad(Vec2 x, Vec2 y) const {
  require_inside(x);
  require_inside(y);
  const Vec2 r = x - y;
  if (r.norm() < 1e-12) throw SingularConfiguration("green evaluated on the diagonal");
  return -kInv2Pi * r / r.squaredNorm() + regular_terms(x, y).grad;
}

double GreenEvaluator::robin(Vec2 x) const {
  require_inside(x);
  return regular_terms(x, x).value;
}

Vec2 GreenEvaluator::robin_grad(Vec2 x) const {
  require_inside(x);
  return 2.0 * regular_terms(x, x).grad;
}

std::unique_ptr<GreenEvaluator> make_green(const Domain& d, bool force_boundary_integral) {
  if (d.kind() == DomainKind::half_plane) return std::make_unique<HalfPlaneGreen>(d);
  if (force_boundary_integral || d.kind() == DomainKind::generic)
    return std::make_unique<BoundaryIntegralGreen>(d);
  if (d.kind() == DomainKind::disk) return std::make_unique<DiskGreen>(d);
  return std::make_unique<AnnulusGreen>(d);
}

double halfplane_green(double offset, Vec2 z, Vec2 eta) {
  const Vec2 mirror(eta.x(), 2.0 * offset - eta.y());
  return kInv2Pi * std::log((z - mirror).norm() / (z - eta).norm());
}

RegularTerms halfplane_regular(double offset, Vec2 z, Vec2 eta) {
  const Vec2 mirror(eta.x(), 2.0 * offset - eta.y());
  const Vec2 r = z - mirror;
  const Mat2 k = log_hessian(r);
  Mat2 flip = Mat2::Identity();
  flip(1, 1) = -1.0;
  RegularTerms t;
  t.value = kInv2Pi * std::log(r.norm());
  t.grad = kInv2Pi * r / r.squaredNorm();
  t.hess_xx = kInv2Pi * k;
  t.hess_xy = -kInv2Pi * k * flip;
  return t;
}

RescaledError rescaled_green_error(const GreenEvaluator& e, Vec2 x0, double r, std::span<const Vec2> samples,
                                   RescaleRegime regime) {
  RescaledError rep;
  rep.regime = regime;
  rep.r = r;
  const BoundaryPoint foot = e.domain().boundary_query(x0);
  rep.boundary_distance = foot.distance;
  rep.ratio = r / foot.distance;

  // columns: tangent and outward normal, so z = (0, 1) points out of the domain
  const Vec2 out = -foot.inward_normal;
  Mat2 frame;
  frame.col(0) = Vec2(out.y(), -out.x());
  frame.col(1) = out;
  if (regime == RescaleRegime::whole_plane) frame = Mat2::Identity();
  const double offset = foot.distance / r;

  for (const Vec2& z : samples) {
    const Vec2 x = x0 + r * frame * z;
    for (const Vec2& eta : samples) {
      const Vec2 y = x0 + r * frame * eta;
      const RegularTerms t = e.regular_terms(x, y);
      const Vec2 grad = r * frame.transpose() * t.grad;
      const bool diagonal = (z - eta).norm() == 0.0;
      if (regime == RescaleRegime::whole_plane) {
        if (diagonal) {
          rep.max_robin_grad_deviation = std::max(rep.max_robin_grad_deviation, (2.0 * grad).norm());
        } else {
          rep.max_grad_deviation = std::max(rep.max_grad_deviation, grad.norm());
        }
      } else {
        const RegularTerms lim = halfplane_regular(offset, z, eta);
        const double value = t.value - kInv2Pi * std::log(r);
        rep.max_value_deviation = std::max(rep.max_value_deviation, std::abs(value - lim.value));
        rep.max_grad_deviation = std::max(rep.max_grad_deviation, (grad - lim.grad).norm());
        if (diagonal)
          rep.max_robin_grad_deviation =
              std::max(rep.max_robin_grad_deviation, (2.0 * grad - 2.0 * lim.grad).norm());
      }
      ++rep.pairs;
    }
  }
  rep.max_deviation = std::max({rep.max_grad_deviation, rep.max_value_deviation, rep.max_robin_grad_deviation});
  return rep;
}

double observed_order(std::span<const double> r, std::span<const double> err) {
  const std::size_t n = r.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double lx = std::log(r[i]), ly = std::log(err[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace mflab
