#include "mflab/routh.hpp"

#include "mflab/errors.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace mflab {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInv2Pi = 0.5 / std::numbers::pi;
constexpr double kGuard = 1e-9;

Mat2 log_hessian(const Vec2& r) {
  const double r2 = r.squaredNorm();
  return Mat2::Identity() / r2 - 2.0 * r * r.transpose() / (r2 * r2);
}

struct PairEval {
  double value = 0.0;
  Vec2 grad = Vec2::Zero();  // in the first point
  Mat2 hxx = Mat2::Zero();
  Mat2 hxy = Mat2::Zero();
};

struct SelfEval {
  double value = 0.0;
  Vec2 grad = Vec2::Zero();
  Mat2 hess = Mat2::Zero();
};

// sum_{i != j} alpha_ij K(x_i, x_j) + sum_i S_i(x_i) for a symmetric kernel K.
template <class PairFn, class SelfFn>
FieldSample assemble(int n, const Eigen::MatrixXd& alpha, Need need, PairFn pair, SelfFn self) {
  FieldSample s;
  s.grad = Eigen::VectorXd::Zero(2 * n);
  if (need == Need::hessian) s.hess = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const PairEval p = pair(i, j);
      s.value += alpha(i, j) * p.value;
      s.grad.segment<2>(2 * i) += 2.0 * alpha(i, j) * p.grad;
      if (need == Need::hessian) {
        s.hess.block<2, 2>(2 * i, 2 * i) += 2.0 * alpha(i, j) * p.hxx;
        s.hess.block<2, 2>(2 * i, 2 * j) += 2.0 * alpha(i, j) * p.hxy;
      }
    }
    const SelfEval e = self(i);
    s.value += e.value;
    s.grad.segment<2>(2 * i) += e.grad;
    if (need == Need::hessian) s.hess.block<2, 2>(2 * i, 2 * i) += e.hess;
  }
  if (need == Need::hessian) s.hess = 0.5 * (s.hess + s.hess.transpose()).eval();
  return s;
}

double smoothstep(double s) { return s * s * s * (10.0 - 15.0 * s + 6.0 * s * s); }
double smoothstep1(double s) { return 30.0 * s * s * (1.0 - s) * (1.0 - s); }
double smoothstep2(double s) { return 60.0 * s * (1.0 - s) * (1.0 - 2.0 * s); }

// Equal pair weights and equal self weights.
bool uniform_weights(const WeightProfile& w) {
  const int n = static_cast<int>(w.beta.size());
  for (int i = 0; i < n; ++i) {
    if (w.beta[i] != w.beta[0] || w.gamma[i] != w.gamma[0]) return false;
    for (int j = 0; j < n; ++j)
      if (i != j && w.alpha(i, j) != w.alpha(n > 1 ? 1 : 0, 0)) return false;
  }
  return true;
}

class RouthField final : public PointField {
 public:
  RouthField(const GreenEvaluator& e, int n, WeightProfile w, double t, RouthVariant v, BendingProfile b)
      : e_(e), n_(n), w_(std::move(w)), t_(t), variant_(v), bend_(b) {
    if (n < 1) throw std::invalid_argument("need at least one point");
    w_.validate(n);
    if (v != RouthVariant::phi && !(b.delta_tilde > 0 && b.delta_prime > 0))
      throw std::invalid_argument("bending profile needs positive widths");
  }

  int points() const override { return n_; }
  bool analytic_hessian() const override { return e_.analytic_hessian(); }
  bool exchange_symmetric() const override { return uniform_weights(w_); }
  double length_scale() const override {
    const double r = e_.domain().inradius();
    return std::isfinite(r) ? r : 1.0;
  }

  std::string tag() const override {
    const char* names[] = {"phi", "phi_bent", "phi_hat", "psi"};
    return std::string(names[static_cast<int>(variant_)]) + "[N=" + std::to_string(n_) +
           ",t=" + std::to_string(t_) + ",h=" + w_.h.label + "]";
  }

  bool admissible(const Config& c) const override {
    for (int i = 0; i < n_; ++i) {
      const BoundaryPoint b = e_.domain().boundary_query(point_of(c, i));
      if (b.outside || b.distance < kGuard) return false;
      if (strip() && b.distance >= 2.0 * bend_.delta_prime) return false;
    }
    return n_ < 2 || min_pair_distance(c) >= kGuard;
  }

  FieldSample evaluate(const Config& c, Need need) const override {
    if (!admissible(c)) throw SingularConfiguration(tag() + ": configuration off the admissible set");
    if (need == Need::hessian && !e_.analytic_hessian()) {
      FieldSample s = evaluate(c, Need::gradient);
      s.hess = fd_hessian(*this, c, 1e-4 * length_scale());
      return s;
    }
    std::vector<Vec2> pts(n_);
    for (int i = 0; i < n_; ++i) pts[i] = point_of(c, i);
    const RegularBlock block = e_.regular_block(pts);
    const bool want_hess = need == Need::hessian;

    auto pair = [&](int i, int j) {
      const RegularTerms& t = block.at(i, j);
      const Vec2 r = pts[i] - pts[j];
      PairEval p;
      p.value = -kInv2Pi * std::log(r.norm()) + t.value;
      p.grad = -kInv2Pi * r / r.squaredNorm() + t.grad;
      if (want_hess) {
        const Mat2 k = log_hessian(r);
        p.hxx = -kInv2Pi * k + t.hess_xx;
        p.hxy = kInv2Pi * k + t.hess_xy;
      }
      return p;
    };

    auto self = [&](int i) {
      const Vec2 x = pts[i];
      const RegularTerms& t = block.at(i, i);
      // Robin function R(x) = H(x, x) and its derivatives
      double rv = t.value;
      Vec2 rg = 2.0 * t.grad;
      Mat2 rh = Mat2::Zero();
      if (want_hess) rh = 2.0 * t.hess_xx + t.hess_xy + t.hess_xy.transpose();

      SelfEval s;
      const bool bending = variant_ == RouthVariant::bent || variant_ == RouthVariant::hat;
      BoundaryPoint bp;
      if (bending || strip()) bp = e_.domain().boundary_query(x);
      if (bending && bp.distance < 0.5 * bend_.delta_tilde) {
        const Cutoff tau = bend_cutoff(bp.distance / bend_.delta_tilde);
        const Vec2 dg = bp.inward_normal;
        const double dt = bend_.delta_tilde;
        Mat2 hr = Mat2::Zero();
        if (want_hess) {
          const Vec2 tan(-dg.y(), dg.x());
          const Mat2 dh = (-bp.curvature / (1.0 - bp.curvature * bp.distance)) * (tan * tan.transpose());
          hr = tau.v * rh + (tau.d1 / dt) * (rg * dg.transpose() + dg * rg.transpose()) +
               rv * ((tau.d2 / (dt * dt)) * (dg * dg.transpose()) + (tau.d1 / dt) * dh);
        }
        const Vec2 gr = tau.v * rg + rv * (tau.d1 / dt) * dg;
        rv *= tau.v;
        rg = gr;
        rh = hr;
      }
      s.value = w_.beta[i] * rv;
      s.grad = w_.beta[i] * rg;
      if (want_hess) s.hess = w_.beta[i] * rh;

      if (t_ != 0.0) {
        const double hv = w_.h.value(x);
        const Vec2 hg = w_.h.grad(x);
        s.value += t_ * std::log(hv);
        s.grad += t_ * hg / hv;
        if (want_hess) s.hess += t_ * (w_.h.hess(x) / hv - hg * hg.transpose() / (hv * hv));
      }
      if (strip()) {
        const Cutoff sg = strip_barrier(bp.distance / bend_.delta_prime);
        const double dp = bend_.delta_prime;
        const Vec2 dg = bp.inward_normal;
        s.value += sg.v;
        s.grad += (sg.d1 / dp) * dg;
        if (want_hess) {
          const Vec2 tan(-dg.y(), dg.x());
          const Mat2 dh = (-bp.curvature / (1.0 - bp.curvature * bp.distance)) * (tan * tan.transpose());
          s.hess += (sg.d2 / (dp * dp)) * (dg * dg.transpose()) + (sg.d1 / dp) * dh;
        }
      }
      return s;
    };
    return assemble(n_, w_.alpha, need, pair, self);
  }

 private:
  bool strip() const { return variant_ == RouthVariant::hat || variant_ == RouthVariant::psi; }

  const GreenEvaluator& e_;
  int n_;
  WeightProfile w_;
  double t_;
  RouthVariant variant_;
  BendingProfile bend_;
};

class XiField final : public PointField {
 public:
  XiField(XiVariant v, int n, XiGeometry g, WeightProfile w) : v_(v), n_(n), g_(g), w_(std::move(w)) {
    if (n < 1 || (v == XiVariant::plane && n < 2)) throw std::invalid_argument("too few points for this variant");
    w_.validate(n);
    if (v == XiVariant::mixed_phi && !(2.0 / g.scale > g.offset))
      throw std::invalid_argument("mixed variant needs 2/scale > offset");
  }

  int points() const override { return n_; }
  double length_scale() const override { return 1.0; }
  bool exchange_symmetric() const override { return uniform_weights(w_); }
  std::string tag() const override { return "xi_" + to_string(v_) + "[J=" + std::to_string(n_) + "]"; }

  bool admissible(const Config& c) const override {
    for (int i = 0; i < n_; ++i) {
      const double y = c[2 * i + 1];
      if (halfspace() && !(g_.offset - y >= kGuard)) return false;
      if (v_ == XiVariant::hat_halfspace && !(y + g_.hat_offset >= kGuard)) return false;
      if (v_ == XiVariant::mixed_phi && !(g_.scale * (g_.offset - y) < 2.0)) return false;
    }
    return n_ < 2 || min_pair_distance(c) >= kGuard;
  }

  FieldSample evaluate(const Config& c, Need need) const override {
    if (!admissible(c)) throw SingularConfiguration(tag() + ": configuration off the admissible set");
    const bool want_hess = need == Need::hessian;
    auto pair = [&](int i, int j) {
      const Vec2 zi = point_of(c, i), zj = point_of(c, j);
      const Vec2 r = zi - zj;
      PairEval p;
      if (!halfspace()) {
        p.value = -std::log(r.norm());
        p.grad = -r / r.squaredNorm();
        if (want_hess) {
          p.hxx = -log_hessian(r);
          p.hxy = log_hessian(r);
        }
        return p;
      }
      const RegularTerms t = halfplane_regular(g_.offset, zi, zj);
      p.value = -kInv2Pi * std::log(r.norm()) + t.value;
      p.grad = -kInv2Pi * r / r.squaredNorm() + t.grad;
      if (want_hess) {
        p.hxx = -kInv2Pi * log_hessian(r) + t.hess_xx;
        p.hxy = kInv2Pi * log_hessian(r) + t.hess_xy;
      }
      return p;
    };
    auto self = [&](int i) {
      const Vec2 z = point_of(c, i);
      SelfEval s;
      if (halfspace()) {
        const double sign = v_ == XiVariant::halfspace_minus ? -1.0 : 1.0;
        const RegularTerms t = halfplane_regular(g_.offset, z, z);
        s.value = sign * w_.beta[i] * t.value;
        s.grad = sign * w_.beta[i] * 2.0 * t.grad;
        if (want_hess) s.hess = sign * w_.beta[i] * (2.0 * t.hess_xx + t.hess_xy + t.hess_xy.transpose());
      }
      if (v_ == XiVariant::hat_halfspace) {
        const double b = z.y() + g_.hat_offset;
        s.value -= w_.gamma[i] * std::log(b);
        s.grad.y() -= w_.gamma[i] / b;
        if (want_hess) s.hess(1, 1) += w_.gamma[i] / (b * b);
      }
      if (v_ == XiVariant::mixed_phi) {
        const Cutoff sg = strip_barrier(g_.scale * (g_.offset - z.y()));
        s.value += w_.gamma[i] * sg.v;
        s.grad.y() -= w_.gamma[i] * g_.scale * sg.d1;
        if (want_hess) s.hess(1, 1) += w_.gamma[i] * g_.scale * g_.scale * sg.d2;
      }
      return s;
    };
    return assemble(n_, w_.alpha, need, pair, self);
  }

 private:
  bool halfspace() const {
    return v_ == XiVariant::halfspace_plus || v_ == XiVariant::halfspace_minus || v_ == XiVariant::mixed_phi;
  }

  XiVariant v_;
  int n_;
  XiGeometry g_;
  WeightProfile w_;
};

}  // namespace

WeightFunction WeightFunction::constant() { return WeightFunction{}; }

WeightFunction WeightFunction::linear(Vec2 slope) {
  WeightFunction w;
  w.value = [slope](Vec2 x) { return 1.0 + slope.dot(x); };
  w.grad = [slope](Vec2) { return slope; };
  char buf[96];
  std::snprintf(buf, sizeof buf, "1%+gx1%+gx2", slope.x(), slope.y());
  w.label = buf;
  return w;
}

WeightProfile WeightProfile::standard(int n) { return uniform(n, 8.0 * kPi, 4.0 * kPi, 1.0); }

WeightProfile WeightProfile::uniform(int n, double alpha, double beta, double gamma) {
  WeightProfile w;
  w.alpha = Eigen::MatrixXd::Constant(n, n, alpha);
  w.beta = Eigen::VectorXd::Constant(n, beta);
  w.gamma = Eigen::VectorXd::Constant(n, gamma);
  return w;
}

void WeightProfile::validate(int n) const {
  if (alpha.rows() != n || alpha.cols() != n || beta.size() != n || gamma.size() != n)
    throw std::invalid_argument("weight profile sized for a different point count");
  for (int i = 0; i < n; ++i) {
    if (!(beta[i] > 0) || !(gamma[i] >= 0)) throw std::invalid_argument("weights must be beta > 0, gamma >= 0");
    for (int j = 0; j < n; ++j)
      if (i != j && (!(alpha(i, j) > 0) || alpha(i, j) != alpha(j, i)))
        throw std::invalid_argument("pair weights must be symmetric and positive");
  }
}

Cutoff bend_cutoff(double t) {
  if (t <= 0.25) return {-1.0, 0.0, 0.0};
  if (t >= 0.5) return {1.0, 0.0, 0.0};
  const double s = 4.0 * (t - 0.25);
  return {-1.0 + 2.0 * smoothstep(s), 8.0 * smoothstep1(s), 32.0 * smoothstep2(s)};
}

Cutoff strip_barrier(double t) {
  if (t <= 1.0) return {0.0, 0.0, 0.0};
  if (t >= 2.0) throw SingularConfiguration("strip barrier evaluated at or beyond its pole");
  const double f = -std::log(2.0 - t), f1 = 1.0 / (2.0 - t), f2 = f1 * f1;
  if (t >= 1.5) return {f, f1, f2};
  const double s = 2.0 * (t - 1.0);
  const double b = smoothstep(s), b1 = 2.0 * smoothstep1(s), b2 = 4.0 * smoothstep2(s);
  return {b * f, b1 * f + b * f1, b2 * f + 2.0 * b1 * f1 + b * f2};
}

std::unique_ptr<PointField> phi_field(const GreenEvaluator& e, int n, WeightProfile w, double t) {
  return std::make_unique<RouthField>(e, n, std::move(w), t, RouthVariant::phi, BendingProfile{});
}

std::unique_ptr<PointField> bent_phi_field(const GreenEvaluator& e, int n, BendingProfile b, WeightProfile w,
                                           double t) {
  return std::make_unique<RouthField>(e, n, std::move(w), t, RouthVariant::bent, b);
}

StripFields strip_fields(const GreenEvaluator& e, int j, BendingProfile b, WeightProfile w, double t) {
  StripFields s;
  s.hat_phi = std::make_unique<RouthField>(e, j, w, t, RouthVariant::hat, b);
  s.psi = std::make_unique<RouthField>(e, j, std::move(w), t, RouthVariant::psi, b);
  return s;
}

std::string to_string(XiVariant v) {
  switch (v) {
    case XiVariant::plane: return "plane";
    case XiVariant::halfspace_plus: return "halfspace_plus";
    case XiVariant::halfspace_minus: return "halfspace_minus";
    case XiVariant::hat_halfspace: return "hat_halfspace";
    case XiVariant::mixed_phi: return "mixed_phi";
  }
  return "unknown";
}

XiVariant xi_variant_from_string(const std::string& s) {
  for (XiVariant v : {XiVariant::plane, XiVariant::halfspace_plus, XiVariant::halfspace_minus,
                      XiVariant::hat_halfspace, XiVariant::mixed_phi})
    if (to_string(v) == s) return v;
  throw std::invalid_argument("unknown xi variant '" + s + "'");
}

std::unique_ptr<PointField> xi_field(XiVariant v, int n, XiGeometry g, WeightProfile w) {
  return std::make_unique<XiField>(v, n, g, std::move(w));
}

XiCertificate xi_certificate(XiVariant v, const PointField& f, const Config& c) {
  const int n = point_count(c);
  const Eigen::VectorXd g = f.gradient(c);
  XiCertificate cert;
  cert.grad_norm = g.norm();
  auto argext = [&](int coord, bool largest) {
    int best = 0;
    for (int i = 1; i < n; ++i) {
      const double a = c[2 * i + coord], b = c[2 * best + coord];
      if (largest ? a > b : a < b) best = i;
    }
    return best;
  };
  auto check = [&](int point, int coord, bool want_positive, std::string rule) {
    cert.point = point;
    cert.derivative = g[2 * point + coord];
    cert.holds = want_positive ? cert.derivative > 0 : cert.derivative < 0;
    cert.rule = std::move(rule);
  };
  switch (v) {
    case XiVariant::plane:
      check(argext(0, true), 0, false, "d/dx < 0 at the rightmost hull vertex");
      break;
    case XiVariant::hat_halfspace:
      check(argext(1, true), 1, false, "d/dy < 0 at the point farthest from the hat boundary");
      break;
    case XiVariant::halfspace_plus:
    case XiVariant::halfspace_minus:
    case XiVariant::mixed_phi: {
      double lo = c[0], hi = c[0];
      for (int i = 1; i < n; ++i) {
        lo = std::min(lo, c[2 * i]);
        hi = std::max(hi, c[2 * i]);
      }
      if (hi - lo > 1e-12) {
        check(argext(0, false), 0, true, "d/dx > 0 at the leftmost point");
      } else if (v == XiVariant::halfspace_minus) {
        check(argext(1, false), 1, true, "d/dy > 0 at the point farthest from the boundary line");
      } else {
        check(argext(1, true), 1, false, "d/dy < 0 at the point closest to the boundary line");
      }
      break;
    }
  }
  return cert;
}

Config sample_xi_config(XiVariant v, int n, XiGeometry g, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ux(-1.0, 1.0);
  double ylo = -1.0, yhi = 1.0;
  switch (v) {
    case XiVariant::plane: break;
    case XiVariant::halfspace_plus:
    case XiVariant::halfspace_minus:
      ylo = g.offset - 2.0;
      yhi = g.offset;
      break;
    case XiVariant::hat_halfspace:
      ylo = -g.hat_offset;
      yhi = -g.hat_offset + 2.0;
      break;
    case XiVariant::mixed_phi:
      ylo = g.offset - 2.0 / g.scale;
      yhi = g.offset;
      break;
  }
  std::uniform_real_distribution<double> uy(ylo, yhi);
  Config c(2 * n);
  for (;;) {
    bool ok = true;
    for (int i = 0; i < n; ++i) {
      c[2 * i] = ux(rng);
      c[2 * i + 1] = uy(rng);
      if (v != XiVariant::plane && (c[2 * i + 1] - ylo < 1e-6 || yhi - c[2 * i + 1] < 1e-6)) ok = false;
    }
    if (ok && (n < 2 || min_pair_distance(c) > 1e-6)) return c;
  }
}

Eigen::MatrixXd fd_hessian(const PointField& f, const Config& c, double step) {
  const int dim = f.dimension();
  Eigen::MatrixXd h(dim, dim);
  for (int k = 0; k < dim; ++k) {
    Config p = c, m = c;
    p[k] += step;
    m[k] -= step;
    h.col(k) = (f.gradient(p) - f.gradient(m)) / (2.0 * step);
  }
  return 0.5 * (h + h.transpose());
}

}  // namespace mflab
