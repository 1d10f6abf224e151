#include "mflab/meanfield.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <ostream>

namespace mflab {

namespace {
constexpr double kPi = std::numbers::pi;
}

MeanFieldProblem::MeanFieldProblem(Mesh m, WeightFunction h) : mesh_(std::move(m)), h_(std::move(h)) {
  const int nv = mesh_.vertex_count();
  std::vector<int> index(nv, -1);
  for (int v = 0; v < nv; ++v)
    if (!mesh_.is_boundary(v)) {
      index[v] = static_cast<int>(interior_.size());
      interior_.push_back(v);
    }
  if (interior_.empty()) throw MeshingError("mesh has no interior vertices");

  mass_ = Eigen::VectorXd::Zero(nv);
  hval_.resize(nv);
  for (int v = 0; v < nv; ++v) {
    hval_[v] = h_.value(mesh_.vertices[v]);
    if (!(hval_[v] > 0.0)) throw DomainError("weight h must be positive at every mesh vertex");
  }

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(9 * mesh_.triangles.size());
  for (const auto& t : mesh_.triangles) {
    Vec2 p[3] = {mesh_.vertices[t[0]], mesh_.vertices[t[1]], mesh_.vertices[t[2]]};
    double area = 0.5 * ((p[1] - p[0]).x() * (p[2] - p[0]).y() - (p[1] - p[0]).y() * (p[2] - p[0]).x());
    // gradient of the barycentric coordinate k is the rotated opposite edge over 2 area
    Vec2 g[3];
    for (int k = 0; k < 3; ++k) {
      Vec2 e = p[(k + 2) % 3] - p[(k + 1) % 3];
      g[k] = Vec2(-e.y(), e.x()) / (2.0 * area);
    }
    for (int a = 0; a < 3; ++a) {
      mass_[t[a]] += area / 3.0;
      if (index[t[a]] < 0) continue;
      for (int b = 0; b < 3; ++b)
        if (index[t[b]] >= 0) trip.emplace_back(index[t[a]], index[t[b]], area * g[a].dot(g[b]));
    }
  }
  const int n = unknowns();
  k_.resize(n, n);
  k_.setFromTriplets(trip.begin(), trip.end());
  k_.makeCompressed();
}

Eigen::VectorXd MeanFieldProblem::expand(const Eigen::VectorXd& interior_values) const {
  Eigen::VectorXd u = Eigen::VectorXd::Zero(mesh_.vertex_count());
  for (int i = 0; i < unknowns(); ++i) u[interior_[i]] = interior_values[i];
  return u;
}

Eigen::VectorXd MeanFieldProblem::restrict(const Eigen::VectorXd& nodal) const {
  if (nodal.size() != mesh_.vertex_count()) throw std::invalid_argument("nodal vector size does not match the mesh");
  Eigen::VectorXd r(unknowns());
  for (int i = 0; i < unknowns(); ++i) r[i] = nodal[interior_[i]];
  return r;
}

double MeanFieldProblem::weighted_measure() const { return mass_.dot(hval_); }

double MeanFieldProblem::first_eigenvalue() const {
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> chol(k_);
  if (chol.info() != Eigen::Success) throw NonConvergence("stiffness factorization failed");
  Eigen::VectorXd m = restrict(mass_);
  Eigen::VectorXd x = Eigen::VectorXd::Ones(unknowns());
  double rho = 0.0;
  for (int it = 0; it < 1000; ++it) {
    Eigen::VectorXd y = chol.solve(m.cwiseProduct(x));
    double my = std::sqrt(y.dot(m.cwiseProduct(y)));
    y /= my;
    double next = y.dot(k_ * y);
    x = y;
    if (it > 2 && std::abs(next - rho) < 1e-14 * next) return next;
    rho = next;
  }
  return rho;
}

namespace {

struct Residual {
  Eigen::VectorXd u;  // nodal
  Eigen::VectorXd f;
  Eigen::VectorXd w;  // m h e^u on interior nodes
  double s = 0.0;     // integral of h e^u
  double norm = std::numeric_limits<double>::infinity();
};

Residual residual(const MeanFieldProblem& p, const Eigen::VectorXd& x, double beta) {
  Residual r;
  r.u = p.expand(x);
  if (!r.u.allFinite() || r.u.maxCoeff() > 600.0) return r;
  Eigen::VectorXd weighted = p.lumped_mass().cwiseProduct(p.nodal_weight()).cwiseProduct(r.u.array().exp().matrix());
  r.s = weighted.sum();
  r.w = p.restrict(weighted);
  Eigen::VectorXd ku = p.stiffness() * x;
  r.f = ku - (2.0 * beta / r.s) * r.w;
  r.norm = r.f.lpNorm<Eigen::Infinity>() / std::max(1.0, ku.lpNorm<Eigen::Infinity>());
  if (!std::isfinite(r.norm)) r.norm = std::numeric_limits<double>::infinity();
  return r;
}

// J = K - (2 beta / S) diag(w) + (2 beta / S^2) w w^T, inverted through the
// sparse part and a rank-one correction.
class Jacobian {
 public:
  Jacobian(const MeanFieldProblem& p, const Residual& r, double beta) : w_(r.w), c_(2.0 * beta / (r.s * r.s)) {
    Eigen::SparseMatrix<double> a = p.stiffness();
    const double d = 2.0 * beta / r.s;
    for (int i = 0; i < a.rows(); ++i) a.coeffRef(i, i) -= d * r.w[i];
    lu_.compute(a);
    if (lu_.info() != Eigen::Success) throw NonConvergence("singular mean-field Jacobian");
    aw_ = lu_.solve(w_);
    denom_ = 1.0 + c_ * w_.dot(aw_);
    if (!(std::abs(denom_) > 1e-300)) throw NonConvergence("singular rank-one update in mean-field Jacobian");
  }

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const {
    Eigen::VectorXd x = lu_.solve(rhs);
    return x - (c_ * w_.dot(x) / denom_) * aw_;
  }

 private:
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu_;
  Eigen::VectorXd w_, aw_;
  double c_, denom_ = 1.0;
};

MFSolution make_solution(const MeanFieldProblem& p, const Residual& r, double beta, int iterations) {
  MFSolution s;
  s.u = r.u;
  s.beta = beta;
  s.mass = r.s;
  s.lambda = 2.0 * beta / r.s;
  s.max_u = r.u.maxCoeff(&s.peak_node);
  s.peak = p.mesh().vertices[s.peak_node];
  s.residual = r.norm;
  s.iterations = iterations;
  return s;
}

}  // namespace

MFSolution solve_meanfield(const MeanFieldProblem& p, double beta, const Eigen::VectorXd* initial,
                           const NewtonOptions& o) {
  if (!(beta >= 0.0)) throw std::invalid_argument("beta must be non-negative");
  Eigen::VectorXd x = initial ? p.restrict(*initial) : Eigen::VectorXd::Zero(p.unknowns());
  if (!x.allFinite()) throw std::invalid_argument("initial guess is not finite");
  Residual r = residual(p, x, beta);
  if (!std::isfinite(r.norm)) throw std::invalid_argument("initial guess overflows e^u");
  for (int it = 0; it < o.max_iterations; ++it) {
    if (r.norm < o.tolerance) return make_solution(p, r, beta, it);
    Eigen::VectorXd step = Jacobian(p, r, beta).solve(-r.f);
    double alpha = 1.0;
    for (;; alpha *= 0.5) {
      if (alpha < 1.0 / 1024) throw MeanFieldDivergence(make_solution(p, r, beta, it), "mean-field line search failed");
      Residual trial = residual(p, x + alpha * step, beta);
      if (trial.norm < (1.0 - 1e-4 * alpha) * r.norm) {
        x += alpha * step;
        r = std::move(trial);
        break;
      }
    }
  }
  if (r.norm < o.tolerance) return make_solution(p, r, beta, o.max_iterations);
  throw MeanFieldDivergence(make_solution(p, r, beta, o.max_iterations), "mean-field Newton did not converge");
}

MFSolution solve_meanfield(const Mesh& m, double beta, const WeightFunction& h, const Eigen::VectorXd* initial) {
  return solve_meanfield(MeanFieldProblem(m, h), beta, initial);
}

DiskLiouville DiskLiouville::from_beta(double beta) {
  if (!(beta >= 0.0 && beta < 4.0 * kPi)) throw std::invalid_argument("disk family needs 0 <= beta < 4 pi");
  return {beta / (4.0 * kPi - beta)};
}
DiskLiouville DiskLiouville::from_gamma(double gamma) { return {std::expm1(gamma / 2.0)}; }
double DiskLiouville::beta() const { return 4.0 * kPi * mu / (1.0 + mu); }
double DiskLiouville::lambda() const { return 8.0 * mu / ((1.0 + mu) * (1.0 + mu)); }
double DiskLiouville::gamma() const { return 2.0 * std::log1p(mu); }
double DiskLiouville::mass() const { return kPi * (1.0 + mu); }
double DiskLiouville::u(double r) const { return 2.0 * std::log((1.0 + mu) / (1.0 + mu * r * r)); }

Branch continue_branch(const MeanFieldProblem& p, const ContinuationOptions& o, const Eigen::VectorXd* initial) {
  NewtonOptions newton;
  newton.tolerance = o.tolerance;
  Branch b;
  MFSolution first = solve_meanfield(p, o.beta_start, initial, newton);
  const double n = p.unknowns();
  auto dot = [&](const Eigen::VectorXd& a, double ab, const Eigen::VectorXd& c, double cb) {
    return o.theta * a.dot(c) / n + ab * cb;
  };

  Eigen::VectorXd x = p.restrict(first.u);
  double beta = first.beta;
  Eigen::VectorXd tx;
  double tb = 1.0;
  auto tangent = [&](const Eigen::VectorXd& at, double at_beta, bool orient) {
    Residual r = residual(p, at, at_beta);
    Eigen::VectorXd v = Jacobian(p, r, at_beta).solve((2.0 / r.s) * r.w);
    double len = std::sqrt(dot(v, 1.0, v, 1.0));
    Eigen::VectorXd nx = v / len;
    double nb = 1.0 / len;
    if (orient && dot(nx, nb, tx, tb) < 0.0) {
      nx = -nx;
      nb = -nb;
    }
    tx = std::move(nx);
    tb = nb;
  };
  tangent(x, beta, false);
  b.points.push_back(std::move(first));
  b.steps.push_back({0.0, b.points.back().iterations, tb});

  double ds = o.ds;
  for (int step = 0; step < o.max_steps; ++step) {
    const MFSolution& last = b.points.back();
    if (last.beta >= o.beta_target) {
      b.stop_reason = "beta target reached";
      return b;
    }
    if (last.max_u >= o.gamma_max) {
      b.stop_reason = "amplitude limit reached";
      return b;
    }

    Eigen::VectorXd y = x + ds * tx;
    double yb = beta + ds * tb;
    bool converged = false;
    int k = 0;
    for (; k < o.max_corrector; ++k) {
      Residual r = residual(p, y, yb);
      if (!std::isfinite(r.norm)) break;
      double arc = dot(tx, tb, y - x, yb - beta) - ds;
      if (r.norm < o.tolerance && std::abs(arc) < o.tolerance) {
        converged = true;
        break;
      }
      try {
        Jacobian j(p, r, yb);
        Eigen::VectorXd a = j.solve(r.f);
        Eigen::VectorXd c = j.solve((-2.0 / r.s) * r.w);  // J^-1 dF/dbeta
        double denom = tb - o.theta * tx.dot(c) / n;
        if (!(std::abs(denom) > 1e-14)) break;
        double dbeta = (-arc + o.theta * tx.dot(a) / n) / denom;
        y += -a - dbeta * c;
        yb += dbeta;
      } catch (const NonConvergence&) {
        break;
      }
    }
    if (converged && yb < 0.0) converged = false;
    if (converged && (y - x).lpNorm<Eigen::Infinity>() > o.max_nodal_change) converged = false;
    if (!converged) {
      ds *= 0.5;
      if (ds < o.ds_min) {
        b.underflow = true;
        b.stop_reason = "step size underflow at beta=" + std::to_string(beta);
        return b;
      }
      continue;
    }

    // Land exactly on a finite target instead of overshooting it.
    if (yb > o.beta_target && beta < o.beta_target) {
      double frac = (o.beta_target - beta) / (yb - beta);
      Eigen::VectorXd guess = p.expand(x + frac * (y - x));
      try {
        MFSolution s = solve_meanfield(p, o.beta_target, &guess, newton);
        b.points.push_back(std::move(s));
        b.steps.push_back({ds * frac, b.points.back().iterations, tb});
        b.stop_reason = "beta target reached";
        return b;
      } catch (const NonConvergence&) {
        // fall through and keep the overshooting point
      }
    }

    double old_tb = tb;
    x = y;
    beta = yb;
    tangent(x, beta, true);
    Residual r = residual(p, x, beta);
    b.points.push_back(make_solution(p, r, beta, k));
    b.steps.push_back({ds, k, tb});
    if ((old_tb > 0.0) != (tb > 0.0)) b.folds.push_back(static_cast<int>(b.points.size()) - 1);
    if (k <= 3) ds = std::min(o.ds_max, 1.5 * ds);
  }
  b.stop_reason = "step budget exhausted";
  return b;
}

double profile_error(const MeanFieldProblem& p, const MeshLocator& loc, const MFSolution& s, double window) {
  const double hp = p.weight().value(s.peak);
  const double scale = std::sqrt(8.0 / (s.lambda * hp * std::exp(s.max_u)));
  double worst = 0.0;
  constexpr int kRadii = 40, kAngles = 64;
  for (int i = 1; i <= kRadii; ++i) {
    double rho = window * i / kRadii;
    for (int j = 0; j < kAngles; ++j) {
      double th = 2.0 * kPi * j / kAngles;
      Vec2 z(rho * std::cos(th), rho * std::sin(th));
      auto val = loc.interpolate(s.u, s.peak + scale * z);
      if (!val) return std::numeric_limits<double>::infinity();  // window leaves the domain
      worst = std::max(worst, std::abs(s.max_u - *val - 2.0 * std::log1p(z.squaredNorm())));
    }
  }
  return worst;
}

QuantizationReport blowup_diagnostics(const MeanFieldProblem& p, const Branch& b, double threshold, double window) {
  QuantizationReport q;
  q.threshold = threshold;
  q.window = window;
  q.lambda1 = p.first_eigenvalue();
  q.lambda_bound = !b.points.empty();
  for (const auto& s : b.points)
    if (!(s.lambda > 0.0 && 2.0 * s.lambda <= q.lambda1)) q.lambda_bound = false;

  MeshLocator loc(p.mesh());
  const Eigen::VectorXd mh = p.lumped_mass().cwiseProduct(p.nodal_weight());
  for (const auto& s : b.points) {
    if (s.max_u < threshold) continue;
    BlowupRow r;
    r.beta = s.beta;
    r.lambda = s.lambda;
    r.gamma = s.max_u;
    r.peak = s.peak;
    r.bubble_scale = std::sqrt(8.0 / (s.lambda * p.weight().value(s.peak) * std::exp(s.max_u)));
    r.profile_error = profile_error(p, loc, s, window);
    r.nearest_multiple = std::max(1, static_cast<int>(std::lround(s.beta / (4.0 * kPi))));
    r.quantization_gap = std::abs(s.beta - 4.0 * kPi * r.nearest_multiple);
    r.beta_pde = 0.5 * s.lambda * mh.dot(s.u.array().expm1().matrix());
    r.normalization_gap = s.beta - r.beta_pde - 0.5 * s.lambda * mh.sum();
    q.rows.push_back(r);
  }
  q.lambda_decreasing = q.rows.size() >= 2;
  q.gap_decreasing = q.rows.size() >= 2;
  for (std::size_t i = 1; i < q.rows.size(); ++i) {
    if (!(q.rows[i].lambda < q.rows[i - 1].lambda)) q.lambda_decreasing = false;
    if (!(q.rows[i].quantization_gap < q.rows[i - 1].quantization_gap)) q.gap_decreasing = false;
  }
  return q;
}

nlohmann::json summary_json(const MFSolution& s) {
  return {{"beta", s.beta},         {"lambda", s.lambda},       {"mass", s.mass},
          {"gamma", s.max_u},       {"peak", {s.peak.x(), s.peak.y()}}, {"residual", s.residual},
          {"iterations", s.iterations}};
}

nlohmann::json to_json(const BlowupRow& r) {
  return {{"beta", r.beta},
          {"lambda", r.lambda},
          {"gamma", r.gamma},
          {"peak", {r.peak.x(), r.peak.y()}},
          {"bubble_scale", r.bubble_scale},
          {"profile_error", r.profile_error},
          {"nearest_multiple", r.nearest_multiple},
          {"quantization_gap", r.quantization_gap},
          {"beta_pde", r.beta_pde},
          {"normalization_gap", r.normalization_gap}};
}

void write_branch_jsonl(std::ostream& out, const Branch& b) {
  for (std::size_t i = 0; i < b.points.size(); ++i) {
    auto j = summary_json(b.points[i]);
    j["index"] = i;
    j["ds"] = b.steps[i].ds;
    j["dbeta_ds"] = b.steps[i].tangent_beta;
    j["fold"] = std::find(b.folds.begin(), b.folds.end(), static_cast<int>(i)) != b.folds.end();
    out << j.dump() << '\n';
  }
}

void write_branch_fields(std::ostream& out, const Branch& b) {
  std::int64_t rows = static_cast<std::int64_t>(b.points.size());
  std::int64_t cols = rows ? static_cast<std::int64_t>(b.points[0].u.size()) : 0;
  out.write(reinterpret_cast<const char*>(&rows), sizeof rows);
  out.write(reinterpret_cast<const char*>(&cols), sizeof cols);
  for (const auto& s : b.points) out.write(reinterpret_cast<const char*>(s.u.data()), sizeof(double) * s.u.size());
}

}  // namespace mflab
