#include "mflab/degree.hpp"

#include "mflab/errors.hpp"

#include <boost/random/sobol.hpp>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

namespace mflab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Maps (u, v) in the unit square to a point at a distance in (lo, hi) from
// the boundary, with u spread by arc length over all curves.
class BandSampler {
 public:
  explicit BandSampler(const Domain& d) : d_(d) {
    if (d.kind() == DomainKind::half_plane) throw std::invalid_argument("band sampling needs a bounded domain");
    constexpr int m = 1024;
    for (const FourierCurve& c : d.curves()) {
      std::vector<double> cum(m + 1, 0.0);
      Vec2 prev = c.point(0.0);
      for (int k = 1; k <= m; ++k) {
        const Vec2 p = c.point(kTwoPi * k / m);
        cum[k] = cum[k - 1] + (p - prev).norm();
        prev = p;
      }
      total_ += cum[m];
      lengths_.push_back(std::move(cum));
    }
  }

  struct Foot {
    std::size_t curve = 0;
    double t = 0.0;
  };

  // Curve and parameter at arc-length fraction u of the whole boundary.
  Foot locate(double u) const {
    double s = u * total_;
    std::size_t k = 0;
    while (k + 1 < lengths_.size() && s > lengths_[k].back()) s -= lengths_[k++].back();
    const std::vector<double>& cum = lengths_[k];
    const auto it = std::upper_bound(cum.begin(), cum.end(), s);
    const int i = std::clamp(static_cast<int>(it - cum.begin()) - 1, 0, static_cast<int>(cum.size()) - 2);
    const double frac = (s - cum[i]) / std::max(cum[i + 1] - cum[i], 1e-300);
    return {k, kTwoPi * (i + frac) / (cum.size() - 1)};
  }

  // Foot shifted by an arc length ds along its own curve.
  Foot slide(Foot f, double ds) const {
    f.t += ds / std::max(d_.curves()[f.curve].d1(f.t).norm(), 1e-300);
    return f;
  }

  Vec2 at(Foot f, double v, double lo, double hi) const {
    const FourierCurve& c = d_.curves()[f.curve];
    const Vec2 tan = c.d1(f.t).normalized();
    const Vec2 inward(-tan.y(), tan.x());
    // log-uniform in distance when lo > 0, to resolve thin boundary layers
    const double dist = lo > 0 ? lo * std::pow(hi / lo, v) : lo + v * (hi - lo);
    return c.point(f.t) + dist * inward;
  }

  Vec2 point(double u, double v, double lo, double hi) const { return at(locate(u), v, lo, hi); }

 private:
  const Domain& d_;
  std::vector<std::vector<double>> lengths_;
  double total_ = 0.0;
};

Vec2 box_point(const std::array<Vec2, 2>& box, double u, double v) {
  return {box[0].x() + u * (box[1].x() - box[0].x()), box[0].y() + v * (box[1].y() - box[0].y())};
}

double band_top(const SearchRegion& r) {
  return std::min(r.band_width, r.boundary_max);
}

// Uniform on [0, 1) from a Sobol word.
double unit(std::uint64_t x) {
  return std::min(static_cast<double>(x) * 0x1p-64, std::nextafter(1.0, 0.0));
}

Config random_config(const SearchRegion& r, const BandSampler& band, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const auto box = r.domain.bounding_box();
  Config c(2 * r.points);
  for (int attempt = 0; attempt < 1000000; ++attempt) {
    for (int i = 0; i < r.points; ++i) {
      const bool in_band = u01(rng) < r.band_fraction;
      const Vec2 p = in_band ? band.point(u01(rng), u01(rng), r.boundary_min, band_top(r))
                             : box_point(box, u01(rng), u01(rng));
      c.segment<2>(2 * i) = p;
    }
    if (r.contains(c)) return c;
  }
  throw UnsafeRegion("could not sample region " + r.label);
}

// Points within the region's band move along (curve parameter, distance)
// coordinates, so steps follow valleys parallel to a curved boundary.
struct BoundaryFrame {
  int curve = -1;
  double t = 0.0;
  double d = 0.0;
  Mat2 jinv = Mat2::Identity();
};

Vec2 inward_at(const FourierCurve& c, double t) {
  const Vec2 u = c.d1(t).normalized();
  return {-u.y(), u.x()};
}

BoundaryFrame boundary_frame(const SearchRegion& r, Vec2 p) {
  BoundaryFrame fr;
  if (!(r.band_width > 0) || r.domain.kind() == DomainKind::half_plane) return fr;
  const BoundaryPoint b = r.domain.boundary_query(p);
  if (b.outside || b.distance >= r.band_width || b.curve < 0) return fr;
  const FourierCurve& c = r.domain.curves()[b.curve];
  constexpr double h = 1e-6;
  const Vec2 dn = (inward_at(c, b.param + h) - inward_at(c, b.param - h)) / (2 * h);
  Mat2 j;
  j.col(0) = c.d1(b.param) + b.distance * dn;
  j.col(1) = inward_at(c, b.param);
  if (std::abs(j.determinant()) < 1e-12 * j.squaredNorm()) return fr;
  fr.curve = b.curve;
  fr.t = b.param;
  fr.d = b.distance;
  fr.jinv = j.inverse();
  return fr;
}

Config advance(const Domain& d, const Config& x, const std::vector<BoundaryFrame>& frames, const Eigen::VectorXd& step,
               double alpha) {
  Config y = x + alpha * step;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const BoundaryFrame& fr = frames[i];
    if (fr.curve < 0) continue;
    const Vec2 dq = fr.jinv * Vec2(step.segment<2>(2 * i));
    const FourierCurve& c = d.curves()[fr.curve];
    const double t = fr.t + alpha * dq.x();
    y.segment<2>(2 * i) = c.point(t) + (fr.d + alpha * dq.y()) * inward_at(c, t);
  }
  return y;
}

Eigen::VectorXd safe_gradient(const PointField& f, const Config& c, bool& ok) {
  ok = false;
  if (!f.admissible(c)) return {};
  try {
    Eigen::VectorXd g = f.gradient(c);
    ok = g.allFinite();
    return g;
  } catch (const SingularConfiguration&) {
    return {};
  } catch (const DomainError&) {
    return {};
  }
}

// Length of the Newton displacement relative to the length scale. Stiff
// barrier zeros cannot reach an absolute gradient tolerance, and a plain
// |grad| / |Hess| ratio lets soft directions stop early.
double scaled_norm(const Eigen::VectorXd& grad, const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>& es,
                   double length) {
  const Eigen::VectorXd& lam = es.eigenvalues();
  const double floor = 1e-300 + 1e-14 * lam.cwiseAbs().maxCoeff();
  const Eigen::VectorXd coef = es.eigenvectors().transpose() * grad;
  return (coef.array() / lam.array().abs().max(floor)).matrix().norm() / length;
}

double default_degeneracy_tol(const PointField& f, const SearchOptions& o) {
  if (o.degeneracy_tol > 0) return o.degeneracy_tol;
  return f.analytic_hessian() ? 1e-11 : 1e-6;
}

FindResult find_impl(const PointField& f, const SearchRegion& r, const SearchOptions& o, bool parallel) {
  const std::vector<Config> starts = region_starts(r, o.starts, o.seed);
  const int n = static_cast<int>(starts.size());
  std::vector<std::optional<Config>> hits(n);
  std::vector<char> escaped(n, 0);
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (int i = 0; i < n; ++i) {
    bool esc = false;
    hits[i] = newton_zero(f, r, starts[i], o, &esc);
    escaped[i] = esc;
  }

  FindResult out;
  out.diagnostics.starts = n;
  const double radius = o.dedup_factor * r.domain.inradius();
  std::vector<Config> distinct;
  std::vector<int> basins;
  for (int i = 0; i < n; ++i) {
    if (!hits[i]) {
      ++(escaped[i] ? out.diagnostics.escaped : out.diagnostics.failed);
      continue;
    }
    ++out.diagnostics.converged;
    bool merged = false;
    for (std::size_t k = 0; k < distinct.size(); ++k)
      if ((distinct[k] - *hits[i]).norm() < radius) {
        ++basins[k];
        merged = true;
        break;
      }
    if (!merged) {
      distinct.push_back(*hits[i]);
      basins.push_back(1);
    }
  }
  // relabeled copies of every zero are zeros too; polish them in and merge
  if (f.exchange_symmetric() && r.points > 1 && r.points <= 4) {
    std::vector<Config> images;
    for (const Config& z : distinct) {
      std::vector<int> perm(r.points);
      std::iota(perm.begin(), perm.end(), 0);
      while (std::next_permutation(perm.begin(), perm.end())) {
        Config y(z.size());
        for (int i = 0; i < r.points; ++i) y.segment<2>(2 * i) = z.segment<2>(2 * perm[i]);
        images.push_back(y);
      }
    }
    const int ni = static_cast<int>(images.size());
    std::vector<std::optional<Config>> polished(ni);
#pragma omp parallel for schedule(dynamic) if (parallel)
    for (int i = 0; i < ni; ++i) polished[i] = newton_zero(f, r, images[i], o);
    for (const std::optional<Config>& y : polished) {
      if (!y) continue;
      const bool known = std::any_of(distinct.begin(), distinct.end(),
                                     [&](const Config& z) { return (z - *y).norm() < radius; });
      if (!known) {
        distinct.push_back(*y);
        basins.push_back(0);
      }
    }
  }
  out.zeros.resize(distinct.size());
  const int m = static_cast<int>(distinct.size());
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (int k = 0; k < m; ++k) {
    out.zeros[k] = classify_zero(f, distinct[k], o);
    out.zeros[k].basin_count = basins[k];
  }
  return out;
}

std::string describe(const Config& c) {
  std::ostringstream s;
  s.precision(6);
  s << "(";
  for (int i = 0; i < c.size(); ++i) s << (i ? ", " : "") << c[i];
  s << ")";
  return s.str();
}

}  // namespace

bool SearchRegion::contains(const Config& c) const { return point_count(c) == points && slack(c) > 0; }

double SearchRegion::slack(const Config& c) const {
  double s = std::numeric_limits<double>::infinity();
  for (int i = 0; i < point_count(c); ++i) {
    const BoundaryPoint b = domain.boundary_query(point_of(c, i));
    if (b.outside) return -1.0;
    s = std::min(s, b.distance - boundary_min);
    if (std::isfinite(boundary_max)) s = std::min(s, boundary_max - b.distance);
  }
  if (point_count(c) > 1) s = std::min(s, min_pair_distance(c) - pair_min);
  return s;
}

SearchRegion full_region(const Domain& d, int n, const RegionThresholds& t) {
  t.validate();
  SearchRegion r(d, n);
  r.boundary_min = t.delta_pp;
  r.pair_min = t.delta_pp;
  r.band_fraction = 0.25;
  r.band_width = 2.0 * t.delta_prime;
  r.label = "all points farther than delta'' from the boundary and from each other";
  return r;
}

SearchRegion interior_region(const Domain& d, int n, double delta) {
  SearchRegion r(d, n);
  r.boundary_min = delta;
  r.pair_min = delta;
  r.label = "all points farther than delta from the boundary and from each other";
  return r;
}

SearchRegion strip_region(const Domain& d, int j, const RegionThresholds& t) {
  t.validate();
  SearchRegion r(d, j);
  r.boundary_min = t.delta_pp;
  r.boundary_max = 2.0 * t.delta_prime;
  r.pair_min = t.delta_pp;
  r.band_fraction = 1.0;
  r.band_width = r.boundary_max;
  r.label = "boundary strip delta'' < d < 2 delta'";
  return r;
}

std::vector<Config> region_starts(const SearchRegion& r, int count, std::uint64_t seed) {
  const BandSampler band(r.domain);
  const auto box = r.domain.bounding_box();
  // per point: position (2), band or box, cluster switch, cluster offset
  constexpr int per = 5;
  const int dims = per * r.points;
  boost::random::sobol qrng(dims);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::vector<double> shift(dims);
  for (double& s : shift) s = u01(rng);

  const double reach_lo = std::max(r.pair_min, 1e-6 * r.domain.inradius());
  const double reach_hi = 0.25 * r.domain.inradius();
  std::vector<Config> out;
  out.reserve(count);
  std::vector<double> u(dims);
  std::vector<BandSampler::Foot> feet(r.points);
  Config c(2 * r.points);
  const long long budget = 20000LL * std::max(count, 1);
  for (long long draw = 0; static_cast<int>(out.size()) < count; ++draw) {
    if (draw > budget) throw UnsafeRegion("region " + r.label + " rejected almost every start");
    for (int k = 0; k < dims; ++k) u[k] = std::fmod(unit(qrng()) + shift[k], 1.0);
    for (int i = 0; i < r.points; ++i) {
      const double* q = &u[per * i];
      const bool in_band = q[2] < r.band_fraction;
      // a share of the points start next to the previous one, where tight
      // clusters of zeros live
      const bool cluster = i > 0 && q[3] < r.cluster_fraction;
      const double reach = reach_lo * std::pow(reach_hi / reach_lo, q[4]);
      if (in_band) {
        feet[i] = cluster && feet[i - 1].curve != static_cast<std::size_t>(-1)
                      ? band.slide(feet[i - 1], (2.0 * q[0] - 1.0) * reach)
                      : band.locate(q[0]);
        c.segment<2>(2 * i) = band.at(feet[i], q[1], r.boundary_min, band_top(r));
      } else {
        feet[i].curve = static_cast<std::size_t>(-1);
        c.segment<2>(2 * i) = cluster ? Vec2(point_of(c, i - 1) + reach * Vec2(std::cos(kTwoPi * q[0]),
                                                                                std::sin(kTwoPi * q[0])))
                                      : box_point(box, q[0], q[1]);
      }
    }
    if (r.contains(c)) out.push_back(c);
  }
  return out;
}

std::vector<Config> shell_samples(const SearchRegion& r, int count, std::uint64_t seed) {
  const BandSampler band(r.domain);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::vector<Config> out;
  out.reserve(count);
  const double inner_w = 0.25 * r.boundary_min;
  const double outer_w = std::isfinite(r.boundary_max) ? 0.05 * (r.boundary_max - r.boundary_min) : 0.0;
  for (int attempts = 0; static_cast<int>(out.size()) < count; ++attempts) {
    if (attempts > 1000 * count) throw UnsafeRegion("could not sample the shell of " + r.label);
    Config c = random_config(r, band, rng);
    const int i = static_cast<int>(u01(rng) * r.points);
    const int kinds = 1 + (outer_w > 0) + (r.points > 1);
    int kind = static_cast<int>(u01(rng) * kinds);
    if (kind == 1 && outer_w <= 0) kind = 2;
    if (kind == 0) {
      c.segment<2>(2 * i) = band.point(u01(rng), u01(rng), r.boundary_min, r.boundary_min + inner_w);
    } else if (kind == 1) {
      c.segment<2>(2 * i) = band.point(u01(rng), u01(rng), r.boundary_max - outer_w, r.boundary_max);
    } else {
      const int j = (i + 1 + static_cast<int>(u01(rng) * (r.points - 1))) % r.points;
      const double rho = r.pair_min * (1.0 + 0.25 * u01(rng)), th = kTwoPi * u01(rng);
      c.segment<2>(2 * j) = point_of(c, i) + rho * Vec2(std::cos(th), std::sin(th));
    }
    if (r.contains(c)) out.push_back(c);
  }
  return out;
}

std::optional<Config> newton_zero(const PointField& f, const SearchRegion& r, Config x, const SearchOptions& o,
                                  bool* escaped) {
  if (escaped) *escaped = false;
  const double scale = f.length_scale();
  const int n = point_count(x);
  std::vector<BoundaryFrame> frames(n);

  auto newton_step = [&](const FieldSample& s, const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>& es) {
    const Eigen::VectorXd& lam = es.eigenvalues();
    const double floor = 1e-14 * std::max(lam.cwiseAbs().maxCoeff(), 1e-300);
    Eigen::VectorXd coef = es.eigenvectors().transpose() * s.grad;
    for (int k = 0; k < coef.size(); ++k) coef[k] /= (lam[k] >= 0 ? 1.0 : -1.0) * std::max(std::abs(lam[k]), floor);
    Eigen::VectorXd step = -(es.eigenvectors() * coef);
    const double cap = scale;
    if (step.norm() > cap) step *= cap / step.norm();
    return step;
  };

  try {
    FieldSample s = f.evaluate(x, Need::hessian);
    for (int it = 0; it <= o.max_iterations; ++it) {
      const double gn = s.grad.norm();
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s.hess);
      if (scaled_norm(s.grad, es, scale) < o.zero_tol) {
        // a few full steps more so flat directions do not leave the Hessian off the zero set
        double best = gn;
        for (int k = 0; k < 3; ++k) {
          const Config y = x + newton_step(s, es);
          bool ok = false;
          const Eigen::VectorXd gy = safe_gradient(f, y, ok);
          if (!ok || !(gy.norm() < best)) break;
          best = gy.norm();
          x = y;
          s = f.evaluate(x, Need::hessian);
          es.compute(s.hess);
        }
        if (!r.contains(x)) {
          if (escaped) *escaped = true;
          return std::nullopt;
        }
        return x;
      }
      if (it == o.max_iterations) break;
      const Eigen::VectorXd step = newton_step(s, es);
      for (int i = 0; i < n; ++i) frames[i] = boundary_frame(r, point_of(x, i));

      const double merit = gn * gn;
      double alpha = 1.0;
      bool accepted = false;
      while (alpha > 1e-12) {
        const Config y = advance(r.domain, x, frames, step, alpha);
        bool ok = false;
        const Eigen::VectorXd gy = safe_gradient(f, y, ok);
        if (ok && gy.squaredNorm() <= (1.0 - 1e-4 * alpha) * merit) {
          x = y;
          accepted = true;
          break;
        }
        alpha *= 0.5;
      }
      if (!accepted) return std::nullopt;
      s = f.evaluate(x, Need::hessian);
    }
  } catch (const std::exception&) {
    return std::nullopt;
  }
  return std::nullopt;
}

CriticalPointRecord classify_zero(const PointField& f, const Config& c, const SearchOptions& o) {
  CriticalPointRecord rec;
  rec.location = c;
  const FieldSample s = f.evaluate(c, Need::hessian);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s.hess);
  rec.eigenvalues = es.eigenvalues();
  rec.gradient_norm = scaled_norm(s.grad, es, f.length_scale());
  const Eigen::VectorXd a = rec.eigenvalues.cwiseAbs();
  rec.conditioning = a.maxCoeff() > 0 ? a.minCoeff() / a.maxCoeff() : 0.0;
  if (rec.conditioning < default_degeneracy_tol(f, o)) return rec;
  rec.morse_index = static_cast<int>((rec.eigenvalues.array() < 0).count());
  rec.det_sign = rec.morse_index % 2 ? -1 : 1;
  return rec;
}

FindResult find_zeros(const PointField& f, const SearchRegion& r, const SearchOptions& o) {
  return find_impl(f, r, o, true);
}

FindResult find_zeros_reference(const PointField& f, const SearchRegion& r, const SearchOptions& o) {
  return find_impl(f, r, o, false);
}

DegreeReport brouwer_degree(const PointField& f, const SearchRegion& r, const SearchOptions& o) {
  DegreeReport rep;
  rep.field = f.tag();
  rep.region = r.label;

  const std::vector<Config> shell = shell_samples(r, o.shell_samples, o.seed ^ 0x9e3779b97f4a7c15ULL);
  double margin = std::numeric_limits<double>::infinity();
#pragma omp parallel for reduction(min : margin) schedule(dynamic)
  for (int i = 0; i < static_cast<int>(shell.size()); ++i) {
    bool ok = false;
    const Eigen::VectorXd g = safe_gradient(f, shell[i], ok);
    margin = std::min(margin, ok ? g.norm() * f.length_scale() : 0.0);
  }
  if (margin < 10.0 * o.zero_tol)
    throw UnsafeRegion(f.tag() + ": gradient margin " + std::to_string(margin) + " on the shell of " + r.label);

  FindResult found = find_zeros(f, r, o);
  rep.diagnostics = found.diagnostics;
  rep.diagnostics.shell_margin = margin;
  for (const CriticalPointRecord& z : found.zeros) {
    if (z.det_sign == 0)
      throw DegenerateZero(z, f.tag() + ": degenerate zero at " + describe(z.location) +
                                  " (conditioning " + std::to_string(z.conditioning) +
                                  "); break the symmetry with a small linear change of h and retry");
    rep.signed_total += z.det_sign;
  }
  rep.zeros = std::move(found.zeros);
  return rep;
}

DegreeReport brouwer_degree_perturbed(const FieldFactory& make, const SearchRegion& r, const SearchOptions& o,
                                      double eps, int retries) {
  try {
    return brouwer_degree(*make(WeightFunction::constant()), r, o);
  } catch (const DegenerateZero&) {
  }
  for (int k = 0;; ++k, eps *= 0.5) {
    try {
      DegreeReport rep = brouwer_degree(*make(WeightFunction::linear(Vec2(eps, 0.0))), r, o);
      rep.perturbation = eps;
      return rep;
    } catch (const DegenerateZero&) {
      if (k >= retries) throw;
    }
  }
}

DegreeReport strip_degree(const PointField& f, const SearchRegion& strip, const SearchOptions& o) {
  DegreeReport rep = brouwer_degree(f, strip, o);
  rep.oracle = 0;
  rep.anchor = "strip field degree vanishes";
  return rep;
}

long long expected_degree(int chi, int n) {
  if (n < 1) throw std::invalid_argument("expected_degree needs N >= 1");
  return config_space_euler(chi, n);
}

long long meanfield_degree(int chi, int n) {
  if (n < 0) throw std::invalid_argument("meanfield_degree needs N >= 0");
  const long long a = static_cast<long long>(n) - chi;
  long long b = 1;
  for (int i = 0; i < n; ++i) b = b * (a - i) / (i + 1);
  return b;
}

std::vector<JumpRow> degree_jump_check(int chi, int n_max) {
  if (n_max < 1) throw std::invalid_argument("degree_jump_check needs N_max >= 1");
  std::vector<JumpRow> rows;
  long long factorial = 1;
  for (int n = 0; n < n_max; ++n) {
    factorial *= n + 1;
    JumpRow row;
    row.chi = chi;
    row.n = n;
    row.lower = meanfield_degree(chi, n);
    row.upper = meanfield_degree(chi, n + 1);
    row.jump = Rational(row.upper - row.lower);
    const long long sign = (n + 1) % 2 ? -1 : 1;
    row.predicted = Rational(sign * expected_degree(chi, n + 1), factorial);
    row.holds = row.jump == row.predicted;
    if (!row.holds)
      throw JumpMismatch("degree jump mismatch at chi=" + std::to_string(chi) + ", N=" + std::to_string(n));
    rows.push_back(row);
  }
  return rows;
}

ExcisionCheck excision_check(const DegreeReport& global, const Domain& d, const RegionThresholds& t,
                             std::span<const long long> interior_deg, std::span<const long long> strip_deg) {
  if (global.zeros.empty() && global.signed_total != 0) throw std::invalid_argument("report without zeros");
  const int n = global.zeros.empty() ? static_cast<int>(interior_deg.size()) - 1
                                     : point_count(global.zeros.front().location);
  if (static_cast<int>(interior_deg.size()) < n + 1 || static_cast<int>(strip_deg.size()) < n + 1)
    throw std::invalid_argument("need degrees for 0..N points");
  ExcisionCheck out;
  out.global_total = global.signed_total;
  out.classes.resize(n + 1);
  for (int k = 0; k <= n; ++k) {
    out.classes[k].strip_points = k;
    long long binom = 1;
    for (int i = 0; i < k; ++i) binom = binom * (n - i) / (i + 1);
    const long long inner = n - k == 0 ? 1 : interior_deg[n - k];
    const long long strip = k == 0 ? 1 : strip_deg[k];
    out.classes[k].predicted = binom * inner * strip;
  }
  for (const CriticalPointRecord& z : global.zeros) {
    int k = 0;
    for (int i = 0; i < n; ++i) k += d.distance_to_boundary(point_of(z.location, i)) < 2.0 * t.delta_prime;
    out.classes[k].observed += z.det_sign;
  }
  out.interior_total = out.classes[0].observed;
  out.holds = true;
  long long sum = 0;
  for (const ExcisionClass& c : out.classes) {
    out.holds = out.holds && c.observed == c.predicted;
    sum += c.predicted;
  }
  out.holds = out.holds && sum == global.signed_total;
  return out;
}

std::vector<ScanRow> compactness_scan(const GreenEvaluator& e, int n, const WeightFunction& h,
                                      std::span<const double> deltas, std::span<const double> ts, int samples,
                                      std::uint64_t seed) {
  const Domain& d = e.domain();
  const BandSampler band(d);
  const auto box = d.bounding_box();
  std::vector<ScanRow> rows;
  for (std::size_t a = 0; a < deltas.size(); ++a) {
    const double delta = deltas[a];
    std::mt19937_64 rng(seed + 7919 * a);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::vector<Config> pool;
    while (static_cast<int>(pool.size()) < samples) {
      Config c(2 * n);
      for (int i = 0; i < n; ++i) {
        Vec2 p;
        do p = box_point(box, u01(rng), u01(rng));
        while (d.distance_to_boundary(p) <= 1e-9 || !d.contains(p));
        c.segment<2>(2 * i) = p;
      }
      const int i = static_cast<int>(u01(rng) * n);
      if (n > 1 && u01(rng) < 0.5) {
        const int j = (i + 1 + static_cast<int>(u01(rng) * (n - 1))) % n;
        const double rho = delta * u01(rng), th = kTwoPi * u01(rng);
        c.segment<2>(2 * j) = point_of(c, i) + rho * Vec2(std::cos(th), std::sin(th));
      } else {
        c.segment<2>(2 * i) = band.point(u01(rng), u01(rng), 0.0, delta);
      }
      bool ok = true;
      for (int k = 0; k < n; ++k) {
        const BoundaryPoint b = d.boundary_query(point_of(c, k));
        ok = ok && !b.outside && b.distance > 1e-9;
      }
      if (ok && (n < 2 || min_pair_distance(c) > 1e-9)) pool.push_back(c);
    }
    for (double t : ts) {
      WeightProfile w = WeightProfile::standard(n);
      w.h = h;
      const auto f = phi_field(e, n, w, t);
      double mn = std::numeric_limits<double>::infinity();
#pragma omp parallel for reduction(min : mn) schedule(dynamic)
      for (int k = 0; k < samples; ++k) mn = std::min(mn, f->gradient(pool[k]).norm());
      rows.push_back({delta, t, mn, samples});
    }
  }
  return rows;
}

ForbiddenZone forbidden_zone_scan(const PointField& bent, const Domain& d, const RegionThresholds& t, int samples,
                                  std::uint64_t seed) {
  const SearchRegion r = full_region(d, bent.points(), t);
  const BandSampler band(d);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::vector<Config> pool;
  while (static_cast<int>(pool.size()) < samples) {
    Config c = random_config(r, band, rng);
    const int i = static_cast<int>(u01(rng) * r.points);
    c.segment<2>(2 * i) = band.point(u01(rng), u01(rng), t.delta_prime, t.delta);
    if (r.contains(c)) pool.push_back(c);
  }
  double mn = std::numeric_limits<double>::infinity();
#pragma omp parallel for reduction(min : mn) schedule(dynamic)
  for (int k = 0; k < samples; ++k) mn = std::min(mn, bent.gradient(pool[k]).norm());
  return {mn, samples, t};
}

nlohmann::json to_json(const CriticalPointRecord& r) {
  return {{"location", std::vector<double>(r.location.data(), r.location.data() + r.location.size())},
          {"gradient_norm", r.gradient_norm},
          {"det_sign", r.det_sign},
          {"morse_index", r.morse_index},
          {"basin_count", r.basin_count},
          {"eigenvalues", std::vector<double>(r.eigenvalues.data(), r.eigenvalues.data() + r.eigenvalues.size())},
          {"conditioning", r.conditioning}};
}

nlohmann::json to_json(const DegreeReport& r) {
  nlohmann::json zeros = nlohmann::json::array();
  for (const CriticalPointRecord& z : r.zeros) zeros.push_back(to_json(z));
  nlohmann::json j = {{"field", r.field},
                      {"region", r.region},
                      {"signed_total", r.signed_total},
                      {"oracle", r.oracle ? nlohmann::json(*r.oracle) : nlohmann::json()},
                      {"matches_oracle", r.matches_oracle()},
                      {"anchor", r.anchor},
                      {"perturbation", r.perturbation},
                      {"zeros", zeros},
                      {"diagnostics",
                       {{"starts", r.diagnostics.starts},
                        {"converged", r.diagnostics.converged},
                        {"escaped", r.diagnostics.escaped},
                        {"failed", r.diagnostics.failed},
                        {"shell_margin", r.diagnostics.shell_margin}}}};
  return j;
}

}  // namespace mflab
