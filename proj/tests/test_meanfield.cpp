#include "mflab/meanfield.hpp"

#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/bessel.hpp>

#include <cmath>
#include <numbers>
#include <sstream>

using namespace mflab;

namespace {

constexpr double kPi = std::numbers::pi;

const Mesh& disk_mesh(double h) {
  static std::map<double, Mesh> cache;
  auto it = cache.find(h);
  if (it == cache.end()) it = cache.emplace(h, triangulate(Domain::disk(1), h)).first;
  return it->second;
}

double u_at_origin(const MeanFieldProblem& p, const MFSolution& s) {
  return *MeshLocator(p.mesh()).interpolate(s.u, Vec2::Zero());
}

}  // namespace

TEST_CASE("closed-form disk family solves the radial equation") {
  for (double mu : {0.3, 1.0, 3.0}) {
    const DiskLiouville f{mu};
    const double lambda = 8 * mu / ((1 + mu) * (1 + mu));
    // -u'' - u'/r = lambda e^u, by central differences
    for (double r : {0.2, 0.5, 0.8}) {
      const double h = 1e-4;
      const double d2 = (f.u(r + h) - 2 * f.u(r) + f.u(r - h)) / (h * h);
      const double d1 = (f.u(r + h) - f.u(r - h)) / (2 * h);
      CHECK(-(d2 + d1 / r) == doctest::Approx(lambda * std::exp(f.u(r))).epsilon(1e-6));
    }
    CHECK(f.u(1.0) == doctest::Approx(0.0));
    const double mass = 2 * kPi *
                        boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
                            [&](double r) { return r * std::exp(f.u(r)); }, 0.0, 1.0);
    CHECK(f.mass() == doctest::Approx(mass).epsilon(1e-12));
    CHECK(f.lambda() == doctest::Approx(lambda));
    CHECK(f.beta() == doctest::Approx(lambda * mass / 2).epsilon(1e-12));
    CHECK(DiskLiouville::from_beta(f.beta()).mu == doctest::Approx(mu));
    CHECK(DiskLiouville::from_gamma(f.gamma()).mu == doctest::Approx(mu));
  }
  CHECK(DiskLiouville::from_beta(2 * kPi).gamma() == doctest::Approx(2 * std::log(2.0)));
  CHECK(DiskLiouville::from_beta(3 * kPi).gamma() == doctest::Approx(2 * std::log(4.0)));
}

TEST_CASE("zero energy gives the zero solution") {
  const MeanFieldProblem p(disk_mesh(0.1), WeightFunction::constant());
  const MFSolution s = solve_meanfield(p, 0.0);
  CHECK(s.u.cwiseAbs().maxCoeff() == 0.0);
  CHECK(s.lambda == 0.0);
}

TEST_CASE("disk oracle and second-order refinement") {
  const double target = 2 * std::log(2.0);
  std::vector<double> hs{0.1, 0.05, 0.025}, errs;
  for (double h : hs) {
    const MeanFieldProblem p(disk_mesh(h), WeightFunction::constant());
    errs.push_back(std::abs(u_at_origin(p, solve_meanfield(p, 2 * kPi)) - target));
  }
  CHECK(errs.back() < 1e-3);
  CHECK(observed_order(hs, errs) >= 1.8);

  const MeanFieldProblem fine(disk_mesh(0.025), WeightFunction::constant());
  CHECK(u_at_origin(fine, solve_meanfield(fine, 3 * kPi)) == doctest::Approx(2 * std::log(4.0)).epsilon(2e-3));
}

TEST_CASE("solutions: residual, positivity, normalization, eigenvalue bound") {
  const MeanFieldProblem p(disk_mesh(0.05), WeightFunction::linear({0.2, -0.1}));
  const double lambda1 = p.first_eigenvalue();
  const double j01 = boost::math::cyl_bessel_j_zero(0.0, 1);
  CHECK(MeanFieldProblem(disk_mesh(0.05), WeightFunction::constant()).first_eigenvalue() ==
        doctest::Approx(j01 * j01).epsilon(2e-3));
  const Eigen::VectorXd* guess = nullptr;
  MFSolution prev;
  for (double beta : {1.0, 4.0, 8.0, 11.0}) {
    const MFSolution s = solve_meanfield(p, beta, guess);
    CHECK(s.residual < 1e-10);
    for (int v = 0; v < p.mesh().vertex_count(); ++v) {
      if (p.mesh().is_boundary(v))
        CHECK(s.u[v] == 0.0);
      else
        CHECK(s.u[v] > 0.0);
    }
    CHECK(2 * beta == doctest::Approx(s.lambda * s.mass).epsilon(1e-10));
    CHECK(2 * s.lambda > 0);
    CHECK(2 * s.lambda <= lambda1);
    prev = s;
    guess = &prev.u;
  }
}

TEST_CASE("continuation along the disk branch") {
  const MeanFieldProblem p(disk_mesh(0.05), WeightFunction::constant());
  ContinuationOptions o;
  o.beta_target = 4 * kPi - 1.0;
  const Branch b = continue_branch(p, o);
  REQUIRE(b.points.size() > 3);
  CHECK(b.folds.empty());
  CHECK(b.points.back().beta == doctest::Approx(o.beta_target).epsilon(1e-12));
  for (std::size_t k = 1; k < b.points.size(); ++k) {
    CHECK(b.points[k].beta > b.points[k - 1].beta);
    CHECK(b.points[k].max_u > b.points[k - 1].max_u);
    CHECK((b.points[k].u - b.points[k - 1].u).cwiseAbs().maxCoeff() <= o.max_nodal_change + 1e-12);
    CHECK(b.points[k].residual < 1e-10);
  }
  // lambda pi (1 + mu) / (2 beta) = 1 along the closed form; loose on a coarse mesh
  const MFSolution& last = b.points.back();
  const double mu = DiskLiouville::from_gamma(last.max_u).mu;
  CHECK(last.lambda * kPi * (1 + mu) / (2 * last.beta) == doctest::Approx(1.0).epsilon(0.05));

  std::ostringstream lines, fields;
  write_branch_jsonl(lines, b);
  const std::string text = lines.str();
  CHECK(std::count(text.begin(), text.end(), '\n') == static_cast<long>(b.points.size()));
  write_branch_fields(fields, b);
  CHECK(fields.str().size() == 16 + 8 * b.points.size() * p.mesh().vertex_count());
  CHECK(blowup_diagnostics(p, b, 1e3).rows.empty());
}

TEST_CASE("a coarse disk mesh turns the branch back below 4 pi") {
  const MeanFieldProblem p(disk_mesh(0.1), WeightFunction::constant());
  ContinuationOptions o;
  o.beta_target = 4 * kPi - 0.2;
  o.max_steps = 60;
  const Branch b = continue_branch(p, o);
  REQUIRE_FALSE(b.folds.empty());
  double turn = 0;
  for (const auto& s : b.points) turn = std::max(turn, s.beta);
  CHECK(turn < 4 * kPi);
  CHECK(b.points.back().beta < turn);
  CHECK(b.steps[b.folds.front()].tangent_beta < 0);
}

TEST_CASE("annulus branch past 4 pi stays a valid solution set") {
  const MeanFieldProblem p(triangulate(Domain::annulus(0.4, 1), 0.07), WeightFunction::constant());
  ContinuationOptions o;
  o.beta_target = 4 * kPi + 2.0;
  o.max_steps = 200;
  const Branch b = continue_branch(p, o);
  REQUIRE_FALSE(b.points.empty());
  for (const auto& s : b.points) {
    CHECK(s.residual < 1e-10);
    CHECK(2 * s.beta == doctest::Approx(s.lambda * s.mass).epsilon(1e-10));
  }
}

TEST_CASE("blow-up diagnostics on a graded disk mesh") {
  MeshOptions mo;
  mo.h_max = 0.05;
  mo.h_min = 0.004;
  mo.grading = 0.08;
  mo.vertex_at_focus = true;
  const MeanFieldProblem p(triangulate(Domain::disk(1), mo), WeightFunction::constant());
  ContinuationOptions o;
  o.gamma_max = 8.5;
  const Branch b = continue_branch(p, o);
  const QuantizationReport q = blowup_diagnostics(p, b);
  REQUIRE_FALSE(q.rows.empty());
  CHECK(q.lambda_decreasing);
  CHECK(q.gap_decreasing);
  CHECK(q.lambda_bound);
  for (const auto& r : q.rows) {
    CHECK(r.nearest_multiple == 1);
    CHECK(std::abs(r.normalization_gap) < 1e-9);
    // closed form gap 4 pi e^(-gamma/2), mesh-limited
    CHECK(r.quantization_gap == doctest::Approx(4 * kPi * std::exp(-r.gamma / 2)).epsilon(0.2));
    CHECK(r.profile_error < 2e-2);
  }
}

TEST_CASE("Newton failure carries the last iterate") {
  const MeanFieldProblem p(disk_mesh(0.1), WeightFunction::constant());
  NewtonOptions o;
  o.max_iterations = 1;
  try {
    solve_meanfield(p, 12.0, nullptr, o);
    FAIL("expected divergence");
  } catch (const MeanFieldDivergence& e) {
    CHECK(e.iterate.u.size() == p.mesh().vertex_count());
  }
}
