#include "mflab/degree.hpp"
#include "mflab/errors.hpp"

#include <doctest.h>

using namespace mflab;

namespace {

std::unique_ptr<PointField> tilted_phi(const GreenEvaluator& g, int n, Vec2 slope, double t = 1.0) {
  WeightProfile w = WeightProfile::standard(n);
  w.h = WeightFunction::linear(slope);
  return phi_field(g, n, w, t);
}

SearchOptions with_starts(int starts) {
  SearchOptions o;
  o.starts = starts;
  return o;
}

}  // namespace

TEST_CASE("degree formulas") {
  CHECK(expected_degree(1, 1) == 1);
  CHECK(expected_degree(0, 2) == 0);
  CHECK(expected_degree(-1, 3) == -6);
  CHECK(meanfield_degree(1, 0) == 1);
  for (int n = 1; n <= 6; ++n) CHECK(meanfield_degree(1, n) == 0);
  CHECK(meanfield_degree(0, 3) == 1);
  CHECK(meanfield_degree(-1, 2) == 3);
  CHECK_THROWS_AS(expected_degree(1, 0), std::invalid_argument);
}

TEST_CASE("jump table, exact rational arithmetic") {
  for (int chi = -3; chi <= 1; ++chi) {
    const auto rows = degree_jump_check(chi, 7);
    REQUIRE(rows.size() == 7);
    for (const auto& r : rows) {
      CHECK(r.holds);
      CHECK(r.jump == r.predicted);
      if (chi == 1) CHECK(r.jump == Rational(r.n == 0 ? -1 : 0));
    }
  }
  // chi = -1, N = 1: binom(3,2) - binom(2,1)
  const auto row = degree_jump_check(-1, 2)[1];
  CHECK(row.upper - row.lower == 1);
  CHECK(row.predicted == Rational(1));
}

TEST_CASE("unit disk, one point: single maximum at the origin") {
  const auto g = make_green(Domain::disk(1));
  const auto region = full_region(g->domain(), 1, RegionThresholds::defaults(1.0));
  const DegreeReport rep = brouwer_degree(*phi_field(*g, 1, WeightProfile::standard(1)), region, with_starts(200));
  REQUIRE(rep.zeros.size() == 1);
  CHECK(rep.zeros[0].location.norm() < 1e-9);
  CHECK(rep.zeros[0].det_sign == 1);
  CHECK(rep.zeros[0].morse_index == 2);
  CHECK(rep.signed_total == expected_degree(1, 1));
  CHECK(rep.diagnostics.shell_margin > 0);
}

TEST_CASE("annulus with constant weight: circle of zeros is flagged") {
  const Domain ann = Domain::annulus(0.4, 1);
  const auto g = make_green(ann);
  const auto region = full_region(ann, 1, RegionThresholds::defaults(ann.inradius()));
  const auto f = phi_field(*g, 1, WeightProfile::standard(1));
  const FindResult found = find_zeros(*f, region, with_starts(200));
  REQUIRE_FALSE(found.zeros.empty());
  for (const auto& z : found.zeros) CHECK(z.det_sign == 0);
  CHECK_THROWS_AS(brouwer_degree(*f, region, with_starts(200)), DegenerateZero);

  FieldFactory make = [&](const WeightFunction& h) {
    WeightProfile w = WeightProfile::standard(1);
    w.h = h;
    return phi_field(*g, 1, w);
  };
  const DegreeReport rep = brouwer_degree_perturbed(make, region, with_starts(500));
  CHECK(rep.perturbation > 0);
  CHECK(rep.signed_total == 0);
}

TEST_CASE("annulus, one point: degree independent of the weight and of t") {
  const Domain ann = Domain::annulus(0.4, 1);
  const auto g = make_green(ann);
  const auto region = full_region(ann, 1, RegionThresholds::defaults(ann.inradius()));
  std::vector<Config> first_locations;
  for (Vec2 slope : {Vec2(0.05, 0), Vec2(0, 0.05)}) {
    const DegreeReport rep = brouwer_degree(*tilted_phi(*g, 1, slope), region, with_starts(500));
    CHECK(rep.signed_total == 0);
    CHECK(rep.zeros.size() >= 2);
    for (const auto& z : rep.zeros) CHECK(z.det_sign != 0);
    first_locations.push_back(rep.zeros.front().location);
  }
  CHECK((first_locations[0] - first_locations[1]).norm() > 1e-3);
  // t = 0 drops the weight and brings the symmetric circle back, so the homotopy starts at 1/4 here
  for (double t : {0.25, 0.5, 0.75})
    CHECK(brouwer_degree(*tilted_phi(*g, 1, {0.05, 0}, t), region, with_starts(500)).signed_total == 0);
}

TEST_CASE("disk, two points: degree constant along the homotopy") {
  const auto g = make_green(Domain::disk(1));
  const auto region = full_region(g->domain(), 2, RegionThresholds::defaults(1.0));
  for (double t : {0.0, 0.25, 0.5, 0.75, 1.0})
    CHECK(brouwer_degree(*tilted_phi(*g, 2, {0.05, 0}, t), region, with_starts(500)).signed_total == 0);
}

TEST_CASE("more starts never change an accepted total") {
  const Domain ann = Domain::annulus(0.4, 1);
  const auto g = make_green(ann);
  const auto region = full_region(ann, 2, RegionThresholds::defaults(ann.inradius()));
  const auto f = tilted_phi(*g, 2, {0.05, 0});
  const auto small = brouwer_degree(*f, region, with_starts(250));
  const auto large = brouwer_degree(*f, region, with_starts(1000));
  CHECK(small.signed_total == large.signed_total);
}

TEST_CASE("parallel and serial searches agree exactly") {
  const Domain ann = Domain::annulus(0.4, 1);
  const auto g = make_green(ann);
  const auto region = full_region(ann, 1, RegionThresholds::defaults(ann.inradius()));
  const auto f = tilted_phi(*g, 1, {0.05, 0.02});
  const FindResult a = find_zeros(*f, region, with_starts(300));
  const FindResult b = find_zeros_reference(*f, region, with_starts(300));
  REQUIRE(a.zeros.size() == b.zeros.size());
  for (std::size_t k = 0; k < a.zeros.size(); ++k) {
    CHECK(a.zeros[k].location == b.zeros[k].location);
    CHECK(a.zeros[k].basin_count == b.zeros[k].basin_count);
  }
  CHECK(a.diagnostics.converged == b.diagnostics.converged);
}

TEST_CASE("found zeros are zeros of the field") {
  const Domain ann = Domain::annulus(0.4, 1);
  const auto g = make_green(ann);
  const auto region = full_region(ann, 2, RegionThresholds::defaults(ann.inradius()));
  const auto f = tilted_phi(*g, 2, {0.05, 0});
  for (const auto& z : find_zeros(*f, region, with_starts(300)).zeros) {
    CHECK(z.gradient_norm < 1e-10);
    CHECK(region.contains(z.location));
  }
}

TEST_CASE("strip degree and excision on the annulus") {
  const Domain ann = Domain::annulus(0.4, 1);
  const auto g = make_green(ann);
  RegionThresholds th = RegionThresholds::defaults(ann.inradius());
  th.delta_pp = th.delta_tilde / 16;
  WeightProfile w1 = WeightProfile::standard(1);
  w1.h = WeightFunction::linear({0.05, 0});
  const auto sf = strip_fields(*g, 1, BendingProfile::from(th), w1);
  const DegreeReport strip = strip_degree(*sf.hat_phi, strip_region(ann, 1, th), with_starts(1000));
  CHECK(strip.matches_oracle());
  CHECK(strip.signed_total == 0);

  WeightProfile w2 = WeightProfile::standard(2);
  w2.h = WeightFunction::linear({0.05, 0});
  const auto bent = bent_phi_field(*g, 2, BendingProfile::from(th), w2);
  const DegreeReport global = brouwer_degree(*bent, full_region(ann, 2, th), with_starts(1000));
  const std::vector<long long> interior{1, 0, 0}, strips{1, 0, 0};
  const ExcisionCheck ex = excision_check(global, ann, th, interior, strips);
  CHECK(ex.holds);
  CHECK(ex.global_total == 0);
}

TEST_CASE("gradient grows toward the singular set; forbidden zone has a margin") {
  const Domain ann = Domain::annulus(0.4, 1);
  const auto g = make_green(ann);
  const std::vector<double> deltas{0.1, 0.05, 0.025}, ts{0.0, 0.5, 1.0};
  const auto rows = compactness_scan(*g, 2, WeightFunction::linear({0.05, 0}), deltas, ts, 500, 3);
  for (double t : ts) {
    double prev = 0;
    for (const auto& r : rows)
      if (r.t == t) {
        CHECK(r.min_grad >= prev);
        prev = r.min_grad;
      }
  }
  const auto th = RegionThresholds::defaults(ann.inradius());
  WeightProfile w = WeightProfile::standard(2);
  const auto bent = bent_phi_field(*g, 2, BendingProfile::from(th), w);
  CHECK(forbidden_zone_scan(*bent, ann, th, 500, 3).min_grad > 0);
}

TEST_CASE("reports serialize the totals") {
  const auto g = make_green(Domain::disk(1));
  const auto region = full_region(g->domain(), 1, RegionThresholds::defaults(1.0));
  DegreeReport rep = brouwer_degree(*phi_field(*g, 1, WeightProfile::standard(1)), region, with_starts(50));
  rep.oracle = 1;
  const auto j = to_json(rep);
  CHECK(j.at("signed_total") == 1);
  CHECK(j.at("zeros").size() == 1);
}
