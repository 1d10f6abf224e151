// Serial reference kernels against their OpenMP versions.
#include "mflab/degree.hpp"
#include "mflab/green.hpp"
#include "mflab/shooting.hpp"

#include <CLI11.hpp>
#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <vector>

using namespace mflab;

namespace {

double best_of(int repeats, const std::function<void()>& f) {
  double best = 1e300;
  for (int k = 0; k < repeats; ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

bool same(const FindResult& a, const FindResult& b) {
  if (a.zeros.size() != b.zeros.size()) return false;
  for (std::size_t k = 0; k < a.zeros.size(); ++k)
    if (a.zeros[k].det_sign != b.zeros[k].det_sign || a.zeros[k].location != b.zeros[k].location) return false;
  return true;
}

bool same(const BetaCurve& a, const BetaCurve& b) {
  if (a.rows.size() != b.rows.size()) return false;
  for (std::size_t k = 0; k < a.rows.size(); ++k)
    if (a.rows[k].beta != b.rows[k].beta || a.rows[k].lambda != b.rows[k].lambda) return false;
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app("serial vs OpenMP timings");
  int repeats = 3, starts = 1000, gammas = 64;
  std::vector<int> threads{1, 2, 4};
  app.add_option("--repeats", repeats)->check(CLI::PositiveNumber);
  app.add_option("--starts", starts)->check(CLI::PositiveNumber);
  app.add_option("--gammas", gammas)->check(CLI::PositiveNumber);
  app.add_option("--threads", threads);
  CLI11_PARSE(app, argc, argv);

  const Domain ann = Domain::annulus(0.4, 1);
  const auto green = make_green(ann);
  WeightProfile w = WeightProfile::standard(2);
  w.h = WeightFunction::linear({0.05, 0});
  const auto field = phi_field(*green, 2, w);
  const auto region = full_region(ann, 2, RegionThresholds::defaults(ann.inradius()));
  SearchOptions so;
  so.starts = starts;
  const auto grid = log_spaced(0.5, 20.0, gammas);

  std::printf("hardware threads: %d\n", omp_get_num_procs());
  std::printf("%-28s %7s %10s %10s %8s %s\n", "kernel", "threads", "serial_s", "omp_s", "speedup", "identical");

  FindResult zs;
  const double zs_t = best_of(repeats, [&] { zs = find_zeros_reference(*field, region, so); });
  BetaCurve bs;
  const double bs_t = best_of(repeats, [&] { bs = beta_curve_reference(grid, 2.0); });

  for (int t : threads) {
    omp_set_num_threads(t);
    FindResult zp;
    const double zp_t = best_of(repeats, [&] { zp = find_zeros(*field, region, so); });
    std::printf("%-28s %7d %10.3f %10.3f %8.2f %s\n", "find_zeros annulus N=2", t, zs_t, zp_t, zs_t / zp_t,
                same(zs, zp) ? "yes" : "no");
    BetaCurve bp;
    const double bp_t = best_of(repeats, [&] { bp = beta_curve(grid, 2.0); });
    std::printf("%-28s %7d %10.3f %10.3f %8.2f %s\n", "beta_curve p=2", t, bs_t, bp_t, bs_t / bp_t,
                same(bs, bp) ? "yes" : "no");
  }
}
