#pragma once

#include "mflab/geometry.hpp"
#include "mflab/routh.hpp"

#include <boost/rational.hpp>

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mflab {

// Configurations with every boundary distance in (boundary_min, boundary_max)
// and every pair distance above pair_min. Starts put each point in the band
// (boundary_min, band_width) with probability band_fraction, and next to the
// previous point with probability cluster_fraction.
struct SearchRegion {
  SearchRegion(Domain d, int n) : domain(std::move(d)), points(n) {}

  Domain domain;
  int points = 1;
  double boundary_min = 0.0;
  double boundary_max = std::numeric_limits<double>::infinity();
  double pair_min = 0.0;
  double band_fraction = 0.0;
  double band_width = 0.0;
  double cluster_fraction = 0.3;
  std::string label;

  bool contains(const Config& c) const;
  // Smallest slack over all constraints; positive inside.
  double slack(const Config& c) const;
};

// d > delta'', pairs > delta''; a quarter of the start points go near the boundary.
SearchRegion full_region(const Domain& d, int n, const RegionThresholds& t);
// (Omega_delta)^N minus the delta-diagonal.
SearchRegion interior_region(const Domain& d, int n, double delta);
// delta'' < d < 2 delta', pairs > delta''.
SearchRegion strip_region(const Domain& d, int j, const RegionThresholds& t);

// Scrambled Sobol starts inside the region; deterministic in seed.
std::vector<Config> region_starts(const SearchRegion& r, int count, std::uint64_t seed);
// Configurations within a thin layer of the region boundary.
std::vector<Config> shell_samples(const SearchRegion& r, int count, std::uint64_t seed);

struct SearchOptions {
  int starts = 1000;
  int max_iterations = 200;
  double zero_tol = 1e-10;         // on |Hess^-1 grad| / length_scale
  double dedup_factor = 1e-6;      // dedup radius = factor * inradius
  double degeneracy_tol = -1.0;    // min|eig| / max|eig|; negative picks by Hessian kind
  int shell_samples = 1000;
  std::uint64_t seed = 1;
};

struct CriticalPointRecord {
  Config location;
  double gradient_norm = 0.0;  // |Hess^-1 grad| / length_scale
  int det_sign = 0;            // 0 marks a degenerate zero
  int morse_index = -1;        // -1 when degenerate
  int basin_count = 0;
  Eigen::VectorXd eigenvalues;
  double conditioning = 0.0;   // min|eig| / max|eig|
};

struct SearchDiagnostics {
  int starts = 0;
  int converged = 0;
  int escaped = 0;
  int failed = 0;
  double shell_margin = std::numeric_limits<double>::quiet_NaN();
};

struct DegreeReport {
  std::string field;
  std::string region;
  std::vector<CriticalPointRecord> zeros;
  long long signed_total = 0;
  std::optional<long long> oracle;
  std::string anchor;
  SearchDiagnostics diagnostics;
  double perturbation = 0.0;  // symmetry-breaking slope used, if any

  bool matches_oracle() const { return oracle && *oracle == signed_total; }
};

nlohmann::json to_json(const CriticalPointRecord& r);
nlohmann::json to_json(const DegreeReport& r);

struct DegenerateZero : std::runtime_error {
  DegenerateZero(CriticalPointRecord r, const std::string& what) : std::runtime_error(what), record(std::move(r)) {}
  CriticalPointRecord record;
};

struct FindResult {
  std::vector<CriticalPointRecord> zeros;
  SearchDiagnostics diagnostics;
};

// Damped Newton from every start, merged in start order. The parallel and
// serial versions return identical results.
FindResult find_zeros(const PointField& f, const SearchRegion& r, const SearchOptions& o);
FindResult find_zeros_reference(const PointField& f, const SearchRegion& r, const SearchOptions& o);

// Newton from one start; nullopt when it fails or leaves the region.
std::optional<Config> newton_zero(const PointField& f, const SearchRegion& r, Config start, const SearchOptions& o,
                                  bool* escaped = nullptr);
CriticalPointRecord classify_zero(const PointField& f, const Config& c, const SearchOptions& o);

// Throws UnsafeRegion when the shell gradient margin is below 10 zero_tol,
// DegenerateZero on a degenerate zero.
DegreeReport brouwer_degree(const PointField& f, const SearchRegion& r, const SearchOptions& o);

// Retries with h = 1 + eps * x1 (eps = 0.05, halved on new degeneracies) when
// the unperturbed field has a degenerate zero.
using FieldFactory = std::function<std::unique_ptr<PointField>(const WeightFunction&)>;
DegreeReport brouwer_degree_perturbed(const FieldFactory& make, const SearchRegion& r, const SearchOptions& o,
                                      double eps = 0.05, int retries = 3);

DegreeReport strip_degree(const PointField& f, const SearchRegion& strip, const SearchOptions& o);

// chi (chi-1) ... (chi-N+1)
long long expected_degree(int chi, int n);
// binom(N - chi, N), generalized binomial
long long meanfield_degree(int chi, int n);

using Rational = boost::rational<long long>;

struct JumpRow {
  int chi = 0;
  int n = 0;
  long long lower = 0;  // meanfield_degree(chi, n)
  long long upper = 0;  // meanfield_degree(chi, n + 1)
  Rational jump;        // upper - lower
  Rational predicted;   // (-1)^(n+1)/(n+1)! * chi (chi-1) ... (chi-n)
  bool holds = false;
};

struct JumpMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Rows for 0 <= N < n_max; throws JumpMismatch on any failing row.
std::vector<JumpRow> degree_jump_check(int chi, int n_max);

// Global zeros of the bent field split by how many points sit within 2 delta'
// of the boundary, compared with binom(N, I) * interior(N - I) * strip(I).
struct ExcisionClass {
  int strip_points = 0;
  long long observed = 0;
  long long predicted = 0;
};
struct ExcisionCheck {
  long long global_total = 0;
  long long interior_total = 0;
  std::vector<ExcisionClass> classes;
  bool holds = false;
};
// interior_deg[k], strip_deg[k] for k = 0..N; index 0 entries are taken as 1.
ExcisionCheck excision_check(const DegreeReport& global, const Domain& d, const RegionThresholds& t,
                             std::span<const long long> interior_deg, std::span<const long long> strip_deg);

// min |grad| over configurations with some point within delta of the
// boundary or some pair closer than delta, one row per delta.
struct ScanRow {
  double delta = 0.0;
  double t = 0.0;
  double min_grad = 0.0;
  int samples = 0;
};
std::vector<ScanRow> compactness_scan(const GreenEvaluator& e, int n, const WeightFunction& h,
                                      std::span<const double> deltas, std::span<const double> ts, int samples,
                                      std::uint64_t seed);

// min |grad| of the bent field over configurations with some point in
// delta' <= d <= delta; the other points range over the full region.
struct ForbiddenZone {
  double min_grad = 0.0;
  int samples = 0;
  RegionThresholds thresholds;
};
ForbiddenZone forbidden_zone_scan(const PointField& bent, const Domain& d, const RegionThresholds& t, int samples,
                                  std::uint64_t seed);

}  // namespace mflab
