#pragma once

#include "mflab/errors.hpp"
#include "mflab/mesh.hpp"
#include "mflab/routh.hpp"

#include <Eigen/Sparse>

#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

namespace mflab {

// P1 stiffness on interior nodes plus lumped mass; the weight h is sampled at the nodes.
class MeanFieldProblem {
 public:
  MeanFieldProblem(Mesh m, WeightFunction h);

  const Mesh& mesh() const { return mesh_; }
  const WeightFunction& weight() const { return h_; }
  int unknowns() const { return static_cast<int>(interior_.size()); }
  const Eigen::SparseMatrix<double>& stiffness() const { return k_; }
  const Eigen::VectorXd& lumped_mass() const { return mass_; }  // all nodes
  const Eigen::VectorXd& nodal_weight() const { return hval_; }  // all nodes
  const std::vector<int>& interior_nodes() const { return interior_; }

  Eigen::VectorXd expand(const Eigen::VectorXd& interior_values) const;
  Eigen::VectorXd restrict(const Eigen::VectorXd& nodal) const;
  double domain_measure() const { return mass_.sum(); }
  double weighted_measure() const;  // integral of h

  // Smallest eigenvalue of K v = lambda M v with Dirichlet data, by inverse iteration.
  double first_eigenvalue() const;

 private:
  Mesh mesh_;
  WeightFunction h_;
  std::vector<int> interior_;
  Eigen::SparseMatrix<double> k_;
  Eigen::VectorXd mass_, hval_;
};

struct MFSolution {
  Eigen::VectorXd u;  // nodal, zero on boundary vertices
  double beta = 0.0;
  double lambda = 0.0;  // 2 beta / mass
  double mass = 0.0;    // integral of h e^u
  double max_u = 0.0;
  Vec2 peak = Vec2::Zero();
  int peak_node = -1;
  double residual = 0.0;  // |F|_inf / max(1, |K u|_inf)
  int iterations = 0;
};

struct NewtonOptions {
  int max_iterations = 60;
  double tolerance = 1e-10;
};

// Thrown by solve_meanfield; carries the last iterate.
struct MeanFieldDivergence : NonConvergence {
  MeanFieldDivergence(MFSolution last, const std::string& what) : NonConvergence(what), iterate(std::move(last)) {}
  MFSolution iterate;
};

MFSolution solve_meanfield(const MeanFieldProblem& p, double beta, const Eigen::VectorXd* initial = nullptr,
                           const NewtonOptions& o = {});
MFSolution solve_meanfield(const Mesh& m, double beta, const WeightFunction& h,
                           const Eigen::VectorXd* initial = nullptr);

// Closed-form disk family u = 2 ln((1 + mu) / (1 + mu r^2)) for h = 1 on the unit disk.
struct DiskLiouville {
  double mu = 0.0;
  static DiskLiouville from_beta(double beta);    // beta in [0, 4 pi)
  static DiskLiouville from_gamma(double gamma);  // gamma = u(0)
  double beta() const;
  double lambda() const;
  double gamma() const;
  double mass() const;
  double u(double r) const;
};

struct ContinuationOptions {
  double beta_start = 0.1;
  double beta_target = std::numeric_limits<double>::infinity();
  double gamma_max = std::numeric_limits<double>::infinity();
  double ds = 0.25;
  double ds_min = 1e-8;
  double ds_max = 2.0;
  double max_nodal_change = 0.5;  // per accepted step, nodal max-norm
  double theta = 1.0;             // weight of the nodal part in the arclength norm
  int max_steps = 2000;
  int max_corrector = 8;
  double tolerance = 1e-10;
};

struct BranchStep {
  double ds = 0.0;
  int corrector_iterations = 0;
  double tangent_beta = 0.0;  // d beta / ds
};

struct Branch {
  std::vector<MFSolution> points;
  std::vector<BranchStep> steps;  // steps[k] produced points[k]
  std::vector<int> folds;         // indices where d beta / ds changed sign
  std::string stop_reason;
  bool underflow = false;
};

Branch continue_branch(const MeanFieldProblem& p, const ContinuationOptions& o,
                       const Eigen::VectorXd* initial = nullptr);

struct BlowupRow {
  double beta = 0.0;
  double lambda = 0.0;
  double gamma = 0.0;
  Vec2 peak = Vec2::Zero();
  double bubble_scale = 0.0;  // sqrt(8 / (lambda h(peak) e^gamma))
  double profile_error = 0.0;
  int nearest_multiple = 0;   // N with 4 pi N closest to beta
  double quantization_gap = 0.0;
  double beta_pde = 0.0;      // (lambda / 2) integral of h (e^u - 1)
  double normalization_gap = 0.0;  // beta - beta_pde - lambda |h|_1 / 2
};

struct QuantizationReport {
  double threshold = 6.0;
  double window = 2.0;
  double lambda1 = 0.0;
  std::vector<BlowupRow> rows;
  bool lambda_decreasing = false;
  bool gap_decreasing = false;
  bool lambda_bound = false;  // 0 < 2 lambda <= lambda1 on every branch point
};

// sup over |z| <= window of |u(peak) - u(peak + s z) - 2 ln(1 + |z|^2)|, P1 interpolation.
double profile_error(const MeanFieldProblem& p, const MeshLocator& loc, const MFSolution& s, double window = 2.0);

// Rows for branch points with gamma >= threshold; empty when the branch never gets there.
QuantizationReport blowup_diagnostics(const MeanFieldProblem& p, const Branch& b, double threshold = 6.0,
                                      double window = 2.0);

nlohmann::json summary_json(const MFSolution& s);
nlohmann::json to_json(const BlowupRow& r);
void write_branch_jsonl(std::ostream& out, const Branch& b);
// n_points, n_nodes as int64 followed by row-major nodal values.
void write_branch_fields(std::ostream& out, const Branch& b);

}  // namespace mflab
