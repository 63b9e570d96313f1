#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <vector>

#include "sphereflow/flow.hpp"
#include "sphereflow/optimizer.hpp"

namespace sphereflow {

// f(x) = sum_g tau_g f(x; Theta_g).
struct MixtureModel {
  std::vector<ComponentParams> components;
  std::vector<double> weights;

  std::size_t size() const { return components.size(); }
  void validate() const;
};

// N x G posterior component probabilities; rows sum to one.
struct ResponsibilityMatrix {
  Eigen::MatrixXd values;

  std::size_t rows() const { return std::size_t(values.rows()); }
  std::size_t cols() const { return std::size_t(values.cols()); }
};

// Hard assignment of each observation to one component, stored as labels.
struct AssignmentMatrix {
  std::vector<int> labels;
  int components = 0;

  bool indicator(std::size_t j, int g) const { return labels[j] == g; }
  std::vector<std::size_t> counts() const;
  int nonempty() const;
  bool operator==(const AssignmentMatrix&) const = default;
};

struct FlowShape {
  int layers = 20;  // K
  int basis = 1;    // p
  double beta_cap = kDefaultBetaCap;
  double init_beta = 0.1;
};

struct EmConfig {
  double tol = 1e-5;  // relative change of the observed-data log-likelihood
  int max_iters = 100;
  // Spherical k-means refinements of the seed partition used to initialise.
  int init_kmeans_iters = 5;
  // Worker threads for the per-component M-steps (results do not depend on it).
  int threads = 1;

  void validate() const;
};

struct FitReport {
  double initial_log_likelihood = 0.0;
  std::vector<double> log_likelihood_trace;  // one entry per iteration, after its M-step
  int nonempty_components = 0;
  int iterations = 0;
  bool converged = false;
};

// Mixture log-density with the components packed once for repeated use.
class MixtureEvaluator {
 public:
  explicit MixtureEvaluator(const MixtureModel& model);

  double logdensity(const UnitVector& x) const;
  // N x G matrix of component log-densities.
  Eigen::MatrixXd component_logdensities(std::span<const UnitVector> points) const;
  const std::vector<double>& log_weights() const { return log_weights_; }

 private:
  std::vector<PackedComponent> components_;
  std::vector<double> log_weights_;
};

double mixture_logdensity(const UnitVector& x, const MixtureModel& model);

// Responsibilities from component log-densities and weights.
ResponsibilityMatrix responsibilities(const Eigen::MatrixXd& logdens, std::span<const double> weights);
// sum_j log sum_g tau_g f(x_j; Theta_g)
double observed_log_likelihood(const Eigen::MatrixXd& logdens, std::span<const double> weights);

ResponsibilityMatrix e_step(std::span<const UnitVector> points, const MixtureModel& model);

// Row-wise argmax; ties go to the lowest component index.
AssignmentMatrix harden(const ResponsibilityMatrix& resp);

std::vector<double> update_weights_soft(const ResponsibilityMatrix& resp);
std::vector<double> update_weights_hard(const AssignmentMatrix& assign);

// Drops components with no assigned observations and renormalizes tau.
// The returned assignment is relabeled to match.
struct PrunedModel {
  MixtureModel model;
  AssignmentMatrix assignment;
  std::vector<int> kept;  // original index of each surviving component
};
PrunedModel prune_empty(const MixtureModel& model, const AssignmentMatrix& assign);

struct SoftFit {
  MixtureModel model;
  ResponsibilityMatrix responsibilities;
  FitReport report;
};

struct HardFit {
  MixtureModel model;
  AssignmentMatrix assignment;
  FitReport report;
};

// Soft EM. The final responsibilities are those of the returned model.
SoftFit fit_soft(std::span<const UnitVector> points, int components, const FlowShape& shape, const SgdConfig& cfg,
                 const EmConfig& em_cfg);

// Hard (classification) EM. Components that receive no points in an
// iteration are left unchanged by its M-step. The returned assignment is
// harden(e_step) of the returned model, so it is a fixed point of one more
// E-step.
HardFit fit_hard(std::span<const UnitVector> points, int components, const FlowShape& shape, const SgdConfig& cfg,
                 const EmConfig& em_cfg);

// Single flow fitted to all points from a random start seeded by cfg.seed.
ComponentParams fit_single_flow(std::span<const UnitVector> points, const FlowShape& shape, const SgdConfig& cfg);

// Equal-weight average, in density space, of independently fitted flows.
struct Committee {
  std::vector<ComponentParams> members;

  MixtureModel as_mixture() const;
};

// Member 0 uses cfg.seed, member m > 0 uses derive_seed(cfg.seed, m). Members
// whose fit throws are skipped with a warning on stderr; throws if none succeed.
Committee fit_committee(std::span<const UnitVector> points, int members, const FlowShape& shape,
                        const SgdConfig& cfg);

}  // namespace sphereflow
