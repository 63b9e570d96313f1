#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "sphereflow/flow.hpp"
#include "sphereflow/geometry.hpp"

namespace sphereflow {

inline constexpr double kDefaultBetaCap = 50.0;

// Unconstrained parameters of one flow component. Per layer the values are
// laid out as [raw betas (p) | raw centers (3p) | raw etas (p)], and decode()
// maps them to beta = cap tanh(softplus(r)/cap), m = r/|r|, eta = softmax(r).
struct FreeParams {
  int layers = 0;
  int basis = 0;  // p
  double beta_cap = kDefaultBetaCap;
  std::vector<double> values;

  FreeParams() = default;
  FreeParams(int k, int p, double cap = kDefaultBetaCap);

  static int per_layer(int p) { return 5 * p; }
  std::size_t size() const { return values.size(); }

  std::span<double> layer(int k) { return {values.data() + k * per_layer(basis), std::size_t(per_layer(basis))}; }
  std::span<const double> layer(int k) const {
    return {values.data() + k * per_layer(basis), std::size_t(per_layer(basis))};
  }
};

struct SgdConfig {
  double learning_rate = 1e-2;
  std::size_t batch_size = 256;  // clamped to N
  int epochs_per_mstep = 30;
  std::uint64_t seed = 0;
  double momentum = 0.9;
  // Full-batch only: halve the step until the objective does not decrease.
  bool backtracking = false;

  void validate() const;
};

struct WeightedBatch {
  std::vector<UnitVector> points;
  std::vector<double> weights;

  std::size_t size() const { return points.size(); }
  void validate() const;
  static WeightedBatch unit(std::span<const UnitVector> points);
};

ComponentParams decode(const FreeParams& free);

// Right inverse of decode for betas strictly below the cap.
FreeParams encode(const ComponentParams& comp, double beta_cap = kDefaultBetaCap);

// Random centers uniform on S^2, all betas equal to `beta0`, uniform etas.
FreeParams init_free_params(int k, int p, std::uint64_t seed, double beta0 = 0.1,
                            double beta_cap = kDefaultBetaCap);

// sum_j w_j log f(x_j; decode(free)). Zero-weight points are skipped.
double objective(const FreeParams& free, const WeightedBatch& batch);

// Exact gradient of objective() with respect to free.values. Per-point terms
// are combined by a fixed pairwise reduction.
std::vector<double> gradient(const FreeParams& free, const WeightedBatch& batch);

struct MaximizeResult {
  FreeParams params;
  double objective_before = 0.0;
  double objective_after = 0.0;
};

// Mini-batch gradient ascent with momentum on objective(). Each step follows
// the weight-normalized batch gradient. Returns the best of the start and the
// end-of-epoch iterates by full-data objective. Throws std::runtime_error if
// the objective or a gradient becomes non-finite.
MaximizeResult maximize(const FreeParams& free0, const WeightedBatch& data, const SgdConfig& cfg);

}  // namespace sphereflow
