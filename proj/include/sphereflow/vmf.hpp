#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sphereflow/geometry.hpp"

namespace sphereflow {

struct VmfParams {
  UnitVector mean_direction;
  double concentration = 0.0;  // kappa >= 0
};

struct VmfMixture {
  std::vector<VmfParams> components;
  std::vector<double> weights;

  void validate() const;
  double density(const UnitVector& x) const;
  double logdensity(const UnitVector& x) const;
};

// One synthetic-data configuration: J components with kappa ~ Exp(lambda).
struct SimSetting {
  int components = 10;  // J
  double lambda = 1e-2;
  std::size_t samples = 2000;  // N
  std::uint64_t seed = 0;

  void validate() const;
};

// kappa / (4 pi sinh kappa) exp(kappa <x, mu>) on S^2; 1/(4 pi) in the limit.
double vmf_density(const UnitVector& x, const VmfParams& params);
double vmf_logdensity(const UnitVector& x, const VmfParams& params);

// Exact sampler: the cosine to the mean direction is drawn by inverting its
// CDF, the azimuth uniformly.
std::vector<UnitVector> vmf_sample(const VmfParams& params, std::size_t n, std::uint64_t seed);

struct SimulatedData {
  std::vector<UnitVector> points;
  VmfMixture truth;
};

// Means uniform on S^2, kappa_j ~ Exp(lambda), equal weights 1/J; then N
// unlabelled draws from the mixture.
SimulatedData generate_setting(const SimSetting& setting);

}  // namespace sphereflow
