#pragma once

#include <Eigen/Core>
#include <Eigen/LU>
#include <stdexcept>
#include <vector>

#include "sphereflow/detail/layer_kernel.hpp"
#include "sphereflow/geometry.hpp"

namespace sphereflow {

// Raised when |grad phi| >= pi/2, i.e. the parameters left the region where
// exp_x(grad phi(x)) is known to be a valid transport map.
struct WrappingViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// phi(x) = sum_i (eta_i / beta_i) exp(beta_i (<x, m_i> - 1)).
struct LayerParams {
  std::vector<double> betas;
  std::vector<UnitVector> centers;
  std::vector<double> etas;

  std::size_t size() const { return betas.size(); }
  // Throws std::invalid_argument unless p >= 1, beta > 0, eta > 0, sum eta = 1.
  void validate() const;
};

// K layers applied in order: the first layer acts on the data point.
struct ComponentParams {
  std::vector<LayerParams> layers;

  void validate() const;
};

double potential(const UnitVector& x, const LayerParams& layer);

TangentVector potential_gradient(const UnitVector& x, const LayerParams& layer);

UnitVector layer_forward(const UnitVector& x, const LayerParams& layer);

// 2x2 Jacobian of layer_forward at x, taken from tangent_basis(x) to
// tangent_basis(layer_forward(x)).
Eigen::Matrix2d layer_jacobian(const UnitVector& x, const LayerParams& layer);

double layer_jacobian_logdet(const UnitVector& x, const LayerParams& layer);

struct ComponentEval {
  double logdensity;
  UnitVector endpoint;
};

// log f(x) = -log(4 pi) + sum_k log|det J_k| along the trajectory, together
// with the image of x under the full composition.
ComponentEval component_eval(const UnitVector& x, const ComponentParams& comp);

inline double component_logdensity(const UnitVector& x, const ComponentParams& comp) {
  return component_eval(x, comp).logdensity;
}

// Layers repacked in the kernel's layout; cheaper for repeated evaluation.
class PackedComponent {
 public:
  explicit PackedComponent(const ComponentParams& comp);

  ComponentEval eval(const UnitVector& x) const;
  double logdensity(const UnitVector& x) const { return eval(x).logdensity; }

 private:
  struct Layer {
    std::vector<double> betas;
    std::vector<detail::V3<double>> centers;
    std::vector<double> etas;
  };
  std::vector<Layer> layers_;
};

inline constexpr double kLogFourPi = 2.5310242469692907;  // log(4 pi)

}  // namespace sphereflow
