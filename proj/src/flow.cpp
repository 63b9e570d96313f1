#include "sphereflow/flow.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace sphereflow {

void LayerParams::validate() const {
  const std::size_t p = betas.size();
  if (p == 0) throw std::invalid_argument("LayerParams: p must be >= 1");
  if (centers.size() != p || etas.size() != p) {
    throw std::invalid_argument("LayerParams: betas, centers and etas differ in length");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < p; ++i) {
    if (!(betas[i] > 0.0) || !std::isfinite(betas[i])) {
      throw std::invalid_argument("LayerParams: beta must be positive and finite");
    }
    if (!(etas[i] > 0.0)) throw std::invalid_argument("LayerParams: eta must be positive");
    if (std::abs(centers[i].vec().norm() - 1.0) > 1e-10) {
      throw std::invalid_argument("LayerParams: center is not a unit vector");
    }
    total += etas[i];
  }
  if (std::abs(total - 1.0) > 1e-10) {
    throw std::invalid_argument("LayerParams: etas must sum to 1 (got " + std::to_string(total) + ")");
  }
}

void ComponentParams::validate() const {
  if (layers.empty()) throw std::invalid_argument("ComponentParams: K must be >= 1");
  for (const auto& layer : layers) layer.validate();
}

double potential(const UnitVector& x, const LayerParams& layer) {
  double phi = 0.0;
  for (std::size_t i = 0; i < layer.size(); ++i) {
    const double beta = layer.betas[i];
    phi += layer.etas[i] / beta * std::exp(beta * (dot(x, layer.centers[i]) - 1.0));
  }
  return phi;
}

namespace {

// Ambient gradient of phi, sum_i eta_i exp(beta_i(<x,m_i> - 1)) m_i.
Vec3 ambient_gradient(const UnitVector& x, const LayerParams& layer) {
  Vec3 a = Vec3::Zero();
  for (std::size_t i = 0; i < layer.size(); ++i) {
    const double beta = layer.betas[i];
    a += layer.etas[i] * std::exp(beta * (dot(x, layer.centers[i]) - 1.0)) * layer.centers[i].vec();
  }
  return a;
}

}  // namespace

TangentVector potential_gradient(const UnitVector& x, const LayerParams& layer) {
  TangentVector g = project_to_tangent(x, ambient_gradient(x, layer));
  const double n = g.norm();
  if (!(n < std::numbers::pi / 2)) {
    throw WrappingViolation("potential gradient norm " + std::to_string(n) + " >= pi/2");
  }
  return g;
}

UnitVector layer_forward(const UnitVector& x, const LayerParams& layer) {
  return exp_map(x, potential_gradient(x, layer));
}

Eigen::Matrix2d layer_jacobian(const UnitVector& x_unit, const LayerParams& layer) {
  const Vec3& x = x_unit.vec();
  const Vec3 a = ambient_gradient(x_unit, layer);
  const TangentVector v_t = potential_gradient(x_unit, layer);
  const Vec3& v = v_t.vec;
  const double xa = x.dot(a);
  const double n = v.norm();

  // sin(n)/n and (n cos n - sin n)/n^3, with series near the removable
  // singularity at n = 0.
  double sinc_n;
  double b_n;
  if (n < 1e-2) {
    const double q = n * n;
    sinc_n = 1.0 - q / 6.0 + q * q / 120.0 - q * q * q / 5040.0;
    b_n = -1.0 / 3.0 + q / 30.0 - q * q / 840.0 + q * q * q / 45360.0;
  } else {
    sinc_n = std::sin(n) / n;
    b_n = (n * std::cos(n) - std::sin(n)) / (n * n * n);
  }
  const double cos_n = std::cos(n);

  const UnitVector y = layer_forward(x_unit, layer);
  const TangentBasis in = tangent_basis(x_unit);
  const TangentBasis out = tangent_basis(y);

  Eigen::Matrix2d jac;
  const Vec3 dirs[2] = {in.e1, in.e2};
  for (int b = 0; b < 2; ++b) {
    const Vec3& u = dirs[b];
    Vec3 da = Vec3::Zero();
    for (std::size_t i = 0; i < layer.size(); ++i) {
      const Vec3& m = layer.centers[i].vec();
      const double beta = layer.betas[i];
      const double w = layer.etas[i] * std::exp(beta * (x.dot(m) - 1.0));
      da += w * beta * m.dot(u) * m;
    }
    const Vec3 dv = da - (u.dot(a) + x.dot(da)) * x - xa * u;
    const double vdv = v.dot(dv);
    const Vec3 dT = -sinc_n * vdv * x + cos_n * u + b_n * vdv * v + sinc_n * dv;
    jac(0, b) = out.e1.dot(dT);
    jac(1, b) = out.e2.dot(dT);
  }
  return jac;
}

double layer_jacobian_logdet(const UnitVector& x, const LayerParams& layer) {
  const double det = layer_jacobian(x, layer).determinant();
  if (!(std::abs(det) >= detail::kDegenerateDet)) {
    throw DegenerateJacobian("layer Jacobian determinant vanished (|det| = " +
                             std::to_string(std::abs(det)) + ")");
  }
  return std::log(std::abs(det));
}

PackedComponent::PackedComponent(const ComponentParams& comp) {
  layers_.reserve(comp.layers.size());
  for (const auto& layer : comp.layers) {
    Layer packed;
    packed.betas = layer.betas;
    packed.etas = layer.etas;
    for (const auto& m : layer.centers) packed.centers.push_back({m[0], m[1], m[2]});
    layers_.push_back(std::move(packed));
  }
}

ComponentEval PackedComponent::eval(const UnitVector& x) const {
  detail::V3<double> z{x[0], x[1], x[2]};
  double logdens = -kLogFourPi;
  for (const auto& layer : layers_) {
    const detail::LayerView<double> view{layer.betas, layer.centers, layer.etas};
    const auto step = detail::layer_step(z, view);
    z = step.out;
    logdens += step.logdet;
  }
  return {logdens, UnitVector::from_normalized(Vec3(z[0], z[1], z[2]))};
}

ComponentEval component_eval(const UnitVector& x, const ComponentParams& comp) {
  return PackedComponent(comp).eval(x);
}

}  // namespace sphereflow
