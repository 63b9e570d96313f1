#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "sphereflow/flow.hpp"
#include "sphereflow/geometry.hpp"

namespace testing {

using namespace sphereflow;

inline UnitVector random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  return UnitVector(n(rng), n(rng), n(rng));
}

inline std::vector<UnitVector> random_points(std::mt19937_64& rng, std::size_t n) {
  std::vector<UnitVector> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(random_unit(rng));
  return out;
}

inline TangentVector random_tangent(std::mt19937_64& rng, const UnitVector& base, double scale) {
  std::normal_distribution<double> n;
  auto t = project_to_tangent(base, Vec3(n(rng), n(rng), n(rng)));
  t.vec *= scale;
  return t;
}

inline LayerParams random_layer(std::mt19937_64& rng, int p, double beta_lo, double beta_hi) {
  std::uniform_real_distribution<double> beta(beta_lo, beta_hi), u(0.1, 1.0);
  LayerParams layer;
  double total = 0.0;
  for (int i = 0; i < p; ++i) {
    layer.betas.push_back(beta(rng));
    layer.centers.push_back(random_unit(rng));
    layer.etas.push_back(u(rng));
    total += layer.etas.back();
  }
  for (double& e : layer.etas) e /= total;
  return layer;
}

inline ComponentParams random_component(std::mt19937_64& rng, int k, int p, double beta_lo, double beta_hi) {
  ComponentParams comp;
  for (int i = 0; i < k; ++i) comp.layers.push_back(random_layer(rng, p, beta_lo, beta_hi));
  return comp;
}

// log|det| of the layer map by central differences along exp-map steps in
// tangent_basis(x), read back in tangent_basis(T(x)).
inline double fd_layer_logdet(const UnitVector& x, const LayerParams& layer, double h = 1e-5) {
  const TangentBasis in = tangent_basis(x);
  const UnitVector y = layer_forward(x, layer);
  const TangentBasis out = tangent_basis(y);
  double J[2][2];
  const Vec3 dirs[2] = {in.e1, in.e2};
  for (int c = 0; c < 2; ++c) {
    const UnitVector xp = exp_map(x, {x, h * dirs[c]});
    const UnitVector xm = exp_map(x, {x, -h * dirs[c]});
    const Vec3 d = (layer_forward(xp, layer).vec() - layer_forward(xm, layer).vec()) / (2 * h);
    J[0][c] = d.dot(out.e1);
    J[1][c] = d.dot(out.e2);
  }
  return std::log(std::abs(J[0][0] * J[1][1] - J[0][1] * J[1][0]));
}

}  // namespace testing
