#include "sphereflow/vmf.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace sphereflow {

namespace {

constexpr double kSmallKappa = 1e-8;

UnitVector uniform_on_sphere(std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  for (;;) {
    const Vec3 v(normal(rng), normal(rng), normal(rng));
    if (v.norm() > 1e-8) return UnitVector(v);
  }
}

UnitVector draw(const VmfParams& params, const TangentBasis& frame, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double u = unif(rng);
  const double kappa = params.concentration;
  double w;
  if (kappa < kSmallKappa) {
    w = 1.0 - 2.0 * u;
  } else {
    w = 1.0 + std::log1p((1.0 - u) * std::expm1(-2.0 * kappa)) / kappa;
  }
  w = std::clamp(w, -1.0, 1.0);
  const double azimuth = 2.0 * std::numbers::pi * unif(rng);
  const double r = std::sqrt(std::max(0.0, 1.0 - w * w));
  const Vec3 x = w * params.mean_direction.vec() + r * (std::cos(azimuth) * frame.e1 + std::sin(azimuth) * frame.e2);
  return UnitVector(x);
}

}  // namespace

void VmfMixture::validate() const {
  if (components.empty()) throw std::invalid_argument("VmfMixture: J must be >= 1");
  if (weights.size() != components.size()) throw std::invalid_argument("VmfMixture: weight count mismatch");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw std::invalid_argument("VmfMixture: weights must be >= 0");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-10) throw std::invalid_argument("VmfMixture: weights must sum to 1");
  for (const auto& c : components) {
    if (!(c.concentration >= 0.0)) throw std::invalid_argument("VmfMixture: kappa must be >= 0");
  }
}

double VmfMixture::density(const UnitVector& x) const {
  double total = 0.0;
  for (std::size_t j = 0; j < components.size(); ++j) total += weights[j] * vmf_density(x, components[j]);
  return total;
}

double VmfMixture::logdensity(const UnitVector& x) const { return std::log(density(x)); }

double vmf_logdensity(const UnitVector& x, const VmfParams& params) {
  const double kappa = params.concentration;
  const double c = dot(x, params.mean_direction);
  if (kappa < kSmallKappa) return std::log1p(kappa * c) - std::log(4.0 * std::numbers::pi);
  // kappa / (4 pi sinh kappa) e^{kappa c} = kappa / (2 pi (1 - e^{-2 kappa})) e^{kappa (c - 1)}
  return std::log(kappa) - std::log(2.0 * std::numbers::pi) - std::log(-std::expm1(-2.0 * kappa)) +
         kappa * (c - 1.0);
}

double vmf_density(const UnitVector& x, const VmfParams& params) { return std::exp(vmf_logdensity(x, params)); }

std::vector<UnitVector> vmf_sample(const VmfParams& params, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const TangentBasis frame = tangent_basis(params.mean_direction);
  std::vector<UnitVector> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(draw(params, frame, rng));
  return out;
}

void SimSetting::validate() const {
  if (components < 1) throw std::invalid_argument("SimSetting: J must be >= 1");
  if (!(lambda > 0.0)) throw std::invalid_argument("SimSetting: lambda must be positive");
  if (samples < 1) throw std::invalid_argument("SimSetting: N must be >= 1");
}

SimulatedData generate_setting(const SimSetting& setting) {
  setting.validate();
  std::mt19937_64 rng(setting.seed);
  std::exponential_distribution<double> kappa_dist(setting.lambda);
  SimulatedData out;
  for (int j = 0; j < setting.components; ++j) {
    const UnitVector mu = uniform_on_sphere(rng);
    out.truth.components.push_back({mu, kappa_dist(rng)});
  }
  out.truth.weights.assign(setting.components, 1.0 / setting.components);

  std::vector<TangentBasis> frames;
  for (const auto& c : out.truth.components) frames.push_back(tangent_basis(c.mean_direction));
  std::discrete_distribution<int> pick(out.truth.weights.begin(), out.truth.weights.end());
  out.points.reserve(setting.samples);
  for (std::size_t i = 0; i < setting.samples; ++i) {
    const int j = pick(rng);
    out.points.push_back(draw(out.truth.components[j], frames[j], rng));
  }
  return out;
}

}  // namespace sphereflow
