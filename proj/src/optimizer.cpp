#include "sphereflow/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

#include "sphereflow/detail/layer_kernel.hpp"
#include "sphereflow/dual.hpp"

namespace sphereflow {

FreeParams::FreeParams(int k, int p, double cap) : layers(k), basis(p), beta_cap(cap) {
  if (k < 1 || p < 1) throw std::invalid_argument("FreeParams: K and p must be >= 1");
  if (!(cap > 0.0)) throw std::invalid_argument("FreeParams: beta cap must be positive");
  values.assign(std::size_t(k) * per_layer(p), 0.0);
}

void SgdConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("SgdConfig: learning_rate must be positive");
  if (batch_size < 1) throw std::invalid_argument("SgdConfig: batch_size must be >= 1");
  if (epochs_per_mstep < 0) throw std::invalid_argument("SgdConfig: epochs_per_mstep must be >= 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw std::invalid_argument("SgdConfig: momentum must lie in [0, 1)");
}

void WeightedBatch::validate() const {
  if (points.size() != weights.size()) throw std::invalid_argument("WeightedBatch: length mismatch");
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("WeightedBatch: weights must be finite and >= 0");
  }
}

WeightedBatch WeightedBatch::unit(std::span<const UnitVector> points) {
  return {std::vector<UnitVector>(points.begin(), points.end()), std::vector<double>(points.size(), 1.0)};
}

namespace {

// Unpacked decoded layer in the kernel layout, for scalar type S.
template <typename S>
struct KernelLayer {
  std::vector<S> betas;
  std::vector<detail::V3<S>> centers;
  std::vector<S> etas;

  detail::LayerView<S> view() const { return {betas, centers, etas}; }
};

// Decodes layer k. With S = Dual<N>, raw parameter j of the layer is seeded
// in derivative slot `offset + j`.
template <typename S>
KernelLayer<S> decode_layer(std::span<const double> raw, int p, double cap, int offset) {
  auto seeded = [&](int j) {
    if constexpr (std::is_same_v<S, double>) {
      return raw[j];
    } else {
      return S(raw[j], offset + j);
    }
  };
  KernelLayer<S> out;
  out.betas.reserve(p);
  out.centers.reserve(p);
  for (int i = 0; i < p; ++i) out.betas.push_back(detail::decode_beta(seeded(i), cap));
  for (int i = 0; i < p; ++i) {
    const int base = p + 3 * i;
    out.centers.push_back(detail::normalized3(detail::V3<S>{seeded(base), seeded(base + 1), seeded(base + 2)}));
  }
  std::vector<S> raw_eta;
  raw_eta.reserve(p);
  for (int i = 0; i < p; ++i) raw_eta.push_back(seeded(4 * p + i));
  out.etas.resize(p);
  detail::softmax_into<S>(raw_eta, out.etas);
  return out;
}

// Gradient of sum_j w_j log f(x_j) for p = P basis functions per layer.
// The forward pass stores the trajectory; the backward pass re-evaluates each
// layer with dual numbers over (input point, layer parameters) and chains the
// adjoint of the layer output back to its input.
template <int P>
class TrajectoryGradient {
 public:
  static constexpr int kLocal = 3 + 5 * P;
  using D = Dual<kLocal>;

  explicit TrajectoryGradient(const FreeParams& free) : free_(free) {
    for (int k = 0; k < free.layers; ++k) {
      plain_.push_back(decode_layer<double>(free.layer(k), P, free.beta_cap, 0));
      dual_.push_back(decode_layer<D>(free.layer(k), P, free.beta_cap, 3));
    }
  }

  void accumulate(const UnitVector& x, double weight, std::span<double> grad) const {
    const int K = free_.layers;
    std::vector<detail::V3<double>> traj(K + 1);
    traj[0] = {x[0], x[1], x[2]};
    for (int k = 0; k < K; ++k) traj[k + 1] = detail::layer_step(traj[k], plain_[k].view()).out;

    std::array<double, 3> adj{0.0, 0.0, 0.0};  // d(log f)/d z_k
    for (int k = K - 1; k >= 0; --k) {
      const detail::V3<D> z{D(traj[k][0], 0), D(traj[k][1], 1), D(traj[k][2], 2)};
      const auto step = detail::layer_step(z, dual_[k].view());
      std::array<double, kLocal> local;
      for (int j = 0; j < kLocal; ++j) {
        local[j] = step.logdet.d[j] + adj[0] * step.out[0].d[j] + adj[1] * step.out[1].d[j] +
                   adj[2] * step.out[2].d[j];
      }
      double* g = grad.data() + std::size_t(k) * FreeParams::per_layer(P);
      for (int j = 0; j < 5 * P; ++j) g[j] += weight * local[3 + j];
      adj = {local[0], local[1], local[2]};
    }
  }

 private:
  const FreeParams& free_;
  std::vector<KernelLayer<double>> plain_;
  std::vector<KernelLayer<D>> dual_;
};

inline constexpr int kMaxBasis = 8;

template <int P>
void pairwise_gradient(const TrajectoryGradient<P>& tg, const WeightedBatch& batch, std::size_t lo, std::size_t hi,
                       std::vector<double>& out) {
  constexpr std::size_t kLeaf = 32;
  if (hi - lo <= kLeaf) {
    for (std::size_t j = lo; j < hi; ++j) {
      if (batch.weights[j] == 0.0) continue;
      tg.accumulate(batch.points[j], batch.weights[j], out);
    }
    return;
  }
  const std::size_t mid = lo + (hi - lo) / 2;
  std::vector<double> right(out.size(), 0.0);
  pairwise_gradient(tg, batch, lo, mid, out);
  pairwise_gradient(tg, batch, mid, hi, right);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += right[i];
}

template <int P>
std::vector<double> gradient_for(const FreeParams& free, const WeightedBatch& batch) {
  const TrajectoryGradient<P> tg(free);
  std::vector<double> out(free.size(), 0.0);
  pairwise_gradient(tg, batch, 0, batch.size(), out);
  return out;
}

template <int... Ps>
std::vector<double> dispatch_gradient(const FreeParams& free, const WeightedBatch& batch,
                                      std::integer_sequence<int, Ps...>) {
  std::vector<double> out;
  const bool found = ((free.basis == Ps + 1 ? (out = gradient_for<Ps + 1>(free, batch), true) : false) || ...);
  if (!found) {
    throw std::invalid_argument("gradient: p = " + std::to_string(free.basis) + " exceeds the supported maximum of " +
                                std::to_string(kMaxBasis));
  }
  return out;
}

double softplus_inverse(double y) {
  return y > 30.0 ? y + std::log1p(-std::exp(-y)) : std::log(std::expm1(y));
}

double raw_beta_for(double beta, double cap) {
  if (!(beta > 0.0 && beta < cap)) {
    throw std::invalid_argument("encode: beta must lie in (0, cap)");
  }
  return softplus_inverse(cap * std::atanh(beta / cap));
}

}  // namespace

ComponentParams decode(const FreeParams& free) {
  ComponentParams comp;
  comp.layers.reserve(free.layers);
  for (int k = 0; k < free.layers; ++k) {
    const auto packed = decode_layer<double>(free.layer(k), free.basis, free.beta_cap, 0);
    LayerParams layer;
    layer.betas = packed.betas;
    layer.etas = packed.etas;
    for (const auto& c : packed.centers) layer.centers.push_back(UnitVector(c[0], c[1], c[2]));
    comp.layers.push_back(std::move(layer));
  }
  return comp;
}

FreeParams encode(const ComponentParams& comp, double beta_cap) {
  comp.validate();
  const int k_count = int(comp.layers.size());
  const int p = int(comp.layers.front().size());
  FreeParams free(k_count, p, beta_cap);
  for (int k = 0; k < k_count; ++k) {
    const LayerParams& layer = comp.layers[k];
    if (int(layer.size()) != p) throw std::invalid_argument("encode: layers differ in p");
    auto raw = free.layer(k);
    for (int i = 0; i < p; ++i) {
      raw[i] = raw_beta_for(layer.betas[i], beta_cap);
      for (int c = 0; c < 3; ++c) raw[p + 3 * i + c] = layer.centers[i][c];
      raw[4 * p + i] = std::log(layer.etas[i]);
    }
  }
  return free;
}

FreeParams init_free_params(int k, int p, std::uint64_t seed, double beta0, double beta_cap) {
  FreeParams free(k, p, beta_cap);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  const double raw_beta = raw_beta_for(beta0, beta_cap);
  for (int layer = 0; layer < k; ++layer) {
    auto raw = free.layer(layer);
    for (int i = 0; i < p; ++i) {
      raw[i] = raw_beta;
      Vec3 c;
      do {
        c = Vec3(normal(rng), normal(rng), normal(rng));
      } while (c.norm() < 1e-8);
      c.normalize();
      for (int d = 0; d < 3; ++d) raw[p + 3 * i + d] = c[d];
      raw[4 * p + i] = 0.0;
    }
  }
  return free;
}

double objective(const FreeParams& free, const WeightedBatch& batch) {
  batch.validate();
  const PackedComponent comp(decode(free));
  double total = 0.0;
  for (std::size_t j = 0; j < batch.size(); ++j) {
    if (batch.weights[j] == 0.0) continue;
    total += batch.weights[j] * comp.logdensity(batch.points[j]);
  }
  return total;
}

std::vector<double> gradient(const FreeParams& free, const WeightedBatch& batch) {
  batch.validate();
  return dispatch_gradient(free, batch, std::make_integer_sequence<int, kMaxBasis>{});
}

MaximizeResult maximize(const FreeParams& free0, const WeightedBatch& data, const SgdConfig& cfg) {
  cfg.validate();
  data.validate();
  if (data.size() == 0) throw std::invalid_argument("maximize: empty data");

  auto check_finite = [](double value, const char* what) {
    if (!std::isfinite(value)) {
      throw std::runtime_error(std::string("maximize: non-finite ") + what + "; aborting M-step");
    }
  };

  MaximizeResult result{free0, objective(free0, data), 0.0};
  check_finite(result.objective_before, "objective");
  if (cfg.epochs_per_mstep == 0) {
    result.objective_after = result.objective_before;
    return result;
  }

  FreeParams& params = result.params;
  const std::size_t n = data.size();
  const std::size_t batch_size = std::min(cfg.batch_size, n);
  const bool full_batch = batch_size == n;
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> velocity(params.size(), 0.0);
  double current = result.objective_before;
  FreeParams best = free0;
  double best_value = result.objective_before;

  WeightedBatch mini;
  for (int epoch = 0; epoch < cfg.epochs_per_mstep; ++epoch) {
    if (!full_batch) std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < n; start += batch_size) {
      const std::size_t stop = std::min(n, start + batch_size);
      const WeightedBatch* batch = &data;
      if (!full_batch) {
        mini.points.clear();
        mini.weights.clear();
        for (std::size_t j = start; j < stop; ++j) {
          mini.points.push_back(data.points[order[j]]);
          mini.weights.push_back(data.weights[order[j]]);
        }
        batch = &mini;
      }
      const double wsum = std::accumulate(batch->weights.begin(), batch->weights.end(), 0.0);
      if (!(wsum > 0.0)) continue;
      std::vector<double> g = gradient(params, *batch);
      for (double& gi : g) {
        gi /= wsum;
        check_finite(gi, "gradient");
      }
      for (std::size_t i = 0; i < g.size(); ++i) velocity[i] = cfg.momentum * velocity[i] + g[i];

      if (cfg.backtracking && full_batch) {
        double step = cfg.learning_rate;
        bool accepted = false;
        for (int attempt = 0; attempt < 40 && !accepted; ++attempt, step *= 0.5) {
          FreeParams candidate = params;
          for (std::size_t i = 0; i < g.size(); ++i) candidate.values[i] += step * velocity[i];
          const double value = objective(candidate, data);
          if (std::isfinite(value) && value >= current) {
            params = std::move(candidate);
            current = value;
            accepted = true;
          }
        }
        if (!accepted) std::fill(velocity.begin(), velocity.end(), 0.0);
      } else {
        for (std::size_t i = 0; i < g.size(); ++i) params.values[i] += cfg.learning_rate * velocity[i];
      }
    }
    // The returned parameters are the best full-data iterate seen at an
    // epoch boundary, so an M-step never ends below its start.
    current = objective(params, data);
    check_finite(current, "objective");
    if (current > best_value) {
      best_value = current;
      best = params;
    }
  }
  result.params = std::move(best);
  result.objective_after = best_value;
  return result;
}

}  // namespace sphereflow
