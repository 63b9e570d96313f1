#include "sphereflow/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <thread>

#include "sphereflow/seeding.hpp"

namespace sphereflow {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Runs body(i) for i in [0, n) on up to `threads` workers. Each index is
// handled independently, so results do not depend on the worker count.
template <typename Body>
void parallel_for(std::size_t n, int threads, Body body) {
  const std::size_t workers = std::min<std::size_t>(std::max(threads, 1), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) body(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

double log_sum_exp(const double* values, std::size_t n, std::size_t stride) {
  double peak = kNegInf;
  for (std::size_t i = 0; i < n; ++i) peak = std::max(peak, values[i * stride]);
  if (peak == kNegInf) return kNegInf;
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) total += std::exp(values[i * stride] - peak);
  return peak + std::log(total);
}

std::vector<double> log_of(std::span<const double> weights) {
  std::vector<double> out;
  out.reserve(weights.size());
  for (double w : weights) out.push_back(w > 0.0 ? std::log(w) : kNegInf);
  return out;
}

}  // namespace

void MixtureModel::validate() const {
  if (components.empty()) throw std::invalid_argument("MixtureModel: G must be >= 1");
  if (weights.size() != components.size()) throw std::invalid_argument("MixtureModel: weight count mismatch");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw std::invalid_argument("MixtureModel: weights must be >= 0");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-10) throw std::invalid_argument("MixtureModel: weights must sum to 1");
  for (const auto& c : components) c.validate();
}

std::vector<std::size_t> AssignmentMatrix::counts() const {
  std::vector<std::size_t> out(components, 0);
  for (int g : labels) ++out[g];
  return out;
}

int AssignmentMatrix::nonempty() const {
  const auto c = counts();
  return int(std::count_if(c.begin(), c.end(), [](std::size_t n) { return n > 0; }));
}

void EmConfig::validate() const {
  if (!(tol >= 0.0)) throw std::invalid_argument("EmConfig: tol must be >= 0");
  if (max_iters < 0) throw std::invalid_argument("EmConfig: max_iters must be >= 0");
  if (init_kmeans_iters < 0) throw std::invalid_argument("EmConfig: init_kmeans_iters must be >= 0");
}

MixtureEvaluator::MixtureEvaluator(const MixtureModel& model) : log_weights_(log_of(model.weights)) {
  components_.reserve(model.size());
  for (const auto& c : model.components) components_.emplace_back(c);
}

double MixtureEvaluator::logdensity(const UnitVector& x) const {
  std::vector<double> terms(components_.size());
  for (std::size_t g = 0; g < components_.size(); ++g) {
    terms[g] = log_weights_[g] == kNegInf ? kNegInf : log_weights_[g] + components_[g].logdensity(x);
  }
  return log_sum_exp(terms.data(), terms.size(), 1);
}

Eigen::MatrixXd MixtureEvaluator::component_logdensities(std::span<const UnitVector> points) const {
  Eigen::MatrixXd out(points.size(), components_.size());
  for (std::size_t j = 0; j < points.size(); ++j) {
    for (std::size_t g = 0; g < components_.size(); ++g) out(j, g) = components_[g].logdensity(points[j]);
  }
  return out;
}

double mixture_logdensity(const UnitVector& x, const MixtureModel& model) {
  return MixtureEvaluator(model).logdensity(x);
}

ResponsibilityMatrix responsibilities(const Eigen::MatrixXd& logdens, std::span<const double> weights) {
  const auto log_w = log_of(weights);
  const Eigen::Index n = logdens.rows();
  const Eigen::Index g_count = logdens.cols();
  ResponsibilityMatrix resp{Eigen::MatrixXd(n, g_count)};
  std::vector<double> row(g_count);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index g = 0; g < g_count; ++g) row[g] = log_w[g] == kNegInf ? kNegInf : log_w[g] + logdens(j, g);
    const double norm = log_sum_exp(row.data(), row.size(), 1);
    if (!std::isfinite(norm)) {
      throw std::runtime_error("e_step: observation " + std::to_string(j) + " has zero density under every component");
    }
    for (Eigen::Index g = 0; g < g_count; ++g) resp.values(j, g) = std::exp(row[g] - norm);
  }
  return resp;
}

double observed_log_likelihood(const Eigen::MatrixXd& logdens, std::span<const double> weights) {
  const auto log_w = log_of(weights);
  std::vector<double> row(logdens.cols());
  double total = 0.0;
  for (Eigen::Index j = 0; j < logdens.rows(); ++j) {
    for (Eigen::Index g = 0; g < logdens.cols(); ++g) row[g] = log_w[g] == kNegInf ? kNegInf : log_w[g] + logdens(j, g);
    total += log_sum_exp(row.data(), row.size(), 1);
  }
  return total;
}

ResponsibilityMatrix e_step(std::span<const UnitVector> points, const MixtureModel& model) {
  if (points.empty()) throw std::invalid_argument("e_step: no observations");
  const MixtureEvaluator eval(model);
  return responsibilities(eval.component_logdensities(points), model.weights);
}

AssignmentMatrix harden(const ResponsibilityMatrix& resp) {
  AssignmentMatrix out;
  out.components = int(resp.cols());
  out.labels.resize(resp.rows());
  for (std::size_t j = 0; j < resp.rows(); ++j) {
    int best = 0;
    for (int g = 1; g < out.components; ++g) {
      if (resp.values(j, g) > resp.values(j, best)) best = g;
    }
    out.labels[j] = best;
  }
  return out;
}

std::vector<double> update_weights_soft(const ResponsibilityMatrix& resp) {
  std::vector<double> tau(resp.cols(), 0.0);
  for (std::size_t g = 0; g < resp.cols(); ++g) {
    double sum = 0.0;
    for (std::size_t j = 0; j < resp.rows(); ++j) sum += resp.values(j, g);
    tau[g] = sum / double(resp.rows());
  }
  return tau;
}

std::vector<double> update_weights_hard(const AssignmentMatrix& assign) {
  const auto counts = assign.counts();
  std::vector<double> tau(counts.size());
  for (std::size_t g = 0; g < counts.size(); ++g) tau[g] = double(counts[g]) / double(assign.labels.size());
  return tau;
}

PrunedModel prune_empty(const MixtureModel& model, const AssignmentMatrix& assign) {
  if (assign.components != int(model.size())) throw std::invalid_argument("prune_empty: shape mismatch");
  const auto counts = assign.counts();
  PrunedModel out;
  std::vector<int> relabel(model.size(), -1);
  double kept_mass = 0.0;
  for (std::size_t g = 0; g < model.size(); ++g) {
    if (counts[g] == 0) continue;
    relabel[g] = int(out.kept.size());
    out.kept.push_back(int(g));
    out.model.components.push_back(model.components[g]);
    out.model.weights.push_back(model.weights[g]);
    kept_mass += model.weights[g];
  }
  if (out.kept.empty()) throw std::runtime_error("prune_empty: every component is empty");
  if (!(kept_mass > 0.0)) throw std::runtime_error("prune_empty: surviving components carry no weight");
  for (double& w : out.model.weights) w /= kept_mass;
  out.assignment.components = int(out.kept.size());
  out.assignment.labels.reserve(assign.labels.size());
  for (int g : assign.labels) out.assignment.labels.push_back(relabel[g]);
  return out;
}

namespace {

struct EmOutcome {
  MixtureModel model;
  ResponsibilityMatrix resp;
  FitReport report;
};

// Seeds G distinct observations, assigns every point to its nearest seed and
// refines the partition with a few spherical k-means steps.
std::vector<int> seed_partition(std::span<const UnitVector> points, int g_count, int kmeans_iters,
                                std::uint64_t seed) {
  const std::size_t n = points.size();
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (int g = 0; g < g_count; ++g) {
    std::uniform_int_distribution<std::size_t> pick(g, n - 1);
    std::swap(idx[g], idx[pick(rng)]);
  }
  std::vector<Vec3> centers;
  for (int g = 0; g < g_count; ++g) centers.push_back(points[idx[g]].vec());

  std::vector<int> labels(n, 0);
  auto assign = [&] {
    for (std::size_t j = 0; j < n; ++j) {
      int best = 0;
      double best_dot = points[j].vec().dot(centers[0]);
      for (int g = 1; g < g_count; ++g) {
        const double d = points[j].vec().dot(centers[g]);
        if (d > best_dot) {
          best = g;
          best_dot = d;
        }
      }
      labels[j] = best;
    }
  };
  assign();
  for (int it = 0; it < kmeans_iters; ++it) {
    std::vector<Vec3> sums(g_count, Vec3::Zero());
    for (std::size_t j = 0; j < n; ++j) sums[labels[j]] += points[j].vec();
    for (int g = 0; g < g_count; ++g) {
      if (sums[g].norm() > 1e-12) centers[g] = sums[g].normalized();
    }
    assign();
  }
  return labels;
}

SgdConfig with_seed(const SgdConfig& cfg, std::uint64_t seed) {
  SgdConfig out = cfg;
  out.seed = seed;
  return out;
}

EmOutcome run_em(std::span<const UnitVector> points, int g_count, const FlowShape& shape, const SgdConfig& cfg,
                 const EmConfig& em_cfg, bool hard) {
  cfg.validate();
  em_cfg.validate();
  const std::size_t n = points.size();
  if (g_count < 1) throw std::invalid_argument("fit: G must be >= 1");
  if (n < std::size_t(g_count)) throw std::invalid_argument("fit: need at least G observations");

  // Initial components: each flow is fitted to one cell of a seeded
  // partition, so components start out distinct.
  const auto cells = seed_partition(points, g_count, em_cfg.init_kmeans_iters, derive_seed(cfg.seed, 0));
  std::vector<FreeParams> free(g_count);
  parallel_for(std::size_t(g_count), em_cfg.threads, [&](std::size_t g) {
    WeightedBatch cell;
    for (std::size_t j = 0; j < n; ++j) {
      if (cells[j] == int(g)) {
        cell.points.push_back(points[j]);
        cell.weights.push_back(1.0);
      }
    }
    FreeParams init = init_free_params(shape.layers, shape.basis, derive_seed(cfg.seed, 1 + g), shape.init_beta,
                                       shape.beta_cap);
    if (cell.size() == 0) {
      free[g] = std::move(init);
      return;
    }
    free[g] = maximize(init, cell, with_seed(cfg, derive_seed(cfg.seed, 1 + g_count + g))).params;
  });
  std::vector<double> tau(g_count, 1.0 / g_count);

  auto logdens_of = [&](const std::vector<FreeParams>& params) {
    Eigen::MatrixXd out(n, g_count);
    parallel_for(std::size_t(g_count), em_cfg.threads, [&](std::size_t g) {
      const PackedComponent comp(decode(params[g]));
      for (std::size_t j = 0; j < n; ++j) out(j, g) = comp.logdensity(points[j]);
    });
    return out;
  };

  Eigen::MatrixXd logdens = logdens_of(free);
  FitReport report;
  report.initial_log_likelihood = observed_log_likelihood(logdens, tau);
  double previous = report.initial_log_likelihood;

  for (int it = 0; it < em_cfg.max_iters; ++it) {
    const ResponsibilityMatrix resp = responsibilities(logdens, tau);
    std::vector<WeightedBatch> batches(g_count);
    if (hard) {
      const AssignmentMatrix assign = harden(resp);
      tau = update_weights_hard(assign);
      for (std::size_t j = 0; j < n; ++j) {
        batches[assign.labels[j]].points.push_back(points[j]);
        batches[assign.labels[j]].weights.push_back(1.0);
      }
    } else {
      tau = update_weights_soft(resp);
      for (int g = 0; g < g_count; ++g) {
        batches[g].points.assign(points.begin(), points.end());
        batches[g].weights.resize(n);
        for (std::size_t j = 0; j < n; ++j) batches[g].weights[j] = resp.values(j, g);
      }
    }
    const std::uint64_t iter_root = derive_seed(cfg.seed, 0x10000 + std::uint64_t(it));
    parallel_for(std::size_t(g_count), em_cfg.threads, [&](std::size_t g) {
      const double mass = std::accumulate(batches[g].weights.begin(), batches[g].weights.end(), 0.0);
      if (!(mass > 0.0)) return;  // empty this iteration: frozen
      free[g] = maximize(free[g], batches[g], with_seed(cfg, derive_seed(iter_root, g))).params;
    });
    logdens = logdens_of(free);
    const double current = observed_log_likelihood(logdens, tau);
    report.log_likelihood_trace.push_back(current);
    report.iterations = it + 1;
    const double scale = std::max(std::abs(previous), 1e-300);
    if (std::abs(current - previous) / scale < em_cfg.tol) {
      report.converged = true;
      break;
    }
    previous = current;
  }

  EmOutcome out;
  out.resp = responsibilities(logdens, tau);
  out.model.weights = tau;
  for (const auto& f : free) out.model.components.push_back(decode(f));
  out.report = std::move(report);
  return out;
}

}  // namespace

SoftFit fit_soft(std::span<const UnitVector> points, int components, const FlowShape& shape, const SgdConfig& cfg,
                 const EmConfig& em_cfg) {
  EmOutcome em = run_em(points, components, shape, cfg, em_cfg, false);
  em.report.nonempty_components = harden(em.resp).nonempty();
  return {std::move(em.model), std::move(em.resp), std::move(em.report)};
}

HardFit fit_hard(std::span<const UnitVector> points, int components, const FlowShape& shape, const SgdConfig& cfg,
                 const EmConfig& em_cfg) {
  EmOutcome em = run_em(points, components, shape, cfg, em_cfg, true);
  AssignmentMatrix assign = harden(em.resp);
  em.report.nonempty_components = assign.nonempty();
  return {std::move(em.model), std::move(assign), std::move(em.report)};
}

ComponentParams fit_single_flow(std::span<const UnitVector> points, const FlowShape& shape, const SgdConfig& cfg) {
  const FreeParams init =
      init_free_params(shape.layers, shape.basis, derive_seed(cfg.seed, 1), shape.init_beta, shape.beta_cap);
  return decode(maximize(init, WeightedBatch::unit(points), cfg).params);
}

MixtureModel Committee::as_mixture() const {
  MixtureModel m;
  m.components = members;
  m.weights.assign(members.size(), 1.0 / double(members.size()));
  return m;
}

Committee fit_committee(std::span<const UnitVector> points, int members, const FlowShape& shape,
                        const SgdConfig& cfg) {
  if (members < 1) throw std::invalid_argument("fit_committee: members must be >= 1");
  Committee out;
  for (int m = 0; m < members; ++m) {
    const std::uint64_t seed = m == 0 ? cfg.seed : derive_seed(cfg.seed, std::uint64_t(m));
    try {
      out.members.push_back(fit_single_flow(points, shape, with_seed(cfg, seed)));
    } catch (const std::runtime_error& e) {
      std::cerr << "warning: committee member " << m << " failed: " << e.what() << '\n';
    }
  }
  if (out.members.empty()) throw std::runtime_error("fit_committee: every member failed");
  return out;
}

}  // namespace sphereflow
