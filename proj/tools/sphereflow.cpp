// Command-line front end: fit, simulate, evaluate, export, replicate.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sphereflow/events.hpp"
#include "sphereflow/mixture.hpp"
#include "sphereflow/model_io.hpp"
#include "sphereflow/quadrature.hpp"
#include "sphereflow/run_config.hpp"
#include "sphereflow/seeding.hpp"
#include "sphereflow/vmf.hpp"

using namespace sphereflow;
using nlohmann::ordered_json;

namespace {

std::string fmt(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

// CLI flag -> RunConfig key. Every config key can be overridden on the command line.
const std::vector<std::pair<std::string, std::string>> kConfigFlags = {
    {"-G,--components", "G"},
    {"-K,--layers", "K"},
    {"-p,--basis", "p"},
    {"--beta-cap", "beta_cap"},
    {"--init-beta", "init_beta"},
    {"--algorithm", "algorithm"},
    {"--learning-rate", "learning_rate"},
    {"--batch-size", "batch_size"},
    {"--epochs-per-mstep", "epochs_per_mstep"},
    {"--momentum", "momentum"},
    {"--backtracking", "backtracking"},
    {"--tol", "tol"},
    {"--max-iters", "max_iters"},
    {"--init-kmeans-iters", "init_kmeans_iters"},
    {"--threads", "threads"},
    {"--grid-resolution", "grid_resolution"},
    {"--committee-members", "committee_members"},
    {"--prune", "prune"},
};

struct ConfigFlags {
  std::string config_path;
  std::map<std::string, std::string> overrides;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "Run-config file (key = value lines)")->check(CLI::ExistingFile);
    for (const auto& [flag, key] : kConfigFlags) {
      cmd->add_option(flag, overrides[key], "Overrides config key '" + key + "'");
    }
  }

  RunConfig build(std::uint64_t seed, int default_components) const {
    RunConfig cfg;
    cfg.components = default_components;
    if (!config_path.empty()) cfg = load_run_config(config_path);
    for (const auto& [key, value] : overrides) {
      if (!value.empty()) cfg.set(key, value);
    }
    cfg.seed = seed;
    cfg.sgd.seed = seed;
    cfg.validate();
    return cfg;
  }
};

ordered_json config_json(const RunConfig& cfg) {
  ordered_json j = ordered_json::object();
  for (const auto& [k, v] : cfg.entries()) j[k] = v;
  return j;
}

struct FitOutcome {
  ModelDocument doc;
  std::optional<FitReport> report;
};

FitOutcome run_fit(const std::vector<UnitVector>& points, const RunConfig& cfg) {
  FitOutcome out;
  out.doc.seed = cfg.seed;
  out.doc.metadata["config"] = config_json(cfg);
  switch (cfg.algorithm) {
    case Algorithm::soft: {
      auto fit = fit_soft(points, cfg.components, cfg.shape, cfg.sgd, cfg.em);
      out.doc.model = std::move(fit.model);
      out.report = fit.report;
      break;
    }
    case Algorithm::hard: {
      auto fit = fit_hard(points, cfg.components, cfg.shape, cfg.sgd, cfg.em);
      out.report = fit.report;
      if (cfg.prune) {
        auto pruned = prune_empty(fit.model, fit.assignment);
        out.doc.model = std::move(pruned.model);
      } else {
        out.doc.model = std::move(fit.model);
      }
      break;
    }
    case Algorithm::committee: {
      out.doc.kind = "committee";
      out.doc.model = fit_committee(points, cfg.committee_members, cfg.shape, cfg.sgd).as_mixture();
      break;
    }
  }
  out.doc.metadata["nonempty_components"] = out.doc.model.size();
  return out;
}

std::string report_text(const FitOutcome& fit, const RunConfig& cfg, std::size_t n) {
  std::ostringstream out;
  out << "# fit report\n" << run_config_to_text(cfg);
  out << "observations = " << n << '\n';
  out << "kind = " << fit.doc.kind << '\n';
  out << "nonempty_components = " << fit.doc.model.size() << '\n';
  if (fit.report) {
    const auto& r = *fit.report;
    out << "iterations = " << r.iterations << '\n';
    out << "converged = " << (r.converged ? "true" : "false") << '\n';
    out << "initial_log_likelihood = " << fmt(r.initial_log_likelihood) << '\n';
    if (!r.log_likelihood_trace.empty()) {
      out << "final_log_likelihood = " << fmt(r.log_likelihood_trace.back()) << '\n';
    }
  }
  return out.str();
}

std::string trace_text(const FitReport& r) {
  std::ostringstream out;
  out << "iteration,log_likelihood\n0," << fmt(r.initial_log_likelihood) << '\n';
  for (std::size_t i = 0; i < r.log_likelihood_trace.size(); ++i) {
    out << i + 1 << ',' << fmt(r.log_likelihood_trace[i]) << '\n';
  }
  return out.str();
}

// A model file or a truth file, whichever the path holds.
struct LoadedDensity {
  DensityField field;
  std::uint64_t seed = 0;
};

LoadedDensity load_density(const std::string& path) {
  const std::string text = read_file(path);
  ordered_json probe;
  try {
    probe = ordered_json::parse(text);
  } catch (const nlohmann::json::exception&) {
    throw FormatError(path + ": not a JSON model or truth file");
  }
  LoadedDensity out;
  if (probe.is_object() && probe.value("format", "") == "sphereflow-vmf-mixture") {
    auto truth = std::make_shared<VmfMixture>(truth_from_text(text));
    out.field = {[truth](const UnitVector& x) { return truth->density(x); }, path};
    return out;
  }
  const ModelDocument doc = model_from_text(text);
  auto eval = std::make_shared<MixtureEvaluator>(doc.model);
  out.field = {[eval](const UnitVector& x) { return std::exp(eval->logdensity(x)); }, path};
  out.seed = doc.seed;
  return out;
}

ordered_json setting_json(const SimSetting& s) {
  return {{"J", s.components}, {"lambda", s.lambda}, {"N", s.samples}, {"seed", s.seed}};
}

struct SimFlags {
  SimSetting setting;
  std::uint64_t seed = 0;

  void attach(CLI::App* cmd, bool seed_required) {
    cmd->add_option("-J,--vmf-components", setting.components, "Number of vMF components")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--lambda", setting.lambda, "Rate of the exponential prior on kappa")
        ->check(CLI::PositiveNumber);
    cmd->add_option("-N,--samples", setting.samples, "Number of simulated events")->check(CLI::PositiveNumber);
    auto* opt = cmd->add_option("--seed", seed, "Root random seed");
    if (seed_required) opt->required();
  }
};

struct Metrics {
  double l1 = 0.0;
  double normalization = 0.0;
  std::size_t grid_nodes = 0;
};

Metrics evaluate(const DensityField& model, const DensityField& truth, std::size_t nodes) {
  const QuadratureGrid grid = build_grid(nodes);
  return {l1_distance(model, truth, grid), integrate(model, grid), grid.size()};
}

std::string metrics_text(const Metrics& m, std::uint64_t seed) {
  std::ostringstream out;
  out << "l1 = " << fmt(m.l1) << '\n';
  out << "normalization = " << fmt(m.normalization) << '\n';
  out << "grid_nodes = " << m.grid_nodes << '\n';
  out << "seed = " << seed << '\n';
  return out.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mixtures of normalizing flows for event densities on the sphere"};
  app.require_subcommand(1);

  // fit
  auto* fit = app.add_subcommand("fit", "Fit a mixture of flows (or a committee) to lon/lat events");
  std::string fit_data, fit_model, fit_report, fit_trace;
  std::uint64_t fit_seed = 0;
  ConfigFlags fit_flags;
  fit->add_option("--data", fit_data, "Event CSV with header lon,lat")->required()->check(CLI::ExistingFile);
  fit->add_option("--model", fit_model, "Output model file")->required();
  fit->add_option("--report", fit_report, "Output fit report (default: <model>.report)");
  fit->add_option("--trace", fit_trace, "Output log-likelihood trace (default: <model>.trace.csv)");
  fit->add_option("--seed", fit_seed, "Root random seed")->required();
  fit_flags.attach(fit);

  // simulate
  auto* sim = app.add_subcommand("simulate", "Draw events from a random vMF mixture");
  SimFlags sim_flags;
  std::string sim_data, sim_truth;
  sim_flags.attach(sim, true);
  sim->add_option("--data", sim_data, "Output event CSV")->required();
  sim->add_option("--truth", sim_truth, "Output ground-truth mixture file")->required();

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "L1 distance between a model and the truth");
  std::string ev_model, ev_truth, ev_out;
  std::size_t ev_nodes = 20000;
  ev->add_option("--model", ev_model, "Model (or truth) file")->required()->check(CLI::ExistingFile);
  ev->add_option("--truth", ev_truth, "Ground-truth file")->required()->check(CLI::ExistingFile);
  ev->add_option("--grid-nodes", ev_nodes, "Quadrature nodes")->check(CLI::PositiveNumber);
  ev->add_option("--out", ev_out, "Metrics file (default: stdout)");

  // export
  auto* ex = app.add_subcommand("export", "Write the fitted density on a lon/lat raster");
  std::string ex_model, ex_out;
  std::size_t lon_steps = 720, lat_steps = 360;
  ex->add_option("--model", ex_model, "Model (or truth) file")->required()->check(CLI::ExistingFile);
  ex->add_option("--lon-steps", lon_steps, "Longitude columns")->check(CLI::Range(2, 1 << 20));
  ex->add_option("--lat-steps", lat_steps, "Latitude rows")->check(CLI::Range(2, 1 << 20));
  ex->add_option("--out", ex_out, "Output raster CSV")->required();

  // replicate
  auto* rep = app.add_subcommand("replicate", "Repeat simulate, fit and evaluate over several seeds");
  SimFlags rep_sim;
  ConfigFlags rep_flags;
  int replicates = 20;
  std::string rep_out;
  rep_sim.attach(rep, true);
  rep->add_option("-R,--replicates", replicates, "Number of replicates")->check(CLI::PositiveNumber);
  rep->add_option("--out", rep_out, "Summary file (default: stdout)");
  rep_flags.attach(rep);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*fit) {
      const RunConfig cfg = fit_flags.build(fit_seed, 20);
      const EventDataset data = load_events(fit_data);
      const FitOutcome outcome = run_fit(data.points, cfg);
      save_model(fit_model, outcome.doc);
      write_file(fit_report.empty() ? fit_model + ".report" : fit_report, report_text(outcome, cfg, data.size()));
      if (outcome.report) {
        write_file(fit_trace.empty() ? fit_model + ".trace.csv" : fit_trace, trace_text(*outcome.report));
      }
      std::cerr << "fit: " << outcome.doc.model.size() << " components written to " << fit_model << '\n';
    } else if (*sim) {
      SimSetting s = sim_flags.setting;
      s.seed = sim_flags.seed;
      s.validate();
      const SimulatedData d = generate_setting(s);
      write_events(sim_data, d.points);
      save_truth(sim_truth, d.truth, setting_json(s));
    } else if (*ev) {
      const LoadedDensity model = load_density(ev_model);
      const LoadedDensity truth = load_density(ev_truth);
      const std::string text = metrics_text(evaluate(model.field, truth.field, ev_nodes), model.seed);
      if (ev_out.empty()) std::cout << text;
      else write_file(ev_out, text);
    } else if (*ex) {
      const LoadedDensity model = load_density(ex_model);
      write_raster(ex_out, export_density_grid(model.field, lon_steps, lat_steps));
    } else if (*rep) {
      const RunConfig base = rep_flags.build(rep_sim.seed, 10);
      std::ostringstream out;
      out << "# replicate summary\n" << run_config_to_text(base);
      out << "J = " << rep_sim.setting.components << "\nlambda = " << fmt(rep_sim.setting.lambda)
          << "\nN = " << rep_sim.setting.samples << "\nreplicates = " << replicates << '\n';
      std::vector<double> l1s;
      for (int r = 0; r < replicates; ++r) {
        const std::uint64_t rep_seed = derive_seed(rep_sim.seed, std::uint64_t(r));
        SimSetting s = rep_sim.setting;
        s.seed = rep_seed;
        const SimulatedData d = generate_setting(s);
        RunConfig cfg = base;
        cfg.seed = cfg.sgd.seed = derive_seed(rep_seed, 1);
        const FitOutcome outcome = run_fit(d.points, cfg);
        const MixtureEvaluator eval(outcome.doc.model);
        const DensityField fitted{[&eval](const UnitVector& x) { return std::exp(eval.logdensity(x)); }, "fit"};
        const DensityField truth{[&d](const UnitVector& x) { return d.truth.density(x); }, "truth"};
        const Metrics m = evaluate(fitted, truth, cfg.grid_resolution);
        l1s.push_back(m.l1);
        out << "replicate." << r << ".l1 = " << fmt(m.l1) << '\n';
        out << "replicate." << r << ".normalization = " << fmt(m.normalization) << '\n';
        std::cerr << "replicate " << r + 1 << '/' << replicates << ": l1 = " << m.l1 << '\n';
      }
      double mean = 0.0;
      for (double v : l1s) mean += v;
      mean /= double(l1s.size());
      double var = 0.0;
      for (double v : l1s) var += (v - mean) * (v - mean);
      const double sd = l1s.size() > 1 ? std::sqrt(var / double(l1s.size() - 1)) : 0.0;
      char cell[64];
      std::snprintf(cell, sizeof cell, "%.2f (%.2f)", mean, sd);
      out << "l1_mean = " << fmt(mean) << "\nl1_sd = " << fmt(sd) << "\nl1_table = " << cell << '\n';
      if (rep_out.empty()) std::cout << out.str();
      else write_file(rep_out, out.str());
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
