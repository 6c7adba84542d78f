#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <iostream>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "flowvmc/errors.hpp"
#include "flowvmc/flow.hpp"
#include "flowvmc/hamiltonian.hpp"
#include "flowvmc/io.hpp"
#include "flowvmc/optimize.hpp"
#include "flowvmc/rng.hpp"
#include "flowvmc/svg.hpp"

#include "commands.hpp"
#include "common.hpp"

namespace flowvmc::cli {

namespace {

using nlohmann::json;

// Dense information matrices above this size make the damped solve the
// bottleneck, so the preconditioner switches off unless forced.
constexpr int kNaturalGradientParamLimit = 2048;

constexpr int kHistogramSamples = 20000;
constexpr int kHistogramBins = 50;

struct Resolved {
  int couplings = 0;
  bool natural = false;
  bool natural_auto_disabled = false;
  int param_count = 0;
};

Resolved resolve_architecture(const OptimizeArgs& args) {
  Resolved r;
  r.couplings = args.couplings >= 0 ? args.couplings : (args.dim == 1 ? 0 : 4);
  if (args.dim == 1 && r.couplings > 0)
    throw UsageError("coupling layers need at least two dimensions");

  FlowConfig fc;
  fc.dim = args.dim;
  fc.couplings = r.couplings;
  fc.affine_layers = args.affine_layers;
  fc.hidden_width = args.hidden_width;
  fc.hidden_depth = args.hidden_depth;
  r.param_count = FlowModel(fc).param_count();

  r.natural = args.natural;
  const bool forced = args.natural_opt != nullptr && args.natural_opt->count() > 0;
  if (r.natural && !forced && r.param_count > kNaturalGradientParamLimit) {
    r.natural = false;
    r.natural_auto_disabled = true;
  }
  return r;
}

void validate_args(const OptimizeArgs& args) {
  if (args.dim < 1) throw UsageError("--dim must be at least 1");
  if (args.iters < 1) throw UsageError("--iters must be at least 1");
  if (args.batch < 1) throw UsageError("--batch must be at least 1");
  if (args.eval_batch < 2) throw UsageError("--eval-batch must be at least 2");
  if (args.lr < 0.0) throw UsageError("--lr must be nonnegative");
  if (args.gamma <= 0.0 && args.natural)
    throw UsageError("--gamma must be positive with the natural gradient");
  if (args.grad_clip <= 0.0) throw UsageError("--grad-clip must be positive");
  if (args.adiabatic_k < 0.0)
    throw UsageError("--adiabatic-k must be nonnegative");
  if (args.penalty_w0 < 0.0)
    throw UsageError("--penalty-w0 must be nonnegative");
  if (args.couplings < -1)
    throw UsageError("--couplings must be nonnegative");
  if (args.affine_layers < 0)
    throw UsageError("--affine-layers must be nonnegative");
  if (args.affine_layers == 0 && (args.couplings == 0 ||
                                  (args.couplings == -1 && args.dim == 1)))
    throw UsageError("the flow needs at least one layer");
  if (args.hidden_width < 1)
    throw UsageError("--hidden-width must be at least 1");
  if (args.hidden_depth < 1)
    throw UsageError("--hidden-depth must be at least 1");
  if (args.jobs < 1) throw UsageError("--jobs must be at least 1");
}

json settings_echo(const OptimizeArgs& args, const Resolved& r) {
  return json{{"dim", args.dim},
              {"hamiltonian", args.hamiltonian},
              {"seeds", args.seeds},
              {"jobs", args.jobs},
              {"iters", args.iters},
              {"batch", args.batch},
              {"eval_batch", args.eval_batch},
              {"lr", args.lr},
              {"gamma", args.gamma},
              {"natural", r.natural},
              {"adam", args.adam},
              {"symmetrize", args.symmetrize},
              {"adiabatic_k", args.adiabatic_k},
              {"reverse_adiabatic", args.reverse_adiabatic},
              {"penalty_w0", args.penalty_w0},
              {"grad_clip", args.grad_clip},
              {"couplings", r.couplings},
              {"hidden_width", args.hidden_width},
              {"hidden_depth", args.hidden_depth},
              {"affine_layers", args.affine_layers},
              {"determinism", args.determinism},
              {"out", args.out}};
}

void write_history_csv(const std::string& path,
                       const std::vector<HistoryRow>& history) {
  CsvWriter csv(path, {"iter", "energy", "stderr", "alpha", "lr", "grad_norm",
                       "seconds"});
  for (const HistoryRow& row : history) {
    const double vals[] = {static_cast<double>(row.iter), row.energy,
                           row.std_error, row.alpha,     row.lr,
                           row.grad_norm, row.seconds};
    csv.write_row(vals);
  }
  csv.close();
}

void write_energy_svg(const std::string& path,
                      const std::vector<HistoryRow>& history) {
  SvgSeries s{"energy", {}, {}};
  for (const HistoryRow& row : history) {
    s.x.push_back(row.iter);
    s.y.push_back(row.energy);
  }
  PlotOptions options;
  options.title = "energy vs iteration";
  options.x_label = "iteration";
  options.y_label = "energy";
  write_text_file(path, render_line_plot({s}, options));
}

/// Samples the trained symmetrized density, histograms the widest
/// coordinate, and reports the mass balance across the sign flip.
double write_histogram(const std::string& dir, const FlowModel& model,
                       const OptimizeArgs& args, std::uint64_t seed) {
  SymmetrizedDensity sym(model);
  RngStream rng = RngStream(seed).substream(
      static_cast<std::uint64_t>(args.iters) + 2);
  const SampleBatch batch = sym.sample(kHistogramSamples, rng);

  const Eigen::VectorXd mean = batch.points.colwise().mean();
  int widest = 0;
  double best = -1.0;
  for (int j = 0; j < model.dim(); ++j) {
    const double var =
        (batch.points.col(j).array() - mean[j]).square().mean();
    if (var > best) {
      best = var;
      widest = j;
    }
  }
  std::vector<double> coord(static_cast<std::size_t>(kHistogramSamples));
  long left = 0, right = 0;
  for (int i = 0; i < kHistogramSamples; ++i) {
    const double v = batch.points(i, widest);
    coord[static_cast<std::size_t>(i)] = v;
    (v < 0.0 ? left : right) += 1;
  }

  double lo = coord[0], hi = coord[0];
  for (const double v : coord) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (lo == hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double bin_w = (hi - lo) / kHistogramBins;
  std::vector<double> density(kHistogramBins, 0.0);
  for (const double v : coord) {
    const int idx =
        std::min(kHistogramBins - 1, static_cast<int>((v - lo) / bin_w));
    density[static_cast<std::size_t>(idx)] += 1.0;
  }
  CsvWriter csv(join_path(dir, "histogram.csv"),
                {"bin_lo", "bin_hi", "density"});
  for (int i = 0; i < kHistogramBins; ++i) {
    const double d = density[static_cast<std::size_t>(i)] /
                     (kHistogramSamples * bin_w);
    const double vals[] = {lo + i * bin_w, lo + (i + 1) * bin_w, d};
    csv.write_row(vals);
  }
  csv.close();

  PlotOptions options;
  options.title = "trained density, coordinate " + std::to_string(widest);
  options.x_label = "x";
  options.y_label = "density";
  write_text_file(join_path(dir, "histogram.svg"),
                  render_histogram(coord, kHistogramBins, options));

  return right == 0 ? std::numeric_limits<double>::infinity()
                    : static_cast<double>(left) / static_cast<double>(right);
}

/// One complete training run into its own directory; returns the summary
/// that was written (with "diverged" set accordingly).
json run_one(const OptimizeArgs& args, const Resolved& r, std::uint64_t seed,
             const std::string& dir) {
  ensure_dir(dir);
  json settings = settings_echo(args, r);
  settings["seeds"] = json::array({seed});
  write_run_config(dir, "optimize", seed, settings);

  const QuarticHamiltonian h = args.hamiltonian == "oscillator"
                                   ? oscillator_hamiltonian(args.dim)
                                   : random_hamiltonian(args.dim, seed);

  FlowConfig fc;
  fc.dim = args.dim;
  fc.couplings = r.couplings;
  fc.affine_layers = args.affine_layers;
  fc.hidden_width = args.hidden_width;
  fc.hidden_depth = args.hidden_depth;
  FlowModel model(fc);
  // Training consumes substreams 1..iters+1 of the seed; 0 is reserved for
  // the weight draw and iters+2 for the histogram batch.
  RngStream init = RngStream(seed).substream(0);
  model.initialize(init);

  OptimizerConfig cfg;
  cfg.batch = args.batch;
  cfg.iterations = args.iters;
  cfg.lr0 = args.lr;
  cfg.gamma = args.gamma;
  cfg.use_adam = args.adam;
  cfg.use_natural_gradient = r.natural;
  cfg.adiabatic_k = args.adiabatic_k;
  cfg.reverse_adiabatic = args.reverse_adiabatic;
  cfg.penalty_weight0 = args.penalty_w0;
  cfg.grad_clip = args.grad_clip;
  cfg.eval_batch = args.eval_batch;
  cfg.seed = seed;
  cfg.determinism = args.determinism;

  json summary = {{"dim", args.dim},
                  {"seed", seed},
                  {"hamiltonian", args.hamiltonian},
                  {"iterations", args.iters},
                  {"param_count", r.param_count},
                  {"symmetrized", args.symmetrize},
                  {"natural_gradient", r.natural},
                  {"diverged", false}};
  if (r.natural_auto_disabled) summary["natural_gradient_auto_disabled"] = true;

  TrainResult result;
  try {
    result = train_flow(model, args.symmetrize, h, cfg);
  } catch (const TrainDiverged& e) {
    write_history_csv(join_path(dir, "history.csv"), e.history);
    if (!e.history.empty())
      write_energy_svg(join_path(dir, "energy.svg"), e.history);
    save_flow(model, args.symmetrize, join_path(dir, "model.json"));
    summary["diverged"] = true;
    write_json_file(join_path(dir, "summary.json"), summary);
    return summary;
  }

  write_history_csv(join_path(dir, "history.csv"), result.history);
  write_energy_svg(join_path(dir, "energy.svg"), result.history);
  save_flow(model, args.symmetrize, join_path(dir, "model.json"));

  summary["final_energy"] = result.final_energy;
  summary["final_stderr"] = result.final_std_error;
  // The grid evaluation is deterministic, so it is the headline number
  // whenever it exists (one dimension only).
  if (std::isfinite(result.quadrature_energy)) {
    summary["quadrature_energy"] = result.quadrature_energy;
    summary["energy"] = result.quadrature_energy;
  } else {
    summary["energy"] = result.final_energy;
  }
  if (args.symmetrize)
    summary["mode_mass_ratio"] = write_histogram(dir, model, args, seed);

  write_json_file(join_path(dir, "summary.json"), summary);
  return summary;
}

}  // namespace

void register_optimize(CLI::App& app, OptimizeArgs& args) {
  CLI::App* sub = app.add_subcommand(
      "optimize", "Train a flow trial state and write run artifacts");
  sub->add_option("--dim", args.dim, "Problem dimension")
      ->capture_default_str();
  sub->add_option("--hamiltonian", args.hamiltonian,
                  "Hamiltonian family: random (seeded quartic) or oscillator")
      ->check(CLI::IsMember({"random", "oscillator"}))
      ->capture_default_str();
  sub->add_option("--seed", args.seed,
                  "Seed for the instance, weights, and sampling")
      ->envname("FLOWVMC_SEED")
      ->capture_default_str();
  sub->add_option("--seeds", args.seeds,
                  "Seed sweep: one run per seed in its own subdirectory")
      ->delimiter(',');
  sub->add_option("--jobs", args.jobs, "Worker threads for a seed sweep")
      ->capture_default_str();
  sub->add_option("--iters", args.iters, "Optimization iterations")
      ->capture_default_str();
  sub->add_option("--batch", args.batch, "Gradient batch size")
      ->capture_default_str();
  sub->add_option("--eval-batch", args.eval_batch,
                  "Sample count for the final energy estimate")
      ->capture_default_str();
  sub->add_option("--lr", args.lr, "Peak learning rate (cosine-annealed)")
      ->capture_default_str();
  sub->add_option("--gamma", args.gamma,
                  "Damping added to the information matrix")
      ->capture_default_str();
  args.natural_opt =
      sub->add_flag("--natural,!--no-natural", args.natural,
                    "Natural-gradient preconditioning (switched off "
                    "automatically above 2048 parameters unless forced)")
          ->capture_default_str();
  sub->add_flag("--adam,!--no-adam", args.adam,
                "Adam moment rescaling of the update direction")
      ->capture_default_str();
  sub->add_flag("--symmetrize", args.symmetrize,
                "Train the sign-symmetrized density");
  sub->add_option("--adiabatic-k", args.adiabatic_k,
                  "Decay rate of the quadratic-term schedule (0 disables)")
      ->capture_default_str();
  sub->add_flag("--reverse-adiabatic", args.reverse_adiabatic,
                "Run the quadratic-term schedule backwards");
  sub->add_option("--penalty-w0", args.penalty_w0,
                  "Starting weight of the transport penalty")
      ->capture_default_str();
  sub->add_option("--grad-clip", args.grad_clip, "Global gradient norm clip")
      ->capture_default_str();
  sub->add_option("--couplings", args.couplings,
                  "Coupling layers (default: 4, or 0 in one dimension)");
  sub->add_option("--hidden-width", args.hidden_width,
                  "Hidden width of the coupling networks")
      ->capture_default_str();
  sub->add_option("--hidden-depth", args.hidden_depth,
                  "Hidden depth of the coupling networks")
      ->capture_default_str();
  sub->add_option("--affine-layers", args.affine_layers,
                  "Trailing elementwise affine layers")
      ->capture_default_str();
  sub->add_flag("--determinism", args.determinism,
                "Zero the wall-clock column for byte-identical reruns");
  sub->add_option("--out", args.out, "Run directory")->capture_default_str();
  sub->set_config("--config", "",
                  "JSON file with option defaults; explicit flags win");
  sub->config_formatter(std::make_shared<JsonConfig>());
}

int run_optimize(const OptimizeArgs& args) {
  validate_args(args);
  const Resolved r = resolve_architecture(args);
  if (r.natural_auto_disabled)
    std::cerr << "note: natural gradient disabled at " << r.param_count
              << " parameters; pass --natural to force it\n";

  if (args.seeds.size() <= 1) {
    const std::uint64_t seed = args.seeds.empty() ? args.seed : args.seeds[0];
    const json summary = run_one(args, r, seed, args.out);
    if (summary["diverged"].get<bool>()) {
      std::cerr << "error: training diverged; partial history written to "
                << args.out << "\n";
      return 1;
    }
    std::cout << "energy " << summary["energy"].get<double>() << " +- "
              << summary["final_stderr"].get<double>() << "  (" << args.out
              << ")\n";
    return 0;
  }

  ensure_dir(args.out);
  write_run_config(args.out, "optimize", args.seed, settings_echo(args, r));

  const std::size_t n = args.seeds.size();
  std::vector<json> summaries(n);
  std::vector<std::string> failures(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      const std::uint64_t seed = args.seeds[i];
      try {
        summaries[i] = run_one(args, r, seed,
                               join_path(args.out, "seed_" + std::to_string(seed)));
      } catch (const std::exception& e) {
        failures[i] = e.what();
      }
    }
  };
  const std::size_t jobs =
      std::min(static_cast<std::size_t>(args.jobs), n);
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < jobs; ++t) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();

  json energies = json::array();
  std::vector<double> finite;
  int diverged = 0;
  bool failed = false;
  for (std::size_t i = 0; i < n; ++i) {
    if (!failures[i].empty()) {
      std::cerr << "error: seed " << args.seeds[i] << ": " << failures[i]
                << "\n";
      failed = true;
      energies.push_back(nullptr);
      continue;
    }
    if (summaries[i]["diverged"].get<bool>()) {
      ++diverged;
      energies.push_back(nullptr);
      continue;
    }
    const double e = summaries[i]["energy"].get<double>();
    energies.push_back(e);
    finite.push_back(e);
  }
  json sweep = {{"seeds", args.seeds},
                {"energies", energies},
                {"diverged_count", diverged}};
  if (!finite.empty()) {
    std::nth_element(finite.begin(), finite.begin() + finite.size() / 2,
                     finite.end());
    sweep["median_energy"] = finite[finite.size() / 2];
  }
  write_json_file(join_path(args.out, "summary.json"), sweep);

  if (failed || diverged > 0) {
    if (diverged > 0)
      std::cerr << "error: " << diverged << " diverged run(s) in the sweep\n";
    return 1;
  }
  std::cout << "median energy " << sweep["median_energy"].get<double>()
            << " over " << n << " seeds  (" << args.out << ")\n";
  return 0;
}

}  // namespace flowvmc::cli
