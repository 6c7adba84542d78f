#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <json.hpp>

#include "flowvmc/errors.hpp"
#include "flowvmc/gaussian.hpp"
#include "flowvmc/hamiltonian.hpp"
#include "flowvmc/io.hpp"

#include "commands.hpp"
#include "common.hpp"

namespace flowvmc::cli {

namespace {

using nlohmann::json;

double read_flow_energy(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open flow summary: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError("malformed flow summary " + path + ": " + e.what());
  }
  if (!j.contains("energy"))
    throw IoError("flow summary " + path + " has no energy field");
  return j.at("energy").get<double>();
}

void append_comparison_row(const std::string& path, int dim,
                           std::uint64_t seed, double gaussian_energy,
                           double flow_energy) {
  const bool fresh = !std::filesystem::exists(path) ||
                     std::filesystem::file_size(path) == 0;
  if (fresh) {
    CsvWriter csv(path, {"dim", "seed", "gaussian_energy", "flow_energy"});
    const double row[] = {static_cast<double>(dim),
                          static_cast<double>(seed), gaussian_energy,
                          flow_energy};
    csv.write_row(row);
    csv.close();
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw IoError("cannot open comparison csv: " + path);
  out << format_double(static_cast<double>(dim)) << ','
      << format_double(static_cast<double>(seed)) << ','
      << format_double(gaussian_energy) << ',' << format_double(flow_energy)
      << '\n';
  if (!out) throw IoError("failed writing comparison csv: " + path);
}

}  // namespace

void register_gaussian(CLI::App& app, GaussianArgs& args) {
  CLI::App* sub = app.add_subcommand(
      "gaussian", "Optimize the Gaussian baseline for a seeded Hamiltonian");
  sub->add_option("--dim", args.dim, "Problem dimension")
      ->capture_default_str();
  sub->add_option("--hamiltonian", args.hamiltonian,
                  "Hamiltonian family: random (seeded quartic) or oscillator")
      ->check(CLI::IsMember({"random", "oscillator"}))
      ->capture_default_str();
  sub->add_option("--seed", args.seed, "Instance and restart seed")
      ->envname("FLOWVMC_SEED")
      ->capture_default_str();
  sub->add_option("--iterations", args.iterations,
                  "Line-search iterations per restart")
      ->capture_default_str();
  sub->add_option("--restarts", args.restarts, "Random restarts")
      ->capture_default_str();
  sub->add_option("--flow-summary", args.flow_summary,
                  "summary.json of a flow run on the same instance; adds a "
                  "row to comparison.csv");
  sub->add_option("--out", args.out, "Run directory")->capture_default_str();
  sub->set_config("--config", "",
                  "JSON file with option defaults; explicit flags win");
  sub->config_formatter(std::make_shared<JsonConfig>());
}

int run_gaussian(const GaussianArgs& args) {
  if (args.dim < 1) throw UsageError("--dim must be at least 1");
  if (args.iterations < 1) throw UsageError("--iterations must be at least 1");
  if (args.restarts < 1) throw UsageError("--restarts must be at least 1");

  ensure_dir(args.out);
  write_run_config(args.out, "gaussian", args.seed,
                   json{{"dim", args.dim},
                        {"hamiltonian", args.hamiltonian},
                        {"iterations", args.iterations},
                        {"restarts", args.restarts},
                        {"flow_summary", args.flow_summary},
                        {"out", args.out}});

  const QuarticHamiltonian h = args.hamiltonian == "oscillator"
                                   ? oscillator_hamiltonian(args.dim)
                                   : random_hamiltonian(args.dim, args.seed);
  GaussianOptConfig cfg;
  cfg.iterations = args.iterations;
  cfg.restarts = args.restarts;
  cfg.seed = args.seed;
  const GaussianOptResult result = optimize_gaussian(h, cfg);
  save_gaussian_result(result, join_path(args.out, "gaussian.json"));

  if (!args.flow_summary.empty()) {
    const double flow_energy = read_flow_energy(args.flow_summary);
    append_comparison_row(join_path(args.out, "comparison.csv"), args.dim,
                          args.seed, result.energy, flow_energy);
  }

  std::cout << "gaussian energy " << result.energy << "  (" << args.out
            << ")\n";
  return 0;
}

}  // namespace flowvmc::cli
