#include <iostream>
#include <string>

#include <json.hpp>

#include "flowvmc/hamiltonian.hpp"

#include "commands.hpp"
#include "common.hpp"

namespace flowvmc::cli {

void register_randham(CLI::App& app, RandhamArgs& args) {
  CLI::App* sub = app.add_subcommand(
      "randham", "Draw a random quartic Hamiltonian and write it as JSON");
  sub->add_option("--dim", args.dim, "Problem dimension")
      ->capture_default_str();
  sub->add_option("--seed", args.seed, "Instance seed")
      ->envname("FLOWVMC_SEED")
      ->capture_default_str();
  sub->add_option("--out", args.out, "Run directory")->capture_default_str();
  sub->set_config("--config", "",
                  "JSON file with option defaults; explicit flags win");
  sub->config_formatter(std::make_shared<JsonConfig>());
}

int run_randham(const RandhamArgs& args) {
  if (args.dim < 1) throw UsageError("--dim must be at least 1");

  ensure_dir(args.out);
  write_run_config(args.out, "randham", args.seed,
                   nlohmann::json{{"dim", args.dim}, {"out", args.out}});

  const QuarticHamiltonian h = random_hamiltonian(args.dim, args.seed);
  const std::string path = join_path(args.out, "hamiltonian.json");
  save_hamiltonian(h, path);

  std::cout << "wrote " << path << "\n";
  return 0;
}

}  // namespace flowvmc::cli
