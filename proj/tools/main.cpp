#include <exception>
#include <iostream>

#include <CLI11.hpp>

#include "flowvmc/version.hpp"

#include "commands.hpp"
#include "common.hpp"

int main(int argc, char** argv) {
  using namespace flowvmc::cli;

  CLI::App app{"Normalizing-flow variational Monte Carlo toolkit"};
  app.set_version_flag("--version", flowvmc::version_string());
  app.require_subcommand(1);

  OptimizeArgs optimize_args;
  GaussianArgs gaussian_args;
  TdvpArgs tdvp_args;
  VarianceArgs variance_args;
  RandhamArgs randham_args;

  register_optimize(app, optimize_args);
  register_gaussian(app, gaussian_args);
  register_tdvp(app, tdvp_args);
  register_variance(app, variance_args);
  register_randham(app, randham_args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (app.got_subcommand("optimize")) return run_optimize(optimize_args);
    if (app.got_subcommand("gaussian")) return run_gaussian(gaussian_args);
    if (app.got_subcommand("tdvp-demo")) return run_tdvp(tdvp_args);
    if (app.got_subcommand("variance-study")) return run_variance(variance_args);
    if (app.got_subcommand("randham")) return run_randham(randham_args);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
