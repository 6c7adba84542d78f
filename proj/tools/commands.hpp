#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <CLI11.hpp>

namespace flowvmc::cli {

struct OptimizeArgs {
  int dim = 1;
  std::string hamiltonian = "random";
  std::uint64_t seed = 1;
  std::vector<std::uint64_t> seeds;
  int jobs = 1;
  int iters = 2000;
  int batch = 1024;
  int eval_batch = 8192;
  double lr = 0.01;
  double gamma = 0.1;
  bool natural = true;
  bool adam = true;
  bool symmetrize = false;
  double adiabatic_k = 0.0;
  bool reverse_adiabatic = false;
  double penalty_w0 = 0.0;
  double grad_clip = 100.0;
  int couplings = -1;  // -1 resolves to 0 in one dimension, 4 otherwise
  int hidden_width = 16;
  int hidden_depth = 1;
  int affine_layers = 1;
  bool determinism = false;
  std::string out = "runs/optimize";

  CLI::Option* natural_opt = nullptr;
};

struct GaussianArgs {
  int dim = 1;
  std::string hamiltonian = "random";
  std::uint64_t seed = 1;
  int iterations = 400;
  int restarts = 5;
  std::string flow_summary;
  std::string out = "runs/gaussian";
};

struct TdvpArgs {
  double log_a0 = 0.0;
  double b0 = 0.0;
  double t_end = 5.0;
  double dt = 1e-3;
  std::string out = "runs/tdvp";
};

struct VarianceArgs {
  int points = 13;
  int samples = 100000;
  std::uint64_t seed = 1;
  std::string out = "runs/variance";
};

struct RandhamArgs {
  int dim = 1;
  std::uint64_t seed = 1;
  std::string out = "runs/randham";
};

void register_optimize(CLI::App& app, OptimizeArgs& args);
void register_gaussian(CLI::App& app, GaussianArgs& args);
void register_tdvp(CLI::App& app, TdvpArgs& args);
void register_variance(CLI::App& app, VarianceArgs& args);
void register_randham(CLI::App& app, RandhamArgs& args);

int run_optimize(const OptimizeArgs& args);
int run_gaussian(const GaussianArgs& args);
int run_tdvp(const TdvpArgs& args);
int run_variance(const VarianceArgs& args);
int run_randham(const RandhamArgs& args);

}  // namespace flowvmc::cli
