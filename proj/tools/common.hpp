#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

namespace flowvmc::cli {

/// Bad argument values discovered after flag parsing (ranges, combinations);
/// main maps it to the usage exit code.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void ensure_dir(const std::string& dir);

std::string join_path(const std::string& dir, const std::string& name);

void write_json_file(const std::string& path, const nlohmann::json& j);

/// Writes <dir>/config.json echoing the effective settings alongside the
/// toolkit version and the seed that drove the run.
void write_run_config(const std::string& dir, const std::string& command,
                      std::uint64_t seed, const nlohmann::json& settings);

/// Merges a flat JSON object of option defaults into a parsed command: each
/// key names a long option, arrays feed multi-value options element by
/// element, and options already given on the command line keep their values.
/// Unknown keys raise UsageError.
void apply_json_config(CLI::App& cmd, const std::string& path);

/// Applies the FLOWVMC_SEED fallback when neither a flag nor a config file
/// set --seed on the command. Commands without --seed are left alone.
void apply_env_seed(CLI::App& cmd);

}  // namespace flowvmc::cli
