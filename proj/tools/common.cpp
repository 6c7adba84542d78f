#include <filesystem>
#include <string>
#include <vector>

#include "flowvmc/errors.hpp"
#include "flowvmc/io.hpp"
#include "flowvmc/version.hpp"

#include "common.hpp"

namespace flowvmc::cli {

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
}

std::string join_path(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

void write_json_file(const std::string& path, const nlohmann::json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

void write_run_config(const std::string& dir, const std::string& command,
                      std::uint64_t seed, const nlohmann::json& settings) {
  const nlohmann::json j = {{"command", command},
                            {"version", version_string()},
                            {"seed", seed},
                            {"settings", settings}};
  write_json_file(join_path(dir, "config.json"), j);
}

namespace {

std::string scalar_to_string(const nlohmann::json& v, const std::string& key) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean() || v.is_number()) return v.dump();
  throw UsageError("config key \"" + key +
                   "\" must be a scalar or an array of scalars");
}

void apply_config_value(CLI::Option& opt, const std::string& key,
                        const std::vector<std::string>& inputs) {
  try {
    if (opt.get_expected_min() == 0) {
      if (inputs.size() != 1)
        throw UsageError("config key \"" + key + "\" expects one flag value");
      opt.add_result(opt.get_flag_value(key, inputs.front()));
    } else {
      for (const std::string& input : inputs) opt.add_result(input);
    }
    opt.run_callback();
  } catch (const CLI::Error& e) {
    throw UsageError("bad value for config key \"" + key + "\": " + e.what());
  }
}

}  // namespace

void apply_json_config(CLI::App& cmd, const std::string& path) {
  if (path.empty()) return;
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file: " + path);

  nlohmann::json values;
  try {
    in >> values;
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("invalid JSON in config file " + path + ": " + e.what());
  }
  if (!values.is_object())
    throw UsageError("config file must hold a JSON object: " + path);

  for (const auto& [key, value] : values.items()) {
    CLI::Option* opt = cmd.get_option_no_throw("--" + key);
    if (opt == nullptr)
      throw UsageError("unknown config key \"" + key + "\" for command " +
                       cmd.get_name());
    if (opt->count() > 0) continue;  // explicit flags win over the file

    std::vector<std::string> inputs;
    if (value.is_array()) {
      if (value.empty())
        throw UsageError("config key \"" + key + "\" holds an empty array");
      for (const auto& element : value)
        inputs.push_back(scalar_to_string(element, key));
    } else {
      inputs.push_back(scalar_to_string(value, key));
    }
    apply_config_value(*opt, key, inputs);
  }
}

void apply_env_seed(CLI::App& cmd) {
  CLI::Option* opt = cmd.get_option_no_throw("--seed");
  if (opt == nullptr || opt->count() > 0) return;
  const char* raw = std::getenv("FLOWVMC_SEED");
  if (raw == nullptr || *raw == '\0') return;
  try {
    opt->add_result(std::string(raw));
    opt->run_callback();
  } catch (const CLI::Error&) {
    throw UsageError(std::string("invalid FLOWVMC_SEED value: ") + raw);
  }
}

}  // namespace flowvmc::cli
