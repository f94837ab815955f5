#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ink/kernel.hpp"

namespace ink::cli {

enum ExitCode : int {
  kOk = 0,
  kConfigError = 1,  // also I/O and numerical failures
  kInvariantViolation = 2,
  kConditionFailed = 3,
};

struct DataOptions {
  std::string input;
  std::string format = "csv";
  bool header = false;
  std::string label_column = "-1";  // integer, or "none"
};

struct KernelOptions {
  std::string kernel = "gaussian";
  double bandwidth = 1.0;
  int degree = 2;
  double offset = 1.0;
};

struct RunConfig {
  std::string algorithm = "ink-estimate";
  DataOptions data;
  KernelOptions kernel;
  double gamma = 1.0;
  double mu = 1.0;
  double epsilon = 0.5;
  double delta = 0.1;
  std::optional<std::uint64_t> budget;  // q̄ for the sequential algorithms, m for batch-exact
  std::uint64_t seed = 0;
  std::size_t checkpoint_every = 0;
  bool verify = false;
  std::string output = "out";
  double noise_std = 0.0;
  double cap_safety = 1.0;
};

void validate(const RunConfig& config);
Dataset load_dataset(const DataOptions& options);
KernelSpec make_kernel(const KernelOptions& options);
nlohmann::ordered_json config_echo(const RunConfig& config);
RunConfig config_from_echo(const nlohmann::ordered_json& echo);

int execute_run(const RunConfig& config, std::ostream& out, std::ostream& err);

// Entry point shared by the executable and the tests; args exclude the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ink::cli
