#pragma once

#include <atomic>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace acp {

inline constexpr const char* kToolVersion = "0.1.0";

enum ExitCode : int { exit_ok = 0, exit_validation = 2, exit_estimation = 3, exit_capped = 4, exit_interrupted = 130 };

struct HarnessOptions {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<int> parallel;
  std::vector<std::string> overrides;  // dotted.path=value
};

struct Bundle {
  int exit_code = exit_ok;
  std::string message;
  std::string dir;
  std::vector<std::string> files;
  nlohmann::json metadata;
};

nlohmann::json load_config(const std::string& path);
// value is parsed as JSON when possible, otherwise taken as a string
void apply_override(nlohmann::json& config, const std::string& assignment);
std::string config_hash(const nlohmann::json& config);

// Set from a signal handler; long experiments stop between trial batches and flush.
std::atomic<bool>& interrupt_flag();

// Validates, dispatches and writes CSV tables plus metadata.json into the output directory.
// Never throws for configuration or estimation problems; they map onto exit codes.
Bundle run_experiment(nlohmann::json config, const HarnessOptions& opt = {});

}  // namespace acp
