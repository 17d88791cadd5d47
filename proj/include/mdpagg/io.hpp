#pragma once

#include <stdexcept>
#include <string>

namespace mdpagg {

struct ExperimentConfig;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shortest round-trip decimal form.
std::string fmt_double(double value);

// Writes to <path>.tmp in the same directory, then renames over path, so a
// crash never leaves a truncated file behind.
void atomic_write_file(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

// Strict JSON config: every field optional, unknown keys rejected.
ExperimentConfig parse_experiment_config_json(const std::string& json_text);
ExperimentConfig load_experiment_config(const std::string& path);

std::string experiment_config_json(const ExperimentConfig& config);

}  // namespace mdpagg
