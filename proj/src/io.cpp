#include "mdpagg/io.hpp"

#include <array>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mdpagg/experiment.hpp"

namespace mdpagg {

std::string fmt_double(double value) {
  std::array<char, 64> buf;
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc()) throw IoError("fmt_double: conversion failed");
  return std::string(buf.data(), ptr);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read failed: " + path);
  return ss.str();
}

void atomic_write_file(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + tmp);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw IoError("write failed: " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw IoError("rename failed: " + tmp + " -> " + path);
  }
}

namespace {

using json = nlohmann::ordered_json;

int require_int(const json& v, const std::string& key) {
  if (!v.is_number_integer()) throw ConfigError("config field '" + key + "' must be an integer");
  return v.get<int>();
}

double require_number(const json& v, const std::string& key) {
  if (!v.is_number()) throw ConfigError("config field '" + key + "' must be a number");
  return v.get<double>();
}

bool require_bool(const json& v, const std::string& key) {
  if (!v.is_boolean()) throw ConfigError("config field '" + key + "' must be a boolean");
  return v.get<bool>();
}

std::vector<int> require_int_list(const json& v, const std::string& key) {
  if (!v.is_array() || v.empty()) throw ConfigError("config field '" + key + "' must be a non-empty array");
  std::vector<int> out;
  for (const auto& e : v) {
    if (!e.is_number_integer()) throw ConfigError("config field '" + key + "' must hold integers");
    out.push_back(e.get<int>());
  }
  return out;
}

}  // namespace

ExperimentConfig parse_experiment_config_json(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config root must be a JSON object");

  ExperimentConfig cfg;
  for (const auto& [key, value] : doc.items()) {
    if (key == "J") {
      cfg.chain.J = require_int(value, key);
    } else if (key == "mu") {
      cfg.chain.mu = require_number(value, key);
    } else if (key == "gamma") {
      cfg.chain.gamma = require_number(value, key);
    } else if (key == "alpha") {
      cfg.chain.alpha = require_number(value, key);
    } else if (key == "terminal_reward") {
      cfg.chain.terminal_intervention_reward = require_number(value, key);
    } else if (key == "M_list") {
      cfg.M_list = require_int_list(value, key);
    } else if (key == "K_list") {
      cfg.K_list = require_int_list(value, key);
    } else if (key == "R") {
      cfg.R = require_int(value, key);
    } else if (key == "seed") {
      if (!value.is_number_unsigned() && !value.is_number_integer())
        throw ConfigError("config field 'seed' must be an integer");
      cfg.master_seed = value.get<std::uint64_t>();
    } else if (key == "threshold_assumption") {
      cfg.threshold_assumption = require_bool(value, key);
    } else if (key == "zero_row_policy") {
      if (!value.is_string()) throw ConfigError("config field 'zero_row_policy' must be a string");
      try {
        cfg.zero_row_policy = zero_row_policy_from_string(value.get<std::string>());
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
    } else if (key == "share_data_across_k") {
      cfg.share_data_across_k = require_bool(value, key);
    } else if (key == "compare_state") {
      if (value.is_string()) {
        if (value.get<std::string>() != "start")
          throw ConfigError("config field 'compare_state' must be \"start\" or a state index");
        cfg.compare_state = -1;
      } else {
        cfg.compare_state = require_int(value, key);
      }
    } else {
      throw ConfigError("unknown config field '" + key + "'");
    }
  }
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const IoError& e) {
    // An unreadable config is a configuration error, not an output failure.
    throw ConfigError(e.what());
  }
  return parse_experiment_config_json(text);
}

std::string experiment_config_json(const ExperimentConfig& config) {
  json doc;
  doc["J"] = config.chain.J;
  doc["mu"] = config.chain.mu;
  doc["gamma"] = config.chain.gamma;
  doc["alpha"] = config.chain.alpha;
  doc["terminal_reward"] = config.chain.terminal_intervention_reward;
  doc["M_list"] = config.M_list;
  doc["K_list"] = config.K_list;
  doc["R"] = config.R;
  doc["seed"] = config.master_seed;
  doc["threshold_assumption"] = config.threshold_assumption;
  doc["zero_row_policy"] = to_string(config.zero_row_policy);
  doc["share_data_across_k"] = config.share_data_across_k;
  if (config.compare_state < 0) {
    doc["compare_state"] = "start";
  } else {
    doc["compare_state"] = config.compare_state;
  }
  return doc.dump(2) + "\n";
}

}  // namespace mdpagg
