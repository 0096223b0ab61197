// Copyright 2026 gfz project authors. All rights reserved.
// Use of this source code is governed by Apache 2 LICENSE that can be found in the LICENSE file.

#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "gfz/common.hpp"

namespace gfz {

enum class Mode { GFuzz, NoInfer, ExploreOnly, ExploitOnly, FuncDis, Undirected };

inline const char* mode_name(Mode m) {
  switch (m) {
    case Mode::GFuzz: return "gfuzz";
    case Mode::NoInfer: return "no_infer";
    case Mode::ExploreOnly: return "explore_only";
    case Mode::ExploitOnly: return "exploit_only";
    case Mode::FuncDis: return "func_dis";
    case Mode::Undirected: return "undirected";
  }
  return "?";
}

inline Mode parse_mode(const std::string& s) {
  if (s == "gfuzz") return Mode::GFuzz;
  if (s == "no_infer") return Mode::NoInfer;
  if (s == "explore_only") return Mode::ExploreOnly;
  if (s == "exploit_only") return Mode::ExploitOnly;
  if (s == "func_dis") return Mode::FuncDis;
  if (s == "undirected") return Mode::Undirected;
  throw ParseError("unknown mode \"" + s + "\"");
}

// Campaign configuration. Every knob has the default the engine was tuned
// with; a JSON config file (GFZ_CONFIG or --config) and CLI flags override.
struct Config {
  double p_max = 0.9;
  double p_min = 0.1;
  double t_fuzz_secs = 86400.0;  // virtual campaign budget
  double t_a_secs = 300.0;
  double t_b_secs = 600.0;
  std::uint32_t bias_k = 5;
  std::uint32_t exploit_sample_m = 32;
  std::uint32_t exploit_top_k = 8;
  std::uint64_t rng_seed = 1;

  std::uint32_t initial_seeds = 8;
  std::uint32_t mutation_burst = 16;
  std::uint32_t max_calls = 24;
  double exec_cost_secs = 1.0;  // virtual clock advance per execution
  bool edge_coverage = false;
  bool freq_per_occurrence = true;

  // generic mutation operator weights
  double w_mutate_arg = 0.5;
  double w_insert_call = 0.2;
  double w_duplicate = 0.15;
  double w_remove = 0.15;

  Mode mode = Mode::GFuzz;
  std::uint32_t repetitions = 20;

  void apply_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ParseError("config must be a JSON object");
    for (const auto& item : j.items()) {
      const auto& k = item.key();
      const auto& v = item.value();
      if (k == "p_max") p_max = v.get<double>();
      else if (k == "p_min") p_min = v.get<double>();
      else if (k == "t_fuzz_secs") t_fuzz_secs = v.get<double>();
      else if (k == "t_a_secs") t_a_secs = v.get<double>();
      else if (k == "t_b_secs") t_b_secs = v.get<double>();
      else if (k == "bias_k") bias_k = v.get<std::uint32_t>();
      else if (k == "exploit_sample_m") exploit_sample_m = v.get<std::uint32_t>();
      else if (k == "exploit_top_k") exploit_top_k = v.get<std::uint32_t>();
      else if (k == "rng_seed") rng_seed = v.get<std::uint64_t>();
      else if (k == "initial_seeds") initial_seeds = v.get<std::uint32_t>();
      else if (k == "mutation_burst") mutation_burst = v.get<std::uint32_t>();
      else if (k == "max_calls") max_calls = v.get<std::uint32_t>();
      else if (k == "exec_cost_secs") exec_cost_secs = v.get<double>();
      else if (k == "edge_coverage") edge_coverage = v.get<bool>();
      else if (k == "freq_per_occurrence") freq_per_occurrence = v.get<bool>();
      else if (k == "w_mutate_arg") w_mutate_arg = v.get<double>();
      else if (k == "w_insert_call") w_insert_call = v.get<double>();
      else if (k == "w_duplicate") w_duplicate = v.get<double>();
      else if (k == "w_remove") w_remove = v.get<double>();
      else if (k == "mode") mode = parse_mode(v.get<std::string>());
      else if (k == "repetitions") repetitions = v.get<std::uint32_t>();
      else throw ParseError("unknown config key \"" + k + "\"");
    }
    validate();
  }

  void apply_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open config " + path.string());
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("invalid JSON in " + path.string() + ": " + e.what());
    }
    apply_json(j);
  }

  // Loads the file named by GFZ_CONFIG, when set.
  void apply_env() {
    if (const char* path = std::getenv("GFZ_CONFIG")) apply_file(path);
  }

  void validate() const {
    if (!(0.0 <= p_min && p_min <= p_max && p_max <= 1.0))
      throw ValidationError("config requires 0 <= p_min <= p_max <= 1");
    if (t_fuzz_secs <= 0 || t_a_secs <= 0 || t_b_secs <= 0)
      throw ValidationError("config durations must be positive");
    if (bias_k < 1 || exploit_sample_m < 1 || exploit_top_k < 1 ||
        initial_seeds < 1 || mutation_burst < 1 || repetitions < 1)
      throw ValidationError("config counts must be at least 1");
    if (exec_cost_secs <= 0)
      throw ValidationError("exec_cost_secs must be positive");
  }
};

}  // namespace gfz
