#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "kinv/errors.hpp"
#include "kinv/forward_model.hpp"

namespace kinv {

enum class Method { Uki, UkiReparam, Tuki, Eki, Eaki, Etki, EtkiUnbiased };

std::string method_name(Method m);
bool is_ensemble_method(Method m);

/// Validated run configuration. Parsed from a flat `key = value` document;
/// see parse_config for the key set and defaults.
struct RunConfig {
  std::string problem;  // elliptic | bernoulli | twofid | subspace-mc
  std::optional<Method> method;  // required unless problem = subspace-mc
  double alpha = 1.0;
  int n_iter = 0;
  Eigen::Index n_rank = 5;
  std::optional<Eigen::Index> ensemble_size;  // ensemble methods only
  EvaluationPolicy policy = EvaluationPolicy::AllHigh;
  std::optional<std::uint64_t> seed;  // required for eki
  std::string output = "-";
  std::optional<std::string> state_output;
  bool verify = false;
  bool timing = true;
  int threads = 1;

  // Problem parameters.
  Eigen::Index problem_n = 1000;           // elliptic / bernoulli / subspace-mc
  std::uint64_t problem_seed = 0;          // bernoulli truth, twofid noise
  Eigen::Index problem_n_fine = 128;       // twofid
  Eigen::Index problem_n_coarse = 32;      // twofid
  Eigen::Index problem_n_params = 8;       // twofid
  int problem_trials = 200;                // subspace-mc
  Eigen::Index problem_samples = 5;        // subspace-mc span size J

  std::uint64_t seed_or_default() const { return seed.value_or(0); }
};

/// Parses and validates a flat key-value document (`key = value`, one per
/// line, `#` comments). Unknown keys, type mismatches, and constraint
/// violations throw ConfigError carrying the field path.
RunConfig parse_config(const std::string& text);

RunConfig parse_config_file(const std::string& path);

}  // namespace kinv
