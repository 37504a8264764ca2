#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "minmarg/mesh.hpp"
#include "minmarg/solver.hpp"

namespace minmarg {

/// Invalid or malformed experiment configuration; the message names the
/// offending field.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct WeightsConfig {
  bool is_product = true;
  std::vector<MarginalSpec> factors;  // product form, one per axis
  std::vector<double> tensor_values;  // tensor form, m^n entries
};

struct ExperimentConfig {
  int n = 0;
  int m = 0;
  std::vector<MarginalSpec> marginals;
  std::vector<double> p_targets;
  SolverConfig solver;
  std::optional<WeightsConfig> weights;
  std::uint64_t seed = 0;
  std::string out_dir;
};

/// Parses and validates a config document; throws ConfigError on any schema
/// violation. Recognized fields:
///   n, m, marginals[{kind, mu?, sigma2?, alpha?, beta?, values?}],
///   p_targets, solver{tol?, max_iter?, epsilon?, delta_p?},
///   weights{kind, factors?|values?}?, seed?, out_dir.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& path,
                             const std::optional<std::string>& out_dir_override =
                                 std::nullopt);

/// Exit-code contract shared by the commands below:
/// 0 = ok, 1 = config error (thrown as ConfigError before any run),
/// 2 = non-convergence, 3 = verification failure.
int run_solve(const ExperimentConfig& config);
int run_sweep(const ExperimentConfig& config);
int run_verify(const ExperimentConfig& config, bool inject_corruption = false);
int run_decompose(const std::filesystem::path& payoff_csv,
                  std::optional<double> k0, const std::string& out_dir);

}  // namespace minmarg
