#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "guiaif/policy.hpp"
#include "guiaif/rewards.hpp"

namespace guiaif {

/// The implementations the oracles check. Defaults are the library functions;
/// tests and `verify --mutate` swap in perturbed copies.
struct OracleSubjects {
  std::function<double(PredictionGroup)> apr = apr_if;
  std::function<double(const DiagGaussian2&, const DiagGaussian2&)> bhattacharyya = guiaif::bhattacharyya;
  std::function<double(PredictionGroup, double, double, VarianceMode)> arr = arr_if;
  std::function<std::vector<double>(std::span<const double>)> advantage = grpo_advantage;
  std::function<PolicyGradient(const GroupRollout&, const GroundingPolicy&, const GroundingPolicy&,
                               const OptimConfig&)>
      gradient = grad_objective;
};

/// Names accepted by mutated_subjects().
std::vector<std::string> mutation_names();

/// Subjects with one constant perturbed: apr_norm, bhatt_mahal, bhatt_log,
/// arr_norm or adv_ddof. Throws ConfigError for other names.
OracleSubjects mutated_subjects(std::string_view mutation);

struct OracleResult {
  std::string name;
  bool pass = false;
  double worst = 0.0;      ///< largest observed error
  double tolerance = 0.0;
  double seconds = 0.0;
  std::string detail;
};

/// Oracles, in order: apr_if, bhattacharyya, arr_if, grpo_advantage, gradient.
std::vector<OracleResult> run_oracles(const OracleSubjects& subjects, std::uint64_t seed = 20240917);

OracleResult oracle_apr(const OracleSubjects& s, std::uint64_t seed);
OracleResult oracle_bhattacharyya(const OracleSubjects& s, std::uint64_t seed);
OracleResult oracle_arr(const OracleSubjects& s, std::uint64_t seed);
OracleResult oracle_advantage(const OracleSubjects& s, std::uint64_t seed);
OracleResult oracle_gradient(const OracleSubjects& s, std::uint64_t seed);

/// One line per oracle: "PASS <name> worst=<e> tol=<t> time=<s>s".
std::string format_oracle_line(const OracleResult& r);

}  // namespace guiaif
