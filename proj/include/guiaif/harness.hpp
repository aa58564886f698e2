#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "guiaif/flux_sim.hpp"
#include "guiaif/policy.hpp"
#include "guiaif/rewards.hpp"

namespace guiaif {

struct AblationFlags {
  bool use_apr = true;
  bool use_arr = true;
  bool use_kl = true;

  friend bool operator==(const AblationFlags&, const AblationFlags&) = default;
};

/// Which (alpha_scale, gamma_scale) points ablate() visits.
enum class SweepPattern {
  kNone,   ///< (1, 1) only
  kCross,  ///< (1,1) plus each scale varied alone: 5 points
  kFull,   ///< the 3 x 3 grid
};

SweepPattern parse_sweep(std::string_view name);
std::string to_string(SweepPattern s);

enum class PolicyInit { kZero, kGeneralist };

PolicyInit parse_policy_init(std::string_view name);
std::string to_string(PolicyInit p);

/// Policy every run starts from.
GroundingPolicy initial_policy(PolicyInit init, double init_log_std);

struct RunConfig {
  Scenario scenario = Scenario::kDomainFlux;
  int steps_per_task = 500;
  int eval_episodes = 2000;
  OptimConfig optim;
  RewardConfig reward;
  AblationFlags flags;
  double alpha_scale = 1.0;
  double gamma_scale = 1.0;
  std::vector<std::uint64_t> seeds{0};
  SweepPattern sweep = SweepPattern::kCross;
  /// Replaces the scenario's fixture tasks when set.
  std::optional<std::vector<TaskSpec>> tasks;
  /// Starting policy: zero weights, or the generalist prior that inverts an
  /// identity observation map.
  PolicyInit init = PolicyInit::kZero;
  /// Worker threads for independent runs; 0 picks hardware concurrency.
  int threads = 0;

  void validate() const;

  /// Reward weights after scales and gates.
  RewardConfig effective_reward() const;
  /// Optimizer settings with beta forced to 0 when the KL gate is off.
  OptimConfig effective_optim() const;
  /// Fixture or overridden tasks, seeded from `seed`.
  std::vector<TaskSpec> task_sequence(std::uint64_t seed) const;
};

/// Success rates, one row per stage (row 0 = untrained policy), one column per
/// task. text / icon hold the same rates restricted to each element kind.
struct AccuracyMatrix {
  std::vector<std::string> task_names;
  std::vector<std::vector<double>> acc;
  std::vector<std::vector<double>> text;
  std::vector<std::vector<double>> icon;

  std::size_t rows() const { return acc.size(); }
  std::size_t tasks() const { return task_names.size(); }
  /// Row at which task j was first trained: j + 1 for sequential runs, 1 for
  /// a joint run.
  std::size_t trained_row(std::size_t task) const;

  friend bool operator==(const AccuracyMatrix&, const AccuracyMatrix&) = default;
};

struct AccuracyRow {
  std::vector<double> acc;
  std::vector<double> text;
  std::vector<double> icon;
};

struct TrainRecord {
  long step = 0;
  int task = 0;
  double correctness = 0.0;
  double apr = 0.0;
  double arr = 0.0;
  double r_aif = 0.0;
  double kl = 0.0;
  double objective = 0.0;

  friend bool operator==(const TrainRecord&, const TrainRecord&) = default;
};

using TrainLog = std::vector<TrainRecord>;

/// Scores the policy-mean box on `episodes` instances per task; success is the
/// predicted center landing inside the ground-truth box. Instance streams
/// depend only on each task's seed.
AccuracyRow evaluate(const GroundingPolicy& policy, const std::vector<TaskSpec>& tasks, int episodes);

/// Trains on the tasks listed in `stage` (sampled uniformly per step) for
/// cfg.steps_per_task steps, appending one record per step to `log`.
/// The KL anchor is the policy passed in.
GroundingPolicy train_task(const GroundingPolicy& policy, const std::vector<TaskSpec>& tasks,
                           const std::vector<std::size_t>& stage, std::size_t stage_index,
                           const RunConfig& cfg, std::uint64_t seed, TrainLog& log);

struct RunResult {
  std::uint64_t seed = 0;
  AccuracyMatrix matrix;
  TrainLog log;
};

RunResult run_continual(const RunConfig& cfg, std::uint64_t seed);

struct TransferDelta {
  std::size_t stage = 0;  ///< matrix row
  std::size_t task = 0;   ///< column, not yet trained at that row
  double delta = 0.0;     ///< A[stage][task] - A[0][task]
};

std::vector<TransferDelta> forward_transfer(const AccuracyMatrix& m);

/// Per task: best accuracy from its training row onward minus final accuracy.
std::vector<double> forgetting(const AccuracyMatrix& m);

double final_average(const AccuracyMatrix& m);

/// Pearson correlation of two equal-length series; nullopt if either is
/// constant or shorter than 3.
std::optional<double> pearson(std::span<const double> x, std::span<const double> y);

/// Pearson r between alpha * apr + gamma * arr and the correctness reward over
/// the records of `task` (all tasks if negative).
std::optional<double> reward_trend(const TrainLog& log, double alpha, double gamma, int task = -1);

struct AblationCell {
  std::string name;
  AblationFlags flags;
  double alpha_scale = 1.0;
  double gamma_scale = 1.0;
  RunConfig config;
  std::vector<RunResult> runs;  ///< one per seed, in cfg.seeds order
};

/// Cell grid for `base` without running anything.
std::vector<AblationCell> ablation_grid(const RunConfig& base);

/// Runs {full, apr-only, arr-only, neither} x {kl on, off} x sweep points x
/// seeds. Runs are independent and may execute on worker threads; results are
/// placed by index so output does not depend on scheduling.
std::vector<AblationCell> ablate(const RunConfig& base);

/// Runs fn(i) for i in [0, n) on up to `threads` workers.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace guiaif
