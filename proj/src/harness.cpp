#include "guiaif/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include "guiaif/errors.hpp"

namespace guiaif {

namespace {

struct ScalePoint {
  double alpha;
  double gamma;
};

std::vector<ScalePoint> sweep_points(SweepPattern p) {
  switch (p) {
    case SweepPattern::kNone:
      return {{1.0, 1.0}};
    case SweepPattern::kCross:
      return {{1.0, 1.0}, {0.5, 1.0}, {2.0, 1.0}, {1.0, 0.5}, {1.0, 2.0}};
    case SweepPattern::kFull: {
      std::vector<ScalePoint> pts;
      for (double a : {0.5, 1.0, 2.0}) {
        for (double g : {0.5, 1.0, 2.0}) pts.push_back({a, g});
      }
      return pts;
    }
  }
  return {};
}

std::string scale_tag(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

SweepPattern parse_sweep(std::string_view name) {
  if (name == "none") return SweepPattern::kNone;
  if (name == "cross") return SweepPattern::kCross;
  if (name == "full") return SweepPattern::kFull;
  throw ConfigError("unknown sweep '" + std::string(name) + "'");
}

std::string to_string(SweepPattern s) {
  switch (s) {
    case SweepPattern::kNone:
      return "none";
    case SweepPattern::kCross:
      return "cross";
    case SweepPattern::kFull:
      return "full";
  }
  return "unknown";
}

PolicyInit parse_policy_init(std::string_view name) {
  if (name == "zero") return PolicyInit::kZero;
  if (name == "generalist") return PolicyInit::kGeneralist;
  throw ConfigError("unknown init '" + std::string(name) + "'");
}

std::string to_string(PolicyInit p) { return p == PolicyInit::kZero ? "zero" : "generalist"; }

GroundingPolicy initial_policy(PolicyInit init, double init_log_std) {
  GroundingPolicy policy(kStateDim, init_log_std);
  if (init == PolicyInit::kGeneralist) {
    for (std::size_t k = 0; k < kActionDim; ++k) policy.weight(k, k) = 1.0;
  }
  return policy;
}

void RunConfig::validate() const {
  if (steps_per_task < 0) throw ConfigError("steps_per_task must be >= 0");
  if (eval_episodes < 1) throw ConfigError("eval_episodes must be >= 1");
  if (!(alpha_scale > 0.0) || !(gamma_scale > 0.0)) throw ConfigError("scales must be positive");
  if (seeds.empty()) throw ConfigError("seeds must not be empty");
  if (threads < 0) throw ConfigError("threads must be >= 0");
  try {
    optim.validate();
    reward.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (tasks) {
    if (tasks->empty()) throw ConfigError("tasks override must not be empty");
    for (const TaskSpec& t : *tasks) t.validate();
  }
}

RewardConfig RunConfig::effective_reward() const {
  RewardConfig r = reward;
  r.alpha = flags.use_apr ? reward.alpha * alpha_scale : 0.0;
  r.gamma = flags.use_arr ? reward.gamma * gamma_scale : 0.0;
  return r;
}

OptimConfig RunConfig::effective_optim() const {
  OptimConfig o = optim;
  if (!flags.use_kl) o.beta = 0.0;
  return o;
}

std::vector<TaskSpec> RunConfig::task_sequence(std::uint64_t seed) const {
  if (!tasks) return make_sequence(scenario, seed);
  std::vector<TaskSpec> out = *tasks;
  for (TaskSpec& t : out) t.seed = derive_seed(seed, {static_cast<std::uint64_t>(t.kind)});
  return out;
}

std::size_t AccuracyMatrix::trained_row(std::size_t task) const {
  if (rows() == tasks() + 1) return task + 1;
  return 1;
}

AccuracyRow evaluate(const GroundingPolicy& policy, const std::vector<TaskSpec>& tasks, int episodes) {
  AccuracyRow row;
  for (const TaskSpec& task : tasks) {
    Rng rng = make_rng(task.seed, {kStreamEval});
    long hits = 0;
    long text_hits = 0;
    long text_total = 0;
    long icon_hits = 0;
    long icon_total = 0;
    for (int e = 0; e < episodes; ++e) {
      const EpisodeInstance inst = sample_instance(task, rng);
      const bool hit = contains(inst.gt, center(policy.mean_box(inst.state)));
      hits += hit;
      if (inst.kind == ElementKind::kText) {
        ++text_total;
        text_hits += hit;
      } else {
        ++icon_total;
        icon_hits += hit;
      }
    }
    const auto rate = [](long h, long n) { return n > 0 ? static_cast<double>(h) / static_cast<double>(n) : 0.0; };
    row.acc.push_back(rate(hits, episodes));
    row.text.push_back(rate(text_hits, text_total));
    row.icon.push_back(rate(icon_hits, icon_total));
  }
  return row;
}

GroundingPolicy train_task(const GroundingPolicy& policy, const std::vector<TaskSpec>& tasks,
                           const std::vector<std::size_t>& stage, std::size_t stage_index,
                           const RunConfig& cfg, std::uint64_t seed, TrainLog& log) {
  const RewardConfig reward = cfg.effective_reward();
  const OptimConfig optim = cfg.effective_optim();
  const GroundingPolicy anchor = policy;
  GroundingPolicy theta = policy;

  // Instance stream is keyed by the task seed so that runs that differ only in
  // method flags train on identical instances.
  Rng inst_rng = stage.size() == 1 ? make_rng(tasks[stage[0]].seed, {kStreamTrain})
                                   : make_rng(seed, {kStreamTrain, stage_index});
  Rng pick_rng = make_rng(seed, {kStreamTrain, stage_index, 1});
  Rng act_rng = make_rng(seed, {kStreamActions, stage_index});
  std::uniform_int_distribution<std::size_t> pick(0, stage.size() - 1);

  const std::size_t batch = static_cast<std::size_t>(optim.batch_size);
  const double inv_batch = 1.0 / static_cast<double>(batch);
  long step_id = log.empty() ? 0 : log.back().step + 1;
  std::vector<GroupRollout> rollouts(batch);
  for (int it = 0; it < cfg.steps_per_task; ++it, ++step_id) {
    TrainRecord rec;
    rec.step = step_id;
    rec.task = static_cast<int>(stage[0]);
    for (GroupRollout& rollout : rollouts) {
      const std::size_t task_index = stage.size() == 1 ? stage[0] : stage[pick(pick_rng)];
      const EpisodeInstance inst = sample_instance(tasks[task_index], inst_rng);

      const GroundingPolicy& ratio_ref = optim.ratio_reference == RatioReference::kStep ? theta : anchor;
      rollout = sample_group(theta, ratio_ref, inst.state, optim.n_samples, act_rng);
      double correct_sum = 0.0;
      for (std::size_t i = 0; i < rollout.size(); ++i) {
        rollout.rewards[i] = correctness(rollout.boxes[i], inst.gt, reward);
        correct_sum += rollout.rewards[i];
      }
      rollout.advantages = grpo_advantage(rollout.rewards);

      const double apr = apr_if(rollout.boxes);
      const double arr = arr_if(rollout.boxes, reward.kappa, reward.eps_min, reward.variance_mode);
      rollout.r_aif = reward.alpha * apr + reward.gamma * arr;
      rescore(rollout, theta, anchor);

      rec.correctness += inv_batch * correct_sum / static_cast<double>(rollout.size());
      rec.apr += inv_batch * apr;
      rec.arr += inv_batch * arr;
      rec.r_aif += inv_batch * rollout.r_aif;
      rec.kl += inv_batch * rollout.kl;
      rec.objective += inv_batch * objective(rollout, optim);
    }

    for (int epoch = 0; epoch < optim.inner_epochs; ++epoch) {
      PolicyGradient g{std::vector<double>(theta.num_params(), 0.0)};
      for (const GroupRollout& rollout : rollouts) {
        const PolicyGradient gi = grad_objective(rollout, theta, anchor, optim);
        for (std::size_t p = 0; p < g.values.size(); ++p) g.values[p] += inv_batch * gi.values[p];
      }
      if (optim.max_grad_norm > 0.0) {
        const double norm = g.norm();
        if (std::isfinite(norm) && norm > optim.max_grad_norm) {
          const double s = optim.max_grad_norm / norm;
          for (double& v : g.values) v *= s;
        }
      }
      theta = step(theta, g, optim.lr);
    }
    log.push_back(rec);
  }
  return theta;
}

RunResult run_continual(const RunConfig& cfg, std::uint64_t seed) {
  const std::vector<TaskSpec> tasks = cfg.task_sequence(seed);
  const auto stages = training_stages(cfg.scenario, tasks.size());

  RunResult result;
  result.seed = seed;
  for (const TaskSpec& t : tasks) result.matrix.task_names.push_back(t.name);
  const auto push_row = [&](const AccuracyRow& row) {
    result.matrix.acc.push_back(row.acc);
    result.matrix.text.push_back(row.text);
    result.matrix.icon.push_back(row.icon);
  };

  GroundingPolicy policy = initial_policy(cfg.init, cfg.optim.init_log_std);
  push_row(evaluate(policy, tasks, cfg.eval_episodes));
  for (std::size_t s = 0; s < stages.size(); ++s) {
    policy = train_task(policy, tasks, stages[s], s, cfg, seed, result.log);
    push_row(evaluate(policy, tasks, cfg.eval_episodes));
  }
  return result;
}

std::vector<TransferDelta> forward_transfer(const AccuracyMatrix& m) {
  std::vector<TransferDelta> out;
  for (std::size_t i = 1; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.tasks(); ++j) {
      if (m.trained_row(j) <= i) continue;
      out.push_back({i, j, m.acc[i][j] - m.acc[0][j]});
    }
  }
  return out;
}

std::vector<double> forgetting(const AccuracyMatrix& m) {
  std::vector<double> out(m.tasks(), 0.0);
  if (m.rows() < 2) return out;
  const std::size_t last = m.rows() - 1;
  for (std::size_t j = 0; j < m.tasks(); ++j) {
    double best = m.acc[last][j];
    for (std::size_t i = m.trained_row(j); i <= last; ++i) best = std::max(best, m.acc[i][j]);
    out[j] = best - m.acc[last][j];
  }
  return out;
}

double final_average(const AccuracyMatrix& m) {
  if (m.rows() == 0 || m.tasks() == 0) return 0.0;
  double s = 0.0;
  for (double v : m.acc.back()) s += v;
  return s / static_cast<double>(m.tasks());
}

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 3) return std::nullopt;
  const double n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::optional<double> reward_trend(const TrainLog& log, double alpha, double gamma, int task) {
  std::vector<double> aif_series;
  std::vector<double> correct_series;
  for (const TrainRecord& r : log) {
    if (task >= 0 && r.task != task) continue;
    aif_series.push_back(alpha * r.apr + gamma * r.arr);
    correct_series.push_back(r.correctness);
  }
  return pearson(aif_series, correct_series);
}

std::vector<AblationCell> ablation_grid(const RunConfig& base) {
  struct Variant {
    const char* name;
    bool apr;
    bool arr;
  };
  constexpr Variant kVariants[] = {
      {"full", true, true}, {"apr_only", true, false}, {"arr_only", false, true}, {"neither", false, false}};
  std::vector<AblationCell> cells;
  for (const Variant& v : kVariants) {
    for (bool kl : {true, false}) {
      for (const ScalePoint& sp : sweep_points(base.sweep)) {
        AblationCell cell;
        cell.flags = {v.apr, v.arr, kl};
        cell.alpha_scale = sp.alpha;
        cell.gamma_scale = sp.gamma;
        cell.name = std::string(v.name) + (kl ? "_klon" : "_kloff") + "_a" + scale_tag(sp.alpha) + "_g" +
                    scale_tag(sp.gamma);
        cell.config = base;
        cell.config.flags = cell.flags;
        cell.config.alpha_scale = sp.alpha;
        cell.config.gamma_scale = sp.gamma;
        cells.push_back(std::move(cell));
      }
    }
  }
  return cells;
}

std::vector<AblationCell> ablate(const RunConfig& base) {
  std::vector<AblationCell> cells = ablation_grid(base);
  const std::size_t n_seeds = base.seeds.size();
  for (AblationCell& c : cells) c.runs.resize(n_seeds);
  parallel_for(cells.size() * n_seeds, base.threads, [&](std::size_t job) {
    AblationCell& cell = cells[job / n_seeds];
    const std::size_t s = job % n_seeds;
    cell.runs[s] = run_continual(cell.config, base.seeds[s]);
  });
  return cells;
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  std::size_t workers = threads > 0 ? static_cast<std::size_t>(threads)
                                    : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  pool.clear();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace guiaif
