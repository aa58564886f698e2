#include <doctest.h>

#include <atomic>
#include <cmath>
#include <stdexcept>

#include "guiaif/errors.hpp"
#include "guiaif/harness.hpp"
#include "oracle_policy.hpp"

using namespace guiaif;

namespace {

RunConfig small_config() {
  RunConfig cfg;
  cfg.steps_per_task = 40;
  cfg.eval_episodes = 300;
  return cfg;
}

AccuracyMatrix matrix_of(std::vector<std::vector<double>> acc) {
  AccuracyMatrix m;
  for (std::size_t j = 0; j < acc.front().size(); ++j) m.task_names.push_back("t" + std::to_string(j));
  m.text = acc;
  m.icon = acc;
  m.acc = std::move(acc);
  return m;
}

}  // namespace

TEST_CASE("evaluate: oracle policy on its own task") {
  for (Scenario s : {Scenario::kDomainFlux, Scenario::kResolutionFlux}) {
    auto tasks = make_sequence(s, 3);
    for (TaskSpec& t : tasks) t.noise_sigma = 0.0;
    for (std::size_t a = 0; a < tasks.size(); ++a) {
      const AccuracyRow row = evaluate(oracle_policy(tasks[a]), tasks, 2000);
      CHECK(row.acc[a] >= 0.99);
      for (std::size_t b = 0; b < tasks.size(); ++b) {
        if (b != a) CHECK(row.acc[b] < row.acc[a]);
      }
    }
  }
}

TEST_CASE("evaluate: untrained policy is poor") {
  const auto tasks = make_sequence(Scenario::kDomainFlux, 0);
  const AccuracyRow row = evaluate(initial_policy(PolicyInit::kZero, -1.0), tasks, 2000);
  for (double a : row.acc) CHECK(a < 0.5);
  const AccuracyRow gen = evaluate(initial_policy(PolicyInit::kGeneralist, -1.0), tasks, 2000);
  for (double a : gen.acc) CHECK(a < 0.5);
}

TEST_CASE("train_task basics") {
  const RunConfig cfg = small_config();
  const auto tasks = cfg.task_sequence(0);
  const GroundingPolicy p0 = initial_policy(cfg.init, cfg.optim.init_log_std);

  RunConfig zero = cfg;
  zero.steps_per_task = 0;
  TrainLog log0;
  CHECK(train_task(p0, tasks, {0}, 0, zero, 0, log0) == p0);
  CHECK(log0.empty());

  TrainLog a, b;
  const GroundingPolicy pa = train_task(p0, tasks, {0}, 0, cfg, 0, a);
  const GroundingPolicy pb = train_task(p0, tasks, {0}, 0, cfg, 0, b);
  CHECK(pa == pb);
  CHECK(a == b);
  CHECK(a.size() == 40);
  for (const TrainRecord& r : a) {
    CHECK(r.task == 0);
    CHECK(r.r_aif == doctest::Approx(15 * r.apr + 0.5 * r.arr).epsilon(1e-12));
    CHECK(r.kl >= 0.0);
  }

  // All gates off: no AiF term, no KL.
  RunConfig plain = cfg;
  plain.flags = {false, false, false};
  TrainLog c;
  train_task(p0, tasks, {0}, 0, plain, 0, c);
  for (const TrainRecord& r : c) CHECK(r.r_aif == 0.0);
  CHECK(plain.effective_optim().beta == 0.0);
  CHECK(plain.effective_reward().alpha == 0.0);
  CHECK(plain.effective_reward().gamma == 0.0);
}

TEST_CASE("run_continual shape, range and determinism") {
  const RunConfig cfg = small_config();
  const RunResult r = run_continual(cfg, 1);
  CHECK(r.matrix.rows() == 4);
  CHECK(r.matrix.tasks() == 3);
  CHECK(r.log.size() == 3 * 40);
  for (std::size_t i = 0; i < r.matrix.rows(); ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      for (const auto* m : {&r.matrix.acc, &r.matrix.text, &r.matrix.icon}) {
        CHECK((*m)[i][j] >= 0.0);
        CHECK((*m)[i][j] <= 1.0);
      }
    }
  }
  const RunResult again = run_continual(cfg, 1);
  CHECK(again.matrix == r.matrix);
  CHECK(again.log == r.log);
  CHECK_FALSE(run_continual(cfg, 2).matrix == r.matrix);

  RunConfig joint = cfg;
  joint.scenario = Scenario::kJoint;
  const RunResult j = run_continual(joint, 1);
  CHECK(j.matrix.rows() == 2);
  CHECK(j.matrix.trained_row(2) == 1);
}

TEST_CASE("learning happens on the trained task") {
  RunConfig cfg;
  cfg.steps_per_task = 300;
  cfg.eval_episodes = 1000;
  for (std::uint64_t seed : {0, 1, 2}) {
    const RunResult r = run_continual(cfg, seed);
    for (std::size_t j = 0; j < 3; ++j) CHECK(r.matrix.acc[j + 1][j] > r.matrix.acc[0][j]);
  }
}

TEST_CASE("seed pairing across reward gates") {
  RunConfig full = small_config();
  RunConfig base = full;
  base.flags.use_apr = false;
  base.flags.use_arr = false;
  // Untrained row and the evaluation streams do not depend on the flags.
  CHECK(run_continual(full, 4).matrix.acc[0] == run_continual(base, 4).matrix.acc[0]);
  CHECK(full.task_sequence(4)[1].seed == base.task_sequence(4)[1].seed);
  // With zero steps the whole matrix matches.
  full.steps_per_task = base.steps_per_task = 0;
  CHECK(run_continual(full, 4).matrix == run_continual(base, 4).matrix);
}

TEST_CASE("forward_transfer") {
  const AccuracyMatrix flat = matrix_of({{0.1, 0.2, 0.3}, {0.1, 0.2, 0.3}, {0.1, 0.2, 0.3}, {0.1, 0.2, 0.3}});
  for (const TransferDelta& d : forward_transfer(flat)) CHECK(d.delta == 0.0);

  const AccuracyMatrix m = matrix_of({{0.1, 0.2, 0.3}, {0.8, 0.25, 0.2}, {0.6, 0.9, 0.45}, {0.5, 0.7, 0.9}});
  const auto d = forward_transfer(m);
  REQUIRE(d.size() == 3);
  CHECK(d[0].stage == 1);
  CHECK(d[0].task == 1);
  CHECK(d[0].delta == doctest::Approx(0.05).epsilon(1e-12));
  CHECK(d[1].stage == 1);
  CHECK(d[1].task == 2);
  CHECK(d[1].delta == doctest::Approx(-0.1).epsilon(1e-12));
  CHECK(d[2].stage == 2);
  CHECK(d[2].task == 2);
  CHECK(d[2].delta == doctest::Approx(0.15).epsilon(1e-12));
}

TEST_CASE("forgetting") {
  const AccuracyMatrix mono = matrix_of({{0.1, 0.1}, {0.5, 0.2}, {0.6, 0.7}});
  CHECK(forgetting(mono) == std::vector<double>{0.0, 0.0});
  const AccuracyMatrix drop = matrix_of({{0.1, 0.1, 0.1}, {0.8, 0.2, 0.1}, {0.6, 0.7, 0.3}});
  CHECK(forgetting(drop)[0] == doctest::Approx(0.2).epsilon(1e-12));
  const AccuracyMatrix single = matrix_of({{0.1}, {0.9}});
  CHECK(forgetting(single) == std::vector<double>{0.0});
  CHECK(final_average(drop) == doctest::Approx((0.6 + 0.7 + 0.3) / 3).epsilon(1e-12));
}

TEST_CASE("pearson and reward_trend") {
  const std::vector<double> x{1, 2, 3, 4, 5};
  const std::vector<double> neg{-1, -2, -3, -4, -5};
  CHECK(*pearson(x, x) == doctest::Approx(1.0));
  CHECK(*pearson(x, neg) == doctest::Approx(-1.0));
  CHECK_FALSE(pearson(x, std::vector<double>(5, 2.0)).has_value());
  CHECK_FALSE(pearson(std::vector<double>{1, 2}, std::vector<double>{2, 1}).has_value());

  const std::vector<double> a{0.3, 1.7, 2.2, 0.9, 4.1, 3.3};
  const std::vector<double> b{1.0, 0.4, 0.8, 2.5, 0.1, 0.6};
  // textbook single-pass formula
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  const double n = 6;
  for (int i = 0; i < 6; ++i) {
    sx += a[i];
    sy += b[i];
    sxx += a[i] * a[i];
    syy += b[i] * b[i];
    sxy += a[i] * b[i];
  }
  const double r = (n * sxy - sx * sy) / std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
  CHECK(std::abs(*pearson(a, b) - r) < 1e-9);

  TrainLog log;
  for (int i = 0; i < 6; ++i) log.push_back({i, i < 3 ? 0 : 1, b[i], a[i], 2 * a[i], 0, 0, 0});
  CHECK(std::abs(*reward_trend(log, 1.0, 0.5, -1) - r) < 1e-9);
  CHECK(reward_trend(log, 1.0, 0.5, 0).has_value());
}

TEST_CASE("ablation grid") {
  RunConfig base = small_config();
  base.seeds = {0, 1, 2};
  const auto grid = ablation_grid(base);
  CHECK(grid.size() == 40);
  std::size_t runs = 0;
  for (const AblationCell& c : grid) runs += c.config.seeds.size();
  CHECK(runs == 120);
  base.sweep = SweepPattern::kNone;
  CHECK(ablation_grid(base).size() == 8);
  base.sweep = SweepPattern::kFull;
  CHECK(ablation_grid(base).size() == 72);

  for (const AblationCell& c : ablation_grid(small_config())) {
    if (!c.flags.use_kl) CHECK(c.config.effective_optim().beta == 0.0);
    if (!c.flags.use_arr) CHECK(c.config.effective_reward().gamma == 0.0);
  }
}

TEST_CASE("ablate runs every cell and pairs seeds") {
  RunConfig base = small_config();
  base.steps_per_task = 10;
  base.eval_episodes = 100;
  base.seeds = {0, 1};
  base.sweep = SweepPattern::kNone;
  base.threads = 2;
  const auto cells = ablate(base);
  REQUIRE(cells.size() == 8);
  for (const AblationCell& c : cells) {
    REQUIRE(c.runs.size() == 2);
    CHECK(c.runs[0].seed == 0);
    CHECK(c.runs[1].seed == 1);
    CHECK(c.runs[0].matrix.acc[0] == cells[0].runs[0].matrix.acc[0]);
    if (c.name.rfind("apr_only", 0) == 0) {
      for (const TrainRecord& r : c.runs[0].log) CHECK(r.r_aif == doctest::Approx(15 * r.apr).epsilon(1e-12));
    }
  }
  base.threads = 1;
  const auto serial = ablate(base);
  for (std::size_t i = 0; i < cells.size(); ++i) CHECK(serial[i].runs[1].matrix == cells[i].runs[1].matrix);
}

TEST_CASE("parallel_for") {
  std::atomic<int> sum{0};
  parallel_for(100, 4, [&](std::size_t i) { sum += static_cast<int>(i); });
  CHECK(sum == 4950);
  CHECK_THROWS_AS(parallel_for(10, 3, [](std::size_t i) {
                    if (i == 7) throw std::runtime_error("boom");
                  }),
                  std::runtime_error);
}

TEST_CASE("config validation") {
  RunConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.seeds.clear();
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = RunConfig{};
  cfg.optim.lr = -1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  CHECK(parse_sweep("full") == SweepPattern::kFull);
  CHECK(parse_policy_init("generalist") == PolicyInit::kGeneralist);
}
