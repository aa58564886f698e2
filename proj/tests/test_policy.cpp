#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "guiaif/errors.hpp"
#include "guiaif/policy.hpp"
#include "guiaif/rewards.hpp"

using namespace guiaif;

namespace {

GroundingPolicy random_policy(std::mt19937_64& rng, std::size_t dim) {
  std::normal_distribution<double> z(0.0, 1.0);
  GroundingPolicy p(dim, -1.0);
  for (std::size_t i = 0; i < dim * kActionDim + kActionDim; ++i) p.params()[i] = 0.3 * z(rng);
  for (std::size_t k = 0; k < kActionDim; ++k) p.log_std(k) = -1.0 + 0.3 * z(rng);
  return p;
}

std::vector<double> random_state(std::mt19937_64& rng, std::size_t dim) {
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<double> s(dim);
  for (double& v : s) v = z(rng);
  return s;
}

GroupRollout scored_rollout(const GroundingPolicy& theta, const GroundingPolicy& ref, std::mt19937_64& rng, int n) {
  const auto state = random_state(rng, theta.feature_dim());
  Rng r(rng());
  GroupRollout roll = sample_group(theta, ref, state, n, r);
  const BBox gt = make_bbox(0.3, 0.3, 0.5, 0.45);
  for (std::size_t i = 0; i < roll.size(); ++i) roll.rewards[i] = correctness_gaussian(roll.boxes[i], gt, 0.25, 1e-8);
  roll.advantages = grpo_advantage(roll.rewards);
  roll.r_aif = aif(roll.boxes, RewardConfig{});
  return roll;
}

}  // namespace

TEST_CASE("action_to_bbox") {
  const BBox b = action_to_bbox({{0.0, 0.0, std::log(0.5), std::log(0.5)}});
  CHECK(b.x1 == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(b.y1 == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(b.x2 == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(b.y2 == doctest::Approx(0.75).epsilon(1e-15));

  const BBox thin = action_to_bbox({{0.0, 0.0, -1e6, std::log(0.5)}});
  CHECK(thin.width() == doctest::Approx(kMinActionSide).epsilon(1e-9));

  const BBox right = action_to_bbox({{1e6, 0.0, std::log(0.2), std::log(0.2)}});
  CHECK(right.x2 == 1.0);
  CHECK(center(right).x > 0.9);
  CHECK(is_valid(right));

  std::mt19937_64 rng(1);
  std::normal_distribution<double> z(0.0, 20.0);
  for (int i = 0; i < 5000; ++i) CHECK(is_valid(action_to_bbox({{z(rng), z(rng), z(rng), z(rng)}})));
}

TEST_CASE("sample_group") {
  std::mt19937_64 rng(2);
  GroundingPolicy p = random_policy(rng, 6);
  const auto state = random_state(rng, 6);

  GroundingPolicy tight = p;
  for (std::size_t k = 0; k < kActionDim; ++k) tight.log_std(k) = kMinLogStd;
  Rng r0(5);
  const GroupRollout t = sample_group(tight, tight, state, 8, r0);
  CHECK(apr_if(t.boxes) < 1e-6);

  Rng r1(9), r2(9);
  const GroupRollout a = sample_group(p, p, state, 4, r1);
  const GroupRollout b = sample_group(p, p, state, 4, r2);
  CHECK(a.boxes == b.boxes);
  CHECK(a.logp_theta == b.logp_theta);
  CHECK(a.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(a.logp_theta[i] == a.logp_ref[i]);
    CHECK(a.boxes[i] == action_to_bbox(a.actions[i]));
    for (std::size_t j = i + 1; j < 4; ++j) CHECK_FALSE(a.boxes[i] == a.boxes[j]);
  }
}

TEST_CASE("grpo_advantage") {
  CHECK(grpo_advantage(std::vector<double>{1, 1, 1, 1}) == std::vector<double>{0, 0, 0, 0});
  const auto a = grpo_advantage(std::vector<double>{0, 2});
  CHECK(a[0] == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(a[1] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(grpo_advantage(std::vector<double>{3.0}) == std::vector<double>{0.0});

  std::mt19937_64 rng(3);
  std::normal_distribution<double> z(0.0, 1.0);
  for (int k = 0; k < 500; ++k) {
    std::vector<double> r(2 + k % 15);
    const double scale = std::exp(3 * z(rng));
    for (double& v : r) v = 10 * z(rng) + scale * z(rng);
    const auto adv = grpo_advantage(r);
    double m = 0, s = 0;
    for (double v : adv) m += v / adv.size();
    for (double v : adv) s += (v - m) * (v - m) / adv.size();
    CHECK(std::abs(m) < 1e-9);
    CHECK(std::abs(std::sqrt(s) - 1.0) < 1e-9);
  }
}

TEST_CASE("kl_ref_theta") {
  std::mt19937_64 rng(4);
  GroundingPolicy ref = random_policy(rng, 3);
  const auto state = random_state(rng, 3);
  CHECK(kl_ref_theta(ref, ref, state) == 0.0);

  for (std::size_t k = 0; k < kActionDim; ++k) ref.log_std(k) = 0.0;
  GroundingPolicy wide = ref;
  for (std::size_t k = 0; k < kActionDim; ++k) wide.log_std(k) = 1.0;
  const double per_dim = 1.0 + 1.0 / (2.0 * std::exp(2.0)) - 0.5;
  CHECK(per_dim == doctest::Approx(0.5677).epsilon(1e-4));
  CHECK(kl_ref_theta(ref, wide, state) == doctest::Approx(4 * per_dim).epsilon(1e-12));

  GroundingPolicy shifted = ref;
  shifted.bias(2) += 0.3;
  CHECK(kl_ref_theta(ref, shifted, state) == doctest::Approx(0.045).epsilon(1e-12));

  for (int i = 0; i < 200; ++i) {
    const GroundingPolicy a = random_policy(rng, 3);
    const GroundingPolicy b = random_policy(rng, 3);
    CHECK(kl_ref_theta(a, b, state) > 0.0);
  }
}

TEST_CASE("objective") {
  std::mt19937_64 rng(5);
  const GroundingPolicy theta = random_policy(rng, 5);
  GroupRollout roll = scored_rollout(theta, theta, rng, 6);
  rescore(roll, theta, theta);
  OptimConfig cfg;
  cfg.beta = 0.0;
  CHECK(objective(roll, cfg) == doctest::Approx(roll.r_aif).epsilon(1e-12));
  cfg.beta = 0.04;
  CHECK(objective(roll, cfg) == doctest::Approx(roll.r_aif).epsilon(1e-12));

  // term-by-term recomputation with distinct theta, ratio reference and anchor
  const GroundingPolicy ref = random_policy(rng, 5);
  const GroundingPolicy anchor = random_policy(rng, 5);
  GroupRollout r2 = scored_rollout(theta, ref, rng, 5);
  rescore(r2, theta, anchor);
  double sum = 0.0;
  for (std::size_t i = 0; i < r2.size(); ++i) {
    sum += std::exp(theta.log_prob(r2.actions[i], r2.state) - ref.log_prob(r2.actions[i], r2.state)) *
           (r2.advantages[i] + r2.r_aif);
  }
  const double expected = sum / r2.size() - 0.04 * kl_ref_theta(anchor, theta, r2.state);
  CHECK(objective(r2, cfg) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(objective_at(r2, theta, anchor, cfg) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("grad_objective matches finite differences") {
  std::mt19937_64 rng(6);
  for (int k = 0; k < 10; ++k) {
    const GroundingPolicy theta = random_policy(rng, 4);
    const GroundingPolicy ref = random_policy(rng, 4);
    const GroundingPolicy anchor = random_policy(rng, 4);
    GroupRollout roll = scored_rollout(theta, ref, rng, 4);
    rescore(roll, theta, anchor);
    OptimConfig cfg;
    cfg.beta = k % 2 ? 0.04 : 0.0;
    const auto g = grad_objective(roll, theta, anchor, cfg);
    double diff = 0.0, norm = 0.0;
    for (std::size_t i = 0; i < theta.num_params(); ++i) {
      GroundingPolicy p = theta, m = theta;
      p.params()[i] += 1e-5;
      m.params()[i] -= 1e-5;
      const double fd = (objective_at(roll, p, anchor, cfg) - objective_at(roll, m, anchor, cfg)) / 2e-5;
      diff += std::pow(g.values[i] - fd, 2);
      norm += fd * fd;
    }
    CHECK(std::sqrt(diff / norm) < 1e-4);
  }
}

TEST_CASE("grad_objective special cases") {
  std::mt19937_64 rng(7);
  const GroundingPolicy theta = random_policy(rng, 3);
  GroupRollout roll = scored_rollout(theta, theta, rng, 4);
  OptimConfig cfg;
  cfg.beta = 0.0;

  GroupRollout zero = roll;
  std::fill(zero.advantages.begin(), zero.advantages.end(), 0.0);
  zero.r_aif = 0.0;
  rescore(zero, theta, theta);
  for (double v : grad_objective(zero, theta, theta, cfg).values) CHECK(v == 0.0);

  // theta == anchor: the KL part vanishes
  rescore(roll, theta, theta);
  cfg.beta = 0.04;
  const auto with_kl = grad_objective(roll, theta, theta, cfg);
  cfg.beta = 0.0;
  const auto without = grad_objective(roll, theta, theta, cfg);
  for (std::size_t i = 0; i < with_kl.values.size(); ++i) {
    CHECK(with_kl.values[i] == doctest::Approx(without.values[i]).epsilon(1e-12));
  }
}

TEST_CASE("plain GRPO gradient via a second path") {
  // alpha = gamma = beta = 0: mean of ratio * A * grad log pi, written out for
  // a diagonal Gaussian.
  std::mt19937_64 rng(8);
  for (int k = 0; k < 5; ++k) {
    const GroundingPolicy theta = random_policy(rng, 5);
    const GroundingPolicy ref = random_policy(rng, 5);
    GroupRollout roll = scored_rollout(theta, ref, rng, 6);
    roll.r_aif = 0.0;
    rescore(roll, theta, theta);
    OptimConfig cfg;
    cfg.beta = 0.0;
    const auto g = grad_objective(roll, theta, theta, cfg);

    std::vector<double> manual(theta.num_params(), 0.0);
    const auto mu = theta.mean(roll.state);
    const auto sd = theta.stddev();
    for (std::size_t i = 0; i < roll.size(); ++i) {
      const double ratio = std::exp(roll.logp_theta[i] - roll.logp_ref[i]);
      const double w = ratio * roll.advantages[i] / roll.size();
      for (std::size_t a = 0; a < kActionDim; ++a) {
        const double z = (roll.actions[i].u[a] - mu[a]) / sd[a];
        for (std::size_t f = 0; f < theta.feature_dim(); ++f) {
          manual[theta.weight_index(f, a)] += w * z / sd[a] * roll.state[f];
        }
        manual[theta.bias_index(a)] += w * z / sd[a];
        manual[theta.log_std_index(a)] += w * (z * z - 1.0);
      }
    }
    for (std::size_t i = 0; i < manual.size(); ++i) {
      CHECK(g.values[i] == doctest::Approx(manual[i]).epsilon(1e-10).scale(1e-12));
    }
  }
}

TEST_CASE("step") {
  GroundingPolicy p(1, -1.0);
  p.weight(0, 1) = 0.5;
  PolicyGradient zero{std::vector<double>(p.num_params(), 0.0)};
  CHECK(step(p, zero, 0.1) == p);

  PolicyGradient g{std::vector<double>(p.num_params())};
  for (std::size_t i = 0; i < g.values.size(); ++i) g.values[i] = 0.1 * (double(i) - 5.0);
  CHECK(step(p, g, 0.0) == p);
  const GroundingPolicy q = step(p, g, 0.25);
  for (std::size_t i = 0; i < g.values.size(); ++i) CHECK(q.params()[i] == p.params()[i] + 0.25 * g.values[i]);

  PolicyGradient bad = zero;
  bad.values[3] = std::nan("");
  CHECK_THROWS_AS(step(p, bad, 0.1), NumericalError);

  PolicyGradient huge = zero;
  huge.values[p.log_std_index(0)] = 1e6;
  huge.values[p.log_std_index(1)] = -1e6;
  const GroundingPolicy c = step(p, huge, 1.0);
  CHECK(c.log_std(0) == kMaxLogStd);
  CHECK(c.log_std(1) == kMinLogStd);
}

TEST_CASE("policy shape checks") {
  GroundingPolicy p(3, -1.0);
  CHECK(p.num_params() == 3 * 4 + 4 + 4);
  CHECK_THROWS_AS(p.mean(std::vector<double>(2)), std::invalid_argument);
  CHECK(p.all_finite());
  CHECK(parse_ratio_reference(to_string(RatioReference::kTask)) == RatioReference::kTask);
  OptimConfig bad;
  bad.n_samples = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}
