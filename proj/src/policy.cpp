#include "guiaif/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "guiaif/errors.hpp"

namespace guiaif {

namespace {

constexpr double kDegenerateStd = 1e-12;

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double clip_unit(double v) { return std::clamp(v, 0.0, 1.0); }

}  // namespace

BBox action_to_bbox(const RawAction& a) {
  const double cx = sigmoid(a.u[0]);
  const double cy = sigmoid(a.u[1]);
  const double w = std::clamp(std::exp(a.u[2]), kMinActionSide, 1.0);
  const double h = std::clamp(std::exp(a.u[3]), kMinActionSide, 1.0);
  double x1 = clip_unit(cx - w / 2.0);
  double x2 = clip_unit(cx + w / 2.0);
  double y1 = clip_unit(cy - h / 2.0);
  double y2 = clip_unit(cy + h / 2.0);
  if (x1 > x2) std::swap(x1, x2);
  if (y1 > y2) std::swap(y1, y2);
  return {x1, y1, x2, y2};
}

RatioReference parse_ratio_reference(std::string_view name) {
  if (name == "step") return RatioReference::kStep;
  if (name == "task") return RatioReference::kTask;
  throw std::invalid_argument("unknown ratio_reference '" + std::string(name) + "'");
}

std::string to_string(RatioReference r) { return r == RatioReference::kStep ? "step" : "task"; }

void OptimConfig::validate() const {
  if (!(beta >= 0.0)) throw std::invalid_argument("beta must be >= 0");
  if (!(lr > 0.0)) throw std::invalid_argument("lr must be > 0");
  if (n_samples < 1) throw std::invalid_argument("n_samples must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (inner_epochs < 1) throw std::invalid_argument("inner_epochs must be >= 1");
  if (!(max_grad_norm >= 0.0)) throw std::invalid_argument("max_grad_norm must be >= 0");
  if (!std::isfinite(init_log_std)) throw std::invalid_argument("init_log_std must be finite");
}

GroundingPolicy::GroundingPolicy(std::size_t feature_dim, double init_log_std)
    : feature_dim_(feature_dim), params_(feature_dim * kActionDim + 2 * kActionDim, 0.0) {
  for (std::size_t k = 0; k < kActionDim; ++k) log_std(k) = init_log_std;
  clamp_log_std();
}

ActionVec GroundingPolicy::mean(std::span<const double> state) const {
  if (state.size() != feature_dim_) throw std::invalid_argument("state dimension does not match policy");
  ActionVec mu{};
  for (std::size_t k = 0; k < kActionDim; ++k) mu[k] = bias(k);
  for (std::size_t f = 0; f < feature_dim_; ++f) {
    const double s = state[f];
    if (s == 0.0) continue;
    for (std::size_t k = 0; k < kActionDim; ++k) mu[k] += weight(f, k) * s;
  }
  return mu;
}

ActionVec GroundingPolicy::stddev() const {
  ActionVec sd{};
  for (std::size_t k = 0; k < kActionDim; ++k) sd[k] = std::exp(log_std(k));
  return sd;
}

double GroundingPolicy::log_prob(const RawAction& a, std::span<const double> state) const {
  const ActionVec mu = mean(state);
  double lp = 0.0;
  for (std::size_t k = 0; k < kActionDim; ++k) {
    const double z = (a.u[k] - mu[k]) * std::exp(-log_std(k));
    lp += -0.5 * z * z - log_std(k) - 0.5 * std::log(2.0 * std::numbers::pi);
  }
  return lp;
}

BBox GroundingPolicy::mean_box(std::span<const double> state) const {
  return action_to_bbox(RawAction{mean(state)});
}

void GroundingPolicy::clamp_log_std() {
  for (std::size_t k = 0; k < kActionDim; ++k) log_std(k) = std::clamp(log_std(k), kMinLogStd, kMaxLogStd);
}

bool GroundingPolicy::all_finite() const {
  return std::all_of(params_.begin(), params_.end(), [](double v) { return std::isfinite(v); });
}

double PolicyGradient::norm() const {
  double s = 0.0;
  for (double v : values) s += v * v;
  return std::sqrt(s);
}

GroupRollout sample_group(const GroundingPolicy& theta, const GroundingPolicy& ratio_ref,
                          std::span<const double> state, int n, Rng& rng) {
  if (n < 1) throw std::invalid_argument("group size must be >= 1");
  GroupRollout r;
  r.state.assign(state.begin(), state.end());
  const ActionVec mu = theta.mean(state);
  const ActionVec sd = theta.stddev();
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int i = 0; i < n; ++i) {
    RawAction a;
    for (std::size_t k = 0; k < kActionDim; ++k) a.u[k] = mu[k] + sd[k] * normal(rng);
    r.actions.push_back(a);
    r.boxes.push_back(action_to_bbox(a));
    r.logp_theta.push_back(theta.log_prob(a, state));
    r.logp_ref.push_back(ratio_ref.log_prob(a, state));
  }
  r.rewards.assign(n, 0.0);
  r.advantages.assign(n, 0.0);
  return r;
}

std::vector<double> grpo_advantage(std::span<const double> rewards) {
  if (rewards.empty()) throw std::invalid_argument("advantage needs at least one reward");
  const double n = static_cast<double>(rewards.size());
  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= n;
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  const double sd = std::sqrt(var / n);
  std::vector<double> out(rewards.size(), 0.0);
  if (!(sd >= kDegenerateStd)) return out;
  for (std::size_t i = 0; i < rewards.size(); ++i) out[i] = (rewards[i] - mean) / sd;
  return out;
}

double kl_ref_theta(const GroundingPolicy& ref, const GroundingPolicy& theta,
                    std::span<const double> state) {
  const ActionVec mr = ref.mean(state);
  const ActionVec mt = theta.mean(state);
  double kl = 0.0;
  for (std::size_t k = 0; k < kActionDim; ++k) {
    const double ls_r = ref.log_std(k);
    const double ls_t = theta.log_std(k);
    const double d = mr[k] - mt[k];
    const double inv_var_t = std::exp(-2.0 * ls_t);
    kl += (ls_t - ls_r) + 0.5 * (std::exp(2.0 * ls_r) + d * d) * inv_var_t - 0.5;
  }
  return std::max(kl, 0.0);
}

double objective(const GroupRollout& rollout, const OptimConfig& cfg) {
  const std::size_t n = rollout.size();
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double ratio = std::exp(rollout.logp_theta[i] - rollout.logp_ref[i]);
    sum += ratio * (rollout.advantages[i] + rollout.r_aif);
  }
  return sum / static_cast<double>(n) - cfg.beta * rollout.kl;
}

void rescore(GroupRollout& rollout, const GroundingPolicy& theta, const GroundingPolicy& anchor) {
  rollout.logp_theta.resize(rollout.size());
  for (std::size_t i = 0; i < rollout.size(); ++i) {
    rollout.logp_theta[i] = theta.log_prob(rollout.actions[i], rollout.state);
  }
  rollout.kl = kl_ref_theta(anchor, theta, rollout.state);
}

double objective_at(const GroupRollout& rollout, const GroundingPolicy& theta,
                    const GroundingPolicy& anchor, const OptimConfig& cfg) {
  GroupRollout r = rollout;
  rescore(r, theta, anchor);
  return objective(r, cfg);
}

PolicyGradient grad_objective(const GroupRollout& rollout, const GroundingPolicy& theta,
                              const GroundingPolicy& anchor, const OptimConfig& cfg) {
  const std::span<const double> s = rollout.state;
  const std::size_t n = rollout.size();
  const std::size_t fdim = theta.feature_dim();
  PolicyGradient g{std::vector<double>(theta.num_params(), 0.0)};

  const ActionVec mu = theta.mean(s);
  ActionVec inv_var{};
  for (std::size_t k = 0; k < kActionDim; ++k) inv_var[k] = std::exp(-2.0 * theta.log_std(k));

  // Likelihood-ratio term: d/dtheta ratio_i = ratio_i * dlogp_i.
  ActionVec d_mu{};
  ActionVec d_ls{};
  for (std::size_t i = 0; i < n; ++i) {
    const RawAction& a = rollout.actions[i];
    const double ratio = std::exp(theta.log_prob(a, s) - rollout.logp_ref[i]);
    const double w = ratio * (rollout.advantages[i] + rollout.r_aif) / static_cast<double>(n);
    if (w == 0.0) continue;
    for (std::size_t k = 0; k < kActionDim; ++k) {
      const double diff = a.u[k] - mu[k];
      d_mu[k] += w * diff * inv_var[k];
      d_ls[k] += w * (diff * diff * inv_var[k] - 1.0);
    }
  }

  if (cfg.beta != 0.0) {
    const ActionVec mr = anchor.mean(s);
    for (std::size_t k = 0; k < kActionDim; ++k) {
      const double d = mu[k] - mr[k];
      const double var_r = std::exp(2.0 * anchor.log_std(k));
      d_mu[k] -= cfg.beta * d * inv_var[k];
      d_ls[k] -= cfg.beta * (1.0 - (var_r + d * d) * inv_var[k]);
    }
  }

  for (std::size_t f = 0; f < fdim; ++f) {
    if (s[f] == 0.0) continue;
    for (std::size_t k = 0; k < kActionDim; ++k) g.values[theta.weight_index(f, k)] = s[f] * d_mu[k];
  }
  for (std::size_t k = 0; k < kActionDim; ++k) {
    g.values[theta.bias_index(k)] = d_mu[k];
    g.values[theta.log_std_index(k)] = d_ls[k];
  }
  return g;
}

GroundingPolicy step(const GroundingPolicy& theta, const PolicyGradient& grad, double lr) {
  if (grad.values.size() != theta.num_params()) {
    throw std::invalid_argument("gradient size does not match policy");
  }
  for (std::size_t i = 0; i < grad.values.size(); ++i) {
    if (!std::isfinite(grad.values[i])) {
      std::ostringstream msg;
      msg << "non-finite gradient entry at parameter " << i << " (" << grad.values[i] << ")";
      throw NumericalError(msg.str());
    }
  }
  GroundingPolicy next = theta;
  std::span<double> p = next.params();
  for (std::size_t i = 0; i < p.size(); ++i) p[i] += lr * grad.values[i];
  next.clamp_log_std();
  return next;
}

}  // namespace guiaif
