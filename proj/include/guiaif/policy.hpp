#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "guiaif/geometry.hpp"
#include "guiaif/rng.hpp"

namespace guiaif {

inline constexpr std::size_t kActionDim = 4;
inline constexpr double kMinLogStd = -6.0;
inline constexpr double kMaxLogStd = 1.0;
/// Lower clamp on predicted box sides, before clipping to the unit square.
inline constexpr double kMinActionSide = 1e-4;

using ActionVec = std::array<double, kActionDim>;

/// Pre-squash action: (logit cx, logit cy, log width, log height).
struct RawAction {
  ActionVec u{};
};

BBox action_to_bbox(const RawAction& a);

/// Which policy the probability ratio is taken against.
enum class RatioReference {
  kStep,  ///< the policy that generated the rollout (refreshed every step)
  kTask,  ///< the snapshot taken at the start of the current task
};

RatioReference parse_ratio_reference(std::string_view name);
std::string to_string(RatioReference r);

struct OptimConfig {
  double beta = 0.04;
  double lr = 5e-2;
  int n_samples = 4;
  /// Instructions (groups) averaged per update.
  int batch_size = 8;
  int inner_epochs = 1;
  std::uint64_t seed = 0;
  double init_log_std = -1.0;
  /// Global L2 clip applied to each gradient before the step; 0 disables.
  double max_grad_norm = 1.0;
  RatioReference ratio_reference = RatioReference::kStep;

  void validate() const;
};

/// Linear-Gaussian box policy: u ~ N(W^T s + b, diag(exp(log_std))^2).
///
/// Parameters live in one flat vector laid out as
/// [W (feature-major, kActionDim per feature) | b | log_std], which is also the
/// layout of PolicyGradient.
class GroundingPolicy {
 public:
  GroundingPolicy() = default;
  GroundingPolicy(std::size_t feature_dim, double init_log_std);

  std::size_t feature_dim() const { return feature_dim_; }
  std::size_t num_params() const { return params_.size(); }

  std::size_t weight_index(std::size_t feature, std::size_t k) const { return feature * kActionDim + k; }
  std::size_t bias_index(std::size_t k) const { return feature_dim_ * kActionDim + k; }
  std::size_t log_std_index(std::size_t k) const { return feature_dim_ * kActionDim + kActionDim + k; }

  double weight(std::size_t feature, std::size_t k) const { return params_[weight_index(feature, k)]; }
  double& weight(std::size_t feature, std::size_t k) { return params_[weight_index(feature, k)]; }
  double bias(std::size_t k) const { return params_[bias_index(k)]; }
  double& bias(std::size_t k) { return params_[bias_index(k)]; }
  double log_std(std::size_t k) const { return params_[log_std_index(k)]; }
  double& log_std(std::size_t k) { return params_[log_std_index(k)]; }

  std::span<const double> params() const { return params_; }
  std::span<double> params() { return params_; }

  ActionVec mean(std::span<const double> state) const;
  ActionVec stddev() const;
  double log_prob(const RawAction& a, std::span<const double> state) const;

  /// Box predicted by the distribution mean; what evaluation scores.
  BBox mean_box(std::span<const double> state) const;

  void clamp_log_std();
  bool all_finite() const;

  friend bool operator==(const GroundingPolicy&, const GroundingPolicy&) = default;

 private:
  std::size_t feature_dim_ = 0;
  std::vector<double> params_;
};

struct PolicyGradient {
  std::vector<double> values;

  double norm() const;
};

/// One group of N samples for a single state, plus everything the objective
/// needs.
struct GroupRollout {
  std::vector<double> state;
  std::vector<RawAction> actions;
  std::vector<BBox> boxes;
  std::vector<double> logp_theta;
  std::vector<double> logp_ref;
  std::vector<double> rewards;
  std::vector<double> advantages;
  double r_aif = 0.0;
  double kl = 0.0;

  std::size_t size() const { return actions.size(); }
};

/// Draws n actions from theta at state; logp_ref is scored under ratio_ref.
GroupRollout sample_group(const GroundingPolicy& theta, const GroundingPolicy& ratio_ref,
                          std::span<const double> state, int n, Rng& rng);

/// Group-normalized advantages with population std. Returns zeros when the
/// std is below 1e-12.
std::vector<double> grpo_advantage(std::span<const double> rewards);

/// KL(ref || theta) of the action distributions induced at state.
double kl_ref_theta(const GroundingPolicy& ref, const GroundingPolicy& theta,
                    std::span<const double> state);

/// Group-mean of ratio_i * (A_i + r_aif) minus beta * kl, from the values stored
/// in the rollout.
double objective(const GroupRollout& rollout, const OptimConfig& cfg);

/// Recomputes logp_theta and kl for theta / anchor in place.
void rescore(GroupRollout& rollout, const GroundingPolicy& theta, const GroundingPolicy& anchor);

/// objective() as a function of theta; used for gradient checks.
double objective_at(const GroupRollout& rollout, const GroundingPolicy& theta,
                    const GroundingPolicy& anchor, const OptimConfig& cfg);

/// Analytic gradient of objective_at with respect to theta's parameters.
PolicyGradient grad_objective(const GroupRollout& rollout, const GroundingPolicy& theta,
                              const GroundingPolicy& anchor, const OptimConfig& cfg);

/// Gradient ascent. Throws NumericalError on non-finite gradient entries.
GroundingPolicy step(const GroundingPolicy& theta, const PolicyGradient& grad, double lr);

}  // namespace guiaif
