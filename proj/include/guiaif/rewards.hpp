#pragma once

#include <span>
#include <string>
#include <string_view>

#include "guiaif/geometry.hpp"

namespace guiaif {

/// Per-sample correctness reward against the ground-truth box.
enum class CorrectnessKind {
  kIou,            ///< plain IoU
  kPointDistance,  ///< exp(-d/tau) on centers plus a hit bonus
  kGaussianDense,  ///< Gaussian point score plus Bhattacharyya coverage
};

CorrectnessKind parse_correctness_kind(std::string_view name);
std::string to_string(CorrectnessKind kind);

struct RewardConfig {
  double alpha = 15.0;
  double gamma = 0.5;
  double kappa = 0.02;
  double eps_min = 1e-8;
  CorrectnessKind correctness_kind = CorrectnessKind::kGaussianDense;
  double tau = 0.1;
  VarianceMode variance_mode = VarianceMode::kVarProportional;

  /// Throws std::invalid_argument when a field is out of range.
  void validate() const;
};

/// The N boxes sampled for one instruction. Must be non-empty.
using PredictionGroup = std::span<const BBox>;

/// Anchoring point reward: mean squared distance of the box centers to their
/// centroid. Zero for a single box.
double apr_if(PredictionGroup group);

/// Closed-form Bhattacharyya distance between two diagonal Gaussians.
double bhattacharyya(const DiagGaussian2& a, const DiagGaussian2& b);

/// Anchoring region reward: mean pairwise Bhattacharyya distance between the
/// Gaussian models of the boxes. Zero for a single box.
double arr_if(PredictionGroup group, double kappa, double eps_min,
              VarianceMode mode = VarianceMode::kStdProportional);

/// alpha * apr_if + gamma * arr_if.
double aif(PredictionGroup group, const RewardConfig& cfg);

double correctness_iou(const BBox& pred, const BBox& gt);
double correctness_point(const BBox& pred, const BBox& gt, double tau);
double correctness_gaussian(const BBox& pred, const BBox& gt, double kappa, double eps_min,
                            VarianceMode mode = VarianceMode::kStdProportional);

/// Dispatches on cfg.correctness_kind.
double correctness(const BBox& pred, const BBox& gt, const RewardConfig& cfg);

}  // namespace guiaif
