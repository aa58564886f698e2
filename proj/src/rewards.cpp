#include "guiaif/rewards.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace guiaif {

namespace {

void require_nonempty(PredictionGroup group) {
  if (group.empty()) throw std::invalid_argument("prediction group must hold at least one box");
}

}  // namespace

CorrectnessKind parse_correctness_kind(std::string_view name) {
  if (name == "iou") return CorrectnessKind::kIou;
  if (name == "point_distance") return CorrectnessKind::kPointDistance;
  if (name == "gaussian_dense") return CorrectnessKind::kGaussianDense;
  throw std::invalid_argument("unknown correctness_kind '" + std::string(name) + "'");
}

std::string to_string(CorrectnessKind kind) {
  switch (kind) {
    case CorrectnessKind::kIou:
      return "iou";
    case CorrectnessKind::kPointDistance:
      return "point_distance";
    case CorrectnessKind::kGaussianDense:
      return "gaussian_dense";
  }
  return "unknown";
}

void RewardConfig::validate() const {
  if (!(alpha >= 0.0) || !(gamma >= 0.0)) throw std::invalid_argument("alpha and gamma must be >= 0");
  if (!(kappa > 0.0)) throw std::invalid_argument("kappa must be > 0");
  if (!(eps_min > 0.0)) throw std::invalid_argument("eps_min must be > 0");
  if (!(tau > 0.0)) throw std::invalid_argument("tau must be > 0");
}

double apr_if(PredictionGroup group) {
  require_nonempty(group);
  const double n = static_cast<double>(group.size());
  Point bar;
  for (const BBox& b : group) {
    const Point c = center(b);
    bar.x += c.x;
    bar.y += c.y;
  }
  bar.x /= n;
  bar.y /= n;
  double sum = 0.0;
  for (const BBox& b : group) {
    const Point c = center(b);
    const double dx = c.x - bar.x;
    const double dy = c.y - bar.y;
    sum += dx * dx + dy * dy;
  }
  return sum / n;
}

double bhattacharyya(const DiagGaussian2& a, const DiagGaussian2& b) {
  const double avg_x = 0.5 * (a.var_x + b.var_x);
  const double avg_y = 0.5 * (a.var_y + b.var_y);
  const double dx = a.mean.x - b.mean.x;
  const double dy = a.mean.y - b.mean.y;
  const double mahalanobis = dx * dx / avg_x + dy * dy / avg_y;
  // log det(avg) - 0.5 * (log det(a) + log det(b)), kept in log space so tiny
  // variances do not underflow the determinant product.
  const double log_ratio = std::log(avg_x) + std::log(avg_y) -
                           0.5 * (std::log(a.var_x) + std::log(a.var_y) +
                                  std::log(b.var_x) + std::log(b.var_y));
  return mahalanobis / 8.0 + 0.5 * log_ratio;
}

double arr_if(PredictionGroup group, double kappa, double eps_min, VarianceMode mode) {
  require_nonempty(group);
  const std::size_t n = group.size();
  if (n == 1) return 0.0;
  std::vector<DiagGaussian2> g;
  g.reserve(n);
  for (const BBox& b : group) g.push_back(to_gaussian(b, kappa, eps_min, mode).gaussian);
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) sum += bhattacharyya(g[i], g[j]);
  }
  const double nd = static_cast<double>(n);
  return 2.0 * sum / (nd * (nd - 1.0));
}

double aif(PredictionGroup group, const RewardConfig& cfg) {
  double total = 0.0;
  if (cfg.alpha != 0.0) total += cfg.alpha * apr_if(group);
  if (cfg.gamma != 0.0) total += cfg.gamma * arr_if(group, cfg.kappa, cfg.eps_min, cfg.variance_mode);
  return total;
}

double correctness_iou(const BBox& pred, const BBox& gt) { return iou(pred, gt); }

double correctness_point(const BBox& pred, const BBox& gt, double tau) {
  const Point cp = center(pred);
  const Point cg = center(gt);
  const double dist = std::hypot(cp.x - cg.x, cp.y - cg.y);
  const double hit = contains(gt, cp) ? 1.0 : 0.0;
  return std::exp(-dist / tau) + hit;
}

double correctness_gaussian(const BBox& pred, const BBox& gt, double kappa, double eps_min,
                            VarianceMode mode) {
  const DiagGaussian2 gp = to_gaussian(pred, kappa, eps_min, mode).gaussian;
  const DiagGaussian2 gg = to_gaussian(gt, kappa, eps_min, mode).gaussian;
  const double dx = gp.mean.x - gg.mean.x;
  const double dy = gp.mean.y - gg.mean.y;
  const double point = std::exp(-0.5 * (dx * dx / gg.var_x + dy * dy / gg.var_y));
  const double coverage = std::exp(-bhattacharyya(gp, gg));
  return point + coverage;
}

double correctness(const BBox& pred, const BBox& gt, const RewardConfig& cfg) {
  switch (cfg.correctness_kind) {
    case CorrectnessKind::kIou:
      return correctness_iou(pred, gt);
    case CorrectnessKind::kPointDistance:
      return correctness_point(pred, gt, cfg.tau);
    case CorrectnessKind::kGaussianDense:
      return correctness_gaussian(pred, gt, cfg.kappa, cfg.eps_min, cfg.variance_mode);
  }
  return 0.0;
}

}  // namespace guiaif
