#include "guiaif/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace guiaif {

namespace {

bool in_unit(double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; }

}  // namespace

bool is_valid(const BBox& b) {
  return in_unit(b.x1) && in_unit(b.y1) && in_unit(b.x2) && in_unit(b.y2) &&
         b.x1 <= b.x2 && b.y1 <= b.y2;
}

BBox make_bbox(double x1, double y1, double x2, double y2) {
  BBox b{x1, y1, x2, y2};
  if (!is_valid(b)) {
    throw std::invalid_argument("bbox corners must be finite, in [0,1] and ordered");
  }
  return b;
}

Point center(const BBox& b) {
  return {(b.x1 + b.x2) / 2.0, (b.y1 + b.y2) / 2.0};
}

GaussianFit to_gaussian(const BBox& b, double kappa, double eps_min, VarianceMode mode) {
  double vx = 0.0;
  double vy = 0.0;
  if (mode == VarianceMode::kStdProportional) {
    const double sx = kappa * b.width();
    const double sy = kappa * b.height();
    vx = sx * sx;
    vy = sy * sy;
  } else {
    vx = kappa * b.width();
    vy = kappa * b.height();
  }
  GaussianFit fit;
  fit.floored = vx < eps_min || vy < eps_min;
  fit.gaussian = {center(b), std::max(vx, eps_min), std::max(vy, eps_min)};
  return fit;
}

double iou(const BBox& a, const BBox& b) {
  const double iw = std::max(0.0, std::min(a.x2, b.x2) - std::max(a.x1, b.x1));
  const double ih = std::max(0.0, std::min(a.y2, b.y2) - std::max(a.y1, b.y1));
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

bool contains(const BBox& b, const Point& p) {
  return p.x >= b.x1 && p.x <= b.x2 && p.y >= b.y1 && p.y <= b.y2;
}

}  // namespace guiaif
