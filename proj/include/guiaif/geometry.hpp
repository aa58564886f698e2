#pragma once

#include <stdexcept>

namespace guiaif {

/// Point in normalized screen coordinates.
struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

/// Axis-aligned box in normalized screen coordinates, corners (x1, y1) top-left
/// and (x2, y2) bottom-right. Construct through make_bbox() when the source is
/// untrusted; the aggregate form is left open for brace-init in tests.
struct BBox {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return width() * height(); }

  friend bool operator==(const BBox&, const BBox&) = default;
};

bool is_valid(const BBox& b);

/// Throws std::invalid_argument unless the corners are finite, inside [0,1]
/// and ordered.
BBox make_bbox(double x1, double y1, double x2, double y2);

/// 2-D Gaussian with diagonal covariance.
struct DiagGaussian2 {
  Point mean;
  double var_x = 1.0;
  double var_y = 1.0;
};

/// How box side lengths map to Gaussian spread.
enum class VarianceMode {
  kStdProportional,  ///< sigma = kappa * side
  kVarProportional,  ///< variance = kappa * side
};

struct GaussianFit {
  DiagGaussian2 gaussian;
  bool floored = false;  ///< at least one variance was raised to eps_min
};

Point center(const BBox& b);

GaussianFit to_gaussian(const BBox& b, double kappa, double eps_min,
                        VarianceMode mode = VarianceMode::kStdProportional);

double iou(const BBox& a, const BBox& b);

/// Closed-boundary containment test.
bool contains(const BBox& b, const Point& p);

}  // namespace guiaif
