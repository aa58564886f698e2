#include <doctest.h>

#include <random>

#include "guiaif/geometry.hpp"

using namespace guiaif;

TEST_CASE("center") {
  CHECK(center(make_bbox(0, 0, 1, 1)) == Point{0.5, 0.5});
  CHECK(center(make_bbox(0.2, 0.2, 0.2, 0.2)) == Point{0.2, 0.2});
  const Point c = center(make_bbox(0.1, 0.3, 0.5, 0.7));
  CHECK(c.x == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(c.y == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("make_bbox rejects invalid boxes") {
  CHECK_THROWS_AS(make_bbox(0.5, 0, 0.4, 1), std::invalid_argument);
  CHECK_THROWS_AS(make_bbox(0, 0, 1.1, 1), std::invalid_argument);
  CHECK_THROWS_AS(make_bbox(0, std::nan(""), 1, 1), std::invalid_argument);
  CHECK(is_valid(BBox{0, 0, 0, 0}));
  CHECK_FALSE(is_valid(BBox{-0.1, 0, 0.5, 0.5}));
}

TEST_CASE("to_gaussian, standard deviation proportional to side") {
  const auto full = to_gaussian(make_bbox(0, 0, 1, 1), 0.25, 1e-8);
  CHECK(full.gaussian.mean == Point{0.5, 0.5});
  CHECK(full.gaussian.var_x == doctest::Approx(0.0625).epsilon(1e-15));
  CHECK(full.gaussian.var_y == doctest::Approx(0.0625).epsilon(1e-15));
  CHECK_FALSE(full.floored);

  const auto point = to_gaussian(make_bbox(0.4, 0.4, 0.4, 0.4), 0.25, 1e-8);
  CHECK(point.gaussian.var_x == 1e-8);
  CHECK(point.gaussian.var_y == 1e-8);
  CHECK(point.floored);

  const auto wide = to_gaussian(make_bbox(0, 0, 0.8, 0.4), 0.25, 1e-8);
  CHECK(wide.gaussian.var_x == doctest::Approx(0.04).epsilon(1e-14));
  CHECK(wide.gaussian.var_y == doctest::Approx(0.01).epsilon(1e-14));
}

TEST_CASE("to_gaussian, variance proportional to side") {
  const auto g = to_gaussian(make_bbox(0, 0, 0.8, 0.4), 0.02, 1e-8, VarianceMode::kVarProportional);
  CHECK(g.gaussian.var_x == doctest::Approx(0.016).epsilon(1e-14));
  CHECK(g.gaussian.var_y == doctest::Approx(0.008).epsilon(1e-14));
}

TEST_CASE("iou") {
  const BBox a = make_bbox(0, 0, 0.5, 0.5);
  CHECK(iou(a, a) == 1.0);
  CHECK(iou(make_bbox(0, 0, 0.1, 0.1), make_bbox(0.5, 0.5, 0.6, 0.6)) == 0.0);
  CHECK(iou(a, make_bbox(0.25, 0, 0.75, 0.5)) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(iou(make_bbox(0.3, 0.3, 0.3, 0.3), make_bbox(0.3, 0.3, 0.3, 0.3)) == 0.0);
}

TEST_CASE("contains uses closed boundaries") {
  CHECK(contains(make_bbox(0, 0, 1, 1), {0.5, 0.5}));
  CHECK(contains(make_bbox(0, 0, 0.5, 0.5), {0.5, 0.5}));
  CHECK_FALSE(contains(make_bbox(0, 0, 0.5, 0.5), {0.6, 0.2}));
}

TEST_CASE("properties over random boxes") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto random_box = [&] {
    const double w = 0.01 + 0.5 * u(rng);
    const double h = 0.01 + 0.5 * u(rng);
    const double x = u(rng) * (1 - w);
    const double y = u(rng) * (1 - h);
    return make_bbox(x, y, x + w, y + h);
  };
  for (int i = 0; i < 2000; ++i) {
    const BBox a = random_box();
    const BBox b = random_box();
    // translation equivariance of center
    const double tx = -a.x1 * u(rng);
    const double ty = (1 - a.y2) * u(rng);
    const BBox moved{a.x1 + tx, a.y1 + ty, a.x2 + tx, a.y2 + ty};
    CHECK(center(moved).x == doctest::Approx(center(a).x + tx).epsilon(1e-12));
    CHECK(center(moved).y == doctest::Approx(center(a).y + ty).epsilon(1e-12));

    CHECK(to_gaussian(a, 0.25, 1e-8).gaussian.mean == center(a));
    CHECK(iou(a, b) == iou(b, a));
    CHECK(iou(a, b) >= 0.0);
    CHECK(iou(a, b) <= 1.0);
    CHECK(iou(a, a) == 1.0);
    if (!(a == b)) CHECK(iou(a, b) < 1.0);
    CHECK(contains(a, center(a)));
  }
}
