#include <doctest.h>

#include <sstream>

#include "criteria.hpp"
#include "panolayout/metrics.hpp"

using namespace panolayout;
using testsupport::rect_layout;
using testsupport::square_layout;

namespace {

ManhattanLayout scaled(const ManhattanLayout& l, double s) {
  ManhattanLayout out = l;
  for (Point2& p : out.corners) p = {p.x * s, p.z * s};
  return out;
}

}  // namespace

TEST_CASE("iou2d analytic cases") {
  const auto a = rect_layout(-0.75, -0.5, 0.25, 0.5);
  const auto b = rect_layout(-0.25, -0.5, 0.75, 0.5);
  CHECK(iou2d(a, a) == 1.0);
  CHECK(iou2d(a, b) == 1.0 / 3.0);
  CHECK(iou2d(b, a) == 1.0 / 3.0);
  CHECK(criteria::analytic_metric_cases_exact());
  const Polygon p{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  const Polygon q{{2, 0}, {3, 0}, {3, 1}, {2, 1}};
  CHECK(intersection_area(p, q) == 0.0);
  CHECK(intersection_area(p, p) == 1.0);
}

TEST_CASE("iou3d analytic cases") {
  const auto h2 = square_layout(0.5, 2.0);
  const auto h3 = square_layout(0.5, 3.0);
  CHECK(iou3d(h2, h3) == 2.0 / 3.0);
  CHECK(iou3d(h3, h3) == 1.0);
  // Same height: 3D IoU reduces to 2D IoU.
  const auto a = rect_layout(-1, -1, 1, 1, 2.5);
  const auto b = rect_layout(-0.5, -1, 1.5, 1, 2.5);
  CHECK(iou3d(a, b) == doctest::Approx(iou2d(a, b)).epsilon(1e-15));
}

TEST_CASE("iou2d agrees with rasterization") {
  CHECK(criteria::iou2d_raster_max_error(20, 2048, 3) <= 1e-3);
  const auto l = testsupport::l_layout();
  CHECK(std::abs(iou2d(l, square_layout(2.0)) - testsupport::raster_iou2d(l.corners, square_layout(2.0).corners, 2048)) <= 1e-3);
}

TEST_CASE("iou3d agrees with voxelization") {
  CHECK(criteria::iou3d_voxel_max_error(10, 256, 4) <= 5e-3);
}

TEST_CASE("scaling about the origin") {
  for (const auto& l : {square_layout(1.5), rect_layout(-1, -2, 3, 1), testsupport::l_layout()}) {
    CHECK(iou2d(scaled(l, 1.1), l) == doctest::Approx(1.0 / 1.21).epsilon(1e-12));
  }
}

TEST_CASE("invalid layouts are rejected") {
  ManhattanLayout cw = square_layout();
  std::reverse(cw.corners.begin(), cw.corners.end());
  CHECK_THROWS_AS(iou2d(cw, square_layout()), InvalidLayoutError);
  CHECK_THROWS_AS(iou3d(square_layout(), rect_layout(1, 1, 2, 2)), InvalidLayoutError);
}

TEST_CASE("evaluation harness") {
  std::vector<EvalItem> items;
  for (int k : {4, 6, 8, 10, 12}) {
    for (int i = 0; i < 3; ++i) {
      items.push_back({"r" + std::to_string(k) + "_" + std::to_string(i), random_layout(random_spec(k, 10 * k + i))});
    }
  }
  const EvalReport id = evaluate(items, Predictor([](const EvalItem& it) { return it.ground_truth; }));
  CHECK(id.overall().count == items.size());
  CHECK(id.overall().mean_iou2d == 1.0);
  CHECK(id.overall().mean_iou3d == 1.0);
  CHECK(id.overall().corner_accuracy == 1.0);
  REQUIRE(id.find("10+"));
  CHECK(id.find("10+")->count == 6);
  CHECK(id.find("12") == nullptr);

  const EvalReport sc = evaluate(items, Predictor([](const EvalItem& it) { return scaled(it.ground_truth, 1.1); }), 3);
  for (const auto& r : sc.records) CHECK(r.iou2d == doctest::Approx(1.0 / 1.21).epsilon(1e-12));

  int calls = 0;
  const EvalReport failing = evaluate(items, Predictor([&](const EvalItem& it) -> ManhattanLayout {
    if (calls++ % 2 == 0) throw DegenerateGeometryError("no fit");
    return it.ground_truth;
  }));
  CHECK(failing.overall().failures == 8);
  CHECK(failing.overall().mean_iou2d == doctest::Approx(7.0 / 15.0));

  std::ostringstream csv, table;
  write_csv(csv, id);
  write_table(table, id);
  CHECK(csv.str().rfind("id,corner_class,iou2d,iou3d,corner_match,fit_time_ms\n", 0) == 0);
  CHECK(table.str().find("overall") != std::string::npos);
}

TEST_CASE("timed predictor reports its own time") {
  const std::vector<EvalItem> items{{"a", square_layout()}, {"b", square_layout(1.0)}};
  const EvalReport r = evaluate(items, TimedPredictor([](const EvalItem& it, double& s) {
                                  s = 0.25;
                                  return it.ground_truth;
                                }));
  CHECK(r.p50_fit_ms == doctest::Approx(250.0));
}

TEST_CASE("percentile and corner classes") {
  CHECK(percentile({1, 2, 3, 4}, 0.5) == doctest::Approx(2.5));
  CHECK(percentile({}, 0.5) == 0.0);
  CHECK(corner_class(4) == "4");
  CHECK(corner_class(8) == "8");
  CHECK(corner_class(14) == "10+");
}
