#include <doctest.h>

#include <set>

#include "support.hpp"
#include "panolayout/image_io.hpp"
#include "panolayout/synth.hpp"

using namespace panolayout;

namespace {

bool axis_spacing_ok(const Polygon& poly) {
  for (int axis = 0; axis < 2; ++axis) {
    std::vector<double> v;
    for (const Point2& p : poly) v.push_back(axis == 0 ? p.x : p.z);
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end(), [](double a, double b) { return std::abs(a - b) < 1e-9; }), v.end());
    for (std::size_t i = 1; i < v.size(); ++i) {
      if (v[i] - v[i - 1] < kMinWallSpacing - 1e-9) return false;
    }
  }
  return true;
}

// Distance from the origin to the nearest wall, computed per segment.
double camera_clearance(const Polygon& poly) {
  double best = 1e300;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Point2 a = poly[i], b = poly[(i + 1) % poly.size()];
    const double dx = b.x - a.x, dz = b.z - a.z;
    const double t = std::clamp(-(a.x * dx + a.z * dz) / (dx * dx + dz * dz), 0.0, 1.0);
    best = std::min(best, std::hypot(a.x + t * dx, a.z + t * dz));
  }
  return best;
}

}  // namespace

TEST_CASE("rectangle rooms use the requested extents") {
  RoomSpec spec;
  spec.corner_count = 4;
  spec.extent_x = 5.0;
  spec.extent_z = 3.5;
  spec.height_m = 2.8;
  spec.seed = 1;
  const ManhattanLayout l = random_layout(spec);
  REQUIRE(l.corners.size() == 4);
  CHECK(polygon_area(l.corners) == doctest::Approx(17.5));
  CHECK(l.height_m == 2.8);
  CHECK(contains(l.corners, {0.0, 0.0}));
}

TEST_CASE("one notch gives an L-shaped room") {
  const ManhattanLayout l = random_layout(random_spec(6, 3));
  REQUIRE(l.corners.size() == 6);
  int reflex = 0;
  for (std::size_t i = 0; i < 6; ++i) {
    const Point2 a = l.corners[(i + 5) % 6], b = l.corners[i], c = l.corners[(i + 1) % 6];
    reflex += (b.x - a.x) * (c.z - b.z) - (b.z - a.z) * (c.x - b.x) < 0;
  }
  CHECK(reflex == 1);
}

TEST_CASE("generated rooms satisfy the invariants") {
  for (int k : {4, 6, 8, 10, 12}) {
    int bad = 0;
    for (int i = 0; i < 1000; ++i) {
      const RoomSpec spec = random_spec(k, 100000 * k + i);
      const ManhattanLayout l = random_layout(spec);
      const bool ok = l.corners.size() == static_cast<std::size_t>(k) && !layout_violation(l) &&
                      camera_clearance(l.corners) >= kMinCameraClearance - 1e-9 && axis_spacing_ok(l.corners) &&
                      l.height_m >= 2.2 && l.height_m <= 4.0;
      bad += !ok;
    }
    INFO("class " << k);
    CHECK(bad == 0);
  }
}

TEST_CASE("generation is deterministic in the seed") {
  CHECK(random_layout(random_spec(10, 77)) == random_layout(random_spec(10, 77)));
  CHECK_FALSE(random_layout(random_spec(10, 77)) == random_layout(random_spec(10, 78)));
}

TEST_CASE("invalid specs are rejected") {
  RoomSpec s;
  s.corner_count = 5;
  CHECK_THROWS_AS(random_layout(s), DomainError);
  s.corner_count = 14;
  CHECK_THROWS_AS(validate_spec(s), DomainError);
  s = RoomSpec{};
  s.height_m = 1.5;
  CHECK_THROWS_AS(validate_spec(s), DomainError);
  s = RoomSpec{};
  s.extent_x = 1.0;
  CHECK_THROWS_AS(validate_spec(s), DomainError);
  CHECK_THROWS_AS(random_spec(3, 1), DomainError);
}

TEST_CASE("class counts by largest remainder") {
  const std::map<int, double> equal{{4, 1.0}, {6, 1.0}, {8, 1.0}, {10, 1.0}, {12, 1.0}};
  CHECK(class_counts(7, equal) == std::map<int, int>{{4, 2}, {6, 2}, {8, 1}, {10, 1}, {12, 1}});
  CHECK(class_counts(10, equal) == std::map<int, int>{{4, 2}, {6, 2}, {8, 2}, {10, 2}, {12, 2}});
  CHECK(class_counts(10, {{4, 3.0}, {8, 1.0}}) == std::map<int, int>{{4, 8}, {8, 2}});
  CHECK(class_counts(0, equal).at(4) == 0);
  CHECK_THROWS_AS(class_counts(5, {{5, 1.0}}), DomainError);
  CHECK_THROWS_AS(class_counts(5, {{4, 0.0}}), DomainError);
  CHECK_THROWS_AS(class_counts(-1, equal), DomainError);
}

TEST_CASE("dataset plan") {
  DatasetOptions opts;
  opts.count = 12;
  opts.val_count = 3;
  opts.seed = 4;
  const Manifest m = plan_dataset(opts);
  REQUIRE(m.samples.size() == 12);
  CHECK(m.samples[0].id == "s00000");
  CHECK(m.samples[11].id == "s00011");
  std::map<int, int> counts;
  for (std::size_t i = 0; i < m.samples.size(); ++i) {
    CHECK(m.samples[i].split == (i >= 9 ? "val" : "train"));
    ++counts[m.samples[i].corner_count];
  }
  CHECK(counts == class_counts(12, opts.proportions));
  const Manifest again = plan_dataset(opts);
  for (std::size_t i = 0; i < m.samples.size(); ++i) CHECK(again.samples[i].seed == m.samples[i].seed);
  opts.val_count = 13;
  CHECK_THROWS_AS(plan_dataset(opts), DomainError);
}

TEST_CASE("samples are consistent with their layout") {
  const Sample s = make_sample(random_spec(8, 5), SampleGeometry{256, 128, 128, 160.0}, "x");
  CHECK(s.pano.width() == 256);
  CHECK(s.pano.channels() == 3);
  CHECK(s.fc == render_fc_map(s.layout, 256, 128));
  CHECK(s.fp == render_fp_map(s.layout, CeilingViewFrame::for_fov(128, 160.0)));
  CHECK(s.height_m == s.layout.height_m);
  for (float v : s.pano.data()) {
    CHECK(v >= 0.0f);
    CHECK(v <= 1.0f);
  }
}

TEST_CASE("datasets are written bit-identically") {
  testsupport::TempDir a("ds_a"), b("ds_b");
  DatasetOptions opts;
  opts.count = 5;
  opts.val_count = 1;
  opts.seed = 9;
  opts.geometry = {128, 64, 64, 160.0};
  const Manifest ma = write_dataset(a.path(), opts);
  opts.threads = 2;
  write_dataset(b.path(), opts);
  for (const auto& r : ma.samples) {
    for (const char* f : {"pano.png", "fc.plpm", "fp.plpm", "layout.json"}) {
      INFO(r.id << "/" << f);
      CHECK(read_file_bytes(a.path() / r.id / f) == read_file_bytes(b.path() / r.id / f));
    }
  }
  CHECK(read_file_bytes(a.path() / "manifest.json") == read_file_bytes(b.path() / "manifest.json"));

  const Manifest loaded = load_manifest(a.path() / "manifest.json");
  CHECK(loaded.seed == 9);
  CHECK(loaded.geometry.pano_w == 128);
  REQUIRE(loaded.samples.size() == 5);
  CHECK(loaded.samples[4].split == "val");
  CHECK(loaded.samples[2].corner_count == ma.samples[2].corner_count);
  CHECK(loaded.samples[2].seed == ma.samples[2].seed);

  const Sample direct = make_sample(ma.samples[3], ma.geometry);
  const Sample read = read_sample(a.path(), ma.samples[3].id);
  CHECK(read.fc == direct.fc);
  CHECK(read.fp == direct.fp);
  CHECK(read.layout == direct.layout);
  double worst = 0.0;
  for (std::size_t i = 0; i < read.pano.storage().size(); ++i) {
    worst = std::max(worst, static_cast<double>(std::abs(read.pano.storage()[i] - direct.pano.storage()[i])));
  }
  CHECK(worst <= 0.5 / 255 + 1e-6);
}

TEST_CASE("corrupt manifests are rejected") {
  testsupport::TempDir dir("manifest");
  write_file_atomic(dir.path() / "m.json", std::string("{\"samples\": 3"));
  CHECK_THROWS_AS(load_manifest(dir.path() / "m.json"), FormatError);
}
