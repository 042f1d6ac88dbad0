#include <doctest.h>

#include <cmath>

#include "panolayout/image_io.hpp"
#include "panolayout/layout.hpp"
#include "panolayout/projection.hpp"
#include "panolayout/synth.hpp"
#include "support.hpp"

using namespace panolayout;
using testsupport::l_layout;
using testsupport::square_layout;

namespace {

ManhattanLayout mirrored_x(const ManhattanLayout& l) {
  ManhattanLayout out = l;
  out.corners.clear();
  for (auto it = l.corners.rbegin(); it != l.corners.rend(); ++it) out.corners.push_back({-it->x, it->z});
  return out;
}

// (x, z) -> (z, -x): azimuth advances by a quarter turn.
ManhattanLayout quarter_turned(const ManhattanLayout& l) {
  ManhattanLayout out = l;
  for (Point2& p : out.corners) p = {p.z, -p.x};
  return out;
}

}  // namespace

TEST_CASE("layout invariants") {
  CHECK_FALSE(layout_violation(square_layout()));
  CHECK_FALSE(layout_violation(l_layout()));
  ManhattanLayout cw = square_layout();
  std::reverse(cw.corners.begin(), cw.corners.end());
  CHECK(layout_violation(cw));
  CHECK(layout_violation(testsupport::rect_layout(0.5, 0.5, 2.0, 2.0)));  // camera outside
  CHECK(layout_violation(square_layout(2.0, 1.6)));
  ManhattanLayout slanted = square_layout();
  slanted.corners[1].z += 0.1;
  CHECK(layout_violation(slanted));
  ManhattanLayout odd = square_layout();
  odd.camera_to_ceiling_m = 1.5;
  CHECK(layout_violation(odd));
  CHECK_THROWS_AS(validate_layout(cw), InvalidLayoutError);
}

TEST_CASE("extrusion") {
  const Prism3D p = extrude(square_layout(2.0, 3.2));
  CHECK(p.bottom_m == doctest::Approx(-1.6));
  CHECK(p.top_m == doctest::Approx(1.6));
  const Prism3D q = extrude(square_layout(2.0, 2.4));
  CHECK(q.bottom_m == doctest::Approx(-0.8));
  CHECK(q.top_m == doctest::Approx(1.6));
  const Prism3D l = extrude(l_layout(3.2));
  CHECK(l.footprint.size() == 6);
  // 5 x 4 box minus a 1.5 x 1.5 corner.
  CHECK(l.volume() == doctest::Approx(17.75 * 3.2).epsilon(1e-12));
}

TEST_CASE("floor registration scale") {
  CHECK(floor_registration_scale(3.2) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(floor_registration_scale(2.4) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(floor_registration_scale(4.8) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK_THROWS_AS(floor_registration_scale(1.6), DomainError);
  CHECK_THROWS_AS(floor_registration_scale(1.0), DomainError);
}

TEST_CASE("ceiling view frame") {
  const CeilingViewFrame f = CeilingViewFrame::for_fov(512, 160.0);
  CHECK(f.meters_per_pixel == doctest::Approx(1.6 / focal_length(160.0, 512)));
  CHECK(f.fov_deg() == doctest::Approx(160.0));
  const Point2 c = f.edge_to_metric(256.0, 256.0);
  CHECK(c.x == 0.0);
  CHECK(c.z == 0.0);
  const Point2 back = f.metric_to_edge(f.pixel_center_to_metric(10, 300));
  CHECK(back.x == doctest::Approx(10.5));
  CHECK(back.z == doctest::Approx(300.5));
}

TEST_CASE("fc map boundary of a square room") {
  const EquirectMap fc = render_fc_map(square_layout(2.0, 3.2), 1024, 512);
  // Column next to longitude 0 looks at the midpoint of the z = +2 wall,
  // whose ceiling edge sits at py' = -atan(1.6 / 2) / (pi / 2).
  const double expect = -0.4295534250454455;
  const int col = 512;
  int last_ceiling = -1;
  for (int row = 0; row < 256; ++row) {
    if (fc.at(col, row) > 0.5f) last_ceiling = row;
  }
  REQUIRE(last_ceiling >= 0);
  const double y_in = pixel_to_equirect(col, last_ceiling, 1024, 512).y;
  const double y_out = pixel_to_equirect(col, last_ceiling + 1, 1024, 512).y;
  CHECK(y_in < expect);
  CHECK(y_out > expect);
  // Floor edge at depression atan(1.6 / 2) as well (H - 1.6 = 1.6).
  int first_floor = 512;
  for (int row = 511; row >= 256; --row) {
    if (fc.at(col, row) > 0.5f) first_floor = row;
  }
  CHECK(pixel_to_equirect(col, first_floor, 1024, 512).y > -expect);
  CHECK(pixel_to_equirect(col, first_floor - 1, 1024, 512).y < -expect);
}

TEST_CASE("fc map zenith and horizon rows") {
  for (const auto& l : {square_layout(), l_layout(2.6), square_layout(3.5, 4.0)}) {
    const EquirectMap fc = render_fc_map(l, 256, 128);
    for (int col = 0; col < 256; ++col) {
      CHECK(fc.at(col, 0) == 1.0f);
      CHECK(fc.at(col, 127) == 1.0f);
      CHECK(fc.at(col, 63) == 0.0f);
      CHECK(fc.at(col, 64) == 0.0f);
    }
  }
}

TEST_CASE("fc map symmetries") {
  const ManhattanLayout l = l_layout();
  const EquirectMap fc = render_fc_map(l, 512, 256);
  CHECK(render_fc_map(mirrored_x(l), 512, 256) == mirror_columns(fc));
  CHECK(render_fc_map(quarter_turned(l), 512, 256) == shift_columns(fc, 128));
}

TEST_CASE("fp map of a square room") {
  const CeilingViewFrame frame = CeilingViewFrame::for_fov(512, 160.0);
  const PerspectiveMap fp = render_fp_map(square_layout(2.0), frame);
  const double side = 4.0 / frame.meters_per_pixel;
  int row_count = 0;
  for (int x = 0; x < 512; ++x) row_count += fp.at(x, 256) > 0.5f;
  CHECK(std::abs(row_count - side) <= 1.0);
  // Centered: the mask is symmetric about the view center.
  CHECK(mirror_columns(fp) == fp);
  CHECK(mirror_rows(fp) == fp);
}

TEST_CASE("fp map area matches the footprint") {
  const CeilingViewFrame frame = CeilingViewFrame::for_fov(512, 160.0);
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const ManhattanLayout l = random_layout(random_spec(4 + 2 * static_cast<int>(seed % 5), seed));
    const PerspectiveMap fp = render_fp_map(l, frame);
    double count = 0;
    for (float v : fp.storage()) count += v;
    const double mpp = frame.meters_per_pixel;
    CHECK(std::abs(count * mpp * mpp - polygon_area(l.corners)) <= perimeter(l.corners) * mpp);
  }
}

TEST_CASE("fp map needs a large enough frame") {
  CHECK_THROWS_AS(render_fp_map(square_layout(2.0), CeilingViewFrame{64, 0.01}), FrameTooSmallError);
}

TEST_CASE("fc and fp maps agree under e2p") {
  const CeilingViewFrame frame = CeilingViewFrame::for_fov(512, 160.0);
  for (const auto& l : {square_layout(2.0), l_layout(2.8), random_layout(random_spec(10, 5))}) {
    EquirectMap fc = render_fc_map(l, 1024, 512);
    for (int row = 256; row < 512; ++row) {
      for (int col = 0; col < 1024; ++col) fc.at(col, row) = 0.0f;
    }
    const PerspectiveMap ceiling = e2p(fc, {160.0, 512, ViewDirection::Up});
    const PerspectiveMap fp = render_fp_map(l, frame);
    int agree = 0;
    for (std::size_t i = 0; i < fp.storage().size(); ++i) agree += (ceiling.storage()[i] > 0.5f) == (fp.storage()[i] > 0.5f);
    CHECK(agree >= 0.99 * fp.storage().size());
  }
}

TEST_CASE("texture is deterministic and separates surfaces") {
  const ManhattanLayout l = l_layout();
  const EquirectMap a = synth_texture(l, 256, 128, 42);
  CHECK(synth_texture(l, 256, 128, 42) == a);
  CHECK_FALSE(synth_texture(l, 256, 128, 43) == a);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const EquirectMap t = synth_texture(l, 256, 128, seed);
    const auto labels = surface_labels(l, 256, 128);
    double sum[3] = {0, 0, 0};
    int n[3] = {0, 0, 0};
    for (int row = 0; row < 128; ++row) {
      for (int col = 0; col < 256; ++col) {
        const int k = labels.at(col, row);
        sum[k] += (t.at(col, row, 0) + t.at(col, row, 1) + t.at(col, row, 2)) / 3.0;
        ++n[k];
      }
    }
    const double wall = sum[0] / n[0], ceiling = sum[1] / n[1];
    CHECK(ceiling - wall >= 20.0 / 255.0);
  }
}

TEST_CASE("texture edges follow the fc boundary") {
  const ManhattanLayout l = square_layout(2.5, 3.0);
  const EquirectMap t = synth_texture(l, 512, 256, 3);
  const EquirectMap fc = render_fc_map(l, 512, 256);
  double on = 0, off = 0;
  int n_on = 0, n_off = 0;
  for (int row = 1; row < 255; ++row) {
    for (int col = 0; col < 512; ++col) {
      const float v = t.at(col, row, 0);
      const double g = std::abs(t.at(col, row + 1, 0) - v) + std::abs(t.at((col + 1) % 512, row, 0) - v);
      const bool boundary = fc.at(col, row) != fc.at(col, row + 1);
      if (boundary) {
        on += g;
        ++n_on;
      } else {
        off += g;
        ++n_off;
      }
    }
  }
  REQUIRE(n_on > 0);
  CHECK(on / n_on > 3.0 * off / n_off);
}

TEST_CASE("layout json round trip") {
  testsupport::TempDir dir("layout");
  const ManhattanLayout l = l_layout(2.75);
  save_layout(dir.path() / "l.json", l);
  CHECK(load_layout(dir.path() / "l.json") == l);
  CHECK_THROWS_AS(layout_from_json(nlohmann::json{{"height_m", 3.0}}), FormatError);
  nlohmann::json bad = layout_to_json(l);
  bad["corners"] = {{0, 0}, {1, 0}, {1, 1}};
  // Parsing keeps structure only; validation reports the missing corner.
  CHECK(layout_from_json(bad).corners.size() == 3);
  CHECK_THROWS_AS(validate_layout(layout_from_json(bad)), InvalidLayoutError);
}

TEST_CASE("probability map and png files") {
  testsupport::TempDir dir("io");
  PlainMap m(3, 2, 2);
  for (std::size_t i = 0; i < m.storage().size(); ++i) m.storage()[i] = 0.1f * i;
  write_plpm(dir.path() / "m.plpm", m);
  CHECK(read_plpm(dir.path() / "m.plpm") == m);
  auto bytes = encode_plpm(m);
  bytes[0] = 'X';
  CHECK_THROWS_AS(decode_plpm(bytes), FormatError);
  bytes = encode_plpm(m);
  bytes.pop_back();
  CHECK_THROWS_AS(decode_plpm(bytes), FormatError);

  Image8 img{4, 2, 3, {}};
  for (int i = 0; i < 24; ++i) img.pixels.push_back(static_cast<std::uint8_t>(i * 10));
  const Image8 back = decode_png(encode_png(img));
  CHECK(back.width == 4);
  CHECK(back.height == 2);
  CHECK(back.pixels == img.pixels);
  CHECK_THROWS_AS(decode_png(std::vector<std::uint8_t>{1, 2, 3}), FormatError);
}

TEST_CASE("area resize preserves the mean") {
  EquirectMap src(8, 4, 1);
  for (std::size_t i = 0; i < src.storage().size(); ++i) src.storage()[i] = static_cast<float>(i);
  const EquirectMap half = resize_area(src, 4, 2);
  CHECK(half.at(0, 0) == doctest::Approx((0 + 1 + 8 + 9) / 4.0));
  double a = 0, b = 0;
  for (float v : src.storage()) a += v;
  for (float v : half.storage()) b += v;
  CHECK(a / 32 == doctest::Approx(b / 8));
}
