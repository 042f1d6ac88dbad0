#include <doctest.h>

#include <httplib.h>

#include <cmath>
#include <numbers>
#include <thread>

#include "criteria.hpp"
#include "panolayout/annotation.hpp"
#include "panolayout/annotation_http.hpp"
#include "panolayout/image_io.hpp"

using namespace panolayout;
using testsupport::square_layout;

namespace {

EditOp push(int wall, double delta) {
  EditOp op;
  op.kind = EditOp::Kind::PushPull;
  op.wall_index = wall;
  op.delta_m = delta;
  return op;
}

int status_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const ServiceError& e) {
    return e.status();
  }
  return 200;
}

MapInputs maps_for(const ManhattanLayout& layout) {
  const CeilingViewFrame frame = CeilingViewFrame::for_fov(512, kDefaultFov);
  return {encode_plpm(render_fc_map(layout, 1024, 512).retag<PlainTag>()),
          encode_plpm(render_fp_map(layout, frame).retag<PlainTag>()), layout.height_m};
}

// Runs an AnnotationServer on an ephemeral port for the test's lifetime.
class LiveServer {
 public:
  explicit LiveServer(SessionStore& store) : server_(store) {
    port_ = server_.bind_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.serve(); });
    server_.wait_until_ready();
  }
  ~LiveServer() {
    server_.stop();
    thread_.join();
  }
  httplib::Client client() const { return httplib::Client("127.0.0.1", port_); }

 private:
  AnnotationServer server_;
  int port_ = 0;
  std::thread thread_;
};

nlohmann::json parse(const httplib::Result& r) { return nlohmann::json::parse(r->body); }

}  // namespace

TEST_CASE("sessions start from a cuboid") {
  SessionStore store;
  const auto png = criteria::tiny_panorama_png();
  const std::string a = store.create(png);
  const std::string b = store.create(png);
  CHECK(a != b);
  CHECK(a.size() == 16);
  const SessionView v = store.get(a);
  CHECK(v.revision == 1);
  CHECK(v.layout == square_layout(2.0, 3.2));
  CHECK_FALSE(v.has_snap_targets);
  CHECK(v.pano_w == 16);
  CHECK(v.pano_h == 8);
  CHECK(store.panorama(a) == png);
  CHECK(store.ids().size() == 2);
  CHECK(status_of([&] { store.get("0123456789abcdef"); }) == 404);
  CHECK(status_of([&] { store.create(std::vector<std::uint8_t>{1, 2, 3}); }) == 400);
}

TEST_CASE("sessions from probability maps are fitted") {
  SessionStore store;
  const std::string id = store.create(criteria::tiny_panorama_png(), maps_for(testsupport::l_layout()));
  const SessionView v = store.get(id);
  CHECK(v.layout.corners.size() == 6);
  CHECK(v.has_snap_targets);
  CHECK(iou2d(v.layout, testsupport::l_layout()) > 0.97);
  MapInputs low = maps_for(square_layout());
  low.height_m = 1.5;
  CHECK(status_of([&] { store.create(criteria::tiny_panorama_png(), low); }) == 400);
  MapInputs bad = maps_for(square_layout());
  bad.fp_plpm.resize(10);
  CHECK(status_of([&] { store.create(criteria::tiny_panorama_png(), bad); }) == 400);
}

TEST_CASE("push and pull are exact inverses") {
  const ManhattanLayout l = quantize_layout(testsupport::l_layout());
  for (int w = 0; w < 6; ++w) {
    const ManhattanLayout out = apply_edit_op(l, push(w, 0.5));
    CHECK_FALSE(out == l);
    CHECK(apply_edit_op(out, push(w, -0.5)) == l);
  }
  // Pushing wall 0 outward moves it to z = -2.5.
  const ManhattanLayout sq = square_layout();
  const ManhattanLayout out = apply_edit_op(sq, push(0, 0.5));
  CHECK(out.corners[0].z == -2.5);
  CHECK(out.corners[1].z == -2.5);
  CHECK(polygon_area(out.corners) == 18.0);
}

TEST_CASE("edits that break the room are rejected") {
  const ManhattanLayout sq = square_layout();
  CHECK(status_of([&] { apply_edit_op(sq, push(0, -4.5)); }) == 422);
  CHECK(status_of([&] { apply_edit_op(sq, push(0, -2.5)); }) == 422);  // camera ends up outside
  CHECK(status_of([&] { apply_edit_op(sq, push(7, 0.1)); }) == 422);
  CHECK(status_of([&] { apply_edit_op(sq, push(0, std::nan(""))); }) == 422);
  EditOp split;
  split.kind = EditOp::Kind::Split;
  split.t = 1.0;
  split.depth_m = 0.5;
  CHECK(status_of([&] { apply_edit_op(sq, split); }) == 422);
  split.t = 0.5;
  split.depth_m = 0.0;
  CHECK(status_of([&] { apply_edit_op(sq, split); }) == 422);
  EditOp merge;
  merge.kind = EditOp::Kind::Merge;
  merge.wall_indices = {0, 1};
  CHECK(status_of([&] { apply_edit_op(sq, merge); }) == 422);
}

TEST_CASE("split then merge restores the room") {
  const ManhattanLayout sq = square_layout();
  for (bool head : {false, true}) {
    EditOp split;
    split.kind = EditOp::Kind::Split;
    split.wall_index = 0;
    split.t = 0.5;
    split.depth_m = 0.5;
    split.split_head = head;
    const ManhattanLayout s = apply_edit_op(sq, split);
    REQUIRE(s.corners.size() == 6);
    CHECK(polygon_area(s.corners) == doctest::Approx(16.0 + 2.0 * 0.5));
    EditOp merge;
    merge.kind = EditOp::Kind::Merge;
    // The wall left in place keeps index 0 for a tail split and 2 for a head split.
    merge.wall_indices = {0, 2};
    merge.anchor = head ? 2 : 0;
    const ManhattanLayout m = apply_edit_op(s, merge);
    CHECK(polygon_area(m.corners) == 16.0);
    CHECK(m.corners.size() == 4);
    CHECK(iou2d(m, sq) == 1.0);
    merge.anchor = 1;
    CHECK(status_of([&] { apply_edit_op(s, merge); }) == 422);
  }
}

TEST_CASE("snapping") {
  const ManhattanLayout sq = square_layout();
  const SnapTargets near{{2.05, -1.0}, {-2.1}};
  const ManhattanLayout s = snap_wall(sq, 1, near);
  CHECK(s.corners[1].x == 2.05);
  CHECK(s.corners[2].x == 2.05);
  CHECK(snap_wall(sq, 0, near).corners[0].z == -2.1);
  const SnapTargets far{{3.0}, {}};
  CHECK(snap_wall(sq, 1, far) == sq);
  CHECK(snap_wall(sq, 0, far) == sq);
}

TEST_CASE("store revisions, undo and redo") {
  SessionStore store;
  const std::string id = store.create(criteria::tiny_panorama_png());
  const ManhattanLayout start = store.get(id).layout;
  SessionView v = store.apply_edit(id, 1, push(1, 0.25));
  CHECK(v.revision == 2);
  CHECK(v.undo_depth == 1);
  CHECK(status_of([&] { store.apply_edit(id, 1, push(1, 0.25)); }) == 409);
  CHECK(status_of([&] { store.apply_edit(id, 2, push(1, -10)); }) == 422);
  CHECK(store.get(id).revision == 2);
  v = store.undo(id);
  CHECK(v.layout == start);
  CHECK(v.redo_depth == 1);
  CHECK(v.revision == 3);
  CHECK(status_of([&] { store.undo(id); }) == 409);
  CHECK(status_of([&] { store.redo(id, 1); }) == 409);
  v = store.redo(id, 3);
  CHECK(v.layout.corners[1].x == 2.25);
  CHECK(status_of([&] { store.redo(id); }) == 409);
  // A new edit clears the redo stack.
  store.undo(id);
  v = store.apply_edit(id, store.get(id).revision, push(0, 0.1));
  CHECK(v.redo_depth == 0);
  CHECK(status_of([&] { store.snap(id, v.revision, 0); }) == 404);
}

TEST_CASE("undo history is bounded") {
  SessionStore store;
  const std::string id = store.create(criteria::tiny_panorama_png());
  for (int i = 0; i < 105; ++i) store.apply_edit(id, store.get(id).revision, push(1, i % 2 ? -0.01 : 0.01));
  CHECK(store.get(id).undo_depth == kUndoLimit);
  for (std::size_t i = 0; i < kUndoLimit; ++i) store.undo(id);
  CHECK(status_of([&] { store.undo(id); }) == 409);
}

TEST_CASE("snap through the store") {
  SessionStore store;
  const std::string id =
      store.create_with_layout(criteria::tiny_panorama_png(), square_layout(), SnapTargets{{2.1}, {-1.95}});
  SessionView v = store.snap(id, 1, 1);
  CHECK(v.revision == 2);
  CHECK(v.layout.corners[1].x == 2.1);
  v = store.snap(id, 2, 3);  // x = -2 has no target nearby
  CHECK(v.revision == 2);
  CHECK(v.undo_depth == 1);
  CHECK(status_of([&] { store.snap(id, 2, 9); }) == 422);
}

TEST_CASE("overlay loops") {
  const ManhattanLayout sq = square_layout();
  const auto loops = overlay_loops(sq, 1024, 512, 16);
  REQUIRE(loops.size() == 4);
  for (const auto& loop : loops) CHECK(loop.size() == 32);
  // First ceiling point is corner (-2, -2).
  const double lon = std::atan2(-2.0, -2.0);
  const double lat = -std::atan(1.6 / std::sqrt(8.0));
  CHECK(loops[0][0][0] == doctest::Approx((lon / std::numbers::pi + 1) / 2 * 1024 - 0.5));
  CHECK(loops[0][0][1] == doctest::Approx((lat / (std::numbers::pi / 2) + 1) / 2 * 512 - 0.5));
  const double lat_f = std::atan(1.6 / std::sqrt(8.0));
  CHECK(loops[0].back()[1] == doctest::Approx((lat_f / (std::numbers::pi / 2) + 1) / 2 * 512 - 0.5));
  CHECK_THROWS_AS(overlay_loops(sq, 100, 100), DimensionError);
}

TEST_CASE("overlay follows the rendered boundary") {
  const ManhattanLayout l = testsupport::l_layout();
  const EquirectMap fc = render_fc_map(l, 1024, 512);
  double worst = 0.0;
  for (const auto& loop : overlay_loops(l, 1024, 512, 64)) {
    for (std::size_t k = 0; k < 64; ++k) {
      const double col = loop[k][0];
      const int c = ((static_cast<int>(std::lround(col)) % 1024) + 1024) % 1024;
      if (std::abs(col - std::round(col)) > 0.1) continue;
      int rows = 0;
      while (rows < 256 && fc.at(c, rows) > 0.5f) ++rows;
      worst = std::max(worst, std::abs(loop[k][1] - (rows - 0.5)));
    }
  }
  CHECK(worst <= 1.0);
}

TEST_CASE("sessions persist across restarts") {
  testsupport::TempDir dir("sessions");
  std::string id;
  {
    SessionStore store(dir.path());
    id = store.create_with_layout(criteria::tiny_panorama_png(), square_layout(), SnapTargets{{2.1}, {}});
    store.apply_edit(id, 1, push(0, 0.3));
    store.apply_edit(id, 2, push(2, 0.2));
    store.undo(id);
  }
  SessionStore again(dir.path());
  REQUIRE(again.ids() == std::vector<std::string>{id});
  const SessionView v = again.get(id);
  CHECK(v.revision == 4);
  CHECK(v.undo_depth == 1);
  CHECK(v.redo_depth == 1);
  CHECK(v.has_snap_targets);
  CHECK(v.layout == apply_edit_op(square_layout(), push(0, 0.3)));
  CHECK(again.panorama(id) == criteria::tiny_panorama_png());
  CHECK(again.redo(id).layout.corners[2].z == quantize(2.2));
}

TEST_CASE("edit ops round trip through json") {
  EditOp split;
  split.kind = EditOp::Kind::Split;
  split.wall_index = 3;
  split.t = 0.25;
  split.depth_m = -0.5;
  split.split_head = true;
  const EditOp back = EditOp::from_json(split.to_json());
  CHECK(back.kind == EditOp::Kind::Split);
  CHECK(back.t == 0.25);
  CHECK(back.split_head);
  EditOp merge;
  merge.kind = EditOp::Kind::Merge;
  merge.wall_indices = {1, 3};
  merge.anchor = 3;
  CHECK(EditOp::from_json(merge.to_json()).anchor == 3);
  CHECK(status_of([] { EditOp::from_json({{"kind", "rotate"}}); }) == 400);
  CHECK(status_of([] { EditOp::from_json({{"kind", "push_pull"}}); }) == 400);
  CHECK(status_of([] { EditOp::from_json({{"kind", "split"}, {"wall_index", 0}, {"t", 0.5}, {"depth_m", 1},
                                          {"segment", "middle"}}); }) == 400);
}

TEST_CASE("rest api") {
  SessionStore store;
  LiveServer server(store);
  httplib::Client cli = server.client();
  const auto png = criteria::tiny_panorama_png();
  const std::string png_str(png.begin(), png.end());

  auto created = cli.Post("/sessions", httplib::MultipartFormDataItems{{"panorama", png_str, "p.png", "image/png"}});
  REQUIRE(created);
  CHECK(created->status == 201);
  const std::string id = parse(created)["id"];

  auto list = cli.Get("/sessions");
  CHECK(parse(list)["ids"] == nlohmann::json::array({id}));

  auto pano = cli.Get("/sessions/" + id + "/panorama");
  CHECK(pano->status == 200);
  CHECK(pano->body == png_str);
  CHECK(pano->get_header_value("Content-Type") == "image/png");

  auto layout = cli.Get("/sessions/" + id + "/layout");
  CHECK(layout->status == 200);
  CHECK(parse(layout)["revision"] == 1);
  CHECK(layout_from_json(parse(layout)["layout"]) == square_layout());

  const nlohmann::json edit{{"revision", 1}, {"op", push(1, 0.5).to_json()}};
  auto edited = cli.Post("/sessions/" + id + "/edits", edit.dump(), "application/json");
  CHECK(edited->status == 200);
  CHECK(parse(edited)["revision"] == 2);
  CHECK(parse(edited)["undo_depth"] == 1);

  auto stale = cli.Post("/sessions/" + id + "/edits", edit.dump(), "application/json");
  CHECK(stale->status == 409);
  CHECK(parse(stale)["code"] == "conflict");

  const nlohmann::json bad_edit{{"revision", 2}, {"op", push(0, -10).to_json()}};
  auto rejected = cli.Post("/sessions/" + id + "/edits", bad_edit.dump(), "application/json");
  CHECK(rejected->status == 422);
  CHECK(parse(rejected)["code"] == "invalid_edit");

  CHECK(cli.Post("/sessions/" + id + "/edits", "{not json", "application/json")->status == 400);
  CHECK(cli.Post("/sessions/" + id + "/edits", R"({"op": {"kind": "push_pull"}})", "application/json")->status ==
        400);
  CHECK(cli.Get("/sessions/ffffffffffffffff/layout")->status == 404);
  CHECK(cli.Post("/sessions", "x", "text/plain")->status == 400);

  auto snap = cli.Post("/sessions/" + id + "/snap", R"({"revision": 2, "wall_index": 0})", "application/json");
  CHECK(snap->status == 404);

  auto undo = cli.Post("/sessions/" + id + "/undo", "", "application/json");
  CHECK(undo->status == 200);
  CHECK(parse(undo)["revision"] == 3);
  CHECK(cli.Post("/sessions/" + id + "/undo", "", "application/json")->status == 409);
  auto redo = cli.Post("/sessions/" + id + "/redo", R"({"revision": 3})", "application/json");
  CHECK(redo->status == 200);
  CHECK(parse(redo)["redo_depth"] == 0);

  auto overlay = cli.Get("/sessions/" + id + "/overlay");
  CHECK(overlay->status == 200);
  CHECK(parse(overlay)["loops"].size() == 4);
  CHECK(parse(overlay)["width"] == 16);
  CHECK(parse(overlay)["revision"] == 4);

  auto exported = cli.Get("/sessions/" + id + "/export");
  CHECK(exported->status == 200);
  CHECK(layout_from_json(nlohmann::json::parse(exported->body)) == store.get(id).layout);
}

TEST_CASE("rest api creates sessions from maps") {
  SessionStore store;
  LiveServer server(store);
  httplib::Client cli = server.client();
  const auto png = criteria::tiny_panorama_png();
  const MapInputs maps = maps_for(testsupport::l_layout());
  httplib::MultipartFormDataItems items{
      {"panorama", std::string(png.begin(), png.end()), "p.png", "image/png"},
      {"fc", std::string(maps.fc_plpm.begin(), maps.fc_plpm.end()), "fc.plpm", "application/octet-stream"},
      {"fp", std::string(maps.fp_plpm.begin(), maps.fp_plpm.end()), "fp.plpm", "application/octet-stream"},
      {"height", "3.2", "", ""}};
  auto created = cli.Post("/sessions", items);
  REQUIRE(created);
  CHECK(created->status == 201);
  const std::string id = parse(created)["id"];
  auto layout = cli.Get("/sessions/" + id + "/layout");
  CHECK(parse(layout)["has_snap_targets"] == true);
  CHECK(parse(layout)["layout"]["corners"].size() == 6);

  items.pop_back();
  CHECK(cli.Post("/sessions", items)->status == 400);
}
