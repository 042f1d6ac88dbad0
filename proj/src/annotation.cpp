#include "panolayout/annotation.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>
#include <random>

#include "panolayout/errors.hpp"
#include "panolayout/image_io.hpp"
#include "panolayout/projection.hpp"

namespace panolayout {

ServiceError bad_request(const std::string& message) { return {400, "bad_request", message}; }
ServiceError not_found(const std::string& message) { return {404, "not_found", message}; }
ServiceError conflict(const std::string& message) { return {409, "conflict", message}; }
ServiceError invalid_edit(const std::string& message) { return {422, "invalid_edit", message}; }

double quantize(double v) { return std::round(v / kCoordQuantum) * kCoordQuantum; }

ManhattanLayout quantize_layout(ManhattanLayout layout) {
  for (Point2& p : layout.corners) p = {quantize(p.x), quantize(p.z)};
  return layout;
}

namespace {

std::size_t wall_count(const ManhattanLayout& l) { return l.corners.size(); }

void check_wall(const ManhattanLayout& l, int i) {
  if (i < 0 || static_cast<std::size_t>(i) >= wall_count(l)) {
    throw invalid_edit("wall index " + std::to_string(i) + " out of range");
  }
}

bool is_horizontal(const Polygon& p, std::size_t i) { return p[i].z == p[(i + 1) % p.size()].z; }

double wall_coord(const Polygon& p, std::size_t i) { return is_horizontal(p, i) ? p[i].z : p[i].x; }

void set_wall_coord(Polygon& p, std::size_t i, double v) {
  const std::size_t j = (i + 1) % p.size();
  if (is_horizontal(p, i)) {
    p[i].z = v;
    p[j].z = v;
  } else {
    p[i].x = v;
    p[j].x = v;
  }
}

double wall_length(const Polygon& p, std::size_t i) {
  const Point2& a = p[i];
  const Point2& b = p[(i + 1) % p.size()];
  return std::abs(b.x - a.x) + std::abs(b.z - a.z);
}

// Sign of the outward normal along the wall's constant axis; the outward
// normal of edge (dx, dz) is (dz, -dx).
double outward_sign(const Polygon& p, std::size_t i) {
  const Point2& a = p[i];
  const Point2& b = p[(i + 1) % p.size()];
  if (is_horizontal(p, i)) return b.x > a.x ? -1.0 : 1.0;
  return b.z > a.z ? 1.0 : -1.0;
}

// Drops repeated corners and corners between collinear neighbours.
Polygon cleanup(Polygon p) {
  bool changed = true;
  while (changed && p.size() >= 3) {
    changed = false;
    for (std::size_t k = 0; k < p.size(); ++k) {
      const Point2& prev = p[(k + p.size() - 1) % p.size()];
      const Point2& cur = p[k];
      const Point2& next = p[(k + 1) % p.size()];
      if (cur == next || (prev.x == cur.x && cur.x == next.x) || (prev.z == cur.z && cur.z == next.z)) {
        p.erase(p.begin() + static_cast<std::ptrdiff_t>(k));
        changed = true;
        break;
      }
    }
  }
  return p;
}

ManhattanLayout checked(ManhattanLayout l) {
  for (const Point2& p : l.corners) {
    if (!std::isfinite(p.x) || !std::isfinite(p.z)) throw invalid_edit("edit produced non-finite coordinates");
  }
  if (l.corners.size() < 4) throw invalid_edit("edit leaves fewer than 4 corners");
  if (auto v = layout_violation(l)) throw invalid_edit("edit rejected: " + *v);
  return l;
}

ManhattanLayout push_pull(const ManhattanLayout& l, int i, double delta) {
  if (!std::isfinite(delta)) throw invalid_edit("delta_m must be finite");
  ManhattanLayout out = l;
  const auto w = static_cast<std::size_t>(i);
  set_wall_coord(out.corners, w, quantize(wall_coord(l.corners, w) + outward_sign(l.corners, w) * quantize(delta)));
  return checked(std::move(out));
}

ManhattanLayout split(const ManhattanLayout& l, const EditOp& op) {
  if (!(op.t > 0.0 && op.t < 1.0)) throw invalid_edit("split t must lie in (0, 1)");
  if (!std::isfinite(op.depth_m) || quantize(op.depth_m) == 0.0) throw invalid_edit("split depth_m must be non-zero");
  const Polygon& c = l.corners;
  const std::size_t n = c.size();
  const auto i = static_cast<std::size_t>(op.wall_index);
  const std::size_t j = (i + 1) % n;
  const Point2 a = c[i];
  const Point2 b = c[j];
  const Point2 p{quantize(a.x + op.t * (b.x - a.x)), quantize(a.z + op.t * (b.z - a.z))};
  if (p == a || p == b) throw invalid_edit("split point coincides with a wall end");
  const double off = outward_sign(c, i) * quantize(op.depth_m);
  auto moved = [&](Point2 q) {
    if (is_horizontal(c, i)) q.z = quantize(q.z + off);
    else q.x = quantize(q.x + off);
    return q;
  };
  Polygon out;
  out.reserve(n + 2);
  for (std::size_t k = 0; k < n; ++k) {
    if (op.split_head) {
      if (k == i) {
        out.push_back(moved(a));
        out.push_back(moved(p));
        out.push_back(p);
      } else {
        out.push_back(c[k]);
      }
    } else if (k == i) {
      out.push_back(a);
      out.push_back(p);
      out.push_back(moved(p));
    } else if (k == j) {
      out.push_back(moved(b));
    } else {
      out.push_back(c[k]);
    }
  }
  ManhattanLayout result = l;
  result.corners = std::move(out);
  return checked(std::move(result));
}

ManhattanLayout merge(const ManhattanLayout& l, const EditOp& op) {
  const Polygon& c = l.corners;
  const std::size_t n = c.size();
  const auto& idx = op.wall_indices;
  if (idx.size() < 2) throw invalid_edit("merge needs at least two walls");
  if (2 * idx.size() > n) throw invalid_edit("merge selects too many walls");
  for (int i : idx) check_wall(l, i);
  for (std::size_t k = 1; k < idx.size(); ++k) {
    if (static_cast<std::size_t>(idx[k]) != (static_cast<std::size_t>(idx[k - 1]) + 2) % n) {
      throw invalid_edit("merge needs consecutive parallel walls (i, i+2, ...)");
    }
  }
  double coord = 0.0;
  if (op.anchor) {
    if (std::find(idx.begin(), idx.end(), *op.anchor) == idx.end()) {
      throw invalid_edit("merge anchor must be one of the merged walls");
    }
    coord = wall_coord(c, static_cast<std::size_t>(*op.anchor));
  } else {
    double total = 0.0, weighted = 0.0;
    for (int i : idx) {
      const auto w = static_cast<std::size_t>(i);
      total += wall_length(c, w);
      weighted += wall_length(c, w) * wall_coord(c, w);
    }
    coord = quantize(weighted / total);
  }
  Polygon out = c;
  for (int i : idx) set_wall_coord(out, static_cast<std::size_t>(i), coord);
  ManhattanLayout result = l;
  result.corners = cleanup(std::move(out));
  return checked(std::move(result));
}

}  // namespace

EditOp EditOp::from_json(const nlohmann::json& j) {
  try {
    EditOp op;
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "push_pull") {
      op.kind = Kind::PushPull;
      op.wall_index = j.at("wall_index").get<int>();
      op.delta_m = j.at("delta_m").get<double>();
    } else if (kind == "split") {
      op.kind = Kind::Split;
      op.wall_index = j.at("wall_index").get<int>();
      op.t = j.at("t").get<double>();
      op.depth_m = j.at("depth_m").get<double>();
      const std::string seg = j.value("segment", std::string("tail"));
      if (seg != "tail" && seg != "head") throw bad_request("split segment must be 'head' or 'tail'");
      op.split_head = seg == "head";
    } else if (kind == "merge") {
      op.kind = Kind::Merge;
      op.wall_indices = j.at("wall_indices").get<std::vector<int>>();
      if (j.contains("anchor") && !j.at("anchor").is_null()) op.anchor = j.at("anchor").get<int>();
    } else {
      throw bad_request("unknown edit kind '" + kind + "'");
    }
    return op;
  } catch (const nlohmann::json::exception& e) {
    throw bad_request(std::string("malformed edit: ") + e.what());
  }
}

nlohmann::json EditOp::to_json() const {
  switch (kind) {
    case Kind::PushPull: return {{"kind", "push_pull"}, {"wall_index", wall_index}, {"delta_m", delta_m}};
    case Kind::Split:
      return {{"kind", "split"}, {"wall_index", wall_index}, {"t", t}, {"depth_m", depth_m},
              {"segment", split_head ? "head" : "tail"}};
    case Kind::Merge: {
      nlohmann::json j{{"kind", "merge"}, {"wall_indices", wall_indices}};
      if (anchor) j["anchor"] = *anchor;
      return j;
    }
  }
  return {};
}

ManhattanLayout apply_edit_op(const ManhattanLayout& layout, const EditOp& op) {
  switch (op.kind) {
    case EditOp::Kind::PushPull:
      check_wall(layout, op.wall_index);
      return push_pull(layout, op.wall_index, op.delta_m);
    case EditOp::Kind::Split:
      check_wall(layout, op.wall_index);
      return split(layout, op);
    case EditOp::Kind::Merge: return merge(layout, op);
  }
  throw invalid_edit("unknown edit");
}

ManhattanLayout snap_wall(const ManhattanLayout& layout, int wall_index, const SnapTargets& targets,
                          double threshold) {
  check_wall(layout, wall_index);
  const auto w = static_cast<std::size_t>(wall_index);
  const auto& lines = is_horizontal(layout.corners, w) ? targets.zs : targets.xs;
  const double cur = wall_coord(layout.corners, w);
  std::optional<double> best;
  for (double v : lines) {
    if (std::abs(v - cur) <= threshold && (!best || std::abs(v - cur) < std::abs(*best - cur))) best = v;
  }
  if (!best || *best == cur) return layout;
  ManhattanLayout out = layout;
  set_wall_coord(out.corners, w, *best);
  return checked(std::move(out));
}

std::vector<OverlayLoop> overlay_loops(const ManhattanLayout& layout, int pano_w, int pano_h, int samples_per_wall) {
  validate_layout(layout);
  if (pano_w != 2 * pano_h || pano_h <= 0) throw DimensionError("overlay needs a 2:1 panorama size");
  const int s = std::max(samples_per_wall, 2);
  const std::size_t n = layout.corners.size();
  const double floor_depth = layout.height_m - kCameraToCeiling;
  std::vector<OverlayLoop> loops;
  for (std::size_t i = 0; i < n; ++i) {
    const Point2 a = layout.corners[i];
    const Point2 b = layout.corners[(i + 1) % n];
    OverlayLoop ceiling, floor;
    double prev_x = 0.0;
    for (int k = 0; k < s; ++k) {
      const double u = static_cast<double>(k) / (s - 1);
      const Point2 p{a.x + u * (b.x - a.x), a.z + u * (b.z - a.z)};
      const double d = std::hypot(p.x, p.z);
      const double lon = std::atan2(p.x, p.z);
      // Zenith is latitude -pi/2, so the ceiling boundary has negative latitude.
      const double lat_c = -std::atan2(kCameraToCeiling, d);
      const double lat_f = std::atan2(floor_depth, d);
      PixelPosition pc = equirect_to_pixel({lon / std::numbers::pi, lat_c / (0.5 * std::numbers::pi)}, pano_w, pano_h);
      PixelPosition pf = equirect_to_pixel({lon / std::numbers::pi, lat_f / (0.5 * std::numbers::pi)}, pano_w, pano_h);
      double x = pc.col;
      if (k > 0) {
        while (x - prev_x > 0.5 * pano_w) x -= pano_w;
        while (prev_x - x > 0.5 * pano_w) x += pano_w;
      }
      prev_x = x;
      ceiling.push_back({x, pc.row});
      floor.push_back({x, pf.row});
    }
    OverlayLoop loop = std::move(ceiling);
    loop.insert(loop.end(), floor.rbegin(), floor.rend());
    loops.push_back(std::move(loop));
  }
  return loops;
}

struct SessionStore::Session {
  std::string id;
  std::vector<std::uint8_t> png;
  int pano_w = 0;
  int pano_h = 0;
  ManhattanLayout layout;
  std::deque<ManhattanLayout> undo;
  std::vector<ManhattanLayout> redo;
  std::optional<SnapTargets> targets;
  long revision = 1;
  mutable std::shared_mutex mu;

  SessionView view() const {
    return {id, layout, revision, targets.has_value(), pano_w, pano_h, undo.size(), redo.size()};
  }
};

namespace {

nlohmann::json session_json(const std::string& id, long revision, int w, int h, const ManhattanLayout& layout,
                            const std::deque<ManhattanLayout>& undo, const std::vector<ManhattanLayout>& redo,
                            const std::optional<SnapTargets>& targets) {
  nlohmann::json j{{"id", id}, {"revision", revision}, {"pano_w", w}, {"pano_h", h},
                   {"layout", layout_to_json(layout)}};
  j["undo"] = nlohmann::json::array();
  for (const auto& l : undo) j["undo"].push_back(layout_to_json(l));
  j["redo"] = nlohmann::json::array();
  for (const auto& l : redo) j["redo"].push_back(layout_to_json(l));
  j["snap"] = targets ? nlohmann::json{{"xs", targets->xs}, {"zs", targets->zs}} : nlohmann::json();
  return j;
}

std::string new_session_id() {
  static std::mutex mu;
  static std::mt19937_64 rng{std::random_device{}()};
  std::lock_guard lock(mu);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(rng()));
  return buf;
}

bool valid_id(const std::string& id) {
  return !id.empty() && id.size() <= 64 &&
         std::all_of(id.begin(), id.end(), [](char ch) { return std::isxdigit(static_cast<unsigned char>(ch)); });
}

Image8 decode_panorama(std::span<const std::uint8_t> png) {
  Image8 img;
  try {
    img = decode_png(png);
  } catch (const Error& e) {
    throw bad_request(std::string("panorama is not a readable PNG: ") + e.what());
  }
  if (img.width != 2 * img.height || img.height == 0) throw bad_request("panorama must have a 2:1 aspect ratio");
  return img;
}

}  // namespace

SessionStore::SessionStore(std::filesystem::path dir, std::size_t undo_limit)
    : dir_(std::move(dir)), undo_limit_(undo_limit) {
  if (!dir_.empty()) {
    std::filesystem::create_directories(dir_);
    load_all();
  }
}

SessionStore::~SessionStore() = default;

std::string SessionStore::insert(std::shared_ptr<Session> s) {
  std::lock_guard lock(mu_);
  do {
    s->id = new_session_id();
  } while (sessions_.contains(s->id));
  persist(*s);
  sessions_[s->id] = s;
  return s->id;
}

std::string SessionStore::create(std::span<const std::uint8_t> panorama_png, const std::optional<MapInputs>& maps) {
  if (!maps) {
    ManhattanLayout cuboid;
    cuboid.corners = {{-2.0, -2.0}, {2.0, -2.0}, {2.0, 2.0}, {-2.0, 2.0}};
    cuboid.height_m = 3.2;
    return create_with_layout(panorama_png, cuboid);
  }
  PlainMap fc, fp;
  try {
    fc = decode_plpm(maps->fc_plpm);
    fp = decode_plpm(maps->fp_plpm);
  } catch (const Error& e) {
    throw bad_request(std::string("map file rejected: ") + e.what());
  }
  if (fc.width() != 2 * fc.height() || fp.width() != fp.height()) {
    throw bad_request("fc map must be 2:1 and fp map square");
  }
  if (!(maps->height_m > kCameraToCeiling) || !std::isfinite(maps->height_m)) {
    throw bad_request("height must exceed 1.6 m");
  }
  const CeilingViewFrame frame = CeilingViewFrame::for_fov(fp.width(), kDefaultFov);
  FitTrace trace;
  try {
    const SplitMaps split = split_fc(fc.retag<EquirectTag>(), maps->height_m, frame);
    trace = fit_traced(fuse(fp.retag<PerspectiveTag>(), split.ceiling, split.floor), maps->height_m, frame);
  } catch (const Error& e) {
    throw invalid_edit(std::string("fitting the supplied maps failed: ") + e.what());
  }
  const MetricLines lines = lines_to_metric(trace.lines, frame);
  SnapTargets targets;
  for (double x : lines.xs) targets.xs.push_back(quantize(x));
  for (double z : lines.zs) targets.zs.push_back(quantize(z));
  return create_with_layout(panorama_png, trace.layout, targets);
}

std::string SessionStore::create_with_layout(std::span<const std::uint8_t> panorama_png, const ManhattanLayout& layout,
                                             std::optional<SnapTargets> targets) {
  const Image8 img = decode_panorama(panorama_png);
  auto s = std::make_shared<Session>();
  s->png.assign(panorama_png.begin(), panorama_png.end());
  s->pano_w = img.width;
  s->pano_h = img.height;
  s->layout = quantize_layout(layout);
  if (auto v = layout_violation(s->layout)) throw invalid_edit("initial layout invalid: " + *v);
  s->targets = std::move(targets);
  return insert(std::move(s));
}

std::shared_ptr<SessionStore::Session> SessionStore::find(const std::string& id) const {
  std::lock_guard lock(mu_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw not_found("no session '" + id + "'");
  return it->second;
}

SessionView SessionStore::get(const std::string& id) const {
  const auto s = find(id);
  std::shared_lock lock(s->mu);
  return s->view();
}

std::vector<std::uint8_t> SessionStore::panorama(const std::string& id) const {
  const auto s = find(id);
  std::shared_lock lock(s->mu);
  return s->png;
}

std::vector<OverlayLoop> SessionStore::overlay(const std::string& id) const {
  const auto s = find(id);
  std::shared_lock lock(s->mu);
  return overlay_loops(s->layout, s->pano_w, s->pano_h);
}

std::vector<std::string> SessionStore::ids() const {
  std::lock_guard lock(mu_);
  std::vector<std::string> out;
  for (const auto& [id, s] : sessions_) out.push_back(id);
  return out;
}

SessionView SessionStore::apply_edit(const std::string& id, long revision, const EditOp& op) {
  const auto s = find(id);
  std::unique_lock lock(s->mu);
  if (revision != s->revision) {
    throw conflict("stale revision " + std::to_string(revision) + ", current is " + std::to_string(s->revision));
  }
  ManhattanLayout next = apply_edit_op(s->layout, op);
  s->undo.push_back(std::move(s->layout));
  if (s->undo.size() > undo_limit_) s->undo.pop_front();
  s->redo.clear();
  s->layout = std::move(next);
  ++s->revision;
  persist(*s);
  return s->view();
}

SessionView SessionStore::snap(const std::string& id, long revision, int wall_index) {
  const auto s = find(id);
  std::unique_lock lock(s->mu);
  if (revision != s->revision) {
    throw conflict("stale revision " + std::to_string(revision) + ", current is " + std::to_string(s->revision));
  }
  if (!s->targets) throw not_found("session has no snap targets");
  ManhattanLayout next = snap_wall(s->layout, wall_index, *s->targets);
  if (next == s->layout) return s->view();
  s->undo.push_back(std::move(s->layout));
  if (s->undo.size() > undo_limit_) s->undo.pop_front();
  s->redo.clear();
  s->layout = std::move(next);
  ++s->revision;
  persist(*s);
  return s->view();
}

SessionView SessionStore::undo(const std::string& id, std::optional<long> revision) {
  const auto s = find(id);
  std::unique_lock lock(s->mu);
  if (revision && *revision != s->revision) throw conflict("stale revision");
  if (s->undo.empty()) throw conflict("nothing to undo");
  s->redo.push_back(std::move(s->layout));
  s->layout = std::move(s->undo.back());
  s->undo.pop_back();
  ++s->revision;
  persist(*s);
  return s->view();
}

SessionView SessionStore::redo(const std::string& id, std::optional<long> revision) {
  const auto s = find(id);
  std::unique_lock lock(s->mu);
  if (revision && *revision != s->revision) throw conflict("stale revision");
  if (s->redo.empty()) throw conflict("nothing to redo");
  s->undo.push_back(std::move(s->layout));
  if (s->undo.size() > undo_limit_) s->undo.pop_front();
  s->layout = std::move(s->redo.back());
  s->redo.pop_back();
  ++s->revision;
  persist(*s);
  return s->view();
}

void SessionStore::persist(const Session& s) const {
  if (dir_.empty()) return;
  const auto png_path = dir_ / (s.id + ".png");
  if (!std::filesystem::exists(png_path)) write_file_atomic(png_path, s.png);
  const auto j = session_json(s.id, s.revision, s.pano_w, s.pano_h, s.layout, s.undo, s.redo, s.targets);
  write_file_atomic(dir_ / (s.id + ".json"), j.dump() + "\n");
}

void SessionStore::load_all() {
  for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
    if (entry.path().extension() != ".json") continue;
    const std::string id = entry.path().stem().string();
    if (!valid_id(id)) continue;
    try {
      const auto bytes = read_file_bytes(entry.path());
      const auto j = nlohmann::json::parse(bytes.begin(), bytes.end());
      auto s = std::make_shared<Session>();
      s->id = id;
      s->png = read_file_bytes(dir_ / (id + ".png"));
      s->pano_w = j.at("pano_w").get<int>();
      s->pano_h = j.at("pano_h").get<int>();
      s->revision = j.at("revision").get<long>();
      s->layout = layout_from_json(j.at("layout"));
      for (const auto& l : j.at("undo")) s->undo.push_back(layout_from_json(l));
      for (const auto& l : j.at("redo")) s->redo.push_back(layout_from_json(l));
      if (!j.at("snap").is_null()) {
        s->targets = SnapTargets{j.at("snap").at("xs").get<std::vector<double>>(),
                                 j.at("snap").at("zs").get<std::vector<double>>()};
      }
      sessions_[id] = std::move(s);
    } catch (const std::exception&) {
      // Unreadable session files are skipped rather than blocking startup.
    }
  }
}

nlohmann::json session_view_json(const SessionView& v) {
  return {{"id", v.id},
          {"revision", v.revision},
          {"layout", layout_to_json(v.layout)},
          {"has_snap_targets", v.has_snap_targets},
          {"undo_depth", v.undo_depth},
          {"redo_depth", v.redo_depth}};
}

}  // namespace panolayout
