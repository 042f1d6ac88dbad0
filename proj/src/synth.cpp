#include "panolayout/synth.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <random>
#include <thread>

#include <json.hpp>

#include "panolayout/errors.hpp"
#include "panolayout/image_io.hpp"

namespace panolayout {

namespace {

constexpr int kLayoutAttempts = 200;
constexpr int kNotchAttempts = 60;
constexpr double kGrid = 0.05;  // carved dimensions snap to 5 cm

double snap(double v, double step) { return std::round(v / step) * step; }

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

bool spacing_ok(const Polygon& poly) {
  auto check = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end(), [](double a, double b) { return std::abs(a - b) < 1e-9; }), v.end());
    for (std::size_t i = 1; i < v.size(); ++i) {
      if (v[i] - v[i - 1] < kMinWallSpacing - 1e-9) return false;
    }
    return true;
  };
  std::vector<double> xs, zs;
  for (const Point2& p : poly) {
    xs.push_back(p.x);
    zs.push_back(p.z);
  }
  return check(std::move(xs)) && check(std::move(zs));
}

bool is_convex(const Polygon& poly, std::size_t i) {
  const std::size_t n = poly.size();
  const Point2& a = poly[(i + n - 1) % n];
  const Point2& b = poly[i];
  const Point2& c = poly[(i + 1) % n];
  return (b.x - a.x) * (c.z - b.z) - (b.z - a.z) * (c.x - b.x) > 0.0;
}

// Replaces convex vertex i by the three corners of a rectangular notch of
// depth a along the incoming edge and b along the outgoing edge.
std::optional<Polygon> carve(const Polygon& poly, std::size_t i, std::mt19937_64& rng) {
  const std::size_t n = poly.size();
  const Point2 prev = poly[(i + n - 1) % n];
  const Point2 v = poly[i];
  const Point2 next = poly[(i + 1) % n];
  const double len_prev = std::abs(prev.x - v.x) + std::abs(prev.z - v.z);
  const double len_next = std::abs(next.x - v.x) + std::abs(next.z - v.z);
  if (len_prev < 2.0 * kMinWallSpacing || len_next < 2.0 * kMinWallSpacing) return std::nullopt;
  std::uniform_real_distribution<double> da(kMinWallSpacing, len_prev - kMinWallSpacing);
  std::uniform_real_distribution<double> db(kMinWallSpacing, len_next - kMinWallSpacing);
  const double a = snap(da(rng), kGrid);
  const double b = snap(db(rng), kGrid);
  const Point2 up{(prev.x - v.x) / len_prev, (prev.z - v.z) / len_prev};
  const Point2 un{(next.x - v.x) / len_next, (next.z - v.z) / len_next};
  const Point2 p1{v.x + a * up.x, v.z + a * up.z};
  const Point2 p2{v.x + b * un.x, v.z + b * un.z};
  const Point2 reflex{p1.x + b * un.x, p1.z + b * un.z};
  Polygon out;
  out.reserve(n + 2);
  for (std::size_t k = 0; k < n; ++k) {
    if (k == i) {
      out.push_back(p1);
      out.push_back(reflex);
      out.push_back(p2);
    } else {
      out.push_back(poly[k]);
    }
  }
  if (rectilinear_violation(out)) return std::nullopt;
  if (std::abs(signed_area(out) - (signed_area(poly) - a * b)) > 1e-6) return std::nullopt;
  if (!spacing_ok(out)) return std::nullopt;
  return out;
}

std::optional<Point2> place_camera(const Polygon& poly) {
  const auto kernel = visibility_kernel(poly);
  if (!kernel) return std::nullopt;
  const Point2 c = centroid(poly);
  const bool in_kernel = c.x > kernel->min_x && c.x < kernel->max_x && c.z > kernel->min_z && c.z < kernel->max_z;
  Point2 cam = in_kernel ? c : Point2{0.5 * (kernel->min_x + kernel->max_x), 0.5 * (kernel->min_z + kernel->max_z)};
  cam = {snap(cam.x, 0.01), snap(cam.z, 0.01)};
  if (!contains(poly, cam) || distance_to_boundary(poly, cam) < kMinCameraClearance) return std::nullopt;
  return cam;
}

// Footprint area implied by the FP map agrees with the polygon up to one
// pixel row along the boundary.
void check_map_consistency(const Sample& s, const CeilingViewFrame& frame) {
  double on = 0.0;
  for (float v : s.fp.data()) {
    if (v != 0.0f && v != 1.0f) throw Error("floor plan map is not binary");
    on += v;
  }
  const double mpp = frame.meters_per_pixel;
  const double area = polygon_area(s.layout.corners);
  if (std::abs(on * mpp * mpp - area) > perimeter(s.layout.corners) * mpp + 1e-9) {
    throw Error("floor plan map of sample '" + s.id + "' disagrees with its layout area");
  }
  bool has_ceiling = false;
  for (float v : s.fc.data()) has_ceiling = has_ceiling || v > 0.5f;
  if (!has_ceiling) throw Error("floor-ceiling map of sample '" + s.id + "' is empty");
}

}  // namespace

void validate_spec(const RoomSpec& spec) {
  if (spec.corner_count < 4 || spec.corner_count > 12 || spec.corner_count % 2 != 0) {
    throw DomainError("corner_count must be one of 4, 6, 8, 10, 12");
  }
  if (!(spec.height_m >= 2.2 && spec.height_m <= 4.0)) throw DomainError("height_m must lie in [2.2, 4.0]");
  if (!(spec.extent_x >= 2.0 * kMinWallSpacing && spec.extent_z >= 2.0 * kMinWallSpacing)) {
    throw DomainError("room extents must be at least 2 m");
  }
  if (spec.extent_x > 16.0 || spec.extent_z > 16.0) throw DomainError("room extents must not exceed 16 m");
}

RoomSpec random_spec(int corner_count, std::uint64_t seed) {
  std::mt19937_64 rng(splitmix64(seed));
  const int notches = std::max(0, (corner_count - 4) / 2);
  const double lo = std::min(3.0 + 0.75 * notches, 6.5);
  std::uniform_real_distribution<double> ext(lo, 8.0);
  std::uniform_real_distribution<double> height(2.2, 4.0);
  RoomSpec spec;
  spec.corner_count = corner_count;
  spec.extent_x = snap(ext(rng), kGrid);
  spec.extent_z = snap(ext(rng), kGrid);
  spec.height_m = snap(height(rng), 0.01);
  spec.seed = seed;
  validate_spec(spec);
  return spec;
}

ManhattanLayout random_layout(const RoomSpec& spec) {
  validate_spec(spec);
  std::mt19937_64 rng(spec.seed);
  const int notches = (spec.corner_count - 4) / 2;
  for (int attempt = 0; attempt < kLayoutAttempts; ++attempt) {
    Polygon poly{{0.0, 0.0}, {spec.extent_x, 0.0}, {spec.extent_x, spec.extent_z}, {0.0, spec.extent_z}};
    bool carved_all = true;
    for (int k = 0; k < notches && carved_all; ++k) {
      carved_all = false;
      for (int t = 0; t < kNotchAttempts; ++t) {
        std::vector<std::size_t> convex;
        for (std::size_t i = 0; i < poly.size(); ++i) {
          if (is_convex(poly, i)) convex.push_back(i);
        }
        std::uniform_int_distribution<std::size_t> pick(0, convex.size() - 1);
        if (auto next = carve(poly, convex[pick(rng)], rng)) {
          poly = std::move(*next);
          carved_all = true;
          break;
        }
      }
    }
    if (!carved_all) continue;
    const auto cam = place_camera(poly);
    if (!cam) continue;
    ManhattanLayout layout;
    for (Point2& p : poly) p = {p.x - cam->x, p.z - cam->z};
    layout.corners = make_ccw(std::move(poly));
    layout.height_m = spec.height_m;
    if (layout_violation(layout)) continue;
    return layout;
  }
  throw RetryExhaustedError("could not generate a " + std::to_string(spec.corner_count) +
                            "-corner room with the required camera clearance");
}

Sample make_sample(const RoomSpec& spec, const SampleGeometry& geometry, const std::string& id) {
  Sample s;
  s.id = id;
  s.layout = random_layout(spec);
  s.height_m = s.layout.height_m;
  // Small panoramas are rendered supersampled and area-averaged.
  const int ss = geometry.pano_w >= 512 ? 1 : std::min(4, 512 / std::max(1, geometry.pano_w));
  const std::uint64_t tex_seed = splitmix64(spec.seed ^ 0x7E7u);
  const EquirectMap tex = synth_texture(s.layout, geometry.pano_w * ss, geometry.pano_h * ss, tex_seed);
  s.pano = ss > 1 ? resize_area(tex, geometry.pano_w, geometry.pano_h) : tex;
  s.fc = render_fc_map(s.layout, geometry.pano_w, geometry.pano_h);
  const CeilingViewFrame frame = CeilingViewFrame::for_fov(geometry.fp_w, geometry.fov_deg);
  s.fp = render_fp_map(s.layout, frame);
  check_map_consistency(s, frame);
  return s;
}

Sample make_sample(const SampleRecord& record, const SampleGeometry& geometry) {
  return make_sample(random_spec(record.corner_count, record.seed), geometry, record.id);
}

std::map<int, int> class_counts(int n, const std::map<int, double>& proportions) {
  if (n < 0) throw DomainError("sample count must be non-negative");
  double total = 0.0;
  for (const auto& [corners, w] : proportions) {
    if (corners < 4 || corners > 12 || corners % 2 != 0) throw DomainError("unsupported corner class");
    if (!(w >= 0.0)) throw DomainError("class proportions must be non-negative");
    total += w;
  }
  if (!(total > 0.0)) throw DomainError("class proportions must not all be zero");
  std::map<int, int> counts;
  std::vector<std::pair<double, int>> remainders;
  int assigned = 0;
  for (const auto& [corners, w] : proportions) {
    const double exact = n * w / total;
    const int base = static_cast<int>(std::floor(exact));
    counts[corners] = base;
    assigned += base;
    remainders.emplace_back(exact - base, corners);
  }
  std::stable_sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  for (std::size_t k = 0; assigned < n; ++k, ++assigned) ++counts[remainders[k % remainders.size()].second];
  return counts;
}

Manifest plan_dataset(const DatasetOptions& opts) {
  if (opts.val_count < 0 || opts.val_count > opts.count) throw DomainError("val_count must lie in [0, count]");
  Manifest m;
  m.geometry = opts.geometry;
  m.seed = opts.seed;
  std::vector<int> classes;
  for (const auto& [corners, k] : class_counts(opts.count, opts.proportions)) classes.insert(classes.end(), k, corners);
  std::mt19937_64 rng(opts.seed);
  std::shuffle(classes.begin(), classes.end(), rng);
  for (int i = 0; i < opts.count; ++i) {
    SampleRecord r;
    char buf[16];
    std::snprintf(buf, sizeof buf, "s%05d", i);
    r.id = buf;
    r.corner_count = classes[i];
    r.seed = splitmix64(opts.seed * 1000003ULL + static_cast<std::uint64_t>(i));
    r.height_m = random_spec(r.corner_count, r.seed).height_m;
    r.split = i >= opts.count - opts.val_count ? "val" : "train";
    m.samples.push_back(std::move(r));
  }
  return m;
}

void write_sample(const std::filesystem::path& dir, const Sample& sample) {
  const std::filesystem::path d = dir / sample.id;
  std::filesystem::create_directories(d);
  write_png(d / "pano.png", to_image8(sample.pano));
  write_plpm(d / "fc.plpm", sample.fc);
  write_plpm(d / "fp.plpm", sample.fp);
  save_layout(d / "layout.json", sample.layout);
}

Sample read_sample(const std::filesystem::path& dir, const std::string& id) {
  const std::filesystem::path d = dir / id;
  Sample s;
  s.id = id;
  s.pano = from_image8<EquirectTag>(read_png(d / "pano.png"), 3);
  s.fc = read_plpm(d / "fc.plpm").retag<EquirectTag>();
  s.fp = read_plpm(d / "fp.plpm").retag<PerspectiveTag>();
  s.layout = load_layout(d / "layout.json");
  s.height_m = s.layout.height_m;
  return s;
}

Manifest write_dataset(const std::filesystem::path& dir, const DatasetOptions& opts) {
  Manifest m = plan_dataset(opts);
  std::filesystem::create_directories(dir);
  std::atomic<std::size_t> next{0};
  std::mutex err_mu;
  std::exception_ptr first_error;
  auto worker = [&] {
    for (std::size_t i = next++; i < m.samples.size(); i = next++) {
      try {
        write_sample(dir, make_sample(m.samples[i], m.geometry));
      } catch (...) {
        std::lock_guard lock(err_mu);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    for (int t = 1; t < std::max(1, opts.threads); ++t) pool.emplace_back(worker);
    worker();
  }
  if (first_error) std::rethrow_exception(first_error);
  save_manifest(dir / "manifest.json", m);
  return m;
}

void save_manifest(const std::filesystem::path& path, const Manifest& manifest) {
  nlohmann::json j;
  j["version"] = 1;
  j["seed"] = manifest.seed;
  j["geometry"] = {{"pano_w", manifest.geometry.pano_w},
                   {"pano_h", manifest.geometry.pano_h},
                   {"fp_w", manifest.geometry.fp_w},
                   {"fov_deg", manifest.geometry.fov_deg}};
  j["samples"] = nlohmann::json::array();
  for (const auto& r : manifest.samples) {
    j["samples"].push_back({{"id", r.id},
                            {"corner_count", r.corner_count},
                            {"height_m", r.height_m},
                            {"seed", r.seed},
                            {"split", r.split}});
  }
  write_file_atomic(path, j.dump(2) + "\n");
}

Manifest load_manifest(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  try {
    const auto j = nlohmann::json::parse(bytes.begin(), bytes.end());
    Manifest m;
    m.seed = j.value("seed", std::uint64_t{0});
    const auto& g = j.at("geometry");
    m.geometry.pano_w = g.at("pano_w").get<int>();
    m.geometry.pano_h = g.at("pano_h").get<int>();
    m.geometry.fp_w = g.at("fp_w").get<int>();
    m.geometry.fov_deg = g.value("fov_deg", kDefaultFov);
    for (const auto& s : j.at("samples")) {
      SampleRecord r;
      r.id = s.at("id").get<std::string>();
      r.corner_count = s.at("corner_count").get<int>();
      r.height_m = s.value("height_m", 0.0);
      r.seed = s.value("seed", std::uint64_t{0});
      r.split = s.value("split", std::string("train"));
      m.samples.push_back(std::move(r));
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("malformed manifest " + path.string() + ": " + e.what());
  }
}

}  // namespace panolayout
