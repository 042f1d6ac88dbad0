#include "panolayout/layout.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "panolayout/projection.hpp"

namespace panolayout {

std::optional<std::string> layout_violation(const ManhattanLayout& layout) {
  if (auto v = rectilinear_violation(layout.corners)) return v;
  if (signed_area(layout.corners) <= 0) return "corners are not counter-clockwise";
  if (layout.camera_to_ceiling_m != kCameraToCeiling) return "camera_to_ceiling_m must be 1.6";
  if (!(layout.height_m > kCameraToCeiling) || !std::isfinite(layout.height_m)) {
    return "layout height must exceed the 1.6 m camera-to-ceiling distance";
  }
  const Point2 origin{0.0, 0.0};
  if (!contains(layout.corners, origin) || distance_to_boundary(layout.corners, origin) <= 1e-9) {
    return "camera is not strictly inside the footprint";
  }
  return std::nullopt;
}

void validate_layout(const ManhattanLayout& layout) {
  if (auto v = layout_violation(layout)) throw InvalidLayoutError("invalid layout: " + *v);
}

Prism3D extrude(const ManhattanLayout& layout) {
  validate_layout(layout);
  return {layout.corners, -(layout.height_m - kCameraToCeiling), kCameraToCeiling};
}

double floor_registration_scale(double height_m) {
  if (!(height_m > kCameraToCeiling) || !std::isfinite(height_m)) {
    throw DomainError("layout height must exceed 1.6 m");
  }
  return kCameraToCeiling / (height_m - kCameraToCeiling);
}

CeilingViewFrame CeilingViewFrame::for_fov(int w, double fov_deg) {
  const double f = focal_length(fov_deg, w);
  return {w, kCameraToCeiling / f};
}

double CeilingViewFrame::fov_deg() const {
  const double half_extent = 0.5 * w * meters_per_pixel;
  return 2.0 * std::atan(half_extent / kCameraToCeiling) * 180.0 / std::numbers::pi;
}

Point2 CeilingViewFrame::pixel_center_to_metric(int col, int row) const {
  return edge_to_metric(col + 0.5, row + 0.5);
}

Point2 CeilingViewFrame::edge_to_metric(double px, double py) const {
  return {(px - 0.5 * w) * meters_per_pixel, (py - 0.5 * w) * meters_per_pixel};
}

Point2 CeilingViewFrame::metric_to_edge(Point2 m) const {
  return {m.x / meters_per_pixel + 0.5 * w, m.z / meters_per_pixel + 0.5 * w};
}

bool CeilingViewFrame::contains(const BoundingBox& box) const {
  const double half = 0.5 * w * meters_per_pixel;
  return box.min_x >= -half && box.max_x <= half && box.min_z >= -half && box.max_z <= half;
}

namespace {

double column_longitude(int col, int pano_w) { return ((col + 0.5) / pano_w * 2.0 - 1.0) * std::numbers::pi; }
double row_latitude(int row, int pano_h) { return ((row + 0.5) / pano_h * 2.0 - 1.0) * 0.5 * std::numbers::pi; }

void check_pano(int pano_w, int pano_h) {
  if (pano_h <= 0 || pano_w != 2 * pano_h) throw DimensionError("panorama width must be twice its height");
}

// First wall hit along the azimuth, as (distance, edge index).
std::pair<double, int> first_wall(const Polygon& poly, double phi) {
  const double dx = std::sin(phi), dz = std::cos(phi);
  double best = std::numeric_limits<double>::infinity();
  int best_i = -1;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Point2& a = poly[i];
    const Point2& b = poly[(i + 1) % poly.size()];
    double t = -1.0;
    if (a.x == b.x && std::abs(dx) > 1e-15) {
      t = a.x / dx;
      const double z = t * dz;
      if (z < std::min(a.z, b.z) || z > std::max(a.z, b.z)) t = -1.0;
    } else if (a.z == b.z && std::abs(dz) > 1e-15) {
      t = a.z / dz;
      const double x = t * dx;
      if (x < std::min(a.x, b.x) || x > std::max(a.x, b.x)) t = -1.0;
    }
    if (t > 0 && t < best) {
      best = t;
      best_i = static_cast<int>(i);
    }
  }
  return {best, best_i};
}

Surface classify(double lat, double wall_dist, double height_m) {
  if (lat < 0) {
    const double r = kCameraToCeiling / std::tan(-lat);
    return r < wall_dist ? Surface::Ceiling : Surface::Wall;
  }
  if (lat > 0) {
    const double r = (height_m - kCameraToCeiling) / std::tan(lat);
    return r < wall_dist ? Surface::Floor : Surface::Wall;
  }
  return Surface::Wall;
}

}  // namespace

Raster<std::uint8_t, EquirectTag> surface_labels(const ManhattanLayout& layout, int pano_w, int pano_h) {
  validate_layout(layout);
  check_pano(pano_w, pano_h);
  Raster<std::uint8_t, EquirectTag> out(pano_w, pano_h, 1);
  for (int col = 0; col < pano_w; ++col) {
    const double d = first_wall(layout.corners, column_longitude(col, pano_w)).first;
    for (int row = 0; row < pano_h; ++row) {
      out.at(col, row) = static_cast<std::uint8_t>(classify(row_latitude(row, pano_h), d, layout.height_m));
    }
  }
  return out;
}

EquirectMap render_fc_map(const ManhattanLayout& layout, int pano_w, int pano_h) {
  const auto labels = surface_labels(layout, pano_w, pano_h);
  EquirectMap out(pano_w, pano_h, 1);
  for (std::size_t i = 0; i < labels.data().size(); ++i) {
    out.data()[i] = labels.data()[i] == static_cast<std::uint8_t>(Surface::Wall) ? 0.0f : 1.0f;
  }
  return out;
}

PerspectiveMap render_fp_map(const ManhattanLayout& layout, const CeilingViewFrame& frame) {
  validate_layout(layout);
  if (frame.w <= 0 || !(frame.meters_per_pixel > 0)) throw DomainError("invalid ceiling-view frame");
  if (!frame.contains(bounding_box(layout.corners))) {
    throw FrameTooSmallError("ceiling-view frame does not contain the layout bounding box");
  }
  PerspectiveMap out(frame.w, frame.w, 1);
  for (int row = 0; row < frame.w; ++row) {
    for (int col = 0; col < frame.w; ++col) {
      out.at(col, row) = contains(layout.corners, frame.pixel_center_to_metric(col, row)) ? 1.0f : 0.0f;
    }
  }
  return out;
}

EquirectMap synth_texture(const ManhattanLayout& layout, int pano_w, int pano_h, std::uint64_t seed) {
  validate_layout(layout);
  check_pano(pano_w, pano_h);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  auto range = [&](double lo, double hi) { return lo + (hi - lo) * uni(rng); };

  const double ceiling_base = range(0.82, 0.95);
  const double floor_base = range(0.18, 0.32);
  const double wall_base = range(0.38, 0.52);
  const std::array<double, 3> ceiling_tint{1.0, range(0.97, 1.0), range(0.93, 1.0)};
  const std::array<double, 3> floor_tint{1.0, range(0.70, 0.85), range(0.45, 0.65)};
  const std::array<double, 3> wall_tint{range(0.9, 1.0), range(0.9, 1.0), range(0.85, 1.0)};
  std::vector<double> wall_albedo(layout.corners.size());
  for (double& a : wall_albedo) a = wall_base + range(-0.03, 0.03);

  std::vector<double> wall_dist(pano_w);
  std::vector<int> wall_index(pano_w);
  std::vector<double> wall_cos(pano_w);
  for (int col = 0; col < pano_w; ++col) {
    const double phi = column_longitude(col, pano_w);
    const auto [d, idx] = first_wall(layout.corners, phi);
    wall_dist[col] = d;
    wall_index[col] = idx;
    const Point2& a = layout.corners[idx];
    const Point2& b = layout.corners[(idx + 1) % layout.corners.size()];
    wall_cos[col] = a.x == b.x ? std::abs(std::sin(phi)) : std::abs(std::cos(phi));
  }

  const auto labels = surface_labels(layout, pano_w, pano_h);
  std::normal_distribution<double> noise(0.0, 0.02);
  EquirectMap out(pano_w, pano_h, 3);
  for (int row = 0; row < pano_h; ++row) {
    const double lat = row_latitude(row, pano_h);
    for (int col = 0; col < pano_w; ++col) {
      const auto surface = static_cast<Surface>(labels.at(col, row));
      double base = 0.0;
      const std::array<double, 3>* tint = nullptr;
      switch (surface) {
        case Surface::Ceiling: {
          const double r = kCameraToCeiling / std::tan(-lat);
          base = ceiling_base * (0.85 + 0.15 / (1.0 + r / 4.0));
          tint = &ceiling_tint;
          break;
        }
        case Surface::Floor: {
          const double r = (layout.height_m - kCameraToCeiling) / std::tan(lat);
          base = floor_base * (0.8 + 0.2 / (1.0 + r / 4.0));
          tint = &floor_tint;
          break;
        }
        case Surface::Wall:
          base = wall_albedo[wall_index[col]] * (0.7 + 0.3 * wall_cos[col]);
          tint = &wall_tint;
          break;
      }
      // Seams at class changes and at wall-wall junctions.
      bool seam = false;
      const int left = (col + pano_w - 1) % pano_w;
      const int right = (col + 1) % pano_w;
      const std::uint8_t here = labels.at(col, row);
      if (labels.at(left, row) != here || labels.at(right, row) != here) seam = true;
      if (row > 0 && labels.at(col, row - 1) != here) seam = true;
      if (row + 1 < pano_h && labels.at(col, row + 1) != here) seam = true;
      if (surface == Surface::Wall && (wall_index[left] != wall_index[col] || wall_index[right] != wall_index[col])) {
        seam = true;
      }
      if (seam) base *= 0.35;
      for (int c = 0; c < 3; ++c) {
        out.at(col, row, c) = static_cast<float>(std::clamp(base * (*tint)[c] + noise(rng), 0.0, 1.0));
      }
    }
  }
  return out;
}

nlohmann::json layout_to_json(const ManhattanLayout& layout) {
  nlohmann::json corners = nlohmann::json::array();
  for (const Point2& p : layout.corners) corners.push_back({p.x, p.z});
  return {{"height_m", layout.height_m}, {"camera_to_ceiling_m", layout.camera_to_ceiling_m}, {"corners", corners}};
}

ManhattanLayout layout_from_json(const nlohmann::json& j) {
  try {
    ManhattanLayout layout;
    layout.height_m = j.at("height_m").get<double>();
    layout.camera_to_ceiling_m = j.value("camera_to_ceiling_m", kCameraToCeiling);
    for (const auto& c : j.at("corners")) {
      if (!c.is_array() || c.size() != 2) throw FormatError("corner entries must be [x, z] pairs");
      layout.corners.push_back({c[0].get<double>(), c[1].get<double>()});
    }
    return layout;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed layout JSON: ") + e.what());
  }
}

void save_layout(const std::filesystem::path& path, const ManhattanLayout& layout) {
  write_file_atomic(path, layout_to_json(layout).dump(2) + "\n");
}

ManhattanLayout load_layout(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  try {
    return layout_from_json(nlohmann::json::parse(bytes.begin(), bytes.end()));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("layout file is not valid JSON: ") + e.what());
  }
}

}  // namespace panolayout
