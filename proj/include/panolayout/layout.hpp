#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "panolayout/geometry.hpp"
#include "panolayout/raster.hpp"

namespace panolayout {

inline constexpr double kCameraToCeiling = 1.6;
inline constexpr double kDefaultFov = 160.0;

/// Axis-aligned room footprint on the ceiling plane, camera at the origin.
/// Corners run counter-clockwise in (x, z); the room spans from the ceiling
/// 1.6 m above the camera down to the floor height_m below the ceiling.
struct ManhattanLayout {
  Polygon corners;
  double height_m = 3.2;
  double camera_to_ceiling_m = kCameraToCeiling;

  bool operator==(const ManhattanLayout&) const = default;
};

std::optional<std::string> layout_violation(const ManhattanLayout& layout);
void validate_layout(const ManhattanLayout& layout);  // throws InvalidLayoutError

struct Prism3D {
  Polygon footprint;
  double bottom_m = 0.0;  // floor, relative to camera (negative)
  double top_m = 0.0;     // ceiling, relative to camera

  double height() const { return top_m - bottom_m; }
  double volume() const { return polygon_area(footprint) * height(); }
};

Prism3D extrude(const ManhattanLayout& layout);

/// Scale that maps floor-view pixels onto the ceiling view: 1.6 / (H - 1.6).
double floor_registration_scale(double height_m);

/// Pixel embedding of the ceiling plane: column <-> x, row <-> z, the view
/// center is the camera axis.
struct CeilingViewFrame {
  int w = 512;
  double meters_per_pixel = 0.0;

  /// Frame that is pixel-aligned with an upward E2P view of the given fov at
  /// ceiling distance 1.6 m.
  static CeilingViewFrame for_fov(int w, double fov_deg = kDefaultFov);
  double fov_deg() const;

  Point2 pixel_center_to_metric(int col, int row) const;
  /// Continuous pixel-edge coordinates (0..w) to meters and back.
  Point2 edge_to_metric(double px, double py) const;
  Point2 metric_to_edge(Point2 m) const;
  bool contains(const BoundingBox& box) const;
};

EquirectMap render_fc_map(const ManhattanLayout& layout, int pano_w, int pano_h);
PerspectiveMap render_fp_map(const ManhattanLayout& layout, const CeilingViewFrame& frame);

/// Shaded RGB panorama: per-class albedo and noise, distance shading and
/// darkened junction seams. Deterministic in seed.
EquirectMap synth_texture(const ManhattanLayout& layout, int pano_w, int pano_h, std::uint64_t seed);

// Surface classes per panorama pixel: 0 wall, 1 ceiling, 2 floor.
enum class Surface : std::uint8_t { Wall = 0, Ceiling = 1, Floor = 2 };
Raster<std::uint8_t, EquirectTag> surface_labels(const ManhattanLayout& layout, int pano_w, int pano_h);

nlohmann::json layout_to_json(const ManhattanLayout& layout);
ManhattanLayout layout_from_json(const nlohmann::json& j);
void save_layout(const std::filesystem::path& path, const ManhattanLayout& layout);
ManhattanLayout load_layout(const std::filesystem::path& path);

}  // namespace panolayout
