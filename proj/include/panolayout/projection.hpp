#pragma once

#include <array>
#include <memory>
#include <span>
#include <vector>

#include "panolayout/raster.hpp"

namespace panolayout {

// Camera frame: +x right, +y down in the image plane, +z along the optical
// axis. World frame: +y points down, so the zenith has sy = -1 and maps to
// the top panorama row. Longitude = atan2(sx, sz), latitude = asin(sy).

enum class ViewDirection { Up, Down };

struct E2PConfig {
  double fov_deg = 160.0;
  int w = 512;
  ViewDirection direction = ViewDirection::Up;

  bool operator==(const E2PConfig&) const = default;
};

struct SphericalDirection {
  double sx = 0.0;
  double sy = 0.0;
  double sz = 1.0;
};

/// Normalized panorama coordinate: x = longitude / pi, y = latitude / (pi/2),
/// both in [-1, 1]; y = -1 is the zenith row.
struct EquirectCoord {
  double x = 0.0;
  double y = 0.0;
};

double focal_length(double fov_deg, int w);
void validate_config(const E2PConfig& cfg);

/// Unit world direction of the ray through pixel (px, py) of the view.
/// Pixel centers sit at (px + 0.5 - w/2, py + 0.5 - w/2) in camera-plane units.
SphericalDirection view_ray(double px, double py, const E2PConfig& cfg);
EquirectCoord direction_to_equirect(const SphericalDirection& d);
SphericalDirection equirect_to_direction(const EquirectCoord& c);
EquirectCoord project_pixel(double px, double py, const E2PConfig& cfg);

// Continuous panorama pixel position; integer values are pixel centers.
struct PixelPosition {
  double col = 0.0;
  double row = 0.0;
};
PixelPosition equirect_to_pixel(const EquirectCoord& c, int pano_w, int pano_h);
EquirectCoord pixel_to_equirect(double col, double row, int pano_w, int pano_h);

/// Where a world direction lands in the view (continuous pixel coordinates),
/// or nothing when it lies outside the square frustum.
struct ViewHit {
  bool inside = false;
  double px = 0.0;
  double py = 0.0;
};
ViewHit direction_to_view(const SphericalDirection& d, const E2PConfig& cfg);

struct GridEntry {
  EquirectCoord coord;
  std::array<int, 4> index{};     // panorama pixel indices (y * pano_w + x)
  std::array<double, 4> weight{};
};

struct SamplingGrid {
  E2PConfig cfg;
  int pano_w = 0;
  int pano_h = 0;
  std::vector<GridEntry> entries;  // row-major over the w x w view
};

SamplingGrid build_grid(const E2PConfig& cfg, int pano_w, int pano_h);

/// Grids depend only on geometry; this returns a process-wide cached copy.
std::shared_ptr<const SamplingGrid> shared_grid(const E2PConfig& cfg, int pano_w, int pano_h);

enum class ChannelLayout { Interleaved, Planar };

// Linear sampling kernels shared by the raster API and the autodiff warp.
// Interleaved buffers index pixel p, channel c as p * channels + c; planar
// buffers as c * pixels + p.
template <typename T>
void warp_forward(const SamplingGrid& grid, std::span<const T> src, std::span<T> dst, int channels,
                  ChannelLayout layout) {
  const std::size_t src_pixels = static_cast<std::size_t>(grid.pano_w) * grid.pano_h;
  const std::size_t dst_pixels = grid.entries.size();
  for (std::size_t p = 0; p < dst_pixels; ++p) {
    const GridEntry& e = grid.entries[p];
    for (int c = 0; c < channels; ++c) {
      T acc = 0;
      for (int k = 0; k < 4; ++k) {
        const std::size_t s = layout == ChannelLayout::Interleaved
                                  ? static_cast<std::size_t>(e.index[k]) * channels + c
                                  : c * src_pixels + e.index[k];
        acc += static_cast<T>(e.weight[k]) * src[s];
      }
      const std::size_t d = layout == ChannelLayout::Interleaved ? p * channels + c : c * dst_pixels + p;
      dst[d] = acc;
    }
  }
}

template <typename T>
void warp_backward(const SamplingGrid& grid, std::span<const T> grad_out, std::span<T> grad_src,
                   int channels, ChannelLayout layout) {
  const std::size_t src_pixels = static_cast<std::size_t>(grid.pano_w) * grid.pano_h;
  const std::size_t dst_pixels = grid.entries.size();
  for (std::size_t p = 0; p < dst_pixels; ++p) {
    const GridEntry& e = grid.entries[p];
    for (int c = 0; c < channels; ++c) {
      const std::size_t d = layout == ChannelLayout::Interleaved ? p * channels + c : c * dst_pixels + p;
      const T g = grad_out[d];
      for (int k = 0; k < 4; ++k) {
        const std::size_t s = layout == ChannelLayout::Interleaved
                                  ? static_cast<std::size_t>(e.index[k]) * channels + c
                                  : c * src_pixels + e.index[k];
        grad_src[s] += static_cast<T>(e.weight[k]) * g;
      }
    }
  }
}

template <typename T>
PerspectiveRaster<T> e2p(const EquirectRaster<T>& src, const E2PConfig& cfg);

template <typename T>
EquirectRaster<T> e2p_backward(const PerspectiveRaster<T>& grad_out, const E2PConfig& cfg, int pano_w,
                               int pano_h);

/// Inverse warp: panorama pixels whose direction falls inside the view's
/// frustum sample the view bilinearly; the rest receive `fill`.
template <typename T>
EquirectRaster<T> p2e_mask(const PerspectiveRaster<T>& src, const E2PConfig& cfg, int pano_w, int pano_h,
                           T fill = T{0});

// Exact pixel permutations of square views and panoramas.
template <typename T, typename Tag>
Raster<T, Tag> rotate_quarter(const Raster<T, Tag>& view, int quarter_turns);
template <typename T, typename Tag>
Raster<T, Tag> mirror_columns(const Raster<T, Tag>& img);
template <typename T, typename Tag>
Raster<T, Tag> mirror_rows(const Raster<T, Tag>& img);
template <typename T, typename Tag>
Raster<T, Tag> shift_columns(const Raster<T, Tag>& img, int shift);

}  // namespace panolayout
