#include "panolayout/projection.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <tuple>

namespace panolayout {

namespace {

constexpr double kPi = std::numbers::pi;

double deg_to_rad(double deg) { return deg * kPi / 180.0; }

// Rotation about the x-axis by +90 (Up) or -90 (Down) degrees applied to a
// camera-frame vector: y' = y cos t - z sin t, z' = y sin t + z cos t.
SphericalDirection rotate_camera_to_world(double x, double y, double z, ViewDirection dir) {
  if (dir == ViewDirection::Up) return {x, -z, y};
  return {x, z, -y};
}

void check_pano_dims(int pano_w, int pano_h) {
  if (pano_h <= 0 || pano_w != 2 * pano_h) {
    throw DimensionError("equirectangular maps must satisfy width = 2 * height (got " + std::to_string(pano_w) +
                         "x" + std::to_string(pano_h) + ")");
  }
}

}  // namespace

double focal_length(double fov_deg, int w) {
  if (!(fov_deg > 0.0 && fov_deg < 180.0)) {
    throw DomainError("field of view must lie in (0, 180) degrees");
  }
  if (w <= 0) throw DomainError("view width must be positive");
  return 0.5 * w / std::tan(0.5 * deg_to_rad(fov_deg));
}

void validate_config(const E2PConfig& cfg) { (void)focal_length(cfg.fov_deg, cfg.w); }

SphericalDirection view_ray(double px, double py, const E2PConfig& cfg) {
  const double f = focal_length(cfg.fov_deg, cfg.w);
  const double half = 0.5 * cfg.w;
  const double x = px + 0.5 - half;
  const double y = py + 0.5 - half;
  const double norm = std::sqrt(x * x + y * y + f * f);
  return rotate_camera_to_world(x / norm, y / norm, f / norm, cfg.direction);
}

EquirectCoord direction_to_equirect(const SphericalDirection& d) {
  const double sy = std::clamp(d.sy, -1.0, 1.0);
  return {std::atan2(d.sx, d.sz) / kPi, std::asin(sy) / (0.5 * kPi)};
}

SphericalDirection equirect_to_direction(const EquirectCoord& c) {
  const double lon = c.x * kPi;
  const double lat = c.y * 0.5 * kPi;
  return {std::cos(lat) * std::sin(lon), std::sin(lat), std::cos(lat) * std::cos(lon)};
}

EquirectCoord project_pixel(double px, double py, const E2PConfig& cfg) {
  return direction_to_equirect(view_ray(px, py, cfg));
}

PixelPosition equirect_to_pixel(const EquirectCoord& c, int pano_w, int pano_h) {
  return {(c.x + 1.0) * 0.5 * pano_w - 0.5, (c.y + 1.0) * 0.5 * pano_h - 0.5};
}

EquirectCoord pixel_to_equirect(double col, double row, int pano_w, int pano_h) {
  return {(col + 0.5) / pano_w * 2.0 - 1.0, (row + 0.5) / pano_h * 2.0 - 1.0};
}

ViewHit direction_to_view(const SphericalDirection& d, const E2PConfig& cfg) {
  const double f = focal_length(cfg.fov_deg, cfg.w);
  // Inverse of rotate_camera_to_world.
  double cx = d.sx, cy = 0.0, cz = 0.0;
  if (cfg.direction == ViewDirection::Up) {
    cy = d.sz;
    cz = -d.sy;
  } else {
    cy = -d.sz;
    cz = d.sy;
  }
  if (cz <= 0.0) return {};
  const double half = 0.5 * cfg.w;
  const double u = f * cx / cz;
  const double v = f * cy / cz;
  if (std::abs(u) > half || std::abs(v) > half) return {};
  return {true, u + half - 0.5, v + half - 0.5};
}

SamplingGrid build_grid(const E2PConfig& cfg, int pano_w, int pano_h) {
  validate_config(cfg);
  check_pano_dims(pano_w, pano_h);
  SamplingGrid grid{cfg, pano_w, pano_h, {}};
  grid.entries.resize(static_cast<std::size_t>(cfg.w) * cfg.w);
  for (int py = 0; py < cfg.w; ++py) {
    for (int px = 0; px < cfg.w; ++px) {
      GridEntry& e = grid.entries[static_cast<std::size_t>(py) * cfg.w + px];
      e.coord = project_pixel(px, py, cfg);
      const PixelPosition pos = equirect_to_pixel(e.coord, pano_w, pano_h);
      const double x0f = std::floor(pos.col);
      const double y0f = std::floor(pos.row);
      const double fx = pos.col - x0f;
      const double fy = pos.row - y0f;
      const int x0 = static_cast<int>(x0f);
      const int y0 = static_cast<int>(y0f);
      const int xa = ((x0 % pano_w) + pano_w) % pano_w;
      const int xb = (xa + 1) % pano_w;
      const int ya = std::clamp(y0, 0, pano_h - 1);
      const int yb = std::clamp(y0 + 1, 0, pano_h - 1);
      e.index = {ya * pano_w + xa, ya * pano_w + xb, yb * pano_w + xa, yb * pano_w + xb};
      e.weight = {(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy};
    }
  }
  return grid;
}

std::shared_ptr<const SamplingGrid> shared_grid(const E2PConfig& cfg, int pano_w, int pano_h) {
  using Key = std::tuple<double, int, int, int, int>;
  static std::mutex mutex;
  static std::map<Key, std::shared_ptr<const SamplingGrid>> cache;
  const Key key{cfg.fov_deg, cfg.w, static_cast<int>(cfg.direction), pano_w, pano_h};
  {
    std::lock_guard lock(mutex);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }
  auto grid = std::make_shared<const SamplingGrid>(build_grid(cfg, pano_w, pano_h));
  std::lock_guard lock(mutex);
  if (cache.size() > 64) cache.clear();
  return cache.emplace(key, std::move(grid)).first->second;
}

template <typename T>
PerspectiveRaster<T> e2p(const EquirectRaster<T>& src, const E2PConfig& cfg) {
  check_pano_dims(src.width(), src.height());
  const auto grid = shared_grid(cfg, src.width(), src.height());
  PerspectiveRaster<T> out(cfg.w, cfg.w, src.channels());
  warp_forward<T>(*grid, src.data(), out.data(), src.channels(), ChannelLayout::Interleaved);
  return out;
}

template <typename T>
EquirectRaster<T> e2p_backward(const PerspectiveRaster<T>& grad_out, const E2PConfig& cfg, int pano_w,
                               int pano_h) {
  check_pano_dims(pano_w, pano_h);
  if (grad_out.width() != cfg.w || grad_out.height() != cfg.w) {
    throw DimensionError("gradient map does not match the view size");
  }
  const auto grid = shared_grid(cfg, pano_w, pano_h);
  EquirectRaster<T> out(pano_w, pano_h, grad_out.channels());
  warp_backward<T>(*grid, grad_out.data(), out.data(), grad_out.channels(), ChannelLayout::Interleaved);
  return out;
}

template <typename T>
EquirectRaster<T> p2e_mask(const PerspectiveRaster<T>& src, const E2PConfig& cfg, int pano_w, int pano_h,
                           T fill) {
  check_pano_dims(pano_w, pano_h);
  validate_config(cfg);
  if (src.width() != cfg.w || src.height() != cfg.w) {
    throw DimensionError("perspective map does not match the view size");
  }
  EquirectRaster<T> out(pano_w, pano_h, src.channels(), fill);
  const int w = cfg.w;
  for (int row = 0; row < pano_h; ++row) {
    for (int col = 0; col < pano_w; ++col) {
      const ViewHit hit = direction_to_view(equirect_to_direction(pixel_to_equirect(col, row, pano_w, pano_h)), cfg);
      if (!hit.inside) continue;
      const double x0f = std::floor(hit.px);
      const double y0f = std::floor(hit.py);
      const double fx = hit.px - x0f;
      const double fy = hit.py - y0f;
      const int xa = std::clamp(static_cast<int>(x0f), 0, w - 1);
      const int xb = std::clamp(static_cast<int>(x0f) + 1, 0, w - 1);
      const int ya = std::clamp(static_cast<int>(y0f), 0, w - 1);
      const int yb = std::clamp(static_cast<int>(y0f) + 1, 0, w - 1);
      for (int c = 0; c < src.channels(); ++c) {
        const double v = (1 - fx) * (1 - fy) * src.at(xa, ya, c) + fx * (1 - fy) * src.at(xb, ya, c) +
                         (1 - fx) * fy * src.at(xa, yb, c) + fx * fy * src.at(xb, yb, c);
        out.at(col, row, c) = static_cast<T>(v);
      }
    }
  }
  return out;
}

template <typename T, typename Tag>
Raster<T, Tag> rotate_quarter(const Raster<T, Tag>& view, int quarter_turns) {
  if (view.width() != view.height()) throw DimensionError("quarter rotation needs a square view");
  const int k = ((quarter_turns % 4) + 4) % 4;
  Raster<T, Tag> cur = view;
  const int w = view.width();
  for (int step = 0; step < k; ++step) {
    Raster<T, Tag> next(w, w, view.channels());
    // new(col, row) = old(w - 1 - row, col): content turns counter-clockwise on screen.
    for (int row = 0; row < w; ++row) {
      for (int col = 0; col < w; ++col) {
        for (int c = 0; c < view.channels(); ++c) next.at(col, row, c) = cur.at(w - 1 - row, col, c);
      }
    }
    cur = std::move(next);
  }
  return cur;
}

template <typename T, typename Tag>
Raster<T, Tag> mirror_columns(const Raster<T, Tag>& img) {
  Raster<T, Tag> out(img.width(), img.height(), img.channels());
  for (int row = 0; row < img.height(); ++row) {
    for (int col = 0; col < img.width(); ++col) {
      for (int c = 0; c < img.channels(); ++c) out.at(col, row, c) = img.at(img.width() - 1 - col, row, c);
    }
  }
  return out;
}

template <typename T, typename Tag>
Raster<T, Tag> mirror_rows(const Raster<T, Tag>& img) {
  Raster<T, Tag> out(img.width(), img.height(), img.channels());
  for (int row = 0; row < img.height(); ++row) {
    for (int col = 0; col < img.width(); ++col) {
      for (int c = 0; c < img.channels(); ++c) out.at(col, row, c) = img.at(col, img.height() - 1 - row, c);
    }
  }
  return out;
}

template <typename T, typename Tag>
Raster<T, Tag> shift_columns(const Raster<T, Tag>& img, int shift) {
  const int w = img.width();
  Raster<T, Tag> out(w, img.height(), img.channels());
  if (w == 0) return out;
  const int s = ((shift % w) + w) % w;
  for (int row = 0; row < img.height(); ++row) {
    for (int col = 0; col < w; ++col) {
      const int src_col = (col - s + w) % w;
      for (int c = 0; c < img.channels(); ++c) out.at(col, row, c) = img.at(src_col, row, c);
    }
  }
  return out;
}

template PerspectiveRaster<float> e2p(const EquirectRaster<float>&, const E2PConfig&);
template PerspectiveRaster<double> e2p(const EquirectRaster<double>&, const E2PConfig&);
template EquirectRaster<float> e2p_backward(const PerspectiveRaster<float>&, const E2PConfig&, int, int);
template EquirectRaster<double> e2p_backward(const PerspectiveRaster<double>&, const E2PConfig&, int, int);
template EquirectRaster<float> p2e_mask(const PerspectiveRaster<float>&, const E2PConfig&, int, int, float);
template EquirectRaster<double> p2e_mask(const PerspectiveRaster<double>&, const E2PConfig&, int, int, double);

#define PANOLAYOUT_INSTANTIATE_PERMUTATIONS(T, Tag)                                  \
  template Raster<T, Tag> rotate_quarter(const Raster<T, Tag>&, int);                \
  template Raster<T, Tag> mirror_columns(const Raster<T, Tag>&);                     \
  template Raster<T, Tag> mirror_rows(const Raster<T, Tag>&);                        \
  template Raster<T, Tag> shift_columns(const Raster<T, Tag>&, int);

PANOLAYOUT_INSTANTIATE_PERMUTATIONS(float, PerspectiveTag)
PANOLAYOUT_INSTANTIATE_PERMUTATIONS(float, EquirectTag)
PANOLAYOUT_INSTANTIATE_PERMUTATIONS(float, PlainTag)
PANOLAYOUT_INSTANTIATE_PERMUTATIONS(double, PerspectiveTag)
PANOLAYOUT_INSTANTIATE_PERMUTATIONS(double, EquirectTag)
PANOLAYOUT_INSTANTIATE_PERMUTATIONS(std::uint8_t, PlainTag)

#undef PANOLAYOUT_INSTANTIATE_PERMUTATIONS

}  // namespace panolayout
