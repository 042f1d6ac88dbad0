#pragma once

// Shared fixtures and independent oracles for the unit and acceptance tests.

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "panolayout/autodiff.hpp"
#include "panolayout/geometry.hpp"
#include "panolayout/layout.hpp"
#include "panolayout/projection.hpp"

namespace testsupport {

using panolayout::ManhattanLayout;
using panolayout::Point2;
using panolayout::Polygon;

inline ManhattanLayout rect_layout(double x0, double z0, double x1, double z1, double height = 3.2) {
  ManhattanLayout l;
  l.corners = {{x0, z0}, {x1, z0}, {x1, z1}, {x0, z1}};
  l.height_m = height;
  return l;
}

inline ManhattanLayout square_layout(double half = 2.0, double height = 3.2) {
  return rect_layout(-half, -half, half, half, height);
}

// 6-corner room: a 5 x 4 box with the (+x, +z) quadrant cut away.
inline ManhattanLayout l_layout(double height = 3.2) {
  ManhattanLayout l;
  l.corners = {{-2.5, -2.0}, {2.5, -2.0}, {2.5, 0.5}, {1.0, 0.5}, {1.0, 2.0}, {-2.5, 2.0}};
  l.height_m = height;
  return l;
}

// Unique scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("panolayout_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// Independent scalar model of the view-to-panorama chain in long double:
// camera ray, rotation about the x axis, normalization, spherical angles.
struct OracleCoord {
  long double x;
  long double y;
};

inline OracleCoord oracle_project(double px, double py, double fov_deg, int w, bool up) {
  const long double pi = std::numbers::pi_v<long double>;
  const long double f = 0.5L * w / std::tan(fov_deg * pi / 360.0L);
  const long double cx = px + 0.5L - 0.5L * w;
  const long double cy = py + 0.5L - 0.5L * w;
  const long double cz = f;
  // Up: the optical axis turns to world -y (zenith), image down to world +z.
  const long double angle = up ? pi / 2 : -pi / 2;
  const long double c = std::cos(angle);
  const long double s = std::sin(angle);
  const long double wx = cx;
  const long double wy = c * cy - s * cz;
  const long double wz = s * cy + c * cz;
  const long double n = std::sqrt(wx * wx + wy * wy + wz * wz);
  const long double lon = std::atan2(wx / n, wz / n);
  const long double lat = std::asin(std::clamp(wy / n, -1.0L, 1.0L));
  return {lon / pi, lat / (pi / 2)};
}

// Fraction-of-area IoU by sampling cell centers of an n x n raster over the
// joint bounding box.
inline double raster_iou2d(const Polygon& a, const Polygon& b, int n) {
  double x0 = 1e300, z0 = 1e300, x1 = -1e300, z1 = -1e300;
  for (const auto* poly : {&a, &b}) {
    for (const Point2& p : *poly) {
      x0 = std::min(x0, p.x);
      z0 = std::min(z0, p.z);
      x1 = std::max(x1, p.x);
      z1 = std::max(z1, p.z);
    }
  }
  const double dx = (x1 - x0) / n;
  const double dz = (z1 - z0) / n;
  // Even-odd rule per scanline: a sample is inside when an odd number of
  // vertical edges crossing the scanline lie to its right.
  auto crossings = [](const Polygon& poly, double z) {
    std::vector<double> xs;
    for (std::size_t k = 0; k < poly.size(); ++k) {
      const Point2& p = poly[k];
      const Point2& q = poly[(k + 1) % poly.size()];
      if ((p.z <= z) != (q.z <= z)) xs.push_back(p.x + (z - p.z) * (q.x - p.x) / (q.z - p.z));
    }
    std::sort(xs.begin(), xs.end());
    return xs;
  };
  long inter = 0, uni = 0;
  for (int j = 0; j < n; ++j) {
    const double z = z0 + (j + 0.5) * dz;
    const auto ca = crossings(a, z);
    const auto cb = crossings(b, z);
    std::size_t ia = 0, ib = 0;
    for (int i = 0; i < n; ++i) {
      const double x = x0 + (i + 0.5) * dx;
      while (ia < ca.size() && ca[ia] <= x) ++ia;
      while (ib < cb.size() && cb[ib] <= x) ++ib;
      const bool in_a = (ca.size() - ia) % 2 == 1;
      const bool in_b = (cb.size() - ib) % 2 == 1;
      inter += in_a && in_b;
      uni += in_a || in_b;
    }
  }
  return uni ? static_cast<double>(inter) / uni : 0.0;
}

// Prism IoU by n^3 voxel centers; both prisms hang from the ceiling plane.
inline double voxel_iou3d(const ManhattanLayout& a, const ManhattanLayout& b, int n) {
  double x0 = 1e300, z0 = 1e300, x1 = -1e300, z1 = -1e300;
  for (const auto* poly : {&a.corners, &b.corners}) {
    for (const Point2& p : *poly) {
      x0 = std::min(x0, p.x);
      z0 = std::min(z0, p.z);
      x1 = std::max(x1, p.x);
      z1 = std::max(z1, p.z);
    }
  }
  const double hmax = std::max(a.height_m, b.height_m);
  const double dx = (x1 - x0) / n, dz = (z1 - z0) / n, dy = hmax / n;
  std::vector<char> in_a(static_cast<std::size_t>(n) * n), in_b(in_a.size());
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const Point2 p{x0 + (i + 0.5) * dx, z0 + (j + 0.5) * dz};
      in_a[j * n + i] = panolayout::contains(a.corners, p);
      in_b[j * n + i] = panolayout::contains(b.corners, p);
    }
  }
  long inter = 0, uni = 0;
  for (int k = 0; k < n; ++k) {
    const double depth = (k + 0.5) * dy;
    const bool ya = depth < a.height_m;
    const bool yb = depth < b.height_m;
    for (std::size_t c = 0; c < in_a.size(); ++c) {
      const bool va = ya && in_a[c];
      const bool vb = yb && in_b[c];
      inter += va && vb;
      uni += va || vb;
    }
  }
  return uni ? static_cast<double>(inter) / uni : 0.0;
}

// Random rectilinear footprint: a rectangle, an L-shape or a rectangle with
// a notch in its top edge. Corners run counter-clockwise.
inline Polygon random_rectilinear(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  std::uniform_real_distribution<double> size(1.0, 4.0);
  std::uniform_int_distribution<int> pick(0, 2);
  const double x0 = u(rng), z0 = u(rng);
  const double w = size(rng), h = size(rng);
  const int kind = pick(rng);
  if (kind == 0) {
    return {{x0, z0}, {x0 + w, z0}, {x0 + w, z0 + h}, {x0, z0 + h}};
  }
  std::uniform_real_distribution<double> frac(0.2, 0.8);
  const double cx = x0 + frac(rng) * w;
  const double cz = z0 + frac(rng) * h;
  if (kind == 1) {  // L-shape: top-right quadrant removed
    return {{x0, z0}, {x0 + w, z0}, {x0 + w, cz}, {cx, cz}, {cx, z0 + h}, {x0, z0 + h}};
  }
  // T-ish: a notch cut from the top edge.
  const double ax = x0 + frac(rng) * 0.4 * w;
  const double bx = ax + 0.3 * w;
  return {{x0, z0}, {x0 + w, z0}, {x0 + w, z0 + h}, {bx, z0 + h}, {bx, cz}, {ax, cz}, {ax, z0 + h}, {x0, z0 + h}};
}

// Central finite difference of f at x[i].
template <typename F>
double central_difference(std::vector<double>& x, std::size_t i, double h, F&& f) {
  const double keep = x[i];
  x[i] = keep + h;
  const double fp = f();
  x[i] = keep - h;
  const double fm = f();
  x[i] = keep;
  return (fp - fm) / (2 * h);
}

inline double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
}

}  // namespace testsupport
