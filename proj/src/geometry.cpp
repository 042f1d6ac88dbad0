#include "panolayout/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace panolayout {

double signed_area(std::span<const Point2> poly) {
  double acc = 0.0;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point2& a = poly[i];
    const Point2& b = poly[(i + 1) % n];
    acc += a.x * b.z - b.x * a.z;
  }
  return 0.5 * acc;
}

double polygon_area(std::span<const Point2> poly) { return std::abs(signed_area(poly)); }

double perimeter(std::span<const Point2> poly) {
  double acc = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Point2& a = poly[i];
    const Point2& b = poly[(i + 1) % poly.size()];
    acc += std::hypot(b.x - a.x, b.z - a.z);
  }
  return acc;
}

bool contains(std::span<const Point2> poly, Point2 p) {
  bool inside = false;
  const std::size_t n = poly.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Point2& a = poly[i];
    const Point2& b = poly[j];
    if ((a.z > p.z) != (b.z > p.z)) {
      const double x_cross = a.x + (p.z - a.z) * (b.x - a.x) / (b.z - a.z);
      if (p.x < x_cross) inside = !inside;
    }
  }
  return inside;
}

namespace {

double segment_distance(Point2 a, Point2 b, Point2 p) {
  const double dx = b.x - a.x, dz = b.z - a.z;
  const double len2 = dx * dx + dz * dz;
  double t = len2 > 0 ? ((p.x - a.x) * dx + (p.z - a.z) * dz) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(a.x + t * dx - p.x, a.z + t * dz - p.z);
}

bool is_axis_edge(Point2 a, Point2 b, bool& vertical) {
  if (a.x == b.x && a.z != b.z) {
    vertical = true;
    return true;
  }
  if (a.z == b.z && a.x != b.x) {
    vertical = false;
    return true;
  }
  return false;
}

// Closed-segment overlap test for axis-aligned segments.
bool axis_segments_touch(Point2 a, Point2 b, Point2 c, Point2 d) {
  const double ax0 = std::min(a.x, b.x), ax1 = std::max(a.x, b.x);
  const double az0 = std::min(a.z, b.z), az1 = std::max(a.z, b.z);
  const double cx0 = std::min(c.x, d.x), cx1 = std::max(c.x, d.x);
  const double cz0 = std::min(c.z, d.z), cz1 = std::max(c.z, d.z);
  return ax0 <= cx1 && cx0 <= ax1 && az0 <= cz1 && cz0 <= az1;
}

}  // namespace

double distance_to_boundary(std::span<const Point2> poly, Point2 p) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < poly.size(); ++i) {
    best = std::min(best, segment_distance(poly[i], poly[(i + 1) % poly.size()], p));
  }
  return best;
}

std::optional<std::string> rectilinear_violation(std::span<const Point2> poly) {
  const std::size_t n = poly.size();
  if (n < 4) return "fewer than 4 corners";
  if (n % 2 != 0) return "odd corner count";
  for (const Point2& p : poly) {
    if (!std::isfinite(p.x) || !std::isfinite(p.z)) return "non-finite corner coordinate";
  }
  bool first_vertical = false;
  for (std::size_t i = 0; i < n; ++i) {
    bool vertical = false;
    if (!is_axis_edge(poly[i], poly[(i + 1) % n], vertical)) {
      return "edge " + std::to_string(i) + " is not axis-aligned or has zero length";
    }
    if (i == 0) {
      first_vertical = vertical;
    } else if (vertical != (((i % 2) == 0) ? first_vertical : !first_vertical)) {
      return "edges " + std::to_string(i - 1) + " and " + std::to_string(i) + " do not alternate axes";
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 2; j < n; ++j) {
      if (i == 0 && j == n - 1) continue;  // adjacent through the wrap
      if (axis_segments_touch(poly[i], poly[(i + 1) % n], poly[j], poly[(j + 1) % n])) {
        return "edges " + std::to_string(i) + " and " + std::to_string(j) + " intersect";
      }
    }
  }
  return std::nullopt;
}

Polygon remove_collinear(std::span<const Point2> poly, double tol) {
  Polygon pts(poly.begin(), poly.end());
  bool changed = true;
  while (changed && pts.size() >= 3) {
    changed = false;
    for (std::size_t i = 0; i < pts.size() && pts.size() >= 3; ++i) {
      const std::size_t n = pts.size();
      const Point2& prev = pts[(i + n - 1) % n];
      const Point2& cur = pts[i];
      const Point2& next = pts[(i + 1) % n];
      const bool duplicate = std::abs(cur.x - prev.x) <= tol && std::abs(cur.z - prev.z) <= tol;
      const double cross = (cur.x - prev.x) * (next.z - cur.z) - (cur.z - prev.z) * (next.x - cur.x);
      if (duplicate || std::abs(cross) <= tol) {
        pts.erase(pts.begin() + static_cast<std::ptrdiff_t>(i));
        changed = true;
        --i;
      }
    }
  }
  return pts;
}

Polygon make_ccw(Polygon poly) {
  if (signed_area(poly) < 0) std::reverse(poly.begin(), poly.end());
  return poly;
}

BoundingBox bounding_box(std::span<const Point2> poly) {
  BoundingBox box{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
                  -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const Point2& p : poly) {
    box.min_x = std::min(box.min_x, p.x);
    box.min_z = std::min(box.min_z, p.z);
    box.max_x = std::max(box.max_x, p.x);
    box.max_z = std::max(box.max_z, p.z);
  }
  return box;
}

std::optional<BoundingBox> visibility_kernel(std::span<const Point2> poly) {
  BoundingBox k = bounding_box(poly);
  const double orient = signed_area(poly) >= 0 ? 1.0 : -1.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Point2& a = poly[i];
    const Point2& b = poly[(i + 1) % poly.size()];
    // Inner side is to the left of a->b for counter-clockwise loops.
    const double dx = (b.x - a.x) * orient, dz = (b.z - a.z) * orient;
    if (dx == 0.0 && dz != 0.0) {
      // Vertical edge x = a.x; left normal is (-dz, 0).
      if (dz > 0) k.max_x = std::min(k.max_x, a.x);
      else k.min_x = std::max(k.min_x, a.x);
    } else if (dz == 0.0 && dx != 0.0) {
      if (dx > 0) k.min_z = std::max(k.min_z, a.z);
      else k.max_z = std::min(k.max_z, a.z);
    } else {
      return std::nullopt;
    }
  }
  if (k.min_x >= k.max_x || k.min_z >= k.max_z) return std::nullopt;
  return k;
}

Point2 centroid(std::span<const Point2> poly) {
  double a = 0.0, cx = 0.0, cz = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Point2& p = poly[i];
    const Point2& q = poly[(i + 1) % poly.size()];
    const double cross = p.x * q.z - q.x * p.z;
    a += cross;
    cx += (p.x + q.x) * cross;
    cz += (p.z + q.z) * cross;
  }
  a *= 0.5;
  return {cx / (6.0 * a), cz / (6.0 * a)};
}

double ray_distance(std::span<const Point2> poly, double phi) {
  const double dx = std::sin(phi), dz = std::cos(phi);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Point2& a = poly[i];
    const Point2& b = poly[(i + 1) % poly.size()];
    if (a.x == b.x) {
      if (std::abs(dx) < 1e-15) continue;
      const double t = a.x / dx;
      if (t <= 0) continue;
      const double z = t * dz;
      if (z >= std::min(a.z, b.z) && z <= std::max(a.z, b.z)) best = std::min(best, t);
    } else if (a.z == b.z) {
      if (std::abs(dz) < 1e-15) continue;
      const double t = a.z / dz;
      if (t <= 0) continue;
      const double x = t * dx;
      if (x >= std::min(a.x, b.x) && x <= std::max(a.x, b.x)) best = std::min(best, t);
    }
  }
  return best;
}

}  // namespace panolayout
