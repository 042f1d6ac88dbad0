#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace panolayout {

/// Horizontal position on the ceiling plane in meters (x right, z forward
/// at longitude 0). Also used for pixel-space polygons (x = column, z = row).
struct Point2 {
  double x = 0.0;
  double z = 0.0;

  bool operator==(const Point2&) const = default;
};

using Polygon = std::vector<Point2>;

/// Positive for counter-clockwise loops in the (x, z) plane.
double signed_area(std::span<const Point2> poly);
double polygon_area(std::span<const Point2> poly);
double perimeter(std::span<const Point2> poly);

/// Crossing-number test with half-open edges: for a rectangle [a,b] x [c,d]
/// this classifies [a,b) x [c,d) as inside.
bool contains(std::span<const Point2> poly, Point2 p);
double distance_to_boundary(std::span<const Point2> poly, Point2 p);

/// Checks a corner loop is closed, axis-aligned, alternating, non-degenerate
/// and simple. Returns a description of the first violation found.
std::optional<std::string> rectilinear_violation(std::span<const Point2> poly);

/// Removes duplicate consecutive corners and corners lying on a straight run.
Polygon remove_collinear(std::span<const Point2> poly, double tol = 1e-12);

Polygon make_ccw(Polygon poly);

struct BoundingBox {
  double min_x = 0.0;
  double min_z = 0.0;
  double max_x = 0.0;
  double max_z = 0.0;
};
BoundingBox bounding_box(std::span<const Point2> poly);

/// Intersection of the inner half-planes of every edge (the region that sees
/// the whole polygon). For rectilinear loops this is an axis-aligned box.
std::optional<BoundingBox> visibility_kernel(std::span<const Point2> poly);

/// Area centroid.
Point2 centroid(std::span<const Point2> poly);

/// Distance from the origin along azimuth phi (direction (sin phi, cos phi))
/// to the first edge crossed. Infinity if none is hit.
double ray_distance(std::span<const Point2> poly, double phi);

}  // namespace panolayout
