#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "panolayout/geometry.hpp"
#include "panolayout/layout.hpp"
#include "panolayout/raster.hpp"

namespace panolayout {

struct FitOptions {
  double simplify_ratio = 0.01;  // Douglas-Peucker tolerance, fraction of the bounding-rect diagonal
  double cluster_ratio = 0.05;   // line merge distance, fraction of the bounding-rect diagonal
};

using BinaryMask = Raster<std::uint8_t, PerspectiveTag>;

/// Half-open pixel rectangle [x0, x1) x [y0, y1); its edges double as
/// pixel-edge coordinates.
struct PixelRect {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;

  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
  double diagonal() const;
  bool operator==(const PixelRect&) const = default;
};

struct SplitMaps {
  PerspectiveMap ceiling;
  PerspectiveMap floor;
};

struct SelectedRegion {
  BinaryMask mask;
  PixelRect rect;
  int pixel_count = 0;
};

/// Clustered axis-aligned lines in pixel-edge coordinates (xs: vertical
/// lines, ys: horizontal lines), strictly increasing, rect edges included.
struct AxisLineSet {
  std::vector<double> xs;
  std::vector<double> ys;
  PixelRect rect;
};

struct GridCell {
  int i = 0;  // column index between xs[i] and xs[i + 1]
  int j = 0;  // row index between ys[j] and ys[j + 1]
  int pixels = 0;
  int covered = 0;
  double ratio = 0.0;
  bool include = false;
};

struct CellGrid {
  AxisLineSet lines;
  std::vector<GridCell> cells;  // cells without any pixel are dropped

  int columns() const { return static_cast<int>(lines.xs.size()) - 1; }
  int rows() const { return static_cast<int>(lines.ys.size()) - 1; }
};

SplitMaps split_fc(const EquirectMap& fc, double height_m, const CeilingViewFrame& frame);
PerspectiveMap fuse(const PerspectiveMap& fp, const PerspectiveMap& ceiling, const PerspectiveMap& floor);
SelectedRegion binarize_and_select(const PerspectiveMap& fused);

/// Outer crack boundary (pixel-corner vertices, straight runs collapsed) of
/// the foreground, treating diagonal neighbours as connected.
Polygon trace_outer_boundary(const BinaryMask& mask);
/// Douglas-Peucker on a closed loop.
Polygon simplify_closed(const Polygon& loop, double tolerance);
Polygon trace_and_simplify(const BinaryMask& mask, const PixelRect& rect, const FitOptions& opts = {});

AxisLineSet regress_and_cluster(const Polygon& polyline, const PixelRect& rect, const FitOptions& opts = {});
CellGrid vote_cells(const BinaryMask& mask, const AxisLineSet& lines);
ManhattanLayout cells_to_layout(const CellGrid& grid, const CeilingViewFrame& frame, double height_m);

/// Every intermediate product of one fit, for debugging and snap targets.
struct FitTrace {
  PerspectiveMap fused;
  SelectedRegion region;
  Polygon dense_loop;
  Polygon simplified;
  AxisLineSet lines;
  CellGrid grid;
  ManhattanLayout layout;
};

ManhattanLayout fit(const PerspectiveMap& fp, const EquirectMap& fc, double height_m, const CeilingViewFrame& frame,
                    const FitOptions& opts = {});
ManhattanLayout fit_fused(const PerspectiveMap& fused, double height_m, const CeilingViewFrame& frame,
                          const FitOptions& opts = {});
FitTrace fit_traced(const PerspectiveMap& fused, double height_m, const CeilingViewFrame& frame,
                    const FitOptions& opts = {});

/// Stage dumps: fused map, selected mask, traced polyline, clustered lines, voted cells.
void write_fit_debug(const std::filesystem::path& dir, const FitTrace& trace);

/// Line set converted to meters (x: vertical walls, z: horizontal walls).
struct MetricLines {
  std::vector<double> xs;
  std::vector<double> zs;
};
MetricLines lines_to_metric(const AxisLineSet& lines, const CeilingViewFrame& frame);

}  // namespace panolayout
