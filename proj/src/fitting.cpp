#include "panolayout/fitting.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <limits>

#include "panolayout/image_io.hpp"
#include "panolayout/projection.hpp"

namespace panolayout {

double PixelRect::diagonal() const { return std::hypot(static_cast<double>(width()), static_cast<double>(height())); }

namespace {

void require_same_shape(const PerspectiveMap& a, const PerspectiveMap& b, const char* what) {
  if (!a.same_shape(b)) throw DimensionError(std::string("map dimension mismatch: ") + what);
}

// Bilinear sample with zero outside the image (single channel).
float sample_zero_padded(const PerspectiveMap& img, double px, double py) {
  const double x0f = std::floor(px), y0f = std::floor(py);
  const double fx = px - x0f, fy = py - y0f;
  const int x0 = static_cast<int>(x0f), y0 = static_cast<int>(y0f);
  auto tap = [&](int x, int y) -> double {
    if (x < 0 || y < 0 || x >= img.width() || y >= img.height()) return 0.0;
    return img.at(x, y);
  };
  return static_cast<float>((1 - fx) * (1 - fy) * tap(x0, y0) + fx * (1 - fy) * tap(x0 + 1, y0) +
                            (1 - fx) * fy * tap(x0, y0 + 1) + fx * fy * tap(x0 + 1, y0 + 1));
}

PerspectiveMap scale_about_center(const PerspectiveMap& img, double scale) {
  PerspectiveMap out(img.width(), img.height(), 1);
  const double cx = 0.5 * img.width(), cy = 0.5 * img.height();
  for (int row = 0; row < img.height(); ++row) {
    for (int col = 0; col < img.width(); ++col) {
      const double sx = (col + 0.5 - cx) * scale + cx - 0.5;
      const double sy = (row + 0.5 - cy) * scale + cy - 0.5;
      out.at(col, row) = sample_zero_padded(img, sx, sy);
    }
  }
  return out;
}

struct Step {
  int dx;
  int dy;
};
// Clockwise on screen (y down): E, S, W, N.
constexpr std::array<Step, 4> kDirs{{{1, 0}, {0, 1}, {-1, 0}, {0, -1}}};

// Pixel occupying the quadrant at vertex (vx, vy) spanned by directions a, b.
std::pair<int, int> quadrant_pixel(int vx, int vy, Step a, Step b) {
  return {vx + std::min(a.dx, 0) + std::min(b.dx, 0), vy + std::min(a.dy, 0) + std::min(b.dy, 0)};
}

// Crack-following outer boundary of the component containing the first
// foreground cell in scan order. Interior stays on the right of travel.
template <typename Pred>
Polygon trace_crack_loop(int width, int height, Pred fg, bool diagonal_connects) {
  int sx = -1, sy = -1;
  for (int y = 0; y < height && sx < 0; ++y) {
    for (int x = 0; x < width; ++x) {
      if (fg(x, y)) {
        sx = x;
        sy = y;
        break;
      }
    }
  }
  if (sx < 0) return {};
  auto is_fg = [&](std::pair<int, int> p) {
    return p.first >= 0 && p.second >= 0 && p.first < width && p.second < height && fg(p.first, p.second);
  };
  Polygon verts;
  int vx = sx, vy = sy, dir = 0;
  const int start_x = vx, start_y = vy, start_dir = dir;
  const std::size_t guard = 4 * (static_cast<std::size_t>(width) + 1) * (height + 1) + 8;
  for (std::size_t iter = 0; iter < guard; ++iter) {
    verts.push_back({static_cast<double>(vx), static_cast<double>(vy)});
    vx += kDirs[dir].dx;
    vy += kDirs[dir].dy;
    const Step d = kDirs[dir];
    const Step r = kDirs[(dir + 1) % 4];
    const Step l = kDirs[(dir + 3) % 4];
    const bool ahead_left = is_fg(quadrant_pixel(vx, vy, d, l));
    const bool ahead_right = is_fg(quadrant_pixel(vx, vy, d, r));
    if (ahead_left && (ahead_right || diagonal_connects)) {
      dir = (dir + 3) % 4;
    } else if (ahead_right) {
      // straight
    } else {
      dir = (dir + 1) % 4;
    }
    if (vx == start_x && vy == start_y && dir == start_dir) break;
  }
  return remove_collinear(verts);
}

double point_segment_distance(const Point2& p, const Point2& a, const Point2& b) {
  const double dx = b.x - a.x, dz = b.z - a.z;
  const double len2 = dx * dx + dz * dz;
  if (len2 == 0) return std::hypot(p.x - a.x, p.z - a.z);
  const double t = std::clamp(((p.x - a.x) * dx + (p.z - a.z) * dz) / len2, 0.0, 1.0);
  return std::hypot(a.x + t * dx - p.x, a.z + t * dz - p.z);
}

void douglas_peucker(const Polygon& pts, std::size_t first, std::size_t last, double tol, std::vector<bool>& keep) {
  if (last <= first + 1) return;
  double best = -1.0;
  std::size_t best_i = first;
  for (std::size_t i = first + 1; i < last; ++i) {
    const double d = point_segment_distance(pts[i], pts[first], pts[last]);
    if (d > best) {
      best = d;
      best_i = i;
    }
  }
  if (best > tol) {
    keep[best_i] = true;
    douglas_peucker(pts, first, best_i, tol, keep);
    douglas_peucker(pts, best_i, last, tol, keep);
  }
}

struct WeightedCoord {
  double value;
  double weight;
};

std::vector<double> cluster_coords(std::vector<WeightedCoord> items, double merge_dist) {
  std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) { return a.value < b.value; });
  while (items.size() > 1) {
    std::size_t best = 0;
    double best_gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < items.size(); ++i) {
      const double gap = items[i + 1].value - items[i].value;
      if (gap < best_gap) {
        best_gap = gap;
        best = i;
      }
    }
    if (!(best_gap < merge_dist)) break;
    const WeightedCoord& a = items[best];
    const WeightedCoord& b = items[best + 1];
    const double w = a.weight + b.weight;
    const WeightedCoord merged{(a.value * a.weight + b.value * b.weight) / w, w};
    items[best] = merged;
    items.erase(items.begin() + static_cast<std::ptrdiff_t>(best) + 1);
  }
  std::vector<double> out;
  out.reserve(items.size());
  for (const auto& it : items) out.push_back(it.value);
  return out;
}

std::vector<double> with_rect_edges(const std::vector<double>& clusters, int lo, int hi) {
  std::vector<double> out{static_cast<double>(lo)};
  for (double c : clusters) {
    // A cluster within one pixel of a rect edge duplicates that edge.
    if (c >= lo + 1.0 && c <= hi - 1.0) out.push_back(c);
  }
  out.push_back(static_cast<double>(hi));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// First pixel index whose center lies at or right of coordinate c.
int first_center_at_or_after(double c) { return static_cast<int>(std::ceil(c - 0.5)); }

}  // namespace

SplitMaps split_fc(const EquirectMap& fc, double height_m, const CeilingViewFrame& frame) {
  const double scale = floor_registration_scale(height_m);
  if (fc.channels() != 1) throw DimensionError("floor-ceiling map must have one channel");
  if (fc.height() <= 0 || fc.width() != 2 * fc.height()) {
    throw DimensionError("floor-ceiling map width must be twice its height");
  }
  const double fov = frame.fov_deg();
  const int horizon = fc.height() / 2;
  EquirectMap ceiling_half = fc;
  EquirectMap floor_half = fc;
  for (int row = 0; row < fc.height(); ++row) {
    for (int col = 0; col < fc.width(); ++col) {
      if (row >= horizon) ceiling_half.at(col, row) = 0.0f;
      if (row < horizon) floor_half.at(col, row) = 0.0f;
    }
  }
  SplitMaps out;
  out.ceiling = e2p(ceiling_half, {fov, frame.w, ViewDirection::Up});
  PerspectiveMap floor_view = mirror_rows(e2p(floor_half, {fov, frame.w, ViewDirection::Down}));
  out.floor = scale == 1.0 ? std::move(floor_view) : scale_about_center(floor_view, scale);
  return out;
}

PerspectiveMap fuse(const PerspectiveMap& fp, const PerspectiveMap& ceiling, const PerspectiveMap& floor) {
  require_same_shape(fp, ceiling, "floor plan vs ceiling map");
  require_same_shape(fp, floor, "floor plan vs floor map");
  PerspectiveMap out(fp.width(), fp.height(), fp.channels());
  for (std::size_t i = 0; i < out.data().size(); ++i) {
    // Accumulate in double so the only rounding is the final one.
    out.data()[i] = static_cast<float>(0.5 * fp.data()[i] + 0.25 * ceiling.data()[i] + 0.25 * floor.data()[i]);
  }
  return out;
}

SelectedRegion binarize_and_select(const PerspectiveMap& fused) {
  const int w = fused.width(), h = fused.height();
  std::vector<int> label(static_cast<std::size_t>(w) * h, -1);
  int best_label = -1, best_size = 0, next_label = 0;
  std::vector<int> queue;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t idx = static_cast<std::size_t>(y) * w + x;
      if (!(fused.at(x, y) > 0.5f) || label[idx] >= 0) continue;
      const int lab = next_label++;
      int size = 0;
      queue.assign(1, static_cast<int>(idx));
      label[idx] = lab;
      while (!queue.empty()) {
        const int cur = queue.back();
        queue.pop_back();
        ++size;
        const int cx = cur % w, cy = cur / w;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = cx + dx, ny = cy + dy;
            if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
            const std::size_t n = static_cast<std::size_t>(ny) * w + nx;
            if (label[n] < 0 && fused.at(nx, ny) > 0.5f) {
              label[n] = lab;
              queue.push_back(static_cast<int>(n));
            }
          }
        }
      }
      if (size > best_size) {
        best_size = size;
        best_label = lab;
      }
    }
  }
  if (best_label < 0) throw EmptyMaskError("empty mask: no fused probability exceeds 0.5");
  SelectedRegion region{BinaryMask(w, h, 1), {w, h, 0, 0}, best_size};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (label[static_cast<std::size_t>(y) * w + x] != best_label) continue;
      region.mask.at(x, y) = 1;
      region.rect.x0 = std::min(region.rect.x0, x);
      region.rect.y0 = std::min(region.rect.y0, y);
      region.rect.x1 = std::max(region.rect.x1, x + 1);
      region.rect.y1 = std::max(region.rect.y1, y + 1);
    }
  }
  return region;
}

Polygon trace_outer_boundary(const BinaryMask& mask) {
  return make_ccw(trace_crack_loop(
      mask.width(), mask.height(), [&](int x, int y) { return mask.at(x, y) != 0; }, true));
}

Polygon simplify_closed(const Polygon& loop, double tolerance) {
  const std::size_t n = loop.size();
  if (n <= 3) return loop;
  // Split the loop at vertex 0 and the vertex farthest from it.
  std::size_t far = 0;
  double far_d = -1.0;
  for (std::size_t i = 1; i < n; ++i) {
    const double d = std::hypot(loop[i].x - loop[0].x, loop[i].z - loop[0].z);
    if (d > far_d) {
      far_d = d;
      far = i;
    }
  }
  Polygon closed(loop.begin(), loop.end());
  closed.push_back(loop[0]);
  std::vector<bool> keep(closed.size(), false);
  keep[0] = keep[far] = keep[n] = true;
  douglas_peucker(closed, 0, far, tolerance, keep);
  douglas_peucker(closed, far, n, tolerance, keep);
  Polygon out;
  for (std::size_t i = 0; i < n; ++i) {
    if (keep[i]) out.push_back(closed[i]);
  }
  return out;
}

Polygon trace_and_simplify(const BinaryMask& mask, const PixelRect& rect, const FitOptions& opts) {
  if (rect.width() < 2 || rect.height() < 2) {
    throw DegenerateGeometryError("degenerate region: component is thinner than 2 px");
  }
  const Polygon dense = trace_outer_boundary(mask);
  Polygon simplified = make_ccw(remove_collinear(simplify_closed(dense, opts.simplify_ratio * rect.diagonal())));
  if (simplified.size() < 4) {
    throw DegenerateGeometryError("degenerate region: simplified boundary has fewer than 4 vertices");
  }
  return simplified;
}

AxisLineSet regress_and_cluster(const Polygon& polyline, const PixelRect& rect, const FitOptions& opts) {
  if (polyline.size() < 4) throw DegenerateGeometryError("degenerate polyline: fewer than 4 vertices");
  std::vector<WeightedCoord> vertical, horizontal;
  for (std::size_t i = 0; i < polyline.size(); ++i) {
    const Point2& a = polyline[i];
    const Point2& b = polyline[(i + 1) % polyline.size()];
    const double dx = b.x - a.x, dy = b.z - a.z;
    const double len = std::hypot(dx, dy);
    if (len == 0.0) continue;
    // Along a straight edge the length-weighted mean perpendicular coordinate is the midpoint's.
    if (std::abs(dx) >= std::abs(dy)) {
      horizontal.push_back({0.5 * (a.z + b.z), len});
    } else {
      vertical.push_back({0.5 * (a.x + b.x), len});
    }
  }
  if (vertical.size() < 2 || horizontal.size() < 2) {
    throw DegenerateGeometryError("degenerate polyline: fewer than two lines per axis");
  }
  const double merge = std::max(opts.cluster_ratio * rect.diagonal(), 1.0);
  AxisLineSet lines;
  lines.rect = rect;
  lines.xs = with_rect_edges(cluster_coords(std::move(vertical), merge), rect.x0, rect.x1);
  lines.ys = with_rect_edges(cluster_coords(std::move(horizontal), merge), rect.y0, rect.y1);
  return lines;
}

CellGrid vote_cells(const BinaryMask& mask, const AxisLineSet& lines) {
  if (lines.xs.size() < 2 || lines.ys.size() < 2) throw DegenerateGeometryError("line set needs two lines per axis");
  const int w = mask.width(), h = mask.height();
  // Summed-area table with a zero border.
  std::vector<int> sat(static_cast<std::size_t>(w + 1) * (h + 1), 0);
  auto S = [&](int x, int y) -> int& { return sat[static_cast<std::size_t>(y) * (w + 1) + x]; };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) S(x + 1, y + 1) = S(x, y + 1) + S(x + 1, y) - S(x, y) + (mask.at(x, y) ? 1 : 0);
  }
  CellGrid grid;
  grid.lines = lines;
  for (std::size_t j = 0; j + 1 < lines.ys.size(); ++j) {
    const int r0 = std::clamp(first_center_at_or_after(lines.ys[j]), 0, h);
    const int r1 = std::clamp(first_center_at_or_after(lines.ys[j + 1]), 0, h);
    for (std::size_t i = 0; i + 1 < lines.xs.size(); ++i) {
      const int c0 = std::clamp(first_center_at_or_after(lines.xs[i]), 0, w);
      const int c1 = std::clamp(first_center_at_or_after(lines.xs[i + 1]), 0, w);
      const int pixels = std::max(0, c1 - c0) * std::max(0, r1 - r0);
      if (pixels == 0) continue;
      const int covered = S(c1, r1) - S(c0, r1) - S(c1, r0) + S(c0, r0);
      GridCell cell{static_cast<int>(i), static_cast<int>(j), pixels, covered,
                    static_cast<double>(covered) / pixels, false};
      cell.include = cell.ratio > 0.5;
      grid.cells.push_back(cell);
    }
  }
  return grid;
}

ManhattanLayout cells_to_layout(const CellGrid& grid, const CeilingViewFrame& frame, double height_m) {
  const int nx = grid.columns(), ny = grid.rows();
  if (nx <= 0 || ny <= 0) throw DegenerateGeometryError("empty cell grid");
  std::vector<std::uint8_t> inc(static_cast<std::size_t>(nx) * ny, 0);
  std::vector<double> ratio(inc.size(), 0.0);
  auto at = [&](int i, int j) -> std::uint8_t& { return inc[static_cast<std::size_t>(j) * nx + i]; };
  for (const GridCell& c : grid.cells) {
    at(c.i, c.j) = c.include ? 1 : 0;
    ratio[static_cast<std::size_t>(c.j) * nx + c.i] = c.ratio;
  }
  auto in_grid = [&](int i, int j) { return i >= 0 && j >= 0 && i < nx && j < ny; };
  auto fg = [&](int i, int j) { return in_grid(i, j) && at(i, j) != 0; };

  // One 4-connected region.
  {
    std::vector<std::uint8_t> seen(inc.size(), 0);
    int components = 0;
    for (int j = 0; j < ny; ++j) {
      for (int i = 0; i < nx; ++i) {
        if (!fg(i, j) || seen[static_cast<std::size_t>(j) * nx + i]) continue;
        ++components;
        std::vector<std::pair<int, int>> stack{{i, j}};
        seen[static_cast<std::size_t>(j) * nx + i] = 1;
        while (!stack.empty()) {
          auto [ci, cj] = stack.back();
          stack.pop_back();
          const std::array<std::pair<int, int>, 4> nbrs{{{ci + 1, cj}, {ci - 1, cj}, {ci, cj + 1}, {ci, cj - 1}}};
          for (auto [ni, nj] : nbrs) {
            if (fg(ni, nj) && !seen[static_cast<std::size_t>(nj) * nx + ni]) {
              seen[static_cast<std::size_t>(nj) * nx + ni] = 1;
              stack.push_back({ni, nj});
            }
          }
        }
      }
    }
    if (components == 0) throw DegenerateGeometryError("no grid cell is more than half covered");
    if (components > 1) throw DisconnectedUnionError("included grid cells form more than one region");
  }

  // Close diagonal pinch points and enclosed holes so the outer boundary is simple.
  for (bool changed = true; changed;) {
    changed = false;
    // Background reachable from outside the grid through 8-neighbours.
    std::vector<std::uint8_t> outside(static_cast<std::size_t>(nx + 2) * (ny + 2), 0);
    auto out_at = [&](int i, int j) -> std::uint8_t& { return outside[static_cast<std::size_t>(j + 1) * (nx + 2) + i + 1]; };
    std::vector<std::pair<int, int>> stack{{-1, -1}};
    out_at(-1, -1) = 1;
    while (!stack.empty()) {
      auto [ci, cj] = stack.back();
      stack.pop_back();
      for (int dj = -1; dj <= 1; ++dj) {
        for (int di = -1; di <= 1; ++di) {
          const int ni = ci + di, nj = cj + dj;
          if (ni < -1 || nj < -1 || ni > nx || nj > ny) continue;
          if (fg(ni, nj) || out_at(ni, nj)) continue;
          out_at(ni, nj) = 1;
          stack.push_back({ni, nj});
        }
      }
    }
    for (int j = 0; j < ny; ++j) {
      for (int i = 0; i < nx; ++i) {
        if (!fg(i, j) && !out_at(i, j)) {
          at(i, j) = 1;
          changed = true;
        }
      }
    }
    for (int j = 0; j + 1 < ny && !changed; ++j) {
      for (int i = 0; i + 1 < nx && !changed; ++i) {
        const bool a = fg(i, j), b = fg(i + 1, j), c = fg(i, j + 1), d = fg(i + 1, j + 1);
        std::pair<int, int> p{-1, -1}, q{-1, -1};
        if (a && d && !b && !c) {
          p = {i + 1, j};
          q = {i, j + 1};
        } else if (b && c && !a && !d) {
          p = {i, j};
          q = {i + 1, j + 1};
        } else {
          continue;
        }
        const double rp = ratio[static_cast<std::size_t>(p.second) * nx + p.first];
        const double rq = ratio[static_cast<std::size_t>(q.second) * nx + q.first];
        const auto pick = rq > rp ? q : p;
        at(pick.first, pick.second) = 1;
        changed = true;
      }
    }
  }

  const Polygon index_loop = trace_crack_loop(nx, ny, fg, false);
  Polygon corners;
  corners.reserve(index_loop.size());
  for (const Point2& v : index_loop) {
    const auto i = static_cast<std::size_t>(v.x);
    const auto j = static_cast<std::size_t>(v.z);
    corners.push_back(frame.edge_to_metric(grid.lines.xs[i], grid.lines.ys[j]));
  }
  ManhattanLayout layout{make_ccw(remove_collinear(corners)), height_m, kCameraToCeiling};
  const Point2 origin{0.0, 0.0};
  if (!contains(layout.corners, origin) || distance_to_boundary(layout.corners, origin) <= 1e-9) {
    throw CameraOutsideError("fitted floor plan does not contain the camera");
  }
  if (auto v = layout_violation(layout)) throw DegenerateGeometryError("fitted floor plan is invalid: " + *v);
  return layout;
}

FitTrace fit_traced(const PerspectiveMap& fused, double height_m, const CeilingViewFrame& frame,
                    const FitOptions& opts) {
  (void)floor_registration_scale(height_m);
  if (fused.width() != frame.w || fused.height() != frame.w) {
    throw DimensionError("fused map does not match the ceiling-view frame");
  }
  FitTrace t;
  t.fused = fused;
  t.region = binarize_and_select(fused);
  if (t.region.rect.width() < 2 || t.region.rect.height() < 2) {
    throw DegenerateGeometryError("degenerate region: component is thinner than 2 px");
  }
  t.dense_loop = trace_outer_boundary(t.region.mask);
  t.simplified = trace_and_simplify(t.region.mask, t.region.rect, opts);
  t.lines = regress_and_cluster(t.simplified, t.region.rect, opts);
  t.grid = vote_cells(t.region.mask, t.lines);
  t.layout = cells_to_layout(t.grid, frame, height_m);
  return t;
}

ManhattanLayout fit_fused(const PerspectiveMap& fused, double height_m, const CeilingViewFrame& frame,
                          const FitOptions& opts) {
  (void)floor_registration_scale(height_m);
  if (fused.width() != frame.w || fused.height() != frame.w) {
    throw DimensionError("fused map does not match the ceiling-view frame");
  }
  const SelectedRegion region = binarize_and_select(fused);
  const Polygon simplified = trace_and_simplify(region.mask, region.rect, opts);
  const AxisLineSet lines = regress_and_cluster(simplified, region.rect, opts);
  return cells_to_layout(vote_cells(region.mask, lines), frame, height_m);
}

ManhattanLayout fit(const PerspectiveMap& fp, const EquirectMap& fc, double height_m, const CeilingViewFrame& frame,
                    const FitOptions& opts) {
  if (fp.width() != frame.w || fp.height() != frame.w) {
    throw DimensionError("floor plan map does not match the ceiling-view frame");
  }
  const SplitMaps split = split_fc(fc, height_m, frame);
  return fit_fused(fuse(fp, split.ceiling, split.floor), height_m, frame, opts);
}

MetricLines lines_to_metric(const AxisLineSet& lines, const CeilingViewFrame& frame) {
  MetricLines out;
  for (double x : lines.xs) out.xs.push_back(frame.edge_to_metric(x, 0.0).x);
  for (double y : lines.ys) out.zs.push_back(frame.edge_to_metric(0.0, y).z);
  return out;
}

namespace {

struct Canvas {
  Image8 img;
  Canvas(int w, int h) : img{w, h, 3, std::vector<std::uint8_t>(static_cast<std::size_t>(w) * h * 3, 0)} {}
  void set(int x, int y, std::array<std::uint8_t, 3> rgb) {
    if (x < 0 || y < 0 || x >= img.width || y >= img.height) return;
    const std::size_t base = (static_cast<std::size_t>(y) * img.width + x) * 3;
    for (int c = 0; c < 3; ++c) img.pixels[base + c] = rgb[c];
  }
  void line(double x0, double y0, double x1, double y1, std::array<std::uint8_t, 3> rgb) {
    const int steps = static_cast<int>(std::ceil(std::max(std::abs(x1 - x0), std::abs(y1 - y0)))) + 1;
    for (int s = 0; s <= steps; ++s) {
      const double t = static_cast<double>(s) / steps;
      set(static_cast<int>(std::floor(x0 + t * (x1 - x0))), static_cast<int>(std::floor(y0 + t * (y1 - y0))), rgb);
    }
  }
};

Canvas mask_canvas(const BinaryMask& mask, std::uint8_t on) {
  Canvas c(mask.width(), mask.height());
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (mask.at(x, y)) c.set(x, y, {on, on, on});
    }
  }
  return c;
}

}  // namespace

void write_fit_debug(const std::filesystem::path& dir, const FitTrace& trace) {
  std::filesystem::create_directories(dir);
  write_png(dir / "a_fused.png", to_image8(trace.fused));
  write_png(dir / "a_mask.png", mask_canvas(trace.region.mask, 255).img);

  Canvas poly = mask_canvas(trace.region.mask, 90);
  for (std::size_t i = 0; i < trace.simplified.size(); ++i) {
    const Point2& a = trace.simplified[i];
    const Point2& b = trace.simplified[(i + 1) % trace.simplified.size()];
    poly.line(a.x, a.z, b.x, b.z, {255, 64, 64});
  }
  write_png(dir / "b_polyline.png", poly.img);

  Canvas lines = mask_canvas(trace.region.mask, 90);
  const PixelRect& r = trace.lines.rect;
  for (double x : trace.lines.xs) lines.line(x, r.y0, x, r.y1, {64, 200, 255});
  for (double y : trace.lines.ys) lines.line(r.x0, y, r.x1, y, {64, 200, 255});
  write_png(dir / "c_lines.png", lines.img);

  Canvas cells = mask_canvas(trace.region.mask, 60);
  for (const GridCell& cell : trace.grid.cells) {
    if (!cell.include) continue;
    const int c0 = static_cast<int>(std::ceil(trace.lines.xs[cell.i] - 0.5));
    const int c1 = static_cast<int>(std::ceil(trace.lines.xs[cell.i + 1] - 0.5));
    const int r0 = static_cast<int>(std::ceil(trace.lines.ys[cell.j] - 0.5));
    const int r1 = static_cast<int>(std::ceil(trace.lines.ys[cell.j + 1] - 0.5));
    for (int y = r0; y < r1; ++y) {
      for (int x = c0; x < c1; ++x) cells.set(x, y, {80, 220, 120});
    }
  }
  write_png(dir / "d_cells.png", cells.img);
}

}  // namespace panolayout
