#include "panolayout/metrics.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <thread>

namespace panolayout {

namespace {

std::vector<double> sorted_unique(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

struct Areas {
  double a = 0.0;
  double b = 0.0;
  double both = 0.0;
};

Areas induced_grid_areas(const Polygon& pa, const Polygon& pb) {
  std::vector<double> xs, zs;
  for (const auto* poly : {&pa, &pb}) {
    for (const Point2& p : *poly) {
      xs.push_back(p.x);
      zs.push_back(p.z);
    }
  }
  xs = sorted_unique(std::move(xs));
  zs = sorted_unique(std::move(zs));
  Areas out;
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    for (std::size_t j = 0; j + 1 < zs.size(); ++j) {
      // Cell membership is constant across an induced cell; test its center.
      const Point2 c{0.5 * (xs[i] + xs[i + 1]), 0.5 * (zs[j] + zs[j + 1])};
      const double area = (xs[i + 1] - xs[i]) * (zs[j + 1] - zs[j]);
      const bool in_a = contains(pa, c);
      const bool in_b = contains(pb, c);
      if (in_a) out.a += area;
      if (in_b) out.b += area;
      if (in_a && in_b) out.both += area;
    }
  }
  return out;
}

}  // namespace

double intersection_area(const Polygon& a, const Polygon& b) { return induced_grid_areas(a, b).both; }

double iou2d(const ManhattanLayout& a, const ManhattanLayout& b) {
  validate_layout(a);
  validate_layout(b);
  const Areas ar = induced_grid_areas(a.corners, b.corners);
  const double uni = ar.a + ar.b - ar.both;
  return uni > 0 ? ar.both / uni : 0.0;
}

double iou3d(const ManhattanLayout& a, const ManhattanLayout& b) {
  validate_layout(a);
  validate_layout(b);
  const Areas ar = induced_grid_areas(a.corners, b.corners);
  const double inter = ar.both * std::min(a.height_m, b.height_m);
  const double uni = ar.a * a.height_m + ar.b * b.height_m - inter;
  return uni > 0 ? inter / uni : 0.0;
}

std::string corner_class(std::size_t corner_count) {
  if (corner_count >= 10) return "10+";
  return std::to_string(corner_count);
}

const ClassSummary* EvalReport::find(const std::string& cls) const {
  for (const auto& c : classes) {
    if (c.corner_class == cls) return &c;
  }
  return nullptr;
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const double pos = q * (values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - lo) * (values[hi] - values[lo]);
}

EvalReport summarize(std::vector<EvalRecord> records) {
  EvalReport report;
  report.records = std::move(records);
  const std::vector<std::string> order{"4", "6", "8", "10+", "overall"};
  for (const auto& cls : order) {
    ClassSummary s{cls};
    for (const auto& r : report.records) {
      if (cls != "overall" && r.corner_class != cls) continue;
      ++s.count;
      if (!r.ok) ++s.failures;
      s.mean_iou2d += r.iou2d;
      s.mean_iou3d += r.iou3d;
      s.corner_accuracy += r.corner_match ? 1.0 : 0.0;
    }
    if (s.count > 0) {
      s.mean_iou2d /= s.count;
      s.mean_iou3d /= s.count;
      s.corner_accuracy /= s.count;
    }
    if (s.count > 0 || cls == "overall") report.classes.push_back(s);
  }
  std::vector<double> times;
  for (const auto& r : report.records) {
    if (r.ok) times.push_back(r.fit_time_s * 1000.0);
  }
  report.p50_fit_ms = percentile(times, 0.5);
  report.p90_fit_ms = percentile(times, 0.9);
  return report;
}

EvalReport evaluate(const std::vector<EvalItem>& items, const Predictor& predictor, int threads) {
  return evaluate(
      items,
      TimedPredictor([&predictor](const EvalItem& item, double& fit_seconds) {
        const auto start = std::chrono::steady_clock::now();
        ManhattanLayout pred = predictor(item);
        fit_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        return pred;
      }),
      threads);
}

EvalReport evaluate(const std::vector<EvalItem>& items, const TimedPredictor& predictor, int threads) {
  std::vector<EvalRecord> records(items.size());
  auto run_one = [&](std::size_t i) {
    const EvalItem& item = items[i];
    EvalRecord& rec = records[i];
    rec.id = item.id;
    rec.corner_class = corner_class(item.ground_truth.corners.size());
    try {
      const ManhattanLayout pred = predictor(item, rec.fit_time_s);
      rec.iou2d = iou2d(pred, item.ground_truth);
      rec.iou3d = iou3d(pred, item.ground_truth);
      rec.corner_match = pred.corners.size() == item.ground_truth.corners.size();
      rec.ok = true;
    } catch (const std::exception& e) {
      rec.ok = false;
      rec.error = e.what();
    }
  };
  const int n_threads = std::max(1, std::min<int>(threads, static_cast<int>(items.size())));
  if (n_threads <= 1) {
    for (std::size_t i = 0; i < items.size(); ++i) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (int t = 0; t < n_threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < items.size(); i = next++) run_one(i);
      });
    }
  }
  return summarize(std::move(records));
}

void write_csv(std::ostream& out, const EvalReport& report) {
  out << "id,corner_class,iou2d,iou3d,corner_match,fit_time_ms\n";
  out << std::setprecision(6) << std::fixed;
  for (const auto& r : report.records) {
    out << r.id << ',' << r.corner_class << ',' << r.iou2d << ',' << r.iou3d << ',' << (r.corner_match ? 1 : 0)
        << ',' << r.fit_time_s * 1000.0 << '\n';
  }
}

void write_table(std::ostream& out, const EvalReport& report) {
  out << std::left << std::setw(9) << "corners" << std::right << std::setw(7) << "count" << std::setw(10)
      << "2D IoU" << std::setw(10) << "3D IoU" << std::setw(10) << "corner%" << std::setw(10) << "failed" << '\n';
  out << std::fixed << std::setprecision(4);
  for (const auto& c : report.classes) {
    out << std::left << std::setw(9) << c.corner_class << std::right << std::setw(7) << c.count << std::setw(10)
        << c.mean_iou2d << std::setw(10) << c.mean_iou3d << std::setw(10) << c.corner_accuracy * 100.0
        << std::setw(10) << c.failures << '\n';
  }
  out << std::setprecision(2) << "fit time p50 " << report.p50_fit_ms << " ms, p90 " << report.p90_fit_ms
      << " ms\n";
}

}  // namespace panolayout
