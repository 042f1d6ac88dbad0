#pragma once

#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "panolayout/layout.hpp"

namespace panolayout {

/// Exact footprint IoU via decomposition on the grid induced by all corner
/// coordinates of both layouts.
double iou2d(const ManhattanLayout& a, const ManhattanLayout& b);
/// Prism IoU with both prisms hanging from the shared ceiling plane.
double iou3d(const ManhattanLayout& a, const ManhattanLayout& b);
/// Intersection area of two rectilinear footprints (same decomposition).
double intersection_area(const Polygon& a, const Polygon& b);

/// Corner classes used for reporting: "4", "6", "8", "10+".
std::string corner_class(std::size_t corner_count);

struct EvalRecord {
  std::string id;
  std::string corner_class;
  double iou2d = 0.0;
  double iou3d = 0.0;
  bool corner_match = false;
  double fit_time_s = 0.0;
  bool ok = false;
  std::string error;
};

struct EvalItem {
  std::string id;
  ManhattanLayout ground_truth;
};

/// A predictor returns the predicted layout for an item or throws; the
/// evaluator times each call and records failures without aborting.
using Predictor = std::function<ManhattanLayout(const EvalItem&)>;

struct ClassSummary {
  std::string corner_class;
  std::size_t count = 0;
  std::size_t failures = 0;
  double mean_iou2d = 0.0;
  double mean_iou3d = 0.0;
  double corner_accuracy = 0.0;
};

struct EvalReport {
  std::vector<EvalRecord> records;
  std::vector<ClassSummary> classes;  // "4", "6", "8", "10+" then "overall"
  double p50_fit_ms = 0.0;
  double p90_fit_ms = 0.0;

  const ClassSummary& overall() const { return classes.back(); }
  const ClassSummary* find(const std::string& cls) const;
};

/// Variant that reports its own fit time, excluding e.g. file loading.
using TimedPredictor = std::function<ManhattanLayout(const EvalItem&, double& fit_seconds)>;

/// Failed predictions count with IoU 0 in the means.
EvalReport evaluate(const std::vector<EvalItem>& items, const Predictor& predictor, int threads = 1);
EvalReport evaluate(const std::vector<EvalItem>& items, const TimedPredictor& predictor, int threads = 1);
EvalReport summarize(std::vector<EvalRecord> records);

void write_csv(std::ostream& out, const EvalReport& report);
void write_table(std::ostream& out, const EvalReport& report);

double percentile(std::vector<double> values, double q);

}  // namespace panolayout
