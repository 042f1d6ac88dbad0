#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "panolayout/layout.hpp"
#include "panolayout/raster.hpp"

namespace panolayout {

/// Parameters of one generated room. extent_x / extent_z size the base
/// rectangle before notches are carved.
struct RoomSpec {
  int corner_count = 4;
  double extent_x = 5.0;
  double extent_z = 4.0;
  double height_m = 3.0;
  std::uint64_t seed = 0;
};

inline constexpr double kMinCameraClearance = 0.4;
inline constexpr double kMinWallSpacing = 1.0;

void validate_spec(const RoomSpec& spec);  // throws DomainError
/// Draws extents and height for a corner class, deterministic in seed.
RoomSpec random_spec(int corner_count, std::uint64_t seed);

/// Base rectangle with (corner_count - 4) / 2 rectangular notches carved at
/// convex corners; camera at the centroid when it sees every wall, else at
/// the center of the visibility kernel. Throws RetryExhaustedError.
ManhattanLayout random_layout(const RoomSpec& spec);

struct SampleGeometry {
  int pano_w = 1024;
  int pano_h = 512;
  int fp_w = 512;
  double fov_deg = kDefaultFov;
};

struct Sample {
  std::string id;
  EquirectMap pano;  // RGB in [0, 1]
  EquirectMap fc;
  PerspectiveMap fp;
  double height_m = 0.0;
  ManhattanLayout layout;
};

Sample make_sample(const RoomSpec& spec, const SampleGeometry& geometry, const std::string& id = {});

struct SampleRecord {
  std::string id;
  int corner_count = 4;
  double height_m = 0.0;
  std::uint64_t seed = 0;
  std::string split = "train";
};

struct Manifest {
  SampleGeometry geometry;
  std::uint64_t seed = 0;
  std::vector<SampleRecord> samples;
};

/// Per-class counts for n samples by largest remainder, ties to the smaller
/// corner count.
std::map<int, int> class_counts(int n, const std::map<int, double>& proportions);

struct DatasetOptions {
  int count = 100;
  int val_count = 0;
  std::map<int, double> proportions{{4, 1.0}, {6, 1.0}, {8, 1.0}, {10, 1.0}, {12, 1.0}};
  SampleGeometry geometry;
  std::uint64_t seed = 0;
  int threads = 1;
};

/// Deterministic sample plan: ids, corner classes, seeds, splits.
Manifest plan_dataset(const DatasetOptions& opts);
Sample make_sample(const SampleRecord& record, const SampleGeometry& geometry);

/// Generates and writes every sample plus manifest.json.
Manifest write_dataset(const std::filesystem::path& dir, const DatasetOptions& opts);
void write_sample(const std::filesystem::path& dir, const Sample& sample);
Sample read_sample(const std::filesystem::path& dir, const std::string& id);

void save_manifest(const std::filesystem::path& path, const Manifest& manifest);
Manifest load_manifest(const std::filesystem::path& path);

}  // namespace panolayout
