#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "panolayout/fitting.hpp"
#include "panolayout/layout.hpp"

namespace panolayout {

/// Error carrying an HTTP status and a machine-readable code.
class ServiceError : public std::runtime_error {
 public:
  ServiceError(int status, std::string code, const std::string& message)
      : std::runtime_error(message), status_(status), code_(std::move(code)) {}
  int status() const { return status_; }
  const std::string& code() const { return code_; }

 private:
  int status_;
  std::string code_;
};

ServiceError bad_request(const std::string& message);     // 400
ServiceError not_found(const std::string& message);       // 404
ServiceError conflict(const std::string& message);        // 409
ServiceError invalid_edit(const std::string& message);    // 422

/// Edited coordinates live on a 2^-20 m grid so that inverse edits cancel
/// bit-exactly.
inline constexpr double kCoordQuantum = 1.0 / (1 << 20);
double quantize(double v);
ManhattanLayout quantize_layout(ManhattanLayout layout);

inline constexpr std::size_t kUndoLimit = 100;
inline constexpr double kSnapThreshold = 0.15;
inline constexpr int kOverlaySamplesPerWall = 64;

/// Wall i runs from corners[i] to corners[i + 1].
struct EditOp {
  enum class Kind { PushPull, Merge, Split };
  Kind kind = Kind::PushPull;
  int wall_index = 0;
  double delta_m = 0.0;            // push_pull: along the outward normal
  double t = 0.5;                  // split: position along the wall, (0, 1)
  double depth_m = 0.0;            // split: outward offset of the moved piece
  bool split_head = false;         // split: move [start, t] instead of [t, end]
  std::vector<int> wall_indices;   // merge: walls i, i+2, ... (same axis)
  std::optional<int> anchor;       // merge: keep this wall's coordinate

  static EditOp from_json(const nlohmann::json& j);  // throws ServiceError 400
  nlohmann::json to_json() const;
};

/// Pure edit semantics; throws ServiceError 422 when the result would
/// violate a layout invariant.
ManhattanLayout apply_edit_op(const ManhattanLayout& layout, const EditOp& op);

/// Snap targets in meters: x of vertical walls, z of horizontal walls.
struct SnapTargets {
  std::vector<double> xs;
  std::vector<double> zs;
};
/// Moves wall i onto the nearest same-axis line within the threshold; a
/// no-op beyond it.
ManhattanLayout snap_wall(const ManhattanLayout& layout, int wall_index, const SnapTargets& targets,
                          double threshold = kSnapThreshold);

/// One closed loop per wall in panorama pixel coordinates: the ceiling
/// boundary from start to end, then the floor boundary back. x is
/// unwrapped along the loop and may leave [0, width).
using OverlayLoop = std::vector<std::array<double, 2>>;
std::vector<OverlayLoop> overlay_loops(const ManhattanLayout& layout, int pano_w, int pano_h,
                                       int samples_per_wall = kOverlaySamplesPerWall);

struct MapInputs {
  std::vector<std::uint8_t> fc_plpm;
  std::vector<std::uint8_t> fp_plpm;
  double height_m = 0.0;
};

struct SessionView {
  std::string id;
  ManhattanLayout layout;
  long revision = 0;
  bool has_snap_targets = false;
  int pano_w = 0;
  int pano_h = 0;
  std::size_t undo_depth = 0;
  std::size_t redo_depth = 0;
};

/// Thread-safe session registry. Mutations of one session are serialized;
/// reads take a shared lock and see a consistent snapshot. With a
/// directory, every session is persisted as <id>.json + <id>.png and
/// reloaded on construction.
class SessionStore {
 public:
  explicit SessionStore(std::filesystem::path dir = {}, std::size_t undo_limit = kUndoLimit);
  ~SessionStore();
  SessionStore(const SessionStore&) = delete;
  SessionStore& operator=(const SessionStore&) = delete;

  std::string create(std::span<const std::uint8_t> panorama_png, const std::optional<MapInputs>& maps = {});
  /// Creates a session with a given layout (validated) and optional snap targets.
  std::string create_with_layout(std::span<const std::uint8_t> panorama_png, const ManhattanLayout& layout,
                                 std::optional<SnapTargets> targets = {});

  SessionView get(const std::string& id) const;
  std::vector<std::uint8_t> panorama(const std::string& id) const;
  std::vector<OverlayLoop> overlay(const std::string& id) const;
  std::vector<std::string> ids() const;

  SessionView apply_edit(const std::string& id, long revision, const EditOp& op);
  SessionView snap(const std::string& id, long revision, int wall_index);
  SessionView undo(const std::string& id, std::optional<long> revision = {});
  SessionView redo(const std::string& id, std::optional<long> revision = {});

 private:
  struct Session;
  std::shared_ptr<Session> find(const std::string& id) const;
  std::string insert(std::shared_ptr<Session> s);
  void persist(const Session& s) const;
  void load_all();

  std::filesystem::path dir_;
  std::size_t undo_limit_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
};

nlohmann::json session_view_json(const SessionView& v);

}  // namespace panolayout
