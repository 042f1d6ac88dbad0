#pragma once

#include <memory>
#include <string>

#include "panolayout/annotation.hpp"

namespace panolayout {

/// REST front end over a SessionStore:
///   POST /sessions                      multipart panorama [+ fc, fp, height] -> {id}
///   GET  /sessions/{id}/panorama        PNG
///   GET  /sessions/{id}/layout          {layout, revision, ...}
///   POST /sessions/{id}/edits           {revision, op}
///   POST /sessions/{id}/snap            {revision, wall_index}
///   POST /sessions/{id}/undo, /redo     optional {revision}
///   GET  /sessions/{id}/overlay         {loops, width, height}
///   GET  /sessions/{id}/export          layout.json attachment
/// Errors are {code, message} with status 400/404/409/422.
class AnnotationServer {
 public:
  explicit AnnotationServer(SessionStore& store);
  ~AnnotationServer();
  AnnotationServer(const AnnotationServer&) = delete;
  AnnotationServer& operator=(const AnnotationServer&) = delete;

  /// Blocks until stop().
  bool listen(const std::string& host, int port);
  /// Binds an ephemeral port and returns it; then call serve().
  int bind_any_port(const std::string& host);
  bool serve();
  void wait_until_ready() const;
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace panolayout
