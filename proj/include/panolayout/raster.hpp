#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "panolayout/errors.hpp"

namespace panolayout {

struct EquirectTag {};
struct PerspectiveTag {};
struct PlainTag {};

/// Row-major interleaved raster (index = (y * width + x) * channels + c).
/// The tag distinguishes equirectangular panoramas from square perspective
/// views at the type level; retag() converts explicitly.
template <typename T, typename Tag>
class Raster {
 public:
  using value_type = T;

  Raster() = default;
  Raster(int width, int height, int channels, T fill = T{})
      : width_(width), height_(height), channels_(channels) {
    if (width < 0 || height < 0 || channels <= 0) {
      throw DimensionError("raster dimensions must be non-negative with at least one channel");
    }
    data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
  }
  Raster(int width, int height, int channels, std::vector<T> values)
      : width_(width), height_(height), channels_(channels), data_(std::move(values)) {
    if (data_.size() != static_cast<std::size_t>(width) * height * channels) {
      throw DimensionError("raster value count does not match its dimensions");
    }
  }

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }
  bool empty() const { return data_.empty(); }

  T& at(int x, int y, int c = 0) { return data_[index(x, y, c)]; }
  const T& at(int x, int y, int c = 0) const { return data_[index(x, y, c)]; }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }
  std::vector<T>& storage() { return data_; }
  const std::vector<T>& storage() const { return data_; }

  bool same_shape(const auto& other) const {
    return width_ == other.width() && height_ == other.height() && channels_ == other.channels();
  }

  template <typename OtherTag>
  Raster<T, OtherTag> retag() const {
    return Raster<T, OtherTag>(width_, height_, channels_, data_);
  }

  template <typename U>
  Raster<U, Tag> cast() const {
    std::vector<U> out(data_.begin(), data_.end());
    return Raster<U, Tag>(width_, height_, channels_, std::move(out));
  }

  bool operator==(const Raster&) const = default;

 private:
  std::size_t index(int x, int y, int c) const {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 1;
  std::vector<T> data_;
};

template <typename T = float>
using EquirectRaster = Raster<T, EquirectTag>;
template <typename T = float>
using PerspectiveRaster = Raster<T, PerspectiveTag>;

using EquirectMap = Raster<float, EquirectTag>;
using PerspectiveMap = Raster<float, PerspectiveTag>;
using PlainMap = Raster<float, PlainTag>;

// PLPM probability-map files: "PLPM", u32 width, u32 height, u32 channels,
// then row-major little-endian float32 values.
std::vector<std::uint8_t> encode_plpm(const PlainMap& map);
PlainMap decode_plpm(std::span<const std::uint8_t> bytes);
void write_plpm(const std::filesystem::path& path, const PlainMap& map);
PlainMap read_plpm(const std::filesystem::path& path);

template <typename Tag>
void write_plpm(const std::filesystem::path& path, const Raster<float, Tag>& map) {
  write_plpm(path, map.template retag<PlainTag>());
}

// Writes bytes to a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_file_atomic(const std::filesystem::path& path, const std::string& text);
std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

}  // namespace panolayout
