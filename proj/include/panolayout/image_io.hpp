#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "panolayout/raster.hpp"

namespace panolayout {

// 8-bit image as decoded from / encoded to PNG (1 = gray, 3 = RGB, 4 = RGBA).
struct Image8 {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<std::uint8_t> pixels;
};

Image8 decode_png(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_png(const Image8& image);
Image8 read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Image8& image);

// Values are mapped from [0,1] with clamping; alpha is dropped on import.
template <typename Tag>
Image8 to_image8(const Raster<float, Tag>& raster);
template <typename Tag>
Raster<float, Tag> from_image8(const Image8& image, int channels);

/// Area-weighted resampling to a new size; used to bring arbitrary
/// panoramas down to the network input resolution.
template <typename Tag>
Raster<float, Tag> resize_area(const Raster<float, Tag>& src, int width, int height);

}  // namespace panolayout
