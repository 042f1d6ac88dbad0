#include "panolayout/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>

namespace panolayout {

Image8 decode_png(std::span<const std::uint8_t> bytes) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    throw FormatError(std::string("PNG decode failed: ") + image.message);
  }
  Image8 out;
  const bool gray = (image.format & PNG_FORMAT_FLAG_COLOR) == 0;
  image.format = gray ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  out.width = static_cast<int>(image.width);
  out.height = static_cast<int>(image.height);
  out.channels = gray ? 1 : 3;
  out.pixels.resize(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, out.pixels.data(), 0, nullptr)) {
    png_image_free(&image);
    throw FormatError(std::string("PNG decode failed: ") + image.message);
  }
  return out;
}

std::vector<std::uint8_t> encode_png(const Image8& img) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width);
  image.height = static_cast<png_uint_32>(img.height);
  switch (img.channels) {
    case 1: image.format = PNG_FORMAT_GRAY; break;
    case 3: image.format = PNG_FORMAT_RGB; break;
    case 4: image.format = PNG_FORMAT_RGBA; break;
    default: throw DimensionError("PNG export supports 1, 3 or 4 channels");
  }
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, img.pixels.data(), 0, nullptr)) {
    throw FormatError(std::string("PNG encode failed: ") + image.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, img.pixels.data(), 0, nullptr)) {
    throw FormatError(std::string("PNG encode failed: ") + image.message);
  }
  out.resize(size);
  return out;
}

Image8 read_png(const std::filesystem::path& path) { return decode_png(read_file_bytes(path)); }

void write_png(const std::filesystem::path& path, const Image8& image) {
  write_file_atomic(path, encode_png(image));
}

template <typename Tag>
Image8 to_image8(const Raster<float, Tag>& raster) {
  Image8 out{raster.width(), raster.height(), raster.channels(), {}};
  out.pixels.resize(raster.data().size());
  std::transform(raster.data().begin(), raster.data().end(), out.pixels.begin(), [](float v) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
  });
  return out;
}

template <typename Tag>
Raster<float, Tag> from_image8(const Image8& image, int channels) {
  Raster<float, Tag> out(image.width, image.height, channels);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      const std::size_t base = (static_cast<std::size_t>(y) * image.width + x) * image.channels;
      for (int c = 0; c < channels; ++c) {
        const int src_c = image.channels == 1 ? 0 : std::min(c, image.channels - 1);
        out.at(x, y, c) = image.pixels[base + src_c] / 255.0f;
      }
    }
  }
  return out;
}

template <typename Tag>
Raster<float, Tag> resize_area(const Raster<float, Tag>& src, int width, int height) {
  if (width <= 0 || height <= 0) throw DimensionError("resize target must be positive");
  Raster<float, Tag> out(width, height, src.channels());
  const double sx = static_cast<double>(src.width()) / width;
  const double sy = static_cast<double>(src.height()) / height;
  std::vector<double> acc(src.channels());
  for (int y = 0; y < height; ++y) {
    const double y0 = y * sy, y1 = (y + 1) * sy;
    for (int x = 0; x < width; ++x) {
      const double x0 = x * sx, x1 = (x + 1) * sx;
      std::fill(acc.begin(), acc.end(), 0.0);
      double total = 0.0;
      for (int iy = static_cast<int>(std::floor(y0)); iy < static_cast<int>(std::ceil(y1)); ++iy) {
        const double wy = std::min<double>(iy + 1, y1) - std::max<double>(iy, y0);
        if (wy <= 0) continue;
        for (int ix = static_cast<int>(std::floor(x0)); ix < static_cast<int>(std::ceil(x1)); ++ix) {
          const double wx = std::min<double>(ix + 1, x1) - std::max<double>(ix, x0);
          if (wx <= 0) continue;
          const double w = wx * wy;
          total += w;
          const int cx = std::min(ix, src.width() - 1);
          const int cy = std::min(iy, src.height() - 1);
          for (int c = 0; c < src.channels(); ++c) acc[c] += w * src.at(cx, cy, c);
        }
      }
      for (int c = 0; c < src.channels(); ++c) out.at(x, y, c) = static_cast<float>(acc[c] / total);
    }
  }
  return out;
}

template Image8 to_image8(const Raster<float, EquirectTag>&);
template Image8 to_image8(const Raster<float, PerspectiveTag>&);
template Image8 to_image8(const Raster<float, PlainTag>&);
template Raster<float, EquirectTag> from_image8(const Image8&, int);
template Raster<float, PerspectiveTag> from_image8(const Image8&, int);
template Raster<float, PlainTag> from_image8(const Image8&, int);
template Raster<float, EquirectTag> resize_area(const Raster<float, EquirectTag>&, int, int);
template Raster<float, PerspectiveTag> resize_area(const Raster<float, PerspectiveTag>&, int, int);

}  // namespace panolayout
