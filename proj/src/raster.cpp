#include "panolayout/raster.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <random>

namespace panolayout {

namespace {

constexpr char kPlpmMagic[4] = {'P', 'L', 'P', 'M'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> bytes, std::size_t offset) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[offset + i]) << (8 * i);
  return v;
}

}  // namespace

std::vector<std::uint8_t> encode_plpm(const PlainMap& map) {
  std::vector<std::uint8_t> out;
  out.reserve(16 + map.data().size() * 4);
  out.insert(out.end(), kPlpmMagic, kPlpmMagic + 4);
  put_u32(out, static_cast<std::uint32_t>(map.width()));
  put_u32(out, static_cast<std::uint32_t>(map.height()));
  put_u32(out, static_cast<std::uint32_t>(map.channels()));
  for (float v : map.data()) put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

PlainMap decode_plpm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kPlpmMagic, 4) != 0) {
    throw FormatError("not a PLPM probability map (bad magic)");
  }
  const std::uint32_t w = get_u32(bytes, 4);
  const std::uint32_t h = get_u32(bytes, 8);
  const std::uint32_t c = get_u32(bytes, 12);
  if (c == 0 || w > (1u << 16) || h > (1u << 16) || c > 64) {
    throw FormatError("PLPM header has implausible dimensions");
  }
  const std::size_t count = static_cast<std::size_t>(w) * h * c;
  if (bytes.size() != 16 + count * 4) {
    throw FormatError("PLPM payload size does not match header");
  }
  std::vector<float> values(count);
  for (std::size_t i = 0; i < count; ++i) {
    values[i] = std::bit_cast<float>(get_u32(bytes, 16 + 4 * i));
  }
  return PlainMap(static_cast<int>(w), static_cast<int>(h), static_cast<int>(c), std::move(values));
}

void write_plpm(const std::filesystem::path& path, const PlainMap& map) {
  write_file_atomic(path, encode_plpm(map));
}

PlainMap read_plpm(const std::filesystem::path& path) { return decode_plpm(read_file_bytes(path)); }

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  static thread_local std::mt19937_64 suffix_rng{std::random_device{}()};
  auto tmp = path;
  tmp += ".tmp" + std::to_string(suffix_rng() % 1000000007ULL);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void write_file_atomic(const std::filesystem::path& path, const std::string& text) {
  write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace panolayout
