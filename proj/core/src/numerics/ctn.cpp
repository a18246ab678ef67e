#include "celltrack/numerics/ctn.hpp"

#include <array>
#include <bit>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>

#include "celltrack/error.hpp"

namespace celltrack::numerics {

namespace {

constexpr std::array<char, 4> kMagic{'C', 'T', 'N', '1'};

void put_u32(std::ostream& os, std::uint32_t v) {
  const std::array<char, 4> b{static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                              static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  os.write(b.data(), 4);
}

std::uint32_t get_u32(std::istream& is, const std::string& source) {
  std::array<unsigned char, 4> b{};
  if (!is.read(reinterpret_cast<char*>(b.data()), 4)) throw IoError(source + ": truncated .ctn file");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void write_ctn(std::ostream& os, const Shape& dims, std::span<const float> data) {
  if (dims.size() > 255) throw ShapeError("ctn: rank " + std::to_string(dims.size()) + " exceeds 255");
  if (shape_size(dims) != data.size()) throw ShapeError("ctn: data length does not match dims " + shape_string(dims));
  os.write(kMagic.data(), 4);
  os.put(static_cast<char>(dims.size()));
  for (auto d : dims) {
    if (d > std::numeric_limits<std::uint32_t>::max()) throw ShapeError("ctn: extent exceeds 32 bits");
    put_u32(os, static_cast<std::uint32_t>(d));
  }
  for (float v : data) put_u32(os, std::bit_cast<std::uint32_t>(v));
}

void write_ctn(const std::filesystem::path& path, const Shape& dims, std::span<const float> data) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  write_ctn(os, dims, data);
  if (!os) throw IoError("failed writing " + path.string());
}

CtnArray read_ctn(std::istream& is, const std::string& source) {
  std::array<char, 4> magic{};
  if (!is.read(magic.data(), 4) || magic != kMagic) throw IoError(source + ": missing CTN1 magic");
  const int rank = is.get();
  if (rank == std::char_traits<char>::eof()) throw IoError(source + ": truncated .ctn header");
  CtnArray out;
  for (int i = 0; i < rank; ++i) out.dims.push_back(get_u32(is, source));
  out.data.resize(shape_size(out.dims));
  for (auto& v : out.data) v = std::bit_cast<float>(get_u32(is, source));
  return out;
}

CtnArray read_ctn(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  return read_ctn(is, path.string());
}

}  // namespace celltrack::numerics
