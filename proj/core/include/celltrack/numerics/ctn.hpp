#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "celltrack/numerics/tensor.hpp"

namespace celltrack::numerics {

/// Contents of a ".ctn" file: "CTN1", u8 rank, rank x u32 dims (LE), then
/// float32 values (LE), row-major.
struct CtnArray {
  Shape dims;
  std::vector<float> data;
};

void write_ctn(std::ostream& os, const Shape& dims, std::span<const float> data);
void write_ctn(const std::filesystem::path& path, const Shape& dims, std::span<const float> data);
CtnArray read_ctn(std::istream& is, const std::string& source = "<stream>");
CtnArray read_ctn(const std::filesystem::path& path);

}  // namespace celltrack::numerics
