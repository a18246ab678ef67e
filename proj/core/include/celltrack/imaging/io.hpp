#pragma once

#include <filesystem>
#include <vector>

#include "celltrack/imaging/volume.hpp"

namespace celltrack::imaging {

/// Reads "frame_%05d.pgm" (binary P5, 8-bit) files with contiguous indices from
/// 0 and maps each pixel v to v / 255.
FrameSequence load_sequence(const std::filesystem::path& directory);

/// Writes frames as "frame_%05d.pgm" with round(v * 255).
void save_sequence(const FrameSequence& seq, const std::filesystem::path& directory);

/// Single P5 frame as 8-bit samples.
struct PgmImage {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> pixels;
};

PgmImage read_pgm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const PgmImage& image);

/// CSV with header "frame,row,col".
std::vector<EventPoint> read_points_csv(const std::filesystem::path& path);
void write_points_csv(const std::filesystem::path& path, const std::vector<EventPoint>& points);

/// Binary volumes persisted as .ctn with dims [T, H, W] and values {0.0, 1.0}.
void save_binary_volume(const std::filesystem::path& path, const BinaryVolume& vol);
BinaryVolume load_binary_volume(const std::filesystem::path& path);

/// Real-valued volumes (probability maps) as .ctn [T, H, W].
void save_volume(const std::filesystem::path& path, const Volume3<float>& vol);
Volume3<float> load_volume(const std::filesystem::path& path);

}  // namespace celltrack::imaging
