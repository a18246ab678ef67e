#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "celltrack/error.hpp"

namespace celltrack::imaging {

/// Dense T x H x W grid, row-major with the column index fastest.
template <typename V>
struct Volume3 {
  std::size_t frames = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<V> voxels;

  Volume3() = default;
  Volume3(std::size_t t, std::size_t h, std::size_t w, V fill = V{})
      : frames(t), height(h), width(w), voxels(t * h * w, fill) {}

  std::size_t frame_size() const { return height * width; }
  std::size_t size() const { return voxels.size(); }
  bool empty() const { return voxels.empty(); }

  std::size_t index(std::size_t t, std::size_t r, std::size_t c) const { return (t * height + r) * width + c; }
  V& at(std::size_t t, std::size_t r, std::size_t c) { return voxels[index(t, r, c)]; }
  const V& at(std::size_t t, std::size_t r, std::size_t c) const { return voxels[index(t, r, c)]; }

  std::span<V> frame(std::size_t t) { return {voxels.data() + t * frame_size(), frame_size()}; }
  std::span<const V> frame(std::size_t t) const { return {voxels.data() + t * frame_size(), frame_size()}; }

  bool same_extent(const Volume3& o) const { return frames == o.frames && height == o.height && width == o.width; }

  /// Frames [begin, begin + count).
  Volume3 slice_frames(std::size_t begin, std::size_t count) const {
    if (begin + count > frames) {
      throw ShapeError("frame range [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                       ") outside a " + std::to_string(frames) + "-frame volume");
    }
    Volume3 out(count, height, width);
    std::copy(voxels.begin() + static_cast<std::ptrdiff_t>(begin * frame_size()),
              voxels.begin() + static_cast<std::ptrdiff_t>((begin + count) * frame_size()), out.voxels.begin());
    return out;
  }

  bool operator==(const Volume3&) const = default;
};

/// Binary voxels, values exactly 0 or 1.
using BinaryVolume = Volume3<std::uint8_t>;

/// Grayscale frames with values in [0, 1].
struct FrameSequence : Volume3<float> {
  double frame_rate = 0.0;  // informational
  std::string source_id;

  FrameSequence() = default;
  FrameSequence(std::size_t t, std::size_t h, std::size_t w, float fill = 0.0f) : Volume3<float>(t, h, w, fill) {}
  explicit FrameSequence(Volume3<float> v, std::string source = {})
      : Volume3<float>(std::move(v)), source_id(std::move(source)) {}

  FrameSequence slice(std::size_t begin, std::size_t count) const {
    FrameSequence out(slice_frames(begin, count), source_id);
    out.frame_rate = frame_rate;
    return out;
  }

  /// Throws unless T >= 1 and every value lies in [0, 1].
  void validate() const;
};

/// One event point (0-based frame, row, column).
struct EventPoint {
  int frame = 0;
  int row = 0;
  int col = 0;

  auto operator<=>(const EventPoint&) const = default;
};

}  // namespace celltrack::imaging
