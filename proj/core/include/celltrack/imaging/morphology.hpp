#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "celltrack/imaging/volume.hpp"

namespace celltrack::imaging {

/// v > threshold -> 1, else 0 (strict).
BinaryVolume binarize(const Volume3<float>& values, double threshold);
std::vector<std::uint8_t> binarize(std::span<const float> values, double threshold);

/// A pixel survives iff its full 3x3 neighbourhood is set; out-of-bounds is 0.
std::vector<std::uint8_t> erode2d(std::span<const std::uint8_t> frame, std::size_t height, std::size_t width);

/// 3x3 dilation of one frame, out-of-bounds ignored.
std::vector<std::uint8_t> dilate2d(std::span<const std::uint8_t> frame, std::size_t height, std::size_t width);

/// `iterations` rounds of 3x3x3 dilation, clipped at the volume borders.
BinaryVolume dilate3d(const BinaryVolume& vol, std::size_t iterations);

}  // namespace celltrack::imaging
