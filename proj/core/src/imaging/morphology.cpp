#include "celltrack/imaging/morphology.hpp"

#include <algorithm>

namespace celltrack::imaging {

BinaryVolume binarize(const Volume3<float>& values, double threshold) {
  BinaryVolume out(values.frames, values.height, values.width);
  for (std::size_t i = 0; i < values.size(); ++i) out.voxels[i] = values.voxels[i] > threshold ? 1 : 0;
  return out;
}

std::vector<std::uint8_t> binarize(std::span<const float> values, double threshold) {
  std::vector<std::uint8_t> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = values[i] > threshold ? 1 : 0;
  return out;
}

std::vector<std::uint8_t> erode2d(std::span<const std::uint8_t> frame, std::size_t height, std::size_t width) {
  if (frame.size() != height * width) throw ShapeError("erode2d: frame size does not match extents");
  std::vector<std::uint8_t> out(frame.size(), 0);
  if (height < 3 || width < 3) return out;
  for (std::size_t r = 1; r + 1 < height; ++r) {
    for (std::size_t c = 1; c + 1 < width; ++c) {
      bool all = true;
      for (std::size_t dr = 0; dr < 3 && all; ++dr) {
        const std::uint8_t* row = frame.data() + (r + dr - 1) * width + (c - 1);
        all = row[0] && row[1] && row[2];
      }
      out[r * width + c] = all ? 1 : 0;
    }
  }
  return out;
}

std::vector<std::uint8_t> dilate2d(std::span<const std::uint8_t> frame, std::size_t height, std::size_t width) {
  if (frame.size() != height * width) throw ShapeError("dilate2d: frame size does not match extents");
  std::vector<std::uint8_t> out(frame.size(), 0);
  for (std::size_t r = 0; r < height; ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      if (!frame[r * width + c]) continue;
      const std::size_t r0 = r ? r - 1 : 0, r1 = std::min(r + 1, height - 1);
      const std::size_t c0 = c ? c - 1 : 0, c1 = std::min(c + 1, width - 1);
      for (std::size_t rr = r0; rr <= r1; ++rr) {
        for (std::size_t cc = c0; cc <= c1; ++cc) out[rr * width + cc] = 1;
      }
    }
  }
  return out;
}

BinaryVolume dilate3d(const BinaryVolume& vol, std::size_t iterations) {
  BinaryVolume cur = vol;
  for (std::size_t it = 0; it < iterations; ++it) {
    // Separable: a 3x3x3 box dilation is the composition of 1D dilations per axis.
    BinaryVolume next = cur;
    for (std::size_t t = 0; t < cur.frames; ++t) {
      auto spatial = dilate2d(cur.frame(t), cur.height, cur.width);
      std::copy(spatial.begin(), spatial.end(), next.frame(t).begin());
    }
    BinaryVolume out = next;
    for (std::size_t t = 0; t < cur.frames; ++t) {
      auto dst = out.frame(t);
      if (t > 0) {
        auto prev = next.frame(t - 1);
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] |= prev[i];
      }
      if (t + 1 < cur.frames) {
        auto nxt = next.frame(t + 1);
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] |= nxt[i];
      }
    }
    cur = std::move(out);
  }
  return cur;
}

}  // namespace celltrack::imaging
