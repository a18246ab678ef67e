#pragma once

#include <array>
#include <cstddef>
#include <string_view>

#include "celltrack/imaging/volume.hpp"

namespace celltrack::imaging {

/// The six training augmentations. Rotations are counter-clockwise and swap
/// height and width.
enum class Transform { Identity, FlipHorizontal, FlipVertical, Rotate90, Rotate180, Rotate270 };

inline constexpr std::array<Transform, 6> kAllTransforms{Transform::Identity,  Transform::FlipHorizontal,
                                                         Transform::FlipVertical, Transform::Rotate90,
                                                         Transform::Rotate180, Transform::Rotate270};

std::string_view to_string(Transform t);
Transform inverse(Transform t);

inline bool swaps_axes(Transform t) { return t == Transform::Rotate90 || t == Transform::Rotate270; }

/// Source pixel (row, col) in an h x w frame that lands at output (r, c).
inline std::pair<std::size_t, std::size_t> source_pixel(Transform t, std::size_t h, std::size_t w, std::size_t r,
                                                        std::size_t c) {
  switch (t) {
    case Transform::Identity:
      return {r, c};
    case Transform::FlipHorizontal:
      return {r, w - 1 - c};
    case Transform::FlipVertical:
      return {h - 1 - r, c};
    case Transform::Rotate90:  // output is w x h
      return {c, w - 1 - r};
    case Transform::Rotate180:
      return {h - 1 - r, w - 1 - c};
    case Transform::Rotate270:  // output is w x h
      return {h - 1 - c, r};
  }
  return {r, c};
}

/// Applies `t` framewise.
template <typename V>
Volume3<V> apply_transform(const Volume3<V>& in, Transform t) {
  const std::size_t oh = swaps_axes(t) ? in.width : in.height;
  const std::size_t ow = swaps_axes(t) ? in.height : in.width;
  Volume3<V> out(in.frames, oh, ow);
  for (std::size_t f = 0; f < in.frames; ++f) {
    for (std::size_t r = 0; r < oh; ++r) {
      for (std::size_t c = 0; c < ow; ++c) {
        const auto [sr, sc] = source_pixel(t, in.height, in.width, r, c);
        out.at(f, r, c) = in.at(f, sr, sc);
      }
    }
  }
  return out;
}

inline FrameSequence apply_transform(const FrameSequence& in, Transform t) {
  FrameSequence out(apply_transform(static_cast<const Volume3<float>&>(in), t), in.source_id);
  out.frame_rate = in.frame_rate;
  return out;
}

/// Where an input point of an h x w frame lands after `t`.
EventPoint transform_point(const EventPoint& p, Transform t, std::size_t h, std::size_t w);

/// {original, h-flip, v-flip, rot90, rot180, rot270}.
std::array<FrameSequence, 6> augment(const FrameSequence& seq);

/// Block mean over factor x factor tiles; edges are replicated to pad H and W up
/// to multiples of the factor.
FrameSequence downscale(const FrameSequence& seq, std::size_t factor);

/// Nearest-neighbour replication by `factor` along rows and columns.
FrameSequence upscale_replicate(const FrameSequence& seq, std::size_t factor);

/// Binary downscale used for masks: block mean > 0.5.
BinaryVolume downscale_mask(const BinaryVolume& mask, std::size_t factor);

}  // namespace celltrack::imaging
