#include "celltrack/imaging/transform.hpp"

namespace celltrack::imaging {

std::string_view to_string(Transform t) {
  switch (t) {
    case Transform::Identity:
      return "identity";
    case Transform::FlipHorizontal:
      return "flip_h";
    case Transform::FlipVertical:
      return "flip_v";
    case Transform::Rotate90:
      return "rot90";
    case Transform::Rotate180:
      return "rot180";
    case Transform::Rotate270:
      return "rot270";
  }
  return "identity";
}

Transform inverse(Transform t) {
  if (t == Transform::Rotate90) return Transform::Rotate270;
  if (t == Transform::Rotate270) return Transform::Rotate90;
  return t;
}

EventPoint transform_point(const EventPoint& p, Transform t, std::size_t h, std::size_t w) {
  const int H = static_cast<int>(h);
  const int W = static_cast<int>(w);
  switch (t) {
    case Transform::Identity:
      return p;
    case Transform::FlipHorizontal:
      return {p.frame, p.row, W - 1 - p.col};
    case Transform::FlipVertical:
      return {p.frame, H - 1 - p.row, p.col};
    case Transform::Rotate90:
      return {p.frame, W - 1 - p.col, p.row};
    case Transform::Rotate180:
      return {p.frame, H - 1 - p.row, W - 1 - p.col};
    case Transform::Rotate270:
      return {p.frame, p.col, H - 1 - p.row};
  }
  return p;
}

std::array<FrameSequence, 6> augment(const FrameSequence& seq) {
  std::array<FrameSequence, 6> out;
  for (std::size_t i = 0; i < kAllTransforms.size(); ++i) out[i] = apply_transform(seq, kAllTransforms[i]);
  return out;
}

namespace {

template <typename V, typename Acc>
Volume3<Acc> block_mean(const Volume3<V>& in, std::size_t factor) {
  const std::size_t oh = (in.height + factor - 1) / factor;
  const std::size_t ow = (in.width + factor - 1) / factor;
  Volume3<Acc> out(in.frames, oh, ow);
  const double norm = 1.0 / static_cast<double>(factor * factor);
  for (std::size_t t = 0; t < in.frames; ++t) {
    for (std::size_t r = 0; r < oh; ++r) {
      for (std::size_t c = 0; c < ow; ++c) {
        double s = 0;
        for (std::size_t i = 0; i < factor; ++i) {
          const std::size_t sr = std::min(r * factor + i, in.height - 1);
          for (std::size_t j = 0; j < factor; ++j) {
            const std::size_t sc = std::min(c * factor + j, in.width - 1);
            s += static_cast<double>(in.at(t, sr, sc));
          }
        }
        out.at(t, r, c) = static_cast<Acc>(s * norm);
      }
    }
  }
  return out;
}

}  // namespace

FrameSequence downscale(const FrameSequence& seq, std::size_t factor) {
  if (factor < 1) throw ConfigError("downscale factor must be >= 1");
  if (factor == 1) return seq;
  FrameSequence out(block_mean<float, float>(seq, factor), seq.source_id);
  out.frame_rate = seq.frame_rate;
  return out;
}

FrameSequence upscale_replicate(const FrameSequence& seq, std::size_t factor) {
  if (factor < 1) throw ConfigError("upscale factor must be >= 1");
  FrameSequence out(seq.frames, seq.height * factor, seq.width * factor);
  out.source_id = seq.source_id;
  out.frame_rate = seq.frame_rate;
  for (std::size_t t = 0; t < out.frames; ++t) {
    for (std::size_t r = 0; r < out.height; ++r) {
      for (std::size_t c = 0; c < out.width; ++c) out.at(t, r, c) = seq.at(t, r / factor, c / factor);
    }
  }
  return out;
}

BinaryVolume downscale_mask(const BinaryVolume& mask, std::size_t factor) {
  if (factor < 1) throw ConfigError("downscale factor must be >= 1");
  if (factor == 1) return mask;
  auto mean = block_mean<std::uint8_t, double>(mask, factor);
  BinaryVolume out(mean.frames, mean.height, mean.width);
  for (std::size_t i = 0; i < out.size(); ++i) out.voxels[i] = mean.voxels[i] > 0.5 ? 1 : 0;
  return out;
}

}  // namespace celltrack::imaging
