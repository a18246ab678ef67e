#pragma once

#include <cstdint>
#include <vector>

#include "celltrack/imaging/volume.hpp"
#include "celltrack/models/m1.hpp"
#include "celltrack/numerics/layers.hpp"

namespace celltrack::models {

struct M3Config {
  std::size_t hidden = 16;
  std::size_t kernel = 3;
  std::size_t decoder_hidden = 16;
  double dropout = 0.3;
  /// Sequence length k.
  std::size_t k = 8;
  std::size_t iterations = 6000;
  double learning_rate = 1e-3;
  double decay = 0.9;
  std::uint64_t seed = 0;
  /// Inference window step.
  std::size_t stride = 2;

  void validate() const;
};

/// Forward and backward ConvLSTMs over the raw frames, concatenated per frame,
/// then conv (relu) and 1x1 sigmoid.
template <typename T>
struct M3Model {
  numerics::ConvLSTMParams<T> forward;
  numerics::ConvLSTMParams<T> backward;
  numerics::LayerParams<T> dec1, dec2;
  std::size_t k = 0;
  double dropout = 0.0;

  static M3Model create(const M3Config& cfg, numerics::Rng& rng);
  numerics::NamedParameters<T> parameters();

  template <typename U>
  M3Model<U> cast() const {
    return {forward.template cast<U>(), backward.template cast<U>(), dec1.template cast<U>(), dec2.template cast<U>(),
            k, dropout};
  }
};

/// One dropout mask (2 * hidden x H x W) per frame; empty means inference.
template <typename T>
using DropoutMasks = std::vector<std::vector<T>>;

/// frames: k tensors of 1 x H x W. Returns k probability maps of 1 x H x W.
template <typename T>
std::vector<numerics::Tensor<T>> m3_forward(const M3Model<T>& model, const std::vector<numerics::Tensor<T>>& frames,
                                            const DropoutMasks<T>& dropout = {});

/// BCE summed over the window.
template <typename T>
numerics::Tensor<T> m3_loss(const M3Model<T>& model, const std::vector<numerics::Tensor<T>>& frames,
                            const std::vector<numerics::Tensor<T>>& labels, const DropoutMasks<T>& dropout = {});

/// Annotations (original resolution) to a label volume of frames x ceil(h / factor) x ceil(w / factor):
/// floor-scaled points dilated three times. Throws ConfigError naming the first
/// out-of-range annotation by its 1-based row.
imaging::BinaryVolume build_labels(const std::vector<imaging::EventPoint>& annotations, std::size_t frames,
                                   std::size_t height, std::size_t width, std::size_t factor);

struct M3TrainResult {
  M3Model<float> model;
  std::vector<double> losses;
  std::vector<std::size_t> window_starts;
};

/// Each iteration: uniform window start, next of the six augmentations applied to
/// frames and labels alike, fresh dropout masks, one RMSProp step. Throws
/// ConfigError when the sequence is shorter than k.
M3TrainResult m3_train(const imaging::FrameSequence& seq, const imaging::BinaryVolume& labels, const M3Config& cfg,
                       const ProgressFn& progress = {});

/// Window starts 0, s, 2s, ... with s = min(stride, k), plus a final window ending at the last frame.
std::vector<std::size_t> window_starts(std::size_t frames, std::size_t k, std::size_t stride);

/// Per window binarized (> 0.5) outputs summed over windows and binarized (> 0).
imaging::BinaryVolume m3_activation(const M3Model<float>& model, const imaging::FrameSequence& seq,
                                    std::size_t stride = 2);

/// Mass centres of the activation regions scaled by `factor`; frames shifted by `frame_offset`.
std::vector<imaging::EventPoint> detections_from_activation(const imaging::BinaryVolume& activation,
                                                            std::size_t factor, int frame_offset = 0);

std::vector<imaging::EventPoint> m3_detect(const M3Model<float>& model, const imaging::FrameSequence& seq,
                                           std::size_t factor, int frame_offset = 0, std::size_t stride = 2);

extern template struct M3Model<float>;
extern template struct M3Model<double>;

}  // namespace celltrack::models
