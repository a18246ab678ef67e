#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "celltrack/imaging/volume.hpp"
#include "celltrack/numerics/layers.hpp"

namespace celltrack::models {

struct M1Config {
  std::size_t channels = 6;
  std::size_t hidden = 16;
  std::size_t kernel = 5;
  double noise = 0.2;
  bool channel_drop = true;
  std::size_t iterations = 4000;
  double learning_rate = 1e-3;
  double decay = 0.9;
  std::uint64_t seed = 0;
  // channel selection
  std::size_t area_min = 4;
  std::size_t area_max = 400;
  double compactness_min = 0.5;
  /// Frames sampled (evenly) when scoring channels; 0 uses every frame.
  std::size_t selection_frames = 16;

  void validate() const;
};

/// Encoder conv-conv-conv to n one-hot maps h, decoder conv-conv-1x1 back to a frame.
template <typename T>
struct M1Model {
  numerics::LayerParams<T> enc1, enc2, enc3;
  numerics::LayerParams<T> dec1, dec2, dec3;
  std::size_t channels = 0;
  int selected_channel = -1;

  static M1Model create(const M1Config& cfg, numerics::Rng& rng);
  numerics::NamedParameters<T> parameters();

  template <typename U>
  M1Model<U> cast() const {
    return {enc1.template cast<U>(), enc2.template cast<U>(), enc3.template cast<U>(), dec1.template cast<U>(),
            dec2.template cast<U>(), dec3.template cast<U>(), channels, selected_channel};
  }
};

/// Training-time corruption of h: one zeroed channel, then additive uniform noise.
template <typename T>
struct M1Perturbation {
  std::size_t dropped_channel = 0;  // >= n drops nothing
  std::vector<T> noise;             // n x H x W

  static M1Perturbation draw(std::size_t channels, std::size_t height, std::size_t width, double amplitude,
                             numerics::Rng& rng);
};

template <typename T>
struct M1Output {
  numerics::Tensor<T> h;
  numerics::Tensor<T> reconstruction;
};

/// x is 1 x H x W. A null perturbation is inference mode.
template <typename T>
M1Output<T> m1_forward(const M1Model<T>& model, const numerics::Tensor<T>& x,
                       const M1Perturbation<T>* perturbation = nullptr);

/// BCE between x and the reconstruction.
template <typename T>
numerics::Tensor<T> m1_loss(const M1Model<T>& model, const numerics::Tensor<T>& x,
                            const M1Perturbation<T>* perturbation = nullptr);

struct M1TrainResult {
  M1Model<float> model;
  std::vector<double> losses;
};

/// Called every `progress_every` iterations with (iteration, loss).
using ProgressFn = std::function<void(std::size_t, double)>;

/// RMSProp on the reconstruction loss over frames and their six augmentations in
/// round-robin order. Throws NumericError on a non-finite loss.
M1TrainResult m1_train(const imaging::FrameSequence& seq, const M1Config& cfg, const ProgressFn& progress = {});

/// Inference feature maps h (n x H x W) of one frame.
std::vector<float> m1_feature_maps(const M1Model<float>& model, const imaging::FrameSequence& seq, std::size_t t);

/// Mean count of eroded, compact, plausibly sized components per channel.
std::vector<double> channel_scores(const M1Model<float>& model, const imaging::FrameSequence& seq,
                                   const M1Config& cfg);

/// argmax of channel_scores; throws NumericError when every channel scores 0.
std::size_t select_cell_channel(const M1Model<float>& model, const imaging::FrameSequence& seq, const M1Config& cfg);

/// Per frame: selected channel of h, binarized (> 0) and eroded.
imaging::BinaryVolume extract_cell_maps(const M1Model<float>& model, const imaging::FrameSequence& seq);

/// Channels nonzero at some pixel of some frame.
std::size_t activated_channels(const M1Model<float>& model, const imaging::FrameSequence& seq);

extern template struct M1Model<float>;
extern template struct M1Model<double>;
extern template struct M1Perturbation<float>;
extern template struct M1Perturbation<double>;

}  // namespace celltrack::models
