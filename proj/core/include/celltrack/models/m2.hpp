#pragma once

#include <cstdint>
#include <vector>

#include "celltrack/events/event_sim.hpp"
#include "celltrack/imaging/volume.hpp"
#include "celltrack/models/m1.hpp"
#include "celltrack/numerics/layers.hpp"

namespace celltrack::models {

struct M2Config {
  std::size_t hidden = 16;
  std::size_t kernel = 3;
  /// Frames per training window (T_u).
  std::size_t window = 20;
  std::size_t iterations = 2000;
  double learning_rate = 1e-3;
  double decay = 0.9;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Two encoder convs, one ConvLSTM, conv then 1x1 sigmoid decoder, applied per frame.
template <typename T>
struct M2Model {
  numerics::LayerParams<T> enc1, enc2;
  numerics::ConvLSTMParams<T> lstm;
  numerics::LayerParams<T> dec1, dec2;

  static M2Model create(const M2Config& cfg, numerics::Rng& rng);
  numerics::NamedParameters<T> parameters();

  template <typename U>
  M2Model<U> cast() const {
    return {enc1.template cast<U>(), enc2.template cast<U>(), lstm.template cast<U>(), dec1.template cast<U>(),
            dec2.template cast<U>()};
  }
};

/// Unrolls from a zero state; inputs and outputs are 1 x H x W per frame.
template <typename T>
std::vector<numerics::Tensor<T>> m2_forward(const M2Model<T>& model, const std::vector<numerics::Tensor<T>>& frames);

/// BCE summed over the window.
template <typename T>
numerics::Tensor<T> m2_loss(const M2Model<T>& model, const std::vector<numerics::Tensor<T>>& context,
                            const std::vector<numerics::Tensor<T>>& events);

/// Frames of a binary volume as 1 x H x W tensors.
template <typename T>
std::vector<numerics::Tensor<T>> volume_frames(const imaging::BinaryVolume& vol);

struct M2TrainResult {
  M2Model<float> model;
  std::vector<double> losses;
};

/// Each iteration draws a window start uniformly, applies the next of the six
/// augmentations, samples a fresh context/event pair from it and takes one
/// RMSProp step. Throws ConfigError when the window exceeds the sequence.
M2TrainResult m2_train(const imaging::BinaryVolume& y, const events::EventSimConfig& sim, const M2Config& cfg,
                       const ProgressFn& progress = {});

/// Event probabilities e' for the whole sequence in one pass.
imaging::Volume3<float> m2_infer(const M2Model<float>& model, const imaging::BinaryVolume& y);

extern template struct M2Model<float>;
extern template struct M2Model<double>;

}  // namespace celltrack::models
