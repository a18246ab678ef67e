#include "celltrack/models/m3.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "celltrack/error.hpp"
#include "celltrack/imaging/morphology.hpp"
#include "celltrack/imaging/regions.hpp"
#include "celltrack/imaging/transform.hpp"
#include "celltrack/numerics/optimizer.hpp"

namespace celltrack::models {

using numerics::Activation;
using numerics::LayerParams;
using numerics::Tensor;

namespace {

template <typename T>
std::vector<Tensor<T>> sequence_frames(const imaging::Volume3<float>& seq, std::size_t begin, std::size_t count) {
  std::vector<Tensor<T>> out;
  out.reserve(count);
  for (std::size_t t = begin; t < begin + count; ++t) {
    const auto f = seq.frame(t);
    out.push_back(Tensor<T>::constant({1, seq.height, seq.width}, std::vector<T>(f.begin(), f.end())));
  }
  return out;
}

template <typename T>
std::vector<Tensor<T>> label_frames(const imaging::BinaryVolume& labels) {
  std::vector<Tensor<T>> out;
  out.reserve(labels.frames);
  for (std::size_t t = 0; t < labels.frames; ++t) {
    const auto f = labels.frame(t);
    out.push_back(Tensor<T>::constant({1, labels.height, labels.width}, std::vector<T>(f.begin(), f.end())));
  }
  return out;
}

}  // namespace

void M3Config::validate() const {
  if (hidden < 1) throw ConfigError("m3.hidden: must be positive");
  if (kernel % 2 == 0) throw ConfigError("m3.kernel: must be odd");
  if (decoder_hidden < 1) throw ConfigError("m3.decoder_hidden: must be positive");
  if (!(dropout >= 0 && dropout < 1)) throw ConfigError("m3.dropout: must lie in [0, 1)");
  if (k < 1) throw ConfigError("m3.k: must be positive");
  if (!(learning_rate > 0)) throw ConfigError("m3.learning_rate: must be positive");
  if (!(decay >= 0 && decay < 1)) throw ConfigError("m3.decay: must lie in [0, 1)");
  if (stride < 1) throw ConfigError("m3.stride: must be positive");
}

template <typename T>
M3Model<T> M3Model<T>::create(const M3Config& cfg, numerics::Rng& rng) {
  cfg.validate();
  M3Model m;
  m.forward = numerics::ConvLSTMParams<T>::create("forward", 1, cfg.hidden, cfg.kernel, rng);
  m.backward = numerics::ConvLSTMParams<T>::create("backward", 1, cfg.hidden, cfg.kernel, rng);
  m.dec1 = LayerParams<T>::create("dec1", cfg.decoder_hidden, 2 * cfg.hidden, cfg.kernel, rng);
  m.dec2 = LayerParams<T>::create("dec2", 1, cfg.decoder_hidden, 1, rng);
  m.k = cfg.k;
  m.dropout = cfg.dropout;
  return m;
}

template <typename T>
numerics::NamedParameters<T> M3Model<T>::parameters() {
  numerics::NamedParameters<T> out;
  numerics::append_parameters(out, forward.gates);
  numerics::append_parameters(out, backward.gates);
  numerics::append_parameters(out, dec1);
  numerics::append_parameters(out, dec2);
  return out;
}

template <typename T>
std::vector<Tensor<T>> m3_forward(const M3Model<T>& model, const std::vector<Tensor<T>>& frames,
                                  const DropoutMasks<T>& dropout) {
  if (frames.size() != model.k) {
    throw ShapeError("m3_forward: window of " + std::to_string(frames.size()) + " frames, model expects k = " +
                     std::to_string(model.k));
  }
  if (!dropout.empty() && dropout.size() != frames.size()) {
    throw ShapeError("m3_forward: " + std::to_string(dropout.size()) + " dropout masks for " +
                     std::to_string(frames.size()) + " frames");
  }
  const std::size_t k = frames.size(), H = frames[0].dim(1), W = frames[0].dim(2);
  std::vector<Tensor<T>> fwd(k), bwd(k);
  auto state = numerics::ConvLSTMState<T>::zeros(model.forward.hidden_channels, H, W);
  for (std::size_t t = 0; t < k; ++t) {
    state = numerics::convlstm_step(frames[t], state, model.forward);
    fwd[t] = state.hidden;
  }
  state = numerics::ConvLSTMState<T>::zeros(model.backward.hidden_channels, H, W);
  for (std::size_t t = k; t-- > 0;) {
    state = numerics::convlstm_step(frames[t], state, model.backward);
    bwd[t] = state.hidden;
  }
  std::vector<Tensor<T>> out;
  out.reserve(k);
  for (std::size_t t = 0; t < k; ++t) {
    auto z = numerics::concat_channels(fwd[t], bwd[t]);
    if (!dropout.empty()) z = numerics::mul_constant(z, dropout[t]);
    auto d = numerics::conv2d(z, model.dec1, Activation::Relu);
    out.push_back(numerics::conv2d(d, model.dec2, Activation::Sigmoid));
  }
  return out;
}

template <typename T>
Tensor<T> m3_loss(const M3Model<T>& model, const std::vector<Tensor<T>>& frames, const std::vector<Tensor<T>>& labels,
                  const DropoutMasks<T>& dropout) {
  if (labels.size() != frames.size()) {
    throw ShapeError("m3_loss: " + std::to_string(frames.size()) + " frames but " + std::to_string(labels.size()) +
                     " label frames");
  }
  const auto out = m3_forward(model, frames, dropout);
  std::vector<Tensor<T>> terms;
  terms.reserve(out.size());
  for (std::size_t t = 0; t < out.size(); ++t) terms.push_back(numerics::binary_cross_entropy(labels[t], out[t]));
  return numerics::sum_scalars(terms);
}

imaging::BinaryVolume build_labels(const std::vector<imaging::EventPoint>& annotations, std::size_t frames,
                                   std::size_t height, std::size_t width, std::size_t factor) {
  if (factor < 1) throw ConfigError("downscale: must be >= 1");
  const std::size_t h = (height + factor - 1) / factor, w = (width + factor - 1) / factor;
  imaging::BinaryVolume seeds(frames, h, w);
  for (std::size_t i = 0; i < annotations.size(); ++i) {
    const auto& p = annotations[i];
    if (p.frame < 0 || p.row < 0 || p.col < 0 || static_cast<std::size_t>(p.frame) >= frames ||
        static_cast<std::size_t>(p.row) >= height || static_cast<std::size_t>(p.col) >= width) {
      throw ConfigError("annotations: row " + std::to_string(i + 1) + " (" + std::to_string(p.frame) + "," +
                        std::to_string(p.row) + "," + std::to_string(p.col) + ") lies outside " +
                        std::to_string(frames) + "x" + std::to_string(height) + "x" + std::to_string(width));
    }
    seeds.at(static_cast<std::size_t>(p.frame), static_cast<std::size_t>(p.row) / factor,
             static_cast<std::size_t>(p.col) / factor) = 1;
  }
  return imaging::dilate3d(seeds, 3);
}

M3TrainResult m3_train(const imaging::FrameSequence& seq, const imaging::BinaryVolume& labels, const M3Config& cfg,
                       const ProgressFn& progress) {
  cfg.validate();
  if (seq.frames < cfg.k) {
    throw ConfigError("m3.k: " + std::to_string(cfg.k) + " exceeds the " + std::to_string(seq.frames) +
                      " training frames");
  }
  if (labels.frames != seq.frames || labels.height != seq.height || labels.width != seq.width) {
    throw ShapeError("m3_train: labels " + std::to_string(labels.frames) + "x" + std::to_string(labels.height) + "x" +
                     std::to_string(labels.width) + " do not match frames " + std::to_string(seq.frames) + "x" +
                     std::to_string(seq.height) + "x" + std::to_string(seq.width));
  }
  numerics::retain_heap_memory();
  numerics::Rng rng(cfg.seed);
  M3TrainResult result{M3Model<float>::create(cfg, rng), {}, {}};
  auto named = result.model.parameters();
  std::vector<Tensor<float>*> params;
  for (auto& [name, p] : named) params.push_back(p);
  numerics::RMSProp<float> opt(cfg.learning_rate, cfg.decay);

  std::uniform_int_distribution<std::size_t> start_dist(0, seq.frames - cfg.k);
  const std::size_t mask_size = 2 * cfg.hidden * seq.frame_size();
  result.losses.reserve(cfg.iterations);
  result.window_starts.reserve(cfg.iterations);
  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    const std::size_t start = start_dist(rng);
    const auto transform = imaging::kAllTransforms[it % imaging::kAllTransforms.size()];
    const auto x = imaging::apply_transform(seq.slice_frames(start, cfg.k), transform);
    const auto z = imaging::apply_transform(labels.slice_frames(start, cfg.k), transform);
    DropoutMasks<float> masks;
    if (cfg.dropout > 0) {
      for (std::size_t t = 0; t < cfg.k; ++t) masks.push_back(numerics::dropout_mask<float>(mask_size, cfg.dropout, rng));
    }
    const auto loss = m3_loss(result.model, sequence_frames<float>(x, 0, cfg.k), label_frames<float>(z), masks);
    const double value = loss.item();
    if (!std::isfinite(value)) throw NumericError("M3 loss is not finite at iteration " + std::to_string(it));
    result.losses.push_back(value);
    result.window_starts.push_back(start);
    numerics::backward(loss);
    opt.step(params);
    if (progress) progress(it, value);
  }
  return result;
}

std::vector<std::size_t> window_starts(std::size_t frames, std::size_t k, std::size_t stride) {
  std::vector<std::size_t> starts;
  if (frames < k || k == 0) return starts;
  if (stride < 1) throw ConfigError("m3.stride: must be positive");
  const std::size_t step = std::min(stride, k);
  for (std::size_t s = 0; s + k <= frames; s += step) starts.push_back(s);
  if (starts.back() + k < frames) starts.push_back(frames - k);
  return starts;
}

imaging::BinaryVolume m3_activation(const M3Model<float>& model, const imaging::FrameSequence& seq,
                                    std::size_t stride) {
  if (seq.frames < model.k) {
    throw ConfigError("m3.k: " + std::to_string(model.k) + " exceeds the " + std::to_string(seq.frames) +
                      " frames to detect on");
  }
  numerics::NoGradGuard guard;
  std::vector<std::uint32_t> votes(seq.size(), 0);
  const std::size_t plane = seq.frame_size();
  for (std::size_t s : window_starts(seq.frames, model.k, stride)) {
    const auto out = m3_forward(model, sequence_frames<float>(seq, s, model.k));
    for (std::size_t t = 0; t < model.k; ++t) {
      const auto v = out[t].data();
      std::uint32_t* dst = votes.data() + (s + t) * plane;
      for (std::size_t p = 0; p < plane; ++p) dst[p] += v[p] > 0.5f ? 1u : 0u;
    }
  }
  imaging::BinaryVolume act(seq.frames, seq.height, seq.width);
  for (std::size_t i = 0; i < votes.size(); ++i) act.voxels[i] = votes[i] > 0 ? 1 : 0;
  return act;
}

std::vector<imaging::EventPoint> detections_from_activation(const imaging::BinaryVolume& activation,
                                                            std::size_t factor, int frame_offset) {
  std::vector<imaging::EventPoint> out;
  const int f = static_cast<int>(factor);
  for (const auto& region : imaging::label_regions(activation)) {
    const auto c = imaging::mass_center(region);
    out.push_back({c.frame + frame_offset, c.row * f, c.col * f});
  }
  return out;
}

std::vector<imaging::EventPoint> m3_detect(const M3Model<float>& model, const imaging::FrameSequence& seq,
                                           std::size_t factor, int frame_offset, std::size_t stride) {
  return detections_from_activation(m3_activation(model, seq, stride), factor, frame_offset);
}

template struct M3Model<float>;
template struct M3Model<double>;
template std::vector<Tensor<float>> m3_forward(const M3Model<float>&, const std::vector<Tensor<float>>&,
                                               const DropoutMasks<float>&);
template std::vector<Tensor<double>> m3_forward(const M3Model<double>&, const std::vector<Tensor<double>>&,
                                                const DropoutMasks<double>&);
template Tensor<float> m3_loss(const M3Model<float>&, const std::vector<Tensor<float>>&,
                               const std::vector<Tensor<float>>&, const DropoutMasks<float>&);
template Tensor<double> m3_loss(const M3Model<double>&, const std::vector<Tensor<double>>&,
                                const std::vector<Tensor<double>>&, const DropoutMasks<double>&);

}  // namespace celltrack::models
