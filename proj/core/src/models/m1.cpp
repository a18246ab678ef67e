#include "celltrack/models/m1.hpp"

#include <algorithm>
#include <cmath>

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
Tensor<T> frame_tensor(const imaging::FrameSequence& seq, std::size_t t) {
  const auto f = seq.frame(t);
  return Tensor<T>::constant({1, seq.height, seq.width}, std::vector<T>(f.begin(), f.end()));
}

std::vector<std::size_t> sample_frames(std::size_t frames, std::size_t wanted) {
  std::vector<std::size_t> out;
  if (wanted == 0 || wanted >= frames) {
    for (std::size_t t = 0; t < frames; ++t) out.push_back(t);
    return out;
  }
  for (std::size_t i = 0; i < wanted; ++i) out.push_back(i * (frames - 1) / (wanted - 1 == 0 ? 1 : wanted - 1));
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace

void M1Config::validate() const {
  if (channels < 1) throw ConfigError("m1.channels: must be positive");
  if (hidden < 1) throw ConfigError("m1.hidden: must be positive");
  if (kernel % 2 == 0) throw ConfigError("m1.kernel: must be odd");
  if (!(noise >= 0)) throw ConfigError("m1.noise: must be nonnegative");
  if (!(learning_rate > 0)) throw ConfigError("m1.learning_rate: must be positive");
  if (!(decay >= 0 && decay < 1)) throw ConfigError("m1.decay: must lie in [0, 1)");
  if (area_max < area_min) throw ConfigError("m1.area_max: must be >= area_min");
}

template <typename T>
M1Model<T> M1Model<T>::create(const M1Config& cfg, numerics::Rng& rng) {
  cfg.validate();
  const std::size_t k = cfg.kernel, h = cfg.hidden, n = cfg.channels;
  M1Model m;
  m.enc1 = LayerParams<T>::create("enc1", h, 1, k, rng);
  m.enc2 = LayerParams<T>::create("enc2", h, h, k, rng);
  m.enc3 = LayerParams<T>::create("enc3", n, h, k, rng);
  m.dec1 = LayerParams<T>::create("dec1", h, n, k, rng);
  m.dec2 = LayerParams<T>::create("dec2", h, h, k, rng);
  m.dec3 = LayerParams<T>::create("dec3", 1, h, 1, rng);
  m.channels = n;
  return m;
}

template <typename T>
numerics::NamedParameters<T> M1Model<T>::parameters() {
  numerics::NamedParameters<T> out;
  for (auto* layer : {&enc1, &enc2, &enc3, &dec1, &dec2, &dec3}) numerics::append_parameters(out, *layer);
  return out;
}

template <typename T>
M1Perturbation<T> M1Perturbation<T>::draw(std::size_t channels, std::size_t height, std::size_t width,
                                          double amplitude, numerics::Rng& rng) {
  M1Perturbation p;
  p.dropped_channel = std::uniform_int_distribution<std::size_t>(0, channels - 1)(rng);
  std::uniform_real_distribution<double> u(-amplitude, amplitude);
  p.noise.resize(channels * height * width);
  for (auto& v : p.noise) v = static_cast<T>(u(rng));
  return p;
}

template <typename T>
M1Output<T> m1_forward(const M1Model<T>& model, const Tensor<T>& x, const M1Perturbation<T>* perturbation) {
  auto a = numerics::conv2d(x, model.enc1, Activation::Sigmoid);
  a = numerics::conv2d(a, model.enc2, Activation::Sigmoid);
  auto h = numerics::channel_softmax_wta(numerics::conv2d(a, model.enc3, Activation::None));
  auto z = h;
  if (perturbation) {
    const std::size_t plane = x.dim(1) * x.dim(2);
    std::vector<T> keep(h.size(), T(1));
    if (perturbation->dropped_channel < model.channels) {
      std::fill_n(keep.begin() + static_cast<std::ptrdiff_t>(perturbation->dropped_channel * plane), plane, T(0));
    }
    z = numerics::add_constant(numerics::mul_constant(z, keep), perturbation->noise);
  }
  auto d = numerics::conv2d(z, model.dec1, Activation::Sigmoid);
  d = numerics::conv2d(d, model.dec2, Activation::Sigmoid);
  return {h, numerics::conv2d(d, model.dec3, Activation::Sigmoid)};
}

template <typename T>
Tensor<T> m1_loss(const M1Model<T>& model, const Tensor<T>& x, const M1Perturbation<T>* perturbation) {
  return numerics::binary_cross_entropy(x, m1_forward(model, x, perturbation).reconstruction);
}

M1TrainResult m1_train(const imaging::FrameSequence& seq, const M1Config& cfg, const ProgressFn& progress) {
  cfg.validate();
  if (seq.frames < 1) throw ShapeError("m1_train: empty sequence");
  numerics::retain_heap_memory();
  numerics::Rng rng(cfg.seed);
  M1TrainResult result{M1Model<float>::create(cfg, rng), {}};
  auto& model = result.model;
  auto named = model.parameters();
  std::vector<Tensor<float>*> params;
  for (auto& [name, p] : named) params.push_back(p);
  numerics::RMSProp<float> opt(cfg.learning_rate, cfg.decay);

  const auto views = imaging::augment(seq);
  const std::size_t cycle = seq.frames * views.size();
  result.losses.reserve(cfg.iterations);
  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    const std::size_t j = it % cycle;
    const auto& view = views[j / seq.frames];
    const auto x = frame_tensor<float>(view, j % seq.frames);
    auto pert = M1Perturbation<float>::draw(cfg.channels, view.height, view.width, cfg.noise, rng);
    if (!cfg.channel_drop) pert.dropped_channel = cfg.channels;
    const auto loss = m1_loss(model, x, &pert);
    const double value = loss.item();
    if (!std::isfinite(value)) throw NumericError("M1 loss is not finite at iteration " + std::to_string(it));
    result.losses.push_back(value);
    numerics::backward(loss);
    opt.step(params);
    if (progress) progress(it, value);
  }
  return result;
}

std::vector<float> m1_feature_maps(const M1Model<float>& model, const imaging::FrameSequence& seq, std::size_t t) {
  numerics::NoGradGuard guard;
  const auto out = m1_forward(model, frame_tensor<float>(seq, t));
  return {out.h.data().begin(), out.h.data().end()};
}

std::vector<double> channel_scores(const M1Model<float>& model, const imaging::FrameSequence& seq,
                                   const M1Config& cfg) {
  const std::size_t plane = seq.frame_size();
  std::vector<double> scores(model.channels, 0.0);
  const auto frames = sample_frames(seq.frames, cfg.selection_frames);
  for (std::size_t t : frames) {
    const auto h = m1_feature_maps(model, seq, t);
    for (std::size_t c = 0; c < model.channels; ++c) {
      const auto bin = imaging::binarize(std::span<const float>(h.data() + c * plane, plane), 0.0);
      const auto eroded = imaging::erode2d(bin, seq.height, seq.width);
      for (const auto& comp : imaging::connected_components_2d(eroded, seq.height, seq.width)) {
        if (comp.area >= cfg.area_min && comp.area <= cfg.area_max && comp.compactness() >= cfg.compactness_min) {
          scores[c] += 1.0;
        }
      }
    }
  }
  for (auto& s : scores) s /= static_cast<double>(frames.size());
  return scores;
}

std::size_t select_cell_channel(const M1Model<float>& model, const imaging::FrameSequence& seq,
                                const M1Config& cfg) {
  const auto scores = channel_scores(model, seq, cfg);
  const auto best = std::max_element(scores.begin(), scores.end());
  if (*best <= 0.0) throw NumericError("M1 model is degenerate: no channel contains compact cell-sized objects");
  return static_cast<std::size_t>(best - scores.begin());
}

imaging::BinaryVolume extract_cell_maps(const M1Model<float>& model, const imaging::FrameSequence& seq) {
  if (model.selected_channel < 0 || static_cast<std::size_t>(model.selected_channel) >= model.channels) {
    throw ConfigError("M1 model has no valid selected channel");
  }
  const std::size_t plane = seq.frame_size();
  const auto c = static_cast<std::size_t>(model.selected_channel);
  imaging::BinaryVolume out(seq.frames, seq.height, seq.width);
  for (std::size_t t = 0; t < seq.frames; ++t) {
    const auto h = m1_feature_maps(model, seq, t);
    const auto bin = imaging::binarize(std::span<const float>(h.data() + c * plane, plane), 0.0);
    const auto eroded = imaging::erode2d(bin, seq.height, seq.width);
    std::copy(eroded.begin(), eroded.end(), out.frame(t).begin());
  }
  return out;
}

std::size_t activated_channels(const M1Model<float>& model, const imaging::FrameSequence& seq) {
  const std::size_t plane = seq.frame_size();
  std::vector<bool> active(model.channels, false);
  for (std::size_t t = 0; t < seq.frames; ++t) {
    const auto h = m1_feature_maps(model, seq, t);
    for (std::size_t c = 0; c < model.channels; ++c) {
      if (active[c]) continue;
      active[c] = std::any_of(h.begin() + static_cast<std::ptrdiff_t>(c * plane),
                              h.begin() + static_cast<std::ptrdiff_t>((c + 1) * plane), [](float v) { return v != 0; });
    }
  }
  return static_cast<std::size_t>(std::count(active.begin(), active.end(), true));
}

template struct M1Model<float>;
template struct M1Model<double>;
template struct M1Perturbation<float>;
template struct M1Perturbation<double>;
template M1Output<float> m1_forward(const M1Model<float>&, const Tensor<float>&, const M1Perturbation<float>*);
template M1Output<double> m1_forward(const M1Model<double>&, const Tensor<double>&, const M1Perturbation<double>*);
template Tensor<float> m1_loss(const M1Model<float>&, const Tensor<float>&, const M1Perturbation<float>*);
template Tensor<double> m1_loss(const M1Model<double>&, const Tensor<double>&, const M1Perturbation<double>*);

}  // namespace celltrack::models
