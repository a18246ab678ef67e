#include "celltrack/models/m2.hpp"

#include <cmath>
#include <string>

#include "celltrack/error.hpp"
#include "celltrack/imaging/transform.hpp"
#include "celltrack/numerics/optimizer.hpp"

namespace celltrack::models {

using numerics::Activation;
using numerics::LayerParams;
using numerics::Tensor;

void M2Config::validate() const {
  if (hidden < 1) throw ConfigError("m2.hidden: must be positive");
  if (kernel % 2 == 0) throw ConfigError("m2.kernel: must be odd");
  if (window < 1) throw ConfigError("m2.window: must be positive");
  if (!(learning_rate > 0)) throw ConfigError("m2.learning_rate: must be positive");
  if (!(decay >= 0 && decay < 1)) throw ConfigError("m2.decay: must lie in [0, 1)");
}

template <typename T>
M2Model<T> M2Model<T>::create(const M2Config& cfg, numerics::Rng& rng) {
  cfg.validate();
  const std::size_t h = cfg.hidden, k = cfg.kernel;
  M2Model m;
  m.enc1 = LayerParams<T>::create("enc1", h, 1, k, rng);
  m.enc2 = LayerParams<T>::create("enc2", h, h, k, rng);
  m.lstm = numerics::ConvLSTMParams<T>::create("lstm", h, h, k, rng);
  m.dec1 = LayerParams<T>::create("dec1", h, h, k, rng);
  m.dec2 = LayerParams<T>::create("dec2", 1, h, 1, rng);
  return m;
}

template <typename T>
numerics::NamedParameters<T> M2Model<T>::parameters() {
  numerics::NamedParameters<T> out;
  numerics::append_parameters(out, enc1);
  numerics::append_parameters(out, enc2);
  numerics::append_parameters(out, lstm.gates);
  numerics::append_parameters(out, dec1);
  numerics::append_parameters(out, dec2);
  return out;
}

template <typename T>
std::vector<Tensor<T>> m2_forward(const M2Model<T>& model, const std::vector<Tensor<T>>& frames) {
  std::vector<Tensor<T>> out;
  if (frames.empty()) return out;
  out.reserve(frames.size());
  auto state = numerics::ConvLSTMState<T>::zeros(model.lstm.hidden_channels, frames[0].dim(1), frames[0].dim(2));
  for (const auto& x : frames) {
    auto a = numerics::conv2d(x, model.enc1, Activation::Relu);
    a = numerics::conv2d(a, model.enc2, Activation::Relu);
    state = numerics::convlstm_step(a, state, model.lstm);
    auto d = numerics::conv2d(state.hidden, model.dec1, Activation::Relu);
    out.push_back(numerics::conv2d(d, model.dec2, Activation::Sigmoid));
  }
  return out;
}

template <typename T>
Tensor<T> m2_loss(const M2Model<T>& model, const std::vector<Tensor<T>>& context, const std::vector<Tensor<T>>& events) {
  if (context.size() != events.size()) {
    throw ShapeError("m2_loss: " + std::to_string(context.size()) + " context frames but " +
                     std::to_string(events.size()) + " event frames");
  }
  const auto out = m2_forward(model, context);
  std::vector<Tensor<T>> terms;
  terms.reserve(out.size());
  for (std::size_t t = 0; t < out.size(); ++t) terms.push_back(numerics::binary_cross_entropy(events[t], out[t]));
  return numerics::sum_scalars(terms);
}

template <typename T>
std::vector<Tensor<T>> volume_frames(const imaging::BinaryVolume& vol) {
  std::vector<Tensor<T>> out;
  out.reserve(vol.frames);
  for (std::size_t t = 0; t < vol.frames; ++t) {
    const auto f = vol.frame(t);
    out.push_back(Tensor<T>::constant({1, vol.height, vol.width}, std::vector<T>(f.begin(), f.end())));
  }
  return out;
}

M2TrainResult m2_train(const imaging::BinaryVolume& y, const events::EventSimConfig& sim, const M2Config& cfg,
                       const ProgressFn& progress) {
  cfg.validate();
  sim.validate();
  if (cfg.window > y.frames) {
    throw ConfigError("m2.window: " + std::to_string(cfg.window) + " frames exceeds the sequence length " +
                      std::to_string(y.frames));
  }
  numerics::retain_heap_memory();
  numerics::Rng rng(cfg.seed);
  std::mt19937_64 sim_rng(sim.seed);
  M2TrainResult result{M2Model<float>::create(cfg, rng), {}};
  auto named = result.model.parameters();
  std::vector<Tensor<float>*> params;
  for (auto& [name, p] : named) params.push_back(p);
  numerics::RMSProp<float> opt(cfg.learning_rate, cfg.decay);

  std::uniform_int_distribution<std::size_t> start_dist(0, y.frames - cfg.window);
  result.losses.reserve(cfg.iterations);
  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    const std::size_t start = start_dist(rng);
    const auto transform = imaging::kAllTransforms[it % imaging::kAllTransforms.size()];
    const auto window = imaging::apply_transform(y.slice_frames(start, cfg.window), transform);
    const auto pair = events::generate_pair(window, sim, sim_rng);
    const auto loss = m2_loss(result.model, volume_frames<float>(pair.context), volume_frames<float>(pair.events));
    const double value = loss.item();
    if (!std::isfinite(value)) throw NumericError("M2 loss is not finite at iteration " + std::to_string(it));
    result.losses.push_back(value);
    numerics::backward(loss);
    opt.step(params);
    if (progress) progress(it, value);
  }
  return result;
}

imaging::Volume3<float> m2_infer(const M2Model<float>& model, const imaging::BinaryVolume& y) {
  numerics::NoGradGuard guard;
  imaging::Volume3<float> out(y.frames, y.height, y.width);
  if (y.frames == 0) return out;
  auto state = numerics::ConvLSTMState<float>::zeros(model.lstm.hidden_channels, y.height, y.width);
  for (std::size_t t = 0; t < y.frames; ++t) {
    const auto f = y.frame(t);
    const auto x = Tensor<float>::constant({1, y.height, y.width}, std::vector<float>(f.begin(), f.end()));
    auto a = numerics::conv2d(x, model.enc1, Activation::Relu);
    a = numerics::conv2d(a, model.enc2, Activation::Relu);
    state = numerics::convlstm_step(a, state, model.lstm);
    const auto d = numerics::conv2d(state.hidden, model.dec1, Activation::Relu);
    const auto p = numerics::conv2d(d, model.dec2, Activation::Sigmoid);
    std::copy(p.data().begin(), p.data().end(), out.frame(t).begin());
  }
  return out;
}

template struct M2Model<float>;
template struct M2Model<double>;
template std::vector<Tensor<float>> m2_forward(const M2Model<float>&, const std::vector<Tensor<float>>&);
template std::vector<Tensor<double>> m2_forward(const M2Model<double>&, const std::vector<Tensor<double>>&);
template Tensor<float> m2_loss(const M2Model<float>&, const std::vector<Tensor<float>>&,
                               const std::vector<Tensor<float>>&);
template Tensor<double> m2_loss(const M2Model<double>&, const std::vector<Tensor<double>>&,
                                const std::vector<Tensor<double>>&);
template std::vector<Tensor<float>> volume_frames(const imaging::BinaryVolume&);
template std::vector<Tensor<double>> volume_frames(const imaging::BinaryVolume&);

}  // namespace celltrack::models
