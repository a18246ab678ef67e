#include "celltrack/numerics/layers.hpp"

#include <cmath>

#include "celltrack/error.hpp"

namespace celltrack::numerics {

double xavier_bound(const Shape& dims) {
  double fan_in = 0;
  double fan_out = 0;
  if (dims.size() == 4) {
    const double receptive = static_cast<double>(dims[2] * dims[3]);
    fan_in = static_cast<double>(dims[1]) * receptive;
    fan_out = static_cast<double>(dims[0]) * receptive;
  } else if (dims.size() == 2) {
    fan_in = static_cast<double>(dims[1]);
    fan_out = static_cast<double>(dims[0]);
  } else if (dims.size() == 1) {
    fan_in = fan_out = static_cast<double>(dims[0]);
  } else {
    throw ShapeError("xavier_init: cannot derive fans from " + shape_string(dims));
  }
  return std::sqrt(6.0 / (fan_in + fan_out));
}

template <typename T>
std::vector<T> xavier_uniform(const Shape& dims, Rng& rng) {
  const double bound = xavier_bound(dims);
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<T> out(shape_size(dims));
  for (auto& v : out) v = static_cast<T>(dist(rng));
  return out;
}

template <typename T>
LayerParams<T> LayerParams<T>::create(std::string role, std::size_t out, std::size_t in, std::size_t k, Rng& rng) {
  if (k % 2 == 0) throw ShapeError("layer '" + role + "': kernel size must be odd, got " + std::to_string(k));
  Shape kdims{out, in, k, k};
  auto kernel = Tensor<T>::parameter(kdims, xavier_uniform<T>(kdims, rng));
  auto bias = Tensor<T>::parameter({out}, std::vector<T>(out, T(0)));
  return {std::move(kernel), std::move(bias), std::move(role)};
}

template <typename T>
ConvLSTMParams<T> ConvLSTMParams<T>::create(std::string role, std::size_t input_channels,
                                            std::size_t hidden_channels, std::size_t k, Rng& rng) {
  return {LayerParams<T>::create(std::move(role), 4 * hidden_channels, input_channels + hidden_channels, k, rng),
          hidden_channels};
}

template <typename T>
ConvLSTMState<T> convlstm_step(const Tensor<T>& x, const ConvLSTMState<T>& state, const ConvLSTMParams<T>& params) {
  const std::size_t hc = params.hidden_channels;
  if (state.hidden.dims() != state.cell.dims()) {
    throw ShapeError("convlstm_step: hidden " + shape_string(state.hidden.dims()) + " and cell " +
                     shape_string(state.cell.dims()) + " differ");
  }
  if (state.hidden.rank() != 3 || state.hidden.dim(0) != hc || x.rank() != 3 ||
      state.hidden.dim(1) != x.dim(1) || state.hidden.dim(2) != x.dim(2)) {
    throw ShapeError("convlstm_step: state " + shape_string(state.hidden.dims()) + " does not fit input " +
                     shape_string(x.dims()) + " with " + std::to_string(hc) + " hidden channels");
  }
  auto pre = conv2d(concat_channels(x, state.hidden), params.gates, Activation::None);
  auto i = sigmoid(slice_channels(pre, 0, hc));
  auto f = sigmoid(slice_channels(pre, hc, hc));
  auto o = sigmoid(slice_channels(pre, 2 * hc, hc));
  auto g = tanh(slice_channels(pre, 3 * hc, hc));
  auto cell = add(mul(f, state.cell), mul(i, g));
  auto hidden = mul(o, tanh(cell));
  return {std::move(hidden), std::move(cell)};
}

template <typename T>
std::vector<T> dropout_mask(std::size_t n, double rate, Rng& rng) {
  if (rate < 0.0 || rate >= 1.0) throw ConfigError("dropout rate must be in [0, 1), got " + std::to_string(rate));
  std::bernoulli_distribution drop(rate);
  const T keep = static_cast<T>(1.0 / (1.0 - rate));
  std::vector<T> mask(n);
  for (auto& m : mask) m = drop(rng) ? T(0) : keep;
  return mask;
}

template std::vector<float> xavier_uniform<float>(const Shape&, Rng&);
template std::vector<double> xavier_uniform<double>(const Shape&, Rng&);
template struct LayerParams<float>;
template struct LayerParams<double>;
template struct ConvLSTMParams<float>;
template struct ConvLSTMParams<double>;
template ConvLSTMState<float> convlstm_step(const Tensor<float>&, const ConvLSTMState<float>&,
                                           const ConvLSTMParams<float>&);
template ConvLSTMState<double> convlstm_step(const Tensor<double>&, const ConvLSTMState<double>&,
                                            const ConvLSTMParams<double>&);
template std::vector<float> dropout_mask<float>(std::size_t, double, Rng&);
template std::vector<double> dropout_mask<double>(std::size_t, double, Rng&);

}  // namespace celltrack::numerics
