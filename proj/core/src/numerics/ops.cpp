#include "celltrack/numerics/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <memory>

#include "celltrack/error.hpp"

namespace celltrack::numerics {

namespace {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatrixMap = Eigen::Map<RowMatrix<T>>;
template <typename T>
using ConstMatrixMap = Eigen::Map<const RowMatrix<T>>;
template <typename T>
using ColMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
// Column-major views put the pixel axis first so GEMMs run with M = H * W.
template <typename T>
using ColMap = Eigen::Map<ColMatrix<T>>;
template <typename T>
using ConstColMap = Eigen::Map<const ColMatrix<T>>;

template <typename T>
bool any_requires_grad(std::initializer_list<const Tensor<T>*> ts) {
  if (NoGradGuard::enabled()) return false;
  for (auto* t : ts) {
    if (t->requires_grad()) return true;
  }
  return false;
}

void require_same_dims(const Shape& a, const Shape& b, const char* op) {
  if (a != b) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a) + " vs " + shape_string(b));
  }
}

void require_chw(const Shape& d, const char* op) {
  if (d.size() != 3) throw ShapeError(std::string(op) + ": expected C x H x W, got " + shape_string(d));
}

// Patch matrix for output rows [r0, r1): (C * kh * kw) x ((r1 - r0) * W), row-major.
template <typename T>
void im2col(const T* x, std::size_t channels, std::size_t h, std::size_t w, std::size_t kh, std::size_t kw,
            std::size_t r0, std::size_t r1, T* col) {
  const auto ph = static_cast<std::ptrdiff_t>(kh / 2);
  const auto pw = static_cast<std::ptrdiff_t>(kw / 2);
  const auto H = static_cast<std::ptrdiff_t>(h);
  const auto W = static_cast<std::ptrdiff_t>(w);
  const std::size_t n = (r1 - r0) * w;
  for (std::size_t c = 0; c < channels; ++c) {
    const T* plane = x + c * h * w;
    for (std::size_t i = 0; i < kh; ++i) {
      for (std::size_t j = 0; j < kw; ++j) {
        T* dst = col + ((c * kh + i) * kw + j) * n;
        const std::ptrdiff_t di = static_cast<std::ptrdiff_t>(i) - ph;
        const std::ptrdiff_t dj = static_cast<std::ptrdiff_t>(j) - pw;
        const std::ptrdiff_t c0 = std::max<std::ptrdiff_t>(0, -dj);
        const std::ptrdiff_t c1 = std::min<std::ptrdiff_t>(W, W - dj);
        for (auto r = static_cast<std::ptrdiff_t>(r0); r < static_cast<std::ptrdiff_t>(r1); ++r) {
          T* out = dst + (r - static_cast<std::ptrdiff_t>(r0)) * W;
          const std::ptrdiff_t sr = r + di;
          if (sr < 0 || sr >= H) {
            std::fill(out, out + W, T(0));
            continue;
          }
          const T* src = plane + sr * W;
          std::fill(out, out + c0, T(0));
          std::copy(src + c0 + dj, src + c1 + dj, out + c0);
          std::fill(out + c1, out + W, T(0));
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const T* col, std::size_t channels, std::size_t h, std::size_t w, std::size_t kh,
                std::size_t kw, std::size_t r0, std::size_t r1, T* dx) {
  const auto ph = static_cast<std::ptrdiff_t>(kh / 2);
  const auto pw = static_cast<std::ptrdiff_t>(kw / 2);
  const auto H = static_cast<std::ptrdiff_t>(h);
  const auto W = static_cast<std::ptrdiff_t>(w);
  const std::size_t n = (r1 - r0) * w;
  for (std::size_t c = 0; c < channels; ++c) {
    T* plane = dx + c * h * w;
    for (std::size_t i = 0; i < kh; ++i) {
      for (std::size_t j = 0; j < kw; ++j) {
        const T* src = col + ((c * kh + i) * kw + j) * n;
        const std::ptrdiff_t di = static_cast<std::ptrdiff_t>(i) - ph;
        const std::ptrdiff_t dj = static_cast<std::ptrdiff_t>(j) - pw;
        const std::ptrdiff_t c0 = std::max<std::ptrdiff_t>(0, -dj);
        const std::ptrdiff_t c1 = std::min<std::ptrdiff_t>(W, W - dj);
        for (auto r = static_cast<std::ptrdiff_t>(r0); r < static_cast<std::ptrdiff_t>(r1); ++r) {
          const std::ptrdiff_t sr = r + di;
          if (sr < 0 || sr >= H) continue;
          const T* in = src + (r - static_cast<std::ptrdiff_t>(r0)) * W;
          T* out = plane + sr * W;
          for (std::ptrdiff_t cc = c0; cc < c1; ++cc) out[cc + dj] += in[cc];
        }
      }
    }
  }
}

// Rows per im2col block, sized so the patch block stays cache resident.
std::size_t conv_block_rows(std::size_t patch, std::size_t w, std::size_t h) {
  constexpr std::size_t target = 64 * 1024;  // floats
  const std::size_t rows = std::max<std::size_t>(1, target / std::max<std::size_t>(1, patch * w));
  return std::min(rows, h);
}

template <typename T>
T sigmoid_scalar(T v) {
  return T(1) / (T(1) + std::exp(-v));
}

template <typename T>
void apply_activation(std::vector<T>& v, Activation act) {
  switch (act) {
    case Activation::None:
      break;
    case Activation::Sigmoid:
      for (auto& x : v) x = sigmoid_scalar(x);
      break;
    case Activation::Tanh:
      for (auto& x : v) x = std::tanh(x);
      break;
    case Activation::Relu:
      for (auto& x : v) x = std::max(x, T(0));
      break;
  }
}

// Multiplies upstream gradient by the activation derivative expressed through its output.
template <typename T>
void activation_backward(std::span<const T> out, std::span<const T> upstream, Activation act, T* g) {
  const std::size_t n = out.size();
  switch (act) {
    case Activation::None:
      std::copy(upstream.begin(), upstream.end(), g);
      break;
    case Activation::Sigmoid:
      for (std::size_t i = 0; i < n; ++i) g[i] = upstream[i] * out[i] * (T(1) - out[i]);
      break;
    case Activation::Tanh:
      for (std::size_t i = 0; i < n; ++i) g[i] = upstream[i] * (T(1) - out[i] * out[i]);
      break;
    case Activation::Relu:
      for (std::size_t i = 0; i < n; ++i) g[i] = out[i] > T(0) ? upstream[i] : T(0);
      break;
  }
}

template <typename T>
Tensor<T> unary_elementwise(const Tensor<T>& a, Activation act) {
  std::vector<T> out(a.data().begin(), a.data().end());
  apply_activation(out, act);
  return Tensor<T>::from_op(a.dims(), std::move(out), {a}, [act](Node<T>& self) {
    auto& in = *self.inputs[0];
    if (!in.requires_grad) return;
    std::vector<T> g(self.value.size());
    activation_backward<T>(self.value, self.grad, act, g.data());
    auto& dst = in.ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
  });
}

}  // namespace

Activation parse_activation(std::string_view name) {
  if (name == "none") return Activation::None;
  if (name == "sigmoid") return Activation::Sigmoid;
  if (name == "tanh") return Activation::Tanh;
  if (name == "relu") return Activation::Relu;
  throw ConfigError("unknown activation '" + std::string(name) + "'");
}

std::string_view to_string(Activation act) {
  switch (act) {
    case Activation::None:
      return "none";
    case Activation::Sigmoid:
      return "sigmoid";
    case Activation::Tanh:
      return "tanh";
    case Activation::Relu:
      return "relu";
  }
  return "none";
}

template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& kernel, const Tensor<T>& bias, Activation act) {
  require_chw(input.dims(), "conv2d input");
  if (kernel.rank() != 4) throw ShapeError("conv2d: kernel must be O x C x kH x kW, got " + shape_string(kernel.dims()));
  const std::size_t C = input.dim(0), H = input.dim(1), W = input.dim(2);
  const std::size_t O = kernel.dim(0), KH = kernel.dim(2), KW = kernel.dim(3);
  if (kernel.dim(1) != C) {
    throw ShapeError("conv2d: kernel " + shape_string(kernel.dims()) + " does not accept input " +
                     shape_string(input.dims()));
  }
  if (KH % 2 == 0 || KW % 2 == 0) throw ShapeError("conv2d: kernel extents must be odd, got " + shape_string(kernel.dims()));
  if (bias.size() != O) {
    throw ShapeError("conv2d: bias " + shape_string(bias.dims()) + " does not match kernel " + shape_string(kernel.dims()));
  }

  const std::size_t K = C * KH * KW;
  const std::size_t HW = H * W;
  const bool pointwise = KH == 1 && KW == 1;
  const std::size_t block = pointwise ? H : conv_block_rows(K, W, H);

  std::vector<T> out(O * HW);
  {
    ConstColMap<T> wt(kernel.data().data(), K, O);
    if (pointwise) {
      ConstColMap<T> xt(input.data().data(), HW, K);
      ColMap<T> ot(out.data(), HW, O);
      ot.noalias() = xt * wt;
    } else {
      std::vector<T> col(K * block * W);
      for (std::size_t r0 = 0; r0 < H; r0 += block) {
        const std::size_t r1 = std::min(H, r0 + block);
        const auto n = static_cast<Eigen::Index>((r1 - r0) * W);
        im2col(input.data().data(), C, H, W, KH, KW, r0, r1, col.data());
        ConstColMap<T> ct(col.data(), n, static_cast<Eigen::Index>(K));
        Eigen::Map<ColMatrix<T>, 0, Eigen::OuterStride<>> ot(out.data() + r0 * W, n, static_cast<Eigen::Index>(O),
                                                            Eigen::OuterStride<>(static_cast<Eigen::Index>(HW)));
        ot.noalias() = ct * wt;
      }
    }
    const T* b = bias.data().data();
    for (std::size_t o = 0; o < O; ++o) {
      T* row = out.data() + o * HW;
      for (std::size_t i = 0; i < HW; ++i) row[i] += b[o];
    }
  }
  apply_activation(out, act);

  if (!any_requires_grad<T>({&input, &kernel, &bias})) {
    return Tensor<T>::constant({O, H, W}, std::move(out));
  }

  return Tensor<T>::from_op(
      {O, H, W}, std::move(out), {input, kernel, bias},
      [=](Node<T>& self) {
        auto& x = *self.inputs[0];
        auto& k = *self.inputs[1];
        auto& b = *self.inputs[2];
        std::vector<T> g(O * HW);
        activation_backward<T>(self.value, self.grad, act, g.data());
        if (b.requires_grad) {
          auto& db = b.ensure_grad();
          for (std::size_t o = 0; o < O; ++o) {
            T s = 0;
            const T* row = g.data() + o * HW;
            for (std::size_t i = 0; i < HW; ++i) s += row[i];
            db[o] += s;
          }
        }
        ConstColMap<T> kt(k.value.data(), K, O);
        if (pointwise) {
          ConstColMap<T> gt(g.data(), HW, O);
          ConstColMap<T> xt(x.value.data(), HW, K);
          if (k.requires_grad) {
            ColMap<T> dkt(k.ensure_grad().data(), K, O);
            dkt.noalias() += xt.transpose() * gt;
          }
          if (x.requires_grad) {
            ColMap<T> dxt(x.ensure_grad().data(), HW, K);
            dxt.noalias() += gt * kt.transpose();
          }
          return;
        }
        std::vector<T> col(K * block * W);
        std::vector<T> dcol(x.requires_grad ? K * block * W : 0);
        T* dx = x.requires_grad ? x.ensure_grad().data() : nullptr;
        for (std::size_t r0 = 0; r0 < H; r0 += block) {
          const std::size_t r1 = std::min(H, r0 + block);
          const auto n = static_cast<Eigen::Index>((r1 - r0) * W);
          Eigen::Map<const ColMatrix<T>, 0, Eigen::OuterStride<>> gt(
              g.data() + r0 * W, n, static_cast<Eigen::Index>(O), Eigen::OuterStride<>(static_cast<Eigen::Index>(HW)));
          if (k.requires_grad) {
            im2col(x.value.data(), C, H, W, KH, KW, r0, r1, col.data());
            ConstColMap<T> ct(col.data(), n, static_cast<Eigen::Index>(K));
            ColMap<T> dkt(k.ensure_grad().data(), K, O);
            dkt.noalias() += ct.transpose() * gt;
          }
          if (dx) {
            ColMap<T> dct(dcol.data(), n, static_cast<Eigen::Index>(K));
            dct.noalias() = gt * kt.transpose();
            col2im_add(dcol.data(), C, H, W, KH, KW, r0, r1, dx);
          }
        }
      });
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_dims(a.dims(), b.dims(), "add");
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + b.data()[i];
  return Tensor<T>::from_op(a.dims(), std::move(out), {a, b}, [](Node<T>& self) {
    for (auto& in : self.inputs) {
      if (!in->requires_grad) continue;
      auto& g = in->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
  });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_dims(a.dims(), b.dims(), "mul");
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
  return Tensor<T>::from_op(a.dims(), std::move(out), {a, b}, [](Node<T>& self) {
    auto& x = *self.inputs[0];
    auto& y = *self.inputs[1];
    if (x.requires_grad) {
      auto& g = x.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * y.value[i];
    }
    if (y.requires_grad) {
      auto& g = y.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * x.value[i];
    }
  });
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& a) {
  return unary_elementwise(a, Activation::Sigmoid);
}

template <typename T>
Tensor<T> tanh(const Tensor<T>& a) {
  return unary_elementwise(a, Activation::Tanh);
}

template <typename T>
Tensor<T> relu(const Tensor<T>& a) {
  return unary_elementwise(a, Activation::Relu);
}

template <typename T>
Tensor<T> activate(const Tensor<T>& a, Activation act) {
  return act == Activation::None ? a : unary_elementwise(a, act);
}

template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  require_chw(a.dims(), "concat_channels");
  require_chw(b.dims(), "concat_channels");
  if (a.dim(1) != b.dim(1) || a.dim(2) != b.dim(2)) {
    throw ShapeError("concat_channels: spatial mismatch " + shape_string(a.dims()) + " vs " + shape_string(b.dims()));
  }
  std::vector<T> out;
  out.reserve(a.size() + b.size());
  out.insert(out.end(), a.data().begin(), a.data().end());
  out.insert(out.end(), b.data().begin(), b.data().end());
  const std::size_t split = a.size();
  return Tensor<T>::from_op({a.dim(0) + b.dim(0), a.dim(1), a.dim(2)}, std::move(out), {a, b},
                            [split](Node<T>& self) {
                              auto& x = *self.inputs[0];
                              auto& y = *self.inputs[1];
                              if (x.requires_grad) {
                                auto& g = x.ensure_grad();
                                for (std::size_t i = 0; i < split; ++i) g[i] += self.grad[i];
                              }
                              if (y.requires_grad) {
                                auto& g = y.ensure_grad();
                                for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[split + i];
                              }
                            });
}

template <typename T>
Tensor<T> slice_channels(const Tensor<T>& a, std::size_t begin, std::size_t count) {
  require_chw(a.dims(), "slice_channels");
  if (begin + count > a.dim(0) || count == 0) {
    throw ShapeError("slice_channels: range [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                     ") outside " + shape_string(a.dims()));
  }
  const std::size_t plane = a.dim(1) * a.dim(2);
  const std::size_t offset = begin * plane;
  std::vector<T> out(a.data().begin() + offset, a.data().begin() + offset + count * plane);
  return Tensor<T>::from_op({count, a.dim(1), a.dim(2)}, std::move(out), {a}, [offset](Node<T>& self) {
    auto& g = self.inputs[0]->ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) g[offset + i] += self.grad[i];
  });
}

template <typename T>
Tensor<T> channel_softmax_wta(const Tensor<T>& logits) {
  require_chw(logits.dims(), "channel_softmax_wta");
  const std::size_t n = logits.dim(0);
  if (n < 1) throw ShapeError("channel_softmax_wta: no channels in " + shape_string(logits.dims()));
  const std::size_t plane = logits.dim(1) * logits.dim(2);
  const T* x = logits.data().data();
  std::vector<T> out(logits.size(), T(0));
  auto winners = std::make_shared<std::vector<std::uint32_t>>(plane);
  for (std::size_t p = 0; p < plane; ++p) {
    std::size_t w = 0;
    for (std::size_t c = 1; c < n; ++c) {
      if (x[c * plane + p] > x[w * plane + p]) w = c;
    }
    const T top = x[w * plane + p];
    T denom = 0;
    for (std::size_t c = 0; c < n; ++c) denom += std::exp(x[c * plane + p] - top);
    out[w * plane + p] = T(1) / denom;
    (*winners)[p] = static_cast<std::uint32_t>(w);
  }
  return Tensor<T>::from_op(logits.dims(), std::move(out), {logits}, [n, plane, winners](Node<T>& self) {
    auto& in = *self.inputs[0];
    auto& g = in.ensure_grad();
    const T* xv = in.value.data();
    std::vector<T> prob(n);
    for (std::size_t p = 0; p < plane; ++p) {
      const std::size_t w = (*winners)[p];
      const T upstream = self.grad[w * plane + p];
      if (upstream == T(0)) continue;
      const T top = xv[w * plane + p];
      T denom = 0;
      for (std::size_t c = 0; c < n; ++c) {
        prob[c] = std::exp(xv[c * plane + p] - top);
        denom += prob[c];
      }
      for (std::size_t c = 0; c < n; ++c) prob[c] /= denom;
      const T pw = prob[w];
      for (std::size_t c = 0; c < n; ++c) {
        g[c * plane + p] += upstream * pw * ((c == w ? T(1) : T(0)) - prob[c]);
      }
    }
  });
}

template <typename T>
Tensor<T> mul_constant(const Tensor<T>& a, const std::vector<T>& factors) {
  if (factors.size() != a.size()) {
    throw ShapeError("mul_constant: " + std::to_string(factors.size()) + " factors for " + shape_string(a.dims()));
  }
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * factors[i];
  return Tensor<T>::from_op(a.dims(), std::move(out), {a}, [factors](Node<T>& self) {
    auto& g = self.inputs[0]->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * factors[i];
  });
}

template <typename T>
Tensor<T> add_constant(const Tensor<T>& a, const std::vector<T>& offsets) {
  if (offsets.size() != a.size()) {
    throw ShapeError("add_constant: " + std::to_string(offsets.size()) + " offsets for " + shape_string(a.dims()));
  }
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + offsets[i];
  return Tensor<T>::from_op(a.dims(), std::move(out), {a}, [](Node<T>& self) {
    auto& g = self.inputs[0]->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
}

template <typename T>
Tensor<T> binary_cross_entropy(const Tensor<T>& target, const Tensor<T>& output) {
  require_same_dims(target.dims(), output.dims(), "binary_cross_entropy");
  const T eps = static_cast<T>(kBceEpsilon);
  double loss = 0;
  const auto t = target.data();
  const auto o = output.data();
  for (std::size_t i = 0; i < o.size(); ++i) {
    const double oc = std::clamp<double>(o[i], eps, 1.0 - eps);
    loss -= t[i] * std::log(oc) + (1.0 - t[i]) * std::log(1.0 - oc);
  }
  return Tensor<T>::from_op({1}, {static_cast<T>(loss)}, {target, output}, [eps](Node<T>& self) {
    const T up = self.grad[0];
    auto& tgt = *self.inputs[0];
    auto& out = *self.inputs[1];
    if (out.requires_grad) {
      auto& g = out.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) {
        const T oc = std::clamp(out.value[i], eps, T(1) - eps);
        const T tv = tgt.value[i];
        g[i] += up * (-(tv / oc) + (T(1) - tv) / (T(1) - oc));
      }
    }
    if (tgt.requires_grad) {
      auto& g = tgt.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) {
        const T oc = std::clamp(out.value[i], eps, T(1) - eps);
        g[i] += up * (std::log(T(1) - oc) - std::log(oc));
      }
    }
  });
}

template <typename T>
Tensor<T> sum_scalars(const std::vector<Tensor<T>>& terms) {
  if (terms.empty()) return Tensor<T>::zeros({1});
  double total = 0;
  for (const auto& t : terms) {
    if (t.size() != 1) throw ShapeError("sum_scalars: non-scalar term " + shape_string(t.dims()));
    total += t.item();
  }
  return Tensor<T>::from_op({1}, {static_cast<T>(total)}, terms, [](Node<T>& self) {
    for (auto& in : self.inputs) {
      if (in->requires_grad) in->ensure_grad()[0] += self.grad[0];
    }
  });
}

template <typename T>
Tensor<T> sum(const Tensor<T>& a) {
  double s = 0;
  for (auto v : a.data()) s += v;
  return Tensor<T>::from_op({1}, {static_cast<T>(s)}, {a}, [](Node<T>& self) {
    auto& g = self.inputs[0]->ensure_grad();
    for (auto& v : g) v += self.grad[0];
  });
}

template <typename T>
Tensor<T> mean(const Tensor<T>& a) {
  double s = 0;
  for (auto v : a.data()) s += v;
  const T n = static_cast<T>(a.size());
  return Tensor<T>::from_op({1}, {static_cast<T>(s / a.size())}, {a}, [n](Node<T>& self) {
    auto& g = self.inputs[0]->ensure_grad();
    for (auto& v : g) v += self.grad[0] / n;
  });
}

#define CELLTRACK_INSTANTIATE_OPS(T)                                                               \
  template Tensor<T> conv2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, Activation);     \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                      \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                                      \
  template Tensor<T> sigmoid(const Tensor<T>&);                                                    \
  template Tensor<T> tanh(const Tensor<T>&);                                                       \
  template Tensor<T> relu(const Tensor<T>&);                                                       \
  template Tensor<T> activate(const Tensor<T>&, Activation);                                       \
  template Tensor<T> concat_channels(const Tensor<T>&, const Tensor<T>&);                          \
  template Tensor<T> slice_channels(const Tensor<T>&, std::size_t, std::size_t);                   \
  template Tensor<T> channel_softmax_wta(const Tensor<T>&);                                        \
  template Tensor<T> mul_constant(const Tensor<T>&, const std::vector<T>&);                        \
  template Tensor<T> add_constant(const Tensor<T>&, const std::vector<T>&);                        \
  template Tensor<T> binary_cross_entropy(const Tensor<T>&, const Tensor<T>&);                     \
  template Tensor<T> sum_scalars(const std::vector<Tensor<T>>&);                                   \
  template Tensor<T> sum(const Tensor<T>&);                                                        \
  template Tensor<T> mean(const Tensor<T>&);

CELLTRACK_INSTANTIATE_OPS(float)
CELLTRACK_INSTANTIATE_OPS(double)

}  // namespace celltrack::numerics
