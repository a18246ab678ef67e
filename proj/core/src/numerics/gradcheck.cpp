#include "celltrack/numerics/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "celltrack/error.hpp"

namespace celltrack::numerics {

double gradient_relative_error(double analytic, double numeric) {
  const double diff = std::abs(analytic - numeric);
  const double scale = std::max(std::abs(analytic), std::abs(numeric));
  if (scale < 1e-6) return diff;
  return diff / scale;
}

namespace {

std::vector<std::size_t> sample_indices(std::size_t n, std::size_t limit) {
  std::vector<std::size_t> idx;
  if (limit == 0 || limit >= n) {
    idx.resize(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    return idx;
  }
  for (std::size_t k = 0; k < limit; ++k) idx.push_back(limit == 1 ? 0 : k * (n - 1) / (limit - 1));
  idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
  return idx;
}

template <typename T>
std::vector<std::vector<double>> analytic_gradients(const LossFn<T>& loss, const NamedParameters<T>& params,
                                                    bool& finite) {
  for (auto& [name, p] : params) p->zero_grad();
  auto l = loss();
  finite = std::isfinite(static_cast<double>(l.item()));
  backward(l);
  std::vector<std::vector<double>> grads;
  for (auto& [name, p] : params) {
    auto g = p->grad();
    std::vector<double> copy(p->size(), 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) copy[i] = g[i];
    grads.push_back(std::move(copy));
    p->zero_grad();
  }
  return grads;
}

template <typename R>
double central_difference(const LossFn<R>& loss, Tensor<R>& param, std::size_t i, double eps, bool& finite) {
  NoGradGuard guard;
  auto data = param.mutable_data();
  const R saved = data[i];
  data[i] = static_cast<R>(saved + eps);
  const double plus = loss().item();
  data[i] = static_cast<R>(saved - eps);
  const double minus = loss().item();
  data[i] = saved;
  if (!std::isfinite(plus) || !std::isfinite(minus)) finite = false;
  return (plus - minus) / (2.0 * eps);
}

template <typename T, typename R>
GradCheckReport run_check(const LossFn<T>& loss, const NamedParameters<T>& params, const LossFn<R>& ref_loss,
                          const NamedParameters<R>& ref_params, const GradCheckOptions& options) {
  if (params.size() != ref_params.size()) throw ShapeError("finite_diff_check: parameter lists differ in length");
  GradCheckReport report;
  bool finite = true;
  const auto grads = analytic_gradients(loss, params, finite);
  report.finite = finite;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor<R>& ref = *ref_params[k].second;
    if (ref.size() != params[k].second->size()) throw ShapeError("finite_diff_check: parameter sizes differ");
    for (std::size_t i : sample_indices(ref.size(), options.max_elements_per_parameter)) {
      const double numeric = central_difference(ref_loss, ref, i, options.epsilon, report.finite);
      const double analytic = grads[k][i];
      const double err = gradient_relative_error(analytic, numeric);
      ++report.elements_checked;
      if (!std::isfinite(err)) report.finite = false;
      if (report.worst_parameter.empty() || err > report.max_relative_error) {
        report.max_relative_error = err;
        report.worst_parameter = params[k].first;
        report.worst_index = i;
        report.worst_analytic = analytic;
        report.worst_numeric = numeric;
      }
    }
  }
  return report;
}

}  // namespace

template <typename T>
GradCheckReport finite_diff_check(const LossFn<T>& loss, const NamedParameters<T>& params,
                                  const GradCheckOptions& options) {
  return run_check<T, T>(loss, params, loss, params, options);
}

template <typename T>
GradCheckReport finite_diff_check_reference(const LossFn<T>& loss, const NamedParameters<T>& params,
                                            const LossFn<double>& reference_loss,
                                            const NamedParameters<double>& reference_params,
                                            const GradCheckOptions& options) {
  return run_check<T, double>(loss, params, reference_loss, reference_params, options);
}

template GradCheckReport finite_diff_check<float>(const LossFn<float>&, const NamedParameters<float>&,
                                                  const GradCheckOptions&);
template GradCheckReport finite_diff_check<double>(const LossFn<double>&, const NamedParameters<double>&,
                                                   const GradCheckOptions&);
template GradCheckReport finite_diff_check_reference<float>(const LossFn<float>&, const NamedParameters<float>&,
                                                            const LossFn<double>&, const NamedParameters<double>&,
                                                            const GradCheckOptions&);
template GradCheckReport finite_diff_check_reference<double>(const LossFn<double>&, const NamedParameters<double>&,
                                                             const LossFn<double>&, const NamedParameters<double>&,
                                                             const GradCheckOptions&);

}  // namespace celltrack::numerics
