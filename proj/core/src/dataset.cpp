#include "mwdwd/dataset.hpp"

#include <cmath>
#include <string>

#include "mwdwd/error.hpp"

namespace mwdwd {

Dataset::Dataset(Shape dims, std::vector<double> x, std::vector<int> y)
    : dims_(std::move(dims)), x_(std::move(x)), y_(std::move(y)) {
  if (dims_.empty()) throw DimensionError("dataset predictors need at least one mode");
  for (auto p : dims_)
    if (p == 0) throw DimensionError("dataset extents must be positive");
  features_ = shape_size(dims_);
  if (x_.size() != features_ * y_.size())
    throw DimensionError("dataset expects " + std::to_string(features_ * y_.size()) + " predictor values, got " +
                         std::to_string(x_.size()));
  for (int v : y_)
    if (v != -1 && v != 1) throw InvalidInput("labels must be -1 or +1, got " + std::to_string(v));
  for (double v : x_)
    if (!std::isfinite(v)) throw NumericalError("dataset contains non-finite predictor values");
}

Tensor Dataset::subject_tensor(std::size_t i) const {
  auto s = subject(i);
  return Tensor(dims_, std::vector<double>(s.begin(), s.end()));
}

std::size_t Dataset::count(int label) const {
  std::size_t c = 0;
  for (int v : y_) c += (v == label);
  return c;
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  std::vector<double> x;
  std::vector<int> y;
  x.reserve(indices.size() * features_);
  y.reserve(indices.size());
  for (auto i : indices) {
    if (i >= size()) throw InvalidInput("subset index out of range");
    auto s = subject(i);
    x.insert(x.end(), s.begin(), s.end());
    y.push_back(y_[i]);
  }
  return Dataset(dims_, std::move(x), std::move(y));
}

Dataset Dataset::vectorized() const { return Dataset(Shape{features_}, x_, y_); }

Dataset Dataset::with_label(std::size_t i, int label) const {
  auto y = y_;
  y.at(i) = label;
  return Dataset(dims_, x_, std::move(y));
}

Standardization Standardization::fit(const Dataset& d) {
  const std::size_t P = d.features(), N = d.size();
  Standardization s;
  s.mean.assign(P, 0.0);
  s.scale.assign(P, 1.0);
  if (N == 0) return s;
  for (std::size_t i = 0; i < N; ++i) {
    auto x = d.subject(i);
    for (std::size_t p = 0; p < P; ++p) s.mean[p] += x[p];
  }
  for (auto& m : s.mean) m /= static_cast<double>(N);
  if (N < 2) return s;
  std::vector<double> ss(P, 0.0);
  for (std::size_t i = 0; i < N; ++i) {
    auto x = d.subject(i);
    for (std::size_t p = 0; p < P; ++p) ss[p] += (x[p] - s.mean[p]) * (x[p] - s.mean[p]);
  }
  for (std::size_t p = 0; p < P; ++p) {
    const double sd = std::sqrt(ss[p] / static_cast<double>(N - 1));
    // constant features are left unscaled
    s.scale[p] = sd > 0.0 ? sd : 1.0;
  }
  return s;
}

void Standardization::apply_inplace(std::span<double> x) const {
  if (x.size() != mean.size()) throw DimensionError("standardization size mismatch");
  for (std::size_t p = 0; p < x.size(); ++p) x[p] = (x[p] - mean[p]) / scale[p];
}

Dataset Standardization::apply(const Dataset& d) const {
  std::vector<double> x(d.values().begin(), d.values().end());
  for (std::size_t i = 0; i < d.size(); ++i)
    apply_inplace(std::span<double>(x).subspan(i * d.features(), d.features()));
  return Dataset(d.dims(), std::move(x), std::vector<int>(d.labels().begin(), d.labels().end()));
}

}  // namespace mwdwd
