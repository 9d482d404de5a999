#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mwdwd/tensor.hpp"

namespace mwdwd {

/// N subjects, each a P_1 x ... x P_K predictor array, with labels in {-1, +1}.
/// Subject i occupies a contiguous row-major block of `x`.
class Dataset {
 public:
  Dataset() = default;
  Dataset(Shape dims, std::vector<double> x, std::vector<int> y);

  const Shape& dims() const noexcept { return dims_; }
  std::size_t size() const noexcept { return y_.size(); }
  std::size_t features() const noexcept { return features_; }
  std::span<const double> values() const noexcept { return x_; }
  std::span<const int> labels() const noexcept { return y_; }
  int label(std::size_t i) const { return y_[i]; }

  std::span<const double> subject(std::size_t i) const {
    return std::span<const double>(x_).subspan(i * features_, features_);
  }
  Tensor subject_tensor(std::size_t i) const;

  std::size_t count(int label) const;

  Dataset subset(std::span<const std::size_t> indices) const;

  /// Same subjects with each predictor flattened to a single mode.
  Dataset vectorized() const;

  /// Copy with one subject's label replaced.
  Dataset with_label(std::size_t i, int label) const;

 private:
  Shape dims_;
  std::size_t features_ = 0;
  std::vector<double> x_;
  std::vector<int> y_;
};

/// Per-feature centering and scaling fitted on training data.
struct Standardization {
  std::vector<double> mean;
  std::vector<double> scale;

  static Standardization fit(const Dataset& d);
  Dataset apply(const Dataset& d) const;
  void apply_inplace(std::span<double> x) const;
};

}  // namespace mwdwd
