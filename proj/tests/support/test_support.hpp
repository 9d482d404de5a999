#pragma once

#include <cstdint>
#include <vector>

#include "mwdwd/dataset.hpp"
#include "mwdwd/rng.hpp"
#include "mwdwd/tensor.hpp"

namespace mwdwd::testing {

inline Tensor random_tensor(const Shape& shape, Rng& rng) {
  std::vector<double> v(shape_size(shape));
  for (auto& x : v) x = rng.normal();
  return Tensor(shape, std::move(v));
}

inline CPFactors random_factors(const Shape& dims, std::size_t rank, Rng& rng) {
  std::vector<Eigen::MatrixXd> u;
  for (auto p : dims) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(rank));
    for (Eigen::Index r = 0; r < m.cols(); ++r)
      for (Eigen::Index j = 0; j < m.rows(); ++j) m(j, r) = rng.normal();
    u.push_back(std::move(m));
  }
  return CPFactors(std::move(u));
}

// Gaussian classes with a shifted mean for the positive half.
inline Dataset random_dataset(const Shape& dims, std::size_t n, double shift, Rng& rng) {
  const std::size_t F = shape_size(dims);
  std::vector<double> x(n * F);
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = i % 2 == 0 ? 1 : -1;
    for (std::size_t p = 0; p < F; ++p) x[i * F + p] = rng.normal() + (y[i] > 0 && p % 3 == 0 ? shift : 0.0);
  }
  return Dataset(dims, std::move(x), std::move(y));
}

// Entry of the assembled tensor by the defining sum of products.
inline double cp_entry(const CPFactors& f, std::span<const std::size_t> idx) {
  double s = 0.0;
  for (std::size_t r = 0; r < f.rank(); ++r) {
    double p = 1.0;
    for (std::size_t k = 0; k < f.order(); ++k)
      p *= f[k](static_cast<Eigen::Index>(idx[k]), static_cast<Eigen::Index>(r));
    s += p;
  }
  return s;
}

// Row-major multi-index of a flat position.
inline std::vector<std::size_t> unravel(std::size_t flat, const Shape& shape) {
  std::vector<std::size_t> idx(shape.size());
  for (std::size_t k = shape.size(); k-- > 0;) {
    idx[k] = flat % shape[k];
    flat /= shape[k];
  }
  return idx;
}

}  // namespace mwdwd::testing
