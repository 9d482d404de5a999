#include "mwdwd/tensor.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "mwdwd/error.hpp"

namespace mwdwd {

namespace {

std::string shape_str(const Shape& s) {
  std::string out = "(";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(s[i]);
  }
  return out + ")";
}

// Row-major outer product of column r of factors[begin, end).
void column_outer(std::span<const Eigen::MatrixXd> factors, std::size_t begin, std::size_t end,
                  Eigen::Index r, double* out) {
  std::size_t len = 1;
  out[0] = 1.0;
  for (std::size_t k = begin; k < end; ++k) {
    const auto& u = factors[k];
    const std::size_t p = static_cast<std::size_t>(u.rows());
    // expand in place from the back so entries are not overwritten early
    for (std::size_t i = len; i-- > 0;) {
      const double v = out[i];
      for (std::size_t t = p; t-- > 0;) out[i * p + t] = v * u(static_cast<Eigen::Index>(t), r);
    }
    len *= p;
  }
}

}  // namespace

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_.empty()) throw DimensionError("tensor needs at least one mode");
  for (auto e : shape_)
    if (e == 0) throw DimensionError("tensor extents must be positive, got " + shape_str(shape_));
  if (data_.size() != shape_size(shape_))
    throw DimensionError("tensor of shape " + shape_str(shape_) + " expects " + std::to_string(shape_size(shape_)) +
                         " values, got " + std::to_string(data_.size()));
  for (double v : data_)
    if (!std::isfinite(v)) throw NumericalError("tensor entries must be finite");
}

Tensor Tensor::zeros(Shape shape) {
  const std::size_t n = shape_size(shape);
  return Tensor(std::move(shape), std::vector<double>(n, 0.0));
}

double Tensor::at(std::span<const std::size_t> index) const {
  if (index.size() != shape_.size()) throw DimensionError("index order does not match tensor order");
  std::size_t flat = 0;
  for (std::size_t k = 0; k < shape_.size(); ++k) {
    if (index[k] >= shape_[k]) throw DimensionError("index out of range");
    flat = flat * shape_[k] + index[k];
  }
  return data_[flat];
}

CPFactors::CPFactors(std::vector<Eigen::MatrixXd> factors) : factors_(std::move(factors)) {
  if (factors_.empty()) throw DimensionError("CP factors need at least one mode");
  const auto r = factors_.front().cols();
  if (r < 1) throw DimensionError("CP rank must be at least 1");
  for (const auto& u : factors_) {
    if (u.cols() != r) throw DimensionError("all factor matrices must share the same column count");
    if (u.rows() < 1) throw DimensionError("factor matrices need at least one row");
    if (!u.allFinite()) throw NumericalError("factor entries must be finite");
  }
}

CPFactors CPFactors::zeros(const Shape& dims, std::size_t rank) {
  std::vector<Eigen::MatrixXd> f;
  for (auto p : dims)
    f.push_back(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(rank)));
  return CPFactors(std::move(f));
}

Shape CPFactors::dims() const {
  Shape s;
  for (const auto& u : factors_) s.push_back(static_cast<std::size_t>(u.rows()));
  return s;
}

double inner(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("inner product of arrays with different sizes");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double inner(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape())
    throw DimensionError("inner product shape mismatch: " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  return inner(a.data(), b.data());
}

double norm(const Tensor& a, int p) {
  double s = 0.0;
  if (p == 1) {
    for (double v : a.data()) s += std::abs(v);
    return s;
  }
  if (p == 2) {
    for (double v : a.data()) s += v * v;
    return std::sqrt(s);
  }
  throw InvalidInput("norm order must be 1 or 2");
}

Tensor assemble(const CPFactors& f) {
  const Shape dims = f.dims();
  const std::size_t total = shape_size(dims);
  std::vector<double> out(total, 0.0), comp(total);
  for (Eigen::Index r = 0; r < static_cast<Eigen::Index>(f.rank()); ++r) {
    column_outer(f.factors(), 0, f.order(), r, comp.data());
    for (std::size_t i = 0; i < total; ++i) out[i] += comp[i];
  }
  return Tensor(dims, std::move(out));
}

ModeKernels mode_kernels(std::span<const Eigen::MatrixXd> factors, std::size_t mode) {
  if (mode >= factors.size()) throw DimensionError("mode out of range");
  ModeKernels k;
  k.mode = mode;
  k.extent = static_cast<std::size_t>(factors[mode].rows());
  for (std::size_t m = 0; m < mode; ++m) k.before *= static_cast<std::size_t>(factors[m].rows());
  for (std::size_t m = mode + 1; m < factors.size(); ++m) k.after *= static_cast<std::size_t>(factors[m].rows());
  const auto R = factors[mode].cols();
  k.left.resize(static_cast<Eigen::Index>(k.before), R);
  k.right.resize(static_cast<Eigen::Index>(k.after), R);
  for (Eigen::Index r = 0; r < R; ++r) {
    column_outer(factors, 0, mode, r, k.left.col(r).data());
    column_outer(factors, mode + 1, factors.size(), r, k.right.col(r).data());
  }
  return k;
}

ModeKernels mode_kernels(const CPFactors& f, std::size_t mode) { return mode_kernels(f.factors(), mode); }

void project_out(std::span<const double> x, const ModeKernels& kern, Eigen::Ref<Eigen::MatrixXd> out) {
  const std::size_t P = kern.extent, A = kern.before, C = kern.after;
  const auto R = kern.left.cols();
  if (x.size() != A * P * C) throw DimensionError("project_out: tensor size does not match factor extents");
  out.setZero();
  for (Eigen::Index r = 0; r < R; ++r) {
    const double* left = kern.left.col(r).data();
    const double* right = kern.right.col(r).data();
    for (std::size_t a = 0; a < A; ++a) {
      const double la = left[a];
      if (la == 0.0) continue;
      for (std::size_t j = 0; j < P; ++j) {
        const double* row = x.data() + (a * P + j) * C;
        double s = 0.0;
        for (std::size_t c = 0; c < C; ++c) s += row[c] * right[c];
        out(static_cast<Eigen::Index>(j), r) += la * s;
      }
    }
  }
}

Eigen::MatrixXd project_out(const Tensor& x, const CPFactors& f, std::size_t mode) {
  if (x.order() != f.order()) throw DimensionError("project_out: tensor order does not match factor count");
  const Shape dims = f.dims();
  for (std::size_t k = 0; k < dims.size(); ++k)
    if (k != mode && dims[k] != x.shape()[k]) throw DimensionError("project_out: extent mismatch in mode " + std::to_string(k));
  if (mode < dims.size() && dims[mode] != x.shape()[mode])
    throw DimensionError("project_out: extent mismatch in projected mode");
  const auto kern = mode_kernels(f, mode);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(kern.extent), static_cast<Eigen::Index>(f.rank()));
  project_out(x.data(), kern, out);
  return out;
}

Eigen::MatrixXd gram_hadamard(std::span<const Eigen::MatrixXd> factors, std::size_t mode) {
  if (factors.empty()) throw DimensionError("gram_hadamard: no factors");
  const auto R = factors.front().cols();
  Eigen::MatrixXd w = Eigen::MatrixXd::Ones(R, R);
  for (std::size_t k = 0; k < factors.size(); ++k) {
    if (k == mode) continue;
    w = w.cwiseProduct(factors[k].transpose() * factors[k]);
  }
  return w;
}

Eigen::MatrixXd gram_hadamard(const CPFactors& f, std::size_t mode) { return gram_hadamard(f.factors(), mode); }

Eigen::MatrixXd matricize(const Tensor& t, std::size_t mode) {
  const Shape& s = t.shape();
  if (mode >= s.size()) throw DimensionError("matricize: mode out of range");
  std::size_t A = 1, C = 1;
  for (std::size_t k = 0; k < mode; ++k) A *= s[k];
  for (std::size_t k = mode + 1; k < s.size(); ++k) C *= s[k];
  const std::size_t P = s[mode];
  Eigen::MatrixXd m(static_cast<Eigen::Index>(P), static_cast<Eigen::Index>(A * C));
  for (std::size_t a = 0; a < A; ++a)
    for (std::size_t j = 0; j < P; ++j)
      for (std::size_t c = 0; c < C; ++c)
        m(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(a * C + c)) = t[(a * P + j) * C + c];
  return m;
}

Tensor refold(const Eigen::MatrixXd& m, const Shape& shape, std::size_t mode) {
  if (mode >= shape.size()) throw DimensionError("refold: mode out of range");
  std::size_t A = 1, C = 1;
  for (std::size_t k = 0; k < mode; ++k) A *= shape[k];
  for (std::size_t k = mode + 1; k < shape.size(); ++k) C *= shape[k];
  const std::size_t P = shape[mode];
  if (static_cast<std::size_t>(m.rows()) != P || static_cast<std::size_t>(m.cols()) != A * C)
    throw DimensionError("refold: matrix size does not match shape");
  std::vector<double> data(A * P * C);
  for (std::size_t a = 0; a < A; ++a)
    for (std::size_t j = 0; j < P; ++j)
      for (std::size_t c = 0; c < C; ++c)
        data[(a * P + j) * C + c] = m(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(a * C + c));
  return Tensor(shape, std::move(data));
}

}  // namespace mwdwd
