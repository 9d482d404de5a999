#pragma once

// Dense multiway arrays and the CP algebra used by the solver.
//
// Layout is row-major with the last index varying fastest. Modes are
// zero-based throughout the library.

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace mwdwd {

using Shape = std::vector<std::size_t>;

/// Product of extents; 1 for an empty shape.
std::size_t shape_size(const Shape& shape);

/// Dense K-way array. Immutable once built; all entries are finite.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<double> data);

  static Tensor zeros(Shape shape);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t order() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  std::span<const double> data() const noexcept { return data_; }

  double operator[](std::size_t flat) const { return data_[flat]; }
  double at(std::span<const std::size_t> index) const;

 private:
  Shape shape_;
  std::vector<double> data_;
};

/// K factor matrices U_k (P_k x R) standing for sum_r u_1r o ... o u_Kr.
class CPFactors {
 public:
  CPFactors() = default;
  explicit CPFactors(std::vector<Eigen::MatrixXd> factors);

  /// All-zero factors of the given extents.
  static CPFactors zeros(const Shape& dims, std::size_t rank);

  std::size_t order() const noexcept { return factors_.size(); }
  std::size_t rank() const noexcept {
    return factors_.empty() ? 0 : static_cast<std::size_t>(factors_.front().cols());
  }
  Shape dims() const;

  const Eigen::MatrixXd& operator[](std::size_t k) const { return factors_[k]; }
  const std::vector<Eigen::MatrixXd>& factors() const noexcept { return factors_; }

 private:
  std::vector<Eigen::MatrixXd> factors_;
};

double inner(std::span<const double> a, std::span<const double> b);
double inner(const Tensor& a, const Tensor& b);

/// Entrywise L1 (p = 1) or L2 (p = 2) norm.
double norm(const Tensor& a, int p);

/// Dense tensor of the CP representation.
Tensor assemble(const CPFactors& f);

/// Outer products of the r-th columns of the modes before and after `mode`,
/// laid out so that a mode-`mode` contraction is a pair of dot products.
struct ModeKernels {
  std::size_t mode = 0;
  std::size_t extent = 0;  // P_mode
  std::size_t before = 1;  // prod of extents of earlier modes
  std::size_t after = 1;   // prod of extents of later modes
  Eigen::MatrixXd left;    // before x R
  Eigen::MatrixXd right;   // after x R
};

ModeKernels mode_kernels(const CPFactors& f, std::size_t mode);
ModeKernels mode_kernels(std::span<const Eigen::MatrixXd> factors, std::size_t mode);

/// Contraction of x against every mode except `mode`:
/// out(j, r) = x[..., j, ...] . (o_{k' != mode} u_{k'r}).
void project_out(std::span<const double> x, const ModeKernels& kern, Eigen::Ref<Eigen::MatrixXd> out);
Eigen::MatrixXd project_out(const Tensor& x, const CPFactors& f, std::size_t mode);

/// Hadamard product of the Gram matrices U_k^T U_k over k != mode (R x R).
Eigen::MatrixXd gram_hadamard(const CPFactors& f, std::size_t mode);
Eigen::MatrixXd gram_hadamard(std::span<const Eigen::MatrixXd> factors, std::size_t mode);

/// Mode unfolding: row j holds the entries with index j along `mode`; the
/// column index is the row-major linear index of the remaining modes.
Eigen::MatrixXd matricize(const Tensor& t, std::size_t mode);

/// Inverse of matricize.
Tensor refold(const Eigen::MatrixXd& m, const Shape& shape, std::size_t mode);

}  // namespace mwdwd
