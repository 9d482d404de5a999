#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mwdwd/dataset.hpp"
#include "mwdwd/objective.hpp"
#include "mwdwd/solver.hpp"
#include "mwdwd/tensor.hpp"

namespace mwdwd {

/// Fitted classifier: sign(<X, B> + b0) with B the assembled CP factors.
class Classifier {
 public:
  Classifier() = default;
  Classifier(CPFactors factors, double b0, PenaltySpec penalty, std::optional<Standardization> standardization = {});

  static Classifier from_fit(const FitResult& res, const FitConfig& cfg, std::size_t n_train);

  const CPFactors& factors() const noexcept { return factors_; }
  double b0() const noexcept { return b0_; }
  const PenaltySpec& penalty() const noexcept { return penalty_; }
  const Shape& dims() const noexcept { return dims_; }
  const std::optional<Standardization>& standardization() const noexcept { return standardization_; }
  /// Assembled coefficient tensor.
  const Tensor& coefficients() const noexcept { return coef_; }

  // training metadata, carried through serialization
  std::size_t n_train = 0;
  std::uint64_t seed = 0;
  double objective = 0.0;
  std::size_t effective_rank = 0;

 private:
  CPFactors factors_;
  double b0_ = 0.0;
  PenaltySpec penalty_;
  Shape dims_;
  std::optional<Standardization> standardization_;
  Tensor coef_;
};

double score(const Classifier& m, std::span<const double> x);
double score(const Classifier& m, const Tensor& x);
std::vector<double> scores(const Classifier& m, const Dataset& d);

/// +1 when the score is >= 0 (ties go to +1), else -1.
int predict(const Classifier& m, const Tensor& x);
inline int label_of(double score) { return score >= 0.0 ? 1 : -1; }

/// Puts factors in a canonical scale and sign: for every component, the
/// columns of modes 1..K-1 get unit L2 norm with their largest-magnitude
/// entry positive (ties to the lower index); mode 0 absorbs the scale and
/// sign. Zero columns are left alone. The assembled tensor is unchanged.
CPFactors normalize_factors(const CPFactors& f);

}  // namespace mwdwd
