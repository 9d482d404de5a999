#include "mwdwd/model.hpp"

#include <cmath>

#include "mwdwd/error.hpp"

namespace mwdwd {

Classifier::Classifier(CPFactors factors, double b0, PenaltySpec penalty, std::optional<Standardization> standardization)
    : factors_(std::move(factors)),
      b0_(b0),
      penalty_(penalty),
      dims_(factors_.dims()),
      standardization_(std::move(standardization)),
      coef_(assemble(factors_)) {
  if (standardization_ && standardization_->mean.size() != coef_.size())
    throw DimensionError("standardization size does not match model dims");
}

Classifier Classifier::from_fit(const FitResult& res, const FitConfig& cfg, std::size_t n_train) {
  Classifier c(res.factors, res.b0, cfg.penalty, res.standardization);
  c.n_train = n_train;
  c.seed = cfg.seed;
  c.objective = res.objective();
  c.effective_rank = res.effective_rank;
  return c;
}

double score(const Classifier& m, std::span<const double> x) {
  if (x.size() != m.coefficients().size()) throw DimensionError("score: predictor size does not match model dims");
  if (m.standardization()) {
    std::vector<double> z(x.begin(), x.end());
    m.standardization()->apply_inplace(z);
    return inner(z, m.coefficients().data()) + m.b0();
  }
  return inner(x, m.coefficients().data()) + m.b0();
}

double score(const Classifier& m, const Tensor& x) {
  if (x.shape() != m.dims()) throw DimensionError("score: predictor shape does not match model dims");
  return score(m, x.data());
}

std::vector<double> scores(const Classifier& m, const Dataset& d) {
  if (d.dims() != m.dims()) throw DimensionError("scores: dataset dims do not match model dims");
  std::vector<double> out(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) out[i] = score(m, d.subject(i));
  return out;
}

int predict(const Classifier& m, const Tensor& x) { return label_of(score(m, x)); }

CPFactors normalize_factors(const CPFactors& f) {
  std::vector<Eigen::MatrixXd> u = f.factors();
  const auto R = static_cast<Eigen::Index>(f.rank());
  for (Eigen::Index r = 0; r < R; ++r) {
    for (std::size_t k = 1; k < u.size(); ++k) {
      auto col = u[k].col(r);
      const double n = col.norm();
      if (n == 0.0) continue;
      Eigen::Index arg = 0;
      for (Eigen::Index j = 1; j < col.size(); ++j)
        if (std::abs(col(j)) > std::abs(col(arg))) arg = j;
      const double sign = col(arg) < 0.0 ? -1.0 : 1.0;
      col *= sign / n;
      u[0].col(r) *= sign * n;
    }
  }
  return CPFactors(std::move(u));
}

}  // namespace mwdwd
