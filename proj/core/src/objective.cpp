#include "mwdwd/objective.hpp"

#include <cmath>

#include "mwdwd/error.hpp"

namespace mwdwd {

std::string_view to_string(PenaltyVariant v) {
  switch (v) {
    case PenaltyVariant::Coupled:
      return "coupled";
    case PenaltyVariant::SeparableL2:
      return "separable-l2";
    case PenaltyVariant::Tensor:
      return "tensor";
  }
  return "coupled";
}

PenaltyVariant parse_penalty_variant(std::string_view s) {
  if (s == "coupled") return PenaltyVariant::Coupled;
  if (s == "separable-l2") return PenaltyVariant::SeparableL2;
  if (s == "tensor") return PenaltyVariant::Tensor;
  throw ConfigError("unknown penalty variant '" + std::string(s) + "' (expected coupled, separable-l2 or tensor)");
}

void PenaltySpec::validate() const {
  if (!(lambda1 >= 0.0) || !std::isfinite(lambda1)) throw ConfigError("lambda1 must be finite and non-negative");
  if (!(lambda2 >= 0.0) || !std::isfinite(lambda2)) throw ConfigError("lambda2 must be finite and non-negative");
}

double penalty(const CPFactors& f, const PenaltySpec& spec) {
  const auto R = static_cast<Eigen::Index>(f.rank());
  double l1 = 0.0, l2 = 0.0;
  if (spec.variant == PenaltyVariant::Tensor) {
    const Tensor b = assemble(f);
    l1 = norm(b, 1);
    const double n2 = norm(b, 2);
    l2 = n2 * n2;
  } else {
    for (Eigen::Index r = 0; r < R; ++r) {
      double p = 1.0;
      for (const auto& u : f.factors()) p *= u.col(r).lpNorm<1>();
      l1 += p;
    }
    if (spec.variant == PenaltyVariant::Coupled) {
      const double n2 = norm(assemble(f), 2);
      l2 = n2 * n2;
    } else {
      for (Eigen::Index r = 0; r < R; ++r) {
        double p = 1.0;
        for (const auto& u : f.factors()) p *= u.col(r).squaredNorm();
        l2 += p;
      }
    }
  }
  return spec.lambda1 * l1 + 0.5 * spec.lambda2 * l2;
}

double average_loss(std::span<const double> margins) {
  double s = 0.0;
  for (double m : margins) s += dwd_loss(m);
  return margins.empty() ? 0.0 : s / static_cast<double>(margins.size());
}

double objective(const Dataset& d, const CPFactors& f, double b0, const PenaltySpec& spec) {
  if (d.dims() != f.dims()) throw DimensionError("objective: dataset dims do not match factor extents");
  const Tensor b = assemble(f);
  double s = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) s += dwd_loss(d.label(i) * (b0 + inner(d.subject(i), b.data())));
  return s / static_cast<double>(d.size()) + penalty(f, spec);
}

}  // namespace mwdwd
