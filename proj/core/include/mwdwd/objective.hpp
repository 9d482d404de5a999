#pragma once

#include <string>
#include <string_view>

#include "mwdwd/dataset.hpp"
#include "mwdwd/tensor.hpp"

namespace mwdwd {

/// Which elastic-net extension is applied to the CP coefficient tensor.
///  - Coupled:     lambda1 sum_r prod_k |u_kr|_1 + lambda2/2 |B|_2^2
///  - SeparableL2: lambda1 sum_r prod_k |u_kr|_1 + lambda2/2 sum_r prod_k |u_kr|_2^2
///  - Tensor:      lambda1 |B|_1 + lambda2/2 |B|_2^2
enum class PenaltyVariant { Coupled, SeparableL2, Tensor };

std::string_view to_string(PenaltyVariant v);
/// Accepts "coupled", "separable-l2", "tensor".
PenaltyVariant parse_penalty_variant(std::string_view s);

struct PenaltySpec {
  PenaltyVariant variant = PenaltyVariant::Coupled;
  double lambda1 = 0.0;
  double lambda2 = 0.0;

  void validate() const;
};

/// DWD loss: 1 - u for u <= 1/2, 1/(4u) otherwise.
inline double dwd_loss(double u) { return u <= 0.5 ? 1.0 - u : 0.25 / u; }

inline double dwd_loss_deriv(double u) { return u <= 0.5 ? -1.0 : -0.25 / (u * u); }

double penalty(const CPFactors& f, const PenaltySpec& spec);

/// Mean DWD loss of the margins y_i (b0 + <X_i, B>) plus the penalty.
double objective(const Dataset& d, const CPFactors& f, double b0, const PenaltySpec& spec);

/// Mean loss for precomputed margins.
double average_loss(std::span<const double> margins);

}  // namespace mwdwd
