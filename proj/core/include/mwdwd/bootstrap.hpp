#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "mwdwd/dataset.hpp"
#include "mwdwd/solver.hpp"

namespace mwdwd {

struct BootstrapConfig {
  std::size_t n_boot = 500;
  std::array<double, 2> quantiles{0.025, 0.975};
  std::uint64_t seed = 0;
  FitConfig fit;

  void validate() const;
};

struct WeightInterval {
  std::size_t mode = 0;
  std::size_t index = 0;
  std::size_t component = 0;
  double estimate = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

struct BootstrapResult {
  /// Normalized full-data fit every replicate is aligned to.
  CPFactors reference;
  double reference_b0 = 0.0;
  std::vector<WeightInterval> intervals;
  std::vector<bool> converged;
  /// Set when more than 20% of replicate fits hit max_outer.
  bool convergence_warning = false;
};

/// Empirical quantile with linear interpolation between order statistics at
/// position n*p + 1/2 (1-based), clamped to the sample range.
double quantile(std::span<const double> sorted, double p);

/// Normalizes `replicate`, reorders its components to match `reference`
/// greedily by absolute cosine similarity of the rank-1 component tensors,
/// then flips column signs in modes 1..K-1 toward the reference, pushing the
/// compensating sign into mode 0. Each component tensor is left unchanged.
CPFactors align_to_reference(const CPFactors& replicate, const CPFactors& reference);

/// Percentile intervals for every factor entry over class-preserving resamples.
BootstrapResult bootstrap_ci(const Dataset& d, const BootstrapConfig& cfg);

}  // namespace mwdwd
