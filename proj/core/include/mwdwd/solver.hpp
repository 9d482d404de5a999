#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mwdwd/dataset.hpp"
#include "mwdwd/objective.hpp"
#include "mwdwd/tensor.hpp"

namespace mwdwd {

struct FitConfig {
  std::size_t rank = 1;
  PenaltySpec penalty;
  /// Outer stop: |B_new - B|^2 <= epsilon * max(1, |B|^2).
  double epsilon = 1e-8;
  int max_outer = 500;
  /// Coordinate sweeps per block update.
  int max_inner = 1000;
  int n_starts = 5;
  /// Outer iterations run on every start before keeping only the best one.
  int prune_after = 3;
  std::uint64_t seed = 0;
  bool standardize = false;
  /// Relative singular-value cutoff used for FitResult::effective_rank.
  double rank_tol = 1e-2;

  void validate() const;
};

struct FitResult {
  CPFactors factors;
  double b0 = 0.0;
  /// trace[0] is the objective at the starting point, then one entry per outer iteration.
  std::vector<double> objective_trace;
  bool converged = false;
  std::size_t effective_rank = 0;
  std::size_t n_outer = 0;
  std::size_t chosen_start = 0;
  /// Set when the fit ran on standardized predictors.
  std::optional<Standardization> standardization;

  double objective() const { return objective_trace.back(); }
};

/// Working state of one optimization path. `margins[i]` caches
/// y_i (b0 + <X_i, B>) for the current factors.
struct SolverState {
  std::vector<Eigen::MatrixXd> factors;
  double b0 = 0.0;
  std::vector<double> margins;
};

/// sign(z) * max(|z| - g, 0).
inline double soft_threshold(double z, double g) {
  if (z > g) return z - g;
  if (z < -g) return z + g;
  return 0.0;
}

/// Minimizer over t of (d/2) t^2 - z t + w * sum_m |a_m t + c_m| for d > 0.
/// This is the exact coordinate step for the entrywise L1 penalty.
double minimize_abs_sum(double d, double z, double w, std::span<const double> slopes, std::span<const double> offsets);

std::vector<double> compute_margins(const Dataset& d, std::span<const Eigen::MatrixXd> factors, double b0);

/// One MM block update of factor `mode` and the intercept. Coordinate sweeps
/// repeat until the squared change of (U_mode, b0) in a sweep drops below
/// epsilon * max(1, |U_mode|^2 + b0^2) or max_inner sweeps are done.
/// Returns the number of sweeps performed.
int update_block(SolverState& state, const Dataset& d, const FitConfig& cfg, std::size_t mode);

/// Multi-start fit from Uniform[0,1] factor initializations.
FitResult fit(const Dataset& d, const FitConfig& cfg);

/// Single-path fit starting from the given factors and intercept.
FitResult fit_from(const Dataset& d, const FitConfig& cfg, const CPFactors& init, double b0);

/// Number of singular values of the mode-0 unfolding of the assembled tensor
/// above rel_tol times the largest one; 0 for a zero tensor.
std::size_t effective_rank(const CPFactors& f, double rel_tol);

}  // namespace mwdwd
