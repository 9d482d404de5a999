#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mwdwd/dataset.hpp"
#include "mwdwd/solver.hpp"

namespace mwdwd {

inline const std::vector<double> kDefaultLambda1Grid{1e-4, 0.001, 0.005, 0.01, 0.025, 0.05,
                                                     0.1,  0.25,  0.5,   0.75, 1.0};
inline const std::vector<double> kDefaultLambda2Grid{0.25, 0.50, 0.75, 1.00, 3.0, 5.0};

struct CVConfig {
  std::size_t n_folds = 10;
  std::vector<double> lambda1_grid = kDefaultLambda1Grid;
  std::vector<double> lambda2_grid = kDefaultLambda2Grid;
  bool stratified = true;
  std::uint64_t seed = 0;
  /// Template for every fit; its lambdas are overwritten per grid cell.
  FitConfig fit;
  /// Explicit fold per subject; overrides the seeded assignment.
  std::optional<std::vector<std::size_t>> folds;
  /// Select by lowest misclassification instead of highest t.
  bool select_by_misclassification = false;

  void validate() const;
};

struct CVResult {
  std::vector<double> lambda1_grid;
  std::vector<double> lambda2_grid;
  /// Indexed [i2 * n1 + i1] for grid positions (i1, i2).
  std::vector<double> t_stat;
  std::vector<double> misclassification;
  /// Out-of-fold scores per grid cell, one per subject.
  std::vector<std::vector<double>> oof_scores;
  std::vector<std::size_t> folds;
  std::size_t chosen = 0;
  double chosen_lambda1 = 0.0;
  double chosen_lambda2 = 0.0;

  double t_at(std::size_t i1, std::size_t i2) const { return t_stat[i2 * lambda1_grid.size() + i1]; }
};

/// Fold index per subject. Sizes differ by at most one overall and, when
/// stratified, within each class. Deterministic given the seed.
std::vector<std::size_t> stratified_kfold(std::span<const int> y, std::size_t n_folds, std::uint64_t seed,
                                          bool stratified = true);

/// Welch two-sample t statistic (mean_pos - mean_neg) / sqrt(v_pos/n_pos + v_neg/n_neg).
/// With both sample variances zero: +/-infinity if the means differ, else 0.
double welch_t(std::span<const double> pos, std::span<const double> neg);

/// Cross-validated (lambda1, lambda2) choice by out-of-fold score t statistic.
/// Within each fold and lambda2, lambda1 is swept in ascending order with each
/// solution warm-starting the next. Ties prefer larger lambda1, then larger lambda2.
CVResult select_lambdas(const Dataset& d, const CVConfig& cfg);

/// Full-data fit at (lambda1, lambda2). Runs both a multi-start fit and the
/// warm-started path over the grid's lambda1 values up to `lambda1`, and
/// returns whichever reaches the lower objective (the cold fit on ties).
FitResult fit_selected(const Dataset& d, const CVConfig& cfg, double lambda1, double lambda2);

}  // namespace mwdwd
