#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mwdwd/dataset.hpp"
#include "mwdwd/model.hpp"
#include "mwdwd/tuning.hpp"

namespace mwdwd {

/// How the mean array mu is scaled before multiplying by sqrt(alpha).
///  - Raw: factor entries are used as drawn, so |mu| varies across replicates.
///  - UnitMeanSquare: mu is rescaled to mean square 1 over its nonzero entries.
enum class SignalScaling { Raw, UnitMeanSquare };

/// Two-class simulation scenario. Class -1 is noise only; class +1 adds the
/// mean array sqrt(alpha) * mu, where mu is a rank-`true_rank` CP tensor with
/// N(0,1) factor entries, zeroed outside the leading `nonzero[k]` rows of
/// each mode. Noise is N(0, Sigma_1 x ... x Sigma_K) with AR(1) factors of
/// parameter rho.
struct SimDesign {
  Shape dims;
  std::size_t n = 100;  // per data set, split evenly between classes
  std::size_t true_rank = 1;
  std::vector<std::size_t> nonzero;  // empty: every entry carries signal
  double alpha = 0.2;
  double rho = 0.0;
  SignalScaling scaling = SignalScaling::Raw;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SimData {
  Dataset train;
  Dataset test;
  Tensor truth;  // sqrt(alpha) * mu
};

SimData gen_dataset(const SimDesign& design);

/// Cholesky factor of the AR(1) correlation matrix rho^|i-j|.
Eigen::MatrixXd ar1_cholesky(std::size_t p, double rho);

struct Metrics {
  double cor = 0.0;
  double mis = 0.0;
  double tp = 0.0;
  std::optional<double> tn;  // absent when the truth has no zero entries
};

/// Correlation of the vectorized estimate with the truth, test
/// misclassification, and exact-zero recovery rates.
Metrics eval_metrics(const Classifier& estimate, const Tensor& truth, const Dataset& test);

/// Pearson correlation; throws InvalidInput when either side is constant.
double pearson(std::span<const double> a, std::span<const double> b);

enum class Tuning { CrossValidate, CrossValidateLambda2, Fixed };

struct MethodSpec {
  std::string name;
  std::size_t rank = 1;
  PenaltyVariant variant = PenaltyVariant::Coupled;
  Tuning tuning = Tuning::CrossValidate;
  double lambda1 = 0.0;  // used when tuning is Fixed
  double lambda2 = 1.0;  // used when tuning is Fixed
  bool vectorize = false;
};

/// Named methods: "M-SDWD", "M-SDWD-lambda1=0", "M-DWD", "Full-SDWD".
MethodSpec builtin_method(const std::string& name, std::size_t rank = 1);

struct ReplicateOutcome {
  bool ok = false;
  std::string error;
  Metrics metrics;
  std::size_t effective_rank = 0;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
};

struct StudyRow {
  std::string method;
  double cor = 0.0, mis = 0.0, tp = 0.0;
  std::optional<double> tn;
  double margin_cor = 0.0, margin_mis = 0.0, margin_tp = 0.0;
  std::optional<double> margin_tn;
  double prop_cor_gt_half = 0.0;
  double rank_retention = 0.0;
  std::size_t n_failed = 0;
  std::vector<ReplicateOutcome> replicates;
};

struct StudyConfig {
  SimDesign design;
  std::vector<MethodSpec> methods;
  std::size_t n_reps = 1;
  /// Folds, grids and fit settings shared by every method.
  CVConfig cv;
};

/// Runs every method on n_reps independent replicates of the design.
/// Margins are two standard deviations across replicates.
std::vector<StudyRow> run_study(const StudyConfig& cfg);

/// Fits one method on a training set and returns the classifier.
Classifier fit_method(const MethodSpec& method, const Dataset& train, const CVConfig& cv, std::uint64_t seed,
                      double* lambda1 = nullptr, double* lambda2 = nullptr);

}  // namespace mwdwd
