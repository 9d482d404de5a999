#include <gtest/gtest.h>

#include <Eigen/SVD>
#include <cmath>
#include <limits>

#include "mwdwd/error.hpp"
#include "mwdwd/model.hpp"
#include "mwdwd/simulate.hpp"
#include "mwdwd/tuning.hpp"
#include "test_support.hpp"

using namespace mwdwd;
using namespace mwdwd::testing;

namespace {

CVConfig small_cv(std::vector<double> l1, std::vector<double> l2, std::size_t folds = 5) {
  CVConfig cv;
  cv.n_folds = folds;
  cv.lambda1_grid = std::move(l1);
  cv.lambda2_grid = std::move(l2);
  cv.seed = 3;
  cv.fit.n_starts = 2;
  return cv;
}

Eigen::VectorXd leading_direction(const Tensor& t, std::size_t mode) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(matricize(t, mode), Eigen::ComputeThinU);
  return svd.matrixU().col(0);
}

}  // namespace

TEST(StratifiedKfold, OnePerClassPerFoldWhenDivisible) {
  std::vector<int> y(20);
  for (std::size_t i = 0; i < 20; ++i) y[i] = i < 10 ? 1 : -1;
  const auto folds = stratified_kfold(y, 10, 7);
  for (std::size_t f = 0; f < 10; ++f) {
    int pos = 0, neg = 0;
    for (std::size_t i = 0; i < 20; ++i)
      if (folds[i] == f) (y[i] > 0 ? pos : neg)++;
    EXPECT_EQ(pos, 1);
    EXPECT_EQ(neg, 1);
  }
}

TEST(StratifiedKfold, SizesBalancedOverallAndPerClass) {
  std::vector<int> y(23);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = i % 3 == 0 ? 1 : -1;
  const auto folds = stratified_kfold(y, 4, 9);
  for (int cls : {0, 1, -1}) {
    std::vector<int> n(4, 0);
    for (std::size_t i = 0; i < y.size(); ++i)
      if (cls == 0 || y[i] == cls) ++n[folds[i]];
    EXPECT_LE(*std::max_element(n.begin(), n.end()) - *std::min_element(n.begin(), n.end()), 1) << cls;
  }
}

TEST(StratifiedKfold, LeaveOneOutGivesSingletons) {
  const std::vector<int> y{1, -1, 1, -1, 1, -1, -1};
  const auto folds = stratified_kfold(y, y.size(), 1, false);
  std::vector<int> seen(y.size(), 0);
  for (auto f : folds) ++seen[f];
  for (int c : seen) EXPECT_EQ(c, 1);
}

TEST(StratifiedKfold, DeterministicAndSeedDependent) {
  std::vector<int> y(40);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = i % 2 ? 1 : -1;
  EXPECT_EQ(stratified_kfold(y, 5, 42), stratified_kfold(y, 5, 42));
  EXPECT_NE(stratified_kfold(y, 5, 42), stratified_kfold(y, 5, 43));
}

TEST(StratifiedKfold, SmallClassRejected) {
  const std::vector<int> y{1, 1, -1, -1, -1, -1};
  EXPECT_THROW(stratified_kfold(y, 3, 0), InvalidInput);
  EXPECT_THROW(stratified_kfold(y, 1, 0), InvalidInput);
}

TEST(WelchT, Examples) {
  const std::vector<double> a{1, 2, 3};
  EXPECT_EQ(welch_t(a, a), 0.0);
  EXPECT_EQ(welch_t(std::vector<double>{1, 1}, std::vector<double>{-1, -1}), std::numeric_limits<double>::infinity());
  EXPECT_EQ(welch_t(std::vector<double>{-1, -1}, std::vector<double>{1, 1}), -std::numeric_limits<double>::infinity());
  EXPECT_EQ(welch_t(std::vector<double>{2, 2}, std::vector<double>{2, 2}), 0.0);
  // means 2 and 1, both sample variances 0.01
  EXPECT_NEAR(welch_t(std::vector<double>{2.1, 1.9, 2.0}, std::vector<double>{0.9, 1.1, 1.0}),
              1.0 / std::sqrt(0.01 / 3 + 0.01 / 3), 1e-9);
}

TEST(WelchT, TextbookFormulaOnUnequalGroups) {
  const std::vector<double> p{3.2, 4.1, 2.7, 5.0, 3.9}, n{1.0, 2.5, 0.3, 1.9};
  auto mv = [](const std::vector<double>& v) {
    double m = 0, s = 0;
    for (double x : v) m += x;
    m /= v.size();
    for (double x : v) s += (x - m) * (x - m);
    return std::pair{m, s / (v.size() - 1)};
  };
  const auto [mp, vp] = mv(p);
  const auto [mn, vn] = mv(n);
  EXPECT_NEAR(welch_t(p, n), (mp - mn) / std::sqrt(vp / 5 + vn / 4), 1e-12);
}

TEST(WelchT, TooFewValuesRejected) {
  EXPECT_THROW(welch_t(std::vector<double>{1}, std::vector<double>{1, 2}), InvalidInput);
}

TEST(CVConfig, Validation) {
  CVConfig c;
  EXPECT_NO_THROW(c.validate());
  c.lambda1_grid.clear();
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.lambda2_grid = {-1.0};
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.n_folds = 1;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(SelectLambdas, SingleCellGrid) {
  Rng rng(70);
  const Dataset d = random_dataset({4, 3}, 30, 1.0, rng);
  const CVResult r = select_lambdas(d, small_cv({0.01}, {0.5}));
  EXPECT_EQ(r.chosen, 0u);
  EXPECT_EQ(r.chosen_lambda1, 0.01);
  EXPECT_EQ(r.chosen_lambda2, 0.5);
  ASSERT_EQ(r.t_stat.size(), 1u);
  EXPECT_EQ(r.oof_scores.size(), 1u);
  EXPECT_EQ(r.oof_scores[0].size(), 30u);
}

TEST(SelectLambdas, TableShapeAndChosenIsMaximal) {
  Rng rng(71);
  const Dataset d = random_dataset({4, 3}, 30, 1.0, rng);
  const CVResult r = select_lambdas(d, small_cv({1e-4, 0.01, 0.1}, {0.25, 1.0}));
  ASSERT_EQ(r.t_stat.size(), 6u);
  ASSERT_EQ(r.misclassification.size(), 6u);
  for (double t : r.t_stat) EXPECT_LE(t, r.t_stat[r.chosen]);
  EXPECT_EQ(r.t_at(r.chosen % 3, r.chosen / 3), r.t_stat[r.chosen]);
  EXPECT_EQ(r.chosen_lambda1, r.lambda1_grid[r.chosen % 3]);
  EXPECT_EQ(r.chosen_lambda2, r.lambda2_grid[r.chosen / 3]);
}

TEST(SelectLambdas, TiesPreferLargerLambdas) {
  // Both lambda1 values zero every coefficient, so every cell yields the same scores.
  Rng rng(72);
  const Dataset d = random_dataset({3, 2}, 20, 1.0, rng);
  const CVResult r = select_lambdas(d, small_cv({50.0, 100.0}, {1.0, 2.0}));
  for (double t : r.t_stat) EXPECT_EQ(t, r.t_stat[0]);
  EXPECT_EQ(r.chosen_lambda1, 100.0);
  EXPECT_EQ(r.chosen_lambda2, 2.0);
}

TEST(SelectLambdas, DeterministicGivenSeed) {
  Rng rng(73);
  const Dataset d = random_dataset({4, 3}, 30, 0.8, rng);
  const auto cv = small_cv({1e-4, 0.01, 0.1}, {0.5, 1.0});
  const CVResult a = select_lambdas(d, cv), b = select_lambdas(d, cv);
  EXPECT_EQ(a.t_stat, b.t_stat);
  EXPECT_EQ(a.oof_scores, b.oof_scores);
  EXPECT_EQ(a.chosen, b.chosen);
}

TEST(SelectLambdas, OutOfFoldScoresDoNotSeeOwnLabel) {
  Rng rng(74);
  const Dataset base = random_dataset({4, 3}, 30, 1.0, rng);
  // subject 0 gets a sentinel predictor pattern
  std::vector<double> x(base.values().begin(), base.values().end());
  for (std::size_t p = 0; p < base.features(); ++p) x[p] = p % 2 ? 5.0 : -5.0;
  const Dataset d(base.dims(), x, std::vector<int>(base.labels().begin(), base.labels().end()));
  auto cv = small_cv({1e-4, 0.05}, {1.0});
  cv.folds = stratified_kfold(d.labels(), 5, 11);
  const CVResult a = select_lambdas(d, cv);
  const CVResult b = select_lambdas(d.with_label(0, -d.label(0)), cv);
  for (std::size_t c = 0; c < a.oof_scores.size(); ++c) EXPECT_EQ(a.oof_scores[c][0], b.oof_scores[c][0]);
}

TEST(SelectLambdas, FoldOverrideValidated) {
  Rng rng(75);
  const Dataset d = random_dataset({3, 2}, 20, 1.0, rng);
  auto cv = small_cv({0.01}, {1.0});
  cv.folds = std::vector<std::size_t>(19, 0);
  EXPECT_THROW(select_lambdas(d, cv), InvalidInput);
}

TEST(SelectLambdas, WarmAndColdObjectivesAgree) {
  Rng rng(76);
  for (int trial = 0; trial < 3; ++trial) {
    const Dataset d = random_dataset({4, 3, 3}, 30, 0.8, rng);
    FitConfig cfg;
    cfg.penalty.lambda2 = 0.5;
    std::optional<FitResult> prev;
    for (double l1 : {1e-4, 0.001, 0.005, 0.01, 0.025}) {
      cfg.penalty.lambda1 = l1;
      const FitResult cold = fit(d, cfg);
      FitResult warm = prev ? fit_from(d, cfg, prev->factors, prev->b0) : cold;
      EXPECT_LE(std::abs(warm.objective() - cold.objective()), 1e-3 * cold.objective()) << "lambda1 " << l1;
      prev = std::move(warm);
    }
  }
}

TEST(FitSelected, NeverWorseThanColdFit) {
  Rng rng(77);
  const Dataset d = random_dataset({4, 3, 3}, 30, 0.8, rng);
  const auto cv = small_cv(kDefaultLambda1Grid, {1.0});
  for (double l1 : {0.01, 0.1, 0.5}) {
    FitConfig cfg = cv.fit;
    cfg.penalty.lambda1 = l1;
    cfg.penalty.lambda2 = 1.0;
    EXPECT_LE(fit_selected(d, cv, l1, 1.0).objective(), fit(d, cfg).objective());
  }
}

TEST(SelectLambdas, ReducedCrossValidationStudy) {
  // 4 x 5 x 15 predictors, u3 nonzero in 10 of 15 entries, class +1 mean u1 o u2 o u3
  const std::size_t reps = 20;
  double log_l1 = 0.0, cor[3] = {0, 0, 0};
  for (std::size_t r = 0; r < reps; ++r) {
    SimDesign des;
    des.dims = {4, 5, 15};
    des.nonzero = {4, 5, 10};
    des.alpha = 1.0;
    des.seed = 500 + r;
    const SimData sim = gen_dataset(des);
    CVConfig cv;
    cv.lambda1_grid = {1e-4, 0.001, 0.005, 0.01};
    cv.seed = r;
    cv.fit.seed = r;
    const CVResult res = select_lambdas(sim.train, cv);
    const Tensor b = assemble(fit_selected(sim.train, cv, res.chosen_lambda1, res.chosen_lambda2).factors);
    log_l1 += std::log(res.chosen_lambda1);
    for (std::size_t k = 0; k < 3; ++k) {
      const Eigen::VectorXd e = leading_direction(b, k), t = leading_direction(sim.truth, k);
      cor[k] += std::abs(pearson(std::span<const double>(e.data(), e.size()), std::span<const double>(t.data(), t.size())));
    }
  }
  const double geo = std::exp(log_l1 / reps);
  EXPECT_GT(geo, 0.0008 / 10);
  EXPECT_LT(geo, 0.0008 * 10);
  for (double c : cor) EXPECT_GE(c / reps, 0.9);
}
