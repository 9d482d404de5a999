#include <gtest/gtest.h>

#include "mwdwd/error.hpp"
#include "mwdwd/objective.hpp"
#include "test_support.hpp"

using namespace mwdwd;
using namespace mwdwd::testing;

TEST(DwdLoss, Examples) {
  EXPECT_EQ(dwd_loss(0.0), 1.0);
  EXPECT_EQ(dwd_loss(0.5), 0.5);
  EXPECT_EQ(1.0 - 0.5, 0.25 / 0.5);
  EXPECT_EQ(dwd_loss(1.0), 0.25);
  EXPECT_EQ(dwd_loss(-2.0), 3.0);
}

TEST(DwdLoss, DerivativeExamples) {
  EXPECT_EQ(dwd_loss_deriv(0.0), -1.0);
  EXPECT_EQ(dwd_loss_deriv(0.5), -1.0);
  EXPECT_EQ(-0.25 / (0.5 * 0.5), dwd_loss_deriv(0.5));
  EXPECT_EQ(dwd_loss_deriv(1.0), -0.25);
}

TEST(DwdLoss, DerivativeMatchesFiniteDifferences) {
  const double h = 1e-7;
  for (int i = -300; i <= 300; ++i) {
    const double u = i * 0.01;
    const double fd = (dwd_loss(u + h) - dwd_loss(u - h)) / (2 * h);
    EXPECT_NEAR(fd, dwd_loss_deriv(u), 1e-6) << "u = " << u;
  }
}

TEST(DwdLoss, Convex) {
  for (int i = -300; i < 300; ++i) {
    const double a = i * 0.01, b = a + 0.01;
    EXPECT_LE(dwd_loss_deriv(a), dwd_loss_deriv(b));
    EXPECT_LE(dwd_loss(0.5 * (a + b)), 0.5 * (dwd_loss(a) + dwd_loss(b)) + 1e-15);
  }
}

TEST(PenaltySpec, ParseAndValidate) {
  EXPECT_EQ(parse_penalty_variant("coupled"), PenaltyVariant::Coupled);
  EXPECT_EQ(parse_penalty_variant("separable-l2"), PenaltyVariant::SeparableL2);
  EXPECT_EQ(parse_penalty_variant("tensor"), PenaltyVariant::Tensor);
  EXPECT_THROW(parse_penalty_variant("ridge"), ConfigError);
  for (auto v : {PenaltyVariant::Coupled, PenaltyVariant::SeparableL2, PenaltyVariant::Tensor})
    EXPECT_EQ(parse_penalty_variant(to_string(v)), v);
  EXPECT_THROW((PenaltySpec{PenaltyVariant::Coupled, -1.0, 0.0}.validate()), ConfigError);
  EXPECT_THROW((PenaltySpec{PenaltyVariant::Coupled, 0.0, std::nan("")}.validate()), ConfigError);
}

TEST(Penalty, ZeroFactors) {
  for (auto v : {PenaltyVariant::Coupled, PenaltyVariant::SeparableL2, PenaltyVariant::Tensor})
    EXPECT_EQ(penalty(CPFactors::zeros({3, 4}, 2), {v, 0.7, 1.3}), 0.0);
}

TEST(Penalty, VariantsCoincideAtRankOne) {
  Rng rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    const CPFactors f = random_factors({4, 3, 5}, 1, rng);
    const double a = penalty(f, {PenaltyVariant::Coupled, 0.3, 0.8});
    const double b = penalty(f, {PenaltyVariant::SeparableL2, 0.3, 0.8});
    const double c = penalty(f, {PenaltyVariant::Tensor, 0.3, 0.8});
    EXPECT_NEAR(a, b, 1e-12 * a);
    EXPECT_NEAR(a, c, 1e-12 * a);
  }
}

TEST(Penalty, RankTwoAgainstDenseAssembly) {
  Rng rng(22);
  const Shape dims{3, 4, 2};
  const CPFactors f = random_factors(dims, 2, rng);
  const double l1 = 0.4, l2 = 1.7;
  double dense_l1 = 0.0, dense_l2 = 0.0;
  for (std::size_t p = 0; p < shape_size(dims); ++p) {
    const double v = cp_entry(f, unravel(p, dims));
    dense_l1 += std::abs(v);
    dense_l2 += v * v;
  }
  double dist_l1 = 0.0, sep_l2 = 0.0;
  for (Eigen::Index r = 0; r < 2; ++r) {
    double a = 1.0, b = 1.0;
    for (std::size_t k = 0; k < 3; ++k) {
      a *= f[k].col(r).cwiseAbs().sum();
      b *= f[k].col(r).squaredNorm();
    }
    dist_l1 += a;
    sep_l2 += b;
  }
  EXPECT_NEAR(penalty(f, {PenaltyVariant::Coupled, l1, l2}), l1 * dist_l1 + 0.5 * l2 * dense_l2, 1e-12);
  EXPECT_NEAR(penalty(f, {PenaltyVariant::SeparableL2, l1, l2}), l1 * dist_l1 + 0.5 * l2 * sep_l2, 1e-12);
  EXPECT_NEAR(penalty(f, {PenaltyVariant::Tensor, l1, l2}), l1 * dense_l1 + 0.5 * l2 * dense_l2, 1e-12);
}

TEST(Penalty, InvariantUnderCompensatingRescale) {
  Rng rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    const CPFactors f = random_factors({3, 5, 4}, 2, rng);
    auto u = f.factors();
    for (Eigen::Index r = 0; r < 2; ++r) {
      const double c0 = 0.1 + 3 * rng.uniform(), c1 = 0.1 + 3 * rng.uniform();
      u[0].col(r) *= c0;
      u[1].col(r) *= c1;
      u[2].col(r) /= c0 * c1;
    }
    for (auto v : {PenaltyVariant::Coupled, PenaltyVariant::SeparableL2}) {
      const double a = penalty(f, {v, 0.6, 0.9}), b = penalty(CPFactors(u), {v, 0.6, 0.9});
      EXPECT_NEAR(a, b, 1e-10 * a);
    }
  }
}

TEST(Objective, ZeroFactors) {
  Rng rng(24);
  const Dataset d = random_dataset({3, 2}, 10, 1.0, rng);
  EXPECT_EQ(objective(d, CPFactors::zeros({3, 2}, 1), 0.0, {PenaltyVariant::Coupled, 1.0, 1.0}), 1.0);
  std::vector<double> x(6 * 4);
  for (auto& v : x) v = rng.normal();
  const Dataset pos({3, 2}, x, std::vector<int>(4, 1));
  EXPECT_EQ(objective(pos, CPFactors::zeros({3, 2}, 2), 1.0, {PenaltyVariant::Tensor, 1.0, 1.0}), 0.25);
}

TEST(Objective, MatchesScalarRecomputation) {
  Rng rng(25);
  const Shape dims{3, 2, 4};
  const Dataset d = random_dataset(dims, 12, 0.5, rng);
  const CPFactors f = random_factors(dims, 2, rng);
  const double b0 = 0.3;
  const PenaltySpec spec{PenaltyVariant::Coupled, 0.2, 0.5};
  double loss = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    double s = b0;
    for (std::size_t p = 0; p < shape_size(dims); ++p) s += d.subject(i)[p] * cp_entry(f, unravel(p, dims));
    const double u = d.label(i) * s;
    loss += u <= 0.5 ? 1 - u : 1 / (4 * u);
  }
  loss /= static_cast<double>(d.size());
  EXPECT_NEAR(objective(d, f, b0, spec), loss + penalty(f, spec), 1e-12);
  EXPECT_NEAR(objective(d, f, b0, {PenaltyVariant::Coupled, 0.0, 0.0}), loss, 1e-12);
}

TEST(Objective, VectorCaseIsElasticNet) {
  Rng rng(26);
  const Dataset d = random_dataset({5}, 9, 1.0, rng);
  const CPFactors f = random_factors({5}, 1, rng);
  const Eigen::VectorXd w = f[0].col(0);
  double loss = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    double s = -0.2;
    for (std::size_t p = 0; p < 5; ++p) s += d.subject(i)[p] * w(static_cast<Eigen::Index>(p));
    loss += dwd_loss(d.label(i) * s);
  }
  const double expect = loss / 9.0 + 0.7 * w.lpNorm<1>() + 0.5 * 1.1 * w.squaredNorm();
  EXPECT_NEAR(objective(d, f, -0.2, {PenaltyVariant::Coupled, 0.7, 1.1}), expect, 1e-12);
}

TEST(Objective, ShapeMismatch) {
  Rng rng(27);
  const Dataset d = random_dataset({3, 2}, 4, 1.0, rng);
  EXPECT_THROW(objective(d, CPFactors::zeros({2, 3}, 1), 0.0, {}), DimensionError);
}
