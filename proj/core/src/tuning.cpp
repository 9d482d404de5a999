#include "mwdwd/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "mwdwd/error.hpp"
#include "mwdwd/model.hpp"
#include "mwdwd/parallel.hpp"
#include "mwdwd/rng.hpp"

namespace mwdwd {

void CVConfig::validate() const {
  if (n_folds < 2) throw ConfigError("n_folds must be at least 2");
  if (lambda1_grid.empty() || lambda2_grid.empty()) throw ConfigError("lambda grids must be non-empty");
  for (double v : lambda1_grid)
    if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("lambda1 grid values must be finite and non-negative");
  for (double v : lambda2_grid)
    if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("lambda2 grid values must be finite and non-negative");
  fit.validate();
}

namespace {

void shuffle(std::vector<std::size_t>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
}

[[noreturn]] void rethrow_with(const std::string& ctx) {
  try {
    throw;
  } catch (const NumericalError& e) {
    throw NumericalError(ctx + ": " + e.what());
  } catch (const InvalidInput& e) {
    throw InvalidInput(ctx + ": " + e.what());
  } catch (const DimensionError& e) {
    throw DimensionError(ctx + ": " + e.what());
  } catch (const ConfigError& e) {
    throw ConfigError(ctx + ": " + e.what());
  } catch (const std::exception& e) {
    throw Error(ctx + ": " + e.what());
  }
}

}  // namespace

std::vector<std::size_t> stratified_kfold(std::span<const int> y, std::size_t n_folds, std::uint64_t seed,
                                          bool stratified) {
  const std::size_t n = y.size();
  if (n_folds < 2) throw InvalidInput("need at least 2 folds");
  if (n_folds > n) throw InvalidInput("more folds than subjects");
  Rng rng(seed);
  std::vector<std::size_t> fold(n);
  if (!stratified) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    shuffle(idx, rng);
    for (std::size_t p = 0; p < n; ++p) fold[idx[p]] = p % n_folds;
    return fold;
  }
  std::vector<std::size_t> neg, pos;
  for (std::size_t i = 0; i < n; ++i) (y[i] > 0 ? pos : neg).push_back(i);
  if (neg.size() < n_folds || pos.size() < n_folds)
    throw InvalidInput("stratified " + std::to_string(n_folds) + "-fold split needs at least that many subjects per class (have " +
                       std::to_string(neg.size()) + " and " + std::to_string(pos.size()) + ")");
  shuffle(neg, rng);
  shuffle(pos, rng);
  // One round-robin across both classes keeps overall and per-class sizes balanced.
  for (std::size_t p = 0; p < neg.size(); ++p) fold[neg[p]] = p % n_folds;
  for (std::size_t p = 0; p < pos.size(); ++p) fold[pos[p]] = (neg.size() + p) % n_folds;
  return fold;
}

double welch_t(std::span<const double> pos, std::span<const double> neg) {
  if (pos.size() < 2 || neg.size() < 2) throw InvalidInput("welch_t needs at least two values per group");
  auto moments = [](std::span<const double> v) {
    const double n = static_cast<double>(v.size());
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::pair{mean, ss / (n - 1.0)};
  };
  const auto [mp, vp] = moments(pos);
  const auto [mn, vn] = moments(neg);
  const double se2 = vp / static_cast<double>(pos.size()) + vn / static_cast<double>(neg.size());
  if (se2 == 0.0) {
    if (mp == mn) return 0.0;
    return mp > mn ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
  }
  return (mp - mn) / std::sqrt(se2);
}

CVResult select_lambdas(const Dataset& d, const CVConfig& cfg) {
  cfg.validate();
  const std::size_t N = d.size();
  CVResult res;
  res.lambda1_grid = cfg.lambda1_grid;
  res.lambda2_grid = cfg.lambda2_grid;
  if (cfg.folds) {
    if (cfg.folds->size() != N) throw InvalidInput("explicit fold assignment must have one entry per subject");
    res.folds = *cfg.folds;
  } else {
    res.folds = stratified_kfold(d.labels(), cfg.n_folds, cfg.seed, cfg.stratified);
  }
  const std::size_t K = *std::max_element(res.folds.begin(), res.folds.end()) + 1;
  const std::size_t n1 = cfg.lambda1_grid.size(), n2 = cfg.lambda2_grid.size();

  std::vector<std::size_t> order1(n1);
  std::iota(order1.begin(), order1.end(), 0);
  std::stable_sort(order1.begin(), order1.end(),
                   [&](std::size_t a, std::size_t b) { return cfg.lambda1_grid[a] < cfg.lambda1_grid[b]; });

  std::vector<std::vector<std::size_t>> train(K), test(K);
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t f = 0; f < K; ++f) (res.folds[i] == f ? test : train)[f].push_back(i);

  res.oof_scores.assign(n1 * n2, std::vector<double>(N, 0.0));
  parallel_for(n2 * K, [&](std::size_t task) {
    const std::size_t i2 = task / K, f = task % K;
    if (test[f].empty()) return;
    const Dataset tr = d.subset(train[f]);
    FitConfig fc = cfg.fit;
    fc.penalty.lambda2 = cfg.lambda2_grid[i2];
    std::optional<FitResult> prev;
    for (std::size_t i1 : order1) {
      fc.penalty.lambda1 = cfg.lambda1_grid[i1];
      try {
        FitResult r = prev ? fit_from(tr, fc, prev->factors, prev->b0) : fit(tr, fc);
        const Classifier m = Classifier::from_fit(r, fc, tr.size());
        auto& out = res.oof_scores[i2 * n1 + i1];
        for (std::size_t i : test[f]) out[i] = score(m, d.subject(i));
        prev = std::move(r);
      } catch (...) {
        rethrow_with("cv fit at lambda1=" + std::to_string(fc.penalty.lambda1) +
                     ", lambda2=" + std::to_string(fc.penalty.lambda2) + ", fold " + std::to_string(f));
      }
    }
  });

  res.t_stat.resize(n1 * n2);
  res.misclassification.resize(n1 * n2);
  for (std::size_t c = 0; c < n1 * n2; ++c) {
    std::vector<double> pos, neg;
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < N; ++i) {
      const double s = res.oof_scores[c][i];
      (d.label(i) > 0 ? pos : neg).push_back(s);
      wrong += label_of(s) != d.label(i);
    }
    res.t_stat[c] = welch_t(pos, neg);
    res.misclassification[c] = static_cast<double>(wrong) / static_cast<double>(N);
  }

  // Tie rule: larger lambda1 first, then larger lambda2.
  auto better = [&](std::size_t a, std::size_t b) {
    if (cfg.select_by_misclassification) {
      if (res.misclassification[a] != res.misclassification[b]) return res.misclassification[a] < res.misclassification[b];
    } else if (res.t_stat[a] != res.t_stat[b]) {
      return res.t_stat[a] > res.t_stat[b];
    }
    const double l1a = cfg.lambda1_grid[a % n1], l1b = cfg.lambda1_grid[b % n1];
    if (l1a != l1b) return l1a > l1b;
    return cfg.lambda2_grid[a / n1] > cfg.lambda2_grid[b / n1];
  };
  std::size_t best = 0;
  for (std::size_t c = 1; c < n1 * n2; ++c)
    if (better(c, best)) best = c;
  res.chosen = best;
  res.chosen_lambda1 = cfg.lambda1_grid[best % n1];
  res.chosen_lambda2 = cfg.lambda2_grid[best / n1];
  return res;
}

FitResult fit_selected(const Dataset& d, const CVConfig& cfg, double lambda1, double lambda2) {
  FitConfig fc = cfg.fit;
  fc.penalty.lambda1 = lambda1;
  fc.penalty.lambda2 = lambda2;
  FitResult cold = fit(d, fc);

  std::vector<double> path;
  for (double l : cfg.lambda1_grid)
    if (l < lambda1) path.push_back(l);
  if (path.empty()) return cold;
  std::sort(path.begin(), path.end());
  path.push_back(lambda1);
  std::optional<FitResult> prev;
  for (double l : path) {
    fc.penalty.lambda1 = l;
    prev = prev ? fit_from(d, fc, prev->factors, prev->b0) : fit(d, fc);
  }
  return prev->objective() < cold.objective() ? std::move(*prev) : cold;
}

}  // namespace mwdwd
