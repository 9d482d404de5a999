#include "mwdwd/bootstrap.hpp"

#include <algorithm>
#include <cmath>

#include "mwdwd/error.hpp"
#include "mwdwd/model.hpp"
#include "mwdwd/parallel.hpp"
#include "mwdwd/rng.hpp"

namespace mwdwd {

void BootstrapConfig::validate() const {
  if (n_boot < 2) throw ConfigError("n_boot must be at least 2");
  const auto [lo, hi] = quantiles;
  if (!(lo > 0.0 && lo < 1.0 && hi > 0.0 && hi < 1.0)) throw ConfigError("quantiles must lie strictly inside (0, 1)");
  if (!(lo < hi)) throw ConfigError("quantiles must be ascending");
  fit.validate();
}

double quantile(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw InvalidInput("quantile of an empty sample");
  const double n = static_cast<double>(sorted.size());
  const double h = std::clamp(n * p + 0.5, 1.0, n);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const double frac = h - static_cast<double>(lo);
  if (lo >= sorted.size()) return sorted.back();
  return sorted[lo - 1] + frac * (sorted[lo] - sorted[lo - 1]);
}

CPFactors align_to_reference(const CPFactors& replicate, const CPFactors& reference) {
  if (replicate.dims() != reference.dims() || replicate.rank() != reference.rank())
    throw DimensionError("alignment needs factors of identical shape and rank");
  const CPFactors norm = normalize_factors(replicate);
  const auto R = static_cast<Eigen::Index>(norm.rank());
  const std::size_t K = norm.order();

  // |cos| between rank-1 component tensors factorizes over modes.
  Eigen::MatrixXd sim(R, R);
  for (Eigen::Index a = 0; a < R; ++a)
    for (Eigen::Index b = 0; b < R; ++b) {
      double s = 1.0;
      for (std::size_t k = 0; k < K; ++k) {
        const double na = norm[k].col(a).norm(), nb = reference[k].col(b).norm();
        s *= (na == 0.0 || nb == 0.0) ? 0.0 : std::abs(norm[k].col(a).dot(reference[k].col(b))) / (na * nb);
      }
      sim(a, b) = s;
    }
  std::vector<Eigen::Index> target(static_cast<std::size_t>(R), -1);
  std::vector<bool> used_a(static_cast<std::size_t>(R), false), used_b(static_cast<std::size_t>(R), false);
  for (Eigen::Index step = 0; step < R; ++step) {
    Eigen::Index ba = -1, bb = -1;
    double best = -1.0;
    for (Eigen::Index a = 0; a < R; ++a) {
      if (used_a[static_cast<std::size_t>(a)]) continue;
      for (Eigen::Index b = 0; b < R; ++b) {
        if (used_b[static_cast<std::size_t>(b)]) continue;
        if (sim(a, b) > best) {
          best = sim(a, b);
          ba = a;
          bb = b;
        }
      }
    }
    used_a[static_cast<std::size_t>(ba)] = used_b[static_cast<std::size_t>(bb)] = true;
    target[static_cast<std::size_t>(ba)] = bb;
  }

  std::vector<Eigen::MatrixXd> out;
  for (std::size_t k = 0; k < K; ++k) out.emplace_back(norm[k].rows(), R);
  for (Eigen::Index a = 0; a < R; ++a) {
    const Eigen::Index b = target[static_cast<std::size_t>(a)];
    double carried = 1.0;
    for (std::size_t k = 1; k < K; ++k) {
      const double s = norm[k].col(a).dot(reference[k].col(b)) < 0.0 ? -1.0 : 1.0;
      out[k].col(b) = s * norm[k].col(a);
      carried *= s;
    }
    out[0].col(b) = carried * norm[0].col(a);
  }
  return CPFactors(std::move(out));
}

BootstrapResult bootstrap_ci(const Dataset& d, const BootstrapConfig& cfg) {
  cfg.validate();
  BootstrapResult res;
  const FitResult full = fit(d, cfg.fit);
  res.reference = normalize_factors(full.factors);
  res.reference_b0 = full.b0;

  const std::size_t N = d.size();
  std::vector<CPFactors> reps(cfg.n_boot);
  std::vector<char> conv(cfg.n_boot, 0);
  parallel_for(cfg.n_boot, [&](std::size_t b) {
    Rng rng = Rng::derive(cfg.seed, b);
    std::vector<std::size_t> idx(N);
    // redraw resamples that lose a class
    for (;;) {
      std::size_t pos = 0;
      for (auto& i : idx) {
        i = static_cast<std::size_t>(rng.below(N));
        pos += d.label(i) > 0;
      }
      if (pos > 0 && pos < N) break;
    }
    FitConfig fc = cfg.fit;
    fc.seed = rng.next();
    const FitResult r = fit(d.subset(idx), fc);
    reps[b] = align_to_reference(r.factors, res.reference);
    conv[b] = r.converged;
  });

  std::size_t not_conv = 0;
  for (char c : conv) {
    res.converged.push_back(c != 0);
    not_conv += c == 0;
  }
  res.convergence_warning = static_cast<double>(not_conv) > 0.2 * static_cast<double>(cfg.n_boot);

  std::vector<double> vals(cfg.n_boot);
  for (std::size_t k = 0; k < res.reference.order(); ++k) {
    const auto& ref = res.reference[k];
    for (Eigen::Index r = 0; r < ref.cols(); ++r)
      for (Eigen::Index j = 0; j < ref.rows(); ++j) {
        for (std::size_t b = 0; b < cfg.n_boot; ++b) vals[b] = reps[b][k](j, r);
        std::sort(vals.begin(), vals.end());
        res.intervals.push_back({k, static_cast<std::size_t>(j), static_cast<std::size_t>(r), ref(j, r),
                                 quantile(vals, cfg.quantiles[0]), quantile(vals, cfg.quantiles[1])});
      }
  }
  return res;
}

}  // namespace mwdwd
