#include "mwdwd/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "mwdwd/error.hpp"
#include "mwdwd/rng.hpp"

namespace mwdwd {

void FitConfig::validate() const {
  penalty.validate();
  if (rank < 1) throw ConfigError("rank must be at least 1");
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  if (max_outer < 1) throw ConfigError("max_outer must be positive");
  if (max_inner < 1) throw ConfigError("max_inner must be positive");
  if (n_starts < 1) throw ConfigError("n_starts must be at least 1");
  if (prune_after < 1) throw ConfigError("prune_after must be at least 1");
  if (!(rank_tol > 0.0 && rank_tol < 1.0)) throw ConfigError("rank_tol must lie in (0, 1)");
}

double minimize_abs_sum(double d, double z, double w, std::span<const double> slopes, std::span<const double> offsets) {
  struct Kink {
    double at;
    double weight;
  };
  std::vector<Kink> kinks;
  kinks.reserve(slopes.size());
  double total = 0.0;
  for (std::size_t m = 0; m < slopes.size(); ++m) {
    const double a = slopes[m];
    if (a == 0.0) continue;
    kinks.push_back({-offsets[m] / a, std::abs(a)});
    total += std::abs(a);
  }
  if (w == 0.0 || kinks.empty()) return z / d;
  std::sort(kinks.begin(), kinks.end(), [](const Kink& x, const Kink& y) { return x.at < y.at; });
  // Left of all kinks the penalty slope is -w * total; each kink adds 2 w |a|.
  double slope = -w * total;
  double lo = -std::numeric_limits<double>::infinity();
  for (const auto& k : kinks) {
    const double cand = (z - slope) / d;
    if (cand <= k.at) return std::max(cand, lo);
    slope += 2.0 * w * k.weight;
    lo = k.at;
  }
  return std::max((z - slope) / d, lo);
}

std::vector<double> compute_margins(const Dataset& d, std::span<const Eigen::MatrixXd> factors, double b0) {
  const Tensor b = assemble(CPFactors(std::vector<Eigen::MatrixXd>(factors.begin(), factors.end())));
  std::vector<double> m(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) m[i] = d.label(i) * (b0 + inner(d.subject(i), b.data()));
  return m;
}

namespace {

void require_finite(double v, std::size_t mode, int sweep) {
  if (!std::isfinite(v))
    throw NumericalError("non-finite value in block update of mode " + std::to_string(mode) + " at sweep " +
                         std::to_string(sweep));
}

}  // namespace

int update_block(SolverState& st, const Dataset& d, const FitConfig& cfg, std::size_t mode) {
  const std::size_t N = d.size();
  const double invN = 1.0 / static_cast<double>(N);
  auto& U = st.factors[mode];
  const auto P = U.rows();
  const auto R = U.cols();
  const double lambda1 = cfg.penalty.lambda1, lambda2 = cfg.penalty.lambda2;
  const PenaltyVariant variant = cfg.penalty.variant;

  // Step a: signed projections z[(j*R + r)*N + i] = y_i * Xtilde_i[j, r].
  const ModeKernels kern = mode_kernels(st.factors, mode);
  std::vector<double> zproj(static_cast<std::size_t>(P * R) * N);
  Eigen::MatrixXd xt(P, R);
  for (std::size_t i = 0; i < N; ++i) {
    project_out(d.subject(i), kern, xt);
    const double y = d.label(i);
    for (Eigen::Index j = 0; j < P; ++j)
      for (Eigen::Index r = 0; r < R; ++r) zproj[static_cast<std::size_t>(j * R + r) * N + i] = y * xt(j, r);
  }
  // Per-coordinate curvature of the loss majorizer: 4 * mean(Xtilde^2).
  std::vector<double> curv(static_cast<std::size_t>(P * R));
  for (std::size_t c = 0; c < curv.size(); ++c) {
    const double* z = zproj.data() + c * N;
    double s = 0.0;
    for (std::size_t i = 0; i < N; ++i) s += z[i] * z[i];
    curv[c] = 4.0 * s * invN;
  }
  const Eigen::MatrixXd W = gram_hadamard(st.factors, mode);
  Eigen::VectorXd q = Eigen::VectorXd::Ones(R);
  for (std::size_t k = 0; k < st.factors.size(); ++k)
    if (k != mode)
      for (Eigen::Index r = 0; r < R; ++r) q(r) *= st.factors[k].col(r).lpNorm<1>();

  auto& mu = st.margins;
  mu.assign(N, 0.0);
  for (std::size_t i = 0; i < N; ++i) mu[i] = d.label(i) * st.b0;
  for (Eigen::Index j = 0; j < P; ++j)
    for (Eigen::Index r = 0; r < R; ++r) {
      const double u = U(j, r);
      if (u == 0.0) continue;
      const double* z = zproj.data() + static_cast<std::size_t>(j * R + r) * N;
      for (std::size_t i = 0; i < N; ++i) mu[i] += u * z[i];
    }

  // Entrywise L1 needs the mode unfolding of B and the other-mode kernels.
  const bool entrywise_l1 = variant == PenaltyVariant::Tensor && lambda1 > 0.0;
  const std::size_t M = kern.before * kern.after;
  Eigen::MatrixXd kernels, brow;
  std::vector<double> offsets;
  if (entrywise_l1) {
    kernels.resize(static_cast<Eigen::Index>(M), R);
    for (Eigen::Index r = 0; r < R; ++r)
      for (std::size_t a = 0; a < kern.before; ++a)
        for (std::size_t c = 0; c < kern.after; ++c)
          kernels(static_cast<Eigen::Index>(a * kern.after + c), r) =
              kern.left(static_cast<Eigen::Index>(a), r) * kern.right(static_cast<Eigen::Index>(c), r);
    brow = U * kernels.transpose();  // P x M
    offsets.resize(M);
  }

  const double tol = cfg.epsilon * std::max(1.0, U.squaredNorm() + st.b0 * st.b0);
  int sweep = 0;
  while (sweep < cfg.max_inner) {
    ++sweep;
    double change = 0.0;
    // Step b: cyclic coordinate updates.
    for (Eigen::Index j = 0; j < P; ++j) {
      for (Eigen::Index r = 0; r < R; ++r) {
        const std::size_t c = static_cast<std::size_t>(j * R + r);
        const double* z = zproj.data() + c * N;
        double grad = 0.0;
        for (std::size_t i = 0; i < N; ++i) grad += dwd_loss_deriv(mu[i]) * z[i];
        grad *= invN;
        const double old = U(j, r);
        double cross = 0.0, wrr = W(r, r);
        if (variant != PenaltyVariant::SeparableL2)
          for (Eigen::Index s = 0; s < R; ++s)
            if (s != r) cross += W(r, s) * U(j, s);
        const double denom = curv[c] + lambda2 * wrr;
        const double target = curv[c] * old - grad - lambda2 * cross;
        double next = old;
        if (entrywise_l1) {
          if (denom > 0.0) {
            for (std::size_t m = 0; m < M; ++m)
              offsets[m] = brow(j, static_cast<Eigen::Index>(m)) - old * kernels(static_cast<Eigen::Index>(m), r);
            next = minimize_abs_sum(denom, target, lambda1, std::span<const double>(kernels.col(r).data(), M), offsets);
          }
        } else if (denom > 0.0) {
          next = soft_threshold(target, lambda1 * q(r)) / denom;
        } else if (lambda1 * q(r) > 0.0) {
          // coordinate does not enter the loss or the quadratic term
          next = 0.0;
        }
        require_finite(next, mode, sweep);
        const double delta = next - old;
        if (delta != 0.0) {
          for (std::size_t i = 0; i < N; ++i) mu[i] += delta * z[i];
          if (entrywise_l1) brow.row(j) += delta * kernels.col(r).transpose();
          U(j, r) = next;
          change += delta * delta;
        }
      }
    }
    // Step c: intercept.
    double gb = 0.0;
    for (std::size_t i = 0; i < N; ++i) gb += dwd_loss_deriv(mu[i]) * d.label(i);
    const double db = -gb * invN / 4.0;
    require_finite(st.b0 + db, mode, sweep);
    if (db != 0.0) {
      for (std::size_t i = 0; i < N; ++i) mu[i] += d.label(i) * db;
      st.b0 += db;
      change += db * db;
    }
    // Step d.
    if (change < tol) break;
  }
  return sweep;
}

namespace {

struct Path {
  SolverState state;
  std::vector<double> trace;
  bool converged = false;
  std::size_t n_outer = 0;
};

double path_objective(const Path& p, const FitConfig& cfg) {
  return average_loss(p.state.margins) + penalty(CPFactors(p.state.factors), cfg.penalty);
}

Path make_path(const Dataset& d, const FitConfig& cfg, std::vector<Eigen::MatrixXd> factors, double b0) {
  Path p;
  p.state.factors = std::move(factors);
  p.state.b0 = b0;
  p.state.margins = compute_margins(d, p.state.factors, b0);
  p.trace.push_back(path_objective(p, cfg));
  return p;
}

void outer_step(Path& p, const Dataset& d, const FitConfig& cfg) {
  const Tensor before = assemble(CPFactors(p.state.factors));
  for (std::size_t k = 0; k < p.state.factors.size(); ++k) update_block(p.state, d, cfg, k);
  const Tensor after = assemble(CPFactors(p.state.factors));
  double diff = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < before.size(); ++i) {
    diff += (after[i] - before[i]) * (after[i] - before[i]);
    scale += before[i] * before[i];
  }
  ++p.n_outer;
  p.trace.push_back(path_objective(p, cfg));
  if (!std::isfinite(p.trace.back())) throw NumericalError("objective became non-finite");
  p.converged = diff <= cfg.epsilon * std::max(1.0, scale);
}

void run_until_done(Path& p, const Dataset& d, const FitConfig& cfg, std::size_t limit) {
  while (!p.converged && p.n_outer < limit) outer_step(p, d, cfg);
}

void validate_data(const Dataset& d) {
  if (d.size() < 2) throw InvalidInput("fit needs at least two subjects");
  if (d.count(1) == 0 || d.count(-1) == 0) throw InvalidInput("fit needs subjects from both classes");
}

FitResult finish(Path&& p, const FitConfig& cfg, std::size_t chosen, std::optional<Standardization> stdz) {
  FitResult res;
  res.factors = CPFactors(std::move(p.state.factors));
  res.b0 = p.state.b0;
  res.objective_trace = std::move(p.trace);
  res.converged = p.converged;
  res.n_outer = p.n_outer;
  res.chosen_start = chosen;
  res.effective_rank = effective_rank(res.factors, cfg.rank_tol);
  res.standardization = std::move(stdz);
  return res;
}

}  // namespace

FitResult fit(const Dataset& data, const FitConfig& cfg) {
  cfg.validate();
  validate_data(data);
  std::optional<Standardization> stdz;
  const Dataset* dp = &data;
  Dataset scaled;
  if (cfg.standardize) {
    stdz = Standardization::fit(data);
    scaled = stdz->apply(data);
    dp = &scaled;
  }
  const Dataset& d = *dp;

  std::vector<Path> paths;
  paths.reserve(static_cast<std::size_t>(cfg.n_starts));
  const auto limit = static_cast<std::size_t>(cfg.max_outer);
  const auto prune = std::min(limit, static_cast<std::size_t>(cfg.prune_after));
  for (int s = 0; s < cfg.n_starts; ++s) {
    Rng rng = Rng::derive(cfg.seed, static_cast<std::uint64_t>(s));
    std::vector<Eigen::MatrixXd> init;
    for (auto p : d.dims()) {
      Eigen::MatrixXd u(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(cfg.rank));
      for (Eigen::Index r = 0; r < u.cols(); ++r)
        for (Eigen::Index j = 0; j < u.rows(); ++j) u(j, r) = rng.uniform();
      init.push_back(std::move(u));
    }
    paths.push_back(make_path(d, cfg, std::move(init), 0.0));
    run_until_done(paths.back(), d, cfg, prune);
  }
  std::size_t best = 0;
  for (std::size_t s = 1; s < paths.size(); ++s)
    if (paths[s].trace.back() < paths[best].trace.back()) best = s;
  Path& chosen = paths[best];
  run_until_done(chosen, d, cfg, limit);
  return finish(std::move(chosen), cfg, best, std::move(stdz));
}

FitResult fit_from(const Dataset& data, const FitConfig& cfg, const CPFactors& init, double b0) {
  cfg.validate();
  validate_data(data);
  if (init.dims() != data.dims()) throw DimensionError("warm start factors do not match dataset dims");
  std::optional<Standardization> stdz;
  const Dataset* dp = &data;
  Dataset scaled;
  if (cfg.standardize) {
    stdz = Standardization::fit(data);
    scaled = stdz->apply(data);
    dp = &scaled;
  }
  Path p = make_path(*dp, cfg, init.factors(), b0);
  run_until_done(p, *dp, cfg, static_cast<std::size_t>(cfg.max_outer));
  return finish(std::move(p), cfg, 0, std::move(stdz));
}

std::size_t effective_rank(const CPFactors& f, double rel_tol) {
  const Eigen::MatrixXd m = matricize(assemble(f), 0);
  const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  std::size_t n = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) n += sv(i) > rel_tol * sv(0);
  return n;
}

}  // namespace mwdwd
