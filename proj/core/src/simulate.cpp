#include "mwdwd/simulate.hpp"

#include <cmath>
#include <numeric>

#include "mwdwd/error.hpp"
#include "mwdwd/parallel.hpp"
#include "mwdwd/rng.hpp"

namespace mwdwd {

void SimDesign::validate() const {
  if (dims.empty()) throw ConfigError("design dims must be non-empty");
  for (auto p : dims)
    if (p == 0) throw ConfigError("design extents must be positive");
  if (n < 4 || n % 2 != 0) throw ConfigError("design n must be even and at least 4");
  if (true_rank < 1) throw ConfigError("true_rank must be at least 1");
  if (!nonzero.empty()) {
    if (nonzero.size() != dims.size()) throw ConfigError("nonzero needs one count per mode");
    for (std::size_t k = 0; k < dims.size(); ++k)
      if (nonzero[k] > dims[k]) throw ConfigError("nonzero count exceeds extent in mode " + std::to_string(k));
  }
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ConfigError("alpha must be finite and non-negative");
  if (!(rho >= 0.0 && rho < 1.0)) throw ConfigError("rho must lie in [0, 1)");
}

Eigen::MatrixXd ar1_cholesky(std::size_t p, double rho) {
  Eigen::MatrixXd s(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
  for (Eigen::Index i = 0; i < s.rows(); ++i)
    for (Eigen::Index j = 0; j < s.cols(); ++j) s(i, j) = std::pow(rho, static_cast<double>(std::abs(i - j)));
  return s.llt().matrixL();
}

namespace {

// Applies the lower-triangular factor of each mode's covariance along that mode.
void correlate(std::span<double> x, const Shape& dims, const std::vector<Eigen::MatrixXd>& chol) {
  std::size_t before = 1;
  const std::size_t total = x.size();
  Eigen::VectorXd fiber, mixed;
  for (std::size_t k = 0; k < dims.size(); ++k) {
    const std::size_t P = dims[k];
    const std::size_t after = total / (before * P);
    fiber.resize(static_cast<Eigen::Index>(P));
    for (std::size_t a = 0; a < before; ++a)
      for (std::size_t c = 0; c < after; ++c) {
        for (std::size_t j = 0; j < P; ++j) fiber(static_cast<Eigen::Index>(j)) = x[(a * P + j) * after + c];
        mixed.noalias() = chol[k].triangularView<Eigen::Lower>() * fiber;
        for (std::size_t j = 0; j < P; ++j) x[(a * P + j) * after + c] = mixed(static_cast<Eigen::Index>(j));
      }
    before *= P;
  }
}

Dataset draw(const SimDesign& design, const Tensor& mean, Rng& rng, const std::vector<Eigen::MatrixXd>& chol) {
  const std::size_t F = mean.size(), n = design.n;
  std::vector<double> x(n * F);
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = i < n / 2 ? -1 : 1;
    std::span<double> s(x.data() + i * F, F);
    for (auto& v : s) v = rng.normal();
    if (design.rho > 0.0) correlate(s, design.dims, chol);
    if (y[i] > 0)
      for (std::size_t p = 0; p < F; ++p) s[p] += mean[p];
  }
  return Dataset(design.dims, std::move(x), std::move(y));
}

}  // namespace

SimData gen_dataset(const SimDesign& design) {
  design.validate();
  Rng mean_rng = Rng::derive(design.seed, 0);
  Rng train_rng = Rng::derive(design.seed, 1);
  Rng test_rng = Rng::derive(design.seed, 2);

  std::vector<Eigen::MatrixXd> u;
  for (std::size_t k = 0; k < design.dims.size(); ++k) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(design.dims[k]), static_cast<Eigen::Index>(design.true_rank));
    for (Eigen::Index r = 0; r < m.cols(); ++r)
      for (Eigen::Index j = 0; j < m.rows(); ++j) m(j, r) = mean_rng.normal();
    if (!design.nonzero.empty()) m.bottomRows(m.rows() - static_cast<Eigen::Index>(design.nonzero[k])).setZero();
    u.push_back(std::move(m));
  }
  const Tensor mu = assemble(CPFactors(std::move(u)));
  double ss = 0.0;
  std::size_t support = 0;
  for (double v : mu.data())
    if (v != 0.0) {
      ss += v * v;
      ++support;
    }
  double scale = std::sqrt(design.alpha);
  if (design.scaling == SignalScaling::UnitMeanSquare)
    scale = support == 0 ? 0.0 : std::sqrt(design.alpha / (ss / static_cast<double>(support)));
  std::vector<double> truth(mu.size());
  for (std::size_t p = 0; p < mu.size(); ++p) truth[p] = scale * mu[p];
  SimData out{Dataset{}, Dataset{}, Tensor(design.dims, std::move(truth))};

  std::vector<Eigen::MatrixXd> chol;
  if (design.rho > 0.0)
    for (auto p : design.dims) chol.push_back(ar1_cholesky(p, design.rho));
  out.train = draw(design, out.truth, train_rng, chol);
  out.test = draw(design, out.truth, test_rng, chol);
  return out;
}

double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) throw DimensionError("pearson needs two equally sized samples");
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) throw InvalidInput("correlation undefined for a constant vector");
  return sab / std::sqrt(saa * sbb);
}

Metrics eval_metrics(const Classifier& estimate, const Tensor& truth, const Dataset& test) {
  const auto b = estimate.coefficients().data();
  const auto t = truth.data();
  if (b.size() != t.size()) throw DimensionError("estimate and truth differ in size");
  Metrics m;
  m.cor = pearson(b, t);
  const auto s = scores(estimate, test);
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < s.size(); ++i) wrong += label_of(s[i]) != test.label(i);
  m.mis = static_cast<double>(wrong) / static_cast<double>(test.size());
  std::size_t nz = 0, nz_hit = 0, z = 0, z_hit = 0;
  for (std::size_t p = 0; p < t.size(); ++p) {
    if (t[p] != 0.0) {
      ++nz;
      nz_hit += b[p] != 0.0;
    } else {
      ++z;
      z_hit += b[p] == 0.0;
    }
  }
  m.tp = nz == 0 ? 0.0 : static_cast<double>(nz_hit) / static_cast<double>(nz);
  if (z > 0) m.tn = static_cast<double>(z_hit) / static_cast<double>(z);
  return m;
}

MethodSpec builtin_method(const std::string& name, std::size_t rank) {
  MethodSpec m;
  m.name = name;
  m.rank = rank;
  if (name == "M-SDWD") {
    m.tuning = Tuning::CrossValidate;
  } else if (name == "M-SDWD-lambda1=0") {
    m.tuning = Tuning::CrossValidateLambda2;
  } else if (name == "M-DWD") {
    m.tuning = Tuning::Fixed;
    m.lambda1 = 0.0;
    m.lambda2 = 1.0;
  } else if (name == "Full-SDWD") {
    m.tuning = Tuning::CrossValidate;
    m.vectorize = true;
    m.rank = 1;
  } else {
    throw ConfigError("unknown method '" + name + "'");
  }
  return m;
}

Classifier fit_method(const MethodSpec& method, const Dataset& train, const CVConfig& cv, std::uint64_t seed,
                      double* lambda1, double* lambda2) {
  FitConfig fc = cv.fit;
  fc.rank = method.rank;
  fc.penalty.variant = method.variant;
  fc.seed = seed;
  CVConfig c = cv;
  c.fit = fc;
  c.seed = splitmix64(seed);
  if (method.tuning == Tuning::CrossValidateLambda2) c.lambda1_grid = {0.0};
  if (method.tuning == Tuning::Fixed) {
    fc.penalty.lambda1 = method.lambda1;
    fc.penalty.lambda2 = method.lambda2;
  } else {
    const CVResult sel = select_lambdas(train, c);
    fc.penalty.lambda1 = sel.chosen_lambda1;
    fc.penalty.lambda2 = sel.chosen_lambda2;
  }
  if (lambda1) *lambda1 = fc.penalty.lambda1;
  if (lambda2) *lambda2 = fc.penalty.lambda2;
  const FitResult res = method.tuning == Tuning::Fixed ? fit(train, fc)
                                                       : fit_selected(train, c, fc.penalty.lambda1, fc.penalty.lambda2);
  return Classifier::from_fit(res, fc, train.size());
}

namespace {

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double margin_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return 2.0 * std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace

std::vector<StudyRow> run_study(const StudyConfig& cfg) {
  cfg.design.validate();
  cfg.cv.validate();
  if (cfg.methods.empty()) throw ConfigError("study needs at least one method");
  if (cfg.n_reps < 1) throw ConfigError("n_reps must be at least 1");
  const std::size_t M = cfg.methods.size();
  std::vector<std::vector<ReplicateOutcome>> out(cfg.n_reps, std::vector<ReplicateOutcome>(M));

  parallel_for(cfg.n_reps, [&](std::size_t rep) {
    SimDesign design = cfg.design;
    design.seed = Rng::derive(cfg.design.seed, rep).next();
    const SimData data = gen_dataset(design);
    for (std::size_t mi = 0; mi < M; ++mi) {
      const MethodSpec& method = cfg.methods[mi];
      ReplicateOutcome& o = out[rep][mi];
      try {
        const Dataset train = method.vectorize ? data.train.vectorized() : data.train;
        const Dataset test = method.vectorize ? data.test.vectorized() : data.test;
        const Classifier c = fit_method(method, train, cfg.cv, Rng::derive(design.seed, 100 + mi).next(), &o.lambda1,
                                        &o.lambda2);
        o.effective_rank = c.effective_rank;
        bool zero = true;
        for (double v : c.coefficients().data()) zero = zero && v == 0.0;
        if (zero) {
          // an all-zero hyperplane carries no direction; scored as uncorrelated
          Metrics m;
          const auto s = scores(c, test);
          std::size_t wrong = 0;
          for (std::size_t i = 0; i < s.size(); ++i) wrong += label_of(s[i]) != test.label(i);
          m.mis = static_cast<double>(wrong) / static_cast<double>(test.size());
          m.tp = 0.0;
          bool any_zero = false;
          for (double v : data.truth.data()) any_zero = any_zero || v == 0.0;
          if (any_zero) m.tn = 1.0;
          o.metrics = m;
        } else {
          o.metrics = eval_metrics(c, data.truth, test);
        }
        o.ok = true;
      } catch (const std::exception& e) {
        o.ok = false;
        o.error = e.what();
      }
    }
  });

  std::vector<StudyRow> rows;
  for (std::size_t mi = 0; mi < M; ++mi) {
    StudyRow row;
    row.method = cfg.methods[mi].name;
    std::vector<double> cor, mis, tp, tn;
    std::size_t gt_half = 0, retained = 0;
    for (std::size_t rep = 0; rep < cfg.n_reps; ++rep) {
      const auto& o = out[rep][mi];
      row.replicates.push_back(o);
      if (!o.ok) {
        ++row.n_failed;
        continue;
      }
      cor.push_back(o.metrics.cor);
      mis.push_back(o.metrics.mis);
      tp.push_back(o.metrics.tp);
      if (o.metrics.tn) tn.push_back(*o.metrics.tn);
      gt_half += o.metrics.cor > 0.5;
      retained += o.effective_rank >= cfg.methods[mi].rank;
    }
    const double ok = static_cast<double>(cor.size());
    row.cor = mean_of(cor);
    row.mis = mean_of(mis);
    row.tp = mean_of(tp);
    row.margin_cor = margin_of(cor);
    row.margin_mis = margin_of(mis);
    row.margin_tp = margin_of(tp);
    if (!tn.empty()) {
      row.tn = mean_of(tn);
      row.margin_tn = margin_of(tn);
    }
    row.prop_cor_gt_half = ok > 0 ? static_cast<double>(gt_half) / ok : 0.0;
    row.rank_retention = ok > 0 ? static_cast<double>(retained) / ok : 0.0;
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace mwdwd
