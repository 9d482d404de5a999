#include "mwdwd/io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mwdwd/error.hpp"

#ifndef MWDWD_VERSION
#define MWDWD_VERSION "0.0.0"
#endif

namespace mwdwd {

using nlohmann::json;

std::string version() { return MWDWD_VERSION; }

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

bool parse_real(const std::string& tok, double& out) {
  errno = 0;
  char* end = nullptr;
  out = std::strtod(tok.c_str(), &end);
  return end == tok.c_str() + tok.size() && errno == 0 && std::isfinite(out);
}

bool parse_count(const std::string& tok, std::size_t& out) {
  if (tok.empty() || tok.find_first_not_of("0123456789") != std::string::npos) return false;
  errno = 0;
  out = std::strtoull(tok.c_str(), nullptr, 10);
  return errno == 0;
}

std::string where(const std::string& name, std::size_t line) { return name + ":" + std::to_string(line) + ": "; }

}  // namespace

TensorBlock read_tensor_block(std::istream& in, const std::string& name) {
  std::string line;
  std::size_t lineno = 0;
  TensorBlock b;
  bool header = false;
  std::size_t expected = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string tok;
    if (!header) {
      if (!(ls >> tok)) continue;
      if (tok != "dims") throw IoError(where(name, lineno) + "expected header 'dims N P1 ... PK'");
      std::vector<std::size_t> nums;
      while (ls >> tok) {
        std::size_t v = 0;
        if (!parse_count(tok, v) || v == 0)
          throw IoError(where(name, lineno) + "invalid extent '" + tok + "' in header");
        nums.push_back(v);
      }
      if (nums.size() < 2) throw IoError(where(name, lineno) + "header needs N and at least one extent");
      b.n = nums[0];
      b.dims.assign(nums.begin() + 1, nums.end());
      expected = b.n * shape_size(b.dims);
      b.values.reserve(expected);
      header = true;
      continue;
    }
    while (ls >> tok) {
      double v = 0.0;
      if (!parse_real(tok, v)) throw IoError(where(name, lineno) + "cannot parse '" + tok + "' as a finite real");
      b.values.push_back(v);
    }
  }
  if (!header) throw IoError(name + ": missing 'dims' header");
  if (b.values.size() != expected)
    throw IoError(name + ": expected " + std::to_string(expected) + " values, got " + std::to_string(b.values.size()));
  return b;
}

void write_tensor_block(std::ostream& out, const Shape& dims, std::size_t n, std::span<const double> values) {
  const std::size_t F = shape_size(dims);
  if (values.size() != n * F) throw DimensionError("value count does not match dims");
  out << "dims " << n;
  for (auto p : dims) out << ' ' << p;
  out << '\n';
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < F; ++j) out << (j ? " " : "") << format_real(values[i * F + j]);
    out << '\n';
  }
}

std::vector<int> read_labels(std::istream& in, const std::string& name) {
  std::vector<int> y;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string tok, extra;
    if (!(ls >> tok)) continue;
    if (ls >> extra) throw IoError(where(name, lineno) + "expected one label per line");
    if (tok == "1" || tok == "+1")
      y.push_back(1);
    else if (tok == "-1")
      y.push_back(-1);
    else
      throw IoError(where(name, lineno) + "label '" + tok + "' is not -1 or +1");
  }
  return y;
}

void write_labels(std::ostream& out, std::span<const int> labels) {
  for (int v : labels) out << v << '\n';
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

Dataset load_dataset(const std::filesystem::path& tensor_path, const std::filesystem::path& labels_path) {
  std::ifstream tin(tensor_path);
  if (!tin) throw IoError("cannot open " + tensor_path.string());
  TensorBlock b = read_tensor_block(tin, tensor_path.string());
  std::ifstream lin(labels_path);
  if (!lin) throw IoError("cannot open " + labels_path.string());
  std::vector<int> y = read_labels(lin, labels_path.string());
  if (y.size() != b.n)
    throw IoError(labels_path.string() + ": expected " + std::to_string(b.n) + " labels, got " +
                  std::to_string(y.size()));
  return Dataset(std::move(b.dims), std::move(b.values), std::move(y));
}

void save_dataset(const Dataset& d, const std::filesystem::path& tensor_path, const std::filesystem::path& labels_path) {
  std::ostringstream t, l;
  write_tensor_block(t, d.dims(), d.size(), d.values());
  write_labels(l, d.labels());
  write_text(tensor_path, t.str());
  write_text(labels_path, l.str());
}

// ---- model JSON ----

std::string model_to_json(const Classifier& m) {
  json j;
  j["format"] = "mwdwd-model";
  j["version"] = version();
  j["dims"] = m.dims();
  j["rank"] = m.factors().rank();
  j["penalty"] = {{"variant", std::string(to_string(m.penalty().variant))},
                  {"lambda1", m.penalty().lambda1},
                  {"lambda2", m.penalty().lambda2}};
  j["b0"] = m.b0();
  json modes = json::array();
  for (std::size_t k = 0; k < m.factors().order(); ++k) {
    const auto& u = m.factors()[k];
    json comps = json::array();
    for (Eigen::Index r = 0; r < u.cols(); ++r) {
      std::vector<double> col(u.col(r).data(), u.col(r).data() + u.rows());
      comps.push_back(col);
    }
    modes.push_back(comps);
  }
  j["factors"] = modes;
  j["objective"] = m.objective;
  j["effective_rank"] = m.effective_rank;
  j["n_train"] = m.n_train;
  j["seed"] = m.seed;
  if (m.standardization())
    j["standardization"] = {{"mean", m.standardization()->mean}, {"scale", m.standardization()->scale}};
  else
    j["standardization"] = nullptr;
  return j.dump(2) + "\n";
}

Classifier model_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    if (j.value("format", std::string()) != "mwdwd-model") throw IoError("not a model file");
    const auto dims = j.at("dims").get<Shape>();
    const auto R = j.at("rank").get<std::size_t>();
    const auto& modes = j.at("factors");
    if (modes.size() != dims.size()) throw IoError("model factors do not match dims");
    std::vector<Eigen::MatrixXd> u;
    for (std::size_t k = 0; k < dims.size(); ++k) {
      const auto& comps = modes[k];
      if (comps.size() != R) throw IoError("model mode " + std::to_string(k) + " has wrong component count");
      Eigen::MatrixXd m(static_cast<Eigen::Index>(dims[k]), static_cast<Eigen::Index>(R));
      for (std::size_t r = 0; r < R; ++r) {
        const auto col = comps[r].get<std::vector<double>>();
        if (col.size() != dims[k]) throw IoError("model factor column has wrong length");
        for (std::size_t p = 0; p < dims[k]; ++p) m(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(r)) = col[p];
      }
      u.push_back(std::move(m));
    }
    PenaltySpec pen;
    const auto& pj = j.at("penalty");
    pen.variant = parse_penalty_variant(pj.at("variant").get<std::string>());
    pen.lambda1 = pj.at("lambda1").get<double>();
    pen.lambda2 = pj.at("lambda2").get<double>();
    std::optional<Standardization> stdz;
    if (j.contains("standardization") && !j.at("standardization").is_null()) {
      Standardization s;
      s.mean = j["standardization"].at("mean").get<std::vector<double>>();
      s.scale = j["standardization"].at("scale").get<std::vector<double>>();
      stdz = std::move(s);
    }
    Classifier c(CPFactors(std::move(u)), j.at("b0").get<double>(), pen, std::move(stdz));
    c.objective = j.value("objective", 0.0);
    c.effective_rank = j.value("effective_rank", std::size_t{0});
    c.n_train = j.value("n_train", std::size_t{0});
    c.seed = j.value("seed", std::uint64_t{0});
    return c;
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed model JSON: ") + e.what());
  }
}

void save_model(const Classifier& m, const std::filesystem::path& path) { write_text(path, model_to_json(m)); }

Classifier load_model(const std::filesystem::path& path) { return model_from_json(read_text(path)); }

// ---- run config ----

namespace {

void check_keys(const json& obj, const std::string& section, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError("'" + section + "' must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : obj.items())
    if (!ok.count(key)) throw ConfigError("unknown key '" + key + "' in " + section);
}

template <class T>
void take(const json& obj, const char* key, T& out, const std::string& section) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("bad value for '" + std::string(key) + "' in " + section);
  }
}

Tuning parse_tuning(const std::string& s) {
  if (s == "cv") return Tuning::CrossValidate;
  if (s == "cv-lambda2") return Tuning::CrossValidateLambda2;
  if (s == "fixed") return Tuning::Fixed;
  throw ConfigError("unknown tuning '" + s + "' (expected cv, cv-lambda2 or fixed)");
}

}  // namespace

RunConfig parse_run_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(j, "config", {"fit", "cv", "bootstrap", "design", "study"});
  RunConfig rc;

  if (j.contains("fit")) {
    const auto& f = j["fit"];
    check_keys(f, "fit", {"rank", "penalty", "lambda1", "lambda2", "epsilon", "max_outer", "max_inner", "n_starts",
                          "prune_after", "seed", "standardize", "rank_tol"});
    take(f, "rank", rc.fit.rank, "fit");
    if (f.contains("penalty")) {
      std::string p;
      take(f, "penalty", p, "fit");
      try {
        rc.fit.penalty.variant = parse_penalty_variant(p);
      } catch (const Error& e) {
        throw ConfigError(e.what());
      }
    }
    take(f, "lambda1", rc.fit.penalty.lambda1, "fit");
    take(f, "lambda2", rc.fit.penalty.lambda2, "fit");
    take(f, "epsilon", rc.fit.epsilon, "fit");
    take(f, "max_outer", rc.fit.max_outer, "fit");
    take(f, "max_inner", rc.fit.max_inner, "fit");
    take(f, "n_starts", rc.fit.n_starts, "fit");
    take(f, "prune_after", rc.fit.prune_after, "fit");
    take(f, "seed", rc.fit.seed, "fit");
    take(f, "standardize", rc.fit.standardize, "fit");
    take(f, "rank_tol", rc.fit.rank_tol, "fit");
  }
  rc.fit.validate();
  rc.cv.fit = rc.fit;
  rc.bootstrap.fit = rc.fit;

  if (j.contains("cv")) {
    const auto& c = j["cv"];
    check_keys(c, "cv", {"n_folds", "lambda1_grid", "lambda2_grid", "stratified", "seed", "select_by_misclassification"});
    take(c, "n_folds", rc.cv.n_folds, "cv");
    take(c, "lambda1_grid", rc.cv.lambda1_grid, "cv");
    take(c, "lambda2_grid", rc.cv.lambda2_grid, "cv");
    take(c, "stratified", rc.cv.stratified, "cv");
    take(c, "seed", rc.cv.seed, "cv");
    take(c, "select_by_misclassification", rc.cv.select_by_misclassification, "cv");
  }
  rc.cv.validate();

  if (j.contains("bootstrap")) {
    const auto& b = j["bootstrap"];
    check_keys(b, "bootstrap", {"n_boot", "quantiles", "seed"});
    take(b, "n_boot", rc.bootstrap.n_boot, "bootstrap");
    take(b, "quantiles", rc.bootstrap.quantiles, "bootstrap");
    take(b, "seed", rc.bootstrap.seed, "bootstrap");
  }
  rc.bootstrap.validate();

  if (j.contains("design")) {
    const auto& d = j["design"];
    check_keys(d, "design", {"dims", "n", "true_rank", "nonzero", "alpha", "rho", "scaling", "seed"});
    take(d, "dims", rc.design.dims, "design");
    take(d, "n", rc.design.n, "design");
    take(d, "true_rank", rc.design.true_rank, "design");
    take(d, "nonzero", rc.design.nonzero, "design");
    take(d, "alpha", rc.design.alpha, "design");
    take(d, "rho", rc.design.rho, "design");
    take(d, "seed", rc.design.seed, "design");
    if (d.contains("scaling")) {
      std::string sc;
      take(d, "scaling", sc, "design");
      if (sc == "raw")
        rc.design.scaling = SignalScaling::Raw;
      else if (sc == "unit-mean-square")
        rc.design.scaling = SignalScaling::UnitMeanSquare;
      else
        throw ConfigError("unknown scaling '" + sc + "' (expected raw or unit-mean-square)");
    }
    rc.design.validate();
    rc.has_design = true;
  }

  if (j.contains("study")) {
    const auto& s = j["study"];
    check_keys(s, "study", {"n_reps", "methods"});
    take(s, "n_reps", rc.n_reps, "study");
    if (rc.n_reps < 1) throw ConfigError("study n_reps must be at least 1");
    if (s.contains("methods")) {
      if (!s["methods"].is_array()) throw ConfigError("study methods must be a list");
      for (const auto& m : s["methods"]) {
        if (m.is_string()) {
          rc.methods.push_back(builtin_method(m.get<std::string>()));
          continue;
        }
        check_keys(m, "study method", {"name", "base", "rank", "penalty", "tuning", "lambda1", "lambda2", "vectorize"});
        std::string base = "M-SDWD", name, penalty, tuning;
        take(m, "base", base, "study method");
        MethodSpec spec = builtin_method(base);
        take(m, "name", spec.name, "study method");
        take(m, "rank", spec.rank, "study method");
        if (m.contains("penalty")) {
          take(m, "penalty", penalty, "study method");
          try {
            spec.variant = parse_penalty_variant(penalty);
          } catch (const Error& e) {
            throw ConfigError(e.what());
          }
        }
        if (m.contains("tuning")) {
          take(m, "tuning", tuning, "study method");
          spec.tuning = parse_tuning(tuning);
        }
        take(m, "lambda1", spec.lambda1, "study method");
        take(m, "lambda2", spec.lambda2, "study method");
        take(m, "vectorize", spec.vectorize, "study method");
        if (spec.rank < 1) throw ConfigError("study method rank must be at least 1");
        rc.methods.push_back(std::move(spec));
      }
    }
  }
  return rc;
}

RunConfig load_run_config(const std::filesystem::path& path) { return parse_run_config(read_text(path)); }

// ---- CSV ----

void write_cv_csv(std::ostream& out, const CVResult& r) {
  out << "lambda1,lambda2,t_stat,misclassification,chosen\n";
  const std::size_t n1 = r.lambda1_grid.size();
  for (std::size_t i2 = 0; i2 < r.lambda2_grid.size(); ++i2)
    for (std::size_t i1 = 0; i1 < n1; ++i1) {
      const std::size_t c = i2 * n1 + i1;
      out << format_real(r.lambda1_grid[i1]) << ',' << format_real(r.lambda2_grid[i2]) << ','
          << format_real(r.t_stat[c]) << ',' << format_real(r.misclassification[c]) << ',' << (c == r.chosen ? 1 : 0)
          << '\n';
    }
}

void write_scores_csv(std::ostream& out, std::span<const double> scores) {
  out << "index,score,predicted\n";
  for (std::size_t i = 0; i < scores.size(); ++i) out << i << ',' << format_real(scores[i]) << ',' << label_of(scores[i]) << '\n';
}

void write_bootstrap_csv(std::ostream& out, const BootstrapResult& r) {
  out << "mode,index,component,estimate,lower,upper\n";
  for (const auto& w : r.intervals)
    out << w.mode << ',' << w.index << ',' << w.component << ',' << format_real(w.estimate) << ','
        << format_real(w.lower) << ',' << format_real(w.upper) << '\n';
}

void write_study_csv(std::ostream& out, const std::vector<StudyRow>& rows) {
  out << "method,cor,mis,tp,tn,margin_cor,margin_mis,margin_tp,margin_tn,prop_cor_gt_0.5,rank_retention,n_failed\n";
  auto opt = [](const std::optional<double>& v) { return v ? format_real(*v) : std::string("-"); };
  for (const auto& r : rows)
    out << r.method << ',' << format_real(r.cor) << ',' << format_real(r.mis) << ',' << format_real(r.tp) << ','
        << opt(r.tn) << ',' << format_real(r.margin_cor) << ',' << format_real(r.margin_mis) << ','
        << format_real(r.margin_tp) << ',' << opt(r.margin_tn) << ',' << format_real(r.prop_cor_gt_half) << ','
        << format_real(r.rank_retention) << ',' << r.n_failed << '\n';
}

}  // namespace mwdwd
