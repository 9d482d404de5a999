#include "mwdwd_tools/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "mwdwd/error.hpp"
#include "mwdwd/io.hpp"
#include "mwdwd/parallel.hpp"

namespace mwdwd::cli {
namespace {

struct Options {
  std::string data, labels, config, out, model;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> rank, starts, folds, replicates;
  std::optional<double> lambda1, lambda2;
  std::optional<std::string> penalty;
  std::optional<std::size_t> threads;
  bool quiet = false;
};

// Config file first, then flags on top.
RunConfig resolve(const Options& o) {
  RunConfig rc = o.config.empty() ? RunConfig{} : load_run_config(o.config);
  if (o.rank) rc.fit.rank = *o.rank;
  if (o.lambda1) rc.fit.penalty.lambda1 = *o.lambda1;
  if (o.lambda2) rc.fit.penalty.lambda2 = *o.lambda2;
  if (o.penalty) rc.fit.penalty.variant = parse_penalty_variant(*o.penalty);
  if (o.starts) rc.fit.n_starts = static_cast<int>(*o.starts);
  if (o.seed) {
    rc.fit.seed = *o.seed;
    rc.cv.seed = *o.seed;
    rc.bootstrap.seed = *o.seed;
    rc.design.seed = *o.seed;
  }
  if (o.folds) rc.cv.n_folds = *o.folds;
  if (o.replicates) {
    rc.bootstrap.n_boot = *o.replicates;
    rc.n_reps = *o.replicates;
  }
  rc.fit.validate();
  rc.cv.fit = rc.fit;
  rc.bootstrap.fit = rc.fit;
  rc.cv.validate();
  rc.bootstrap.validate();
  return rc;
}

void emit(const Options& o, const std::string& text, std::ostream& out) {
  if (o.out.empty())
    out << text;
  else
    write_text(o.out, text);
}

int cmd_fit(const Options& o, std::ostream& out) {
  const RunConfig rc = resolve(o);
  const Dataset d = load_dataset(o.data, o.labels);
  const FitResult res = fit(d, rc.fit);
  const Classifier c = Classifier::from_fit(res, rc.fit, d.size());
  emit(o, model_to_json(c), out);
  if (!o.quiet && !o.out.empty())
    out << "objective " << format_real(res.objective()) << " outer_iterations " << res.n_outer << " converged "
        << (res.converged ? "yes" : "no") << " effective_rank " << res.effective_rank << '\n';
  return kOk;
}

int cmd_predict(const Options& o, std::ostream& out, std::ostream& err) {
  const Classifier c = load_model(o.model);
  std::ifstream tin(o.data);
  if (!tin) throw IoError("cannot open " + o.data);
  const TensorBlock b = read_tensor_block(tin, o.data);
  if (b.dims != c.dims()) throw DimensionError("data dims do not match the model");
  const std::size_t F = shape_size(b.dims);
  std::vector<double> s(b.n);
  for (std::size_t i = 0; i < b.n; ++i) s[i] = score(c, std::span<const double>(b.values).subspan(i * F, F));
  std::ostringstream csv;
  write_scores_csv(csv, s);
  emit(o, csv.str(), out);
  if (!o.labels.empty() && !o.quiet) {
    std::ifstream lin(o.labels);
    if (!lin) throw IoError("cannot open " + o.labels);
    const auto y = read_labels(lin, o.labels);
    if (y.size() != b.n) throw IoError(o.labels + ": expected " + std::to_string(b.n) + " labels, got " + std::to_string(y.size()));
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < b.n; ++i) wrong += label_of(s[i]) != y[i];
    (o.out.empty() ? err : out) << "misclassification " << format_real(static_cast<double>(wrong) / static_cast<double>(b.n)) << '\n';
  }
  return kOk;
}

int cmd_cv(const Options& o, std::ostream& out) {
  const RunConfig rc = resolve(o);
  const Dataset d = load_dataset(o.data, o.labels);
  const CVResult r = select_lambdas(d, rc.cv);
  std::ostringstream csv;
  write_cv_csv(csv, r);
  emit(o, csv.str(), out);
  if (!o.quiet && !o.out.empty())
    out << "lambda1 " << format_real(r.chosen_lambda1) << " lambda2 " << format_real(r.chosen_lambda2) << '\n';
  return kOk;
}

int cmd_bootstrap(const Options& o, std::ostream& out, std::ostream& err) {
  const RunConfig rc = resolve(o);
  const Dataset d = load_dataset(o.data, o.labels);
  const BootstrapResult r = bootstrap_ci(d, rc.bootstrap);
  std::ostringstream csv;
  write_bootstrap_csv(csv, r);
  emit(o, csv.str(), out);
  if (r.convergence_warning && !o.quiet) err << "warning: more than 20% of bootstrap fits did not converge\n";
  return kOk;
}

int cmd_simulate(const Options& o, std::ostream& out, std::ostream& err) {
  if (o.config.empty()) throw ConfigError("simulate needs --config with a design section");
  const RunConfig rc = resolve(o);
  if (!rc.has_design) throw ConfigError("config has no design section");
  StudyConfig sc;
  sc.design = rc.design;
  sc.methods = rc.methods.empty() ? std::vector<MethodSpec>{builtin_method("M-SDWD")} : rc.methods;
  sc.n_reps = rc.n_reps;
  sc.cv = rc.cv;
  const auto rows = run_study(sc);
  std::ostringstream csv;
  write_study_csv(csv, rows);
  emit(o, csv.str(), out);
  if (!o.quiet)
    for (const auto& r : rows)
      for (std::size_t i = 0; i < r.replicates.size(); ++i)
        if (!r.replicates[i].ok) err << r.method << " replicate " << i << " failed: " << r.replicates[i].error << '\n';
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multiway sparse distance weighted discrimination", "mwdwd"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", version());
  Options o;
  std::optional<std::size_t> threads;
  app.add_option("--threads", threads, "Worker threads (default: MWDWD_THREADS or all cores)");

  auto common = [&](CLI::App* s) {
    s->add_option("--config", o.config, "JSON run configuration")->check(CLI::ExistingFile);
    s->add_option("--out", o.out, "Output file (default: standard output)");
    s->add_option("--seed", o.seed, "Random seed");
    s->add_flag("--quiet", o.quiet, "Suppress summaries");
  };
  auto data = [&](CLI::App* s, bool labels_required) {
    s->add_option("--data", o.data, "Tensor file")->required()->check(CLI::ExistingFile);
    auto* l = s->add_option("--labels", o.labels, "Label file")->check(CLI::ExistingFile);
    if (labels_required) l->required();
  };
  auto model_flags = [&](CLI::App* s) {
    s->add_option("--rank", o.rank, "CP rank")->check(CLI::PositiveNumber);
    s->add_option("--lambda1", o.lambda1, "L1 weight")->check(CLI::NonNegativeNumber);
    s->add_option("--lambda2", o.lambda2, "L2 weight")->check(CLI::NonNegativeNumber);
    s->add_option("--penalty", o.penalty, "coupled, separable-l2 or tensor")
        ->check(CLI::IsMember({"coupled", "separable-l2", "tensor"}));
    s->add_option("--starts", o.starts, "Random starts")->check(CLI::PositiveNumber);
  };

  auto* fit_cmd = app.add_subcommand("fit", "Fit a model and write it as JSON");
  common(fit_cmd);
  data(fit_cmd, true);
  model_flags(fit_cmd);

  auto* pred_cmd = app.add_subcommand("predict", "Score subjects with a saved model");
  pred_cmd->add_option("--model", o.model, "Model JSON")->required()->check(CLI::ExistingFile);
  common(pred_cmd);
  data(pred_cmd, false);

  auto* cv_cmd = app.add_subcommand("cv", "Cross-validate the penalty weights");
  common(cv_cmd);
  data(cv_cmd, true);
  model_flags(cv_cmd);
  cv_cmd->add_option("--folds", o.folds, "Number of folds")->check(CLI::Range(2, 1000000));

  auto* boot_cmd = app.add_subcommand("bootstrap", "Percentile intervals for factor weights");
  common(boot_cmd);
  data(boot_cmd, true);
  model_flags(boot_cmd);
  boot_cmd->add_option("--replicates", o.replicates, "Bootstrap replicates")->check(CLI::PositiveNumber);

  auto* sim_cmd = app.add_subcommand("simulate", "Run a simulation study from a config design");
  common(sim_cmd);
  sim_cmd->add_option("--folds", o.folds, "Cross-validation folds")->check(CLI::Range(2, 1000000));
  sim_cmd->add_option("--replicates", o.replicates, "Study replicates")->check(CLI::PositiveNumber);

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << version() << '\n';
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    if (auto* sub = app.get_subcommands().empty() ? nullptr : app.get_subcommands().front())
      err << sub->help();
    return kUsage;
  }
  if (threads) set_default_threads(std::max<std::size_t>(1, *threads));

  try {
    if (fit_cmd->parsed()) return cmd_fit(o, out);
    if (pred_cmd->parsed()) return cmd_predict(o, out, err);
    if (cv_cmd->parsed()) return cmd_cv(o, out);
    if (boot_cmd->parsed()) return cmd_bootstrap(o, out, err);
    if (sim_cmd->parsed()) return cmd_simulate(o, out, err);
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kInput;
  }
  return kUsage;
}

}  // namespace mwdwd::cli
