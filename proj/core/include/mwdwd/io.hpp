#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "mwdwd/bootstrap.hpp"
#include "mwdwd/dataset.hpp"
#include "mwdwd/model.hpp"
#include "mwdwd/simulate.hpp"
#include "mwdwd/solver.hpp"
#include "mwdwd/tuning.hpp"

namespace mwdwd {

/// Library version string.
std::string version();

/// Shortest-safe text for a double: 17 significant digits.
std::string format_real(double v);

// Tensor files: a header `dims N P1 ... PK` followed by N*prod(P) reals,
// whitespace separated, row-major. Writers put one subject per line.

struct TensorBlock {
  Shape dims;  // subject dims, without N
  std::size_t n = 0;
  std::vector<double> values;
};

TensorBlock read_tensor_block(std::istream& in, const std::string& name = "<stream>");
void write_tensor_block(std::ostream& out, const Shape& dims, std::size_t n, std::span<const double> values);

std::vector<int> read_labels(std::istream& in, const std::string& name = "<stream>");
void write_labels(std::ostream& out, std::span<const int> labels);

Dataset load_dataset(const std::filesystem::path& tensor_path, const std::filesystem::path& labels_path);
void save_dataset(const Dataset& d, const std::filesystem::path& tensor_path, const std::filesystem::path& labels_path);

std::string model_to_json(const Classifier& m);
Classifier model_from_json(const std::string& text);
void save_model(const Classifier& m, const std::filesystem::path& path);
Classifier load_model(const std::filesystem::path& path);

/// Everything a run can be configured with. Absent sections keep defaults.
/// The cv and bootstrap fit templates are copied from `fit`.
struct RunConfig {
  FitConfig fit;
  CVConfig cv;
  BootstrapConfig bootstrap;
  SimDesign design;
  bool has_design = false;
  std::vector<MethodSpec> methods;
  std::size_t n_reps = 1;
};

/// Parses and validates a JSON run config; unknown keys are a ConfigError.
RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);

void write_cv_csv(std::ostream& out, const CVResult& r);
void write_scores_csv(std::ostream& out, std::span<const double> scores);
void write_bootstrap_csv(std::ostream& out, const BootstrapResult& r);
void write_study_csv(std::ostream& out, const std::vector<StudyRow>& rows);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace mwdwd
