#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "mwdwd/io.hpp"
#include "mwdwd_tools/cli.hpp"
#include "test_support.hpp"

using namespace mwdwd;
using namespace mwdwd::testing;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code;
  std::string out, err;
};

CliRun run_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("mwdwd_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    Rng rng(110);
    data_ = random_dataset({4, 3, 2}, 30, 1.0, rng);
    save_dataset(data_, path("x.txt"), path("y.txt"));
  }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
  Dataset data_;
};

std::vector<double> score_column(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  std::vector<double> s;
  while (std::getline(in, line)) {
    const auto a = line.find(','), b = line.rfind(',');
    s.push_back(std::stod(line.substr(a + 1, b - a - 1)));
  }
  return s;
}

}  // namespace

TEST_F(CliTest, FitThenPredictReproducesTrainingScores) {
  const CliRun f = run_cli({"fit", "--data", path("x.txt"), "--labels", path("y.txt"), "--rank", "2", "--lambda1", "0.01",
                         "--seed", "3", "--out", path("model.json")});
  ASSERT_EQ(f.code, 0) << f.err;
  EXPECT_NE(f.out.find("objective"), std::string::npos);
  const CliRun p = run_cli({"predict", "--model", path("model.json"), "--data", path("x.txt")});
  ASSERT_EQ(p.code, 0) << p.err;

  FitConfig cfg;
  cfg.rank = 2;
  cfg.penalty.lambda1 = 0.01;
  cfg.seed = 3;
  const FitResult res = fit(data_, cfg);
  const auto expected = scores(Classifier::from_fit(res, cfg, data_.size()), data_);
  const auto got = score_column(p.out);
  ASSERT_EQ(got.size(), expected.size());
  for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], expected[i], 1e-12);

  const Classifier m = load_model(path("model.json"));
  EXPECT_EQ(m.factors().rank(), 2u);
  EXPECT_EQ(m.penalty().lambda1, 0.01);
}

TEST_F(CliTest, PredictReportsMisclassificationWithLabels) {
  ASSERT_EQ(run_cli({"fit", "--data", path("x.txt"), "--labels", path("y.txt"), "--out", path("m.json")}).code, 0);
  const CliRun p = run_cli({"predict", "--model", path("m.json"), "--data", path("x.txt"), "--labels", path("y.txt")});
  EXPECT_EQ(p.code, 0);
  EXPECT_NE(p.err.find("misclassification"), std::string::npos);
}

TEST_F(CliTest, FitIsReproducibleGivenSeed) {
  const CliRun a = run_cli({"fit", "--data", path("x.txt"), "--labels", path("y.txt"), "--seed", "9"});
  const CliRun b = run_cli({"fit", "--data", path("x.txt"), "--labels", path("y.txt"), "--seed", "9"});
  ASSERT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
}

TEST_F(CliTest, CvWithSingleCellGrid) {
  write_text(path("cfg.json"), R"({"cv": {"lambda1_grid": [0.005], "lambda2_grid": [0.75]}})");
  const CliRun r = run_cli({"cv", "--data", path("x.txt"), "--labels", path("y.txt"), "--config", path("cfg.json"),
                         "--folds", "3", "--out", path("cv.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("lambda1 0.0050000000000000001 lambda2 0.75"), std::string::npos) << r.out;
  const std::string csv = read_text(path("cv.csv"));
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "lambda1,lambda2,t_stat,misclassification,chosen");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2);
}

TEST_F(CliTest, BootstrapWritesOneRowPerWeight) {
  const CliRun r = run_cli({"bootstrap", "--data", path("x.txt"), "--labels", path("y.txt"), "--replicates", "4",
                         "--starts", "1", "--seed", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 1 + 4 + 3 + 2);
}

TEST_F(CliTest, UsageErrorsExitTwo) {
  EXPECT_EQ(run_cli({}).code, 2);
  EXPECT_EQ(run_cli({"train"}).code, 2);
  EXPECT_EQ(run_cli({"fit", "--labels", path("y.txt")}).code, 2);
  EXPECT_EQ(run_cli({"fit", "--data", path("x.txt"), "--labels", path("y.txt"), "--penalty", "ridge"}).code, 2);
  EXPECT_EQ(run_cli({"fit", "--data", path("x.txt"), "--labels", path("y.txt"), "--lambda1", "-1"}).code, 2);
  EXPECT_EQ(run_cli({"predict", "--data", path("x.txt")}).code, 2);
}

TEST_F(CliTest, InputErrorsExitThree) {
  write_text(path("bad.txt"), "dims 30 4 3 2\n1 2 3\n");
  const CliRun r = run_cli({"fit", "--data", path("bad.txt"), "--labels", path("y.txt")});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("expected 720 values, got 3"), std::string::npos) << r.err;
  write_text(path("cfg.json"), R"({"fit": {"lamda1": 1}})");
  EXPECT_EQ(run_cli({"fit", "--data", path("x.txt"), "--labels", path("y.txt"), "--config", path("cfg.json")}).code, 3);
  std::string ones;
  for (int i = 0; i < 30; ++i) ones += "1\n";
  write_text(path("ones.txt"), ones);
  EXPECT_EQ(run_cli({"fit", "--data", path("x.txt"), "--labels", path("ones.txt")}).code, 3);
  EXPECT_EQ(run_cli({"simulate", "--config", path("cfg.json")}).code, 3);
}

TEST_F(CliTest, NumericalFailureExitsFour) {
  write_text(path("huge.txt"), "dims 4 2\n1e200 1e200\n-1e200 1\n1 1e200\n2 -1e200\n");
  write_text(path("y4.txt"), "1\n-1\n1\n-1\n");
  const CliRun r = run_cli({"fit", "--data", path("huge.txt"), "--labels", path("y4.txt"), "--starts", "1", "--rank", "2"});
  EXPECT_EQ(r.code, 4) << r.err;
  EXPECT_NE(r.err.find("numerical failure"), std::string::npos);
}

TEST(Cli, GoldenSimulationIsBitExact) {
  const fs::path data = MWDWD_TEST_DATA;
  const CliRun r = run_cli({"simulate", "--config", (data / "golden_sim.json").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, read_text(data / "golden_sim.csv"));
}

TEST(Cli, VersionAndHelp) {
  const CliRun v = run_cli({"--version"});
  EXPECT_EQ(v.code, 0);
  EXPECT_EQ(v.out, version() + "\n");
  const CliRun h = run_cli({"--help"});
  EXPECT_EQ(h.code, 0);
  EXPECT_NE(h.out.find("simulate"), std::string::npos);
}
