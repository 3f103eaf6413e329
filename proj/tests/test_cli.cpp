#include <cmath>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "slsm/cli.hpp"

namespace {

namespace fs = std::filesystem;
using slsm::io::Json;

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  Run r;
  r.code = slsm::cli::run(std::move(args), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / ("slsm_cli_" + std::string(info->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  std::string write_csv(const std::string& name, const slsm::Dataset& d) const {
    slsm::io::write_text(path(name), slsm::io::xy_csv(d));
    return path(name);
  }

  fs::path dir_;
};

slsm::Dataset grid(double a, double b, std::size_t n, double (*f)(double)) {
  slsm::Dataset d;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
    d.x.push_back(x);
    d.y.push_back(f(x));
  }
  return d;
}

double quadratic(double x) { return x * x + x + 2.0; }

std::vector<std::string> directory_listing(const fs::path& dir) {
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(dir)) names.push_back(e.path().filename().string());
  std::sort(names.begin(), names.end());
  return names;
}

TEST_F(CliTest, SampleGaussianVariance) {
  const auto r = run({"sample", "--beta", "1", "--alpha", "1", "-D", "0.25", "-t", "1", "-n",
                      "100000", "--seed", "7", "--out", path("s.txt")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto file = slsm::io::parse_sample_file(slsm::io::read_text(path("s.txt")));
  ASSERT_EQ(file.values.size(), 100000u);
  EXPECT_EQ(file.manifest["command"], "sample");
  EXPECT_EQ(file.manifest["seed"], 7);
  double mean = 0.0;
  for (double v : file.values) mean += v;
  mean /= static_cast<double>(file.values.size());
  double var = 0.0;
  for (double v : file.values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(file.values.size() - 1);
  EXPECT_NEAR(var, 0.5, 0.01);
}

TEST_F(CliTest, SampleMethodsAgreeInDistribution) {
  const std::vector<std::string> law{"--beta", "0.4", "--alpha", "1", "-D", "0.25", "-t", "1", "-n", "100000"};
  auto args_for = [&](const std::string& method, const std::string& seed, const std::string& out) {
    std::vector<std::string> a{"sample"};
    a.insert(a.end(), law.begin(), law.end());
    a.insert(a.end(), {"--method", method, "--seed", seed, "--out", out});
    return a;
  };
  ASSERT_EQ(run(args_for("exact", "7", path("e.txt"))).code, 0);
  ASSERT_EQ(run(args_for("rejection", "8", path("r.txt"))).code, 0);
  const auto e = slsm::io::parse_sample_file(slsm::io::read_text(path("e.txt"))).values;
  const auto r = slsm::io::parse_sample_file(slsm::io::read_text(path("r.txt"))).values;
  EXPECT_LT(oracle::ks_two_sample(e, r), oracle::ks_critical_two_sample(e.size(), r.size()));
}

TEST_F(CliTest, SampleRejectsBadInput) {
  auto r = run({"sample", "-n", "0"});
  EXPECT_EQ(r.code, 2);
  r = run({"sample", "--beta", "1.5", "-n", "10"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("beta"), std::string::npos) << r.err;
  r = run({"sample", "--method", "inverse", "-n", "10"});
  EXPECT_EQ(r.code, 2);
}

TEST_F(CliTest, SampleToStdout) {
  const auto r = run({"sample", "-n", "3", "--seed", "1"});
  ASSERT_EQ(r.code, 0);
  const auto file = slsm::io::parse_sample_file(r.out);
  EXPECT_EQ(file.values.size(), 3u);
}

TEST_F(CliTest, FitNoiselessQuadratic) {
  const auto csv = write_csv("q.csv", grid(0.0, 1.0, 200, quadratic));
  const auto r = run({"fit", "--input", csv, "--model", "poly2", "--method", "lsm", "--out", path("fit.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  const Json j = Json::parse(slsm::io::read_text(path("fit.json")));
  EXPECT_EQ(j["model"], "poly2");
  EXPECT_EQ(j["method"], "lsm");
  EXPECT_TRUE(j["converged"].get<bool>());
  const auto p = j["params"].get<std::vector<double>>();
  ASSERT_EQ(p.size(), 3u);
  EXPECT_NEAR(p[0], 1.0, 1e-8);
  EXPECT_NEAR(p[1], 1.0, 1e-8);
  EXPECT_NEAR(p[2], 2.0, 1e-8);
  EXPECT_EQ(j["manifest"]["command"], "fit");
  EXPECT_FALSE(j.contains("stages"));
}

TEST_F(CliTest, FitStretchedUnitBetaMatchesPlain) {
  slsm::Rng rng(3);
  auto d = grid(0.0, 1.0, 100, quadratic);
  for (double& y : d.y) y += 0.3 * slsm::standard_normal(rng);
  const auto csv = write_csv("n.csv", d);
  ASSERT_EQ(run({"fit", "--input", csv, "--model", "poly2", "--out", path("a.json")}).code, 0);
  ASSERT_EQ(run({"fit", "--input", csv, "--model", "poly2", "--method", "stretched", "--beta", "1",
                 "--out", path("b.json")})
                .code,
            0);
  const Json a = Json::parse(slsm::io::read_text(path("a.json")));
  const Json b = Json::parse(slsm::io::read_text(path("b.json")));
  ASSERT_TRUE(b.contains("stages"));
  EXPECT_EQ(b["stages"]["transition"]["model"], "poly2");
  const auto model = slsm::ModelSpec::polynomial(2);
  const auto pa = slsm::predict(model, a["params"].get<std::vector<double>>(), d.x);
  const auto pb = slsm::predict(model, b["params"].get<std::vector<double>>(), d.x);
  for (std::size_t i = 0; i < d.size(); ++i) EXPECT_NEAR(pa[i], pb[i], 1e-8);
}

TEST_F(CliTest, FitExitCodes) {
  slsm::Dataset two{{0.0, 1.0}, {0.0, 1.0}};
  EXPECT_EQ(run({"fit", "--input", write_csv("two.csv", two), "--model", "sin"}).code, 2);

  slsm::io::write_text(path("bad.csv"), "x,y\n1,2\n3\n");
  EXPECT_EQ(run({"fit", "--input", path("bad.csv")}).code, 2);
  slsm::io::write_text(path("text.csv"), "x,y\n1,2\n3,abc\n");
  EXPECT_EQ(run({"fit", "--input", path("text.csv")}).code, 2);
  EXPECT_EQ(run({"fit", "--input", path("missing.csv")}).code, 2);
  EXPECT_EQ(run({"fit", "--input", path("two.csv"), "--model", "wave"}).code, 2);

  slsm::Dataset same_x{{1.0, 1.0, 1.0, 1.0}, {0.0, 1.0, 2.0, 3.0}};
  EXPECT_EQ(run({"fit", "--input", write_csv("same.csv", same_x), "--model", "poly1"}).code, 4);
}

TEST_F(CliTest, FitNonConvergenceStillWritesReport) {
  const auto csv = write_csv("line.csv", grid(0.0, 1.0, 50, [](double x) { return x; }));
  const auto r = run({"fit", "--input", csv, "--model", "sin", "--out", path("nc.json")});
  ASSERT_EQ(r.code, 3) << r.err;
  const Json j = Json::parse(slsm::io::read_text(path("nc.json")));
  EXPECT_FALSE(j["converged"].get<bool>());
  EXPECT_EQ(j["params"].size(), 4u);
}

TEST_F(CliTest, OutputsRoundTripByteForByte) {
  const auto csv = write_csv("q.csv", grid(0.0, 1.0, 30, quadratic));
  ASSERT_EQ(run({"fit", "--input", csv, "--model", "poly2", "--out", path("f.json")}).code, 0);
  const std::string json_text = slsm::io::read_text(path("f.json"));
  EXPECT_EQ(Json::parse(json_text).dump(2) + "\n", json_text);

  const std::string csv_text = slsm::io::read_text(csv);
  EXPECT_EQ(slsm::io::parse_csv(csv_text).str(), csv_text);

  const fs::path out = dir_ / "tables";
  ASSERT_EQ(run({"tables", "--configs", "sin:b0.8:e50", "--repetitions", "4", "--out", out.string()}).code, 0);
  for (const auto& name : directory_listing(out)) {
    const std::string text = slsm::io::read_text(out / name);
    if (name.ends_with(".csv")) {
      EXPECT_EQ(slsm::io::parse_csv(text).str(), text) << name;
    } else {
      EXPECT_EQ(Json::parse(text).dump(2) + "\n", text) << name;
    }
  }
}

TEST_F(CliTest, TablesSubsetAndDeterminism) {
  const fs::path a = dir_ / "a";
  const fs::path b = dir_ / "b";
  const std::vector<std::string> base{"tables", "--configs", "poly:b0.4:e30", "--repetitions", "6", "--seed", "11"};
  auto with_out = [&](const fs::path& p) {
    auto v = base;
    v.insert(v.end(), {"--out", p.string()});
    return v;
  };
  ASSERT_EQ(run(with_out(a)).code, 0);
  ASSERT_EQ(run(with_out(b)).code, 0);
  const auto names = directory_listing(a);
  EXPECT_EQ(names, (std::vector<std::string>{"figure_poly_b0.4_e30.csv", "manifest.json",
                                             "summary_poly_b0.4_e30.csv", "table_poly_b0.4_e30.csv"}));
  for (const auto& n : names) {
    if (n == "manifest.json") continue;
    EXPECT_EQ(slsm::io::read_text(a / n), slsm::io::read_text(b / n)) << n;
  }

  const auto table = slsm::io::parse_csv(slsm::io::read_text(a / "table_poly_b0.4_e30.csv"));
  EXPECT_EQ(table.header, (std::vector<std::string>{"method", "a", "b", "c", "Error1", "Error2"}));
  ASSERT_EQ(table.rows.size(), 3u);
  EXPECT_EQ(std::get<std::string>(table.rows[0][0]), "f");
  const auto figure = slsm::io::parse_csv(slsm::io::read_text(a / "figure_poly_b0.4_e30.csv"));
  EXPECT_EQ(figure.header, (std::vector<std::string>{"x", "y_noisy", "f_true", "F_lsm", "F_slsm"}));
  EXPECT_EQ(figure.rows.size(), 200u);
}

TEST_F(CliTest, RerunFromManifestReproducesOutputs) {
  const fs::path a = dir_ / "a";
  const fs::path b = dir_ / "b";
  ASSERT_EQ(run({"tables", "--configs", "sin:b0.4:e30", "--repetitions", "5", "--seed", "99", "--out",
                 a.string()})
                .code,
            0);
  ASSERT_EQ(run({"tables", "--config", (a / "manifest.json").string(), "--out", b.string()}).code, 0);
  for (const auto& n : directory_listing(a)) {
    if (n == "manifest.json") continue;
    EXPECT_EQ(slsm::io::read_text(a / n), slsm::io::read_text(b / n)) << n;
  }
  const Json ma = Json::parse(slsm::io::read_text(a / "manifest.json"));
  const Json mb = Json::parse(slsm::io::read_text(b / "manifest.json"));
  EXPECT_EQ(ma["config"]["seed"], mb["config"]["seed"]);
  EXPECT_EQ(ma["config"]["configs"], mb["config"]["configs"]);
  EXPECT_EQ(ma["version"], "0.1.0");

  ASSERT_EQ(run({"sample", "-n", "20", "--seed", "5", "--beta", "0.7", "--out", path("s1.txt")}).code, 0);
  slsm::io::write_text(path("s1.json"),
                       slsm::io::parse_sample_file(slsm::io::read_text(path("s1.txt"))).manifest.dump());
  ASSERT_EQ(run({"sample", "--config", path("s1.json")}).code, 0);
  // the manifest names its own output, so the rerun overwrote it with identical content
  ASSERT_EQ(run({"sample", "--config", path("s1.json"), "--out", path("s2.txt")}).code, 0);
  EXPECT_EQ(slsm::io::parse_sample_file(slsm::io::read_text(path("s1.txt"))).values,
            slsm::io::parse_sample_file(slsm::io::read_text(path("s2.txt"))).values);
}

TEST_F(CliTest, UnwritableOutputDirectory) {
  slsm::io::write_text(path("plain_file"), "x");
  const auto r = run({"tables", "--configs", "poly:b0.4:e30", "--repetitions", "1", "--out",
                      path("plain_file") + "/sub"});
  EXPECT_EQ(r.code, 2);
  EXPECT_FALSE(r.err.empty());
}

TEST_F(CliTest, ExperimentCommand) {
  const fs::path out = dir_ / "exp";
  const auto r = run({"experiment", "--configs", "poly:b0.8:e50", "--repetitions", "5", "--threads", "2",
                      "--out", out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(directory_listing(out), (std::vector<std::string>{"experiment_poly_b0.8_e50.json",
                                                              "manifest.json", "summary_poly_b0.8_e50.csv"}));
  const Json j = Json::parse(slsm::io::read_text(out / "experiment_poly_b0.8_e50.json"));
  EXPECT_EQ(j["trials"].size(), 5u);
  EXPECT_EQ(j["label"], "poly:b0.8:e50");
}

TEST_F(CliTest, ExperimentWithCustomTrial) {
  Json cfg;
  cfg["repetitions"] = 3;
  cfg["trial"] = {{"truth_model", "poly1"}, {"truth_params", {2.0, -1.0}}, {"regression", "poly1"},
                  {"n", 40},               {"x_min", 1.0},              {"x_max", 2.0},
                  {"eta", 20.0},           {"beta", 0.6},               {"spacing", "uniform"}};
  slsm::io::write_text(path("cfg.json"), cfg.dump());
  const fs::path out = dir_ / "custom";
  const auto r = run({"experiment", "--config", path("cfg.json"), "--out", out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const Json j = Json::parse(slsm::io::read_text(out / "experiment_custom.json"));
  EXPECT_EQ(j["repetitions"], 3);
  EXPECT_EQ(j["config"]["regression"], "poly1");
  EXPECT_EQ(j["config"]["n"], 40);
  EXPECT_EQ(j["config"]["spacing"], "uniform");
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(run({"sample", "--bogus"}).code, 2);
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"tables", "--configs", "poly:b0.4"}).code, 2);
  EXPECT_EQ(run({"--help"}).code, 0);
  slsm::io::write_text(path("broken.json"), "{not json");
  EXPECT_EQ(run({"sample", "--config", path("broken.json")}).code, 2);
}

}  // namespace
