#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "reactive/cli.hpp"

using namespace reactive;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

Result run(const std::vector<std::string>& args) {
  std::ostringstream out;
  std::ostringstream err;
  Result r;
  r.code = cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string sample(const std::string& name) { return std::string(REACTIVE_SAMPLES_DIR) + "/" + name; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool contains(const std::string& hay, const std::string& needle) { return hay.find(needle) != std::string::npos; }

class CliDirs : public ::testing::Test {
protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    root_ = fs::temp_directory_path() / (std::string("reactive_cli_") + info->name() + "_" + std::to_string(::getpid()));
    fs::remove_all(root_);
    fs::create_directories(root_);
    config_ = (root_ / "config.json").string();
    std::ofstream(config_) << R"({"seed": 5, "samples_per_state": 6, "calibration_samples": 1,
                                  "sweep": {"lo": -2, "hi": 0, "step": 1, "samples": 3}})";
  }
  void TearDown() override { fs::remove_all(root_); }
  std::string dir(const std::string& name) const { return (root_ / name).string(); }

  fs::path root_;
  std::string config_;
};

}  // namespace

TEST(CliValidate, ExampleIsValidAndSeparable) {
  const auto r = run({"validate", sample("projection.json")});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(contains(r.out, "M=3 N=3 K=1 n=2"));
  EXPECT_TRUE(contains(r.out, "valid: yes"));
  EXPECT_TRUE(contains(r.out, "separability: separable"));
  EXPECT_TRUE(contains(r.out, "strongly_dominant"));
  EXPECT_EQ(run({"validate", "--config", sample("projection.json")}).out, r.out);
}

TEST(CliValidate, RankTwoIsNotPreSeparable) {
  const auto r = run({"validate", sample("rank2.json")});
  EXPECT_EQ(r.code, 0);
  EXPECT_TRUE(contains(r.out, "not pre-separable (offending f: 1)")) << r.out;
}

TEST(CliValidate, DisjointReportsOwnedOnlyIndex) {
  const auto r = run({"validate", sample("disjoint.json")});
  EXPECT_EQ(r.code, 0);
  EXPECT_TRUE(contains(r.out, "no (only sensor 3 hears 3)")) << r.out;
}

TEST(CliValidate, ParseAndIoErrorsExitTwo) {
  const auto bad = run({"validate", sample("malformed.json")});
  EXPECT_EQ(bad.code, 2);
  EXPECT_TRUE(contains(bad.err, "parse error"));
  EXPECT_EQ(run({"validate", sample("missing.json")}).code, 2);
  EXPECT_EQ(run({"validate"}).code, 2);
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"frobnicate"}).code, 2);
  EXPECT_EQ(run({"validate", "--tol", "-1", sample("rank2.json")}).code, 2);
  EXPECT_EQ(run({"--help"}).code, 0);
}

TEST_F(CliDirs, InvalidScenarioExitsOne) {
  const auto path = dir("invalid.json");
  std::ofstream(path) << R"({"M": 2, "N": 2, "K": 1, "covering": [[1], [1, 2]], "partition": [[1, 2], []],
                             "readings": [[[1, 0]], [[1, 1]]]})";
  const auto r = run({"validate", path});
  EXPECT_EQ(r.code, 1) << r.out << r.err;
  EXPECT_TRUE(contains(r.out, "valid: no"));
  EXPECT_TRUE(contains(r.out, "violation"));
}

TEST(CliTheorems, HarmoniousSurvivesSensorOneLoss) {
  const auto r = run({"theorems", sample("harmonious.json"), "--fail-sensor", "1"});
  EXPECT_EQ(r.code, 0) << r.out;
  const auto basis = r.out.find("basis:");
  const auto frame = r.out.find("frame:");
  ASSERT_NE(basis, std::string::npos);
  ASSERT_NE(frame, std::string::npos);
  EXPECT_TRUE(contains(r.out.substr(basis, frame - basis), "span: no"));
  EXPECT_TRUE(contains(r.out.substr(frame), "span: yes"));
}

TEST_F(CliDirs, TheoremsJsonReport) {
  const auto r = run({"theorems", sample("harmonious.json"), "--fail-sensor", "1", "--out", dir("th")});
  ASSERT_EQ(r.code, 0);
  const auto j = io::json::parse(slurp(root_ / "th" / "theorems.json"));
  EXPECT_EQ(j.at("failed_sensor"), 1);
  ASSERT_EQ(j.at("reports").size(), 4u);
  EXPECT_EQ(j.at("reports")[0].at("theorem"), "basis");
  EXPECT_FALSE(j.at("reports")[0].at("span").at("spans").get<bool>());
  EXPECT_EQ(j.at("reports")[0].at("uncovered"), io::json::parse("[1]"));
  EXPECT_EQ(j.at("reports")[1].at("theorem"), "frame");
  EXPECT_TRUE(j.at("reports")[1].at("passed").get<bool>());
}

TEST(CliTheorems, DisjointFrameFailsUnderStrict) {
  const auto lax = run({"theorems", sample("disjoint.json"), "--fail-sensor", "3"});
  EXPECT_EQ(lax.code, 0) << lax.out;
  EXPECT_TRUE(contains(lax.out, "hypothesis harmonious_3: no (fails at 3)"));
  EXPECT_TRUE(contains(lax.out, "uncovered coordinates: 3"));
  EXPECT_EQ(run({"theorems", sample("disjoint.json"), "--fail-sensor", "3", "--strict"}).code, 1);
  EXPECT_EQ(run({"theorems", sample("projection.json"), "--strict"}).code, 0);
}

TEST(CliTheorems, RejectsBadInput) {
  EXPECT_EQ(run({"theorems", sample("rank2.json")}).code, 1);
  EXPECT_EQ(run({"theorems", sample("harmonious.json"), "--fail-sensor", "9"}).code, 2);
  EXPECT_EQ(run({"theorems", sample("harmonious.json"), "--fail-sensor", "0"}).code, 2);
  EXPECT_EQ(run({"theorems", sample("harmonious.json"), "--fail-sensor", "x"}).code, 2);
}

TEST_F(CliDirs, GenerateThenDetectMatchesFusedRun) {
  ASSERT_EQ(run({"generate", "--config", config_, "--out", dir("data")}).code, 0);
  EXPECT_TRUE(fs::exists(root_ / "data" / "bundle.json"));
  ASSERT_EQ(run({"detect", "--dataset", dir("data"), "--out", dir("r1")}).code, 0);
  ASSERT_EQ(run({"detect", "--config", config_, "--out", dir("r2")}).code, 0);
  EXPECT_EQ(slurp(root_ / "r1" / "results.csv"), slurp(root_ / "r2" / "results.csv"));
  EXPECT_EQ(slurp(root_ / "r1" / "results.json"), slurp(root_ / "r2" / "results.json"));
}

TEST_F(CliDirs, SeedControlsTheData) {
  ASSERT_EQ(run({"generate", "--config", config_, "--seed", "11", "--out", dir("a")}).code, 0);
  ASSERT_EQ(run({"generate", "--config", config_, "--seed", "11", "--out", dir("b")}).code, 0);
  ASSERT_EQ(run({"generate", "--config", config_, "--seed", "12", "--out", dir("c")}).code, 0);
  const auto rel = fs::path("high_good") / "health.csv";
  EXPECT_EQ(slurp(root_ / "a" / rel), slurp(root_ / "b" / rel));
  EXPECT_NE(slurp(root_ / "a" / rel), slurp(root_ / "c" / rel));
  const auto j = io::json::parse(slurp(root_ / "a" / "bundle.json"));
  EXPECT_EQ(j.at("config").at("seed"), 11);
}

TEST_F(CliDirs, FailSensorRenamesConditions) {
  ASSERT_EQ(run({"generate", "--config", config_, "--fail-sensor", "3", "--out", dir("g")}).code, 0);
  EXPECT_TRUE(fs::exists(root_ / "g" / "low_s3_failed" / "health.csv"));
  EXPECT_EQ(run({"generate", "--config", config_, "--fail-sensor", "5", "--out", dir("h")}).code, 2);
}

TEST_F(CliDirs, DetectArgumentErrors) {
  EXPECT_EQ(run({"detect", "--config", config_}).code, 2);
  EXPECT_EQ(run({"detect", "--dataset", dir("nothing"), "--out", dir("r")}).code, 2);
  ASSERT_EQ(run({"generate", "--config", config_, "--out", dir("data")}).code, 0);
  EXPECT_EQ(run({"detect", "--dataset", dir("data"), "--seed", "3", "--out", dir("r")}).code, 2);
  EXPECT_EQ(run({"generate", "--config", sample("malformed.json"), "--out", dir("x")}).code, 2);
}

TEST_F(CliDirs, SweepRangeGivesTwentyOnePoints) {
  const auto r = run({"sweep", "--config", config_, "--snr-range", "-20:0:1", "--out", dir("sw")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(contains(r.out, "21 SNR points"));
  const auto csv = slurp(root_ / "sw" / "sweep.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 21 * 4);
  EXPECT_TRUE(fs::exists(root_ / "sw" / "sweep_frame_s1_failed.dat"));
  EXPECT_EQ(run({"sweep", "--config", config_, "--snr-range", "0:-20:1", "--out", dir("bad")}).code, 2);
}
