// Copyright 2026 The lodistort Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"

namespace lodistort {
namespace {

namespace fs = std::filesystem;

struct Invocation {
  int code;
  std::string out, err;
};

Invocation call(std::vector<std::string> args) {
  args.insert(args.begin(), "lodistort");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = fs::temp_directory_path() /
            ("lodistort_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(root_);
    fs::create_directories(root_);
  }
  void TearDown() override { fs::remove_all(root_); }

  std::string p(const std::string& leaf) const { return (root_ / leaf).string(); }

  void simulate(const std::string& dir, const std::string& seed = "4") {
    const auto r = call({"simulate", "--mics", "2", "--seconds", "1", "--t60", "0.4", "--seed", seed, "--out", p(dir)});
    ASSERT_EQ(r.code, 0) << r.err;
  }

  fs::path root_;
};

TEST_F(CliTest, SimulateEnhanceEvaluate) {
  simulate("scene");
  for (const char* f : {"mix.wav", "direct.wav", "reverb.wav", "noise.wav", "manifest.json"})
    EXPECT_TRUE(fs::exists(root_ / "scene" / f)) << f;
  const auto manifest = cli::json::parse(slurp(root_ / "scene" / "manifest.json"));
  EXPECT_EQ(manifest.at("mics"), 2);
  EXPECT_EQ(manifest.at("seed"), 4);

  const auto e = call({"enhance", "--pipeline", "mwmpdr_wpe", "--scene", p("scene"), "--out", p("out")});
  ASSERT_EQ(e.code, 0) << e.err;
  for (const char* f : {"estimator.wav", "wpe.wav", "mwmpdr_wpe.wav", "final.wav", "features.ldspec", "metrics.json"})
    EXPECT_TRUE(fs::exists(root_ / "out" / f)) << f;
  const auto metrics = cli::json::parse(slurp(root_ / "out" / "metrics.json"));
  EXPECT_EQ(metrics.at("pipeline"), "mwmpdr_wpe");
  EXPECT_EQ(metrics.at("stages").size(), 3u);
  EXPECT_EQ(metrics.at("final"), "mwmpdr_wpe");
  const double finalSiSdr = metrics.at("stages").back().at("metrics").at("siSdrDb").get<double>();

  // Re-scoring the written final waveform reproduces the reported SI-SDR.
  const auto v = call({"evaluate", "--est", p("out/final.wav"), "--ref", p("scene/direct.wav"), "--mix",
                       p("scene/mix.wav")});
  ASSERT_EQ(v.code, 0) << v.err;
  const auto ev = cli::json::parse(v.out);
  EXPECT_NEAR(ev.at("siSdrDb").get<double>(), finalSiSdr, 1e-4);
}

TEST_F(CliTest, ListPipelines) {
  const auto r = call({"list-pipelines"});
  ASSERT_EQ(r.code, 0);
  const auto j = cli::json::parse(r.out);
  EXPECT_EQ(j.at("pipelines").size(), pipeline::catalog().size());
  EXPECT_EQ(j.at("schemaVersion"), cli::kSchemaVersion);
}

TEST_F(CliTest, ExitCodes) {
  EXPECT_EQ(call({}).code, 2);
  EXPECT_EQ(call({"enhance", "--pipeline", "nope", "--mix", p("x.wav"), "--out", p("o")}).code, 2);
  EXPECT_EQ(call({"simulate", "--mics", "0", "--out", p("s")}).code, 2);
  const auto missing = call({"enhance", "--pipeline", "wpe", "--scene", p("missing"), "--out", p("o")});
  EXPECT_EQ(missing.code, 3);
  EXPECT_NE(missing.err.find("error:"), std::string::npos);
  std::ofstream(root_ / "bad.json") << "{not json";
  EXPECT_EQ(call({"enhance", "--config", p("bad.json")}).code, 2);
  EXPECT_EQ(call({"list-pipelines", "--help"}).code, 0);
}

TEST_F(CliTest, FlagsOverrideConfig) {
  simulate("scene");
  std::ofstream(root_ / "cfg.json") << R"({"pipeline": "wpe", "params": {"taps": 4, "delay": 2}, "scene": ")"
                                    << p("scene") << R"(", "out": ")" << p("out") << R"("})";
  const auto r = call({"enhance", "--config", p("cfg.json"), "--taps", "6"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto m = cli::json::parse(slurp(root_ / "out" / "metrics.json"));
  EXPECT_EQ(m.at("params").at("taps"), 6);
  EXPECT_EQ(m.at("params").at("delay"), 2);
  EXPECT_EQ(m.at("pipeline"), "wpe");
}

TEST_F(CliTest, MultipleScenesAndDeterminism) {
  simulate("a", "1");
  simulate("b", "2");
  for (const char* out : {"run1", "run2"}) {
    const auto r = call({"enhance", "--pipeline", "fcp_wpe", "--scene", p("a"), "--scene", p("b"), "--jobs", "2",
                         "--out", p(out)});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  for (const char* s : {"a", "b"})
    for (const char* f : {"final.wav", "features.ldspec", "metrics.json"}) {
      const fs::path one = root_ / "run1" / s / f, two = root_ / "run2" / s / f;
      ASSERT_TRUE(fs::exists(one)) << one;
      EXPECT_EQ(slurp(one), slurp(two)) << one;
    }
  EXPECT_NE(slurp(root_ / "run1/a/final.wav"), slurp(root_ / "run1/b/final.wav"));
}

TEST_F(CliTest, AnalyzePhaseTriple) {
  const auto r = call({"analyze-phase", "--mag-s", "1", "--mag-v", "2", "--theta", "0.5235987755982988", "--draws",
                       "200000", "--seed", "3"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = cli::json::parse(r.out);
  EXPECT_NEAR(j.at("flipProbability").get<double>(), std::acos(0.25) / std::numbers::pi, 1e-12);
  EXPECT_NEAR(j.at("flipMonteCarlo").get<double>(), std::acos(0.25) / std::numbers::pi, 0.005);
}

}  // namespace
}  // namespace lodistort
