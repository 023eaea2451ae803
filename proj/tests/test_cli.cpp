#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "bspring/cli.hpp"
#include "bspring/error.hpp"
#include "support.hpp"

using namespace bspring;
namespace fs = std::filesystem;

namespace {

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "bspring");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t count_rows_starting_with(const fs::path& p, const std::string& prefix) {
  std::ifstream in(p);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) n += line.rfind(prefix, 0) == 0;
  return n;
}

std::string config_error_message(RunConfig c) {
  try {
    validate(c);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Settings, EveryKeyRoundTripsThroughDescribe) {
  RunConfig c;
  const auto desc = describe(c);
  for (const auto& key : setting_keys()) {
    ASSERT_TRUE(desc.count(key)) << key;
    RunConfig d;
    EXPECT_NO_THROW(apply_setting(d, key, desc.at(key))) << key;
    EXPECT_EQ(describe(d), desc) << key;
  }
}

TEST(Settings, DefaultsFollowTheDocumentedValues) {
  const RunConfig c;
  EXPECT_DOUBLE_EQ(c.pipeline.params.alpha, 0.7);
  EXPECT_DOUBLE_EQ(c.pipeline.params.beta, 1.3);
  EXPECT_DOUBLE_EQ(c.pipeline.params.gamma, 5000.0);
  EXPECT_DOUBLE_EQ(c.pipeline.batch_seconds, 60.0);
  EXPECT_EQ(c.pipeline.k, 3u);
  EXPECT_EQ(c.pipeline.region.dba_iterations, 10u);
  EXPECT_DOUBLE_EQ(c.eval.tol_ms, 100.0);
}

TEST(Settings, UnknownKeyAndBadValue) {
  RunConfig c;
  EXPECT_THROW(apply_setting(c, "alhpa", "0.5"), ConfigError);
  EXPECT_THROW(apply_setting(c, "alpha", "abc"), ConfigError);
  EXPECT_THROW(apply_setting(c, "method", "fastest"), ConfigError);
  apply_setting(c, "method", "boosted-dt");
  EXPECT_EQ(c.pipeline.method, Method::BoostedDT);
  apply_setting(c, "hr_bpm", "60, 90");
  EXPECT_EQ(c.synth.hr_profile_bpm, (std::vector<double>{60.0, 90.0}));
}

TEST(Settings, ConfigFileSyntax) {
  const auto dir = testing_support::scratch_dir("cli_config");
  std::ofstream(dir / "run.cfg") << "# comment\n[segment]\nalpha = 0.6\n; another\nbeta=1.4\n\nmethod = spring\n";
  RunConfig c;
  apply_config_file(c, dir / "run.cfg");
  EXPECT_DOUBLE_EQ(c.pipeline.params.alpha, 0.6);
  EXPECT_DOUBLE_EQ(c.pipeline.params.beta, 1.4);
  EXPECT_EQ(c.pipeline.method, Method::Spring);
  std::ofstream(dir / "bad.cfg") << "alpha 0.6\n";
  EXPECT_THROW(apply_config_file(c, dir / "bad.cfg"), ConfigError);
  EXPECT_THROW(apply_config_file(c, dir / "missing.cfg"), ConfigError);
}

TEST(Settings, AlphaBetaMessages) {
  RunConfig c;
  c.pipeline.params.alpha = 0.9;
  c.pipeline.params.beta = 0.8;
  auto msg = config_error_message(c);
  EXPECT_NE(msg.find("alpha"), std::string::npos);
  EXPECT_NE(msg.find("beta"), std::string::npos);
  c.pipeline.params.alpha = 1.0;
  c.pipeline.params.beta = 2.0;
  msg = config_error_message(c);
  EXPECT_NE(msg.find("below 1"), std::string::npos) << msg;
  EXPECT_EQ(config_error_message(RunConfig{}), "");
}

TEST(Synth, DeterministicFilesAndManifest) {
  const auto dir = testing_support::scratch_dir("cli_synth");
  const std::vector<std::string> common{"--hr_bpm", "72", "--duration_s", "60", "--noise_sigma", "0.01", "--seed", "7"};
  auto a = common;
  a.insert(a.begin(), {"synth", "--output", (dir / "a").string()});
  auto b = common;
  b.insert(b.begin(), {"synth", "--output", (dir / "b").string()});
  ASSERT_EQ(run(a), kExitOk);
  ASSERT_EQ(run(b), kExitOk);
  for (const char* f : {"record.csv", "truth.csv", "ibi.csv"}) EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
  const auto sys_rows = count_rows_starting_with(dir / "a" / "truth.csv", "Sys,");
  EXPECT_NEAR(static_cast<double>(sys_rows), 72.0, 2.0);
  const auto manifest = nlohmann::json::parse(slurp(dir / "a" / "manifest.json"));
  EXPECT_EQ(manifest["command"], "synth");
  EXPECT_TRUE(manifest.contains("version"));
  EXPECT_EQ(manifest["config"]["seed"], "7");
}

TEST(SegmentAndEvaluate, EndToEnd) {
  const auto dir = testing_support::scratch_dir("cli_segment");
  ASSERT_EQ(run({"synth", "--output", (dir / "s").string(), "--duration_s", "60", "--noise_sigma", "0.01"}), kExitOk);
  ASSERT_EQ(run({"segment", "--input", (dir / "s" / "record.csv").string(), "--truth",
                 (dir / "s" / "truth.csv").string(), "--output", (dir / "seg").string()}),
            kExitOk);
  for (const char* cls : {"Sys,", "MS,", "Onset,"}) {
    EXPECT_GT(count_rows_starting_with(dir / "seg" / "events.csv", cls), 50u) << cls;
  }
  for (const char* f : {"segments.csv", "trace.csv", "manifest.json"}) EXPECT_TRUE(fs::exists(dir / "seg" / f)) << f;

  ASSERT_EQ(run({"evaluate", "--pred", (dir / "seg" / "events.csv").string(), "--truth",
                 (dir / "s" / "truth.csv").string(), "--output", (dir / "ev").string()}),
            kExitOk);
  const auto report = nlohmann::json::parse(slurp(dir / "ev" / "report.json"));
  EXPECT_GE(report["classes"]["Sys"]["f1"].get<double>(), 0.98);
  EXPECT_TRUE(report["classes"]["Sys"].contains("valid_prediction_fraction"));
  EXPECT_TRUE(fs::exists(dir / "ev" / "table1.csv"));
  EXPECT_TRUE(fs::exists(dir / "ev" / "table2.csv"));
}

TEST(SegmentAndEvaluate, DynamicMethodExportsTemplates) {
  const auto dir = testing_support::scratch_dir("cli_dt");
  ASSERT_EQ(run({"synth", "--output", (dir / "s").string(), "--duration_s", "150", "--noise_sigma", "0.01",
                 "--dicrotic", "0.1,0.6"}),
            kExitOk);
  ASSERT_EQ(run({"segment", "--method", "boosted-dt", "--input", (dir / "s" / "record.csv").string(), "--truth",
                 (dir / "s" / "truth.csv").string(), "--output", (dir / "seg").string()}),
            kExitOk);
  std::size_t exported = 0;
  for (const auto& e : fs::directory_iterator(dir / "seg" / "templates")) exported += e.path().extension() == ".csv";
  EXPECT_GE(exported, 2u);
}

TEST(Evaluate, PredictionsEqualTruthAndEmptyPredictions) {
  const auto dir = testing_support::scratch_dir("cli_eval");
  ASSERT_EQ(run({"synth", "--output", (dir / "s").string(), "--duration_s", "30"}), kExitOk);
  const auto truth = (dir / "s" / "truth.csv").string();
  ASSERT_EQ(run({"evaluate", "--pred", truth, "--truth", truth, "--output", (dir / "same").string()}), kExitOk);
  auto report = nlohmann::json::parse(slurp(dir / "same" / "report.json"));
  for (const char* cls : {"Sys", "MS", "Onset"}) EXPECT_DOUBLE_EQ(report["classes"][cls]["f1"].get<double>(), 1.0);

  std::ofstream(dir / "empty.csv") << "class,time_s\n";
  ASSERT_EQ(run({"evaluate", "--pred", (dir / "empty.csv").string(), "--truth", truth, "--output",
                 (dir / "empty").string()}),
            kExitOk);
  report = nlohmann::json::parse(slurp(dir / "empty" / "report.json"));
  for (const char* cls : {"Sys", "MS", "Onset"}) EXPECT_DOUBLE_EQ(report["classes"][cls]["recall"].get<double>(), 0.0);

  std::ofstream(dir / "wrong.csv") << "kind,time_s\nSys,1.0\n";
  EXPECT_EQ(run({"evaluate", "--pred", (dir / "wrong.csv").string(), "--truth", truth, "--output",
                 (dir / "wrong").string()}),
            kExitInputError);
}

TEST(Segment, SpringAtZeroThresholdWarns) {
  const auto dir = testing_support::scratch_dir("cli_spring");
  ASSERT_EQ(run({"synth", "--output", (dir / "s").string(), "--duration_s", "30", "--noise_sigma", "0.02"}), kExitOk);
  testing::internal::CaptureStderr();
  const int code = run({"segment", "--method", "spring", "--spring_epsilon", "0", "--input",
                        (dir / "s" / "record.csv").string(), "--truth", (dir / "s" / "truth.csv").string(),
                        "--output", (dir / "seg").string()});
  const auto err = testing::internal::GetCapturedStderr();
  EXPECT_EQ(code, kExitOk);
  EXPECT_NE(err.find("no matches"), std::string::npos) << err;
  EXPECT_EQ(count_rows_starting_with(dir / "seg" / "events.csv", "Sys,"), 0u);
}

TEST(ExitCodes, InputAndConfigErrors) {
  const auto dir = testing_support::scratch_dir("cli_exit");
  EXPECT_EQ(run({"segment", "--input", (dir / "nope.csv").string(), "--output", dir.string()}), kExitInputError);
  EXPECT_EQ(run({"segment", "--alpha", "1.5", "--input", "x.csv"}), kExitConfigError);
  EXPECT_EQ(run({"segment", "--set", "nonsense=1"}), kExitConfigError);
  EXPECT_EQ(run({"frobnicate"}), kExitConfigError);
  EXPECT_EQ(run({"--help"}), kExitOk);
}

TEST(Bench, TrivialInputCompletes) {
  RunConfig c;
  c.bench_seconds = {1.0};
  c.bench_repeats = 1;
  const auto rows = run_bench(c);
  ASSERT_FALSE(rows.empty());
  for (const auto& r : rows) EXPECT_GT(r.wall_s, 0.0);
  EXPECT_EQ(rows.front().sweep, "n");
}
