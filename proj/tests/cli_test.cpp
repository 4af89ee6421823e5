#include "veribtot/cli.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "support/fixture_paths.hpp"
#include "veribtot/bench.hpp"
#include "veribtot/config.hpp"
#include "veribtot/errors.hpp"

using namespace veribtot;
using veribtot::testing::fixture_dir;

namespace {

int run_cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"veribtot"};
  for (const auto& a : args) {
    argv.push_back(a.c_str());
  }
  return cli_main(static_cast<int>(argv.size()), argv.data());
}

std::filesystem::path work_dir() {
  auto dir = std::filesystem::temp_directory_path() / "veribtot-cli-test";
  std::filesystem::create_directories(dir);
  return dir;
}

std::filesystem::path mock_pass_config() {
  auto path = work_dir() / "mock_pass.conf";
  std::ofstream(path) << "# test config\nverifier = mock_pass\n";
  return path;
}

std::filesystem::path mock_fail_config() {
  auto path = work_dir() / "mock_fail.conf";
  std::ofstream(path) << "verifier = mock_fail\n";
  return path;
}

TEST(CliTest, UnknownSubcommandFails) {
  EXPECT_NE(run_cli({"frobnicate"}), 0);
  EXPECT_NE(run_cli({}), 0);
  EXPECT_NE(run_cli({"run", "--no-such-flag"}), 0);
}

TEST(CliTest, VerifyGoldenFixturePrintsPass) {
  auto design = (fixture_dir() / "verilog" / "adder4.v").string();
  auto tb = (fixture_dir() / "verilog" / "adder4_tb.v").string();

  ::testing::internal::CaptureStdout();
  int rc = run_cli({"verify", "--design", design, "--testbench", tb, "--config",
                    mock_pass_config().string()});
  std::string out = ::testing::internal::GetCapturedStdout();
  EXPECT_EQ(rc, 0);
  EXPECT_NE(out.find("PASS"), std::string::npos);
}

TEST(CliTest, VerifyFailureIsNonzero) {
  auto design = (fixture_dir() / "verilog" / "adder4_buggy.v").string();
  auto tb = (fixture_dir() / "verilog" / "adder4_tb.v").string();

  ::testing::internal::CaptureStdout();
  int rc = run_cli({"verify", "--design", design, "--testbench", tb, "--config",
                    mock_fail_config().string()});
  std::string out = ::testing::internal::GetCapturedStdout();
  EXPECT_EQ(rc, 1);
  EXPECT_NE(out.find("FAIL"), std::string::npos);
}

TEST(CliTest, RunReplaySingleCase) {
  auto out_path = work_dir() / "run_result.json";
  std::filesystem::remove(out_path);

  ::testing::internal::CaptureStdout();
  int rc = run_cli({"run",
                    "--case", (fixture_dir() / "mini_suite" / "and2").string(),
                    "--paradigm", "IO",
                    "--backend", "replay",
                    "--replay-file",
                    (fixture_dir() / "transcripts" / "mini_io" / "and2__IO__0.jsonl").string(),
                    "--config", mock_pass_config().string(),
                    "--out", out_path.string()});
  std::string out = ::testing::internal::GetCapturedStdout();
  EXPECT_EQ(rc, 0);
  EXPECT_NE(out.find("functional_ok: true"), std::string::npos);

  auto j = nlohmann::json::parse(std::ifstream(out_path));
  EXPECT_EQ(j["terminated_by"], "success");
  EXPECT_EQ(j["llm_calls"], 1);
}

TEST(CliTest, RunDumpsTreeForVeribtot) {
  auto tree_path = work_dir() / "tree.json";
  std::filesystem::remove(tree_path);
  auto transcript = fixture_dir() / "transcripts" / "adder_pipe_64bit_walkthrough.jsonl";

  // the walkthrough case as a case directory
  auto case_dir = work_dir() / "adder_pipe_64bit";
  std::filesystem::create_directories(case_dir);
  std::ofstream(case_dir / "spec.md") << "64-bit pipelined adder";
  std::ofstream(case_dir / "testbench.v")
      << "module tb; initial $display(\"VERIBTOT_RESULT: PASS\"); endmodule";
  std::ofstream(case_dir / "meta.json")
      << R"({"name": "adder_pipe_64bit", "top_module": "adder_pipe_64bit"})";

  auto config = work_dir() / "walkthrough.conf";
  std::ofstream(config) << "verifier = mock_pass\neval_mode = llm_judge\n";

  int rc = run_cli({"run", "--case", case_dir.string(), "--paradigm", "VeriBToT",
                    "--backend", "replay", "--replay-file", transcript.string(),
                    "--config", config.string(), "--dump-tree", tree_path.string()});
  EXPECT_EQ(rc, 0);
  auto tree = nlohmann::json::parse(std::ifstream(tree_path));
  EXPECT_EQ(tree["schema"], "veribtot-tree");
  EXPECT_EQ(tree["nodes"].size(), 3u);
}

TEST(CliTest, BenchReplayThenReport) {
  auto records_path = work_dir() / "bench_records.jsonl";
  std::filesystem::remove(records_path);

  int rc = run_cli({"bench",
                    "--suite", (fixture_dir() / "mini_suite").string(),
                    "--paradigm", "IO",
                    "--trials", "1",
                    "--backend", "replay",
                    "--replay-file", (fixture_dir() / "transcripts" / "mini_io").string(),
                    "--config", mock_pass_config().string(),
                    "--out", records_path.string()});
  EXPECT_EQ(rc, 0);
  auto records = load_records(records_path);
  ASSERT_EQ(records.size(), 3u);
  for (const auto& r : records) {
    EXPECT_TRUE(r.functional_ok);
    EXPECT_EQ(r.llm_calls, 1);
  }

  auto report_path = work_dir() / "report.md";
  std::filesystem::remove(report_path);
  rc = run_cli({"report", "--in", records_path.string(), "--format", "markdown", "--out",
                report_path.string()});
  EXPECT_EQ(rc, 0);
  std::ifstream in(report_path);
  std::ostringstream buf;
  buf << in.rdbuf();
  EXPECT_NE(buf.str().find("IO Fun."), std::string::npos);

  // json and csv parse too
  rc = run_cli({"report", "--in", records_path.string(), "--format", "json", "--out",
                (work_dir() / "report.json").string()});
  EXPECT_EQ(rc, 0);
  auto j = nlohmann::json::parse(std::ifstream(work_dir() / "report.json"));
  EXPECT_EQ(j["cases"].size(), 3u);
}

TEST(CliTest, ReportRejectsMissingInput) {
  EXPECT_NE(run_cli({"report", "--in", "/definitely/missing.jsonl"}), 0);
}

TEST(CliTest, HardFromFiltersToCasesWhereIoNeverPassed) {
  // prior records: and2 never passed under IO, mux2 and counter4 did
  auto prior_path = work_dir() / "prior_records.jsonl";
  std::vector<TrialRecord> prior;
  for (const auto& [name, passed] :
       std::vector<std::pair<std::string, bool>>{{"and2", false}, {"mux2", true},
                                                 {"counter4", true}}) {
    TrialRecord r;
    r.case_name = name;
    r.paradigm = Paradigm::IO;
    r.trial_index = 0;
    r.syntax_ok = true;
    r.functional_ok = passed;
    r.terminated_by = TerminatedBy::Success;
    prior.push_back(r);
  }
  save_records(prior_path, prior);

  auto records_path = work_dir() / "hard_records.jsonl";
  std::filesystem::remove(records_path);
  int rc = run_cli({"bench",
                    "--suite", (fixture_dir() / "mini_suite").string(),
                    "--paradigm", "IO",
                    "--trials", "1",
                    "--backend", "replay",
                    "--replay-file", (fixture_dir() / "transcripts" / "mini_io").string(),
                    "--config", mock_pass_config().string(),
                    "--hard-from", prior_path.string(),
                    "--out", records_path.string()});
  EXPECT_EQ(rc, 0);
  auto records = load_records(records_path);
  ASSERT_EQ(records.size(), 1u);
  EXPECT_EQ(records[0].case_name, "and2");
}

TEST(ConfigTest, LoadAndOverride) {
  auto path = work_dir() / "full.conf";
  std::ofstream(path) << "paradigm = VeriBToT-\n"
                      << "max_depth = 4\n"
                      << "temperature = 0.7  # trailing comment\n"
                      << "eval_mode = simulator\n"
                      << "model = test-model\n"
                      << "compile_cmd = iverilog -g2012 -o {out} {inputs}\n"
                      << "trials = 5\n";
  AppConfig config = load_config_file(path);
  EXPECT_EQ(config.run.paradigm, Paradigm::VeriBToTMinus);
  EXPECT_EQ(config.run.max_depth, 4);
  EXPECT_DOUBLE_EQ(config.run.temperature, 0.7);
  EXPECT_EQ(config.run.eval_mode, EvalMode::Simulator);
  EXPECT_EQ(config.http.model, "test-model");
  EXPECT_EQ(config.trials, 5);

  EXPECT_THROW(apply_config_entry(config, "no_such_key", "1"), ValidationError);
  EXPECT_THROW(apply_config_entry(config, "max_depth", "not_a_number"), ValidationError);
}

}  // namespace
