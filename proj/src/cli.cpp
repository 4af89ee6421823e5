#include "veribtot/cli.hpp"

#include <fstream>
#include <iostream>
#include <memory>
#include <set>

#include <CLI11.hpp>

#include "veribtot/bench.hpp"
#include "veribtot/config.hpp"
#include "veribtot/errors.hpp"

namespace veribtot {

namespace {

struct CommonFlags {
  std::string config_file;
  std::string backend = "http";  // http | replay | record
  std::string replay_path;       // file for run, directory for bench
  std::string record_path;       // file for run, directory for bench
  std::string prompts_dir;
  long long seed = -1;  // < 0: unset
  bool keep_artifacts = false;
  bool strict_replay = false;
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_file, "key = value configuration file");
  cmd->add_option("--backend", flags.backend, "LLM backend: http, replay or record")
      ->check(CLI::IsMember({"http", "replay", "record"}));
  cmd->add_option("--replay-file", flags.replay_path,
                  "transcript file (run) or directory (bench) for the replay backend");
  cmd->add_option("--record", flags.record_path,
                  "transcript file (run) or directory (bench) written by the record backend");
  cmd->add_option("--prompts", flags.prompts_dir, "directory of prompt template overrides");
  cmd->add_flag("--strict-replay", flags.strict_replay,
                "verify request digests against the transcript");
  cmd->add_option("--seed", flags.seed, "sampling seed passed to the provider");
  cmd->add_flag("--keep-artifacts", flags.keep_artifacts, "keep simulation workdirs");
}

AppConfig make_config(const CommonFlags& flags) {
  AppConfig config;
  if (!flags.config_file.empty()) {
    config = load_config_file(flags.config_file);
  }
  if (flags.seed >= 0) {
    config.http.seed = static_cast<std::uint64_t>(flags.seed);
  }
  if (flags.keep_artifacts) {
    config.toolchain.keep_artifacts = true;
  }
  if (!flags.prompts_dir.empty()) {
    config.prompts_dir = flags.prompts_dir;
  }
  return config;
}

PromptLibrary make_prompts(const AppConfig& config) {
  if (config.prompts_dir.empty()) {
    return PromptLibrary::builtin();
  }
  return PromptLibrary::from_dir(config.prompts_dir);
}

std::shared_ptr<Verifier> make_verifier(const AppConfig& config,
                                        std::chrono::milliseconds timeout) {
  if (config.verifier_kind == "mock_pass") {
    return std::make_shared<MockVerifier>(/*default_pass=*/true);
  }
  if (config.verifier_kind == "mock_fail") {
    return std::make_shared<MockVerifier>(/*default_pass=*/false);
  }
  ToolchainConfig tc = config.toolchain;
  tc.timeout = timeout;
  return std::make_shared<ToolchainVerifier>(tc);
}

std::shared_ptr<LlmClient> make_run_backend(const CommonFlags& flags, const AppConfig& config) {
  if (flags.backend == "replay") {
    if (flags.replay_path.empty()) {
      throw ValidationError("replay backend needs --replay-file");
    }
    return ReplayLlmClient::from_file(flags.replay_path, flags.strict_replay);
  }
  auto http = std::make_shared<HttpLlmClient>(config.http);
  if (flags.backend == "record") {
    if (flags.record_path.empty()) {
      throw ValidationError("record backend needs --record");
    }
    return std::make_shared<RecordingLlmClient>(http, flags.record_path);
  }
  return http;
}

// ---------------------------------------------------------------------------
// run

int cmd_run(const CommonFlags& flags, const std::string& case_dir, const std::string& paradigm,
            const std::string& out_path, const std::string& dump_tree_path) {
  AppConfig config = make_config(flags);
  if (!paradigm.empty()) {
    config.run.paradigm = paradigm_from_string(paradigm);
  }

  BenchCase bench_case = load_case(case_dir);
  PromptLibrary prompts = make_prompts(config);
  auto verifier = make_verifier(config, bench_case.timeout);
  auto backend = make_run_backend(flags, config);

  RunResult result =
      run_task(bench_case.to_task(), backend, *verifier, config.run, prompts);

  auto totals = result.ledger.totals();
  std::cout << "case: " << bench_case.name << "\n"
            << "paradigm: " << to_string(config.run.paradigm) << "\n"
            << "terminated_by: " << to_string(result.terminated_by) << "\n"
            << "syntax_ok: " << (result.syntax_ok ? "true" : "false") << "\n"
            << "functional_ok: " << (result.functional_ok ? "true" : "false") << "\n"
            << "llm_calls: " << result.llm_calls << "\n"
            << "tokens: prompt=" << totals.prompt_tokens
            << " completion=" << totals.completion_tokens << "\n";

  if (!out_path.empty()) {
    std::ofstream(out_path) << result.to_json().dump(2) << "\n";
  }
  if (!dump_tree_path.empty() && result.tree_snapshot) {
    std::ofstream(dump_tree_path) << result.tree_snapshot->dump(2) << "\n";
  }
  return result.functional_ok ? 0 : 1;
}

// ---------------------------------------------------------------------------
// bench

std::vector<Paradigm> parse_paradigms(const std::vector<std::string>& names) {
  std::vector<Paradigm> out;
  for (const auto& name : names) {
    out.push_back(paradigm_from_string(name));
  }
  return out;
}

// Cases whose prior IO trials never passed functionally; the hard-case rule.
std::set<std::string> hard_cases_from(const std::filesystem::path& records_path) {
  std::map<std::string, int> io_passes;
  std::set<std::string> seen;
  for (const auto& r : load_records(records_path)) {
    if (r.paradigm != Paradigm::IO) {
      continue;
    }
    seen.insert(r.case_name);
    io_passes[r.case_name] += r.functional_ok ? 1 : 0;
  }
  std::set<std::string> hard;
  for (const auto& name : seen) {
    if (io_passes[name] == 0) {
      hard.insert(name);
    }
  }
  return hard;
}

int cmd_bench(const CommonFlags& flags, const std::string& suite_dir,
              const std::vector<std::string>& paradigm_names, int trials_flag,
              int parallelism_flag, const std::string& out_path,
              const std::string& hard_from) {
  AppConfig config = make_config(flags);
  int trials = trials_flag > 0 ? trials_flag : config.trials;
  int parallelism = parallelism_flag > 0 ? parallelism_flag : config.parallelism;

  std::vector<Paradigm> paradigms = paradigm_names.empty()
                                        ? std::vector<Paradigm>{config.run.paradigm}
                                        : parse_paradigms(paradigm_names);

  auto suite = load_suite(suite_dir);
  if (!hard_from.empty()) {
    auto hard = hard_cases_from(hard_from);
    std::vector<BenchCase> filtered;
    for (auto& c : suite) {
      if (hard.count(c.name)) {
        filtered.push_back(std::move(c));
      }
    }
    suite = std::move(filtered);
    if (suite.empty()) {
      std::cerr << "no hard cases matched the suite\n";
      return 1;
    }
  }

  PromptLibrary prompts = make_prompts(config);

  SuiteRunEnv env;
  env.prompts = &prompts;
  env.records_path = out_path;
  env.verifier_factory = [&config](const BenchCase& c) {
    return make_verifier(config, c.timeout);
  };

  if (flags.backend == "replay") {
    if (flags.replay_path.empty()) {
      throw ValidationError("replay backend needs --replay-file <directory>");
    }
    std::filesystem::path dir = flags.replay_path;
    bool strict = flags.strict_replay;
    env.backend_factory = [dir, strict](const BenchCase& c, Paradigm p,
                                        int trial) -> std::shared_ptr<LlmClient> {
      return ReplayLlmClient::from_file(dir / transcript_file_name(c.name, p, trial), strict);
    };
  } else if (flags.backend == "record") {
    if (flags.record_path.empty()) {
      throw ValidationError("record backend needs --record <directory>");
    }
    std::filesystem::path dir = flags.record_path;
    std::filesystem::create_directories(dir);
    HttpConfig http = config.http;
    env.backend_factory = [dir, http](const BenchCase& c, Paradigm p,
                                      int trial) -> std::shared_ptr<LlmClient> {
      auto inner = std::make_shared<HttpLlmClient>(http);
      return std::make_shared<RecordingLlmClient>(inner,
                                                  dir / transcript_file_name(c.name, p, trial));
    };
  } else {
    HttpConfig http = config.http;
    env.backend_factory = [http](const BenchCase&, Paradigm, int) -> std::shared_ptr<LlmClient> {
      return std::make_shared<HttpLlmClient>(http);
    };
  }

  auto records = run_suite(suite, paradigms, trials, config.run, parallelism, env);

  int functional = 0;
  for (const auto& r : records) {
    functional += r.functional_ok ? 1 : 0;
  }
  std::cout << "records: " << records.size() << " (functional passes: " << functional << ")\n"
            << "written: " << out_path << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// report

int cmd_report(const std::string& in_path, const std::string& format_name,
               const std::string& out_path) {
  auto records = load_records(in_path);
  auto table = summarize(records);
  std::string text = emit_report(table, report_format_from_string(format_name));
  if (out_path.empty()) {
    std::cout << text;
  } else {
    std::ofstream(out_path) << text;
    std::cout << "written: " << out_path << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------
// verify

int cmd_verify(const CommonFlags& flags, const std::vector<std::string>& design_files,
               const std::string& testbench_file, int timeout_ms) {
  AppConfig config = make_config(flags);
  std::vector<std::string> designs;
  for (const auto& f : design_files) {
    std::ifstream in(f);
    if (!in) {
      throw ValidationError("cannot open design file: " + f);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    designs.push_back(buf.str());
  }
  std::ifstream tb_in(testbench_file);
  if (!tb_in) {
    throw ValidationError("cannot open testbench file: " + testbench_file);
  }
  std::ostringstream tb_buf;
  tb_buf << tb_in.rdbuf();

  auto verifier = make_verifier(config, std::chrono::milliseconds(timeout_ms));
  SimOutcome outcome = verifier->run_testbench(designs, tb_buf.str());

  if (!outcome.syntax_ok) {
    std::cout << "FAIL (syntax)\n";
    std::cerr << outcome.log;
    return 1;
  }
  if (outcome.functional_pass == true) {
    std::cout << "PASS\n";
    return 0;
  }
  if (outcome.mismatch_count) {
    std::cout << "FAIL mismatches=" << *outcome.mismatch_count << "\n";
  } else {
    std::cout << "FAIL (no result sentinel)\n";
  }
  return 1;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"Backtrack-tree-of-thought RTL generation harness"};
  app.require_subcommand(1);

  CommonFlags run_flags;
  std::string run_case_dir;
  std::string run_paradigm;
  std::string run_out;
  std::string run_dump_tree;
  auto* run_cmd_app = app.add_subcommand("run", "run one case under one paradigm");
  add_common_flags(run_cmd_app, run_flags);
  run_cmd_app->add_option("--case", run_case_dir, "case directory")->required();
  run_cmd_app->add_option("--paradigm", run_paradigm, "reasoning paradigm");
  run_cmd_app->add_option("--out", run_out, "write the run result JSON here");
  run_cmd_app->add_option("--dump-tree", run_dump_tree, "write the tree snapshot JSON here");

  CommonFlags bench_flags;
  std::string bench_suite;
  std::vector<std::string> bench_paradigms;
  int bench_trials = 0;
  int bench_parallelism = 0;
  std::string bench_out = "records.jsonl";
  std::string bench_hard_from;
  auto* bench_cmd_app = app.add_subcommand("bench", "run a benchmark suite");
  add_common_flags(bench_cmd_app, bench_flags);
  bench_cmd_app->add_option("--suite", bench_suite, "suite directory")->required();
  bench_cmd_app->add_option("--paradigm", bench_paradigms, "paradigms to run (repeatable)");
  bench_cmd_app->add_option("--trials", bench_trials, "trials per (case, paradigm)");
  bench_cmd_app->add_option("--parallelism", bench_parallelism, "worker pool size");
  bench_cmd_app->add_option("--out", bench_out, "records JSONL sink (supports resume)");
  bench_cmd_app->add_option("--hard-from", bench_hard_from,
                            "restrict to cases whose IO trials in this records file never "
                            "passed functionally");

  std::string report_in;
  std::string report_format = "markdown";
  std::string report_out;
  auto* report_cmd_app = app.add_subcommand("report", "summarize a records file");
  report_cmd_app->add_option("--in", report_in, "records JSONL file")->required();
  report_cmd_app->add_option("--format", report_format, "json, csv or markdown");
  report_cmd_app->add_option("--out", report_out, "output file (default stdout)");

  CommonFlags verify_flags;
  std::vector<std::string> verify_designs;
  std::string verify_tb;
  int verify_timeout_ms = 10000;
  auto* verify_cmd_app =
      app.add_subcommand("verify", "compile and simulate a design against a testbench");
  add_common_flags(verify_cmd_app, verify_flags);
  verify_cmd_app->add_option("--design", verify_designs, "design source file (repeatable)")
      ->required();
  verify_cmd_app->add_option("--testbench", verify_tb, "testbench source file")->required();
  verify_cmd_app->add_option("--timeout-ms", verify_timeout_ms, "simulation timeout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (run_cmd_app->parsed()) {
      return cmd_run(run_flags, run_case_dir, run_paradigm, run_out, run_dump_tree);
    }
    if (bench_cmd_app->parsed()) {
      return cmd_bench(bench_flags, bench_suite, bench_paradigms, bench_trials,
                       bench_parallelism, bench_out, bench_hard_from);
    }
    if (report_cmd_app->parsed()) {
      return cmd_report(report_in, report_format, report_out);
    }
    if (verify_cmd_app->parsed()) {
      return cmd_verify(verify_flags, verify_designs, verify_tb, verify_timeout_ms);
    }
  } catch (const Error& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 2;
  }
  return 2;
}

}  // namespace veribtot
