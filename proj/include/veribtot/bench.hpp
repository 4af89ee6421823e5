#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "veribtot/controller.hpp"

namespace veribtot {

/// One NL2V benchmark case: a natural-language requirement plus the oracle
/// testbench used for the finality check.
struct BenchCase {
  std::string name;
  std::string spec;
  std::string oracle_testbench;
  std::string top_module;
  std::chrono::milliseconds timeout{std::chrono::seconds(10)};

  DesignTask to_task() const;
};

/// Loads a suite directory: per-case subdirectories holding `spec.md`,
/// `testbench.v` and `meta.json`, ordered by `manifest.json` when present
/// and lexicographically otherwise.
std::vector<BenchCase> load_suite(const std::filesystem::path& path);

/// Loads a single case directory (the same layout suites use).
BenchCase load_case(const std::filesystem::path& case_dir);

/// Unbiased pass@k estimator: 1 - C(n-c, k)/C(n, k), overflow-safe.
double pass_at_k(int n, int c, int k);

struct TrialRecord {
  std::string case_name;
  Paradigm paradigm = Paradigm::IO;
  int trial_index = 0;
  bool syntax_ok = false;
  bool functional_ok = false;
  long prompt_tokens = 0;
  long completion_tokens = 0;
  int llm_calls = 0;
  std::chrono::milliseconds wall_time{0};
  TerminatedBy terminated_by = TerminatedBy::OperatorFailure;
  std::string timestamp;  // ISO 8601 UTC
};

nlohmann::json to_json(const TrialRecord& record);
TrialRecord trial_record_from_json(const nlohmann::json& j);

/// Records files are JSON Lines with a schema header on line 0, appended one
/// record per line so interrupted suites can resume.
std::vector<TrialRecord> load_records(const std::filesystem::path& path);
void save_records(const std::filesystem::path& path, const std::vector<TrialRecord>& records);

/// Conventional transcript file name for one (case, paradigm, trial), used
/// by both record and replay modes.
std::string transcript_file_name(const std::string& case_name, Paradigm paradigm, int trial);

struct SuiteRunEnv {
  /// Builds the LLM backend for one (case, paradigm, trial). In replay mode
  /// this maps each key to its own transcript.
  std::function<std::shared_ptr<LlmClient>(const BenchCase&, Paradigm, int)> backend_factory;
  /// Builds the verifier for one case (per-case simulation timeouts).
  std::function<std::shared_ptr<Verifier>(const BenchCase&)> verifier_factory;
  const PromptLibrary* prompts = nullptr;
  /// Optional append-only sink; existing (case, paradigm, trial) keys are
  /// skipped so an interrupted suite resumes where it stopped.
  std::optional<std::filesystem::path> records_path;
  /// Called per finished trial (tree dumps, progress, ...).
  std::function<void(const BenchCase&, Paradigm, int, const RunResult&)> on_result;
};

/// Runs n_trials per (case, paradigm) on a bounded worker pool. Per-trial
/// failures become records; only suite-level problems throw. The returned
/// records are in deterministic (case, paradigm, trial) order regardless of
/// parallelism.
std::vector<TrialRecord> run_suite(const std::vector<BenchCase>& suite,
                                   const std::vector<Paradigm>& paradigms, int n_trials,
                                   const RunConfig& cfg, int parallelism, const SuiteRunEnv& env);

// ---------------------------------------------------------------------------
// Reporting

struct CaseSummary {
  std::string case_name;
  Paradigm paradigm = Paradigm::IO;
  int n_trials = 0;
  int n_syntax_pass = 0;
  int n_functional_pass = 0;  // the #pass@5 column when n_trials == 5
  double pass_at_1 = 0.0;
  double pass_at_5 = 0.0;  // computed at k = min(5, n_trials)
  double mean_tokens_thousands = 0.0;
  double mean_prompt_thousands = 0.0;
  double mean_completion_thousands = 0.0;
};

struct ParadigmSummary {
  Paradigm paradigm = Paradigm::IO;
  int n_cases = 0;
  double mean_pass_at_1 = 0.0;
  double mean_pass_at_5 = 0.0;
  double mean_tokens_thousands = 0.0;
  double mean_prompt_thousands = 0.0;
  double mean_completion_thousands = 0.0;
};

struct SummaryTable {
  std::vector<CaseSummary> per_case;          // case-major, paradigm within
  std::vector<ParadigmSummary> per_paradigm;  // benchmark-level means
  bool mixed_trial_counts = false;
};

/// Pure function of the records.
SummaryTable summarize(const std::vector<TrialRecord>& records);

enum class ReportFormat { Json, Csv, Markdown };

ReportFormat report_format_from_string(const std::string& text);

/// Pure function of the table. Tokens are reported in thousands with two
/// decimals; the markdown layout groups Syn./Fun./Tok. columns per paradigm
/// and adds a prompt/completion split per paradigm.
std::string emit_report(const SummaryTable& table, ReportFormat format);

}  // namespace veribtot
