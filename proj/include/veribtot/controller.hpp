#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "veribtot/hdl_verify.hpp"
#include "veribtot/llm_gateway.hpp"
#include "veribtot/operators.hpp"
#include "veribtot/prompts.hpp"
#include "veribtot/thought_tree.hpp"

namespace veribtot {

enum class Paradigm { IO, CoT, CoTSC, ToT, VeriBToT, VeriBToTMinus };
enum class OracleTbPolicy { FinalOnly, InLoop };
enum class TerminatedBy { Success, BudgetExhausted, OperatorFailure };

const char* to_string(Paradigm p);
Paradigm paradigm_from_string(const std::string& text);
const char* to_string(TerminatedBy t);
const char* to_string(EvalMode m);
EvalMode eval_mode_from_string(const std::string& text);
const char* to_string(OracleTbPolicy p);
OracleTbPolicy oracle_tb_policy_from_string(const std::string& text);

struct RunConfig {
  Paradigm paradigm = Paradigm::VeriBToT;
  int max_depth = 3;
  int rethink_budget = 1;       // per node
  int backtrack_budget = 5;     // global
  int llm_call_budget = 60;
  int max_fanout = 6;
  EvalMode eval_mode = EvalMode::Hybrid;
  OracleTbPolicy oracle_tb_policy = OracleTbPolicy::FinalOnly;
  double temperature = 0.2;
  int max_output_tokens = 4096;
  bool polish_final = false;
  int cotsc_chains = 3;
  int tot_width = 2;
  int tot_depth = 2;

  void validate() const;
  OperatorOptions operator_options() const;
};

struct RunResult {
  std::optional<std::string> final_source;
  bool syntax_ok = false;
  bool functional_ok = false;  // verdict of the finality check against the oracle testbench
  std::optional<nlohmann::json> tree_snapshot;  // VeriBToT family only
  TokenLedger ledger;
  int llm_calls = 0;
  TerminatedBy terminated_by = TerminatedBy::OperatorFailure;

  nlohmann::json to_json() const;
};

struct RunHooks {
  /// Invoked after every observable tree mutation in a VeriBToT-family run.
  std::function<void(const BacktrackTree&)> on_step;
};

/// Runs one design task under the configured reasoning paradigm. The llm is
/// the raw backend; each run wraps it with its own ledger and call budget.
RunResult run_task(const DesignTask& task, std::shared_ptr<LlmClient> llm, Verifier& verifier,
                   const RunConfig& cfg, const PromptLibrary& prompts,
                   const RunHooks& hooks = {});

}  // namespace veribtot
