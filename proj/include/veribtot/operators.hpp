#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "veribtot/hdl_verify.hpp"
#include "veribtot/llm_gateway.hpp"
#include "veribtot/prompts.hpp"
#include "veribtot/thought_tree.hpp"

namespace veribtot {

// The operator protocol: every LLM-backed operator renders a prompt
// template, sends it through the given client, and parses a strict response
// grammar (structured fields in one fenced ```json block, Verilog in fenced
// ```verilog blocks). A malformed response is re-asked once with a format
// reminder; a second failure raises OperatorParseError. The grammar is
// documented with worked examples in docs/operator-protocol.md.

struct OperatorOptions {
  double temperature = 0.2;
  int max_output_tokens = 4096;
  int max_fanout = 6;
};

enum class Complexity { Simple, Complex };
enum class VerdictSource { Simulator, LlmJudge, Hybrid };
enum class EvalMode { Simulator, LlmJudge, Hybrid };
enum class BacktrackAction { RebranchHere, Ascend };

const char* to_string(Complexity c);
const char* to_string(VerdictSource s);
const char* to_string(BacktrackAction a);

struct BranchPlan {
  std::vector<ChildSeed> children;
  std::string rationale;
};

nlohmann::json to_json(const BranchPlan& plan);
BranchPlan branch_plan_from_json(const nlohmann::json& j);

struct EvaluationVerdict {
  bool passed = false;
  Complexity complexity = Complexity::Simple;
  std::string diagnosis;  // empty when passed
  VerdictSource source = VerdictSource::LlmJudge;
};

struct MaterializedArtifacts {
  std::string design;
  std::string testbench;
};

struct RethinkOutput {
  std::string design;
  std::string testbench;
};

struct BacktrackDecision {
  BacktrackAction action = BacktrackAction::RebranchHere;
  std::string rationale;
};

struct AggregatedDesign {
  std::string source;
  std::vector<std::string> module_order;  // children before parents, top last
  std::string top_module;
};

struct VerifiedChild {
  std::string module_name;
  std::string design;
};

// -- Branch Generator --------------------------------------------------------

/// Plans the decomposition of a failed leaf. The returned plan satisfies the
/// fanout bounds and has unique child names; collisions against the live
/// tree are the caller's check.
BranchPlan plan_branches(LlmClient& llm, const PromptLibrary& prompts, const PathContext& ctx,
                         const ThoughtNode& node, const OperatorOptions& opts);

/// Produces design + testbench for one child seed. The design must declare
/// exactly one module named after the seed (one corrective re-ask, then
/// NameMismatchError).
MaterializedArtifacts materialize_child(LlmClient& llm, const PromptLibrary& prompts,
                                        const PathContext& ctx, const ChildSeed& seed,
                                        const OperatorOptions& opts);

/// Design-only materialization, used by the testbench-free ablation and for
/// nodes whose testbench is supplied externally.
std::string materialize_design_only(LlmClient& llm, const PromptLibrary& prompts,
                                    const PathContext& ctx, const ChildSeed& seed,
                                    const OperatorOptions& opts);

// -- Node Evaluator -----------------------------------------------------------

/// Verifies a node. Simulator mode runs the node's testbench (design plus
/// `support_designs`, e.g. verified submodules) and asks the LLM only for
/// the complexity field; LlmJudge asks the LLM for the whole verdict;
/// Hybrid simulates when the sources compile and falls back to the judge
/// otherwise. `source` records which path produced the verdict.
EvaluationVerdict evaluate_node(LlmClient& llm, const PromptLibrary& prompts, Verifier& verifier,
                                const ThoughtNode& node, EvalMode mode,
                                const std::vector<std::string>& support_designs,
                                const OperatorOptions& opts);

/// Testbench-free reflection on the design alone (the ablation evaluator).
EvaluationVerdict reflect_on_design(LlmClient& llm, const PromptLibrary& prompts,
                                    const ThoughtNode& node, const OperatorOptions& opts);

// -- Node Rethinker -----------------------------------------------------------

/// Redesigns a failed node. With `verified_children` non-empty the new
/// design must instantiate every child by name (one corrective re-ask, then
/// MissingInstantiationError).
RethinkOutput rethink_node(LlmClient& llm, const PromptLibrary& prompts, const PathContext& ctx,
                           const ThoughtNode& node,
                           const std::vector<VerifiedChild>& verified_children,
                           const OperatorOptions& opts);

/// Design-only rethink for the testbench-free ablation.
std::string rethink_design_only(LlmClient& llm, const PromptLibrary& prompts,
                                const PathContext& ctx, const ThoughtNode& node,
                                const std::vector<VerifiedChild>& verified_children,
                                const OperatorOptions& opts);

// -- Backtrack Executor --------------------------------------------------------

BacktrackDecision decide_backtrack(LlmClient& llm, const PromptLibrary& prompts,
                                   const PathContext& ctx, const ThoughtNode& node,
                                   const std::vector<std::string>& failure_history,
                                   const OperatorOptions& opts);

// -- Code Aggregator -----------------------------------------------------------

/// Deterministically assembles all verified designs, children before
/// parents, de-duplicated, top module last. Requires every live node to be
/// EvaluatedPass; offenders are listed in the AggregationError.
AggregatedDesign aggregate_design(const BacktrackTree& tree);

/// Optional LLM cleanup of an aggregated source (off by default in runs).
/// The polished source must keep the same module set.
AggregatedDesign polish_design(LlmClient& llm, const PromptLibrary& prompts,
                               const AggregatedDesign& design, const OperatorOptions& opts);

// -- Response-grammar helpers (exposed for tests and baselines) ----------------

/// Bodies of fenced blocks labelled `label`, in order of appearance.
std::vector<std::string> extract_fenced_blocks(const std::string& text, const std::string& label);

/// The single fenced ```json block of a response, parsed.
std::optional<nlohmann::json> extract_json_block(const std::string& text);

/// Last `max_lines` lines of a log, for failure diagnoses.
std::string log_tail(const std::string& log, std::size_t max_lines = 20);

}  // namespace veribtot
