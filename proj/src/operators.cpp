#include "veribtot/operators.hpp"

#include <algorithm>
#include <functional>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "veribtot/errors.hpp"
#include "veribtot/verilog_scan.hpp"

namespace veribtot {

using nlohmann::json;

const char* to_string(Complexity c) {
  return c == Complexity::Simple ? "Simple" : "Complex";
}

const char* to_string(VerdictSource s) {
  switch (s) {
    case VerdictSource::Simulator: return "Simulator";
    case VerdictSource::LlmJudge: return "LlmJudge";
    case VerdictSource::Hybrid: return "Hybrid";
  }
  return "LlmJudge";
}

const char* to_string(BacktrackAction a) {
  return a == BacktrackAction::RebranchHere ? "rebranch_here" : "ascend";
}

// ---------------------------------------------------------------------------
// Response-grammar helpers

namespace {

std::string trim(const std::string& text) {
  auto begin = text.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) {
    return "";
  }
  auto end = text.find_last_not_of(" \t\r\n");
  return text.substr(begin, end - begin + 1);
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::string line;
  std::istringstream in(text);
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    lines.push_back(line);
  }
  return lines;
}

}  // namespace

std::vector<std::string> extract_fenced_blocks(const std::string& text,
                                               const std::string& label) {
  std::vector<std::string> blocks;
  auto lines = split_lines(text);
  std::size_t i = 0;
  while (i < lines.size()) {
    std::string t = trim(lines[i]);
    if (t.rfind("```", 0) == 0 && trim(t.substr(3)) == label) {
      std::string body;
      ++i;
      bool closed = false;
      while (i < lines.size()) {
        if (trim(lines[i]) == "```") {
          closed = true;
          ++i;
          break;
        }
        body += lines[i];
        body += '\n';
        ++i;
      }
      if (closed) {
        blocks.push_back(body);
      }
    } else {
      ++i;
    }
  }
  return blocks;
}

std::optional<json> extract_json_block(const std::string& text) {
  auto blocks = extract_fenced_blocks(text, "json");
  if (blocks.size() != 1) {
    return std::nullopt;
  }
  try {
    return json::parse(blocks[0]);
  } catch (const json::exception&) {
    return std::nullopt;
  }
}

std::string log_tail(const std::string& log, std::size_t max_lines) {
  auto lines = split_lines(log);
  std::size_t start = lines.size() > max_lines ? lines.size() - max_lines : 0;
  std::string out;
  for (std::size_t i = start; i < lines.size(); ++i) {
    out += lines[i];
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Shared ask/parse machinery

namespace {

ChatRequest make_request(const PromptLibrary& prompts, const std::string& user_text,
                         const std::string& tag, const OperatorOptions& opts) {
  ChatRequest req;
  req.messages.push_back({Role::System, prompts.raw("system")});
  req.messages.push_back({Role::User, user_text});
  req.temperature = opts.temperature;
  req.max_output_tokens = opts.max_output_tokens;
  req.tag = tag;
  return req;
}

// One re-ask with the format reminder, then OperatorParseError.
template <typename T>
T ask_with_format_retry(
    LlmClient& llm, const PromptLibrary& prompts, ChatRequest req,
    const std::function<std::optional<T>(const std::string&, std::string&)>& parse) {
  std::string why;
  ChatResponse first = llm.chat(req);
  if (auto parsed = parse(first.text, why)) {
    return *parsed;
  }
  req.messages.push_back({Role::Assistant, first.text});
  req.messages.push_back({Role::User, prompts.raw("format_reminder")});
  ChatResponse second = llm.chat(req);
  if (auto parsed = parse(second.text, why)) {
    return *parsed;
  }
  throw OperatorParseError(why.empty() ? "response did not match the operator grammar" : why);
}

std::string render_ancestor_chain(const PathContext& ctx) {
  if (ctx.ancestor_chain.empty()) {
    return "(this is the top-level module)";
  }
  std::string out;
  for (std::size_t i = 0; i < ctx.ancestor_chain.size(); ++i) {
    const auto& a = ctx.ancestor_chain[i];
    out += std::to_string(i + 1) + ". module `" + a.module_name + "`\n   requirement: " + a.spec +
           "\n";
    if (a.design) {
      out += "   current design:\n```verilog\n" + *a.design + "```\n";
    }
  }
  return out;
}

std::string render_siblings(const PathContext& ctx) {
  if (ctx.verified_sibling_summaries.empty()) {
    return "(none yet)";
  }
  std::string out;
  for (const auto& s : ctx.verified_sibling_summaries) {
    out += "- `" + s.module_name + "`: " + s.spec + "\n";
  }
  return out;
}

std::string render_children(const std::vector<VerifiedChild>& children) {
  std::string out;
  for (const auto& c : children) {
    out += "- `" + c.module_name + "`:\n```verilog\n" + c.design + "```\n";
  }
  return out;
}

std::string render_failure_history(const std::vector<std::string>& history) {
  if (history.empty()) {
    return "(no recorded diagnoses)";
  }
  std::string out;
  for (std::size_t i = 0; i < history.size(); ++i) {
    out += "attempt " + std::to_string(i + 1) + ": " + history[i] + "\n";
  }
  return out;
}

std::optional<Complexity> parse_complexity_value(const json& j) {
  if (!j.is_string()) {
    return std::nullopt;
  }
  std::string v = j.get<std::string>();
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
  if (v == "simple") {
    return Complexity::Simple;
  }
  if (v == "complex") {
    return Complexity::Complex;
  }
  return std::nullopt;
}

// A design block must declare exactly one module carrying the given name.
bool design_declares(const std::string& design, const std::string& name) {
  auto names = module_names(design);
  return names.size() == 1 && names[0] == name;
}

struct TwoBlocks {
  std::string design;
  std::string testbench;
};

std::optional<TwoBlocks> parse_two_verilog(const std::string& text, std::string& why) {
  auto blocks = extract_fenced_blocks(text, "verilog");
  if (blocks.size() != 2) {
    why = "expected exactly two ```verilog blocks, found " + std::to_string(blocks.size());
    return std::nullopt;
  }
  if (trim(blocks[0]).empty() || trim(blocks[1]).empty()) {
    why = "a ```verilog block was empty";
    return std::nullopt;
  }
  return TwoBlocks{blocks[0], blocks[1]};
}

std::optional<std::string> parse_one_verilog(const std::string& text, std::string& why) {
  auto blocks = extract_fenced_blocks(text, "verilog");
  if (blocks.size() != 1) {
    why = "expected exactly one ```verilog block, found " + std::to_string(blocks.size());
    return std::nullopt;
  }
  if (trim(blocks[0]).empty()) {
    why = "the ```verilog block was empty";
    return std::nullopt;
  }
  return blocks[0];
}

}  // namespace

// ---------------------------------------------------------------------------
// Branch Generator

json to_json(const BranchPlan& plan) {
  json children = json::array();
  for (const auto& c : plan.children) {
    children.push_back({{"module_name", c.module_name}, {"spec", c.spec}});
  }
  return json{{"rationale", plan.rationale}, {"children", std::move(children)}};
}

BranchPlan branch_plan_from_json(const json& j) {
  BranchPlan plan;
  plan.rationale = j.value("rationale", "");
  if (!j.contains("children") || !j["children"].is_array()) {
    throw OperatorParseError("branch plan lacks a children array");
  }
  for (const auto& c : j["children"]) {
    ChildSeed seed;
    seed.module_name = c.value("module_name", "");
    seed.spec = c.value("spec", "");
    plan.children.push_back(std::move(seed));
  }
  return plan;
}

BranchPlan plan_branches(LlmClient& llm, const PromptLibrary& prompts, const PathContext& ctx,
                         const ThoughtNode& node, const OperatorOptions& opts) {
  if (node.status != NodeStatus::EvaluatedFail || !node.children.empty()) {
    throw ValidationError("plan_branches needs a failed leaf node");
  }

  std::map<std::string, std::string> values = {
      {"module_name", node.module_name},
      {"task_description", ctx.task_description},
      {"ancestor_chain", render_ancestor_chain(ctx)},
      {"spec", node.spec},
      {"design", node.design ? "```verilog\n" + *node.design + "```" : "(none)"},
      {"diagnosis", node.diagnosis.value_or("(none recorded)")},
      {"max_fanout", std::to_string(opts.max_fanout)},
  };
  ChatRequest req = make_request(prompts, prompts.render("branch_plan", values), "B:plan", opts);

  auto parse = [](const std::string& text, std::string& why) -> std::optional<BranchPlan> {
    auto j = extract_json_block(text);
    if (!j) {
      why = "no single ```json block";
      return std::nullopt;
    }
    BranchPlan plan;
    try {
      plan = branch_plan_from_json(*j);
    } catch (const Error& ex) {
      why = ex.what();
      return std::nullopt;
    }
    std::set<std::string> names;
    for (const auto& c : plan.children) {
      if (!is_verilog_identifier(c.module_name)) {
        why = "child name is not an identifier: '" + c.module_name + "'";
        return std::nullopt;
      }
      if (c.spec.empty()) {
        why = "child '" + c.module_name + "' has an empty spec";
        return std::nullopt;
      }
      if (!names.insert(c.module_name).second) {
        why = "duplicate child name '" + c.module_name + "'";
        return std::nullopt;
      }
    }
    return plan;
  };

  BranchPlan plan = ask_with_format_retry<BranchPlan>(llm, prompts, std::move(req), parse);
  if (plan.children.size() < 2 ||
      plan.children.size() > static_cast<std::size_t>(opts.max_fanout)) {
    throw FanoutError("branch plan has " + std::to_string(plan.children.size()) +
                      " children, allowed range is [2, " + std::to_string(opts.max_fanout) + "]");
  }
  return plan;
}

// ---------------------------------------------------------------------------
// Materialization

namespace {

// Grammar retry first; then one corrective re-ask if the declared module
// name is wrong. The re-ask conversation carries the offending reply.
template <typename T>
T materialize_with_name_check(LlmClient& llm, const PromptLibrary& prompts, ChatRequest req,
                              const std::string& expected_name,
                              const std::function<std::optional<T>(const std::string&,
                                                                   std::string&)>& parse,
                              const std::function<const std::string&(const T&)>& design_of) {
  std::string raw;
  auto recording_parse = [&](const std::string& text, std::string& why) {
    auto parsed = parse(text, why);
    if (parsed) {
      raw = text;
    }
    return parsed;
  };

  T first = ask_with_format_retry<T>(llm, prompts, req, recording_parse);
  if (design_declares(design_of(first), expected_name)) {
    return first;
  }
  req.messages.push_back({Role::Assistant, raw});
  req.messages.push_back(
      {Role::User, prompts.render("name_mismatch_fix", {{"module_name", expected_name}})});
  T second = ask_with_format_retry<T>(llm, prompts, std::move(req), recording_parse);
  if (design_declares(design_of(second), expected_name)) {
    return second;
  }
  throw NameMismatchError("design does not declare exactly one module named '" + expected_name +
                          "'");
}

}  // namespace

MaterializedArtifacts materialize_child(LlmClient& llm, const PromptLibrary& prompts,
                                        const PathContext& ctx, const ChildSeed& seed,
                                        const OperatorOptions& opts) {
  if (!is_verilog_identifier(seed.module_name) || seed.spec.empty()) {
    throw ValidationError("materialize_child needs a valid seed");
  }
  std::map<std::string, std::string> values = {
      {"module_name", seed.module_name},
      {"task_description", ctx.task_description},
      {"ancestor_chain", render_ancestor_chain(ctx)},
      {"sibling_summaries", render_siblings(ctx)},
      {"spec", seed.spec},
  };
  ChatRequest req =
      make_request(prompts, prompts.render("materialize_child", values), "B:materialize", opts);

  auto two = materialize_with_name_check<TwoBlocks>(
      llm, prompts, std::move(req), seed.module_name, parse_two_verilog,
      [](const TwoBlocks& t) -> const std::string& { return t.design; });
  return MaterializedArtifacts{two.design, two.testbench};
}

std::string materialize_design_only(LlmClient& llm, const PromptLibrary& prompts,
                                    const PathContext& ctx, const ChildSeed& seed,
                                    const OperatorOptions& opts) {
  if (!is_verilog_identifier(seed.module_name) || seed.spec.empty()) {
    throw ValidationError("materialize_design_only needs a valid seed");
  }
  std::map<std::string, std::string> values = {
      {"module_name", seed.module_name},
      {"task_description", ctx.task_description},
      {"ancestor_chain", render_ancestor_chain(ctx)},
      {"sibling_summaries", render_siblings(ctx)},
      {"spec", seed.spec},
  };
  ChatRequest req = make_request(prompts, prompts.render("materialize_design_only", values),
                                 "B:materialize", opts);
  return materialize_with_name_check<std::string>(
      llm, prompts, std::move(req), seed.module_name, parse_one_verilog,
      [](const std::string& d) -> const std::string& { return d; });
}

// ---------------------------------------------------------------------------
// Node Evaluator

namespace {

std::optional<EvaluationVerdict> parse_verdict(const std::string& text, std::string& why) {
  auto j = extract_json_block(text);
  if (!j) {
    why = "no single ```json block";
    return std::nullopt;
  }
  if (!j->contains("passed") || !(*j)["passed"].is_boolean()) {
    why = "verdict lacks a boolean 'passed' field";
    return std::nullopt;
  }
  EvaluationVerdict v;
  v.passed = (*j)["passed"].get<bool>();
  auto complexity = parse_complexity_value(j->value("complexity", json()));
  if (!complexity) {
    why = "verdict lacks a 'complexity' of Simple or Complex";
    return std::nullopt;
  }
  v.complexity = *complexity;
  v.diagnosis = j->value("diagnosis", "");
  if (!v.passed && trim(v.diagnosis).empty()) {
    why = "a failing verdict needs a non-empty diagnosis";
    return std::nullopt;
  }
  if (v.passed) {
    v.diagnosis.clear();
  }
  return v;
}

Complexity query_complexity(LlmClient& llm, const PromptLibrary& prompts, const ThoughtNode& node,
                            const OperatorOptions& opts) {
  std::map<std::string, std::string> values = {
      {"module_name", node.module_name},
      {"spec", node.spec},
      {"design", node.design ? "```verilog\n" + *node.design + "```" : "(none)"},
  };
  ChatRequest req =
      make_request(prompts, prompts.render("complexity_query", values), "E:complexity", opts);
  auto parse = [](const std::string& text, std::string& why) -> std::optional<Complexity> {
    auto j = extract_json_block(text);
    if (!j) {
      why = "no single ```json block";
      return std::nullopt;
    }
    auto c = parse_complexity_value(j->value("complexity", json()));
    if (!c) {
      why = "expected {\"complexity\": \"Simple\"|\"Complex\"}";
    }
    return c;
  };
  return ask_with_format_retry<Complexity>(llm, prompts, std::move(req), parse);
}

EvaluationVerdict judge_with_llm(LlmClient& llm, const PromptLibrary& prompts,
                                 const ThoughtNode& node, const OperatorOptions& opts) {
  std::map<std::string, std::string> values = {
      {"module_name", node.module_name},
      {"spec", node.spec},
      {"design", node.design.value_or("")},
      {"testbench", node.testbench.value_or("")},
  };
  ChatRequest req = make_request(prompts, prompts.render("judge_design", values), "E:judge", opts);
  EvaluationVerdict v =
      ask_with_format_retry<EvaluationVerdict>(llm, prompts, std::move(req), parse_verdict);
  v.source = VerdictSource::LlmJudge;
  return v;
}

EvaluationVerdict verdict_from_outcome(const SimOutcome& outcome) {
  EvaluationVerdict v;
  v.source = VerdictSource::Simulator;
  v.passed = outcome.syntax_ok && outcome.functional_pass == true;
  if (v.passed) {
    return v;
  }
  std::string tail = log_tail(outcome.log);
  if (!outcome.syntax_ok) {
    v.diagnosis = "compilation failed:\n" + tail;
  } else if (!outcome.functional_pass.has_value()) {
    v.diagnosis = "simulation produced no result sentinel; treating as failure.\n" + tail;
  } else if (outcome.mismatch_count && *outcome.mismatch_count > 0) {
    v.diagnosis = "testbench reported " + std::to_string(*outcome.mismatch_count) +
                  " mismatches:\n" + tail;
  } else {
    v.diagnosis = "testbench reported failure:\n" + tail;
  }
  return v;
}

}  // namespace

EvaluationVerdict evaluate_node(LlmClient& llm, const PromptLibrary& prompts, Verifier& verifier,
                                const ThoughtNode& node, EvalMode mode,
                                const std::vector<std::string>& support_designs,
                                const OperatorOptions& opts) {
  if (!node.design || !node.testbench) {
    throw ValidationError("evaluate_node needs both design and testbench on the node");
  }

  auto simulate = [&]() {
    std::vector<std::string> sources{*node.design};
    sources.insert(sources.end(), support_designs.begin(), support_designs.end());
    return verifier.run_testbench(sources, *node.testbench);
  };

  switch (mode) {
    case EvalMode::Simulator: {
      SimOutcome outcome = simulate();
      EvaluationVerdict v = verdict_from_outcome(outcome);
      v.complexity = query_complexity(llm, prompts, node, opts);
      return v;
    }
    case EvalMode::LlmJudge:
      return judge_with_llm(llm, prompts, node, opts);
    case EvalMode::Hybrid: {
      std::optional<SimOutcome> outcome;
      try {
        outcome = simulate();
      } catch (const ToolchainUnavailableError&) {
        outcome.reset();
      }
      if (!outcome || !outcome->syntax_ok) {
        return judge_with_llm(llm, prompts, node, opts);
      }
      EvaluationVerdict v = verdict_from_outcome(*outcome);
      v.complexity = query_complexity(llm, prompts, node, opts);
      return v;
    }
  }
  throw ValidationError("unknown evaluation mode");
}

EvaluationVerdict reflect_on_design(LlmClient& llm, const PromptLibrary& prompts,
                                    const ThoughtNode& node, const OperatorOptions& opts) {
  if (!node.design) {
    throw ValidationError("reflect_on_design needs a design on the node");
  }
  std::map<std::string, std::string> values = {
      {"module_name", node.module_name},
      {"spec", node.spec},
      {"design", *node.design},
  };
  ChatRequest req =
      make_request(prompts, prompts.render("reflect_design", values), "E:judge", opts);
  EvaluationVerdict v =
      ask_with_format_retry<EvaluationVerdict>(llm, prompts, std::move(req), parse_verdict);
  v.source = VerdictSource::LlmJudge;
  return v;
}

// ---------------------------------------------------------------------------
// Node Rethinker

namespace {

std::vector<std::string> missing_instantiations(const std::string& design,
                                                const std::vector<VerifiedChild>& children) {
  std::vector<std::string> missing;
  for (const auto& c : children) {
    if (!instantiates(design, c.module_name)) {
      missing.push_back(c.module_name);
    }
  }
  return missing;
}

template <typename T>
T rethink_with_checks(LlmClient& llm, const PromptLibrary& prompts, ChatRequest req,
                      const ThoughtNode& node, const std::vector<VerifiedChild>& children,
                      const std::function<std::optional<T>(const std::string&, std::string&)>&
                          parse,
                      const std::function<const std::string&(const T&)>& design_of) {
  std::string raw;
  auto recording_parse = [&](const std::string& text, std::string& why) {
    auto parsed = parse(text, why);
    if (parsed) {
      raw = text;
    }
    return parsed;
  };

  T result = materialize_with_name_check<T>(llm, prompts, req, node.module_name, recording_parse,
                                            design_of);
  auto missing = missing_instantiations(design_of(result), children);
  if (missing.empty()) {
    return result;
  }

  std::string joined;
  for (const auto& name : missing) {
    joined += (joined.empty() ? "`" : ", `") + name + "`";
  }
  req.messages.push_back({Role::Assistant, raw});
  req.messages.push_back({Role::User, prompts.render("missing_instantiation_fix",
                                                     {{"missing", joined}})});
  T second = ask_with_format_retry<T>(llm, prompts, std::move(req), recording_parse);
  if (!design_declares(design_of(second), node.module_name)) {
    throw NameMismatchError("rethought design does not declare module '" + node.module_name +
                            "'");
  }
  missing = missing_instantiations(design_of(second), children);
  if (!missing.empty()) {
    throw MissingInstantiationError("rethought design never instantiates: " + missing[0]);
  }
  return second;
}

std::map<std::string, std::string> rethink_values(const PathContext& ctx, const ThoughtNode& node,
                                                  const std::vector<VerifiedChild>& children) {
  std::map<std::string, std::string> values = {
      {"module_name", node.module_name},
      {"task_description", ctx.task_description},
      {"ancestor_chain", render_ancestor_chain(ctx)},
      {"spec", node.spec},
      {"design", node.design.value_or("(none)")},
      {"diagnosis", node.diagnosis.value_or("(none recorded)")},
  };
  if (!children.empty()) {
    values["children"] = render_children(children);
  }
  return values;
}

void check_rethink_pre(const ThoughtNode& node, const std::vector<VerifiedChild>& children) {
  if (node.status != NodeStatus::EvaluatedFail) {
    throw ValidationError("rethink needs a node in EvaluatedFail, got " +
                          std::string(to_string(node.status)));
  }
  if (!node.children.empty() && children.empty()) {
    throw ValidationError("rethinking a non-leaf needs its verified children");
  }
}

}  // namespace

RethinkOutput rethink_node(LlmClient& llm, const PromptLibrary& prompts, const PathContext& ctx,
                           const ThoughtNode& node,
                           const std::vector<VerifiedChild>& verified_children,
                           const OperatorOptions& opts) {
  check_rethink_pre(node, verified_children);
  const char* tmpl = verified_children.empty() ? "rethink_leaf" : "rethink_integrate";
  ChatRequest req = make_request(
      prompts, prompts.render(tmpl, rethink_values(ctx, node, verified_children)), "R", opts);

  TwoBlocks two = rethink_with_checks<TwoBlocks>(
      llm, prompts, std::move(req), node, verified_children, parse_two_verilog,
      [](const TwoBlocks& t) -> const std::string& { return t.design; });
  return RethinkOutput{two.design, two.testbench};
}

std::string rethink_design_only(LlmClient& llm, const PromptLibrary& prompts,
                                const PathContext& ctx, const ThoughtNode& node,
                                const std::vector<VerifiedChild>& verified_children,
                                const OperatorOptions& opts) {
  check_rethink_pre(node, verified_children);
  const char* tmpl =
      verified_children.empty() ? "rethink_leaf_design_only" : "rethink_integrate_design_only";
  ChatRequest req = make_request(
      prompts, prompts.render(tmpl, rethink_values(ctx, node, verified_children)), "R", opts);

  return rethink_with_checks<std::string>(
      llm, prompts, std::move(req), node, verified_children, parse_one_verilog,
      [](const std::string& d) -> const std::string& { return d; });
}

// ---------------------------------------------------------------------------
// Backtrack Executor

BacktrackDecision decide_backtrack(LlmClient& llm, const PromptLibrary& prompts,
                                   const PathContext& ctx, const ThoughtNode& node,
                                   const std::vector<std::string>& failure_history,
                                   const OperatorOptions& opts) {
  if (node.status != NodeStatus::EvaluatedFail) {
    throw ValidationError("decide_backtrack needs a node in EvaluatedFail");
  }
  std::map<std::string, std::string> values = {
      {"module_name", node.module_name},
      {"task_description", ctx.task_description},
      {"ancestor_chain", render_ancestor_chain(ctx)},
      {"spec", node.spec},
      {"failure_history", render_failure_history(failure_history)},
  };
  ChatRequest req =
      make_request(prompts, prompts.render("backtrack_decision", values), "K", opts);

  auto parse = [](const std::string& text, std::string& why) -> std::optional<BacktrackDecision> {
    auto j = extract_json_block(text);
    if (!j) {
      why = "no single ```json block";
      return std::nullopt;
    }
    std::string action = j->value("action", "");
    BacktrackDecision d;
    if (action == "rebranch_here") {
      d.action = BacktrackAction::RebranchHere;
    } else if (action == "ascend") {
      d.action = BacktrackAction::Ascend;
    } else {
      why = "action must be 'rebranch_here' or 'ascend', got '" + action + "'";
      return std::nullopt;
    }
    d.rationale = j->value("rationale", "");
    return d;
  };
  return ask_with_format_retry<BacktrackDecision>(llm, prompts, std::move(req), parse);
}

// ---------------------------------------------------------------------------
// Code Aggregator

AggregatedDesign aggregate_design(const BacktrackTree& tree) {
  std::vector<NodeId> offenders;
  for (NodeId id : tree.preorder_ids()) {
    if (tree.node(id).status != NodeStatus::EvaluatedPass) {
      offenders.push_back(id);
    }
  }
  if (!offenders.empty()) {
    std::string names;
    for (NodeId id : offenders) {
      names += (names.empty() ? "" : ", ") + tree.node(id).module_name;
    }
    throw AggregationError("cannot aggregate, unverified nodes: " + names);
  }

  AggregatedDesign out;
  out.top_module = tree.node(tree.root()).module_name;

  std::set<std::string> emitted;
  std::function<void(NodeId)> emit = [&](NodeId id) {
    const auto& n = tree.node(id);
    for (NodeId c : n.children) {
      emit(c);
    }
    if (!emitted.insert(n.module_name).second) {
      return;
    }
    std::string design = n.design.value_or("");
    while (!design.empty() && (design.back() == '\n' || design.back() == ' ')) {
      design.pop_back();
    }
    if (!out.source.empty()) {
      out.source += "\n\n";
    }
    out.source += design;
    out.source += "\n";
    out.module_order.push_back(n.module_name);
  };
  emit(tree.root());
  return out;
}

AggregatedDesign polish_design(LlmClient& llm, const PromptLibrary& prompts,
                               const AggregatedDesign& design, const OperatorOptions& opts) {
  ChatRequest req = make_request(
      prompts, prompts.render("polish", {{"source", design.source}}), "A:polish", opts);

  std::set<std::string> expected(design.module_order.begin(), design.module_order.end());
  auto parse = [&expected](const std::string& text,
                           std::string& why) -> std::optional<std::string> {
    auto block = parse_one_verilog(text, why);
    if (!block) {
      return std::nullopt;
    }
    auto names = module_names(*block);
    std::set<std::string> got(names.begin(), names.end());
    if (got != expected || names.size() != expected.size()) {
      why = "polished source changed the module set";
      return std::nullopt;
    }
    return block;
  };

  AggregatedDesign out = design;
  out.source = ask_with_format_retry<std::string>(llm, prompts, std::move(req), parse);
  return out;
}

}  // namespace veribtot
