#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "controller_internal.hpp"
#include "veribtot/errors.hpp"
#include "veribtot/operators.hpp"

// The comparison paradigms (IO, CoT, CoT-SC, ToT) in their minimal canonical
// forms. Like every strategy, the produced code is finality-checked against
// the task's oracle testbench; no LLM verdict ever sets functional_ok.

namespace veribtot::controller_detail {

namespace {

ChatRequest baseline_request(const PromptLibrary& prompts, const std::string& template_name,
                             const std::map<std::string, std::string>& values,
                             const std::string& tag, const RunConfig& cfg) {
  ChatRequest req;
  req.messages.push_back({Role::System, prompts.raw("system")});
  req.messages.push_back({Role::User, prompts.render(template_name, values)});
  req.temperature = cfg.temperature;
  req.max_output_tokens = cfg.max_output_tokens;
  req.tag = tag;
  return req;
}

// Last fenced verilog block, falling back to the raw text so an unfenced
// reply still reaches the compiler (and fails there if it is not Verilog).
std::string extract_code(const std::string& text) {
  auto blocks = extract_fenced_blocks(text, "verilog");
  if (!blocks.empty()) {
    return blocks.back();
  }
  return text;
}

// One format-reminder retry, mirroring the operator grammar.
template <typename T>
T ask_json(LlmClient& llm, const PromptLibrary& prompts, ChatRequest req,
             const std::function<std::optional<T>(const std::string&, std::string&)>& parse) {
  std::string why;
  ChatResponse first = llm.chat(req);
  if (auto v = parse(first.text, why)) {
    return *v;
  }
  req.messages.push_back({Role::Assistant, first.text});
  req.messages.push_back({Role::User, prompts.raw("format_reminder")});
  ChatResponse second = llm.chat(req);
  if (auto v = parse(second.text, why)) {
    return *v;
  }
  throw OperatorParseError(why);
}

std::string run_io(const DesignTask& task, LlmClient& llm, const PromptLibrary& prompts,
                   const RunConfig& cfg) {
  ChatRequest req = baseline_request(prompts, "io_baseline",
                                     {{"task_description", task.description},
                                      {"top_module", task.top_module_name}},
                                     "IO", cfg);
  return extract_code(llm.chat(req).text);
}

std::string run_cot(const DesignTask& task, LlmClient& llm, const PromptLibrary& prompts,
                    const RunConfig& cfg, const std::string& tag) {
  ChatRequest req = baseline_request(prompts, "cot_baseline",
                                     {{"task_description", task.description},
                                      {"top_module", task.top_module_name}},
                                     tag, cfg);
  return extract_code(llm.chat(req).text);
}

std::string run_cotsc(const DesignTask& task, LlmClient& llm, const PromptLibrary& prompts,
                      const RunConfig& cfg) {
  std::vector<std::string> candidates;
  candidates.reserve(cfg.cotsc_chains);
  for (int i = 0; i < cfg.cotsc_chains; ++i) {
    candidates.push_back(run_cot(task, llm, prompts, cfg, "CoT-SC"));
  }
  if (candidates.size() == 1) {
    return candidates[0];
  }

  std::string listing;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    listing += "Candidate " + std::to_string(i + 1) + ":\n```verilog\n" + candidates[i] +
               "```\n\n";
  }
  ChatRequest req = baseline_request(prompts, "cotsc_vote",
                                     {{"task_description", task.description},
                                      {"candidates", listing}},
                                     "CoT-SC:vote", cfg);
  auto parse = [&candidates](const std::string& text,
                             std::string& why) -> std::optional<std::size_t> {
    auto j = extract_json_block(text);
    if (!j || !j->contains("choice") || !(*j)["choice"].is_number_integer()) {
      why = "expected {\"choice\": <candidate number>}";
      return std::nullopt;
    }
    long choice = (*j)["choice"].get<long>();
    if (choice < 1 || choice > static_cast<long>(candidates.size())) {
      why = "choice out of range 1.." + std::to_string(candidates.size());
      return std::nullopt;
    }
    return static_cast<std::size_t>(choice - 1);
  };
  return candidates[ask_json<std::size_t>(llm, prompts, std::move(req), parse)];
}

long score_candidate(LlmClient& llm, const PromptLibrary& prompts, const DesignTask& task,
                     const std::string& code, const RunConfig& cfg) {
  ChatRequest req = baseline_request(
      prompts, "tot_score", {{"task_description", task.description}, {"design", code}},
      "ToT:score", cfg);
  auto parse = [](const std::string& text, std::string& why) -> std::optional<long> {
    auto j = extract_json_block(text);
    if (!j || !j->contains("score") || !(*j)["score"].is_number()) {
      why = "expected {\"score\": <0-10>}";
      return std::nullopt;
    }
    long score = (*j)["score"].get<long>();
    if (score < 0 || score > 10) {
      why = "score out of range 0-10";
      return std::nullopt;
    }
    return score;
  };
  return ask_json<long>(llm, prompts, std::move(req), parse);
}

// Full fixed-shape expansion: width^1 + ... + width^depth states, each
// scored; the best final-level state wins (earliest on ties).
std::string run_tot(const DesignTask& task, LlmClient& llm, const PromptLibrary& prompts,
                    const RunConfig& cfg) {
  struct Candidate {
    std::string code;
    long score = 0;
  };

  std::vector<Candidate> level;
  level.push_back({"", 0});  // pseudo-root: nothing designed yet

  for (int step = 1; step <= cfg.tot_depth; ++step) {
    std::vector<Candidate> next;
    next.reserve(level.size() * static_cast<std::size_t>(cfg.tot_width));
    for (const auto& parent : level) {
      for (int w = 0; w < cfg.tot_width; ++w) {
        ChatRequest req = baseline_request(
            prompts, "tot_expand",
            {{"task_description", task.description},
             {"top_module", task.top_module_name},
             {"parent_design",
              parent.code.empty() ? "(none)" : "```verilog\n" + parent.code + "```"},
             {"step", std::to_string(step)},
             {"depth", std::to_string(cfg.tot_depth)}},
            "ToT:expand", cfg);
        Candidate candidate;
        candidate.code = extract_code(llm.chat(req).text);
        candidate.score = score_candidate(llm, prompts, task, candidate.code, cfg);
        next.push_back(std::move(candidate));
      }
    }
    level = std::move(next);
  }

  const Candidate* best = &level.front();
  for (const auto& c : level) {
    if (c.score > best->score) {
      best = &c;
    }
  }
  return best->code;
}

}  // namespace

RunResult run_baseline_paradigm(const DesignTask& task, LlmGateway& gateway, Verifier& verifier,
                                const RunConfig& cfg, const PromptLibrary& prompts) {
  BudgetedLlm llm(gateway, cfg.llm_call_budget);
  RunResult result;
  std::optional<std::string> code;

  try {
    switch (cfg.paradigm) {
      case Paradigm::IO:
        code = run_io(task, llm, prompts, cfg);
        break;
      case Paradigm::CoT:
        code = run_cot(task, llm, prompts, cfg, "CoT");
        break;
      case Paradigm::CoTSC:
        code = run_cotsc(task, llm, prompts, cfg);
        break;
      case Paradigm::ToT:
        code = run_tot(task, llm, prompts, cfg);
        break;
      default:
        throw ValidationError("not a baseline paradigm");
    }
    result.terminated_by = TerminatedBy::Success;
  } catch (const BudgetStop&) {
    result.terminated_by = TerminatedBy::BudgetExhausted;
  } catch (const Error&) {
    result.terminated_by = TerminatedBy::OperatorFailure;
  }

  if (code) {
    result.final_source = code;
    try {
      SimOutcome outcome = verifier.run_testbench({*code}, task.oracle_testbench);
      result.syntax_ok = outcome.syntax_ok;
      result.functional_ok = outcome.syntax_ok && outcome.functional_pass == true;
    } catch (const Error&) {
      result.terminated_by = TerminatedBy::OperatorFailure;
    }
  }
  result.llm_calls = llm.calls();
  return result;
}

}  // namespace veribtot::controller_detail
