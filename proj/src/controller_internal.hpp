#pragma once

#include <string>

#include "veribtot/controller.hpp"
#include "veribtot/llm_gateway.hpp"

namespace veribtot::controller_detail {

// Stops a run when the call budget would be exceeded. Deliberately not a
// veribtot::Error: it is control flow, translated to
// TerminatedBy::BudgetExhausted at the run boundary.
struct BudgetStop {
  std::string what;
};

class BudgetedLlm : public LlmClient {
public:
  BudgetedLlm(LlmClient& inner, int budget) : inner_(inner), budget_(budget) {}

  ChatResponse chat(const ChatRequest& request) override {
    if (calls_ >= budget_) {
      throw BudgetStop{"llm call budget (" + std::to_string(budget_) + ") exhausted"};
    }
    ++calls_;
    return inner_.chat(request);
  }

  int calls() const { return calls_; }

private:
  LlmClient& inner_;
  int budget_;
  int calls_ = 0;
};

RunResult run_tree_paradigm(const DesignTask& task, LlmGateway& gateway, Verifier& verifier,
                            const RunConfig& cfg, const PromptLibrary& prompts,
                            const RunHooks& hooks, bool with_testbench);

RunResult run_baseline_paradigm(const DesignTask& task, LlmGateway& gateway, Verifier& verifier,
                                const RunConfig& cfg, const PromptLibrary& prompts);

}  // namespace veribtot::controller_detail
