#include "veribtot/controller.hpp"

#include <map>

#include "controller_internal.hpp"
#include "veribtot/errors.hpp"

namespace veribtot {

const char* to_string(Paradigm p) {
  switch (p) {
    case Paradigm::IO: return "IO";
    case Paradigm::CoT: return "CoT";
    case Paradigm::CoTSC: return "CoT-SC";
    case Paradigm::ToT: return "ToT";
    case Paradigm::VeriBToT: return "VeriBToT";
    case Paradigm::VeriBToTMinus: return "VeriBToT-";
  }
  return "IO";
}

Paradigm paradigm_from_string(const std::string& text) {
  if (text == "IO") return Paradigm::IO;
  if (text == "CoT") return Paradigm::CoT;
  if (text == "CoT-SC" || text == "CoTSC") return Paradigm::CoTSC;
  if (text == "ToT") return Paradigm::ToT;
  if (text == "VeriBToT") return Paradigm::VeriBToT;
  if (text == "VeriBToT-" || text == "VeriBToTMinus") return Paradigm::VeriBToTMinus;
  throw ValidationError("unknown paradigm: '" + text + "'");
}

const char* to_string(TerminatedBy t) {
  switch (t) {
    case TerminatedBy::Success: return "success";
    case TerminatedBy::BudgetExhausted: return "budget_exhausted";
    case TerminatedBy::OperatorFailure: return "operator_failure";
  }
  return "operator_failure";
}

const char* to_string(EvalMode m) {
  switch (m) {
    case EvalMode::Simulator: return "simulator";
    case EvalMode::LlmJudge: return "llm_judge";
    case EvalMode::Hybrid: return "hybrid";
  }
  return "hybrid";
}

EvalMode eval_mode_from_string(const std::string& text) {
  if (text == "simulator") return EvalMode::Simulator;
  if (text == "llm_judge") return EvalMode::LlmJudge;
  if (text == "hybrid") return EvalMode::Hybrid;
  throw ValidationError("unknown eval mode: '" + text + "'");
}

const char* to_string(OracleTbPolicy p) {
  return p == OracleTbPolicy::FinalOnly ? "final_only" : "in_loop";
}

OracleTbPolicy oracle_tb_policy_from_string(const std::string& text) {
  if (text == "final_only") return OracleTbPolicy::FinalOnly;
  if (text == "in_loop") return OracleTbPolicy::InLoop;
  throw ValidationError("unknown oracle testbench policy: '" + text + "'");
}

void RunConfig::validate() const {
  if (max_depth < 1) throw ValidationError("max_depth must be >= 1");
  if (rethink_budget < 0) throw ValidationError("rethink_budget must be >= 0");
  if (backtrack_budget < 0) throw ValidationError("backtrack_budget must be >= 0");
  if (llm_call_budget < 1) throw ValidationError("llm_call_budget must be >= 1");
  if (max_fanout < 2) throw ValidationError("max_fanout must be >= 2");
  if (temperature < 0) throw ValidationError("temperature must be >= 0");
  if (max_output_tokens < 1) throw ValidationError("max_output_tokens must be >= 1");
  if (cotsc_chains < 1) throw ValidationError("cotsc_chains must be >= 1");
  if (tot_width < 1) throw ValidationError("tot_width must be >= 1");
  if (tot_depth < 1) throw ValidationError("tot_depth must be >= 1");
}

OperatorOptions RunConfig::operator_options() const {
  OperatorOptions opts;
  opts.temperature = temperature;
  opts.max_output_tokens = max_output_tokens;
  opts.max_fanout = max_fanout;
  return opts;
}

nlohmann::json RunResult::to_json() const {
  nlohmann::json j;
  j["final_source"] = final_source ? nlohmann::json(*final_source) : nlohmann::json(nullptr);
  j["syntax_ok"] = syntax_ok;
  j["functional_ok"] = functional_ok;
  j["tree_snapshot"] = tree_snapshot ? *tree_snapshot : nlohmann::json(nullptr);
  auto totals = ledger.totals();
  j["prompt_tokens"] = totals.prompt_tokens;
  j["completion_tokens"] = totals.completion_tokens;
  auto by_tag = nlohmann::json::object();
  for (const auto& [tag, t] : ledger.by_tag()) {
    by_tag[tag] = {{"prompt_tokens", t.prompt_tokens}, {"completion_tokens", t.completion_tokens}};
  }
  j["tokens_by_tag"] = std::move(by_tag);
  j["llm_calls"] = llm_calls;
  j["terminated_by"] = to_string(terminated_by);
  return j;
}

namespace controller_detail {

// The DFS machine over the backtrack tree.
class TreeRun {
public:
  TreeRun(const DesignTask& task, BudgetedLlm& llm, Verifier& verifier, const RunConfig& cfg,
          const PromptLibrary& prompts, const RunHooks& hooks, bool with_testbench)
      : tree_(task, with_testbench ? TreeMode::WithTestbench : TreeMode::DesignOnly),
        llm_(llm),
        verifier_(verifier),
        cfg_(cfg),
        prompts_(prompts),
        hooks_(hooks),
        with_testbench_(with_testbench),
        opts_(cfg.operator_options()),
        backtracks_left_(cfg.backtrack_budget) {}

  // Runs to finality or until a budget trips; budget exhaustion surfaces as
  // BudgetStop, operator errors as veribtot::Error.
  RunResult execute() {
    materialize_root();
    while (true) {
      if (tree_.node(tree_.root()).status == NodeStatus::EvaluatedPass) {
        return finality();
      }
      if (auto leaf = tree_.deepest_fresh_leaf()) {
        handle_leaf(*leaf);
        continue;
      }
      if (auto candidate = integration_candidate()) {
        integrate(*candidate);
        continue;
      }
      throw TreeStructureError("run stalled: no fresh leaf, no integratable node");
    }
  }

  const BacktrackTree& tree() const { return tree_; }

private:
  void step() {
    if (hooks_.on_step) {
      hooks_.on_step(tree_);
    }
  }

  PathContext ctx(NodeId id) const { return tree_.path_context(id); }

  void consume_backtrack() {
    if (backtracks_left_ <= 0) {
      throw BudgetStop{"backtrack budget (" + std::to_string(cfg_.backtrack_budget) +
                       ") exhausted"};
    }
    --backtracks_left_;
  }

  void materialize_node(NodeId id, const ChildSeed& seed) {
    if (!with_testbench_) {
      tree_.set_design(id, materialize_design_only(llm_, prompts_, ctx(id), seed, opts_));
    } else if (!tree_.node(id).parent && cfg_.oracle_tb_policy == OracleTbPolicy::InLoop) {
      // The oracle testbench doubles as the root's node testbench.
      tree_.set_design(id, materialize_design_only(llm_, prompts_, ctx(id), seed, opts_));
      tree_.set_testbench(id, tree_.task().oracle_testbench);
    } else {
      auto artifacts = materialize_child(llm_, prompts_, ctx(id), seed, opts_);
      tree_.set_design(id, artifacts.design);
      tree_.set_testbench(id, artifacts.testbench);
    }
    step();
  }

  void materialize_root() {
    materialize_node(tree_.root(),
                     ChildSeed{tree_.task().top_module_name, tree_.task().description});
  }

  std::vector<std::string> support_designs(NodeId id) const {
    std::vector<std::string> out;
    for (NodeId nid : tree_.preorder_ids()) {
      if (nid == id) {
        continue;
      }
      // Designs below `id` that back its instantiations.
      const auto& n = tree_.node(nid);
      if (!n.design) {
        continue;
      }
      for (std::optional<NodeId> up = n.parent; up; up = tree_.node(*up).parent) {
        if (*up == id) {
          out.push_back(*n.design);
          break;
        }
      }
    }
    return out;
  }

  EvaluationVerdict evaluate(NodeId id) {
    const ThoughtNode& n = tree_.node(id);
    if (with_testbench_) {
      return evaluate_node(llm_, prompts_, verifier_, n, cfg_.eval_mode, support_designs(id),
                           opts_);
    }
    return reflect_on_design(llm_, prompts_, n, opts_);
  }

  void apply_verdict(NodeId id, const EvaluationVerdict& verdict) {
    if (verdict.passed) {
      tree_.set_status(id, NodeStatus::EvaluatedPass);
    } else {
      tree_.set_status(id, NodeStatus::EvaluatedFail);
      tree_.set_diagnosis(id, verdict.diagnosis);
      failure_history_[id.value].push_back(verdict.diagnosis);
    }
    step();
  }

  std::vector<VerifiedChild> verified_children(NodeId id) const {
    std::vector<VerifiedChild> out;
    for (NodeId c : tree_.node(id).children) {
      const auto& n = tree_.node(c);
      if (n.status == NodeStatus::EvaluatedPass && n.design) {
        out.push_back({n.module_name, *n.design});
      }
    }
    return out;
  }

  void apply_rethink(NodeId id, const std::vector<VerifiedChild>& children) {
    if (with_testbench_) {
      RethinkOutput r = rethink_node(llm_, prompts_, ctx(id), tree_.node(id), children, opts_);
      tree_.set_status(id, NodeStatus::Rethought);
      tree_.set_design(id, r.design);
      tree_.set_testbench(id, r.testbench);
    } else {
      std::string design =
          rethink_design_only(llm_, prompts_, ctx(id), tree_.node(id), children, opts_);
      tree_.set_status(id, NodeStatus::Rethought);
      tree_.set_design(id, design);
    }
    step();
  }

  // Evaluate a fresh leaf, then rethink / branch / backtrack as needed.
  void handle_leaf(NodeId id) {
    EvaluationVerdict verdict = evaluate(id);
    apply_verdict(id, verdict);
    if (verdict.passed) {
      return;
    }
    while (tree_.node(id).rethink_count < cfg_.rethink_budget) {
      apply_rethink(id, {});
      tree_.bump_rethink_count(id);
      verdict = evaluate(id);
      apply_verdict(id, verdict);
      if (verdict.passed) {
        return;
      }
    }
    if (verdict.complexity == Complexity::Complex && tree_.depth(id) < cfg_.max_depth) {
      branch(id);
    } else {
      backtrack_at(id);
    }
  }

  // Decompose a failed leaf: plan, attach, materialize each child.
  void branch(NodeId id) {
    BranchPlan plan = plan_branches(llm_, prompts_, ctx(id), tree_.node(id), opts_);
    auto children = tree_.attach_children(id, plan.children);
    step();
    for (std::size_t i = 0; i < children.size(); ++i) {
      materialize_node(children[i], plan.children[i]);
    }
  }

  // All children of a Branched node verified: rebuild it on top of them.
  void integrate(NodeId id) {
    auto children = verified_children(id);
    tree_.set_status(id, NodeStatus::EvaluatedFail);  // re-integration focus
    tree_.reset_rethink_count(id);
    step();
    apply_rethink(id, children);
    EvaluationVerdict verdict = evaluate(id);
    apply_verdict(id, verdict);
    if (verdict.passed) {
      return;
    }
    while (tree_.node(id).rethink_count < cfg_.rethink_budget) {
      apply_rethink(id, children);
      tree_.bump_rethink_count(id);
      verdict = evaluate(id);
      apply_verdict(id, verdict);
      if (verdict.passed) {
        return;
      }
    }
    backtrack_at(id);
  }

  // The decision procedure: ask, act, and on Ascend repeat at the parent
  // until some node is re-branched.
  void backtrack_at(NodeId id) {
    NodeId cur = id;
    while (true) {
      auto history_it = failure_history_.find(cur.value);
      std::vector<std::string> history =
          history_it == failure_history_.end() ? std::vector<std::string>{} : history_it->second;
      BacktrackDecision decision =
          decide_backtrack(llm_, prompts_, ctx(cur), tree_.node(cur), history, opts_);
      if (decision.action == BacktrackAction::Ascend && cur == tree_.root()) {
        decision.action = BacktrackAction::RebranchHere;  // root guard
      } else if (decision.action == BacktrackAction::RebranchHere && cur != tree_.root() &&
                 tree_.depth(cur) >= cfg_.max_depth) {
        // Children would land past the depth cap; the only way out is up.
        decision.action = BacktrackAction::Ascend;
      }
      if (decision.action == BacktrackAction::RebranchHere) {
        consume_backtrack();
        tree_.prune_children(cur, "rebranch at " + tree_.node(cur).module_name);
        step();
        branch(cur);
        return;
      }
      consume_backtrack();
      cur = tree_.remove_with_siblings(cur, "ascend from " + tree_.node(cur).module_name);
      step();
    }
  }

  std::optional<NodeId> integration_candidate() const {
    // Post-order: deepest candidates first.
    std::optional<NodeId> found;
    std::function<void(NodeId)> walk = [&](NodeId id) {
      if (found) {
        return;
      }
      const auto& n = tree_.node(id);
      for (NodeId c : n.children) {
        walk(c);
      }
      if (found) {
        return;
      }
      if (n.status == NodeStatus::Branched && !n.children.empty() &&
          tree_.children_all_passed(id)) {
        found = id;
      }
    };
    walk(tree_.root());
    return found;
  }

  RunResult finality() {
    RunResult result;
    AggregatedDesign design = aggregate_design(tree_);
    if (cfg_.polish_final) {
      design = polish_design(llm_, prompts_, design, opts_);
    }
    result.final_source = design.source;
    SimOutcome outcome =
        verifier_.run_testbench({design.source}, tree_.task().oracle_testbench);
    result.syntax_ok = outcome.syntax_ok;
    result.functional_ok = outcome.syntax_ok && outcome.functional_pass == true;
    result.terminated_by = TerminatedBy::Success;
    return result;
  }

  BacktrackTree tree_;
  BudgetedLlm& llm_;
  Verifier& verifier_;
  const RunConfig& cfg_;
  const PromptLibrary& prompts_;
  const RunHooks& hooks_;
  bool with_testbench_;
  OperatorOptions opts_;
  int backtracks_left_;
  std::map<std::uint64_t, std::vector<std::string>> failure_history_;
};

RunResult run_tree_paradigm(const DesignTask& task, LlmGateway& gateway, Verifier& verifier,
                            const RunConfig& cfg, const PromptLibrary& prompts,
                            const RunHooks& hooks, bool with_testbench) {
  BudgetedLlm llm(gateway, cfg.llm_call_budget);
  TreeRun run(task, llm, verifier, cfg, prompts, hooks, with_testbench);
  RunResult result;
  try {
    result = run.execute();
  } catch (const BudgetStop&) {
    result.terminated_by = TerminatedBy::BudgetExhausted;
    try {
      result.final_source = aggregate_design(run.tree()).source;
    } catch (const AggregationError&) {
      // nothing verified enough to assemble
    }
  } catch (const Error&) {
    result.terminated_by = TerminatedBy::OperatorFailure;
  }
  result.tree_snapshot = run.tree().to_json();
  result.llm_calls = llm.calls();
  return result;
}

}  // namespace controller_detail

RunResult run_task(const DesignTask& task, std::shared_ptr<LlmClient> llm, Verifier& verifier,
                   const RunConfig& cfg, const PromptLibrary& prompts, const RunHooks& hooks) {
  task.validate();
  cfg.validate();
  if (!llm) {
    throw ValidationError("run_task needs an LLM backend");
  }

  auto ledger = std::make_shared<TokenLedger>();
  LlmGateway gateway(std::move(llm), ledger);

  RunResult result;
  switch (cfg.paradigm) {
    case Paradigm::VeriBToT:
      result = controller_detail::run_tree_paradigm(task, gateway, verifier, cfg, prompts, hooks,
                                                    /*with_testbench=*/true);
      break;
    case Paradigm::VeriBToTMinus:
      result = controller_detail::run_tree_paradigm(task, gateway, verifier, cfg, prompts, hooks,
                                                    /*with_testbench=*/false);
      break;
    default:
      result = controller_detail::run_baseline_paradigm(task, gateway, verifier, cfg, prompts);
      break;
  }
  result.ledger = *ledger;
  if (result.llm_calls == 0) {
    result.llm_calls = static_cast<int>(ledger->size());
  }
  return result;
}

}  // namespace veribtot
