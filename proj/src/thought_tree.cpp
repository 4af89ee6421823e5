#include "veribtot/thought_tree.hpp"

#include <algorithm>
#include <set>

#include <nlohmann/json.hpp>

#include "veribtot/errors.hpp"
#include "veribtot/verilog_scan.hpp"

namespace veribtot {

void DesignTask::validate() const {
  if (description.empty()) {
    throw ValidationError("task description must not be empty");
  }
  if (!is_verilog_identifier(top_module_name)) {
    throw ValidationError("top module name is not a Verilog identifier: '" + top_module_name + "'");
  }
  if (timeout.count() <= 0) {
    throw ValidationError("task timeout must be positive");
  }
}

const char* to_string(NodeStatus status) {
  switch (status) {
    case NodeStatus::Fresh: return "fresh";
    case NodeStatus::EvaluatedPass: return "evaluated_pass";
    case NodeStatus::EvaluatedFail: return "evaluated_fail";
    case NodeStatus::Rethought: return "rethought";
    case NodeStatus::Branched: return "branched";
    case NodeStatus::Discarded: return "discarded";
  }
  return "unknown";
}

NodeStatus node_status_from_string(const std::string& text) {
  if (text == "fresh") return NodeStatus::Fresh;
  if (text == "evaluated_pass") return NodeStatus::EvaluatedPass;
  if (text == "evaluated_fail") return NodeStatus::EvaluatedFail;
  if (text == "rethought") return NodeStatus::Rethought;
  if (text == "branched") return NodeStatus::Branched;
  if (text == "discarded") return NodeStatus::Discarded;
  throw ValidationError("unknown node status: '" + text + "'");
}

bool is_legal_status_transition(NodeStatus from, NodeStatus to) {
  if (to == NodeStatus::Discarded) {
    return from != NodeStatus::Discarded;
  }
  switch (from) {
    case NodeStatus::Fresh:
      return to == NodeStatus::EvaluatedPass || to == NodeStatus::EvaluatedFail;
    case NodeStatus::EvaluatedFail:
      return to == NodeStatus::Rethought || to == NodeStatus::Branched;
    case NodeStatus::Rethought:
      return to == NodeStatus::EvaluatedPass || to == NodeStatus::EvaluatedFail;
    case NodeStatus::Branched:
      return to == NodeStatus::EvaluatedPass || to == NodeStatus::EvaluatedFail;
    case NodeStatus::EvaluatedPass:
    case NodeStatus::Discarded:
      return false;
  }
  return false;
}

BacktrackTree::BacktrackTree(DesignTask task, TreeMode mode)
    : task_(std::move(task)), mode_(mode) {
  task_.validate();
  root_ = allocate(std::nullopt, task_.top_module_name, task_.description);
}

BacktrackTree init_tree(DesignTask task, TreeMode mode) {
  return BacktrackTree(std::move(task), mode);
}

const ThoughtNode& BacktrackTree::node(NodeId id) const {
  auto it = nodes_.find(id);
  if (it == nodes_.end()) {
    throw NodeLookupError("no live node with id " + std::to_string(id.value));
  }
  return it->second;
}

ThoughtNode& BacktrackTree::node_mut(NodeId id) {
  auto it = nodes_.find(id);
  if (it == nodes_.end()) {
    throw NodeLookupError("no live node with id " + std::to_string(id.value));
  }
  return it->second;
}

NodeId BacktrackTree::allocate(std::optional<NodeId> parent, std::string module_name,
                               std::string spec) {
  NodeId id{next_id_++};
  ThoughtNode n;
  n.id = id;
  n.parent = parent;
  n.module_name = std::move(module_name);
  n.spec = std::move(spec);
  nodes_.emplace(id, std::move(n));
  return id;
}

int BacktrackTree::depth(NodeId id) const {
  int d = 0;
  const ThoughtNode* cur = &node(id);
  while (cur->parent) {
    cur = &node(*cur->parent);
    ++d;
  }
  return d;
}

bool BacktrackTree::is_leaf(NodeId id) const {
  return node(id).children.empty();
}

bool BacktrackTree::children_all_passed(NodeId id) const {
  const auto& n = node(id);
  return std::all_of(n.children.begin(), n.children.end(), [this](NodeId c) {
    return node(c).status == NodeStatus::EvaluatedPass;
  });
}

std::optional<NodeId> BacktrackTree::deepest_fresh_leaf() const {
  for (NodeId id : preorder_ids()) {
    const auto& n = node(id);
    if (n.status == NodeStatus::Fresh && n.children.empty()) {
      return id;
    }
  }
  return std::nullopt;
}

std::vector<NodeId> BacktrackTree::preorder_ids() const {
  std::vector<NodeId> out;
  out.reserve(nodes_.size());
  std::vector<NodeId> stack{root_};
  while (!stack.empty()) {
    NodeId id = stack.back();
    stack.pop_back();
    out.push_back(id);
    const auto& n = node(id);
    for (auto it = n.children.rbegin(); it != n.children.rend(); ++it) {
      stack.push_back(*it);
    }
  }
  return out;
}

std::vector<NodeId> BacktrackTree::attach_children(NodeId parent,
                                                   const std::vector<ChildSeed>& seeds) {
  const auto& p = node(parent);
  if (!p.children.empty()) {
    throw TreeStructureError("attach_children: parent " + std::to_string(parent.value) +
                             " is not a leaf");
  }
  if (p.status != NodeStatus::EvaluatedFail) {
    throw TreeStructureError("attach_children: parent must be EvaluatedFail, is " +
                             std::string(to_string(p.status)));
  }
  if (seeds.size() < 2) {
    throw TreeStructureError("attach_children: a decomposition needs at least 2 children, got " +
                             std::to_string(seeds.size()));
  }
  std::set<std::string> live_names;
  for (const auto& [id, n] : nodes_) {
    live_names.insert(n.module_name);
  }
  std::set<std::string> seed_names;
  for (const auto& seed : seeds) {
    if (!is_verilog_identifier(seed.module_name)) {
      throw TreeStructureError("attach_children: '" + seed.module_name +
                               "' is not a Verilog identifier");
    }
    if (seed.spec.empty()) {
      throw TreeStructureError("attach_children: empty spec for '" + seed.module_name + "'");
    }
    if (!seed_names.insert(seed.module_name).second || live_names.count(seed.module_name)) {
      throw TreeStructureError("attach_children: duplicate module name '" + seed.module_name +
                               "'");
    }
  }

  std::vector<NodeId> ids;
  ids.reserve(seeds.size());
  for (const auto& seed : seeds) {
    ids.push_back(allocate(parent, seed.module_name, seed.spec));
  }
  auto& pm = node_mut(parent);
  pm.children = ids;
  pm.status = NodeStatus::Branched;
  return ids;
}

void BacktrackTree::collect_subtree(NodeId id, std::vector<NodeId>& out) const {
  out.push_back(id);
  for (NodeId c : node(id).children) {
    collect_subtree(c, out);
  }
}

void BacktrackTree::discard_subtree(NodeId id, const std::string& reason) {
  std::vector<NodeId> doomed;
  collect_subtree(id, doomed);
  for (NodeId d : doomed) {
    auto it = nodes_.find(d);
    it->second.status = NodeStatus::Discarded;
    audit_log_.push_back({std::move(it->second), reason});
    nodes_.erase(it);
  }
}

std::size_t BacktrackTree::prune_children(NodeId id, const std::string& reason) {
  auto& n = node_mut(id);
  if (n.children.empty()) {
    return 0;
  }
  if (n.status != NodeStatus::EvaluatedFail &&
      !is_legal_status_transition(n.status, NodeStatus::EvaluatedFail)) {
    throw TreeStructureError("prune_children: node " + std::to_string(id.value) +
                             " cannot become EvaluatedFail from " +
                             std::string(to_string(n.status)));
  }
  std::vector<NodeId> children = n.children;
  std::size_t removed = 0;
  for (NodeId c : children) {
    std::vector<NodeId> sub;
    collect_subtree(c, sub);
    removed += sub.size();
    discard_subtree(c, reason);
  }
  auto& nn = node_mut(id);
  nn.children.clear();
  nn.status = NodeStatus::EvaluatedFail;
  return removed;
}

NodeId BacktrackTree::remove_with_siblings(NodeId id, const std::string& reason) {
  const auto& n = node(id);
  if (!n.parent) {
    throw TreeStructureError("remove_with_siblings: cannot remove the root");
  }
  NodeId parent = *n.parent;
  const auto& p = node(parent);
  if (p.status != NodeStatus::EvaluatedFail &&
      !is_legal_status_transition(p.status, NodeStatus::EvaluatedFail)) {
    throw TreeStructureError("remove_with_siblings: parent " + std::to_string(parent.value) +
                             " cannot become EvaluatedFail from " +
                             std::string(to_string(p.status)));
  }
  std::vector<NodeId> group = p.children;
  for (NodeId g : group) {
    discard_subtree(g, reason);
  }
  auto& pm = node_mut(parent);
  pm.children.clear();
  pm.status = NodeStatus::EvaluatedFail;
  return parent;
}

PathContext BacktrackTree::path_context(NodeId id) const {
  const auto& n = node(id);
  PathContext ctx;
  ctx.task_description = task_.description;

  std::vector<NodeId> chain;
  std::optional<NodeId> cur = n.parent;
  while (cur) {
    chain.push_back(*cur);
    cur = node(*cur).parent;
  }
  std::reverse(chain.begin(), chain.end());
  for (NodeId a : chain) {
    const auto& an = node(a);
    ctx.ancestor_chain.push_back({an.module_name, an.spec, an.design});
  }

  if (n.parent) {
    for (NodeId sib : node(*n.parent).children) {
      if (sib == id) {
        continue;
      }
      const auto& sn = node(sib);
      if (sn.status == NodeStatus::EvaluatedPass) {
        ctx.verified_sibling_summaries.push_back({sn.module_name, sn.spec});
      }
    }
  }
  return ctx;
}

void BacktrackTree::set_status(NodeId id, NodeStatus status) {
  auto& n = node_mut(id);
  if (n.status == status) {
    return;
  }
  if (status == NodeStatus::Discarded) {
    throw TreeStructureError("Discarded is only reachable through prune/remove");
  }
  if (!is_legal_status_transition(n.status, status)) {
    throw TreeStructureError(std::string("illegal status transition ") + to_string(n.status) +
                             " -> " + to_string(status) + " on node " +
                             std::to_string(id.value));
  }
  n.status = status;
}

void BacktrackTree::set_design(NodeId id, std::string design) {
  node_mut(id).design = std::move(design);
}

void BacktrackTree::set_testbench(NodeId id, std::string testbench) {
  if (mode_ == TreeMode::DesignOnly) {
    throw TreeStructureError("this tree carries no testbenches");
  }
  node_mut(id).testbench = std::move(testbench);
}

void BacktrackTree::set_diagnosis(NodeId id, std::string diagnosis) {
  node_mut(id).diagnosis = std::move(diagnosis);
}

void BacktrackTree::bump_rethink_count(NodeId id) {
  ++node_mut(id).rethink_count;
}

void BacktrackTree::reset_rethink_count(NodeId id) {
  node_mut(id).rethink_count = 0;
}

void BacktrackTree::check_invariants() const {
  auto fail = [](const std::string& what) { throw TreeStructureError("invariant: " + what); };

  auto root_it = nodes_.find(root_);
  if (root_it == nodes_.end()) {
    fail("root is not in the live map");
  }
  if (root_it->second.parent) {
    fail("root has a parent");
  }

  std::size_t visited = 0;
  std::set<NodeId> seen;
  std::vector<NodeId> stack{root_};
  while (!stack.empty()) {
    NodeId id = stack.back();
    stack.pop_back();
    if (!seen.insert(id).second) {
      fail("cycle or shared child at node " + std::to_string(id.value));
    }
    ++visited;
    auto it = nodes_.find(id);
    if (it == nodes_.end()) {
      fail("child list references unknown node " + std::to_string(id.value));
    }
    const auto& n = it->second;
    if (n.status == NodeStatus::Discarded) {
      fail("discarded node reachable from root: " + std::to_string(id.value));
    }
    if (n.status == NodeStatus::Branched && n.children.size() < 2) {
      fail("Branched node " + std::to_string(id.value) + " has fewer than 2 children");
    }
    if (n.status == NodeStatus::EvaluatedPass) {
      if (!n.design) {
        fail("EvaluatedPass node " + std::to_string(id.value) + " has no design");
      }
      if (mode_ == TreeMode::WithTestbench && !n.testbench) {
        fail("EvaluatedPass node " + std::to_string(id.value) + " has no testbench");
      }
    }
    for (NodeId c : n.children) {
      auto cit = nodes_.find(c);
      if (cit == nodes_.end()) {
        fail("missing child " + std::to_string(c.value));
      }
      if (!cit->second.parent || *cit->second.parent != id) {
        fail("child " + std::to_string(c.value) + " does not point back to parent " +
             std::to_string(id.value));
      }
      stack.push_back(c);
    }
  }
  if (visited != nodes_.size()) {
    fail("live map holds nodes unreachable from root");
  }

  for (const auto& [id, n] : nodes_) {
    if (id != root_ && !n.parent) {
      fail("second root at node " + std::to_string(id.value));
    }
  }
}

nlohmann::json BacktrackTree::to_json() const {
  auto node_json = [](const ThoughtNode& n) {
    nlohmann::json j;
    j["id"] = n.id.value;
    j["parent"] = n.parent ? nlohmann::json(n.parent->value) : nlohmann::json(nullptr);
    auto kids = nlohmann::json::array();
    for (NodeId c : n.children) {
      kids.push_back(c.value);
    }
    j["children"] = std::move(kids);
    j["module_name"] = n.module_name;
    j["spec"] = n.spec;
    j["design"] = n.design ? nlohmann::json(*n.design) : nlohmann::json(nullptr);
    j["testbench"] = n.testbench ? nlohmann::json(*n.testbench) : nlohmann::json(nullptr);
    j["status"] = to_string(n.status);
    j["rethink_count"] = n.rethink_count;
    j["diagnosis"] = n.diagnosis ? nlohmann::json(*n.diagnosis) : nlohmann::json(nullptr);
    return j;
  };

  nlohmann::json j;
  j["schema"] = "veribtot-tree";
  j["version"] = 1;
  j["mode"] = mode_ == TreeMode::WithTestbench ? "with_testbench" : "design_only";
  j["root"] = root_.value;
  j["task"] = {
      {"description", task_.description},
      {"top_module_name", task_.top_module_name},
      {"timeout_ms", task_.timeout.count()},
  };
  auto nodes = nlohmann::json::array();
  for (NodeId id : preorder_ids()) {
    nodes.push_back(node_json(node(id)));
  }
  j["nodes"] = std::move(nodes);
  auto audit = nlohmann::json::array();
  for (const auto& entry : audit_log_) {
    audit.push_back({{"reason", entry.reason}, {"node", node_json(entry.node)}});
  }
  j["audit_log"] = std::move(audit);
  return j;
}

}  // namespace veribtot
