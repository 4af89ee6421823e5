#pragma once

#include <chrono>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace veribtot {

/// One design problem: the natural-language requirement plus the oracle
/// testbench used for final functionality testing.
struct DesignTask {
  std::string description;
  std::string oracle_testbench;
  std::string top_module_name;
  std::chrono::milliseconds timeout{std::chrono::seconds(10)};

  /// Throws ValidationError if the description is empty, the module name is
  /// not a Verilog identifier, or the timeout is not positive.
  void validate() const;
};

struct NodeId {
  std::uint64_t value = 0;
  friend auto operator<=>(const NodeId&, const NodeId&) = default;
};

enum class NodeStatus {
  Fresh,
  EvaluatedPass,
  EvaluatedFail,
  Rethought,
  Branched,
  Discarded,
};

const char* to_string(NodeStatus status);
NodeStatus node_status_from_string(const std::string& text);

/// True when `from -> to` appears in the legal transition relation.
/// Discarded is terminal and may only be entered through prune/remove.
bool is_legal_status_transition(NodeStatus from, NodeStatus to);

/// Seed for a child node: its module name plus the complete design
/// requirement (including the port/interface contract).
struct ChildSeed {
  std::string module_name;
  std::string spec;
};

/// One thought step: a (spec, design, testbench) triple for one module.
struct ThoughtNode {
  NodeId id;
  std::optional<NodeId> parent;
  std::vector<NodeId> children;  // generation order
  std::string module_name;
  std::string spec;
  std::optional<std::string> design;
  std::optional<std::string> testbench;
  NodeStatus status = NodeStatus::Fresh;
  int rethink_count = 0;
  std::optional<std::string> diagnosis;
};

struct PathContext {
  struct Ancestor {
    std::string module_name;
    std::string spec;
    std::optional<std::string> design;
  };
  struct SiblingSummary {
    std::string module_name;
    std::string spec;
  };

  std::string task_description;
  std::vector<Ancestor> ancestor_chain;  // root first, ends at the node's parent
  std::vector<SiblingSummary> verified_sibling_summaries;
};

/// Trees built for the testbench-free ablation carry no node testbenches;
/// the EvaluatedPass-implies-testbench invariant is relaxed for them.
enum class TreeMode { WithTestbench, DesignOnly };

/// The backtrack tree. Single root, acyclic, ids never reused. Removed nodes
/// leave the live map and land in an append-only audit log.
class BacktrackTree {
public:
  struct AuditEntry {
    ThoughtNode node;
    std::string reason;
  };

  explicit BacktrackTree(DesignTask task, TreeMode mode = TreeMode::WithTestbench);

  const DesignTask& task() const { return task_; }
  TreeMode mode() const { return mode_; }
  NodeId root() const { return root_; }
  std::size_t node_count() const { return nodes_.size(); }
  bool contains(NodeId id) const { return nodes_.count(id) != 0; }

  /// Throws NodeLookupError for unknown (or discarded) ids.
  const ThoughtNode& node(NodeId id) const;

  int depth(NodeId id) const;
  bool is_leaf(NodeId id) const;

  /// True when every child of `id` is EvaluatedPass (vacuously true for a
  /// childless node).
  bool children_all_passed(NodeId id) const;

  /// First Fresh leaf met by a pre-order walk, children in generation order.
  std::optional<NodeId> deepest_fresh_leaf() const;

  /// Live node ids in pre-order.
  std::vector<NodeId> preorder_ids() const;

  /// Creates Fresh children under a failed leaf. Requires: `parent` is a
  /// leaf with status EvaluatedFail, at least two seeds, and seed names
  /// unique among themselves and against all live nodes. The tree is left
  /// unmodified when any check fails.
  std::vector<NodeId> attach_children(NodeId parent, const std::vector<ChildSeed>& seeds);

  /// Removes all strict descendants of `node` (audit-logged as Discarded)
  /// and marks the node EvaluatedFail. A leaf is left untouched. Returns the
  /// number of removed nodes.
  std::size_t prune_children(NodeId node, const std::string& reason = "prune_children");

  /// Removes `node`, its siblings, and all their descendants. The parent
  /// becomes a childless EvaluatedFail leaf; its id is returned.
  /// Calling this on the root is a structural error.
  NodeId remove_with_siblings(NodeId node, const std::string& reason = "remove_with_siblings");

  PathContext path_context(NodeId node) const;

  // Controlled field mutation. set_status enforces the legal-transition
  // relation (setting the current status again is a no-op).
  void set_status(NodeId id, NodeStatus status);
  void set_design(NodeId id, std::string design);
  void set_testbench(NodeId id, std::string testbench);
  void set_diagnosis(NodeId id, std::string diagnosis);
  void bump_rethink_count(NodeId id);
  void reset_rethink_count(NodeId id);

  const std::vector<AuditEntry>& audit_log() const { return audit_log_; }

  /// Full structural self-check; throws TreeStructureError on any violation.
  void check_invariants() const;

  nlohmann::json to_json() const;

private:
  ThoughtNode& node_mut(NodeId id);
  NodeId allocate(std::optional<NodeId> parent, std::string module_name, std::string spec);
  void collect_subtree(NodeId id, std::vector<NodeId>& out) const;
  void discard_subtree(NodeId id, const std::string& reason);

  DesignTask task_;
  TreeMode mode_;
  NodeId root_;
  std::map<NodeId, ThoughtNode> nodes_;
  std::vector<AuditEntry> audit_log_;
  std::uint64_t next_id_ = 0;
};

/// Builds a one-node tree housing the task; the root is Fresh with the
/// task's description as its spec.
BacktrackTree init_tree(DesignTask task, TreeMode mode = TreeMode::WithTestbench);

}  // namespace veribtot
