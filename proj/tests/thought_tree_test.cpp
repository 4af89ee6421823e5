#include "veribtot/thought_tree.hpp"

#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include "support/tree_fuzz.hpp"
#include "veribtot/errors.hpp"

using namespace veribtot;
using veribtot::testing::fuzz_task;

namespace {

DesignTask adder_task() {
  DesignTask task;
  task.description = "64-bit ripple adder";
  task.oracle_testbench = "module oracle_tb; endmodule";
  task.top_module_name = "adder_pipe_64bit";
  return task;
}

// Builds: root(EvaluatedFail->Branched) with children a, b; then grows grand
// children under `a` when asked.
BacktrackTree small_tree(std::vector<NodeId>* out_children = nullptr) {
  BacktrackTree tree(adder_task());
  tree.set_status(tree.root(), NodeStatus::EvaluatedFail);
  auto kids = tree.attach_children(tree.root(), {{"child_a", "spec a"}, {"child_b", "spec b"}});
  if (out_children) {
    *out_children = kids;
  }
  return tree;
}

TEST(DesignTaskTest, ValidatesFields) {
  DesignTask task = adder_task();
  EXPECT_NO_THROW(task.validate());

  DesignTask empty = task;
  empty.description = "";
  EXPECT_THROW(empty.validate(), ValidationError);

  DesignTask bad_name = task;
  bad_name.top_module_name = "1bad name";
  EXPECT_THROW(bad_name.validate(), ValidationError);

  DesignTask bad_timeout = task;
  bad_timeout.timeout = std::chrono::milliseconds(0);
  EXPECT_THROW(bad_timeout.validate(), ValidationError);
}

TEST(InitTreeTest, SingleFreshRoot) {
  BacktrackTree tree = init_tree(adder_task());
  EXPECT_EQ(tree.node_count(), 1u);
  const auto& root = tree.node(tree.root());
  EXPECT_EQ(root.status, NodeStatus::Fresh);
  EXPECT_EQ(root.module_name, "adder_pipe_64bit");
  EXPECT_EQ(root.spec, "64-bit ripple adder");
  EXPECT_FALSE(root.design);
  EXPECT_FALSE(root.testbench);
  EXPECT_EQ(tree.depth(tree.root()), 0);
}

TEST(InitTreeTest, RejectsInvalidTask) {
  DesignTask task = adder_task();
  task.description = "";
  EXPECT_THROW(init_tree(task), ValidationError);
}

TEST(StatusTransitionTest, LegalRelation) {
  EXPECT_TRUE(is_legal_status_transition(NodeStatus::Fresh, NodeStatus::EvaluatedPass));
  EXPECT_TRUE(is_legal_status_transition(NodeStatus::Fresh, NodeStatus::EvaluatedFail));
  EXPECT_TRUE(is_legal_status_transition(NodeStatus::EvaluatedFail, NodeStatus::Rethought));
  EXPECT_TRUE(is_legal_status_transition(NodeStatus::EvaluatedFail, NodeStatus::Branched));
  EXPECT_TRUE(is_legal_status_transition(NodeStatus::Rethought, NodeStatus::EvaluatedPass));
  EXPECT_TRUE(is_legal_status_transition(NodeStatus::Branched, NodeStatus::EvaluatedPass));
  EXPECT_TRUE(is_legal_status_transition(NodeStatus::Branched, NodeStatus::EvaluatedFail));
  EXPECT_TRUE(is_legal_status_transition(NodeStatus::Fresh, NodeStatus::Discarded));

  EXPECT_FALSE(is_legal_status_transition(NodeStatus::Fresh, NodeStatus::Branched));
  EXPECT_FALSE(is_legal_status_transition(NodeStatus::Fresh, NodeStatus::Rethought));
  EXPECT_FALSE(is_legal_status_transition(NodeStatus::EvaluatedPass, NodeStatus::EvaluatedFail));
  EXPECT_FALSE(is_legal_status_transition(NodeStatus::Discarded, NodeStatus::Fresh));
  EXPECT_FALSE(is_legal_status_transition(NodeStatus::EvaluatedFail, NodeStatus::EvaluatedPass));
}

TEST(StatusTransitionTest, TreeEnforcesRelation) {
  BacktrackTree tree(adder_task());
  EXPECT_THROW(tree.set_status(tree.root(), NodeStatus::Branched), TreeStructureError);
  EXPECT_THROW(tree.set_status(tree.root(), NodeStatus::Discarded), TreeStructureError);
  tree.set_status(tree.root(), NodeStatus::EvaluatedFail);
  tree.set_status(tree.root(), NodeStatus::EvaluatedFail);  // same-status no-op
  tree.set_status(tree.root(), NodeStatus::Rethought);
  EXPECT_THROW(tree.set_status(tree.root(), NodeStatus::Branched), TreeStructureError);
}

TEST(AttachChildrenTest, BranchesFailedLeaf) {
  std::vector<NodeId> kids;
  BacktrackTree tree = small_tree(&kids);

  EXPECT_EQ(tree.node(tree.root()).status, NodeStatus::Branched);
  ASSERT_EQ(kids.size(), 2u);
  EXPECT_EQ(tree.node(kids[0]).module_name, "child_a");
  EXPECT_EQ(tree.node(kids[0]).status, NodeStatus::Fresh);
  EXPECT_FALSE(tree.node(kids[0]).design);
  EXPECT_EQ(tree.node(kids[1]).module_name, "child_b");
  EXPECT_EQ(tree.depth(kids[1]), 1);
  tree.check_invariants();
}

TEST(AttachChildrenTest, MinimumArityIsTwo) {
  BacktrackTree tree(adder_task());
  tree.set_status(tree.root(), NodeStatus::EvaluatedFail);
  EXPECT_THROW(tree.attach_children(tree.root(), {{"only_child", "spec"}}), TreeStructureError);
  EXPECT_EQ(tree.node_count(), 1u);  // unmodified
}

TEST(AttachChildrenTest, ThreeSeedsOnFailedRoot) {
  // cross-checked against the full-rescan reference model
  BacktrackTree tree(adder_task());
  veribtot::testing::ReferenceTree ref("adder_pipe_64bit", "64-bit ripple adder");
  tree.set_status(tree.root(), NodeStatus::EvaluatedFail);
  ref.set_status(ref.root_id(), "evaluated_fail");
  tree.attach_children(tree.root(), {{"s0", "a"}, {"s1", "b"}, {"s2", "c"}});
  ref.attach_children(ref.root_id(), {{"s0", "a"}, {"s1", "b"}, {"s2", "c"}});

  EXPECT_EQ(tree.node_count(), 4u);
  for (NodeId c : tree.node(tree.root()).children) {
    EXPECT_EQ(tree.depth(c), 1);
  }
  veribtot::testing::expect_trees_equal(tree, ref);
}

TEST(AttachChildrenTest, RejectsDuplicateAndCollidingNames) {
  BacktrackTree tree(adder_task());
  tree.set_status(tree.root(), NodeStatus::EvaluatedFail);
  EXPECT_THROW(tree.attach_children(tree.root(), {{"x", "a"}, {"x", "b"}}), TreeStructureError);
  EXPECT_THROW(
      tree.attach_children(tree.root(), {{"adder_pipe_64bit", "a"}, {"y", "b"}}),
      TreeStructureError);
  EXPECT_THROW(tree.attach_children(tree.root(), {{"ok", "a"}, {"not ok", "b"}}),
               TreeStructureError);
  EXPECT_EQ(tree.node_count(), 1u);
}

TEST(AttachChildrenTest, RejectsNonLeafAndNonFailedParents) {
  std::vector<NodeId> kids;
  BacktrackTree tree = small_tree(&kids);
  EXPECT_THROW(tree.attach_children(tree.root(), {{"p", "a"}, {"q", "b"}}), TreeStructureError);
  EXPECT_THROW(tree.attach_children(kids[0], {{"p", "a"}, {"q", "b"}}), TreeStructureError);
}

TEST(PruneChildrenTest, RemovesDescendantsCountedByIndependentTraversal) {
  // node with 2 children, each with 2 children -> 6 removed
  std::vector<NodeId> kids;
  BacktrackTree tree = small_tree(&kids);
  for (NodeId kid : kids) {
    tree.set_status(kid, NodeStatus::EvaluatedFail);
    tree.attach_children(kid, {{"g" + std::to_string(kid.value) + "_0", "s"},
                               {"g" + std::to_string(kid.value) + "_1", "s"}});
  }
  ASSERT_EQ(tree.node_count(), 7u);

  // independent recursive count of strict descendants
  std::function<std::size_t(NodeId)> count_desc = [&](NodeId id) {
    std::size_t n = 0;
    for (NodeId c : tree.node(id).children) {
      n += 1 + count_desc(c);
    }
    return n;
  };
  std::size_t expected = count_desc(tree.root());
  EXPECT_EQ(expected, 6u);

  EXPECT_EQ(tree.prune_children(tree.root()), expected);
  EXPECT_TRUE(tree.is_leaf(tree.root()));
  EXPECT_EQ(tree.node(tree.root()).status, NodeStatus::EvaluatedFail);
  EXPECT_EQ(tree.node_count(), 1u);
  EXPECT_EQ(tree.audit_log().size(), 6u);
  tree.check_invariants();
}

TEST(PruneChildrenTest, LeafIsNoOp) {
  BacktrackTree tree(adder_task());
  EXPECT_EQ(tree.prune_children(tree.root()), 0u);
  EXPECT_EQ(tree.node(tree.root()).status, NodeStatus::Fresh);  // untouched
  EXPECT_TRUE(tree.audit_log().empty());
}

TEST(PruneChildrenTest, KeepsSpecAndArtifacts) {
  std::vector<NodeId> kids;
  BacktrackTree tree = small_tree(&kids);
  tree.set_design(tree.root(), "design text");
  tree.set_testbench(tree.root(), "tb text");
  tree.prune_children(tree.root());
  const auto& root = tree.node(tree.root());
  EXPECT_EQ(root.spec, "64-bit ripple adder");
  EXPECT_EQ(root.design, "design text");
  EXPECT_EQ(root.testbench, "tb text");
}

TEST(PruneChildrenTest, UnknownIdIsLookupError) {
  BacktrackTree tree(adder_task());
  EXPECT_THROW(tree.prune_children(NodeId{12345}), NodeLookupError);
}

TEST(PruneChildrenTest, NoDiscardedIdInLiveChildrenLists) {
  std::vector<NodeId> kids;
  BacktrackTree tree = small_tree(&kids);
  tree.prune_children(tree.root());
  for (const auto& entry : tree.audit_log()) {
    EXPECT_EQ(entry.node.status, NodeStatus::Discarded);
    for (NodeId live : tree.preorder_ids()) {
      for (NodeId c : tree.node(live).children) {
        EXPECT_NE(c, entry.node.id);
      }
    }
  }
}

TEST(RemoveWithSiblingsTest, ParentBecomesFailedLeaf) {
  std::vector<NodeId> kids;
  BacktrackTree tree = small_tree(&kids);
  NodeId parent = tree.remove_with_siblings(kids[0]);
  EXPECT_EQ(parent, tree.root());
  EXPECT_TRUE(tree.is_leaf(tree.root()));
  EXPECT_EQ(tree.node(tree.root()).status, NodeStatus::EvaluatedFail);
  EXPECT_FALSE(tree.contains(kids[0]));
  EXPECT_FALSE(tree.contains(kids[1]));
  EXPECT_EQ(tree.audit_log().size(), 2u);
  tree.check_invariants();
}

TEST(RemoveWithSiblingsTest, RootIsStructuralError) {
  BacktrackTree tree(adder_task());
  EXPECT_THROW(tree.remove_with_siblings(tree.root()), TreeStructureError);
}

TEST(RemoveWithSiblingsTest, DeepRemovalMatchesReference) {
  // 3-level tree, removal at depth 2 [DERIVED: reference traversal oracle]
  BacktrackTree tree(adder_task());
  veribtot::testing::ReferenceTree ref("adder_pipe_64bit", "64-bit ripple adder");

  auto fail = [&](NodeId id) {
    tree.set_status(id, NodeStatus::EvaluatedFail);
    ref.set_status(id.value, "evaluated_fail");
  };
  auto attach = [&](NodeId id, const std::string& prefix) {
    std::vector<ChildSeed> seeds{{prefix + "_0", "s"}, {prefix + "_1", "s"}};
    auto out = tree.attach_children(id, seeds);
    ref.attach_children(id.value, {{prefix + "_0", "s"}, {prefix + "_1", "s"}});
    return out;
  };

  fail(tree.root());
  auto level1 = attach(tree.root(), "a");
  fail(level1[0]);
  auto level2 = attach(level1[0], "b");
  fail(level2[1]);
  auto level3 = attach(level2[1], "c");

  NodeId parent = tree.remove_with_siblings(level2[1]);
  auto ref_parent = ref.remove_with_siblings(level2[1].value);
  EXPECT_EQ(parent.value, ref_parent);
  EXPECT_EQ(parent, level1[0]);
  EXPECT_FALSE(tree.contains(level3[0]));
  veribtot::testing::expect_trees_equal(tree, ref);
}

TEST(RemoveWithSiblingsTest, OnlyTouchesSiblingGroupAndParent) {
  BacktrackTree tree(adder_task());
  tree.set_status(tree.root(), NodeStatus::EvaluatedFail);
  auto kids = tree.attach_children(tree.root(),
                                   {{"keep_me", "spec"}, {"doomed_a", "s"}, {"doomed_b", "s"}});
  tree.set_design(kids[0], "keep design");
  tree.set_testbench(kids[0], "keep tb");
  tree.set_status(kids[0], NodeStatus::EvaluatedPass);
  tree.set_status(kids[1], NodeStatus::EvaluatedFail);
  auto grand = tree.attach_children(kids[1], {{"ga", "s"}, {"gb", "s"}});

  std::size_t before = tree.node_count();
  NodeId parent = tree.remove_with_siblings(grand[0]);
  EXPECT_EQ(parent, kids[1]);
  EXPECT_LT(tree.node_count(), before);
  // keep_me was outside the removed sibling group
  EXPECT_EQ(tree.node(kids[0]).status, NodeStatus::EvaluatedPass);
  EXPECT_EQ(tree.node(kids[0]).design, "keep design");
  tree.check_invariants();
}

TEST(PathContextTest, RootHasEmptyChain) {
  BacktrackTree tree(adder_task());
  PathContext ctx = tree.path_context(tree.root());
  EXPECT_EQ(ctx.task_description, "64-bit ripple adder");
  EXPECT_TRUE(ctx.ancestor_chain.empty());
  EXPECT_TRUE(ctx.verified_sibling_summaries.empty());
}

TEST(PathContextTest, DepthTwoChainLengthTwo) {
  std::vector<NodeId> kids;
  BacktrackTree tree = small_tree(&kids);
  tree.set_status(kids[0], NodeStatus::EvaluatedFail);
  auto grand = tree.attach_children(kids[0], {{"ga", "s"}, {"gb", "s"}});
  PathContext ctx = tree.path_context(grand[0]);
  ASSERT_EQ(ctx.ancestor_chain.size(), 2u);
  EXPECT_EQ(ctx.ancestor_chain[0].module_name, "adder_pipe_64bit");
  EXPECT_EQ(ctx.ancestor_chain[1].module_name, "child_a");
}

TEST(PathContextTest, VerifiedSiblingsOnly) {
  BacktrackTree tree(adder_task());
  tree.set_status(tree.root(), NodeStatus::EvaluatedFail);
  auto kids = tree.attach_children(
      tree.root(), {{"target", "spec t"}, {"passed_sib", "spec p"}, {"fresh_sib", "spec f"}});
  tree.set_design(kids[1], "d");
  tree.set_testbench(kids[1], "t");
  tree.set_status(kids[1], NodeStatus::EvaluatedPass);

  PathContext ctx = tree.path_context(kids[0]);
  ASSERT_EQ(ctx.verified_sibling_summaries.size(), 1u);
  EXPECT_EQ(ctx.verified_sibling_summaries[0].module_name, "passed_sib");

  EXPECT_THROW(tree.path_context(NodeId{999}), NodeLookupError);
}

TEST(QueryHelpersTest, DeepestFreshLeaf) {
  BacktrackTree tree(adder_task());
  EXPECT_EQ(tree.deepest_fresh_leaf(), tree.root());  // single fresh root

  tree.set_status(tree.root(), NodeStatus::EvaluatedFail);
  auto kids = tree.attach_children(tree.root(), {{"a", "s"}, {"b", "s"}});
  EXPECT_EQ(tree.deepest_fresh_leaf(), kids[0]);  // generation-order tie-break

  tree.set_design(kids[0], "d");
  tree.set_testbench(kids[0], "t");
  tree.set_status(kids[0], NodeStatus::EvaluatedPass);
  EXPECT_EQ(tree.deepest_fresh_leaf(), kids[1]);

  tree.set_design(kids[1], "d");
  tree.set_testbench(kids[1], "t");
  tree.set_status(kids[1], NodeStatus::EvaluatedPass);
  EXPECT_FALSE(tree.deepest_fresh_leaf().has_value());
}

TEST(QueryHelpersTest, ChildrenAllPassed) {
  std::vector<NodeId> kids;
  BacktrackTree tree = small_tree(&kids);
  EXPECT_FALSE(tree.children_all_passed(tree.root()));
  for (NodeId kid : kids) {
    tree.set_design(kid, "d");
    tree.set_testbench(kid, "t");
    tree.set_status(kid, NodeStatus::EvaluatedPass);
  }
  EXPECT_TRUE(tree.children_all_passed(tree.root()));
  EXPECT_TRUE(tree.children_all_passed(kids[0]));  // vacuous for a leaf
}

TEST(TreeModeTest, DesignOnlyTreesRefuseTestbenches) {
  BacktrackTree tree(adder_task(), TreeMode::DesignOnly);
  EXPECT_THROW(tree.set_testbench(tree.root(), "tb"), TreeStructureError);
  tree.set_design(tree.root(), "d");
  tree.set_status(tree.root(), NodeStatus::EvaluatedPass);
  tree.check_invariants();  // pass without a testbench is fine in this mode
}

TEST(PropertyTest, AttachThenPruneRestoresLeafFields) {
  BacktrackTree tree(adder_task());
  tree.set_design(tree.root(), "original design");
  tree.set_testbench(tree.root(), "original tb");
  tree.set_status(tree.root(), NodeStatus::EvaluatedFail);
  ThoughtNode before = tree.node(tree.root());

  tree.attach_children(tree.root(), {{"x1", "s"}, {"x2", "s"}});
  tree.prune_children(tree.root());

  const ThoughtNode& after = tree.node(tree.root());
  EXPECT_EQ(after.spec, before.spec);
  EXPECT_EQ(after.design, before.design);
  EXPECT_EQ(after.testbench, before.testbench);
  EXPECT_TRUE(tree.is_leaf(tree.root()));
  EXPECT_EQ(after.status, NodeStatus::EvaluatedFail);
}

TEST(PropertyTest, DeepestFreshLeafIsDeterministic) {
  std::vector<NodeId> kids;
  BacktrackTree tree = small_tree(&kids);
  auto first = tree.deepest_fresh_leaf();
  for (int i = 0; i < 10; ++i) {
    EXPECT_EQ(tree.deepest_fresh_leaf(), first);
  }
}

TEST(SnapshotTest, JsonShape) {
  std::vector<NodeId> kids;
  BacktrackTree tree = small_tree(&kids);
  tree.set_design(kids[0], "design a");
  tree.set_testbench(kids[0], "tb a");
  tree.set_status(kids[0], NodeStatus::EvaluatedPass);
  tree.set_status(kids[1], NodeStatus::EvaluatedFail);
  tree.attach_children(kids[1], {{"ga", "s"}, {"gb", "s"}});
  tree.prune_children(kids[1]);

  nlohmann::json j = tree.to_json();
  EXPECT_EQ(j["schema"], "veribtot-tree");
  EXPECT_EQ(j["root"], 0);
  ASSERT_TRUE(j["nodes"].is_array());
  EXPECT_EQ(j["nodes"].size(), 3u);
  const auto& root = j["nodes"][0];
  EXPECT_TRUE(root.contains("id"));
  EXPECT_TRUE(root.contains("parent"));
  EXPECT_TRUE(root.contains("children"));
  EXPECT_TRUE(root.contains("status"));
  EXPECT_TRUE(root.contains("spec"));
  EXPECT_TRUE(root.contains("design"));
  EXPECT_TRUE(root.contains("testbench"));
  EXPECT_TRUE(root.contains("rethink_count"));
  ASSERT_EQ(j["audit_log"].size(), 2u);
  EXPECT_EQ(j["audit_log"][0]["node"]["status"], "discarded");
}

TEST(SnapshotTest, IdsNeverReused) {
  std::vector<NodeId> kids;
  BacktrackTree tree = small_tree(&kids);
  tree.set_status(kids[0], NodeStatus::EvaluatedFail);
  auto grand = tree.attach_children(kids[0], {{"g1", "s"}, {"g2", "s"}});
  std::uint64_t highest = grand.back().value;
  tree.prune_children(kids[0]);
  auto fresh = tree.attach_children(kids[0], {{"h1", "s"}, {"h2", "s"}});
  for (NodeId id : fresh) {
    EXPECT_GT(id.value, highest);
  }
}

TEST(FuzzTest, MatchesReferenceModelOnRandomSequences) {
  // Small always-on slice; the full 1000-sequence sweep runs in the
  // acceptance suite.
  veribtot::testing::run_tree_fuzz(/*sequences=*/50, /*steps=*/40, /*max_nodes=*/50,
                                   /*seed=*/0xBEEF);
}

}  // namespace
