#pragma once

// Random operation sequences applied to both the production tree and the
// naive reference model, comparing node sets, statuses, links, and the
// DFS-frontier selection after every step.

#include <gtest/gtest.h>

#include <random>
#include <string>
#include <vector>

#include "support/reference_tree.hpp"
#include "veribtot/errors.hpp"
#include "veribtot/thought_tree.hpp"

namespace veribtot::testing {

inline DesignTask fuzz_task() {
  DesignTask task;
  task.description = "fuzz target";
  task.oracle_testbench = "module t; endmodule";
  task.top_module_name = "fuzz_top";
  return task;
}

inline void expect_trees_equal(const BacktrackTree& tree, const ReferenceTree& ref) {
  tree.check_invariants();

  auto ids = tree.preorder_ids();
  auto ref_ids = ref.preorder();
  ASSERT_EQ(ids.size(), ref_ids.size());
  ASSERT_EQ(tree.node_count(), ref.node_count());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    ASSERT_EQ(ids[i].value, ref_ids[i]) << "preorder diverged at position " << i;
    const auto& n = tree.node(ids[i]);
    const auto& r = ref.get(ref_ids[i]);
    ASSERT_EQ(std::string(to_string(n.status)), r.status);
    ASSERT_EQ(n.module_name, r.module_name);
    ASSERT_EQ(n.spec, r.spec);
    ASSERT_EQ(n.parent.has_value(), r.parent.has_value());
    if (n.parent) {
      ASSERT_EQ(n.parent->value, *r.parent);
    }
    auto ref_children = ref.children_of(ref_ids[i]);
    ASSERT_EQ(n.children.size(), ref_children.size());
    for (std::size_t c = 0; c < ref_children.size(); ++c) {
      ASSERT_EQ(n.children[c].value, ref_children[c]);
    }
    ASSERT_EQ(tree.is_leaf(ids[i]), ref.is_leaf(ref_ids[i]));
    ASSERT_EQ(tree.children_all_passed(ids[i]), ref.children_all_passed(ref_ids[i]));
    ASSERT_EQ(tree.depth(ids[i]), ref.depth(ref_ids[i]));
  }

  auto frontier = tree.deepest_fresh_leaf();
  auto ref_frontier = ref.deepest_fresh_leaf();
  ASSERT_EQ(frontier.has_value(), ref_frontier.has_value());
  if (frontier) {
    ASSERT_EQ(frontier->value, *ref_frontier);
  }
}

// One random mutation applied to both models; both must agree on success or
// rejection.
inline void fuzz_step(BacktrackTree& tree, ReferenceTree& ref, std::mt19937_64& rng,
                      int& name_counter, std::size_t max_nodes) {
  auto ids = tree.preorder_ids();
  NodeId target = ids[rng() % ids.size()];
  const auto& node = tree.node(target);

  auto both = [&](auto real_op, auto ref_op) {
    bool real_threw = false;
    bool ref_threw = false;
    try {
      real_op();
    } catch (const Error&) {
      real_threw = true;
    }
    try {
      ref_op();
    } catch (const RefError&) {
      ref_threw = true;
    }
    ASSERT_EQ(real_threw, ref_threw) << "models disagree on rejection";
  };

  switch (rng() % 6) {
    case 0: {  // evaluate to pass (needs artifacts for the invariant)
      both(
          [&] {
            tree.set_design(target, "module m; endmodule");
            tree.set_testbench(target, "module m_tb; endmodule");
            tree.set_status(target, NodeStatus::EvaluatedPass);
          },
          [&] {
            ref.set_design(target.value, "module m; endmodule");
            ref.set_testbench(target.value, "module m_tb; endmodule");
            ref.set_status(target.value, "evaluated_pass");
          });
      break;
    }
    case 1: {  // evaluate to fail
      both([&] { tree.set_status(target, NodeStatus::EvaluatedFail); },
           [&] { ref.set_status(target.value, "evaluated_fail"); });
      break;
    }
    case 2: {  // rethink
      both([&] { tree.set_status(target, NodeStatus::Rethought); },
           [&] { ref.set_status(target.value, "rethought"); });
      break;
    }
    case 3: {  // attach 2-4 children
      if (tree.node_count() + 4 > max_nodes) {
        break;
      }
      std::size_t fanout = 2 + rng() % 3;
      std::vector<ChildSeed> seeds;
      std::vector<std::pair<std::string, std::string>> ref_seeds;
      for (std::size_t i = 0; i < fanout; ++i) {
        std::string name = "m" + std::to_string(name_counter++);
        seeds.push_back({name, "spec of " + name});
        ref_seeds.push_back({name, "spec of " + name});
      }
      both([&] { tree.attach_children(target, seeds); },
           [&] { ref.attach_children(target.value, ref_seeds); });
      break;
    }
    case 4: {  // prune subtree
      both([&] { tree.prune_children(target); }, [&] { ref.prune_children(target.value); });
      break;
    }
    case 5: {  // remove with siblings
      if (!node.parent) {
        both([&] { tree.remove_with_siblings(target); },
             [&] { ref.remove_with_siblings(target.value); });
        break;
      }
      both([&] { tree.remove_with_siblings(target); },
           [&] { ref.remove_with_siblings(target.value); });
      break;
    }
  }
}

inline void run_tree_fuzz(int sequences, int steps_per_sequence, std::size_t max_nodes,
                          std::uint64_t seed) {
  for (int s = 0; s < sequences; ++s) {
    std::mt19937_64 rng(seed + static_cast<std::uint64_t>(s));
    BacktrackTree tree(fuzz_task());
    ReferenceTree ref("fuzz_top", "fuzz target");
    int name_counter = 0;

    for (int step = 0; step < steps_per_sequence; ++step) {
      fuzz_step(tree, ref, rng, name_counter, max_nodes);
      if (::testing::Test::HasFatalFailure()) {
        return;
      }
      expect_trees_equal(tree, ref);
      if (::testing::Test::HasFatalFailure()) {
        GTEST_FAIL() << "sequence " << s << " diverged at step " << step;
      }

      // Spot-check path_context agreement on one live node.
      auto ids = tree.preorder_ids();
      NodeId probe = ids[rng() % ids.size()];
      auto ctx = tree.path_context(probe);
      auto ref_ctx = ref.path_context(probe.value);
      ASSERT_EQ(ctx.ancestor_chain.size(), ref_ctx.ancestors.size());
      for (std::size_t i = 0; i < ref_ctx.ancestors.size(); ++i) {
        ASSERT_EQ(ctx.ancestor_chain[i].module_name,
                  ref.get(ref_ctx.ancestors[i]).module_name);
      }
      ASSERT_EQ(ctx.verified_sibling_summaries.size(), ref_ctx.verified_siblings.size());
      for (std::size_t i = 0; i < ref_ctx.verified_siblings.size(); ++i) {
        ASSERT_EQ(ctx.verified_sibling_summaries[i].module_name,
                  ref.get(ref_ctx.verified_siblings[i]).module_name);
      }
    }
  }
}

}  // namespace veribtot::testing
