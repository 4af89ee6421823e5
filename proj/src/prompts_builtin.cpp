#include <map>
#include <string>

// The compiled-in prompt templates. The same texts ship as editable files
// under assets/prompts/; a template dropped into the --prompts directory
// overrides its compiled-in copy at load time.

namespace veribtot::detail {

namespace {

const char* kSystem =
    R"(You are a senior digital design engineer. You write synthesizable Verilog-2001 RTL and rigorous self-checking testbenches. Follow the requested response format exactly: structured decisions go in a single fenced ```json block, and every piece of Verilog goes in its own fenced ```verilog block. Do not add code outside fences.)";

const char* kBranchPlan =
    R"(The module `{{module_name}}` failed verification and is too complex to fix in place. Decompose it into submodules.

Top-level requirement:
{{task_description}}

Design hierarchy above this module:
{{ancestor_chain}}

Requirement for `{{module_name}}`:
{{spec}}

Current (failing) design:
{{design}}

Latest failure diagnosis:
{{diagnosis}}

Propose between 2 and {{max_fanout}} submodules that together implement `{{module_name}}`. Keep the submodules loosely coupled so each can be designed and verified on its own. For every submodule give a precise requirement including its full port list and bit widths.

Respond with a single fenced ```json block:

```json
{
  "rationale": "<one short paragraph on the decomposition>",
  "children": [
    {"module_name": "<identifier>", "spec": "<complete requirement with port contract>"}
  ]
}
```)";

const char* kMaterializeChild =
    R"(You are designing the Verilog module `{{module_name}}`.

Top-level requirement:
{{task_description}}

Design hierarchy above this module:
{{ancestor_chain}}

Already-verified sibling modules:
{{sibling_summaries}}

Requirement for `{{module_name}}`:
{{spec}}

Produce two artifacts:
1. Complete synthesizable Verilog-2001 RTL declaring exactly one module named `{{module_name}}`.
2. A self-checking testbench module named `{{module_name}}_tb` that instantiates `{{module_name}}`, drives representative stimulus, checks outputs against expected values, and at the end prints exactly one result line:
   - `VERIBTOT_RESULT: PASS` when every check matched, or
   - `VERIBTOT_RESULT: FAIL mismatches=<n>` with the decimal mismatch count otherwise.

Respond with exactly two fenced ```verilog blocks: the RTL first, the testbench second.)";

const char* kMaterializeDesignOnly =
    R"(You are designing the Verilog module `{{module_name}}`.

Top-level requirement:
{{task_description}}

Design hierarchy above this module:
{{ancestor_chain}}

Already-verified sibling modules:
{{sibling_summaries}}

Requirement for `{{module_name}}`:
{{spec}}

Write complete synthesizable Verilog-2001 RTL declaring exactly one module named `{{module_name}}`.

Respond with exactly one fenced ```verilog block containing the RTL.)";

const char* kJudgeDesign =
    R"(Assess whether this RTL design is functionally correct with respect to its requirement and its testbench.

Module: `{{module_name}}`

Requirement:
{{spec}}

RTL design:
```verilog
{{design}}
```

Testbench:
```verilog
{{testbench}}
```

Walk through the testbench stimulus against the RTL behavior. Also judge whether the design problem itself is simple enough for a single module ("Simple") or complex enough that it should be split into submodules ("Complex").

Respond with a single fenced ```json block:

```json
{
  "passed": true | false,
  "complexity": "Simple" | "Complex",
  "diagnosis": "<empty when passed; otherwise a concrete explanation of the failure>"
}
```)";

const char* kReflectDesign =
    R"(Review this RTL design against its requirement. There is no testbench; reason about the code directly.

Module: `{{module_name}}`

Requirement:
{{spec}}

RTL design:
```verilog
{{design}}
```

Decide whether the design meets the requirement, and judge whether the design problem is simple enough for a single module ("Simple") or should be split into submodules ("Complex").

Respond with a single fenced ```json block:

```json
{
  "passed": true | false,
  "complexity": "Simple" | "Complex",
  "diagnosis": "<empty when passed; otherwise a concrete explanation of the failure>"
}
```)";

const char* kComplexityQuery =
    R"(Judge the intrinsic complexity of this design problem.

Module: `{{module_name}}`

Requirement:
{{spec}}

Current design:
{{design}}

Is this problem simple enough to implement and debug as a single module ("Simple"), or does it call for decomposition into submodules ("Complex")?

Respond with a single fenced ```json block:

```json
{"complexity": "Simple" | "Complex"}
```)";

const char* kRethinkLeaf =
    R"(The module `{{module_name}}` failed verification. Redesign it from scratch.

Top-level requirement:
{{task_description}}

Design hierarchy above this module:
{{ancestor_chain}}

Requirement for `{{module_name}}`:
{{spec}}

Failing design:
```verilog
{{design}}
```

Failure diagnosis:
{{diagnosis}}

Write a corrected implementation and a corrected self-checking testbench. The RTL must declare exactly one module named `{{module_name}}`. The testbench must be named `{{module_name}}_tb`, instantiate `{{module_name}}`, and print exactly one result line `VERIBTOT_RESULT: PASS` or `VERIBTOT_RESULT: FAIL mismatches=<n>`.

Respond with exactly two fenced ```verilog blocks: the RTL first, the testbench second.)";

const char* kRethinkLeafDesignOnly =
    R"(The module `{{module_name}}` was judged incorrect. Redesign it from scratch.

Top-level requirement:
{{task_description}}

Design hierarchy above this module:
{{ancestor_chain}}

Requirement for `{{module_name}}`:
{{spec}}

Failing design:
```verilog
{{design}}
```

Failure diagnosis:
{{diagnosis}}

Write a corrected implementation declaring exactly one module named `{{module_name}}`.

Respond with exactly one fenced ```verilog block containing the RTL.)";

const char* kRethinkIntegrate =
    R"(All submodules of `{{module_name}}` have passed verification. Rebuild `{{module_name}}` as an integration layer over them.

Top-level requirement:
{{task_description}}

Design hierarchy above this module:
{{ancestor_chain}}

Requirement for `{{module_name}}`:
{{spec}}

Verified submodules (instantiate every one of them by name; do not re-implement their logic):
{{children}}

Previous integration attempt and diagnosis (may be empty):
{{diagnosis}}

Write the integration RTL and a self-checking testbench. The RTL must declare exactly one module named `{{module_name}}` and must instantiate each verified submodule listed above. The testbench must be named `{{module_name}}_tb`, instantiate `{{module_name}}`, and print exactly one result line `VERIBTOT_RESULT: PASS` or `VERIBTOT_RESULT: FAIL mismatches=<n>`.

Respond with exactly two fenced ```verilog blocks: the RTL first, the testbench second.)";

const char* kRethinkIntegrateDesignOnly =
    R"(All submodules of `{{module_name}}` are considered correct. Rebuild `{{module_name}}` as an integration layer over them.

Top-level requirement:
{{task_description}}

Design hierarchy above this module:
{{ancestor_chain}}

Requirement for `{{module_name}}`:
{{spec}}

Submodules (instantiate every one of them by name; do not re-implement their logic):
{{children}}

Previous integration attempt and diagnosis (may be empty):
{{diagnosis}}

Write the integration RTL declaring exactly one module named `{{module_name}}`, instantiating each submodule listed above.

Respond with exactly one fenced ```verilog block containing the RTL.)";

const char* kBacktrackDecision =
    R"(The module `{{module_name}}` keeps failing verification after repair attempts. Decide how to revise the decomposition plan.

Top-level requirement:
{{task_description}}

Design hierarchy above this module:
{{ancestor_chain}}

Requirement for `{{module_name}}`:
{{spec}}

Failure history at this module:
{{failure_history}}

Two options:
- "rebranch_here": the division of `{{module_name}}` into submodules is at fault. Discard its entire subtree and decompose `{{module_name}}` again.
- "ascend": `{{module_name}}` itself is sound, but the parent's decomposition that created it is wrong. Remove this module and its siblings and reconsider the parent.

Respond with a single fenced ```json block:

```json
{
  "action": "rebranch_here" | "ascend",
  "rationale": "<one short paragraph>"
}
```)";

const char* kIoBaseline =
    R"(Write complete synthesizable Verilog-2001 RTL for the following requirement. The top module must be named `{{top_module}}`.

Requirement:
{{task_description}}

Respond with exactly one fenced ```verilog block containing all modules.)";

const char* kCotBaseline =
    R"(Write complete synthesizable Verilog-2001 RTL for the following requirement. The top module must be named `{{top_module}}`.

Requirement:
{{task_description}}

First reason step by step: interface, architecture, corner cases. Then give the final code.

End your answer with exactly one fenced ```verilog block containing all modules; the final code block is what will be compiled.)";

const char* kCotscVote =
    R"(Several candidate Verilog implementations were produced independently for this requirement.

Requirement:
{{task_description}}

Candidates:
{{candidates}}

Pick the candidate most likely to be functionally correct. Prefer the behavior that the majority of candidates agree on.

Respond with a single fenced ```json block:

```json
{"choice": <1-based candidate number>}
```)";

const char* kTotExpand =
    R"(You are exploring design alternatives for the following requirement (step {{step}} of {{depth}}). The top module must be named `{{top_module}}`.

Requirement:
{{task_description}}

Design candidate developed so far (may be empty at step 1):
{{parent_design}}

Propose one refined, complete candidate: full synthesizable Verilog-2001 RTL for the requirement, improving on the candidate above where it exists. Explore a distinct approach rather than repeating it verbatim.

Respond with exactly one fenced ```verilog block containing all modules.)";

const char* kTotScore =
    R"(Rate how likely this Verilog design is to be functionally correct for the requirement.

Requirement:
{{task_description}}

Design:
```verilog
{{design}}
```

Respond with a single fenced ```json block, score 0 (certainly wrong) to 10 (certainly correct):

```json
{"score": <integer 0-10>}
```)";

const char* kPolish =
    R"(Tidy the following assembled Verilog without changing any behavior: normalize formatting, keep every module definition and every port exactly as is.

```verilog
{{source}}
```

Respond with exactly one fenced ```verilog block containing the full cleaned-up source.)";

const char* kFormatReminder =
    R"(Your previous reply did not follow the required response format. Reply again, observing the format instructions exactly: structured fields in a single fenced ```json block and each Verilog artifact in its own fenced ```verilog block, with nothing outside the fences.)";

const char* kNameMismatchFix =
    R"(The RTL you produced does not declare exactly one module named `{{module_name}}`. Reply again with the same response format, making sure the design block declares exactly one module and that it is named `{{module_name}}`.)";

const char* kMissingInstantiationFix =
    R"(Your integration RTL fails to instantiate the following verified submodules: {{missing}}. Reply again with the same response format; the design must instantiate every verified submodule by name.)";

}  // namespace

const std::map<std::string, std::string, std::less<>>& builtin_templates() {
  static const std::map<std::string, std::string, std::less<>> kTemplates = {
      {"system", kSystem},
      {"branch_plan", kBranchPlan},
      {"materialize_child", kMaterializeChild},
      {"materialize_design_only", kMaterializeDesignOnly},
      {"judge_design", kJudgeDesign},
      {"reflect_design", kReflectDesign},
      {"complexity_query", kComplexityQuery},
      {"rethink_leaf", kRethinkLeaf},
      {"rethink_leaf_design_only", kRethinkLeafDesignOnly},
      {"rethink_integrate", kRethinkIntegrate},
      {"rethink_integrate_design_only", kRethinkIntegrateDesignOnly},
      {"backtrack_decision", kBacktrackDecision},
      {"io_baseline", kIoBaseline},
      {"cot_baseline", kCotBaseline},
      {"cotsc_vote", kCotscVote},
      {"tot_expand", kTotExpand},
      {"tot_score", kTotScore},
      {"polish", kPolish},
      {"format_reminder", kFormatReminder},
      {"name_mismatch_fix", kNameMismatchFix},
      {"missing_instantiation_fix", kMissingInstantiationFix},
  };
  return kTemplates;
}

}  // namespace veribtot::detail
