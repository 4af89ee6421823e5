#pragma once

#include <filesystem>
#include <string>

#include "veribtot/controller.hpp"
#include "veribtot/hdl_verify.hpp"
#include "veribtot/llm_gateway.hpp"

namespace veribtot {

/// Everything the CLI needs for a run: strategy knobs, LLM backend
/// settings, toolchain binding, and harness defaults. Loaded from a
/// `key = value` file (one pair per line, `#` comments); CLI flags override.
struct AppConfig {
  RunConfig run;
  HttpConfig http;
  ToolchainConfig toolchain;

  // toolchain | mock_pass | mock_fail — the mock verifiers make replayed
  // benches reproducible on machines without an HDL simulator.
  std::string verifier_kind = "toolchain";

  std::filesystem::path prompts_dir;  // empty: compiled-in templates
  int trials = 1;
  int parallelism = 1;
};

AppConfig load_config_file(const std::filesystem::path& path);

/// Applies one `key = value` pair; throws ValidationError on unknown keys
/// or bad values.
void apply_config_entry(AppConfig& config, const std::string& key, const std::string& value);

}  // namespace veribtot
