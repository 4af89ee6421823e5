#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace veribtot {

/// Result sentinel contract. A testbench must print exactly one line
/// `VERIBTOT_RESULT: PASS` or `VERIBTOT_RESULT: FAIL mismatches=<n>`.
inline constexpr const char* kResultPassLine = "VERIBTOT_RESULT: PASS";
inline constexpr const char* kResultFailPrefix = "VERIBTOT_RESULT: FAIL";

struct SimOutcome {
  bool syntax_ok = false;
  std::optional<bool> functional_pass;     // defined only when syntax_ok
  std::optional<long> mismatch_count;      // absent = unknown
  std::string log;
  std::chrono::milliseconds duration{0};
};

/// Sentinel classification of a simulation log. Total and deterministic:
/// pass requires a PASS line and no FAIL line; neither sentinel present
/// leaves both fields unset.
std::pair<std::optional<bool>, std::optional<long>> classify_log(const std::string& log);

struct ToolchainConfig {
  // {inputs} expands to the source files, {out} to the simulation binary,
  // {binary} to the compiled artifact in the run step.
  std::string compile_cmd = "iverilog -g2012 -o {out} {inputs}";
  std::string run_cmd = "vvp {binary}";
  std::chrono::milliseconds timeout{std::chrono::seconds(10)};
  std::filesystem::path workdir_root = std::filesystem::temp_directory_path();
  bool keep_artifacts = false;

  void validate() const;
};

class Verifier {
public:
  virtual ~Verifier() = default;
  virtual SimOutcome syntax_check(const std::vector<std::string>& sources) = 0;
  virtual SimOutcome run_testbench(const std::vector<std::string>& design_sources,
                                   const std::string& testbench) = 0;
};

/// Runs an external compile-then-simulate toolchain in an isolated workdir
/// per invocation. Safe for concurrent use.
class ToolchainVerifier : public Verifier {
public:
  explicit ToolchainVerifier(ToolchainConfig config);

  SimOutcome syntax_check(const std::vector<std::string>& sources) override;
  SimOutcome run_testbench(const std::vector<std::string>& design_sources,
                           const std::string& testbench) override;

  /// True when the compile and run binaries resolve on PATH.
  static bool available(const ToolchainConfig& config);

private:
  std::filesystem::path make_workdir();

  ToolchainConfig config_;
};

/// Table-driven verifier for tests: outcomes are scripted per source digest.
class MockVerifier : public Verifier {
public:
  explicit MockVerifier(bool default_pass = false);

  /// Digest used for script keys; order-sensitive over all sources.
  static std::string digest_sources(const std::vector<std::string>& sources);

  void script(const std::string& digest, SimOutcome outcome);
  void script_sources(const std::vector<std::string>& sources, SimOutcome outcome);

  SimOutcome syntax_check(const std::vector<std::string>& sources) override;
  SimOutcome run_testbench(const std::vector<std::string>& design_sources,
                           const std::string& testbench) override;

  static SimOutcome pass_outcome();
  static SimOutcome fail_outcome(long mismatches);
  static SimOutcome syntax_error_outcome(const std::string& message);

private:
  SimOutcome lookup(const std::vector<std::string>& sources) const;

  std::map<std::string, SimOutcome> script_;
  bool default_pass_;
};

}  // namespace veribtot
