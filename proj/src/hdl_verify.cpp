#include "veribtot/hdl_verify.hpp"

#include <atomic>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "subprocess.hpp"
#include "veribtot/errors.hpp"

namespace veribtot {

namespace {

std::vector<std::string> split_ws(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string token;
  while (in >> token) {
    out.push_back(token);
  }
  return out;
}

// Expands {inputs}/{out}/{binary} at token granularity; {inputs} may stand
// for several files.
std::vector<std::string> expand_template(const std::string& cmd_template,
                                         const std::vector<std::string>& inputs,
                                         const std::string& out,
                                         const std::string& binary) {
  std::vector<std::string> argv;
  for (const auto& token : split_ws(cmd_template)) {
    if (token == "{inputs}") {
      argv.insert(argv.end(), inputs.begin(), inputs.end());
    } else if (token == "{out}") {
      argv.push_back(out);
    } else if (token == "{binary}") {
      argv.push_back(binary);
    } else {
      argv.push_back(token);
    }
  }
  return argv;
}

std::atomic<std::uint64_t> g_workdir_counter{0};

// Source files are newline-terminated on disk regardless of input.
void write_source(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
  if (text.empty() || text.back() != '\n') {
    out << '\n';
  }
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t hash = 1469598103934665603ull;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

}  // namespace

std::pair<std::optional<bool>, std::optional<long>> classify_log(const std::string& log) {
  bool saw_pass = false;
  bool saw_fail = false;
  std::optional<long> mismatches;

  std::istringstream in(log);
  std::string line;
  while (std::getline(in, line)) {
    if (line.find(kResultPassLine) != std::string::npos) {
      saw_pass = true;
    }
    auto fail_pos = line.find(kResultFailPrefix);
    if (fail_pos != std::string::npos) {
      saw_fail = true;
      auto key = line.find("mismatches=", fail_pos);
      if (key != std::string::npos) {
        try {
          long value = std::stol(line.substr(key + 11));
          // a FAIL with count 0 contradicts itself; keep the count unknown
          if (value > 0) {
            mismatches = value;
          }
        } catch (const std::exception&) {
          // malformed count: leave unknown
        }
      }
    }
  }

  if (saw_fail) {
    return {false, mismatches};
  }
  if (saw_pass) {
    return {true, 0};
  }
  return {std::nullopt, std::nullopt};
}

void ToolchainConfig::validate() const {
  if (compile_cmd.find("{inputs}") == std::string::npos ||
      compile_cmd.find("{out}") == std::string::npos) {
    throw ValidationError("compile_cmd must contain {inputs} and {out}");
  }
  if (run_cmd.find("{binary}") == std::string::npos) {
    throw ValidationError("run_cmd must contain {binary}");
  }
  if (timeout.count() <= 0) {
    throw ValidationError("toolchain timeout must be positive");
  }
}

ToolchainVerifier::ToolchainVerifier(ToolchainConfig config) : config_(std::move(config)) {
  config_.validate();
}

bool ToolchainVerifier::available(const ToolchainConfig& config) {
  auto compile_argv = split_ws(config.compile_cmd);
  auto run_argv = split_ws(config.run_cmd);
  return !compile_argv.empty() && !run_argv.empty() &&
         detail::command_on_path(compile_argv[0]) && detail::command_on_path(run_argv[0]);
}

std::filesystem::path ToolchainVerifier::make_workdir() {
  auto id = g_workdir_counter.fetch_add(1);
  auto dir = config_.workdir_root /
             ("veribtot-sim-" + std::to_string(::getpid()) + "-" + std::to_string(id));
  std::filesystem::create_directories(dir);
  return dir;
}

SimOutcome ToolchainVerifier::syntax_check(const std::vector<std::string>& sources) {
  if (!available(config_)) {
    throw ToolchainUnavailableError("toolchain not found: " + config_.compile_cmd);
  }
  SimOutcome outcome;
  auto workdir = make_workdir();
  std::vector<std::string> files;
  for (std::size_t i = 0; i < sources.size(); ++i) {
    std::string name = "src_" + std::to_string(i) + ".v";
    write_source(workdir / name, sources[i]);
    files.push_back(name);
  }

  auto argv = expand_template(config_.compile_cmd, files, "sim.out", "sim.out");
  auto exec = detail::run_command(argv, workdir, config_.timeout);
  outcome.log = exec.output;
  outcome.duration = exec.duration;
  if (exec.timed_out) {
    outcome.syntax_ok = false;
    outcome.log += "\n[veribtot] compile timed out after " +
                   std::to_string(config_.timeout.count()) + " ms\n";
  } else {
    outcome.syntax_ok = exec.exit_code == 0;
  }

  if (!config_.keep_artifacts) {
    std::error_code ec;
    std::filesystem::remove_all(workdir, ec);
  }
  return outcome;
}

SimOutcome ToolchainVerifier::run_testbench(const std::vector<std::string>& design_sources,
                                            const std::string& testbench) {
  if (!available(config_)) {
    throw ToolchainUnavailableError("toolchain not found: " + config_.compile_cmd);
  }
  SimOutcome outcome;
  auto workdir = make_workdir();
  std::vector<std::string> files;
  for (std::size_t i = 0; i < design_sources.size(); ++i) {
    std::string name = "design_" + std::to_string(i) + ".v";
    write_source(workdir / name, design_sources[i]);
    files.push_back(name);
  }
  write_source(workdir / "tb.v", testbench);
  files.push_back("tb.v");

  auto compile_argv = expand_template(config_.compile_cmd, files, "sim.out", "sim.out");
  auto compile = detail::run_command(compile_argv, workdir, config_.timeout);
  outcome.log = compile.output;
  outcome.duration = compile.duration;

  if (compile.timed_out) {
    outcome.syntax_ok = false;
    outcome.log += "\n[veribtot] compile timed out after " +
                   std::to_string(config_.timeout.count()) + " ms\n";
  } else {
    outcome.syntax_ok = compile.exit_code == 0;
  }

  if (outcome.syntax_ok) {
    auto run_argv = expand_template(config_.run_cmd, files, "sim.out", "sim.out");
    auto run = detail::run_command(run_argv, workdir, config_.timeout);
    outcome.log += run.output;
    outcome.duration += run.duration;
    if (run.timed_out) {
      outcome.functional_pass = false;
      outcome.log += "\n[veribtot] simulation timed out after " +
                     std::to_string(config_.timeout.count()) + " ms\n";
    } else {
      auto [pass, mismatches] = classify_log(run.output);
      outcome.functional_pass = pass;
      outcome.mismatch_count = mismatches;
    }
  }

  if (!config_.keep_artifacts) {
    std::error_code ec;
    std::filesystem::remove_all(workdir, ec);
  }
  return outcome;
}

// ---------------------------------------------------------------------------
// MockVerifier

MockVerifier::MockVerifier(bool default_pass) : default_pass_(default_pass) {}

std::string MockVerifier::digest_sources(const std::vector<std::string>& sources) {
  std::string joined;
  for (const auto& s : sources) {
    joined += s;
    joined += '\x1e';
  }
  return fnv1a_hex(joined);
}

void MockVerifier::script(const std::string& digest, SimOutcome outcome) {
  script_[digest] = std::move(outcome);
}

void MockVerifier::script_sources(const std::vector<std::string>& sources, SimOutcome outcome) {
  script(digest_sources(sources), std::move(outcome));
}

SimOutcome MockVerifier::pass_outcome() {
  SimOutcome o;
  o.syntax_ok = true;
  o.functional_pass = true;
  o.mismatch_count = 0;
  o.log = std::string(kResultPassLine) + "\n";
  return o;
}

SimOutcome MockVerifier::fail_outcome(long mismatches) {
  SimOutcome o;
  o.syntax_ok = true;
  o.functional_pass = false;
  o.mismatch_count = mismatches;
  o.log = std::string(kResultFailPrefix) + " mismatches=" + std::to_string(mismatches) + "\n";
  return o;
}

SimOutcome MockVerifier::syntax_error_outcome(const std::string& message) {
  SimOutcome o;
  o.syntax_ok = false;
  o.log = message;
  return o;
}

SimOutcome MockVerifier::lookup(const std::vector<std::string>& sources) const {
  auto it = script_.find(digest_sources(sources));
  if (it != script_.end()) {
    return it->second;
  }
  return default_pass_ ? pass_outcome() : fail_outcome(1);
}

SimOutcome MockVerifier::syntax_check(const std::vector<std::string>& sources) {
  SimOutcome o = lookup(sources);
  o.functional_pass.reset();
  o.mismatch_count.reset();
  return o;
}

SimOutcome MockVerifier::run_testbench(const std::vector<std::string>& design_sources,
                                       const std::string& testbench) {
  std::vector<std::string> all = design_sources;
  all.push_back(testbench);
  return lookup(all);
}

}  // namespace veribtot
