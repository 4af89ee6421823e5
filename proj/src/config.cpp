#include "veribtot/config.hpp"

#include <fstream>

#include "veribtot/errors.hpp"

namespace veribtot {

namespace {

std::string trim(const std::string& text) {
  auto begin = text.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) {
    return "";
  }
  auto end = text.find_last_not_of(" \t\r\n");
  return text.substr(begin, end - begin + 1);
}

int to_int(const std::string& key, const std::string& value) {
  try {
    return std::stoi(value);
  } catch (const std::exception&) {
    throw ValidationError("config key '" + key + "' needs an integer, got '" + value + "'");
  }
}

double to_double(const std::string& key, const std::string& value) {
  try {
    return std::stod(value);
  } catch (const std::exception&) {
    throw ValidationError("config key '" + key + "' needs a number, got '" + value + "'");
  }
}

}  // namespace

void apply_config_entry(AppConfig& config, const std::string& key, const std::string& value) {
  if (key == "paradigm") {
    config.run.paradigm = paradigm_from_string(value);
  } else if (key == "max_depth") {
    config.run.max_depth = to_int(key, value);
  } else if (key == "rethink_budget") {
    config.run.rethink_budget = to_int(key, value);
  } else if (key == "backtrack_budget") {
    config.run.backtrack_budget = to_int(key, value);
  } else if (key == "llm_call_budget") {
    config.run.llm_call_budget = to_int(key, value);
  } else if (key == "max_fanout") {
    config.run.max_fanout = to_int(key, value);
  } else if (key == "eval_mode") {
    config.run.eval_mode = eval_mode_from_string(value);
  } else if (key == "oracle_tb_policy") {
    config.run.oracle_tb_policy = oracle_tb_policy_from_string(value);
  } else if (key == "temperature") {
    config.run.temperature = to_double(key, value);
  } else if (key == "max_output_tokens") {
    config.run.max_output_tokens = to_int(key, value);
  } else if (key == "polish_final") {
    config.run.polish_final = (value == "true" || value == "1");
  } else if (key == "cotsc_chains") {
    config.run.cotsc_chains = to_int(key, value);
  } else if (key == "tot_width") {
    config.run.tot_width = to_int(key, value);
  } else if (key == "tot_depth") {
    config.run.tot_depth = to_int(key, value);
  } else if (key == "endpoint") {
    config.http.endpoint = value;
  } else if (key == "model") {
    config.http.model = value;
  } else if (key == "api_key_env") {
    config.http.api_key_env = value;
  } else if (key == "max_retries") {
    config.http.max_retries = to_int(key, value);
  } else if (key == "request_timeout_ms") {
    config.http.request_timeout = std::chrono::milliseconds(to_int(key, value));
  } else if (key == "compile_cmd") {
    config.toolchain.compile_cmd = value;
  } else if (key == "run_cmd") {
    config.toolchain.run_cmd = value;
  } else if (key == "sim_timeout_ms") {
    config.toolchain.timeout = std::chrono::milliseconds(to_int(key, value));
  } else if (key == "workdir_root") {
    config.toolchain.workdir_root = value;
  } else if (key == "keep_artifacts") {
    config.toolchain.keep_artifacts = (value == "true" || value == "1");
  } else if (key == "verifier") {
    if (value != "toolchain" && value != "mock_pass" && value != "mock_fail") {
      throw ValidationError("verifier must be toolchain, mock_pass or mock_fail");
    }
    config.verifier_kind = value;
  } else if (key == "prompts_dir") {
    config.prompts_dir = value;
  } else if (key == "trials") {
    config.trials = to_int(key, value);
  } else if (key == "parallelism") {
    config.parallelism = to_int(key, value);
  } else {
    throw ValidationError("unknown config key: '" + key + "'");
  }
}

AppConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ValidationError("cannot open config file: " + path.string());
  }
  AppConfig config;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) {
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ValidationError("config line " + std::to_string(line_no) + " is not 'key = value'");
    }
    apply_config_entry(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return config;
}

}  // namespace veribtot
