#include "veribtot/bench.hpp"

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <ctime>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "veribtot/errors.hpp"

namespace veribtot {

using nlohmann::json;

DesignTask BenchCase::to_task() const {
  DesignTask task;
  task.description = spec;
  task.oracle_testbench = oracle_testbench;
  task.top_module_name = top_module;
  task.timeout = timeout;
  return task;
}

// ---------------------------------------------------------------------------
// Suite loading

namespace {

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

BenchCase load_case_dir(const std::filesystem::path& dir) {
  const std::string name = dir.filename().string();
  auto spec_path = dir / "spec.md";
  auto tb_path = dir / "testbench.v";
  auto meta_path = dir / "meta.json";
  if (!std::filesystem::exists(spec_path)) {
    throw SuiteFormatError("case '" + name + "' has no spec.md");
  }
  if (!std::filesystem::exists(tb_path)) {
    throw SuiteFormatError("case '" + name + "' has no testbench.v");
  }
  if (!std::filesystem::exists(meta_path)) {
    throw SuiteFormatError("case '" + name + "' has no meta.json");
  }

  BenchCase c;
  c.spec = slurp(spec_path);
  c.oracle_testbench = slurp(tb_path);
  json meta;
  try {
    meta = json::parse(slurp(meta_path));
  } catch (const json::exception& ex) {
    throw SuiteFormatError("case '" + name + "': bad meta.json: " + ex.what());
  }
  c.name = meta.value("name", name);
  c.top_module = meta.value("top_module", "");
  c.timeout = std::chrono::milliseconds(meta.value("timeout_ms", 10000));

  if (c.name.empty() || c.spec.empty() || c.oracle_testbench.empty() || c.top_module.empty()) {
    throw SuiteFormatError("case '" + name + "' has empty fields");
  }
  if (c.timeout.count() <= 0) {
    throw SuiteFormatError("case '" + name + "' has a non-positive timeout");
  }
  return c;
}

}  // namespace

BenchCase load_case(const std::filesystem::path& case_dir) {
  return load_case_dir(case_dir);
}

std::vector<BenchCase> load_suite(const std::filesystem::path& path) {
  if (!std::filesystem::is_directory(path)) {
    throw SuiteFormatError("suite path is not a directory: " + path.string());
  }

  std::vector<std::string> order;
  auto manifest_path = path / "manifest.json";
  if (std::filesystem::exists(manifest_path)) {
    json manifest;
    try {
      manifest = json::parse(slurp(manifest_path));
    } catch (const json::exception& ex) {
      throw SuiteFormatError("bad manifest.json: " + std::string(ex.what()));
    }
    if (!manifest.contains("cases") || !manifest["cases"].is_array()) {
      throw SuiteFormatError("manifest.json needs a 'cases' array");
    }
    for (const auto& entry : manifest["cases"]) {
      order.push_back(entry.get<std::string>());
    }
  } else {
    for (const auto& entry : std::filesystem::directory_iterator(path)) {
      if (entry.is_directory()) {
        order.push_back(entry.path().filename().string());
      }
    }
    std::sort(order.begin(), order.end());
  }

  std::vector<BenchCase> suite;
  std::set<std::string> names;
  for (const auto& dir_name : order) {
    auto c = load_case_dir(path / dir_name);
    if (!names.insert(c.name).second) {
      throw SuiteFormatError("duplicate case name '" + c.name + "'");
    }
    suite.push_back(std::move(c));
  }
  return suite;
}

// ---------------------------------------------------------------------------
// pass@k

double pass_at_k(int n, int c, int k) {
  if (n < 1 || c < 0 || c > n || k < 1 || k > n) {
    throw ValidationError("pass_at_k needs 0 <= c <= n and 1 <= k <= n");
  }
  if (n - c < k) {
    return 1.0;
  }
  if (k == 1) {
    return static_cast<double>(c) / n;  // exact, not a rounded product
  }
  // 1 - prod_{i=n-c+1..n} (1 - k/i), the overflow-safe form of
  // 1 - C(n-c,k)/C(n,k).
  double keep = 1.0;
  for (int i = n - c + 1; i <= n; ++i) {
    keep *= 1.0 - static_cast<double>(k) / i;
  }
  return 1.0 - keep;
}

// ---------------------------------------------------------------------------
// Records

namespace {

constexpr const char* kRecordsSchema = "veribtot-records";
constexpr int kRecordsVersion = 1;

std::string utc_now_iso8601() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string record_key(const std::string& case_name, Paradigm paradigm, int trial) {
  return case_name + "|" + to_string(paradigm) + "|" + std::to_string(trial);
}

}  // namespace

std::string transcript_file_name(const std::string& case_name, Paradigm paradigm, int trial) {
  return case_name + "__" + to_string(paradigm) + "__" + std::to_string(trial) + ".jsonl";
}

json to_json(const TrialRecord& r) {
  return json{{"case", r.case_name},
              {"paradigm", to_string(r.paradigm)},
              {"trial", r.trial_index},
              {"syntax_ok", r.syntax_ok},
              {"functional_ok", r.functional_ok},
              {"prompt_tokens", r.prompt_tokens},
              {"completion_tokens", r.completion_tokens},
              {"llm_calls", r.llm_calls},
              {"wall_time_ms", r.wall_time.count()},
              {"terminated_by", to_string(r.terminated_by)},
              {"timestamp", r.timestamp}};
}

TrialRecord trial_record_from_json(const json& j) {
  TrialRecord r;
  r.case_name = j.at("case").get<std::string>();
  r.paradigm = paradigm_from_string(j.at("paradigm").get<std::string>());
  r.trial_index = j.at("trial").get<int>();
  r.syntax_ok = j.at("syntax_ok").get<bool>();
  r.functional_ok = j.at("functional_ok").get<bool>();
  r.prompt_tokens = j.at("prompt_tokens").get<long>();
  r.completion_tokens = j.at("completion_tokens").get<long>();
  r.llm_calls = j.at("llm_calls").get<int>();
  r.wall_time = std::chrono::milliseconds(j.value("wall_time_ms", 0L));
  std::string terminated = j.at("terminated_by").get<std::string>();
  if (terminated == "success") {
    r.terminated_by = TerminatedBy::Success;
  } else if (terminated == "budget_exhausted") {
    r.terminated_by = TerminatedBy::BudgetExhausted;
  } else {
    r.terminated_by = TerminatedBy::OperatorFailure;
  }
  r.timestamp = j.value("timestamp", "");
  if (r.functional_ok && !r.syntax_ok) {
    throw ValidationError("record for '" + r.case_name + "' has functional_ok without syntax_ok");
  }
  return r;
}

std::vector<TrialRecord> load_records(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ValidationError("cannot open records file: " + path.string());
  }
  std::vector<TrialRecord> records;
  std::string line;
  bool saw_header = false;
  while (std::getline(in, line)) {
    if (line.empty()) {
      continue;
    }
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& ex) {
      throw ValidationError("bad records line: " + std::string(ex.what()));
    }
    if (!saw_header) {
      if (j.value("schema", "") != kRecordsSchema || j.value("version", 0) != kRecordsVersion) {
        throw ValidationError("not a records file: " + path.string());
      }
      saw_header = true;
      continue;
    }
    records.push_back(trial_record_from_json(j));
  }
  if (!saw_header) {
    throw ValidationError("empty records file: " + path.string());
  }
  return records;
}

void save_records(const std::filesystem::path& path, const std::vector<TrialRecord>& records) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw ValidationError("cannot write records file: " + path.string());
  }
  out << json{{"schema", kRecordsSchema}, {"version", kRecordsVersion}}.dump() << "\n";
  for (const auto& r : records) {
    out << to_json(r).dump() << "\n";
  }
}

// ---------------------------------------------------------------------------
// Suite execution

namespace {

struct TrialKey {
  std::size_t case_index;
  Paradigm paradigm;
  int trial;
};

// Appends records to the sink in task order even when workers finish out of
// order, keeping the file deterministic under parallelism.
class OrderedSink {
public:
  OrderedSink(std::optional<std::filesystem::path> path, bool file_exists)
      : path_(std::move(path)) {
    if (path_ && !file_exists) {
      std::ofstream out(*path_, std::ios::trunc);
      out << json{{"schema", kRecordsSchema}, {"version", kRecordsVersion}}.dump() << "\n";
    }
  }

  void deliver(std::size_t index, const TrialRecord& record, bool already_on_disk) {
    std::lock_guard<std::mutex> lock(mutex_);
    pending_[index] = {record, already_on_disk};
    while (!pending_.empty() && pending_.begin()->first == next_) {
      auto& [rec, on_disk] = pending_.begin()->second;
      if (path_ && !on_disk) {
        std::ofstream out(*path_, std::ios::app);
        out << to_json(rec).dump() << "\n";
      }
      ordered_.push_back(std::move(rec));
      pending_.erase(pending_.begin());
      ++next_;
    }
  }

  std::vector<TrialRecord> take() { return std::move(ordered_); }

private:
  std::optional<std::filesystem::path> path_;
  std::mutex mutex_;
  std::map<std::size_t, std::pair<TrialRecord, bool>> pending_;
  std::size_t next_ = 0;
  std::vector<TrialRecord> ordered_;
};

}  // namespace

std::vector<TrialRecord> run_suite(const std::vector<BenchCase>& suite,
                                   const std::vector<Paradigm>& paradigms, int n_trials,
                                   const RunConfig& cfg, int parallelism,
                                   const SuiteRunEnv& env) {
  if (suite.empty()) {
    throw ValidationError("run_suite needs a non-empty suite");
  }
  if (paradigms.empty() || n_trials < 1 || parallelism < 1) {
    throw ValidationError("run_suite needs paradigms, n_trials >= 1 and parallelism >= 1");
  }
  if (!env.backend_factory || !env.verifier_factory || !env.prompts) {
    throw ValidationError("run_suite needs a backend factory, a verifier factory and prompts");
  }

  // Resume: anything already in the sink is carried over, not re-run.
  std::map<std::string, TrialRecord> completed;
  bool sink_exists = env.records_path && std::filesystem::exists(*env.records_path);
  if (sink_exists) {
    for (auto& r : load_records(*env.records_path)) {
      completed[record_key(r.case_name, r.paradigm, r.trial_index)] = r;
    }
  }

  std::vector<TrialKey> tasks;
  for (std::size_t ci = 0; ci < suite.size(); ++ci) {
    for (Paradigm p : paradigms) {
      for (int t = 0; t < n_trials; ++t) {
        tasks.push_back({ci, p, t});
      }
    }
  }

  OrderedSink sink(env.records_path, sink_exists);
  std::atomic<std::size_t> cursor{0};

  auto worker = [&]() {
    while (true) {
      std::size_t index = cursor.fetch_add(1);
      if (index >= tasks.size()) {
        return;
      }
      const TrialKey& key = tasks[index];
      const BenchCase& bench_case = suite[key.case_index];

      auto done = completed.find(record_key(bench_case.name, key.paradigm, key.trial));
      if (done != completed.end()) {
        sink.deliver(index, done->second, /*already_on_disk=*/true);
        continue;
      }

      TrialRecord record;
      record.case_name = bench_case.name;
      record.paradigm = key.paradigm;
      record.trial_index = key.trial;
      record.timestamp = utc_now_iso8601();

      auto start = std::chrono::steady_clock::now();
      try {
        RunConfig trial_cfg = cfg;
        trial_cfg.paradigm = key.paradigm;
        auto backend = env.backend_factory(bench_case, key.paradigm, key.trial);
        auto verifier = env.verifier_factory(bench_case);
        if (!verifier) {
          throw ValidationError("verifier_factory returned nothing");
        }
        RunResult result = run_task(bench_case.to_task(), backend, *verifier, trial_cfg,
                                    *env.prompts);
        record.syntax_ok = result.syntax_ok;
        record.functional_ok = result.functional_ok;
        auto totals = result.ledger.totals();
        record.prompt_tokens = totals.prompt_tokens;
        record.completion_tokens = totals.completion_tokens;
        record.llm_calls = result.llm_calls;
        record.terminated_by = result.terminated_by;
        if (env.on_result) {
          env.on_result(bench_case, key.paradigm, key.trial, result);
        }
      } catch (const std::exception&) {
        record.terminated_by = TerminatedBy::OperatorFailure;  // recorded, not raised
      }
      record.wall_time = std::chrono::duration_cast<std::chrono::milliseconds>(
          std::chrono::steady_clock::now() - start);
      sink.deliver(index, record, /*already_on_disk=*/false);
    }
  };

  std::vector<std::thread> pool;
  int workers = std::min<int>(parallelism, static_cast<int>(tasks.size()));
  pool.reserve(workers);
  for (int i = 0; i < workers; ++i) {
    pool.emplace_back(worker);
  }
  for (auto& t : pool) {
    t.join();
  }
  return sink.take();
}

// ---------------------------------------------------------------------------
// Summaries and reports

SummaryTable summarize(const std::vector<TrialRecord>& records) {
  SummaryTable table;

  // case-major grouping, first-appearance case order, paradigm enum order
  std::vector<std::string> case_order;
  std::map<std::string, std::map<Paradigm, std::vector<const TrialRecord*>>> groups;
  for (const auto& r : records) {
    if (!groups.count(r.case_name)) {
      case_order.push_back(r.case_name);
    }
    groups[r.case_name][r.paradigm].push_back(&r);
  }

  std::set<int> trial_counts;
  std::map<Paradigm, std::vector<const CaseSummary*>> by_paradigm;

  for (const auto& case_name : case_order) {
    for (const auto& [paradigm, trials] : groups[case_name]) {
      CaseSummary s;
      s.case_name = case_name;
      s.paradigm = paradigm;
      s.n_trials = static_cast<int>(trials.size());
      trial_counts.insert(s.n_trials);
      long prompt = 0;
      long completion = 0;
      for (const auto* r : trials) {
        s.n_syntax_pass += r->syntax_ok ? 1 : 0;
        s.n_functional_pass += r->functional_ok ? 1 : 0;
        prompt += r->prompt_tokens;
        completion += r->completion_tokens;
      }
      s.pass_at_1 = pass_at_k(s.n_trials, s.n_functional_pass, 1);
      s.pass_at_5 = pass_at_k(s.n_trials, s.n_functional_pass, std::min(5, s.n_trials));
      s.mean_prompt_thousands = static_cast<double>(prompt) / s.n_trials / 1000.0;
      s.mean_completion_thousands = static_cast<double>(completion) / s.n_trials / 1000.0;
      s.mean_tokens_thousands = s.mean_prompt_thousands + s.mean_completion_thousands;
      table.per_case.push_back(s);
    }
  }
  table.mixed_trial_counts = trial_counts.size() > 1;

  for (const auto& s : table.per_case) {
    by_paradigm[s.paradigm].push_back(&s);
  }
  for (const auto& [paradigm, cases] : by_paradigm) {
    ParadigmSummary p;
    p.paradigm = paradigm;
    p.n_cases = static_cast<int>(cases.size());
    for (const auto* s : cases) {
      p.mean_pass_at_1 += s->pass_at_1;
      p.mean_pass_at_5 += s->pass_at_5;
      p.mean_tokens_thousands += s->mean_tokens_thousands;
      p.mean_prompt_thousands += s->mean_prompt_thousands;
      p.mean_completion_thousands += s->mean_completion_thousands;
    }
    p.mean_pass_at_1 /= p.n_cases;
    p.mean_pass_at_5 /= p.n_cases;
    p.mean_tokens_thousands /= p.n_cases;
    p.mean_prompt_thousands /= p.n_cases;
    p.mean_completion_thousands /= p.n_cases;
    table.per_paradigm.push_back(p);
  }
  return table;
}

ReportFormat report_format_from_string(const std::string& text) {
  if (text == "json") return ReportFormat::Json;
  if (text == "csv") return ReportFormat::Csv;
  if (text == "markdown" || text == "md") return ReportFormat::Markdown;
  throw ValidationError("unknown report format: '" + text + "'");
}

namespace {

std::string fixed2(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", value);
  return buf;
}

std::vector<Paradigm> paradigm_columns(const SummaryTable& table) {
  std::vector<Paradigm> cols;
  for (const auto& p : table.per_paradigm) {
    cols.push_back(p.paradigm);
  }
  return cols;
}

std::string emit_json(const SummaryTable& table) {
  json j;
  j["schema"] = "veribtot-report";
  j["version"] = 1;
  j["mixed_trial_counts"] = table.mixed_trial_counts;
  auto cases = json::array();
  for (const auto& s : table.per_case) {
    cases.push_back({{"case", s.case_name},
                     {"paradigm", to_string(s.paradigm)},
                     {"n_trials", s.n_trials},
                     {"n_syntax_pass", s.n_syntax_pass},
                     {"n_functional_pass", s.n_functional_pass},
                     {"pass_at_1", s.pass_at_1},
                     {"pass_at_5", s.pass_at_5},
                     {"mean_tokens_thousands", s.mean_tokens_thousands},
                     {"mean_prompt_thousands", s.mean_prompt_thousands},
                     {"mean_completion_thousands", s.mean_completion_thousands}});
  }
  j["cases"] = std::move(cases);
  auto paradigms = json::array();
  for (const auto& p : table.per_paradigm) {
    paradigms.push_back({{"paradigm", to_string(p.paradigm)},
                         {"n_cases", p.n_cases},
                         {"mean_pass_at_1", p.mean_pass_at_1},
                         {"mean_pass_at_5", p.mean_pass_at_5},
                         {"mean_tokens_thousands", p.mean_tokens_thousands},
                         {"mean_prompt_thousands", p.mean_prompt_thousands},
                         {"mean_completion_thousands", p.mean_completion_thousands}});
  }
  j["paradigms"] = std::move(paradigms);
  return j.dump(2) + "\n";
}

std::string emit_csv(const SummaryTable& table) {
  std::string out =
      "case,paradigm,n_trials,n_syntax_pass,n_functional_pass,pass_at_1,pass_at_5,"
      "tokens_thousands,prompt_thousands,completion_thousands\n";
  for (const auto& s : table.per_case) {
    out += s.case_name;
    out += ",";
    out += to_string(s.paradigm);
    out += "," + std::to_string(s.n_trials);
    out += "," + std::to_string(s.n_syntax_pass);
    out += "," + std::to_string(s.n_functional_pass);
    out += "," + fixed2(s.pass_at_1);
    out += "," + fixed2(s.pass_at_5);
    out += "," + fixed2(s.mean_tokens_thousands);
    out += "," + fixed2(s.mean_prompt_thousands);
    out += "," + fixed2(s.mean_completion_thousands);
    out += "\n";
  }
  return out;
}

std::string emit_markdown(const SummaryTable& table) {
  auto cols = paradigm_columns(table);

  std::map<std::string, std::map<Paradigm, const CaseSummary*>> cells;
  std::vector<std::string> case_order;
  for (const auto& s : table.per_case) {
    if (!cells.count(s.case_name)) {
      case_order.push_back(s.case_name);
    }
    cells[s.case_name][s.paradigm] = &s;
  }

  std::string out = "# Per-case results (Syn. / Fun. counts, Tok. in thousands)\n\n";
  if (table.mixed_trial_counts) {
    out += "_Note: trial counts differ between cases; counts are per case._\n\n";
  }

  out += "| Design |";
  for (Paradigm p : cols) {
    out += std::string(" ") + to_string(p) + " Syn. | " + to_string(p) + " Fun. | " +
           to_string(p) + " Tok. |";
  }
  out += "\n|---|";
  for (std::size_t i = 0; i < cols.size(); ++i) {
    out += "---|---|---|";
  }
  out += "\n";
  for (const auto& case_name : case_order) {
    out += "| " + case_name + " |";
    for (Paradigm p : cols) {
      auto it = cells[case_name].find(p);
      if (it == cells[case_name].end()) {
        out += " - | - | - |";
      } else {
        const auto* s = it->second;
        out += " " + std::to_string(s->n_syntax_pass) + " | " +
               std::to_string(s->n_functional_pass) + " | " + fixed2(s->mean_tokens_thousands) +
               " |";
      }
    }
    out += "\n";
  }

  out += "\n# Benchmark-level pass rates\n\n";
  out += "| Paradigm | pass@1 | pass@5 | Tok. |\n|---|---|---|---|\n";
  for (const auto& p : table.per_paradigm) {
    out += std::string("| ") + to_string(p.paradigm) + " | " + fixed2(p.mean_pass_at_1) + " | " +
           fixed2(p.mean_pass_at_5) + " | " + fixed2(p.mean_tokens_thousands) + " |\n";
  }

  out += "\n# Token consumption split (thousands)\n\n";
  out += "| Paradigm | Prompt | Completion | Total |\n|---|---|---|---|\n";
  for (const auto& p : table.per_paradigm) {
    out += std::string("| ") + to_string(p.paradigm) + " | " + fixed2(p.mean_prompt_thousands) +
           " | " + fixed2(p.mean_completion_thousands) + " | " +
           fixed2(p.mean_tokens_thousands) + " |\n";
  }
  return out;
}

}  // namespace

std::string emit_report(const SummaryTable& table, ReportFormat format) {
  switch (format) {
    case ReportFormat::Json: return emit_json(table);
    case ReportFormat::Csv: return emit_csv(table);
    case ReportFormat::Markdown: return emit_markdown(table);
  }
  throw ValidationError("unknown report format");
}

}  // namespace veribtot
