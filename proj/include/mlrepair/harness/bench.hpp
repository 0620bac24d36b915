#pragma once

#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "mlrepair/harness/corpus.hpp"
#include "mlrepair/harness/io.hpp"
#include "mlrepair/repair/guard.hpp"
#include "mlrepair/repair/search.hpp"

namespace mlrepair::harness {

// Percentage with two decimals, the presentation used for category shares.
inline std::string format_pct(long long count, long long total) {
  double pct = total == 0 ? 0.0 : 100.0 * static_cast<double>(count) /
                                      static_cast<double>(total);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", pct);
  return buf;
}

struct StatsRow {
  std::string cls;
  long long count = 0;
  std::string percentage;
};

// Classifies every ground-truth patch in the corpus and tabulates class
// shares.
inline std::vector<StatsRow> stats(const std::string& corpus_dir) {
  auto bugs = load_corpus(corpus_dir);
  std::map<std::string, long long> counts;
  for (const auto& b : bugs)
    ++counts[patchmodel::patch_class_name(
        patchmodel::classify(b.ground_truth, b.buggy))];
  std::vector<StatsRow> rows;
  static const char* order[] = {"single_location", "similar_exact", "similar",
                                "relevant", "other"};
  long long total = static_cast<long long>(bugs.size());
  for (const char* cls : order) {
    auto it = counts.find(cls);
    long long n = it == counts.end() ? 0 : it->second;
    rows.push_back(StatsRow{cls, n, format_pct(n, total)});
  }
  return rows;
}

// Plausible: the patched program passes the session suite. Correct:
// additionally differentially equivalent to the shipped fix.
struct CheckVerdict {
  bool plausible = false;
  bool correct = false;
};

inline CheckVerdict check_result(const BugEntry& bug,
                                 const patchmodel::Patch& patch,
                                 const std::vector<testkit::TestCase>& suite,
                                 int trials = 1000,
                                 unsigned long long seed = 1) {
  CheckVerdict v;
  minilang::Program patched;
  try {
    patched = patchmodel::apply_patch(bug.buggy, patch);
  } catch (const patchmodel::PatchApplyError&) {
    return v;
  }
  auto report = testkit::run_suite(patched, suite);
  v.plausible = report.failing == 0;
  if (!v.plausible) return v;
  auto diff = testkit::differential_check(patched, bug.fixed, bug.meta.domains,
                                          trials, seed);
  v.correct = diff.equivalent;
  return v;
}

struct BenchConfig {
  std::vector<std::string> strategies = {"s1", "s2"};  // or "auto"
  unsigned long long seed = 1;
  int top_k = 20;  // desk-scale k
  int trials = 1000;
  long long eval_budget = 20000;  // deterministic budget per bug per strategy
  int regression_budget = 1;
  bool line_assumption = false;
};

struct BenchRow {
  std::string bug;
  std::string expected_class;
  std::string strategy;
  std::string status;
  bool plausible = false;
  bool correct = false;
  int iterations = 0;
  long long tests_executed = 0;
  double wall_ms = 0.0;  // reporting only; not part of the serialized table
};

namespace bdetail {

inline repair::S1Config s1_config(const BenchConfig& cfg) {
  repair::S1Config c;
  c.top_k = cfg.top_k;
  c.regression_budget = cfg.regression_budget;
  c.seed = cfg.seed;
  c.purify = true;
  c.augment = true;
  c.line_assumption = cfg.line_assumption;
  c.eval_budget = cfg.eval_budget;
  c.time_budget_s = 1e9;  // budgets are evaluation counts: rows stay
                          // byte-deterministic across machines
  return c;
}

inline repair::S2Config s2_config(const BenchConfig& cfg) {
  repair::S2Config c;
  c.top_k = cfg.top_k;
  c.k_intersections = cfg.top_k;
  c.line_assumption = cfg.line_assumption;
  c.eval_budget = cfg.eval_budget;
  c.time_budget_s = 1e9;
  return c;
}

// The session suite a strategy was judged against; plausibility must use the
// same tests the repair saw.
inline std::vector<testkit::TestCase> suite_for(const BugEntry& bug,
                                                const std::string& strategy,
                                                const BenchConfig& cfg) {
  if (strategy == "s2") return bug.suite;
  auto input = bug.repair_input();
  return repair::session_suite(input, true, true, s1_config(cfg));
}

}  // namespace bdetail

inline repair::RepairResult run_strategy(const BugEntry& bug,
                                         const std::string& strategy,
                                         const BenchConfig& cfg,
                                         std::string* used = nullptr) {
  auto input = bug.repair_input();
  if (used) *used = strategy;
  if (strategy == "s1") return repair::s1_repair(input, bdetail::s1_config(cfg));
  if (strategy == "s2") return repair::s2_repair(input, bdetail::s2_config(cfg));
  // auto: S1 then S2, first Success wins; never consults the expected class.
  if (used) *used = "s1";
  auto r1 = repair::s1_repair(input, bdetail::s1_config(cfg));
  if (r1.status == repair::RepairStatus::Success) return r1;
  auto r2 = repair::s2_repair(input, bdetail::s2_config(cfg));
  if (r2.status == repair::RepairStatus::Success) {
    if (used) *used = "s2";
    return r2;
  }
  return r1;
}

inline std::vector<BenchRow> bench(const std::string& corpus_dir,
                                   const BenchConfig& cfg = {}) {
  std::vector<BenchRow> rows;
  for (const auto& bug : load_corpus(corpus_dir)) {
    for (const auto& strategy : cfg.strategies) {
      std::string used;
      auto result = run_strategy(bug, strategy, cfg, &used);
      BenchRow row;
      row.bug = bug.meta.id;
      row.expected_class = patchmodel::patch_class_name(bug.meta.expected_class);
      row.strategy = strategy;
      row.status = repair::status_name(result.status);
      row.iterations = static_cast<int>(result.iterations.size());
      row.tests_executed = result.tests_executed;
      row.wall_ms = result.wall_ms;
      if (!result.patch.empty()) {
        // Plausibility is judged against the suite the winning strategy saw.
        auto suite = bdetail::suite_for(bug, used, cfg);
        auto verdict = check_result(bug, result.patch, suite, cfg.trials, cfg.seed);
        row.plausible = verdict.plausible;
        row.correct = verdict.correct;
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

// Deterministic serialization: identical seed and config produce identical
// bytes, so wall-clock time stays out of the table.
inline json bench_table_json(const std::vector<BenchRow>& rows) {
  json out = json::array();
  for (const auto& r : rows)
    out.push_back(json{{"bug", r.bug},
                       {"expected_class", r.expected_class},
                       {"strategy", r.strategy},
                       {"status", r.status},
                       {"plausible", r.plausible},
                       {"correct", r.correct},
                       {"iterations", r.iterations},
                       {"tests_executed", r.tests_executed}});
  return json{{"rows", out}};
}

}  // namespace mlrepair::harness
