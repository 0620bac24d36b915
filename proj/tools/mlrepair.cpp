// mlrepair: a multi-location repair workbench for MiniLang bug corpora.
//
// Subcommands: run-tests, localize, epc, classify, repair, stats, bench,
// print. Exit codes: 0 success / clean report, 1 repair failure statuses,
// 2 usage or corpus errors.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "mlrepair/harness/bench.hpp"
#include "mlrepair/harness/corpus.hpp"
#include "mlrepair/harness/io.hpp"
#include "mlrepair/repair/guard.hpp"
#include "mlrepair/repair/search.hpp"

namespace fs = std::filesystem;
using namespace mlrepair;

namespace {

int cmd_run_tests(const std::string& bug_dir, long long fuel) {
  auto bug = harness::load_bug(bug_dir);
  testkit::SuiteRunOptions opts;
  opts.fuel = fuel;
  auto report = testkit::run_suite(bug.buggy, bug.suite, opts);
  for (const auto& t : report.tests) {
    if (t.passed) {
      std::printf("PASS  %s\n", t.name.c_str());
    } else {
      std::printf("FAIL  %s  (assertion %d: observed %s)\n", t.name.c_str(),
                  t.fail_index, t.observed.to_string().c_str());
    }
  }
  std::printf("%d passing, %d failing\n", report.passing, report.failing);
  return 0;
}

int cmd_localize(const std::string& bug_dir, int top_k, bool line_assumption,
                 const std::string& out_path) {
  auto bug = harness::load_bug(bug_dir);
  auto spectrum = faultloc::collect_spectrum(bug.buggy, bug.suite);
  auto ranking = faultloc::rank(bug.buggy, spectrum);
  if (line_assumption)
    ranking = faultloc::line_assumption(bug.buggy, ranking, bug.meta.faulty_lines);
  int shown = 0;
  for (const auto& e : ranking.entries) {
    if (shown++ >= top_k) break;
    std::printf("%-24s line %-4d node %-4d score %.6f\n", e.id.fn.c_str(),
                e.line, e.id.index, e.score);
  }
  if (!out_path.empty()) {
    faultloc::Ranking cut;
    for (const auto& e : ranking.entries) {
      if (static_cast<int>(cut.entries.size()) >= top_k) break;
      cut.entries.push_back(e);
    }
    harness::write_file(out_path, harness::ranking_to_json(cut).dump(2) + "\n");
  }
  return 0;
}

int cmd_epc(const std::string& bug_dir, const std::string& fn, int line,
            const std::string& test, const std::string& out_path) {
  auto bug = harness::load_bug(bug_dir);
  minilang::NodeUid seed = bug.buggy.unit_at(fn, line);
  if (seed < 0) {
    std::fprintf(stderr, "no executable statement at %s:%d\n", fn.c_str(), line);
    return 2;
  }
  testkit::SuiteRunOptions opts;
  opts.want_fail_trace = true;
  auto report = testkit::run_suite(bug.buggy, bug.suite, opts);
  const testkit::TestResult* tr = nullptr;
  for (const auto& t : report.tests)
    if (t.name == test) tr = &t;
  if (!tr) {
    std::fprintf(stderr, "no test named %s\n", test.c_str());
    return 2;
  }
  if (tr->passed) {
    std::fprintf(stderr, "test %s passes; EPCs are defined on failing runs\n",
                 test.c_str());
    return 2;
  }
  auto epc = faultloc::compute_epc(bug.buggy, tr->fail_trace, seed, test);
  if (!epc) {
    std::printf("NoChain: %s:%d does not reach the failure in %s\n", fn.c_str(),
                line, test.c_str());
    return 0;
  }
  for (auto uid : epc->chain)
    std::printf("%s line %d\n", bug.buggy.nodes[uid].id.fn.c_str(),
                bug.buggy.nodes[uid].line);
  if (!out_path.empty())
    harness::write_file(out_path,
                        harness::epc_to_json(bug.buggy, *epc).dump(2) + "\n");
  return 0;
}

int cmd_classify(const std::string& bug_dir) {
  auto bug = harness::load_bug(bug_dir);
  std::printf("%s\n", patchmodel::patch_class_name(
                          patchmodel::classify(bug.ground_truth, bug.buggy)));
  return 0;
}

struct RepairFlags {
  std::string strategy = "auto";
  bool purify = false;
  bool augment = false;
  bool line_assumption = false;
  unsigned long long seed = 1;
  double time_budget = 60.0;
  int regression_budget = 1;
  int top_k = 100;
  int depth_bound = 2;
  int occ_bound = 8;
  std::string out_dir = ".";
  bool verbose = false;
};

repair::RepairResult run_one_strategy(const harness::BugEntry& bug,
                                      const std::string& strategy,
                                      const RepairFlags& f) {
  auto input = bug.repair_input();
  if (strategy == "s1") {
    repair::S1Config c;
    c.top_k = f.top_k;
    c.regression_budget = f.regression_budget;
    c.time_budget_s = f.time_budget;
    c.seed = f.seed;
    c.purify = f.purify;
    c.augment = f.augment;
    c.line_assumption = f.line_assumption;
    return repair::s1_repair(input, c);
  }
  repair::S2Config c;
  c.top_k = f.top_k;
  c.k_intersections = f.top_k;
  c.depth_bound = f.depth_bound;
  c.occurrence_bound = f.occ_bound;
  c.time_budget_s = f.time_budget;
  c.line_assumption = f.line_assumption;
  return repair::s2_repair(input, c);
}

int cmd_repair(const std::string& bug_dir, const RepairFlags& f) {
  auto bug = harness::load_bug(bug_dir);
  repair::RepairResult result;
  std::string used = f.strategy;
  if (f.strategy == "auto") {
    // S1 then S2; the first Success wins. The bug's labeled class is never
    // consulted: it is not available before repair.
    result = run_one_strategy(bug, "s1", f);
    used = "s1";
    if (result.status != repair::RepairStatus::Success) {
      auto r2 = run_one_strategy(bug, "s2", f);
      if (r2.status == repair::RepairStatus::Success) {
        result = std::move(r2);
        used = "s2";
      }
    }
  } else {
    result = run_one_strategy(bug, f.strategy, f);
  }

  if (f.verbose) {
    for (const auto& it : result.iterations)
      std::fprintf(stderr, "iter: %s  residual %d -> %d (regressions %d)\n",
                   it.action.c_str(), it.residual_before, it.residual_after,
                   it.regressions_after);
  }

  fs::create_directories(f.out_dir);
  harness::write_file((fs::path(f.out_dir) / "result.json").string(),
                      harness::result_to_json(result, used).dump(2) + "\n");
  harness::write_file((fs::path(f.out_dir) / "patch.json").string(),
                      harness::patch_to_json(result.patch).dump(2) + "\n");
  if (result.witness)
    harness::write_file((fs::path(f.out_dir) / "witness.json").string(),
                        harness::witness_to_json(*result.witness).dump(2) + "\n");

  std::printf("%s (%s): %zu chunk(s), %zu iteration(s), %lld tests executed\n",
              repair::status_name(result.status), used.c_str(),
              result.patch.chunks.size(), result.iterations.size(),
              result.tests_executed);
  return result.status == repair::RepairStatus::Success ? 0 : 1;
}

int cmd_stats(const std::string& corpus_dir) {
  auto rows = harness::stats(corpus_dir);
  long long total = 0;
  for (const auto& r : rows) total += r.count;
  std::printf("%-16s %8s %8s\n", "class", "count", "pct");
  for (const auto& r : rows)
    std::printf("%-16s %8lld %7s%%\n", r.cls.c_str(), r.count,
                r.percentage.c_str());
  std::printf("%-16s %8lld\n", "total", total);
  return 0;
}

int cmd_bench(const std::string& corpus_dir, unsigned long long seed, int top_k,
              const std::string& out_path, bool line_assumption) {
  harness::BenchConfig cfg;
  cfg.seed = seed;
  cfg.top_k = top_k;
  cfg.line_assumption = line_assumption;
  auto rows = harness::bench(corpus_dir, cfg);
  std::printf("%-14s %-14s %-4s %-16s %-9s %-7s %5s %8s %10s\n", "bug", "class",
              "strat", "status", "plausible", "correct", "iters", "tests",
              "wall_ms");
  for (const auto& r : rows)
    std::printf("%-14s %-14s %-4s %-16s %-9s %-7s %5d %8lld %10.1f\n",
                r.bug.c_str(), r.expected_class.c_str(), r.strategy.c_str(),
                r.status.c_str(), r.plausible ? "yes" : "no",
                r.correct ? "yes" : "no", r.iterations, r.tests_executed,
                r.wall_ms);
  if (!out_path.empty())
    harness::write_file(out_path,
                        harness::bench_table_json(rows).dump(2) + "\n");
  return 0;
}

int cmd_print(const std::string& file, bool numbers) {
  auto program = minilang::parse(harness::read_file(file));
  std::string text = minilang::pretty_print(program);
  if (!numbers) {
    std::fputs(text.c_str(), stdout);
    return 0;
  }
  int line = 1;
  std::string cur;
  for (char c : text) {
    if (c == '\n') {
      std::printf("%4d  %s\n", line++, cur.c_str());
      cur.clear();
    } else {
      cur += c;
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MiniLang multi-location repair workbench"};
  app.require_subcommand(1);

  std::string bug_dir, corpus_dir, out_path, fn_name, test_name, file;
  int top_k = 100, line = 0;
  long long fuel = minilang::kDefaultFuel;
  bool line_assumption = false, numbers = false;
  unsigned long long seed = 1;
  RepairFlags rf;

  auto* run_tests = app.add_subcommand("run-tests", "run a bug's suite");
  run_tests->add_option("bug-dir", bug_dir)->required();
  run_tests->add_option("--fuel", fuel);

  auto* localize = app.add_subcommand("localize", "Ochiai suspiciousness ranking");
  localize->add_option("bug-dir", bug_dir)->required();
  localize->add_option("--top-k", top_k);
  localize->add_flag("--line-assumption", line_assumption);
  localize->add_option("--out", out_path);

  auto* epc = app.add_subcommand("epc", "error propagation chain for a seed line");
  epc->add_option("bug-dir", bug_dir)->required();
  epc->add_option("--fn", fn_name)->required();
  epc->add_option("--line", line)->required();
  epc->add_option("--test", test_name)->required();
  epc->add_option("--out", out_path);

  auto* classify = app.add_subcommand("classify", "classify the ground-truth patch");
  classify->add_option("bug-dir", bug_dir)->required();

  auto* repair_cmd = app.add_subcommand("repair", "attempt an automated repair");
  repair_cmd->add_option("bug-dir", bug_dir)->required();
  repair_cmd->add_option("--strategy", rf.strategy)
      ->check(CLI::IsMember({"s1", "s2", "auto"}));
  repair_cmd->add_flag("--purify", rf.purify);
  repair_cmd->add_flag("--augment", rf.augment);
  repair_cmd->add_flag("--line-assumption", rf.line_assumption);
  repair_cmd->add_option("--seed", rf.seed);
  repair_cmd->add_option("--time-budget", rf.time_budget);
  repair_cmd->add_option("--regression-budget", rf.regression_budget);
  repair_cmd->add_option("--k", rf.top_k);
  repair_cmd->add_option("--depth-bound", rf.depth_bound);
  repair_cmd->add_option("--occ-bound", rf.occ_bound);
  repair_cmd->add_option("--out-dir", rf.out_dir);
  repair_cmd->add_flag("--verbose", rf.verbose);

  auto* stats = app.add_subcommand("stats", "patch classification shares");
  stats->add_option("corpus-dir", corpus_dir)->required();

  auto* bench = app.add_subcommand("bench", "run both strategies over a corpus");
  bench->add_option("corpus-dir", corpus_dir)->required();
  bench->add_option("--out", out_path);
  bench->add_option("--seed", seed);
  bench->add_option("--k", top_k);
  bench->add_flag("--line-assumption", line_assumption);

  auto* print = app.add_subcommand("print", "canonical form of a source file");
  print->add_option("file", file)->required();
  print->add_flag("--numbers", numbers);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run_tests->parsed()) return cmd_run_tests(bug_dir, fuel);
    if (localize->parsed())
      return cmd_localize(bug_dir, top_k, line_assumption, out_path);
    if (epc->parsed()) return cmd_epc(bug_dir, fn_name, line, test_name, out_path);
    if (classify->parsed()) return cmd_classify(bug_dir);
    if (repair_cmd->parsed()) return cmd_repair(bug_dir, rf);
    if (stats->parsed()) return cmd_stats(corpus_dir);
    if (bench->parsed())
      return cmd_bench(corpus_dir, seed, top_k, out_path, line_assumption);
    if (print->parsed()) return cmd_print(file, numbers);
  } catch (const harness::CorpusError& e) {
    std::fprintf(stderr, "corpus error: %s\n", e.what());
    return 2;
  } catch (const minilang::ParseError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 2;
}
