#pragma once

#include <chrono>
#include <set>
#include <string>
#include <vector>

#include "mlrepair/faultloc.hpp"
#include "mlrepair/patchmodel.hpp"
#include "mlrepair/repair/mutate.hpp"
#include "mlrepair/repair/result.hpp"
#include "mlrepair/testkit.hpp"

namespace mlrepair::repair {

struct S1Config {
  int top_k = 100;
  int regression_budget = 1;
  int max_iters = 32;
  double time_budget_s = 60.0;
  long long eval_budget = -1;  // suite evaluations; -1 = unbounded
  long long fuel = minilang::kDefaultFuel;
  unsigned long long seed = 1;
  bool purify = false;
  bool augment = false;
  bool line_assumption = false;
  int augment_budget = 500;
  int augment_max_new = 8;
};

inline FitnessState evaluate_fitness(const minilang::Program& candidate,
                                     const std::vector<testkit::TestCase>& suite,
                                     const std::set<std::string>& original_failing,
                                     const std::set<std::string>& original_passing,
                                     long long fuel = minilang::kDefaultFuel) {
  testkit::SuiteRunOptions opts;
  opts.fuel = fuel;
  auto report = testkit::run_suite(candidate, suite, opts);
  FitnessState fs;
  for (const auto& t : report.tests) {
    if (t.passed) continue;
    if (original_failing.count(t.name)) ++fs.residual;
    if (original_passing.count(t.name)) ++fs.regressions;
  }
  return fs;
}

namespace sdetail {

struct Budget {
  std::chrono::steady_clock::time_point start;
  double time_budget_s;
  long long eval_budget;
  long long evals = 0;
  long long tests = 0;

  bool exceeded() const {
    if (eval_budget >= 0 && evals > eval_budget) return true;
    auto dt = std::chrono::steady_clock::now() - start;
    return std::chrono::duration<double>(dt).count() > time_budget_s;
  }

  double elapsed_ms() const {
    auto dt = std::chrono::steady_clock::now() - start;
    return std::chrono::duration<double, std::milli>(dt).count();
  }
};

}  // namespace sdetail

// The suite a Strategy-1 session actually runs: augmentation (oracle
// differential tests) first, then purification, mirroring the two-phase
// protocol.
inline std::vector<testkit::TestCase> session_suite(const RepairInput& input,
                                                    bool do_augment, bool do_purify,
                                                    const S1Config& cfg) {
  std::vector<testkit::TestCase> suite = input.suite;
  if (do_augment && input.oracle) {
    testkit::AugmentConfig ac;
    ac.budget = cfg.augment_budget;
    ac.max_new = cfg.augment_max_new;
    ac.seed = cfg.seed;
    ac.fuel = cfg.fuel;
    auto aug = testkit::augment(input.buggy, *input.oracle, input.domains, ac);
    for (auto& t : aug.tests) suite.push_back(std::move(t));
  }
  if (do_purify) suite = testkit::purify(suite);
  return suite;
}

// Strategy 1: generate-and-validate search whose fitness function commits a
// partial fix whenever it strictly reduces the count of originally failing
// tests, tolerating up to regression_budget broken passing tests per step,
// and iterates from the partially fixed program until the whole suite passes.
inline RepairResult s1_repair(const RepairInput& input, const S1Config& cfg) {
  sdetail::Budget budget{std::chrono::steady_clock::now(), cfg.time_budget_s,
                         cfg.eval_budget};
  RepairResult result;

  auto suite = session_suite(input, cfg.augment, cfg.purify, cfg);

  testkit::SuiteRunOptions base_opts;
  base_opts.fuel = cfg.fuel;
  auto baseline = testkit::run_suite(input.buggy, suite, base_opts);
  ++budget.evals;
  budget.tests += static_cast<long long>(suite.size());
  std::set<std::string> failing0 = baseline.failing_names();
  std::set<std::string> passing0 = baseline.passing_names();
  result.initial_failing = static_cast<int>(failing0.size());

  minilang::Program working = input.buggy;
  int residual_now = static_cast<int>(failing0.size());
  int regressions_now = 0;

  auto finish = [&](RepairStatus status, const std::string& note) {
    result.status = status;
    result.note = note;
    result.patch = patchmodel::ast_diff(input.buggy, working);
    result.wall_ms = budget.elapsed_ms();
    result.tests_executed = budget.tests;
    return result;
  };

  if (residual_now == 0) return finish(RepairStatus::Success, "suite already passing");

  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    if (budget.exceeded()) return finish(RepairStatus::Timeout, "budget exhausted");

    auto spectrum = faultloc::collect_spectrum(working, suite, cfg.fuel);
    ++budget.evals;
    budget.tests += static_cast<long long>(suite.size());
    auto ranking = faultloc::rank(working, spectrum);
    if (cfg.line_assumption)
      ranking = faultloc::line_assumption(working, ranking, input.faulty_lines);

    auto ops = enumerate_mutations(working, ranking, cfg.top_k);

    bool have_best = false;
    FitnessState best_fit;
    minilang::Program best_prog;
    std::string best_desc;
    for (const auto& op : ops) {
      if (budget.exceeded()) return finish(RepairStatus::Timeout, "budget exhausted");
      auto cand = apply_mutation(working, op);
      if (!cand) continue;
      auto fit = evaluate_fitness(*cand, suite, failing0, passing0, cfg.fuel);
      ++budget.evals;
      budget.tests += static_cast<long long>(suite.size());
      bool admissible =
          fit.residual < residual_now && fit.regressions <= cfg.regression_budget;
      if (!admissible) continue;
      bool better = !have_best || fit.residual < best_fit.residual ||
                    (fit.residual == best_fit.residual &&
                     fit.regressions < best_fit.regressions);
      if (better) {
        have_best = true;
        best_fit = fit;
        best_prog = std::move(*cand);
        best_desc = op.describe(working);
        if (best_fit.residual == 0 && best_fit.regressions == 0) break;
      }
    }

    if (!have_best)
      return finish(RepairStatus::ExhaustedSearch, "no admissible mutation");

    IterationLog log;
    log.action = best_desc;
    log.residual_before = residual_now;
    log.residual_after = best_fit.residual;
    log.regressions_after = best_fit.regressions;
    result.iterations.push_back(std::move(log));

    working = std::move(best_prog);
    residual_now = best_fit.residual;
    regressions_now = best_fit.regressions;

    if (residual_now == 0 && regressions_now == 0) {
      // Success demands a from-scratch validation of the full suite against
      // the original program plus the accumulated patch.
      auto patch = patchmodel::ast_diff(input.buggy, working);
      auto revalidated = patchmodel::apply_patch(input.buggy, patch);
      auto final_report = testkit::run_suite(revalidated, suite, base_opts);
      ++budget.evals;
      budget.tests += static_cast<long long>(suite.size());
      if (final_report.failing == 0) return finish(RepairStatus::Success, "");
      return finish(RepairStatus::ExhaustedSearch, "revalidation failed");
    }
  }
  return finish(RepairStatus::Timeout, "iteration budget exhausted");
}

}  // namespace mlrepair::repair
