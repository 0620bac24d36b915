#pragma once

#include <algorithm>
#include <cassert>
#include <chrono>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "mlrepair/faultloc.hpp"
#include "mlrepair/patchmodel.hpp"
#include "mlrepair/repair/mutate.hpp"
#include "mlrepair/repair/result.hpp"
#include "mlrepair/testkit.hpp"

namespace mlrepair::repair {

struct S2Config {
  int top_k = 100;            // candidate locations tried
  int k_intersections = 100;  // seeds whose EPCs feed intersection injection
  int depth_bound = 2;
  int occurrence_bound = 8;   // L: longest per-occurrence schedule
  long long synth_budget = 200000;  // candidate expressions evaluated
  double time_budget_s = 60.0;
  long long eval_budget = -1;
  long long fuel = minilang::kDefaultFuel;
  bool line_assumption = false;
};

enum class GuardMode { ModifyCondition, InsertGuardSkip, InsertGuardReturn };

inline const char* guard_mode_name(GuardMode m) {
  switch (m) {
    case GuardMode::ModifyCondition: return "ModifyCondition";
    case GuardMode::InsertGuardSkip: return "InsertGuardSkip";
    case GuardMode::InsertGuardReturn: return "InsertGuardReturn";
  }
  return "?";
}

struct CandidateLocation {
  minilang::NodeUid node = -1;  // ranked unit in the original program
  GuardMode mode = GuardMode::InsertGuardSkip;
  minilang::Value ret_default;  // InsertGuardReturn only
};

// For each of the top-k ranked statements: ModifyCondition when the unit is
// an if/while guard, InsertGuardSkip always, and InsertGuardReturn with
// type-matched defaults when the enclosing function returns a value (every
// MiniLang function does).
inline std::vector<CandidateLocation> candidate_locations(
    const minilang::Program& p, const faultloc::Ranking& ranking, int top_k) {
  std::vector<CandidateLocation> out;
  int limit = std::min<int>(top_k, static_cast<int>(ranking.entries.size()));
  for (int i = 0; i < limit; ++i) {
    minilang::NodeUid unit = ranking.entries[static_cast<size_t>(i)].node;
    const auto& info = p.nodes[unit];
    if (info.is_guard)
      out.push_back(CandidateLocation{unit, GuardMode::ModifyCondition, {}});
    out.push_back(CandidateLocation{unit, GuardMode::InsertGuardSkip, {}});
    const auto& fn = p.functions[static_cast<size_t>(info.fn_index)];
    std::vector<minilang::Value> defaults;
    if (fn.ret == minilang::Type::Int) {
      defaults.push_back(minilang::Value::of_int(0));
      defaults.push_back(minilang::Value::of_int(-1));
    } else if (fn.ret == minilang::Type::Bool) {
      defaults.push_back(minilang::Value::of_bool(false));
    } else {
      defaults.push_back(minilang::Value::of_array({}));
    }
    for (const auto& d : defaults)
      out.push_back(CandidateLocation{unit, GuardMode::InsertGuardReturn, d});
  }
  return out;
}

// Scaffold: the program with the target condition site materialized behind a
// neutral placeholder, plus the overridable guard node.
struct Scaffold {
  minilang::Program program;
  minilang::NodeUid guard = -1;
  // Synthesized condition C realizes guard == !C (InsertGuardSkip polarity).
  bool negated = false;
};

namespace gdetail {

inline std::optional<Scaffold> materialize(const minilang::Program& p,
                                           const CandidateLocation& loc) {
  Scaffold sc;
  if (loc.mode == GuardMode::ModifyCondition) {
    const auto& info = p.nodes[loc.node];
    if (!info.is_guard) return std::nullopt;
    sc.program = p;
    sc.guard = loc.node;
    return sc;
  }
  minilang::NodeUid owner = owning_stmt(p, loc.node);
  auto stmt_loc = find_stmt(p, owner);
  if (!stmt_loc) return std::nullopt;
  minilang::Program out = p;
  auto* blk = block_at(out, *stmt_loc);
  if (loc.mode == GuardMode::InsertGuardSkip) {
    minilang::Stmt wrapper;
    wrapper.kind = minilang::StmtKind::If;
    wrapper.exprs.push_back(
        minilang::unary_expr("!", minilang::bool_lit(false)));
    wrapper.body.push_back((*blk)[static_cast<size_t>(stmt_loc->index)]);
    (*blk)[static_cast<size_t>(stmt_loc->index)] = std::move(wrapper);
    sc.negated = true;
  } else {
    blk->insert(blk->begin() + stmt_loc->index,
                mdetail::make_guard_return(minilang::bool_lit(false),
                                           loc.ret_default));
  }
  minilang::canonicalize(out);
  if (minilang::check_program(out)) return std::nullopt;
  // Locate the guard of the materialized wrapper.
  auto new_loc = *stmt_loc;
  minilang::Stmt* wrapped = stmt_at(out, new_loc);
  sc.guard = wrapped->exprs[0].uid;
  sc.program = std::move(out);
  return sc;
}

}  // namespace gdetail

struct AngelicWitness {
  CandidateLocation location;
  minilang::OverrideSchedule schedule;  // keyed on the scaffold's guard node
  std::vector<std::pair<std::string, bool>> evidence;  // per-test pass flags
};

// Tries the empty schedule, Uniform(true), Uniform(false), then breadth-first
// per-occurrence schedules of length <= L (shorter first, false before true);
// returns the first schedule under which the whole suite passes.
inline std::optional<AngelicWitness> angelic_search(
    const Scaffold& sc, const std::vector<testkit::TestCase>& suite,
    const CandidateLocation& loc, long long fuel, int occurrence_bound,
    long long* evals, long long* tests_executed,
    const std::function<bool()>& out_of_budget) {
  auto try_schedule =
      [&](const minilang::OverrideSchedule& sched) -> std::optional<AngelicWitness> {
    testkit::SuiteRunOptions opts;
    opts.fuel = fuel;
    opts.overrides = sched.empty() ? nullptr : &sched;
    auto report = testkit::run_suite(sc.program, suite, opts);
    if (evals) ++*evals;
    if (tests_executed) *tests_executed += static_cast<long long>(suite.size());
    if (report.failing != 0) return std::nullopt;
    AngelicWitness w;
    w.location = loc;
    w.schedule = sched;
    for (const auto& t : report.tests) w.evidence.emplace_back(t.name, t.passed);
    return w;
  };

  if (auto w = try_schedule({})) return w;
  for (bool v : {true, false}) {
    if (out_of_budget && out_of_budget()) return std::nullopt;
    minilang::OverrideSchedule s;
    s[sc.guard] = minilang::OverridePolicy::uniform_of(v);
    if (auto w = try_schedule(s)) return w;
  }
  for (int len = 1; len <= occurrence_bound; ++len) {
    for (unsigned long long bits = 0; bits < (1ULL << len); ++bits) {
      if (out_of_budget && out_of_budget()) return std::nullopt;
      std::vector<bool> seq(static_cast<size_t>(len));
      for (int i = 0; i < len; ++i) seq[static_cast<size_t>(i)] = (bits >> i) & 1;
      minilang::OverrideSchedule s;
      s[sc.guard] = minilang::OverridePolicy::per_occurrence(seq);
      if (auto w = try_schedule(s)) return w;
    }
  }
  return std::nullopt;
}

struct Snapshot {
  std::string test;
  int occurrence = 0;
  std::vector<std::pair<std::string, minilang::Value>> env;
  bool required = false;  // outcome the synthesized condition must produce
};

struct SynthesisSpec {
  std::vector<Snapshot> snapshots;
  std::vector<std::pair<std::string, minilang::Type>> vocabulary;
  std::vector<long long> constants;
};

// Replays every test under the witness schedule, recording the environment at
// each occurrence of the target condition. Originally failing runs pin the
// outcome the schedule forced; originally passing runs pin the real evaluated
// outcome so passing behavior survives synthesis.
inline SynthesisSpec collect_snapshots(const Scaffold& sc,
                                       const std::vector<testkit::TestCase>& suite,
                                       const AngelicWitness& witness,
                                       const std::set<std::string>& original_failing,
                                       long long fuel,
                                       long long* tests_executed = nullptr) {
  SynthesisSpec spec;
  const auto& ginfo = sc.program.nodes[sc.guard];
  for (const auto& v : ginfo.scope) spec.vocabulary.emplace_back(v.name, v.type);
  spec.constants = constant_pool(sc.program, ginfo.id.fn);

  for (const auto& tc : suite) {
    int occurrence = 0;
    bool originally_failing = original_failing.count(tc.name) > 0;
    for (const auto& a : tc.assertions) {
      minilang::ExecOptions eo;
      eo.fuel = fuel;
      eo.overrides = witness.schedule.empty() ? nullptr : &witness.schedule;
      eo.observe = sc.guard;
      eo.trace = minilang::TraceMode::None;
      auto r = minilang::execute_opts(sc.program, a.call, eo);
      if (tests_executed) ++*tests_executed;
      for (const auto& ob : r.observations) {
        Snapshot s;
        s.test = tc.name;
        s.occurrence = occurrence++;
        bool guard_outcome =
            originally_failing ? ob.effective : ob.real.value_or(ob.effective);
        s.required = sc.negated ? !guard_outcome : guard_outcome;
        for (const auto& [name, v] : ob.env) {
          for (const auto& [vn, vt] : spec.vocabulary) {
            if (vn == name) {
              s.env.emplace_back(name, v);
              break;
            }
          }
        }
        spec.snapshots.push_back(std::move(s));
      }
    }
  }
  return spec;
}

namespace gdetail {

struct SynthCandidate {
  minilang::Expr expr;
  int size = 0;
  int depth = 0;
};

inline std::optional<bool> eval_pure(const minilang::Expr& e,
                                     const Snapshot& snap) {
  using minilang::ExprKind;
  switch (e.kind) {
    case ExprKind::BoolLit:
      return e.bool_val;
    case ExprKind::IntLit:
      return std::nullopt;  // only reached via comparisons
    case ExprKind::Var: {
      for (const auto& [n, v] : snap.env)
        if (n == e.name && v.is_bool()) return v.as_bool();
      return std::nullopt;
    }
    case ExprKind::Unary: {
      auto v = eval_pure(e.args[0], snap);
      if (!v) return std::nullopt;
      return !*v;
    }
    case ExprKind::Binary: {
      if (e.op == "&&" || e.op == "||") {
        auto l = eval_pure(e.args[0], snap);
        auto r = eval_pure(e.args[1], snap);
        if (!l || !r) return std::nullopt;
        return e.op == "&&" ? (*l && *r) : (*l || *r);
      }
      auto int_of = [&](const minilang::Expr& x) -> std::optional<long long> {
        if (x.kind == ExprKind::IntLit) return x.int_val;
        if (x.kind == ExprKind::Unary && x.op == "-" &&
            x.args[0].kind == ExprKind::IntLit)
          return -x.args[0].int_val;
        if (x.kind == ExprKind::Var) {
          for (const auto& [n, v] : snap.env)
            if (n == x.name && v.is_int()) return v.as_int();
          return std::nullopt;
        }
        if (x.kind == ExprKind::Len && x.args[0].kind == ExprKind::Var) {
          for (const auto& [n, v] : snap.env)
            if (n == x.args[0].name && v.is_array())
              return static_cast<long long>(v.as_array().size());
        }
        return std::nullopt;
      };
      auto a = int_of(e.args[0]);
      auto b = int_of(e.args[1]);
      if (!a || !b) return std::nullopt;
      if (e.op == "<") return *a < *b;
      if (e.op == "<=") return *a <= *b;
      if (e.op == ">") return *a > *b;
      if (e.op == ">=") return *a >= *b;
      if (e.op == "==") return *a == *b;
      if (e.op == "!=") return *a != *b;
      return std::nullopt;
    }
    default:
      return std::nullopt;
  }
}

inline bool consistent(const minilang::Expr& e, const SynthesisSpec& spec) {
  for (const auto& s : spec.snapshots) {
    auto v = eval_pure(e, s);
    if (!v || *v != s.required) return false;
  }
  return true;
}

}  // namespace gdetail

// Size-ordered enumerative synthesis over the site vocabulary: atoms are
// bool variables and their negations, int comparisons between variables and
// against constants, and emptiness tests, closed under !, &&, || up to the
// depth bound. Returns the smallest expression consistent with every
// snapshot.
inline std::optional<minilang::Expr> synthesize_condition(
    const SynthesisSpec& spec, int depth_bound, long long candidate_budget) {
  using gdetail::SynthCandidate;
  if (depth_bound < 1) return std::nullopt;

  std::vector<std::string> ints, bools, arrays;
  for (const auto& [name, ty] : spec.vocabulary) {
    if (ty == minilang::Type::Int) ints.push_back(name);
    if (ty == minilang::Type::Bool) bools.push_back(name);
    if (ty == minilang::Type::IntArray) arrays.push_back(name);
  }

  std::vector<SynthCandidate> atoms;
  for (const auto& v : bools)
    atoms.push_back({minilang::var_ref(v), 1, 1});
  for (const auto& v : bools)
    atoms.push_back({minilang::unary_expr("!", minilang::var_ref(v)), 2, 1});
  for (const auto& a : ints)
    for (const auto& b : ints) {
      if (a == b) continue;
      for (const auto& op : rel_ops())
        atoms.push_back(
            {minilang::binary_expr(op, minilang::var_ref(a), minilang::var_ref(b)),
             3, 1});
    }
  for (const auto& a : ints)
    for (const auto& op : rel_ops())
      for (long long c : spec.constants)
        atoms.push_back(
            {minilang::binary_expr(op, minilang::var_ref(a), minilang::int_lit(c)),
             3, 1});
  for (const auto& a : arrays)
    atoms.push_back({minilang::binary_expr("==", minilang::len_expr(minilang::var_ref(a)),
                                           minilang::int_lit(0)),
                     3, 1});

  // Grow by depth level, then evaluate in (size, construction order).
  const long long generation_cap =
      std::max<long long>(candidate_budget * 4, 500000);
  std::vector<SynthCandidate> all = atoms;
  for (int d = 2; d <= depth_bound &&
                  static_cast<long long>(all.size()) < generation_cap;
       ++d) {
    std::vector<SynthCandidate> level;
    auto room = [&] {
      return static_cast<long long>(all.size() + level.size()) < generation_cap;
    };
    for (const auto& e : all) {
      if (e.depth != d - 1 || !room()) continue;
      level.push_back({minilang::unary_expr("!", e.expr), e.size + 1, d});
    }
    for (const auto& op : {std::string("&&"), std::string("||")}) {
      for (const auto& a : all) {
        if (a.depth >= d) continue;
        for (const auto& b : all) {
          if (b.depth >= d) continue;
          if (a.depth != d - 1 && b.depth != d - 1) continue;  // new combos only
          if (!room()) break;
          level.push_back(
              {minilang::binary_expr(op, a.expr, b.expr), a.size + b.size + 1, d});
        }
      }
    }
    for (auto& e : level) all.push_back(std::move(e));
  }

  std::stable_sort(all.begin(), all.end(),
                   [](const SynthCandidate& a, const SynthCandidate& b) {
                     return a.size < b.size;
                   });

  long long tried = 0;
  for (const auto& c : all) {
    if (++tried > candidate_budget) break;
    // consistent() is the soundness check: the expression matches the
    // required outcome on every snapshot.
    if (gdetail::consistent(c.expr, spec)) return c.expr;
  }
  return std::nullopt;
}

// Materializes the final patch for a location/mode with synthesized C:
// ModifyCondition replaces the guard expression; InsertGuardSkip wraps the
// statement as `if (!(C)) { stmt }`; InsertGuardReturn inserts
// `if (C) { return d; }` before it.
inline std::optional<minilang::Program> materialize_guard_patch(
    const minilang::Program& p, const CandidateLocation& loc,
    const minilang::Expr& cond) {
  minilang::Program out = p;
  if (loc.mode == GuardMode::ModifyCondition) {
    minilang::NodeUid owner = owning_stmt(p, loc.node);
    auto sl = find_stmt(p, owner);
    if (!sl) return std::nullopt;
    stmt_at(out, *sl)->exprs[0] = cond;
  } else if (loc.mode == GuardMode::InsertGuardSkip) {
    minilang::NodeUid owner = owning_stmt(p, loc.node);
    auto sl = find_stmt(p, owner);
    if (!sl) return std::nullopt;
    auto* blk = block_at(out, *sl);
    minilang::Stmt wrapper;
    wrapper.kind = minilang::StmtKind::If;
    wrapper.exprs.push_back(minilang::unary_expr("!", cond));
    wrapper.body.push_back((*blk)[static_cast<size_t>(sl->index)]);
    (*blk)[static_cast<size_t>(sl->index)] = std::move(wrapper);
  } else {
    minilang::NodeUid owner = owning_stmt(p, loc.node);
    auto sl = find_stmt(p, owner);
    if (!sl) return std::nullopt;
    auto* blk = block_at(out, *sl);
    blk->insert(blk->begin() + sl->index,
                mdetail::make_guard_return(cond, loc.ret_default));
  }
  minilang::canonicalize(out);
  if (minilang::check_program(out)) return std::nullopt;
  return out;
}

// Strategy 2 pipeline: rank, compute EPCs of the top-k suspicious statements
// over every failing trace, inject their intersections into the ranking, then
// walk candidate locations searching for an angelic witness, synthesizing a
// concrete guard, and revalidating the whole suite from scratch.
inline RepairResult s2_repair(const RepairInput& input, const S2Config& cfg) {
  auto start = std::chrono::steady_clock::now();
  RepairResult result;
  long long evals = 0;
  auto out_of_budget = [&]() {
    if (cfg.eval_budget >= 0 && evals > cfg.eval_budget) return true;
    auto dt = std::chrono::steady_clock::now() - start;
    return std::chrono::duration<double>(dt).count() > cfg.time_budget_s;
  };
  auto finish = [&](RepairStatus st, const patchmodel::Patch& patch,
                    const std::string& note) {
    result.status = st;
    result.patch = patch;
    result.note = note;
    auto dt = std::chrono::steady_clock::now() - start;
    result.wall_ms = std::chrono::duration<double, std::milli>(dt).count();
    return result;
  };

  const auto& suite = input.suite;
  testkit::SuiteRunOptions base_opts;
  base_opts.fuel = cfg.fuel;
  base_opts.want_fail_trace = true;
  base_opts.want_coverage = true;
  auto baseline = testkit::run_suite(input.buggy, suite, base_opts);
  ++evals;
  result.tests_executed += static_cast<long long>(suite.size());
  auto failing0 = baseline.failing_names();
  result.initial_failing = static_cast<int>(failing0.size());
  patchmodel::Patch empty_patch = patchmodel::ast_diff(input.buggy, input.buggy);
  if (failing0.empty())
    return finish(RepairStatus::Success, empty_patch, "suite already passing");

  // Fault localization with EPC intersection injection.
  faultloc::Spectrum sp;
  sp.total_failing = baseline.failing;
  sp.total_passing = baseline.passing;
  for (const auto& t : baseline.tests)
    for (size_t u = 0; u < t.coverage.size(); ++u)
      if (t.coverage[u]) {
        auto& c = sp.counts[static_cast<minilang::NodeUid>(u)];
        if (t.passed)
          ++c.second;
        else
          ++c.first;
      }
  auto ranking = faultloc::rank(input.buggy, sp);

  std::vector<faultloc::Epc> chains;
  int seed_limit =
      std::min<int>(cfg.k_intersections, static_cast<int>(ranking.entries.size()));
  for (const auto& t : baseline.tests) {
    if (t.passed) continue;
    for (int i = 0; i < seed_limit; ++i) {
      auto epc = faultloc::compute_epc(input.buggy, t.fail_trace,
                                       ranking.entries[static_cast<size_t>(i)].node,
                                       t.name);
      if (epc) chains.push_back(std::move(*epc));
    }
  }
  ranking = faultloc::merge_intersections_into_ranking(input.buggy, ranking,
                                                       cfg.k_intersections, chains);
  if (cfg.line_assumption)
    ranking = faultloc::line_assumption(input.buggy, ranking, input.faulty_lines);

  auto locations = candidate_locations(input.buggy, ranking, cfg.top_k);

  bool saw_no_angelic = false;
  bool saw_no_synthesis = false;
  for (const auto& loc : locations) {
    if (out_of_budget()) break;
    auto scaffold = gdetail::materialize(input.buggy, loc);
    if (!scaffold) continue;

    auto witness = angelic_search(*scaffold, suite, loc, cfg.fuel,
                                  cfg.occurrence_bound, &evals,
                                  &result.tests_executed, out_of_budget);
    if (!witness) {
      saw_no_angelic = true;
      continue;
    }
    // Witness soundness: replaying the schedule leaves zero failing tests.
    for (const auto& [name, passed] : witness->evidence)
      if (!passed)
        throw std::logic_error("angelic witness unsound for test " + name);

    auto spec = collect_snapshots(*scaffold, suite, *witness, failing0, cfg.fuel,
                                  &result.tests_executed);
    auto cond = synthesize_condition(spec, cfg.depth_bound, cfg.synth_budget);
    if (!cond) {
      saw_no_synthesis = true;
      continue;
    }
    auto patched = materialize_guard_patch(input.buggy, loc, *cond);
    if (!patched) {
      saw_no_synthesis = true;
      continue;
    }
    testkit::SuiteRunOptions reval;
    reval.fuel = cfg.fuel;
    auto report = testkit::run_suite(*patched, suite, reval);
    ++evals;
    result.tests_executed += static_cast<long long>(suite.size());
    if (report.failing != 0) {
      saw_no_synthesis = true;
      continue;
    }

    auto patch = patchmodel::ast_diff(input.buggy, *patched);
    IterationLog log;
    log.action = std::string(guard_mode_name(loc.mode)) + "@" +
                 input.buggy.nodes[loc.node].id.to_string() + ":L" +
                 std::to_string(input.buggy.nodes[loc.node].line) + " [" +
                 minilang::render_expr(*cond) + "]";
    log.residual_before = result.initial_failing;
    log.residual_after = 0;
    log.regressions_after = 0;
    result.iterations.push_back(std::move(log));

    WitnessSummary ws;
    const auto& ninfo = input.buggy.nodes[loc.node];
    ws.fn = ninfo.id.fn;
    ws.line = ninfo.line;
    ws.node_index = ninfo.id.index;
    ws.mode = guard_mode_name(loc.mode);
    if (witness->schedule.empty()) {
      ws.schedule_kind = "empty";
    } else {
      const auto& pol = witness->schedule.begin()->second;
      if (pol.uniform) {
        ws.schedule_kind = "uniform";
        ws.uniform_value = pol.uniform_value;
      } else {
        ws.schedule_kind = "per_occurrence";
        ws.sequence = pol.seq;
      }
    }
    for (const auto& [name, passed] : witness->evidence) ws.tests.push_back(name);
    result.witness = std::move(ws);
    return finish(RepairStatus::Success, patch, "");
  }

  // Deepest progress wins the failure status; a budget expiry with no
  // progress at all reports Timeout.
  if (saw_no_synthesis)
    return finish(RepairStatus::NoSynthesis, empty_patch, "synthesis failed");
  if (saw_no_angelic)
    return finish(RepairStatus::NoAngelicValue, empty_patch, "no angelic value");
  return finish(RepairStatus::Timeout, empty_patch, "budget exhausted");
}

}  // namespace mlrepair::repair
