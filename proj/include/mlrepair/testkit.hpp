#pragma once

#include <cassert>
#include <stdexcept>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "mlrepair/minilang/ast.hpp"
#include "mlrepair/minilang/interp.hpp"

namespace mlrepair::testkit {

using minilang::CallSpec;
using minilang::ErrKind;
using minilang::ExecTrace;
using minilang::OverrideSchedule;
using minilang::Program;
using minilang::Termination;
using minilang::Value;

// Deterministic across platforms: raw mt19937_64 output with explicit
// modulo mapping (std::uniform_int_distribution is implementation-defined).
class Rng {
 public:
  explicit Rng(unsigned long long seed) : eng_(seed) {}

  long long pick(long long lo, long long hi) {
    assert(lo <= hi);
    unsigned long long span = static_cast<unsigned long long>(hi - lo) + 1;
    return lo + static_cast<long long>(eng_() % span);
  }

  bool flip() { return (eng_() & 1ULL) != 0; }

 private:
  std::mt19937_64 eng_;
};

struct ParamDomain {
  enum class Kind { Int, Bool, Array } kind = Kind::Int;
  long long lo = 0, hi = 0;          // Int: value range; Array: element range
  long long len_lo = 0, len_hi = 0;  // Array only

  static ParamDomain int_range(long long lo, long long hi) {
    ParamDomain d;
    d.kind = Kind::Int;
    d.lo = lo;
    d.hi = hi;
    return d;
  }
  static ParamDomain any_bool() {
    ParamDomain d;
    d.kind = Kind::Bool;
    return d;
  }
  static ParamDomain array(long long len_lo, long long len_hi, long long lo,
                           long long hi) {
    ParamDomain d;
    d.kind = Kind::Array;
    d.len_lo = len_lo;
    d.len_hi = len_hi;
    d.lo = lo;
    d.hi = hi;
    return d;
  }

  Value sample(Rng& rng) const {
    switch (kind) {
      case Kind::Int:
        return Value::of_int(rng.pick(lo, hi));
      case Kind::Bool:
        return Value::of_bool(rng.flip());
      case Kind::Array: {
        long long n = rng.pick(len_lo, len_hi);
        std::vector<long long> a;
        a.reserve(static_cast<size_t>(n));
        for (long long i = 0; i < n; ++i) a.push_back(rng.pick(lo, hi));
        return Value::of_array(std::move(a));
      }
    }
    return Value::unit();
  }
};

// Per-function parameter domains for input generation.
using InputDomains = std::map<std::string, std::vector<ParamDomain>>;

struct Assertion {
  CallSpec call;
  bool expects_error = false;
  Value expect_value;
  ErrKind expect_err = ErrKind::Abort;

  static Assertion returns(CallSpec c, Value v) {
    Assertion a;
    a.call = std::move(c);
    a.expect_value = std::move(v);
    return a;
  }
  static Assertion errors(CallSpec c, ErrKind k) {
    Assertion a;
    a.call = std::move(c);
    a.expects_error = true;
    a.expect_err = k;
    return a;
  }

  bool matches(const Termination& t) const {
    if (expects_error)
      return t.kind == Termination::Kind::RuntimeError && t.err == expect_err;
    return t.normal() && t.value == expect_value;
  }
};

struct TestCase {
  std::string name;
  std::vector<Assertion> assertions;
};

struct TestResult {
  std::string name;
  bool passed = false;
  int fail_index = -1;           // first failing assertion
  Termination observed;          // of the failing assertion
  ExecTrace fail_trace;          // populated when requested
  std::vector<char> coverage;    // per-uid union over executed assertions
  int assertions_run = 0;
};

struct SuiteReport {
  std::vector<TestResult> tests;
  int passing = 0;
  int failing = 0;

  std::set<std::string> failing_names() const {
    std::set<std::string> out;
    for (const auto& t : tests)
      if (!t.passed) out.insert(t.name);
    return out;
  }
  std::set<std::string> passing_names() const {
    std::set<std::string> out;
    for (const auto& t : tests)
      if (t.passed) out.insert(t.name);
    return out;
  }
};

struct SuiteRunOptions {
  long long fuel = minilang::kDefaultFuel;
  const OverrideSchedule* overrides = nullptr;
  bool want_coverage = false;
  bool want_fail_trace = false;
};

// Runs each test's assertions in order, stopping the test at its first
// failing assertion; later assertions of a failed test are not executed.
inline SuiteReport run_suite(const Program& p, const std::vector<TestCase>& suite,
                             const SuiteRunOptions& opts = {}) {
  SuiteReport report;
  report.tests.reserve(suite.size());
  for (const auto& tc : suite) {
    TestResult tr;
    tr.name = tc.name;
    tr.passed = true;
    if (opts.want_coverage) tr.coverage.assign(p.nodes.size(), 0);
    for (size_t i = 0; i < tc.assertions.size(); ++i) {
      const Assertion& a = tc.assertions[i];
      minilang::ExecOptions eo;
      eo.fuel = opts.fuel;
      eo.overrides = opts.overrides;
      eo.trace = opts.want_fail_trace
                     ? minilang::TraceMode::Full
                     : (opts.want_coverage ? minilang::TraceMode::Coverage
                                           : minilang::TraceMode::None);
      auto r = minilang::execute_opts(p, a.call, eo);
      ++tr.assertions_run;
      if (opts.want_coverage)
        for (size_t u = 0; u < r.covered.size(); ++u)
          if (r.covered[u]) tr.coverage[u] = 1;
      if (!a.matches(r.trace.term)) {
        tr.passed = false;
        tr.fail_index = static_cast<int>(i);
        tr.observed = r.trace.term;
        if (opts.want_fail_trace) tr.fail_trace = std::move(r.trace);
        break;
      }
    }
    if (tr.passed)
      ++report.passing;
    else
      ++report.failing;
    report.tests.push_back(std::move(tr));
  }
  return report;
}

// Test case purification: every test with n assertions becomes n
// single-assertion tests named "<name>#k", so assertions behind an early
// failure still execute.
inline std::vector<TestCase> purify(const std::vector<TestCase>& suite) {
  std::vector<TestCase> out;
  for (const auto& tc : suite) {
    for (size_t i = 0; i < tc.assertions.size(); ++i) {
      TestCase t;
      t.name = tc.name + "#" + std::to_string(i);
      t.assertions.push_back(tc.assertions[i]);
      out.push_back(std::move(t));
    }
  }
  return out;
}

inline long long count_assertions(const std::vector<TestCase>& suite) {
  long long n = 0;
  for (const auto& t : suite) n += static_cast<long long>(t.assertions.size());
  return n;
}

struct AugmentConfig {
  int budget = 500;       // samples drawn
  int max_new = 8;        // generated tests kept
  unsigned long long seed = 1;
  bool include_passing = false;  // also keep tests where buggy agrees
  long long fuel = minilang::kDefaultFuel;
};

struct AugmentResult {
  std::vector<TestCase> tests;
  int samples = 0;
  int oracle_diverged = 0;  // oracle hit the fuel budget; sample skipped
};

namespace detail {

inline Assertion assertion_from_outcome(CallSpec call, const Termination& t) {
  if (t.normal()) return Assertion::returns(std::move(call), t.value);
  return Assertion::errors(std::move(call), t.err);
}

inline std::string args_key(const CallSpec& c) { return c.to_string(); }

}  // namespace detail

// Oracle-guided test generation: samples inputs from the domains, takes the
// oracle's result as the expected value, and keeps inputs on which the buggy
// program disagrees (they fail on buggy by construction).
inline AugmentResult augment(const Program& buggy, const Program& oracle,
                             const InputDomains& domains,
                             const AugmentConfig& cfg = {}) {
  AugmentResult out;
  std::vector<std::string> fns;
  for (const auto& [fn, doms] : domains)
    if (oracle.find_function(fn)) fns.push_back(fn);
  if (fns.empty()) return out;

  Rng rng(cfg.seed);
  std::set<std::string> seen;
  int made = 0;
  for (int i = 0; i < cfg.budget && made < cfg.max_new; ++i) {
    ++out.samples;
    const std::string& fn = fns[static_cast<size_t>(
        rng.pick(0, static_cast<long long>(fns.size()) - 1))];
    CallSpec call;
    call.fn = fn;
    for (const auto& d : domains.at(fn)) call.args.push_back(d.sample(rng));

    minilang::ExecOptions eo;
    eo.fuel = cfg.fuel;
    eo.trace = minilang::TraceMode::None;
    auto oracle_run = minilang::execute_opts(oracle, call, eo);
    if (oracle_run.trace.term.kind == Termination::Kind::FuelExhausted) {
      ++out.oracle_diverged;
      continue;
    }
    auto buggy_run = minilang::execute_opts(buggy, call, eo);
    bool differs =
        !minilang::same_outcome(buggy_run.trace.term, oracle_run.trace.term);
    if (!differs && !cfg.include_passing) continue;
    std::string key = detail::args_key(call);
    if (!seen.insert(key).second) continue;

    TestCase t;
    t.name = "aug" + std::to_string(made) + "_" + fn;
    t.assertions.push_back(
        detail::assertion_from_outcome(std::move(call), oracle_run.trace.term));
    out.tests.push_back(std::move(t));
    ++made;
  }

  // By construction every generated test passes on the oracle; when only
  // disagreements are kept they all fail on buggy.
  for (const auto& t : out.tests) {
    minilang::ExecOptions eo;
    eo.fuel = cfg.fuel;
    eo.trace = minilang::TraceMode::None;
    auto check = minilang::execute_opts(oracle, t.assertions[0].call, eo);
    if (!t.assertions[0].matches(check.trace.term))
      throw std::logic_error("augmented test does not pass on the oracle");
  }
  return out;
}

struct DiffOutcome {
  bool equivalent = true;
  CallSpec counter_call;
  Termination candidate_term;
  Termination reference_term;
};

// Differential approximation of semantic equivalence: seeded random inputs
// per function; results must match as values or as error kinds.
inline DiffOutcome differential_check(const Program& candidate,
                                      const Program& reference,
                                      const InputDomains& domains,
                                      int trials = 1000,
                                      unsigned long long seed = 1,
                                      long long fuel = minilang::kDefaultFuel) {
  DiffOutcome out;
  for (const auto& [fn, doms] : domains) {
    if (!reference.find_function(fn)) continue;
    Rng rng(seed ^ std::hash<std::string>{}(fn));
    for (int i = 0; i < trials; ++i) {
      CallSpec call;
      call.fn = fn;
      for (const auto& d : doms) call.args.push_back(d.sample(rng));
      minilang::ExecOptions eo;
      eo.fuel = fuel;
      eo.trace = minilang::TraceMode::None;
      auto a = minilang::execute_opts(candidate, call, eo);
      auto b = minilang::execute_opts(reference, call, eo);
      if (!minilang::same_outcome(a.trace.term, b.trace.term)) {
        out.equivalent = false;
        out.counter_call = std::move(call);
        out.candidate_term = a.trace.term;
        out.reference_term = b.trace.term;
        return out;
      }
    }
  }
  return out;
}

}  // namespace mlrepair::testkit
