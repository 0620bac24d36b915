#include <catch2/catch.hpp>

#include <map>

#include "mlrepair/harness/corpus.hpp"
#include "mlrepair/testkit.hpp"
#include "testgen.hpp"

using namespace mlrepair;
using namespace mlrepair::testkit;

namespace {

std::string corpus_path(const std::string& rel) {
  return std::string(MLREPAIR_CORPUS_DIR) + "/" + rel;
}

// Multiset of assertions, keyed by rendered call plus expectation.
std::multiset<std::string> assertion_multiset(const std::vector<TestCase>& suite) {
  std::multiset<std::string> out;
  for (const auto& t : suite)
    for (const auto& a : t.assertions)
      out.insert(a.call.to_string() + "->" +
                 (a.expects_error ? minilang::err_name(a.expect_err)
                                  : a.expect_value.to_string()));
  return out;
}

}  // namespace

TEST_CASE("run_suite: fixed twin_guard passes everything") {
  auto bug = harness::load_bug(corpus_path("twin_guard"));
  auto report = run_suite(bug.fixed, bug.suite);
  REQUIRE(report.failing == 0);
}

TEST_CASE("run_suite: purified+augmented twin_guard suite has two failing tests") {
  auto bug = harness::load_bug(corpus_path("twin_guard"));
  AugmentConfig ac;
  ac.max_new = 1;
  ac.seed = 1;
  auto suite = bug.suite;
  auto aug = augment(bug.buggy, bug.fixed, bug.meta.domains, ac);
  REQUIRE(aug.tests.size() == 1);
  for (auto& t : aug.tests) suite.push_back(t);
  suite = purify(suite);
  auto report = run_suite(bug.buggy, suite);
  REQUIRE(report.failing == 2);
}

TEST_CASE("run_suite: omission semantics stop at the first failing assertion") {
  auto p = minilang::parse("fn f(x: int) -> int { return x; }");
  TestCase t;
  t.name = "three";
  t.assertions.push_back(Assertion::returns({"f", {minilang::Value::of_int(1)}},
                                            minilang::Value::of_int(1)));  // pass
  t.assertions.push_back(Assertion::returns({"f", {minilang::Value::of_int(2)}},
                                            minilang::Value::of_int(99)));  // fail
  t.assertions.push_back(Assertion::returns({"f", {minilang::Value::of_int(3)}},
                                            minilang::Value::of_int(3)));  // never runs
  auto report = run_suite(p, {t});
  REQUIRE(report.failing == 1);
  REQUIRE(report.tests[0].fail_index == 1);
  REQUIRE(report.tests[0].assertions_run == 2);
}

TEST_CASE("purify: counting and naming") {
  TestCase t;
  t.name = "t";
  for (int i = 0; i < 3; ++i)
    t.assertions.push_back(Assertion::returns({"f", {minilang::Value::of_int(i)}},
                                              minilang::Value::of_int(i)));
  auto out = purify({t});
  REQUIRE(out.size() == 3);
  REQUIRE(out[0].name == "t#0");
  REQUIRE(out[2].name == "t#2");
  for (const auto& pt : out) REQUIRE(pt.assertions.size() == 1);

  // Single-assertion suites pass through with the #0 suffix.
  TestCase single;
  single.name = "s";
  single.assertions.push_back(t.assertions[0]);
  auto out2 = purify({single});
  REQUIRE(out2.size() == 1);
  REQUIRE(out2[0].name == "s#0");
  REQUIRE(assertion_multiset(out2) == assertion_multiset({single}));
}

TEST_CASE("purify: multi_assert exposes the masked failure") {
  auto bug = harness::load_bug(corpus_path("multi_assert"));
  auto before = run_suite(bug.buggy, bug.suite);
  REQUIRE(before.failing == 1);
  auto purified = purify(bug.suite);
  auto after = run_suite(bug.buggy, purified);
  REQUIRE(after.failing == 2);
  REQUIRE(assertion_multiset(purified) == assertion_multiset(bug.suite));
}

TEST_CASE("purify property: failing count never drops; assertions preserved") {
  testgen::Gen g(77);
  auto bug = harness::load_bug(corpus_path("multi_assert"));
  for (int round = 0; round < 50; ++round) {
    // Random suites assembled from the bug's assertion pool.
    std::vector<Assertion> pool;
    for (const auto& t : bug.suite)
      for (const auto& a : t.assertions) pool.push_back(a);
    std::vector<TestCase> suite;
    long long ntests = g.pick(1, 4);
    for (long long i = 0; i < ntests; ++i) {
      TestCase t;
      t.name = "r" + std::to_string(i);
      long long na = g.pick(1, 4);
      for (long long j = 0; j < na; ++j)
        t.assertions.push_back(pool[static_cast<size_t>(
            g.pick(0, static_cast<long long>(pool.size()) - 1))]);
      suite.push_back(std::move(t));
    }
    auto before = run_suite(bug.buggy, suite);
    auto purified = purify(suite);
    auto after = run_suite(bug.buggy, purified);
    REQUIRE(after.failing >= before.failing);
    REQUIRE(assertion_multiset(purified) == assertion_multiset(suite));
    REQUIRE(count_assertions(purified) == count_assertions(suite));
  }
}

TEST_CASE("augment: no behavioral difference yields nothing") {
  auto bug = harness::load_bug(corpus_path("twin_guard"));
  AugmentConfig ac;
  auto out = augment(bug.fixed, bug.fixed, bug.meta.domains, ac);
  REQUIRE(out.tests.empty());
  REQUIRE(out.samples == ac.budget);
}

TEST_CASE("augment: zero budget yields nothing") {
  auto bug = harness::load_bug(corpus_path("twin_guard"));
  AugmentConfig ac;
  ac.budget = 0;
  auto out = augment(bug.buggy, bug.fixed, bug.meta.domains, ac);
  REQUIRE(out.tests.empty());
}

TEST_CASE("augment: twin_guard gains a witness for the second defect") {
  auto bug = harness::load_bug(corpus_path("twin_guard"));
  AugmentConfig ac;
  ac.budget = 500;
  ac.max_new = 4;
  ac.seed = 1;
  auto out = augment(bug.buggy, bug.fixed, bug.meta.domains, ac);
  bool second = false;
  for (const auto& t : out.tests) second = second || t.assertions[0].call.fn == "first_neg";
  REQUIRE(second);
  // Generated tests fail on buggy and pass on the oracle, by construction.
  for (const auto& t : out.tests) {
    auto on_buggy = run_suite(bug.buggy, {t});
    auto on_oracle = run_suite(bug.fixed, {t});
    REQUIRE(on_buggy.failing == 1);
    REQUIRE(on_oracle.failing == 0);
  }
}

TEST_CASE("augment: passing regression tests only on request") {
  auto bug = harness::load_bug(corpus_path("twin_guard"));
  AugmentConfig ac;
  ac.budget = 100;
  ac.max_new = 20;
  ac.seed = 3;
  auto failing_only = augment(bug.buggy, bug.fixed, bug.meta.domains, ac);
  for (const auto& t : failing_only.tests)
    REQUIRE(run_suite(bug.buggy, {t}).failing == 1);

  ac.include_passing = true;
  auto mixed = augment(bug.buggy, bug.fixed, bug.meta.domains, ac);
  bool some_pass = false;
  for (const auto& t : mixed.tests)
    some_pass = some_pass || run_suite(bug.buggy, {t}).failing == 0;
  REQUIRE(some_pass);
  // Everything still passes on the oracle.
  for (const auto& t : mixed.tests)
    REQUIRE(run_suite(bug.fixed, {t}).failing == 0);
}

TEST_CASE("augment: diverging oracle samples are skipped and counted") {
  auto oracle = minilang::parse(
      "fn spin(n: int) -> int { while (n > 0) { } return 0; }");
  auto buggy = minilang::parse("fn spin(n: int) -> int { return 1; }");
  InputDomains domains;
  domains["spin"] = {ParamDomain::int_range(1, 3)};  // always diverges
  AugmentConfig ac;
  ac.budget = 20;
  ac.fuel = 500;
  auto out = augment(buggy, oracle, domains, ac);
  REQUIRE(out.tests.empty());
  REQUIRE(out.oracle_diverged == 20);
}

TEST_CASE("augment: deterministic under a fixed seed") {
  auto bug = harness::load_bug(corpus_path("twin_guard"));
  AugmentConfig ac;
  ac.seed = 42;
  auto a = augment(bug.buggy, bug.fixed, bug.meta.domains, ac);
  auto b = augment(bug.buggy, bug.fixed, bug.meta.domains, ac);
  REQUIRE(a.tests.size() == b.tests.size());
  for (size_t i = 0; i < a.tests.size(); ++i) {
    REQUIRE(a.tests[i].name == b.tests[i].name);
    REQUIRE(a.tests[i].assertions[0].call.to_string() ==
            b.tests[i].assertions[0].call.to_string());
  }
}

TEST_CASE("differential_check: reflexivity") {
  auto bug = harness::load_bug(corpus_path("dup_flag"));
  auto out = differential_check(bug.fixed, bug.fixed, bug.meta.domains, 200, 7);
  REQUIRE(out.equivalent);
}

TEST_CASE("differential_check: twin_guard buggy vs fixed diverges") {
  auto bug = harness::load_bug(corpus_path("twin_guard"));
  auto out = differential_check(bug.buggy, bug.fixed, bug.meta.domains, 1000, 1);
  REQUIRE_FALSE(out.equivalent);

  // Exhaustive small-domain sweep confirms genuine divergence: every
  // positive-free array makes the buggy first_pos return 0 instead of
  // aborting.
  bool found = false;
  for (long long x : {-1, 0}) {
    minilang::CallSpec call{"first_pos", {minilang::Value::of_array({x})}};
    auto a = minilang::execute(bug.buggy, call);
    auto b = minilang::execute(bug.fixed, call);
    found = found || !minilang::same_outcome(a.trace.term, b.trace.term);
  }
  REQUIRE(found);
}

TEST_CASE("differential_check: deterministic under a fixed seed") {
  auto bug = harness::load_bug(corpus_path("twin_guard"));
  auto a = differential_check(bug.buggy, bug.fixed, bug.meta.domains, 50, 5);
  auto b = differential_check(bug.buggy, bug.fixed, bug.meta.domains, 50, 5);
  REQUIRE(a.equivalent == b.equivalent);
  REQUIRE(a.counter_call.to_string() == b.counter_call.to_string());
}
