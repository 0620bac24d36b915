#include <catch2/catch.hpp>

#include "mlrepair/harness/corpus.hpp"
#include "mlrepair/minilang/interp.hpp"
#include "mlrepair/minilang/parser.hpp"
#include "mlrepair/minilang/printer.hpp"
#include "testgen.hpp"

using namespace mlrepair::minilang;

namespace {

std::string corpus_path(const std::string& rel) {
  return std::string(MLREPAIR_CORPUS_DIR) + "/" + rel;
}

Program parse_file(const std::string& rel) {
  return parse(mlrepair::harness::read_file(corpus_path(rel)));
}

const char* kMax3 = R"(
fn max3(a: int, b: int, c: int) -> int {
  let m: int = a;
  if (b > m) {
    m = b;
  }
  if (c > m) {
    m = c;
  }
  return m;
}
)";

}  // namespace

TEST_CASE("parse: minimal program") {
  Program p = parse("fn id(x: int) -> int { return x; }");
  REQUIRE(p.functions.size() == 1);
  REQUIRE(p.functions[0].body.size() == 1);
}

TEST_CASE("parse: undeclared variable is a parse error") {
  REQUIRE_THROWS_AS(parse("fn f() -> int { return y; }"), ParseError);
  try {
    parse("fn f() -> int { return y; }");
  } catch (const ParseError& e) {
    REQUIRE(std::string(e.what()).find("undeclared variable y") != std::string::npos);
  }
}

TEST_CASE("parse: corpus twin_guard has two functions") {
  Program p = parse_file("twin_guard/program.ml");
  REQUIRE(p.functions.size() == 2);
}

TEST_CASE("parse: assorted static errors") {
  REQUIRE_THROWS_AS(parse("fn f( -> int { return 1; }"), ParseError);
  REQUIRE_THROWS_AS(parse("fn f() -> int { let x: bool = 1; return 0; }"), ParseError);
  REQUIRE_THROWS_AS(parse("fn f() -> int { if (1) { } return 0; }"), ParseError);
  REQUIRE_THROWS_AS(parse("fn f(x: int) -> int { let x: int = 1; return x; }"), ParseError);
  REQUIRE_THROWS_AS(parse("fn f() -> int { let a: int = 1; }"), ParseError);  // missing return
  REQUIRE_THROWS_AS(parse("fn f() -> int { return; }"), ParseError);
  REQUIRE_THROWS_AS(parse("fn f() -> int { return g(); }"), ParseError);
  REQUIRE_THROWS_AS(parse("fn f() -> bool { return 1 < true; }"), ParseError);
}

TEST_CASE("pretty: canonical layout for a one-line function") {
  Program p = parse("fn id(x: int) -> int{return x;}");
  std::string text = pretty_print(p);
  REQUIRE(text == "fn id(x: int) -> int {\n  return x;\n}\n");
}

TEST_CASE("pretty: idempotent on every corpus file") {
  const char* bugs[] = {"twin_guard", "dup_flag", "guard_pair", "helper_call",
                        "triple_clamp", "quad_guard", "mixed_bag", "odd_pair",
                        "off_by_one", "neg_return", "no_angelic", "multi_assert",
                        "slow_loop"};
  for (const char* b : bugs) {
    for (const char* f : {"program.ml", "fixed.ml"}) {
      std::string src = mlrepair::harness::read_file(corpus_path(std::string(b) + "/" + f));
      Program p = parse(src);
      std::string once = pretty_print(p);
      Program q = parse(once);
      REQUIRE(struct_eq(p, q));
      REQUIRE(pretty_print(q) == once);
      // Corpus files ship in canonical form already.
      REQUIRE(once == src);
    }
  }
}

TEST_CASE("pretty: patched program differs exactly on edited lines") {
  Program base = parse(kMax3);
  Program patched = parse(kMax3);
  // Flip the first condition's operator in place.
  patched.functions[0].body[1].exprs[0].op = ">=";
  canonicalize(patched);
  std::string a = pretty_print(base);
  std::string b = pretty_print(patched);
  std::vector<std::string> la, lb;
  std::string cur;
  for (char c : a) c == '\n' ? (la.push_back(cur), cur.clear()) : (void)(cur += c);
  for (char c : b) c == '\n' ? (lb.push_back(cur), cur.clear()) : (void)(cur += c);
  REQUIRE(la.size() == lb.size());
  int diffs = 0;
  for (size_t i = 0; i < la.size(); ++i)
    if (la[i] != lb[i]) {
      ++diffs;
      REQUIRE(i + 1 == 3);  // the edited guard line
    }
  REQUIRE(diffs == 1);
}

TEST_CASE("execute: max3 by hand") {
  Program p = parse(kMax3);
  auto r = execute(p, {"max3", {Value::of_int(1), Value::of_int(2), Value::of_int(3)}});
  REQUIRE(r.trace.term.normal());
  REQUIRE(r.trace.term.value == Value::of_int(3));
  std::string why;
  REQUIRE(validate_trace(p, r.trace, &why));
}

TEST_CASE("execute: division by zero") {
  Program p = parse("fn div(a: int, b: int) -> int { return a / b; }");
  auto r = execute(p, {"div", {Value::of_int(1), Value::of_int(0)}});
  REQUIRE(r.trace.term.is_error());
  REQUIRE(r.trace.term.err == ErrKind::DivByZero);
  REQUIRE(r.trace.term.error_node == r.trace.events.back().node);
}

TEST_CASE("execute: fuel exhaustion") {
  Program p = parse("fn loop_forever() -> int { while (true) { } return 0; }");
  auto r = execute(p, {"loop_forever", {}}, 100);
  REQUIRE(r.trace.term.kind == Termination::Kind::FuelExhausted);
}

TEST_CASE("execute: index out of bounds and abort kinds") {
  Program p = parse(R"(
fn pick(xs: int[], i: int) -> int {
  return xs[i];
}
fn bail() -> int {
  abort("nope");
}
)");
  auto r = execute(p, {"pick", {Value::of_array({1, 2}), Value::of_int(5)}});
  REQUIRE(r.trace.term.is_error());
  REQUIRE(r.trace.term.err == ErrKind::IndexOutOfBounds);
  auto a = execute(p, {"bail", {}});
  REQUIRE(a.trace.term.is_error());
  REQUIRE(a.trace.term.err == ErrKind::Abort);
  REQUIRE(a.trace.term.message == "nope");
}

TEST_CASE("override: empty schedule equals plain execution on corpus tests") {
  auto bug = mlrepair::harness::load_bug(corpus_path("dup_flag"));
  OverrideSchedule empty;
  for (const auto& t : bug.suite) {
    for (const auto& a : t.assertions) {
      auto plain = execute(bug.buggy, a.call);
      auto forced = execute_with_overrides(bug.buggy, a.call, empty);
      REQUIRE(same_outcome(plain.trace.term, forced.trace.term));
      REQUIRE(plain.trace.events.size() == forced.trace.events.size());
    }
  }
}

TEST_CASE("override: forcing the dup_flag late conditional fixes the failing test") {
  auto bug = mlrepair::harness::load_bug(corpus_path("dup_flag"));
  NodeUid late = bug.buggy.unit_at("add_or_update", 20);
  REQUIRE(late >= 0);
  REQUIRE(bug.buggy.nodes[late].is_guard);
  OverrideSchedule sched;
  sched[late] = OverridePolicy::uniform_of(false);
  // dup_allowed: add_or_update([1,2,3,0], 3, 2, true) crashes unforced.
  CallSpec crashing{"add_or_update",
                    {Value::of_array({1, 2, 3, 0}), Value::of_int(3),
                     Value::of_int(2), Value::of_bool(true)}};
  auto plain = execute(bug.buggy, crashing);
  REQUIRE(plain.trace.term.is_error());
  auto forced = execute_with_overrides(bug.buggy, crashing, sched);
  REQUIRE(forced.trace.term.normal());
  REQUIRE(forced.trace.term.value == Value::of_int(4));
}

TEST_CASE("override: per-occurrence falls through to real evaluation") {
  Program p = parse("fn g() -> int { let i: int = 0; while (i > 0) { i = i - 1; } return i; }");
  NodeUid guard = -1;
  for (NodeUid u = 0; u < static_cast<NodeUid>(p.nodes.size()); ++u)
    if (p.nodes[u].is_guard) guard = u;
  REQUIRE(guard >= 0);
  OverrideSchedule sched;
  sched[guard] = OverridePolicy::per_occurrence({true});
  auto r = execute_with_overrides(p, {"g", {}}, sched, 100);
  // One forced iteration, then the real guard (false) stops the loop.
  REQUIRE(r.trace.term.normal());
  REQUIRE(r.trace.term.value == Value::of_int(-1));
  int forced = 0;
  for (const auto& e : r.trace.events)
    if (e.forced) ++forced;
  REQUIRE(forced == 1);
}

TEST_CASE("override: real outcome still recorded on forced branches") {
  Program p = parse("fn h(x: int) -> int { if (x > 0) { return 1; } return 0; }");
  NodeUid guard = -1;
  for (NodeUid u = 0; u < static_cast<NodeUid>(p.nodes.size()); ++u)
    if (p.nodes[u].is_guard) guard = u;
  OverrideSchedule sched;
  sched[guard] = OverridePolicy::uniform_of(false);
  auto r = execute_with_overrides(p, {"h", {Value::of_int(5)}}, sched);
  REQUIRE(r.trace.term.value == Value::of_int(0));
  bool saw = false;
  for (const auto& e : r.trace.events) {
    if (e.kind == EventKind::Branch) {
      saw = true;
      REQUIRE(e.forced);
      REQUIRE(e.branch_outcome == false);
      REQUIRE(e.real_outcome == true);
    }
  }
  REQUIRE(saw);
}

TEST_CASE("property: determinism, roundtrip, trace soundness, override neutrality") {
  testgen::Gen g(20240811);
  for (int i = 0; i < 300; ++i) {
    Program p = testgen::gen_program(g);

    // Canonical-form roundtrip, line for line.
    std::string text = pretty_print(p);
    Program q = parse(text);
    REQUIRE(struct_eq(p, q));
    REQUIRE(pretty_print(q) == text);

    if (p.functions.empty()) continue;
    const FunctionDef& f = p.functions.back();
    auto args = testgen::gen_args(g, f);
    CallSpec call{f.name, args};

    auto r1 = execute(p, call, 2000);
    auto r2 = execute(p, call, 2000);
    REQUIRE(same_outcome(r1.trace.term, r2.trace.term));
    REQUIRE(r1.trace.events.size() == r2.trace.events.size());
    for (size_t k = 0; k < r1.trace.events.size(); ++k) {
      REQUIRE(r1.trace.events[k].node == r2.trace.events[k].node);
      REQUIRE(r1.trace.events[k].branch_outcome == r2.trace.events[k].branch_outcome);
    }

    std::string why;
    REQUIRE(validate_trace(p, r1.trace, &why));

    OverrideSchedule empty;
    auto r3 = execute_with_overrides(p, call, empty, 2000);
    REQUIRE(same_outcome(r1.trace.term, r3.trace.term));
  }
}
