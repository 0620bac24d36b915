#include <catch2/catch.hpp>

#include "mlrepair/harness/bench.hpp"
#include "mlrepair/harness/corpus.hpp"
#include "mlrepair/repair/search.hpp"

using namespace mlrepair;
using namespace mlrepair::repair;

namespace {

std::string corpus_path(const std::string& rel) {
  return std::string(MLREPAIR_CORPUS_DIR) + "/" + rel;
}

S1Config desk_config() {
  S1Config cfg;
  cfg.top_k = 20;
  cfg.purify = true;
  cfg.augment = true;
  cfg.seed = 1;
  return cfg;
}

}  // namespace

TEST_CASE("enumerate_mutations: guard templates at an array-returning site") {
  auto p = minilang::parse(R"(
fn f(xs: int[]) -> int {
  return 0;
}
)");
  faultloc::Ranking r;
  minilang::NodeUid ret = p.unit_at("f", 2);
  r.entries.push_back(faultloc::RankEntry{ret, p.nodes[ret].id, 2, 1.0});
  auto ops = enumerate_mutations(p, r, 1);
  bool has_len_guard = false;
  for (const auto& op : ops)
    if (op.kind == MutKind::InsertGuardAbort &&
        minilang::render_expr(op.guard) == "len(xs) == 0")
      has_len_guard = true;
  REQUIRE(has_len_guard);
}

TEST_CASE("enumerate_mutations: relational operator variants") {
  auto p = minilang::parse(R"(
fn f(b: int, m: int) -> int {
  if (b > m) {
    return 1;
  }
  return 0;
}
)");
  minilang::NodeUid guard = -1;
  for (minilang::NodeUid u = 0; u < static_cast<minilang::NodeUid>(p.nodes.size()); ++u)
    if (p.nodes[u].is_guard) guard = u;
  faultloc::Ranking r;
  r.entries.push_back(faultloc::RankEntry{guard, p.nodes[guard].id,
                                          p.nodes[guard].line, 1.0});
  auto ops = enumerate_mutations(p, r, 1);
  std::set<std::string> rel;
  for (const auto& op : ops)
    if (op.kind == MutKind::ReplaceRelOp) rel.insert(op.new_op);
  REQUIRE(rel == std::set<std::string>{"<", "<=", ">", ">=", "==", "!="});
}

TEST_CASE("enumerate_mutations: abort elsewhere becomes an ingredient") {
  auto p = minilang::parse(R"(
fn g() -> int {
  abort("empty");
}

fn f(x: int) -> int {
  return x;
}
)");
  minilang::NodeUid ret = p.unit_at("f", 6);
  REQUIRE(ret >= 0);
  faultloc::Ranking r;
  r.entries.push_back(faultloc::RankEntry{ret, p.nodes[ret].id, 6, 1.0});
  auto ops = enumerate_mutations(p, r, 1);
  bool has_abort_ingredient = false;
  for (const auto& op : ops) {
    if (op.kind != MutKind::ReplaceWithIngredient) continue;
    auto mutated = apply_mutation(p, op);
    if (!mutated) continue;
    if (minilang::pretty_print(*mutated).find("abort(\"empty\")") !=
        std::string::npos)
      has_abort_ingredient = true;
  }
  REQUIRE(has_abort_ingredient);
}

TEST_CASE("evaluate_fitness: baseline, partial fix, regression") {
  auto bug = harness::load_bug(corpus_path("twin_guard"));
  auto suite = session_suite(bug.repair_input(), true, true, desk_config());
  auto baseline = testkit::run_suite(bug.buggy, suite);
  auto failing0 = baseline.failing_names();
  auto passing0 = baseline.passing_names();

  auto fs = evaluate_fitness(bug.buggy, suite, failing0, passing0);
  REQUIRE(fs.residual == static_cast<int>(failing0.size()));
  REQUIRE(fs.regressions == 0);

  // Fixing one of the two defects drops residual without regressions.
  auto partial = bug.buggy;
  partial.functions[0].body.back().kind = minilang::StmtKind::Abort;
  partial.functions[0].body.back().exprs.clear();
  partial.functions[0].body.back().message = "no match";
  minilang::canonicalize(partial);
  auto fs1 = evaluate_fitness(partial, suite, failing0, passing0);
  REQUIRE(fs1.residual < fs.residual);
  REQUIRE(fs1.residual > 0);
  REQUIRE(fs1.regressions == 0);

  // Breaking a passing path shows up as a regression: first_pos's in-loop
  // return comes back off by one.
  auto broken = bug.buggy;
  auto& ret_i = broken.functions[0].body[1].body[0].body[0];
  ret_i.exprs[0] = minilang::binary_expr("+", ret_i.exprs[0], minilang::int_lit(1));
  minilang::canonicalize(broken);
  auto fs2 = evaluate_fitness(broken, suite, failing0, passing0);
  REQUIRE(fs2.regressions >= 1);
}

TEST_CASE("s1_repair: twin_guard with purify+augment succeeds in two iterations") {
  auto bug = harness::load_bug(corpus_path("twin_guard"));
  auto result = s1_repair(bug.repair_input(), desk_config());
  REQUIRE(result.status == RepairStatus::Success);
  REQUIRE(result.iterations.size() <= 2);
  REQUIRE(result.patch.chunks.size() == 2);
  REQUIRE(patchmodel::classify(result.patch, bug.buggy) ==
          patchmodel::PatchClass::SimilarExact);

  auto suite = session_suite(bug.repair_input(), true, true, desk_config());
  auto verdict = harness::check_result(bug, result.patch, suite);
  REQUIRE(verdict.plausible);
  REQUIRE(verdict.correct);
}

TEST_CASE("s1_repair: without augmentation the patch is not correct") {
  auto bug = harness::load_bug(corpus_path("twin_guard"));
  auto cfg = desk_config();
  cfg.augment = false;
  auto result = s1_repair(bug.repair_input(), cfg);
  bool correct = false;
  if (result.status == RepairStatus::Success) {
    auto suite = session_suite(bug.repair_input(), false, true, cfg);
    correct = harness::check_result(bug, result.patch, suite).correct;
  }
  REQUIRE_FALSE(correct);
}

TEST_CASE("s1_repair: an already-passing program succeeds vacuously") {
  auto bug = harness::load_bug(corpus_path("twin_guard"));
  auto input = bug.repair_input();
  input.buggy = bug.fixed;
  auto result = s1_repair(input, desk_config());
  REQUIRE(result.status == RepairStatus::Success);
  REQUIRE(result.patch.chunks.empty());
  REQUIRE(result.iterations.empty());
}

TEST_CASE("s1_repair: ingredient reuse repairs neg_return") {
  auto bug = harness::load_bug(corpus_path("neg_return"));
  auto result = s1_repair(bug.repair_input(), desk_config());
  REQUIRE(result.status == RepairStatus::Success);
  REQUIRE(result.iterations.size() == 1);
  REQUIRE(result.iterations[0].action.find("ReplaceWithIngredient") !=
          std::string::npos);
  auto suite = session_suite(bug.repair_input(), true, true, desk_config());
  REQUIRE(harness::check_result(bug, result.patch, suite).correct);
}

TEST_CASE("s1_repair: committed iterations strictly decrease residual") {
  for (const auto& dir : harness::corpus_dirs(MLREPAIR_CORPUS_DIR)) {
    auto bug = harness::load_bug(dir);
    if (bug.meta.id == "slow_loop") continue;  // covered by the acceptance run
    auto cfg = desk_config();
    cfg.eval_budget = 20000;
    auto result = s1_repair(bug.repair_input(), cfg);
    int prev = result.initial_failing;
    for (const auto& it : result.iterations) {
      REQUIRE(it.residual_before == prev);
      REQUIRE(it.residual_after < it.residual_before);
      prev = it.residual_after;
    }
    REQUIRE(static_cast<int>(result.iterations.size()) <= result.initial_failing);
    // A success patch revalidates from scratch on the original program.
    if (result.status == RepairStatus::Success) {
      auto suite = session_suite(bug.repair_input(), true, true, cfg);
      auto patched = patchmodel::apply_patch(bug.buggy, result.patch);
      REQUIRE(testkit::run_suite(patched, suite).failing == 0);
    }
  }
}

TEST_CASE("s1_repair: deterministic committed-edit log") {
  auto bug = harness::load_bug(corpus_path("mixed_bag"));
  auto r1 = s1_repair(bug.repair_input(), desk_config());
  auto r2 = s1_repair(bug.repair_input(), desk_config());
  REQUIRE(r1.status == r2.status);
  REQUIRE(r1.iterations.size() == r2.iterations.size());
  for (size_t i = 0; i < r1.iterations.size(); ++i)
    REQUIRE(r1.iterations[i].action == r2.iterations[i].action);
}

TEST_CASE("s1_repair: regression budget admits a coincidental regression") {
  // triple_clamp's search takes an admissible step that temporarily breaks a
  // passing assertion; the run must never report Success while a regression
  // is outstanding.
  auto bug = harness::load_bug(corpus_path("triple_clamp"));
  auto result = s1_repair(bug.repair_input(), desk_config());
  for (const auto& it : result.iterations)
    REQUIRE(it.regressions_after <= 1);
  if (result.status == RepairStatus::Success) {
    auto suite = session_suite(bug.repair_input(), true, true, desk_config());
    auto patched = patchmodel::apply_patch(bug.buggy, result.patch);
    REQUIRE(testkit::run_suite(patched, suite).failing == 0);
  }
}
