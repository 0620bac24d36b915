#include <catch2/catch.hpp>

#include <map>

#include "mlrepair/harness/corpus.hpp"
#include "mlrepair/patchmodel.hpp"
#include "testgen.hpp"

using namespace mlrepair;
using namespace mlrepair::patchmodel;
using minilang::Program;

namespace {

std::string corpus_path(const std::string& rel) {
  return std::string(MLREPAIR_CORPUS_DIR) + "/" + rel;
}

// Independent oracle: memoized recursive forest edit distance, no keyroot
// machinery. Exponential state space tamed by memoization on serialized
// forests; fine for the small trees exercised here.
struct ForestDist {
  std::map<std::string, int> memo;

  static std::string key(const std::vector<const SigTree*>& a,
                         const std::vector<const SigTree*>& b) {
    std::string k;
    char buf[32];
    for (const auto* t : a) {
      std::snprintf(buf, sizeof buf, "%p,", static_cast<const void*>(t));
      k += buf;
    }
    k += "|";
    for (const auto* t : b) {
      std::snprintf(buf, sizeof buf, "%p,", static_cast<const void*>(t));
      k += buf;
    }
    return k;
  }

  static int total_size(const std::vector<const SigTree*>& f) {
    int n = 0;
    for (const auto* t : f) n += t->size();
    return n;
  }

  int dist(std::vector<const SigTree*> a, std::vector<const SigTree*> b) {
    if (a.empty()) return total_size(b);
    if (b.empty()) return total_size(a);
    std::string k = key(a, b);
    auto it = memo.find(k);
    if (it != memo.end()) return it->second;

    auto rest = [](const std::vector<const SigTree*>& f) {
      return std::vector<const SigTree*>(f.begin() + 1, f.end());
    };
    auto splice_children = [](const std::vector<const SigTree*>& f) {
      std::vector<const SigTree*> out;
      for (const auto& k2 : f[0]->kids) out.push_back(&k2);
      for (size_t i = 1; i < f.size(); ++i) out.push_back(f[i]);
      return out;
    };

    int best = 1 + dist(splice_children(a), b);           // delete a's root
    best = std::min(best, 1 + dist(a, splice_children(b)));  // insert b's root
    std::vector<const SigTree*> ak, bk;
    for (const auto& c : a[0]->kids) ak.push_back(&c);
    for (const auto& c : b[0]->kids) bk.push_back(&c);
    int match = (a[0]->label == b[0]->label ? 0 : 1) + dist(ak, bk) +
                dist(rest(a), rest(b));
    best = std::min(best, match);
    memo[k] = best;
    return best;
  }

  int operator()(const SigTree& a, const SigTree& b) {
    return dist({&a}, {&b});
  }
};

SigTree random_tree(testgen::Gen& g, int depth) {
  static const char* labels[] = {"if", "while", "assign", "op:+", "op:<",
                                 "lit", "id:0", "id:1", "return", "block"};
  SigTree t{labels[g.pick(0, 9)], {}};
  if (depth > 0) {
    long long kids = g.pick(0, 3);
    for (long long i = 0; i < kids; ++i)
      t.kids.push_back(random_tree(g, depth - 1));
  }
  return t;
}

}  // namespace

TEST_CASE("ast_diff: identical programs produce an empty patch") {
  auto bug = harness::load_bug(corpus_path("twin_guard"));
  auto patch = ast_diff(bug.buggy, bug.buggy);
  REQUIRE(patch.chunks.empty());
  auto back = apply_patch(bug.buggy, patch);
  REQUIRE(struct_eq(back, bug.buggy));
}

TEST_CASE("ast_diff: one replaced statement is one replace chunk") {
  auto a = minilang::parse("fn f() -> int { let x: int = 1; return x; }");
  auto b = minilang::parse("fn f() -> int { let x: int = 1; abort(\"bad\"); }");
  auto patch = ast_diff(a, b);
  REQUIRE(patch.chunks.size() == 1);
  REQUIRE(patch.chunks[0].action == ChunkAction::Replace);
}

TEST_CASE("ast_diff: twin_guard ground truth is two chunks in two functions") {
  auto bug = harness::load_bug(corpus_path("twin_guard"));
  REQUIRE(bug.ground_truth.chunks.size() == 2);
  REQUIRE(bug.ground_truth.chunks[0].fn != bug.ground_truth.chunks[1].fn);
}

TEST_CASE("apply_patch: roundtrip on every corpus pair") {
  for (const auto& dir : harness::corpus_dirs(MLREPAIR_CORPUS_DIR)) {
    auto bug = harness::load_bug(dir);
    auto patched = apply_patch(bug.buggy, bug.ground_truth);
    REQUIRE(struct_eq(patched, bug.fixed));
  }
}

TEST_CASE("apply_patch: fingerprint mismatch is rejected") {
  auto bug = harness::load_bug(corpus_path("twin_guard"));
  REQUIRE_THROWS_AS(apply_patch(bug.fixed, bug.ground_truth), PatchApplyError);
}

TEST_CASE("chunk_signature: oracle-throwing twins abstract identically") {
  auto bug = harness::load_bug(corpus_path("twin_guard"));
  auto s0 = chunk_signature(bug.ground_truth.chunks[0]);
  auto s1 = chunk_signature(bug.ground_truth.chunks[1]);
  REQUIRE(signature_equal(s0, s1));
}

TEST_CASE("chunk_signature: identifiers abstract to placeholders") {
  auto a1 = minilang::parse("fn f(b: int, m: int) -> int { return 0; }");
  auto a2 = minilang::parse(
      "fn f(b: int, m: int) -> int { if (b > m) { return 1; } return 0; }");
  auto b1 = minilang::parse("fn g(c: int, m: int) -> int { return 0; }");
  auto b2 = minilang::parse(
      "fn g(c: int, m: int) -> int { if (c > m) { return 1; } return 0; }");
  auto pa = ast_diff(a1, a2);
  auto pb = ast_diff(b1, b2);
  REQUIRE(pa.chunks.size() == 1);
  REQUIRE(pb.chunks.size() == 1);
  REQUIRE(pa.chunks[0].action == ChunkAction::Insert);
  REQUIRE(signature_equal(chunk_signature(pa.chunks[0]), chunk_signature(pb.chunks[0])));
  auto v = chunks_similar(pa.chunks[0], pb.chunks[0]);
  REQUIRE(v.exact);
  REQUIRE(v.similarity == Approx(1.0));
}

TEST_CASE("chunk_signature: integer literals abstract to a marker") {
  auto a1 = minilang::parse("fn f(x: int) -> int { return x; }");
  auto a2 = minilang::parse("fn f(x: int) -> int { if (x > 17) { return 17; } return x; }");
  auto b2 = minilang::parse("fn f(x: int) -> int { if (x > 3) { return 99; } return x; }");
  auto pa = ast_diff(a1, a2);
  auto pb = ast_diff(a1, b2);
  REQUIRE(pa.chunks.size() == 1);
  REQUIRE(pb.chunks.size() == 1);
  REQUIRE(signature_equal(chunk_signature(pa.chunks[0]), chunk_signature(pb.chunks[0])));
  REQUIRE(chunks_similar(pa.chunks[0], pb.chunks[0]).exact);
}

TEST_CASE("chunk_signature: action kind distinguishes insert from delete") {
  Chunk ins, del;
  ins.action = ChunkAction::Insert;
  del.action = ChunkAction::Delete;
  auto stmt = minilang::parse("fn f() -> int { return 0; }").functions[0].body[0];
  ins.added.push_back(stmt);
  del.removed.push_back(stmt);
  REQUIRE_FALSE(signature_equal(chunk_signature(ins), chunk_signature(del)));
  REQUIRE_FALSE(chunks_similar(ins, del).similar);
}

TEST_CASE("chunks_similar: one extra statement in a small block stays similar") {
  auto bug = harness::load_bug(corpus_path("triple_clamp"));
  REQUIRE(bug.ground_truth.chunks.size() == 3);
  auto v01 = chunks_similar(bug.ground_truth.chunks[0], bug.ground_truth.chunks[1]);
  auto v02 = chunks_similar(bug.ground_truth.chunks[0], bug.ground_truth.chunks[2]);
  REQUIRE(v01.exact);
  REQUIRE(v02.similar);
  REQUIRE_FALSE(v02.exact);
  REQUIRE(v02.similarity >= 0.7);

  // Brute-force tree edit distance agrees with the implementation.
  auto s0 = chunk_signature(bug.ground_truth.chunks[0]);
  auto s2 = chunk_signature(bug.ground_truth.chunks[2]);
  ForestDist oracle;
  REQUIRE(oracle(s0.tree, s2.tree) == tree_edit_distance(s0.tree, s2.tree));
}

TEST_CASE("tree_edit_distance: matches the brute-force oracle on random trees") {
  testgen::Gen g(12345);
  for (int i = 0; i < 200; ++i) {
    SigTree a = random_tree(g, 3);
    SigTree b = random_tree(g, 3);
    ForestDist oracle;
    int expect = oracle(a, b);
    REQUIRE(tree_edit_distance(a, b) == expect);
    REQUIRE(tree_edit_distance(a, a) == 0);
  }
}

TEST_CASE("chunks_similar: symmetry") {
  auto bug = harness::load_bug(corpus_path("triple_clamp"));
  const auto& c = bug.ground_truth.chunks;
  for (size_t i = 0; i < c.size(); ++i)
    for (size_t j = 0; j < c.size(); ++j) {
      auto ij = chunks_similar(c[i], c[j]);
      auto ji = chunks_similar(c[j], c[i]);
      REQUIRE(ij.similar == ji.similar);
      REQUIRE(ij.similarity == Approx(ji.similarity));
    }
}

TEST_CASE("chunks_related: introduced helper name links the chunks") {
  auto bug = harness::load_bug(corpus_path("helper_call"));
  REQUIRE(bug.ground_truth.chunks.size() == 2);
  REQUIRE(chunks_related(bug.ground_truth.chunks[0], bug.ground_truth.chunks[1],
                         bug.buggy));
}

TEST_CASE("chunks_related: same function body relates the edits") {
  auto bug = harness::load_bug(corpus_path("guard_pair"));
  REQUIRE(bug.ground_truth.chunks.size() == 2);
  REQUIRE(chunks_related(bug.ground_truth.chunks[0], bug.ground_truth.chunks[1],
                         bug.buggy));
}

TEST_CASE("chunks_related: twin edits in unrelated functions are not related") {
  auto bug = harness::load_bug(corpus_path("twin_guard"));
  REQUIRE_FALSE(chunks_related(bug.ground_truth.chunks[0],
                               bug.ground_truth.chunks[1], bug.buggy));
}

TEST_CASE("classify: corpus labels are reproduced exactly") {
  for (const auto& dir : harness::corpus_dirs(MLREPAIR_CORPUS_DIR)) {
    auto bug = harness::load_bug(dir);
    REQUIRE(classify(bug.ground_truth, bug.buggy) == bug.meta.expected_class);
  }
}

TEST_CASE("classify: relevant-first beats similarity") {
  // Two similar oracle-throwing chunks in separate functions, plus a second
  // edit inside one of them: the related pair wins.
  auto base = minilang::parse(R"(
fn a(x: int) -> int {
  let k: int = 1;
  x = x + k;
  return x;
}

fn b(y: int) -> int {
  let k: int = 1;
  y = y + k;
  return y;
}
)");
  auto target = minilang::parse(R"(
fn a(x: int) -> int {
  let k: int = 1;
  x = x + k;
  abort("no");
}

fn b(y: int) -> int {
  let k: int = 9;
  y = y + k;
  abort("no");
}
)");
  auto patch = ast_diff(base, target);
  REQUIRE(patch.chunks.size() == 3);
  // The abort replacements alone would classify as similar.
  Patch similar_only;
  similar_only.base_fingerprint = patch.base_fingerprint;
  for (const auto& c : patch.chunks)
    if (c.action == ChunkAction::Replace) similar_only.chunks.push_back(c);
  REQUIRE(similar_only.chunks.size() == 2);
  REQUIRE(classify(similar_only, base) == PatchClass::SimilarExact);
  REQUIRE(classify(patch, base) == PatchClass::Relevant);
}

TEST_CASE("classify: unrelated different-action chunks are other") {
  auto bug = harness::load_bug(corpus_path("mixed_bag"));
  REQUIRE(classify(bug.ground_truth, bug.buggy) == PatchClass::Other);
}

TEST_CASE("property: diff/apply roundtrip on random edits") {
  testgen::Gen g(424242);
  for (int i = 0; i < 300; ++i) {
    Program base = testgen::gen_program(g);
    Program target = testgen::random_edit(g, base);
    auto patch = ast_diff(base, target);
    auto back = apply_patch(base, patch);
    REQUIRE(struct_eq(back, target));
    if (struct_eq(base, target)) REQUIRE(patch.chunks.empty());
  }
}

TEST_CASE("property: classification is invariant under consistent renaming") {
  testgen::Gen g(99);
  int done = 0;
  while (done < 200) {
    Program base = testgen::gen_program(g, 2);
    Program target = testgen::random_edit(g, base);
    auto patch = ast_diff(base, target);
    if (patch.chunks.empty()) continue;
    auto cls = classify(patch, base);

    testgen::RenameMap map;
    testgen::collect_rename_names(base, "zz", &map);
    testgen::collect_rename_names(target, "zz", &map);
    Program rbase = testgen::apply_rename(base, map);
    Program rtarget = testgen::apply_rename(target, map);
    auto rpatch = ast_diff(rbase, rtarget);
    REQUIRE(rpatch.chunks.size() == patch.chunks.size());
    REQUIRE(classify(rpatch, rbase) == cls);
    ++done;
  }
}

TEST_CASE("property: adding a related pair flips similar to relevant, never back") {
  testgen::Gen g(2718);
  int done = 0;
  while (done < 200) {
    // Two-function base; plant the same abstract edit in both functions.
    Program base = testgen::gen_program(g, 2);
    if (base.functions.size() < 2) continue;
    Program target = base;
    for (auto& f : target.functions) {
      minilang::Stmt s;
      s.kind = minilang::StmtKind::Abort;
      s.message = "planted";
      f.body.insert(f.body.begin(), s);
    }
    minilang::canonicalize(target);
    auto patch = ast_diff(base, target);
    if (patch.chunks.size() != 2) continue;
    auto cls = classify(patch, base);
    if (cls != PatchClass::Similar && cls != PatchClass::SimilarExact) continue;

    // A second, separated edit inside the first edited function creates a
    // related pair (appended past the tail so the chunks stay distinct).
    Program target2 = target;
    minilang::Stmt extra;
    extra.kind = minilang::StmtKind::ExprStmt;
    extra.exprs.push_back(minilang::int_lit(g.pick(0, 9)));
    target2.functions[0].body.push_back(extra);
    minilang::canonicalize(target2);
    auto patch2 = ast_diff(base, target2);
    if (patch2.chunks.size() < 3) continue;
    REQUIRE(classify(patch2, base) == PatchClass::Relevant);
    ++done;
  }
}
