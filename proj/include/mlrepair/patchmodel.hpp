#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "mlrepair/minilang/ast.hpp"
#include "mlrepair/minilang/parser.hpp"
#include "mlrepair/minilang/printer.hpp"

namespace mlrepair::patchmodel {

using minilang::Expr;
using minilang::ExprKind;
using minilang::FunctionDef;
using minilang::Program;
using minilang::Stmt;
using minilang::StmtKind;

// ---------------------------------------------------------------------------
// Patch representation

// Addresses a block inside a function body: each step descends into the
// then- (0) or else- (1) branch of the statement at the given index.
struct BlockStep {
  int stmt_index = 0;
  int branch = 0;
};
using BlockPath = std::vector<BlockStep>;

enum class ChunkAction { Insert, Delete, Replace, Update };

inline const char* action_name(ChunkAction a) {
  switch (a) {
    case ChunkAction::Insert: return "insert";
    case ChunkAction::Delete: return "delete";
    case ChunkAction::Replace: return "replace";
    case ChunkAction::Update: return "update";
  }
  return "?";
}

struct Chunk {
  std::string fn;
  ChunkAction action = ChunkAction::Replace;
  bool whole_function = false;  // function added/removed as a unit
  BlockPath path;               // block containing the edit
  int index = 0;                // start position in that block
  int target_fn_pos = 0;        // whole-function Insert: position in target
  std::vector<Stmt> removed;
  std::vector<Stmt> added;
  std::optional<FunctionDef> removed_fn;
  std::optional<FunctionDef> added_fn;
  int line_lo = 0;  // base line span (insert: anchor line)
  int line_hi = 0;

  std::string removed_src() const {
    if (whole_function && removed_fn) {
      Program tmp;
      tmp.functions.push_back(*removed_fn);
      return minilang::pretty_print(tmp);
    }
    return minilang::render_stmts(removed);
  }
  std::string added_src() const {
    if (whole_function && added_fn) {
      Program tmp;
      tmp.functions.push_back(*added_fn);
      return minilang::pretty_print(tmp);
    }
    return minilang::render_stmts(added);
  }
};

struct Patch {
  std::string base_fingerprint;
  std::vector<Chunk> chunks;

  bool empty() const { return chunks.empty(); }
};

inline std::string fingerprint(const Program& p) {
  std::string text = minilang::pretty_print(p);
  unsigned long long h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", h);
  return buf;
}

struct PatchApplyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Diff

namespace detail {

inline int max_line(const Stmt& s) {
  int m = s.line;
  for (const auto& b : s.body) m = std::max(m, max_line(b));
  for (const auto& b : s.else_body) m = std::max(m, max_line(b));
  return m;
}

struct Region {
  int base_at = 0;
  int base_len = 0;
  int target_at = 0;
  int target_len = 0;
};

// Maximal non-matching regions of an LCS alignment over whole-statement
// structural equality.
inline std::vector<Region> lcs_regions(const std::vector<Stmt>& a,
                                       const std::vector<Stmt>& b) {
  size_t n = a.size(), m = b.size();
  std::vector<std::vector<int>> dp(n + 1, std::vector<int>(m + 1, 0));
  for (size_t i = n; i-- > 0;) {
    for (size_t j = m; j-- > 0;) {
      if (minilang::struct_eq(a[i], b[j]))
        dp[i][j] = dp[i + 1][j + 1] + 1;
      else
        dp[i][j] = std::max(dp[i + 1][j], dp[i][j + 1]);
    }
  }
  std::vector<Region> regions;
  size_t i = 0, j = 0;
  auto open = [&](size_t bi, size_t bj) {
    regions.push_back(Region{static_cast<int>(bi), 0, static_cast<int>(bj), 0});
  };
  bool in_region = false;
  while (i < n || j < m) {
    if (i < n && j < m && minilang::struct_eq(a[i], b[j]) &&
        dp[i][j] == dp[i + 1][j + 1] + 1) {
      in_region = false;
      ++i;
      ++j;
      continue;
    }
    if (!in_region) {
      open(i, j);
      in_region = true;
    }
    if (j >= m || (i < n && dp[i + 1][j] >= dp[i][j + 1])) {
      ++regions.back().base_len;
      ++i;
    } else {
      ++regions.back().target_len;
      ++j;
    }
  }
  return regions;
}

struct DiffWalker {
  std::vector<Chunk>* out;
  std::string fn;

  void block(const std::vector<Stmt>& base, const std::vector<Stmt>& target,
             BlockPath path) {
    auto regions = lcs_regions(base, target);
    for (const auto& r : regions) {
      if (r.base_len == 1 && r.target_len == 1) {
        const Stmt& b = base[static_cast<size_t>(r.base_at)];
        const Stmt& t = target[static_cast<size_t>(r.target_at)];
        if (refine(b, t, path, r.base_at)) continue;
      }
      Chunk c;
      c.fn = fn;
      c.path = path;
      c.index = r.base_at;
      for (int k = 0; k < r.base_len; ++k)
        c.removed.push_back(base[static_cast<size_t>(r.base_at + k)]);
      for (int k = 0; k < r.target_len; ++k)
        c.added.push_back(target[static_cast<size_t>(r.target_at + k)]);
      if (c.removed.empty()) {
        c.action = ChunkAction::Insert;
        // Anchor: the statement the insertion precedes, or the block end.
        int anchor = r.base_at < static_cast<int>(base.size())
                         ? base[static_cast<size_t>(r.base_at)].line
                         : (base.empty() ? 0 : max_line(base.back()) + 1);
        c.line_lo = c.line_hi = anchor;
      } else {
        c.action = c.added.empty() ? ChunkAction::Delete : ChunkAction::Replace;
        c.line_lo = c.removed.front().line;
        c.line_hi = 0;
        for (const auto& s : c.removed) c.line_hi = std::max(c.line_hi, max_line(s));
      }
      out->push_back(std::move(c));
    }
  }

  // A 1:1 region of the same statement kind is either a recursion point
  // (compound statement, matching header) or an in-place update.
  bool refine(const Stmt& b, const Stmt& t, const BlockPath& path, int index) {
    if (b.kind != t.kind) return false;
    auto blocks_eq = [](const std::vector<Stmt>& x, const std::vector<Stmt>& y) {
      if (x.size() != y.size()) return false;
      for (size_t i = 0; i < x.size(); ++i)
        if (!minilang::struct_eq(x[i], y[i])) return false;
      return true;
    };
    if (b.kind == StmtKind::If || b.kind == StmtKind::While) {
      bool cond_eq = minilang::struct_eq(b.exprs[0], t.exprs[0]);
      bool then_eq = blocks_eq(b.body, t.body);
      bool else_eq = blocks_eq(b.else_body, t.else_body);
      if (cond_eq) {
        BlockPath sub = path;
        sub.push_back(BlockStep{index, 0});
        if (!then_eq) block(b.body, t.body, sub);
        if (!else_eq) {
          sub.back().branch = 1;
          block(b.else_body, t.else_body, sub);
        }
        return true;
      }
      if (then_eq && else_eq) return emit_update(b, t, path, index);
      return false;
    }
    if (b.kind == StmtKind::Let &&
        (b.name != t.name || b.decl_type != t.decl_type))
      return false;
    if ((b.kind == StmtKind::Assign || b.kind == StmtKind::AssignIndex) &&
        b.name != t.name)
      return false;
    return emit_update(b, t, path, index);
  }

  bool emit_update(const Stmt& b, const Stmt& t, const BlockPath& path,
                   int index) {
    Chunk c;
    c.fn = fn;
    c.path = path;
    c.index = index;
    c.action = ChunkAction::Update;
    c.removed.push_back(b);
    c.added.push_back(t);
    c.line_lo = b.line;
    c.line_hi = b.line;  // header line only: the bodies are unchanged
    if (b.kind != StmtKind::If && b.kind != StmtKind::While)
      c.line_hi = max_line(b);
    out->push_back(std::move(c));
    return true;
  }
};

}  // namespace detail

// Minimal statement-level edit script per function; contiguous edits merge
// into one chunk. Added or removed functions become whole-function chunks.
inline Patch ast_diff(const Program& base, const Program& target) {
  Patch patch;
  patch.base_fingerprint = fingerprint(base);

  std::set<std::string> base_names, target_names;
  for (const auto& f : base.functions) base_names.insert(f.name);
  for (const auto& f : target.functions) target_names.insert(f.name);

  for (const auto& f : base.functions) {
    if (!target_names.count(f.name)) {
      Chunk c;
      c.fn = f.name;
      c.action = ChunkAction::Delete;
      c.whole_function = true;
      c.removed_fn = f;
      c.line_lo = f.line;
      c.line_hi = f.line;
      for (const auto& s : f.body) c.line_hi = std::max(c.line_hi, detail::max_line(s));
      patch.chunks.push_back(std::move(c));
      continue;
    }
    const FunctionDef* tf = target.find_function(f.name);
    detail::DiffWalker w;
    w.out = &patch.chunks;
    w.fn = f.name;
    w.block(f.body, tf->body, {});
  }
  for (size_t pos = 0; pos < target.functions.size(); ++pos) {
    const auto& f = target.functions[pos];
    if (base_names.count(f.name)) continue;
    Chunk c;
    c.fn = f.name;
    c.action = ChunkAction::Insert;
    c.whole_function = true;
    c.added_fn = f;
    c.target_fn_pos = static_cast<int>(pos);
    patch.chunks.push_back(std::move(c));
  }

  std::stable_sort(patch.chunks.begin(), patch.chunks.end(),
                   [&base](const Chunk& a, const Chunk& b) {
                     auto fpos = [&base](const std::string& n) {
                       auto it = base.fn_by_name.find(n);
                       return it == base.fn_by_name.end()
                                  ? static_cast<int>(base.functions.size())
                                  : it->second;
                     };
                     int fa = fpos(a.fn), fb = fpos(b.fn);
                     if (fa != fb) return fa < fb;
                     return a.line_lo < b.line_lo;
                   });
  return patch;
}

namespace detail {

inline std::vector<Stmt>* resolve_block(FunctionDef& f, const BlockPath& path) {
  std::vector<Stmt>* blk = &f.body;
  for (const auto& step : path) {
    if (step.stmt_index < 0 || step.stmt_index >= static_cast<int>(blk->size()))
      return nullptr;
    Stmt& s = (*blk)[static_cast<size_t>(step.stmt_index)];
    blk = step.branch == 0 ? &s.body : &s.else_body;
  }
  return blk;
}

}  // namespace detail

// apply_patch(base, ast_diff(base, t)) reproduces t structurally.
inline Program apply_patch(const Program& base, const Patch& patch) {
  if (patch.base_fingerprint != fingerprint(base))
    throw PatchApplyError("fingerprint mismatch: patch built for another program");

  Program out = base;
  // Statement chunks apply deepest-position-first so earlier indices stay
  // valid; function inserts happen last at their target positions.
  std::vector<const Chunk*> stmt_chunks;
  std::vector<const Chunk*> fn_inserts;
  for (const auto& c : patch.chunks) {
    if (c.whole_function) {
      if (c.action == ChunkAction::Insert)
        fn_inserts.push_back(&c);
      else
        out.functions.erase(
            std::remove_if(out.functions.begin(), out.functions.end(),
                           [&](const FunctionDef& f) { return f.name == c.fn; }),
            out.functions.end());
    } else {
      stmt_chunks.push_back(&c);
    }
  }
  auto key = [](const Chunk* c) {
    std::vector<int> k;
    for (const auto& s : c->path) {
      k.push_back(s.stmt_index);
      k.push_back(s.branch);
    }
    k.push_back(c->index);
    return k;
  };
  std::stable_sort(stmt_chunks.begin(), stmt_chunks.end(),
                   [&](const Chunk* a, const Chunk* b) {
                     if (a->fn != b->fn) return a->fn < b->fn;
                     return key(a) > key(b);
                   });
  for (const Chunk* c : stmt_chunks) {
    auto it = std::find_if(out.functions.begin(), out.functions.end(),
                           [&](const FunctionDef& f) { return f.name == c->fn; });
    if (it == out.functions.end())
      throw PatchApplyError("chunk names unknown function " + c->fn);
    auto* blk = detail::resolve_block(*it, c->path);
    if (!blk || c->index > static_cast<int>(blk->size()) ||
        c->index + static_cast<int>(c->removed.size()) >
            static_cast<int>(blk->size()))
      throw PatchApplyError("chunk span invalid for " + c->fn);
    auto at = blk->begin() + c->index;
    blk->erase(at, at + static_cast<long>(c->removed.size()));
    blk->insert(blk->begin() + c->index, c->added.begin(), c->added.end());
  }
  std::stable_sort(fn_inserts.begin(), fn_inserts.end(),
                   [](const Chunk* a, const Chunk* b) {
                     return a->target_fn_pos < b->target_fn_pos;
                   });
  for (const Chunk* c : fn_inserts) {
    int pos = std::min<int>(c->target_fn_pos,
                            static_cast<int>(out.functions.size()));
    out.functions.insert(out.functions.begin() + pos, *c->added_fn);
  }
  minilang::canonicalize(out);
  return out;
}

// ---------------------------------------------------------------------------
// Signatures and similarity

struct SigTree {
  std::string label;
  std::vector<SigTree> kids;

  int size() const {
    int n = 1;
    for (const auto& k : kids) n += k.size();
    return n;
  }
};

namespace detail {

// Alpha-abstraction: identifiers become de-Bruijn-style placeholders in order
// of first occurrence within the chunk; integer and string literals collapse
// to markers. Operators, bool literals, types and node kinds survive.
struct Abstractor {
  std::map<std::string, int> ids;

  std::string abs(const std::string& name) {
    auto [it, fresh] = ids.try_emplace(name, static_cast<int>(ids.size()));
    (void)fresh;
    return "id:" + std::to_string(it->second);
  }

  SigTree leaf(std::string label) { return SigTree{std::move(label), {}}; }

  SigTree expr(const Expr& e) {
    switch (e.kind) {
      case ExprKind::IntLit:
        return leaf("lit");
      case ExprKind::BoolLit:
        return leaf(e.bool_val ? "true" : "false");
      case ExprKind::Var:
        return leaf(abs(e.name));
      case ExprKind::ArrayLit: {
        SigTree t{"array", {}};
        for (const auto& a : e.args) t.kids.push_back(expr(a));
        return t;
      }
      case ExprKind::Index: {
        SigTree t{"index", {}};
        t.kids.push_back(leaf(abs(e.name)));
        t.kids.push_back(expr(e.args[0]));
        return t;
      }
      case ExprKind::Len: {
        SigTree t{"len", {}};
        t.kids.push_back(expr(e.args[0]));
        return t;
      }
      case ExprKind::Call: {
        SigTree t{"call", {}};
        t.kids.push_back(leaf(abs(e.name)));
        for (const auto& a : e.args) t.kids.push_back(expr(a));
        return t;
      }
      case ExprKind::Unary:
      case ExprKind::Binary: {
        SigTree t{"op:" + e.op, {}};
        for (const auto& a : e.args) t.kids.push_back(expr(a));
        return t;
      }
    }
    return leaf("?");
  }

  SigTree stmt(const Stmt& s) {
    switch (s.kind) {
      case StmtKind::Let: {
        SigTree t{std::string("let:") + minilang::type_name(s.decl_type), {}};
        t.kids.push_back(leaf(abs(s.name)));
        t.kids.push_back(expr(s.exprs[0]));
        return t;
      }
      case StmtKind::Assign: {
        SigTree t{"assign", {}};
        t.kids.push_back(leaf(abs(s.name)));
        t.kids.push_back(expr(s.exprs[0]));
        return t;
      }
      case StmtKind::AssignIndex: {
        SigTree t{"assign[]", {}};
        t.kids.push_back(leaf(abs(s.name)));
        t.kids.push_back(expr(s.exprs[0]));
        t.kids.push_back(expr(s.exprs[1]));
        return t;
      }
      case StmtKind::If: {
        SigTree t{"if", {}};
        t.kids.push_back(expr(s.exprs[0]));
        t.kids.push_back(block(s.body));
        t.kids.push_back(block(s.else_body));
        return t;
      }
      case StmtKind::While: {
        SigTree t{"while", {}};
        t.kids.push_back(expr(s.exprs[0]));
        t.kids.push_back(block(s.body));
        return t;
      }
      case StmtKind::Return: {
        SigTree t{"return", {}};
        if (!s.exprs.empty()) t.kids.push_back(expr(s.exprs[0]));
        return t;
      }
      case StmtKind::Abort: {
        SigTree t{"abort", {}};
        t.kids.push_back(leaf("str"));
        return t;
      }
      case StmtKind::ExprStmt: {
        SigTree t{"expr", {}};
        t.kids.push_back(expr(s.exprs[0]));
        return t;
      }
    }
    return leaf("?");
  }

  SigTree block(const std::vector<Stmt>& stmts) {
    SigTree t{"block", {}};
    for (const auto& s : stmts) t.kids.push_back(stmt(s));
    return t;
  }

  SigTree function(const FunctionDef& f) {
    SigTree t{std::string("fn:") + minilang::type_name(f.ret), {}};
    for (const auto& prm : f.params)
      t.kids.push_back(SigTree{std::string("param:") + minilang::type_name(prm.type),
                               {leaf(abs(prm.name))}});
    t.kids.push_back(block(f.body));
    return t;
  }
};

// Zhang-Shasha ordered tree edit distance with unit costs.
class TreeDist {
 public:
  explicit TreeDist(const SigTree& t) {
    index(t);
    finish_keyroots();
  }

  static int distance(const TreeDist& a, const TreeDist& b) {
    int n = static_cast<int>(a.labels_.size());
    int m = static_cast<int>(b.labels_.size());
    std::vector<std::vector<int>> td(static_cast<size_t>(n) + 1,
                                     std::vector<int>(static_cast<size_t>(m) + 1, 0));
    std::vector<std::vector<int>> fd(static_cast<size_t>(n) + 2,
                                     std::vector<int>(static_cast<size_t>(m) + 2, 0));
    for (int ki : a.keyroots_) {
      for (int kj : b.keyroots_) {
        int li = a.lml_[static_cast<size_t>(ki)];
        int lj = b.lml_[static_cast<size_t>(kj)];
        fd[static_cast<size_t>(li)][static_cast<size_t>(lj)] = 0;
        for (int i = li; i <= ki; ++i)
          fd[static_cast<size_t>(i + 1)][static_cast<size_t>(lj)] =
              fd[static_cast<size_t>(i)][static_cast<size_t>(lj)] + 1;
        for (int j = lj; j <= kj; ++j)
          fd[static_cast<size_t>(li)][static_cast<size_t>(j + 1)] =
              fd[static_cast<size_t>(li)][static_cast<size_t>(j)] + 1;
        for (int i = li; i <= ki; ++i) {
          for (int j = lj; j <= kj; ++j) {
            if (a.lml_[static_cast<size_t>(i)] == li &&
                b.lml_[static_cast<size_t>(j)] == lj) {
              int rel = a.labels_[static_cast<size_t>(i)] ==
                                b.labels_[static_cast<size_t>(j)]
                            ? 0
                            : 1;
              int v = std::min(
                  {fd[static_cast<size_t>(i)][static_cast<size_t>(j + 1)] + 1,
                   fd[static_cast<size_t>(i + 1)][static_cast<size_t>(j)] + 1,
                   fd[static_cast<size_t>(i)][static_cast<size_t>(j)] + rel});
              fd[static_cast<size_t>(i + 1)][static_cast<size_t>(j + 1)] = v;
              td[static_cast<size_t>(i + 1)][static_cast<size_t>(j + 1)] = v;
            } else {
              int pi = a.lml_[static_cast<size_t>(i)];
              int pj = b.lml_[static_cast<size_t>(j)];
              int v = std::min(
                  {fd[static_cast<size_t>(i)][static_cast<size_t>(j + 1)] + 1,
                   fd[static_cast<size_t>(i + 1)][static_cast<size_t>(j)] + 1,
                   fd[static_cast<size_t>(pi)][static_cast<size_t>(pj)] +
                       td[static_cast<size_t>(i + 1)][static_cast<size_t>(j + 1)]});
              fd[static_cast<size_t>(i + 1)][static_cast<size_t>(j + 1)] = v;
            }
          }
        }
      }
    }
    return td[static_cast<size_t>(n)][static_cast<size_t>(m)];
  }

  int size() const { return static_cast<int>(labels_.size()); }

 private:
  // Postorder traversal; lml = index of leftmost leaf of each subtree.
  int index(const SigTree& t) {
    int first = -1;
    for (const auto& k : t.kids) {
      int f = index(k);
      if (first < 0) first = f;
    }
    labels_.push_back(t.label);
    int me = static_cast<int>(labels_.size()) - 1;
    lml_.push_back(first < 0 ? me : first);
    return lml_.back();
  }

  void finish_keyroots() {
    std::set<int> seen;
    for (int i = static_cast<int>(labels_.size()) - 1; i >= 0; --i)
      if (seen.insert(lml_[static_cast<size_t>(i)]).second) keyroots_.push_back(i);
    std::sort(keyroots_.begin(), keyroots_.end());
  }

  std::vector<std::string> labels_;
  std::vector<int> lml_;
  std::vector<int> keyroots_;
};

}  // namespace detail

// Signature: action kind plus the abstracted shapes of the removed and added
// fragments.
struct Signature {
  ChunkAction action = ChunkAction::Replace;
  SigTree tree;
};

inline Signature chunk_signature(const Chunk& c) {
  Signature sig;
  sig.action = c.action;
  detail::Abstractor ab;
  SigTree root{std::string("chunk:") + action_name(c.action), {}};
  SigTree removed{"removed", {}};
  SigTree added{"added", {}};
  if (c.whole_function) {
    if (c.removed_fn) removed.kids.push_back(ab.function(*c.removed_fn));
    if (c.added_fn) added.kids.push_back(ab.function(*c.added_fn));
  } else {
    for (const auto& s : c.removed) removed.kids.push_back(ab.stmt(s));
    for (const auto& s : c.added) added.kids.push_back(ab.stmt(s));
  }
  root.kids.push_back(std::move(removed));
  root.kids.push_back(std::move(added));
  sig.tree = std::move(root);
  return sig;
}

inline bool signature_equal(const Signature& a, const Signature& b) {
  if (a.action != b.action) return false;
  struct Eq {
    static bool eq(const SigTree& x, const SigTree& y) {
      if (x.label != y.label || x.kids.size() != y.kids.size()) return false;
      for (size_t i = 0; i < x.kids.size(); ++i)
        if (!eq(x.kids[i], y.kids[i])) return false;
      return true;
    }
  };
  return Eq::eq(a.tree, b.tree);
}

inline int tree_edit_distance(const SigTree& a, const SigTree& b) {
  detail::TreeDist da(a);
  detail::TreeDist db(b);
  return detail::TreeDist::distance(da, db);
}

constexpr double kSimilarityThreshold = 0.7;

struct SimilarityVerdict {
  bool similar = false;
  bool exact = false;
  double similarity = 0.0;
};

// Similarity of repair actions: same action kind and a normalized tree edit
// distance between signatures of at most 1 - threshold.
inline SimilarityVerdict chunks_similar(const Chunk& a, const Chunk& b,
                                        double threshold = kSimilarityThreshold) {
  Signature sa = chunk_signature(a);
  Signature sb = chunk_signature(b);
  int ted = tree_edit_distance(sa.tree, sb.tree);
  int total = sa.tree.size() + sb.tree.size();
  SimilarityVerdict v;
  v.similarity = total == 0 ? 1.0 : 1.0 - static_cast<double>(ted) / total;
  v.similar = sa.action == sb.action && v.similarity >= threshold;
  v.exact = sa.action == sb.action && ted == 0;
  return v;
}

namespace detail {

inline void idents_in_expr(const Expr& e, std::set<std::string>* out) {
  if (e.kind == ExprKind::Var || e.kind == ExprKind::Index ||
      e.kind == ExprKind::Call)
    out->insert(e.name);
  for (const auto& a : e.args) idents_in_expr(a, out);
}

inline void idents_in_stmt(const Stmt& s, std::set<std::string>* out) {
  if (!s.name.empty()) out->insert(s.name);
  for (const auto& e : s.exprs) idents_in_expr(e, out);
  for (const auto& b : s.body) idents_in_stmt(b, out);
  for (const auto& b : s.else_body) idents_in_stmt(b, out);
}

// Names a chunk defines or introduces: let-bound and assigned variables in
// its added code, and inserted function names.
inline std::set<std::string> introduced(const Chunk& c) {
  std::set<std::string> out;
  if (c.whole_function) {
    if (c.added_fn) out.insert(c.added_fn->name);
    return out;
  }
  struct W {
    static void go(const Stmt& s, std::set<std::string>* o) {
      if (s.kind == StmtKind::Let || s.kind == StmtKind::Assign ||
          s.kind == StmtKind::AssignIndex)
        o->insert(s.name);
      for (const auto& b : s.body) go(b, o);
      for (const auto& b : s.else_body) go(b, o);
    }
  };
  for (const auto& s : c.added) W::go(s, &out);
  return out;
}

inline std::set<std::string> mentioned(const Chunk& c) {
  std::set<std::string> out;
  if (c.whole_function) {
    const FunctionDef* f = c.added_fn ? &*c.added_fn : &*c.removed_fn;
    out.insert(f->name);
    for (const auto& prm : f->params) out.insert(prm.name);
    for (const auto& s : f->body) idents_in_stmt(s, &out);
    return out;
  }
  for (const auto& s : c.removed) idents_in_stmt(s, &out);
  for (const auto& s : c.added) idents_in_stmt(s, &out);
  return out;
}

}  // namespace detail

// Logical relatedness: an identifier defined or introduced by one chunk
// appears in the other (R1), or both edits land in the same function body
// (R2).
inline bool chunks_related(const Chunk& a, const Chunk& b,
                           const Program& /*base*/) {
  auto da = detail::introduced(a);
  auto db = detail::introduced(b);
  auto ma = detail::mentioned(a);
  auto mb = detail::mentioned(b);
  for (const auto& n : da)
    if (mb.count(n)) return true;
  for (const auto& n : db)
    if (ma.count(n)) return true;
  if (!a.whole_function && !b.whole_function && a.fn == b.fn) return true;
  return false;
}

enum class PatchClass { SingleLocation, SimilarExact, Similar, Relevant, Other };

inline const char* patch_class_name(PatchClass c) {
  switch (c) {
    case PatchClass::SingleLocation: return "single_location";
    case PatchClass::SimilarExact: return "similar_exact";
    case PatchClass::Similar: return "similar";
    case PatchClass::Relevant: return "relevant";
    case PatchClass::Other: return "other";
  }
  return "?";
}

inline std::optional<PatchClass> patch_class_from_name(const std::string& s) {
  if (s == "single_location") return PatchClass::SingleLocation;
  if (s == "similar_exact") return PatchClass::SimilarExact;
  if (s == "similar") return PatchClass::Similar;
  if (s == "relevant") return PatchClass::Relevant;
  if (s == "other") return PatchClass::Other;
  return std::nullopt;
}

// Classification with the relevant-first rule: any related pair makes the
// patch relevant even when similar pairs exist; otherwise all pairs must be
// similar (exact when every similarity is 1.0).
inline PatchClass classify(const Patch& patch, const Program& base) {
  if (patch.chunks.empty())
    throw std::invalid_argument("classify: patch has no chunks");
  if (patch.chunks.size() == 1) return PatchClass::SingleLocation;

  for (size_t i = 0; i < patch.chunks.size(); ++i)
    for (size_t j = i + 1; j < patch.chunks.size(); ++j)
      if (chunks_related(patch.chunks[i], patch.chunks[j], base))
        return PatchClass::Relevant;

  bool all_similar = true;
  bool all_exact = true;
  for (size_t i = 0; i < patch.chunks.size() && all_similar; ++i) {
    for (size_t j = i + 1; j < patch.chunks.size() && all_similar; ++j) {
      auto v = chunks_similar(patch.chunks[i], patch.chunks[j]);
      all_similar = all_similar && v.similar;
      all_exact = all_exact && v.exact;
    }
  }
  if (all_similar) return all_exact ? PatchClass::SimilarExact : PatchClass::Similar;
  return PatchClass::Other;
}

}  // namespace mlrepair::patchmodel
