#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mlrepair/faultloc.hpp"
#include "mlrepair/minilang/ast.hpp"
#include "mlrepair/minilang/parser.hpp"
#include "mlrepair/minilang/printer.hpp"

namespace mlrepair::repair {

using minilang::Expr;
using minilang::ExprKind;
using minilang::FunctionDef;
using minilang::NodeUid;
using minilang::Program;
using minilang::Stmt;
using minilang::StmtKind;
using minilang::Type;

// ---------------------------------------------------------------------------
// Statement addressing and surgery

struct StmtLoc {
  int fn = -1;
  patchmodel::BlockPath path;
  int index = -1;
};

namespace mdetail {

inline bool find_in_block(const std::vector<Stmt>& blk, NodeUid uid,
                          StmtLoc* loc) {
  for (size_t i = 0; i < blk.size(); ++i) {
    if (blk[i].uid == uid) {
      loc->index = static_cast<int>(i);
      return true;
    }
    loc->path.push_back(patchmodel::BlockStep{static_cast<int>(i), 0});
    if (find_in_block(blk[i].body, uid, loc)) return true;
    loc->path.back().branch = 1;
    if (find_in_block(blk[i].else_body, uid, loc)) return true;
    loc->path.pop_back();
  }
  return false;
}

}  // namespace mdetail

inline std::optional<StmtLoc> find_stmt(const Program& p, NodeUid stmt_uid) {
  for (size_t f = 0; f < p.functions.size(); ++f) {
    StmtLoc loc;
    loc.fn = static_cast<int>(f);
    if (mdetail::find_in_block(p.functions[f].body, stmt_uid, &loc)) return loc;
  }
  return std::nullopt;
}

inline std::vector<Stmt>* block_at(Program& p, const StmtLoc& loc) {
  std::vector<Stmt>* blk = &p.functions[static_cast<size_t>(loc.fn)].body;
  for (const auto& step : loc.path)
    blk = step.branch == 0 ? &(*blk)[static_cast<size_t>(step.stmt_index)].body
                           : &(*blk)[static_cast<size_t>(step.stmt_index)].else_body;
  return blk;
}

inline Stmt* stmt_at(Program& p, const StmtLoc& loc) {
  return &(*block_at(p, loc))[static_cast<size_t>(loc.index)];
}

// The statement owning an executable unit: the unit itself, or the if/while
// whose guard it is.
inline NodeUid owning_stmt(const Program& p, NodeUid unit) {
  const auto& info = p.nodes[unit];
  return info.is_stmt ? unit : info.owner_stmt;
}

// ---------------------------------------------------------------------------
// Guard condition templates
//
// Pool: v op c, v1 op v2, flag, !flag, len(arr) == 0, idx < 0,
// idx >= len(arr); instantiated with in-scope identifiers and the constants
// {-1, 0, 1} plus those appearing in the enclosing function.

inline const std::vector<std::string>& rel_ops() {
  static const std::vector<std::string> ops = {"<", "<=", ">", ">=", "==", "!="};
  return ops;
}

inline const std::vector<std::string>& arith_ops() {
  static const std::vector<std::string> ops = {"+", "-", "*", "/", "%"};
  return ops;
}

inline std::vector<long long> constant_pool(const Program& p,
                                            const std::string& fn) {
  std::vector<long long> out = {-1, 0, 1};
  auto it = p.fn_constants.find(fn);
  if (it != p.fn_constants.end())
    for (long long c : it->second)
      if (c != -1 && c != 0 && c != 1) out.push_back(c);
  return out;
}

inline std::vector<Expr> guard_templates(const Program& p, NodeUid at_unit) {
  const auto& info = p.nodes[at_unit];
  std::vector<std::string> ints, bools, arrays;
  for (const auto& v : info.scope) {
    if (v.type == Type::Int) ints.push_back(v.name);
    if (v.type == Type::Bool) bools.push_back(v.name);
    if (v.type == Type::IntArray) arrays.push_back(v.name);
  }
  auto consts = constant_pool(p, info.id.fn);

  std::vector<Expr> out;
  std::set<std::string> seen;
  auto push = [&](Expr e) {
    std::string key = minilang::render_expr(e);
    if (seen.insert(key).second) out.push_back(std::move(e));
  };

  for (const auto& v : ints)
    for (const auto& op : rel_ops())
      for (long long c : consts)
        push(minilang::binary_expr(op, minilang::var_ref(v), minilang::int_lit(c)));
  for (const auto& a : ints)
    for (const auto& b : ints) {
      if (a == b) continue;
      for (const auto& op : rel_ops())
        push(minilang::binary_expr(op, minilang::var_ref(a), minilang::var_ref(b)));
    }
  for (const auto& f : bools) push(minilang::var_ref(f));
  for (const auto& f : bools) push(minilang::unary_expr("!", minilang::var_ref(f)));
  for (const auto& a : arrays)
    push(minilang::binary_expr("==", minilang::len_expr(minilang::var_ref(a)),
                               minilang::int_lit(0)));
  for (const auto& v : ints)
    push(minilang::binary_expr("<", minilang::var_ref(v), minilang::int_lit(0)));
  for (const auto& v : ints)
    for (const auto& a : arrays)
      push(minilang::binary_expr(">=", minilang::var_ref(v),
                                 minilang::len_expr(minilang::var_ref(a))));
  return out;
}

// ---------------------------------------------------------------------------
// Mutation operators

enum class MutKind {
  ReplaceRelOp,
  ReplaceArithOp,
  NegateCondition,
  GuardConjoin,
  GuardDisjoin,
  ReplaceConstant,
  ReplaceVariable,
  InsertGuardAbort,
  InsertGuardReturn,
  DeleteStatement,
  ReplaceWithIngredient
};

inline const char* mut_kind_name(MutKind k) {
  switch (k) {
    case MutKind::ReplaceRelOp: return "ReplaceRelOp";
    case MutKind::ReplaceArithOp: return "ReplaceArithOp";
    case MutKind::NegateCondition: return "NegateCondition";
    case MutKind::GuardConjoin: return "GuardConjoin";
    case MutKind::GuardDisjoin: return "GuardDisjoin";
    case MutKind::ReplaceConstant: return "ReplaceConstant";
    case MutKind::ReplaceVariable: return "ReplaceVariable";
    case MutKind::InsertGuardAbort: return "InsertGuardAbort";
    case MutKind::InsertGuardReturn: return "InsertGuardReturn";
    case MutKind::DeleteStatement: return "DeleteStatement";
    case MutKind::ReplaceWithIngredient: return "ReplaceWithIngredient";
  }
  return "?";
}

struct MutationOp {
  MutKind kind = MutKind::ReplaceRelOp;
  NodeUid target = -1;  // ranked unit the operator was derived from
  int occurrence = 0;   // which op/literal/variable occurrence inside the unit
  std::string new_op;
  long long new_const = 0;
  std::string new_var;
  Expr guard;           // template condition (Guard*/Insert* kinds)
  minilang::Value ret_default;
  NodeUid ingredient = -1;

  std::string describe(const Program& p) const {
    std::string s = std::string(mut_kind_name(kind)) + "@" +
                    p.nodes[target].id.to_string() + ":L" +
                    std::to_string(p.nodes[target].line);
    switch (kind) {
      case MutKind::ReplaceRelOp:
      case MutKind::ReplaceArithOp:
        s += " ->" + new_op;
        break;
      case MutKind::ReplaceConstant:
        s += " ->" + std::to_string(new_const);
        break;
      case MutKind::ReplaceVariable:
        s += " ->" + new_var;
        break;
      case MutKind::GuardConjoin:
      case MutKind::GuardDisjoin:
      case MutKind::InsertGuardAbort:
      case MutKind::InsertGuardReturn:
        s += " [" + minilang::render_expr(guard) + "]";
        break;
      case MutKind::ReplaceWithIngredient:
        s += " <-" + p.nodes[ingredient].id.to_string();
        break;
      default:
        break;
    }
    return s;
  }
};

namespace mdetail {

// Visit op/literal/variable occurrences over the unit's expressions in
// pre-order; `which` counts down to the requested occurrence.
template <typename Pred, typename Fn>
bool mutate_occurrence(Expr& e, const Pred& pred, int& which, const Fn& fn) {
  if (pred(e)) {
    if (which == 0) {
      fn(e);
      return true;
    }
    --which;
  }
  for (auto& a : e.args)
    if (mutate_occurrence(a, pred, which, fn)) return true;
  return false;
}

template <typename Pred>
int count_occurrences(const Expr& e, const Pred& pred) {
  int n = pred(const_cast<Expr&>(e)) ? 1 : 0;
  for (const auto& a : e.args) n += count_occurrences(a, pred);
  return n;
}

inline bool is_rel(const Expr& e) {
  return e.kind == ExprKind::Binary &&
         (e.op == "<" || e.op == "<=" || e.op == ">" || e.op == ">=" ||
          e.op == "==" || e.op == "!=");
}

inline bool is_arith(const Expr& e) {
  return e.kind == ExprKind::Binary &&
         (e.op == "+" || e.op == "-" || e.op == "*" || e.op == "/" || e.op == "%");
}

inline Stmt make_guard_abort(const Expr& cond) {
  Stmt g;
  g.kind = StmtKind::If;
  g.exprs.push_back(cond);
  Stmt a;
  a.kind = StmtKind::Abort;
  a.message = "guard";
  g.body.push_back(std::move(a));
  return g;
}

inline Stmt make_guard_return(const Expr& cond, const minilang::Value& v) {
  Stmt g;
  g.kind = StmtKind::If;
  g.exprs.push_back(cond);
  Stmt r;
  r.kind = StmtKind::Return;
  if (v.is_int())
    r.exprs.push_back(minilang::int_lit(v.as_int()));
  else if (v.is_bool())
    r.exprs.push_back(minilang::bool_lit(v.as_bool()));
  else {
    Expr arr;
    arr.kind = ExprKind::ArrayLit;
    for (long long x : v.as_array()) arr.args.push_back(minilang::int_lit(x));
    r.exprs.push_back(std::move(arr));
  }
  g.body.push_back(std::move(r));
  return g;
}

}  // namespace mdetail

// Materializes one mutation: clone, edit, re-canonicalize, type-check.
// Returns nothing when the result is ill-typed or the edit is a no-op.
inline std::optional<Program> apply_mutation(const Program& base,
                                             const MutationOp& op) {
  Program out = base;
  const auto& info = base.nodes[op.target];
  NodeUid owner = owning_stmt(base, op.target);
  auto loc = find_stmt(base, owner);
  if (!loc) return std::nullopt;
  Stmt* s = stmt_at(out, *loc);

  auto exprs_of_unit = [&](Stmt* st) -> std::vector<Expr*> {
    std::vector<Expr*> es;
    if (info.is_guard)
      es.push_back(&st->exprs[0]);
    else
      for (auto& e : st->exprs) es.push_back(&e);
    return es;
  };

  bool changed = false;
  switch (op.kind) {
    case MutKind::ReplaceRelOp:
    case MutKind::ReplaceArithOp: {
      auto pred = op.kind == MutKind::ReplaceRelOp
                      ? +[](Expr& e) { return mdetail::is_rel(e); }
                      : +[](Expr& e) { return mdetail::is_arith(e); };
      int which = op.occurrence;
      for (Expr* e : exprs_of_unit(s)) {
        if (mdetail::mutate_occurrence(*e, pred, which,
                                       [&](Expr& x) { x.op = op.new_op; })) {
          changed = true;
          break;
        }
      }
      break;
    }
    case MutKind::NegateCondition:
      s->exprs[0] = minilang::unary_expr("!", s->exprs[0]);
      changed = true;
      break;
    case MutKind::GuardConjoin:
      s->exprs[0] = minilang::binary_expr("&&", s->exprs[0], op.guard);
      changed = true;
      break;
    case MutKind::GuardDisjoin:
      s->exprs[0] = minilang::binary_expr("||", s->exprs[0], op.guard);
      changed = true;
      break;
    case MutKind::ReplaceConstant: {
      auto pred = +[](Expr& e) { return e.kind == ExprKind::IntLit; };
      int which = op.occurrence;
      for (Expr* e : exprs_of_unit(s)) {
        if (mdetail::mutate_occurrence(*e, pred, which, [&](Expr& x) {
              x = minilang::int_lit(op.new_const);
            })) {
          changed = true;
          break;
        }
      }
      break;
    }
    case MutKind::ReplaceVariable: {
      auto pred = +[](Expr& e) { return e.kind == ExprKind::Var; };
      int which = op.occurrence;
      for (Expr* e : exprs_of_unit(s)) {
        if (mdetail::mutate_occurrence(*e, pred, which,
                                       [&](Expr& x) { x.name = op.new_var; })) {
          changed = true;
          break;
        }
      }
      break;
    }
    case MutKind::InsertGuardAbort: {
      auto* blk = block_at(out, *loc);
      blk->insert(blk->begin() + loc->index, mdetail::make_guard_abort(op.guard));
      changed = true;
      break;
    }
    case MutKind::InsertGuardReturn: {
      auto* blk = block_at(out, *loc);
      blk->insert(blk->begin() + loc->index,
                  mdetail::make_guard_return(op.guard, op.ret_default));
      changed = true;
      break;
    }
    case MutKind::DeleteStatement: {
      auto* blk = block_at(out, *loc);
      blk->erase(blk->begin() + loc->index);
      changed = true;
      break;
    }
    case MutKind::ReplaceWithIngredient: {
      auto iloc = find_stmt(base, op.ingredient);
      if (!iloc) return std::nullopt;
      Stmt ingredient = *stmt_at(const_cast<Program&>(base), *iloc);
      if (minilang::struct_eq(ingredient, *s)) return std::nullopt;
      *s = std::move(ingredient);
      changed = true;
      break;
    }
  }
  if (!changed) return std::nullopt;

  minilang::canonicalize(out);
  if (minilang::check_program(out)) return std::nullopt;
  return out;
}

// Operator stream for the top-k ranked units, in ranking order; per unit the
// kinds enumerate in the fixed order of MutKind.
inline std::vector<MutationOp> enumerate_mutations(const Program& p,
                                                   const faultloc::Ranking& ranking,
                                                   int top_k) {
  std::vector<MutationOp> out;
  int limit = std::min<int>(top_k, static_cast<int>(ranking.entries.size()));

  std::vector<NodeUid> all_stmts;
  for (NodeUid u = 0; u < static_cast<NodeUid>(p.nodes.size()); ++u)
    if (p.nodes[u].is_stmt) all_stmts.push_back(u);

  for (int r = 0; r < limit; ++r) {
    NodeUid unit = ranking.entries[static_cast<size_t>(r)].node;
    const auto& info = p.nodes[unit];
    NodeUid owner = owning_stmt(p, unit);
    auto loc = find_stmt(p, owner);
    if (!loc) continue;
    Program& mp = const_cast<Program&>(p);
    const Stmt& s = *stmt_at(mp, *loc);

    std::vector<const Expr*> unit_exprs;
    if (info.is_guard)
      unit_exprs.push_back(&s.exprs[0]);
    else
      for (const auto& e : s.exprs) unit_exprs.push_back(&e);

    auto count_all = [&](auto pred) {
      int n = 0;
      for (const Expr* e : unit_exprs) n += mdetail::count_occurrences(*e, pred);
      return n;
    };

    auto emit = [&](MutationOp m) {
      m.target = unit;
      out.push_back(std::move(m));
    };

    // 1. ReplaceRelOp
    int rel_count = count_all([](Expr& e) { return mdetail::is_rel(e); });
    for (int occ = 0; occ < rel_count; ++occ)
      for (const auto& o : rel_ops()) {
        MutationOp m;
        m.kind = MutKind::ReplaceRelOp;
        m.occurrence = occ;
        m.new_op = o;
        emit(std::move(m));
      }
    // 2. ReplaceArithOp
    int ar_count = count_all([](Expr& e) { return mdetail::is_arith(e); });
    for (int occ = 0; occ < ar_count; ++occ)
      for (const auto& o : arith_ops()) {
        MutationOp m;
        m.kind = MutKind::ReplaceArithOp;
        m.occurrence = occ;
        m.new_op = o;
        emit(std::move(m));
      }
    // 3-5. Condition shaping (guard units only)
    if (info.is_guard) {
      MutationOp neg;
      neg.kind = MutKind::NegateCondition;
      emit(std::move(neg));
      for (const auto& t : guard_templates(p, unit)) {
        MutationOp m;
        m.kind = MutKind::GuardConjoin;
        m.guard = t;
        emit(std::move(m));
      }
      for (const auto& t : guard_templates(p, unit)) {
        MutationOp m;
        m.kind = MutKind::GuardDisjoin;
        m.guard = t;
        emit(std::move(m));
      }
    }
    // 6. ReplaceConstant
    auto consts = constant_pool(p, info.id.fn);
    int lit_count = count_all([](Expr& e) { return e.kind == ExprKind::IntLit; });
    for (int occ = 0; occ < lit_count; ++occ)
      for (long long c : consts) {
        MutationOp m;
        m.kind = MutKind::ReplaceConstant;
        m.occurrence = occ;
        m.new_const = c;
        emit(std::move(m));
      }
    // 7. ReplaceVariable (same-type swaps; type resolved via scope)
    int var_count = count_all([](Expr& e) { return e.kind == ExprKind::Var; });
    for (int occ = 0; occ < var_count; ++occ)
      for (const auto& v : info.scope) {
        MutationOp m;
        m.kind = MutKind::ReplaceVariable;
        m.occurrence = occ;
        m.new_var = v.name;
        emit(std::move(m));
      }
    // 8-9. Oracle-throwing and early-return guards
    for (const auto& t : guard_templates(p, unit)) {
      MutationOp m;
      m.kind = MutKind::InsertGuardAbort;
      m.guard = t;
      emit(std::move(m));
    }
    const FunctionDef& fn = p.functions[static_cast<size_t>(info.fn_index)];
    std::vector<minilang::Value> defaults;
    if (fn.ret == Type::Int) {
      defaults.push_back(minilang::Value::of_int(0));
      defaults.push_back(minilang::Value::of_int(-1));
    } else if (fn.ret == Type::Bool) {
      defaults.push_back(minilang::Value::of_bool(false));
    } else {
      defaults.push_back(minilang::Value::of_array({}));
    }
    for (const auto& d : defaults)
      for (const auto& t : guard_templates(p, unit)) {
        MutationOp m;
        m.kind = MutKind::InsertGuardReturn;
        m.guard = t;
        m.ret_default = d;
        emit(std::move(m));
      }
    // 10. DeleteStatement
    {
      MutationOp m;
      m.kind = MutKind::DeleteStatement;
      emit(std::move(m));
    }
    // 11. ReplaceWithIngredient
    for (NodeUid other : all_stmts) {
      if (other == owner) continue;
      MutationOp m;
      m.kind = MutKind::ReplaceWithIngredient;
      m.ingredient = other;
      emit(std::move(m));
    }
  }
  return out;
}

}  // namespace mlrepair::repair
