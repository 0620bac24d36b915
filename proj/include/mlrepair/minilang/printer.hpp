#pragma once

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "mlrepair/minilang/ast.hpp"

namespace mlrepair::minilang {

namespace detail {

// Operator precedence, higher binds tighter.
inline int precedence(const std::string& op) {
  if (op == "||") return 1;
  if (op == "&&") return 2;
  if (op == "==" || op == "!=") return 3;
  if (op == "<" || op == "<=" || op == ">" || op == ">=") return 4;
  if (op == "+" || op == "-") return 5;
  if (op == "*" || op == "/" || op == "%") return 6;
  return 0;
}

constexpr int kUnaryPrec = 7;

inline int expr_prec(const Expr& e) {
  if (e.kind == ExprKind::Binary) return precedence(e.op);
  if (e.kind == ExprKind::Unary) return kUnaryPrec;
  return 100;  // atoms never need parens
}

inline std::string render_expr(const Expr& e) {
  switch (e.kind) {
    case ExprKind::IntLit:
      return std::to_string(e.int_val);
    case ExprKind::BoolLit:
      return e.bool_val ? "true" : "false";
    case ExprKind::Var:
      return e.name;
    case ExprKind::ArrayLit: {
      std::string s = "[";
      for (size_t i = 0; i < e.args.size(); ++i) {
        if (i) s += ", ";
        s += render_expr(e.args[i]);
      }
      return s + "]";
    }
    case ExprKind::Index:
      return e.name + "[" + render_expr(e.args[0]) + "]";
    case ExprKind::Len:
      return "len(" + render_expr(e.args[0]) + ")";
    case ExprKind::Call: {
      std::string s = e.name + "(";
      for (size_t i = 0; i < e.args.size(); ++i) {
        if (i) s += ", ";
        s += render_expr(e.args[i]);
      }
      return s + ")";
    }
    case ExprKind::Unary: {
      const Expr& a = e.args[0];
      std::string inner = render_expr(a);
      if (expr_prec(a) < kUnaryPrec) inner = "(" + inner + ")";
      return e.op + inner;
    }
    case ExprKind::Binary: {
      int p = precedence(e.op);
      std::string l = render_expr(e.args[0]);
      std::string r = render_expr(e.args[1]);
      if (expr_prec(e.args[0]) < p) l = "(" + l + ")";
      // Right operand needs parens at equal precedence: operators are
      // left-associative.
      if (expr_prec(e.args[1]) <= p) r = "(" + r + ")";
      return l + " " + e.op + " " + r;
    }
  }
  return "?";
}

struct LayoutWalker {
  std::vector<std::string>* out = nullptr;  // null when only assigning lines
  bool assign = false;
  int line = 0;

  void emit(const std::string& text) {
    ++line;
    if (out) out->push_back(text);
  }

  void set_expr_lines(Expr& e, int ln) {
    if (assign) e.line = ln;
    for (auto& a : e.args) set_expr_lines(a, ln);
  }

  void walk_block(std::vector<Stmt>& stmts, int depth) {
    const std::string ind(2 * static_cast<size_t>(depth), ' ');
    for (auto& s : stmts) {
      switch (s.kind) {
        case StmtKind::Let:
          emit(ind + "let " + s.name + ": " + type_name(s.decl_type) + " = " +
               render_expr(s.exprs[0]) + ";");
          break;
        case StmtKind::Assign:
          emit(ind + s.name + " = " + render_expr(s.exprs[0]) + ";");
          break;
        case StmtKind::AssignIndex:
          emit(ind + s.name + "[" + render_expr(s.exprs[0]) + "] = " +
               render_expr(s.exprs[1]) + ";");
          break;
        case StmtKind::Return:
          if (s.exprs.empty())
            emit(ind + "return;");
          else
            emit(ind + "return " + render_expr(s.exprs[0]) + ";");
          break;
        case StmtKind::Abort:
          emit(ind + "abort(\"" + s.message + "\");");
          break;
        case StmtKind::ExprStmt:
          emit(ind + render_expr(s.exprs[0]) + ";");
          break;
        case StmtKind::If:
          emit(ind + "if (" + render_expr(s.exprs[0]) + ") {");
          break;
        case StmtKind::While:
          emit(ind + "while (" + render_expr(s.exprs[0]) + ") {");
          break;
      }
      if (assign) {
        s.line = line;
        for (auto& e : s.exprs) set_expr_lines(e, line);
      }
      if (s.kind == StmtKind::If) {
        walk_block(s.body, depth + 1);
        if (!s.else_body.empty()) {
          emit(ind + "} else {");
          walk_block(s.else_body, depth + 1);
        }
        emit(ind + "}");
      } else if (s.kind == StmtKind::While) {
        walk_block(s.body, depth + 1);
        emit(ind + "}");
      }
    }
  }

  void walk(Program& p) {
    line = 0;
    for (size_t i = 0; i < p.functions.size(); ++i) {
      if (i) emit("");
      auto& f = p.functions[i];
      std::string header = "fn " + f.name + "(";
      for (size_t j = 0; j < f.params.size(); ++j) {
        if (j) header += ", ";
        header += f.params[j].name + ": " + type_name(f.params[j].type);
      }
      header += ") -> " + std::string(type_name(f.ret)) + " {";
      emit(header);
      if (assign) f.line = line;
      walk_block(f.body, 1);
      emit("}");
    }
  }
};

// Static defs/uses of a unit. Reads of an array element count as uses of the
// array; writes to an element both define and use it (partial update).
inline void collect_uses(const Expr& e, std::set<std::string>* uses) {
  if (e.kind == ExprKind::Var || e.kind == ExprKind::Index) uses->insert(e.name);
  for (const auto& a : e.args) collect_uses(a, uses);
}

struct CanonWalker {
  Program* p;
  int fn_index = 0;
  int pre_index = 0;
  int next_slot = 0;
  std::string fn_name;

  NodeUid fresh(bool is_stmt, bool is_guard) {
    NodeInfo info;
    info.id = NodeRef{fn_name, pre_index++};
    info.fn_index = fn_index;
    info.is_stmt = is_stmt;
    info.is_guard = is_guard;
    p->nodes.push_back(std::move(info));
    return static_cast<NodeUid>(p->nodes.size() - 1);
  }

  static int slot_of(const std::vector<ScopeVar>& scope, const std::string& n) {
    for (const auto& v : scope)
      if (v.name == n) return v.slot;
    return -1;
  }

  void walk_expr(Expr& e, NodeUid owner, bool guard_root,
                 const std::vector<ScopeVar>& scope) {
    e.uid = fresh(false, guard_root);
    p->nodes[e.uid].owner_stmt = owner;
    if (e.kind == ExprKind::Var || e.kind == ExprKind::Index)
      e.slot = slot_of(scope, e.name);
    if (e.kind == ExprKind::Unary || e.kind == ExprKind::Binary)
      e.op_code = op_code_of(e.op, e.kind == ExprKind::Unary);
    for (auto& a : e.args) walk_expr(a, owner, false, scope);
  }

  void walk_block(std::vector<Stmt>& stmts, std::vector<ScopeVar> scope) {
    for (auto& s : stmts) {
      s.uid = fresh(true, false);
      p->nodes[s.uid].stmt_kind = s.kind;
      p->nodes[s.uid].scope = scope;

      bool guard = s.kind == StmtKind::If || s.kind == StmtKind::While;
      for (size_t i = 0; i < s.exprs.size(); ++i)
        walk_expr(s.exprs[i], s.uid, guard && i == 0, scope);

      if (s.kind == StmtKind::Let)
        s.slot = next_slot++;
      else if (s.kind == StmtKind::Assign || s.kind == StmtKind::AssignIndex)
        s.slot = slot_of(scope, s.name);

      std::set<std::string> uses;
      for (const auto& e : s.exprs) collect_uses(e, &uses);

      // fresh() may reallocate the node table, so re-index after the walk.
      if (guard) {
        // The guard expression is the executable unit, not the if/while
        // statement itself.
        auto& ginfo = p->nodes[s.exprs[0].uid];
        ginfo.is_unit = true;
        ginfo.scope = scope;
        ginfo.uses.assign(uses.begin(), uses.end());
      } else {
        auto& info = p->nodes[s.uid];
        info.is_unit = true;
        if (s.kind == StmtKind::AssignIndex) uses.insert(s.name);
        info.uses.assign(uses.begin(), uses.end());
        if (s.kind == StmtKind::Let || s.kind == StmtKind::Assign ||
            s.kind == StmtKind::AssignIndex)
          info.defs = {s.name};
      }

      auto inner = scope;
      if (s.kind == StmtKind::Let) {
        scope.push_back(ScopeVar{s.name, s.decl_type, s.slot});
        inner = scope;
      }
      if (!s.body.empty() || s.kind == StmtKind::If || s.kind == StmtKind::While)
        walk_block(s.body, inner);
      if (!s.else_body.empty()) walk_block(s.else_body, inner);
    }
  }
};

inline void collect_constants(const Expr& e, std::set<long long>* out) {
  if (e.kind == ExprKind::IntLit) out->insert(e.int_val);
  for (const auto& a : e.args) collect_constants(a, out);
}

inline void collect_constants(const Stmt& s, std::set<long long>* out) {
  for (const auto& e : s.exprs) collect_constants(e, out);
  for (const auto& b : s.body) collect_constants(b, out);
  for (const auto& b : s.else_body) collect_constants(b, out);
}

}  // namespace detail

// Rebuilds node identities, metadata and canonical line numbers. Must be
// called after any AST surgery; parse() calls it on every program it returns.
inline void canonicalize(Program& p) {
  p.nodes.clear();
  p.fn_by_name.clear();
  p.fn_constants.clear();

  for (size_t i = 0; i < p.functions.size(); ++i) {
    auto& f = p.functions[i];
    p.fn_by_name[f.name] = static_cast<int>(i);

    detail::CanonWalker w;
    w.p = &p;
    w.fn_index = static_cast<int>(i);
    w.fn_name = f.name;
    f.uid = w.fresh(false, false);

    std::vector<ScopeVar> scope;
    for (const auto& prm : f.params) {
      int slot = w.next_slot++;
      scope.push_back(ScopeVar{prm.name, prm.type, slot});
    }
    w.walk_block(f.body, scope);
    f.frame_size = w.next_slot;

    std::set<long long> consts;
    for (const auto& s : f.body) detail::collect_constants(s, &consts);
    p.fn_constants[f.name] = {consts.begin(), consts.end()};
  }

  detail::LayoutWalker lw;
  lw.assign = true;
  lw.walk(p);
  for (auto& f : p.functions)
    if (f.uid >= 0) p.nodes[f.uid].line = f.line;
  // Mirror statement/expr lines into the node table.
  struct Sync {
    Program* p;
    void expr(const Expr& e) {
      p->nodes[e.uid].line = e.line;
      for (const auto& a : e.args) expr(a);
    }
    void block(const std::vector<Stmt>& stmts) {
      for (const auto& s : stmts) {
        p->nodes[s.uid].line = s.line;
        for (const auto& e : s.exprs) expr(e);
        block(s.body);
        block(s.else_body);
      }
    }
  } sync{&p};
  for (const auto& f : p.functions) sync.block(f.body);
}

// Canonical form: one statement per line, two-space indentation, single blank
// line between functions. parse(pretty_print(p)) reproduces p including line
// numbers.
inline std::string pretty_print(const Program& p) {
  std::vector<std::string> lines;
  detail::LayoutWalker lw;
  lw.out = &lines;
  lw.walk(const_cast<Program&>(p));  // assign=false: read-only walk
  std::string text;
  for (const auto& l : lines) {
    text += l;
    text += '\n';
  }
  return text;
}

inline std::string render_expr(const Expr& e) { return detail::render_expr(e); }

inline std::string render_stmts(const std::vector<Stmt>& stmts) {
  Program tmp;
  FunctionDef f;
  f.name = "__frag";
  f.body = stmts;
  tmp.functions.push_back(std::move(f));
  std::vector<std::string> lines;
  detail::LayoutWalker lw;
  lw.out = &lines;
  lw.walk(tmp);
  std::string text;
  for (size_t i = 1; i + 1 < lines.size(); ++i) {
    std::string l = lines[i];
    if (l.size() >= 2 && l[0] == ' ' && l[1] == ' ') l = l.substr(2);
    text += l;
    text += '\n';
  }
  return text;
}

}  // namespace mlrepair::minilang
