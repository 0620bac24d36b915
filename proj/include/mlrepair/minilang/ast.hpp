#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace mlrepair::minilang {

enum class Type { Int, Bool, IntArray };

inline const char* type_name(Type t) {
  switch (t) {
    case Type::Int: return "int";
    case Type::Bool: return "bool";
    case Type::IntArray: return "int[]";
  }
  return "?";
}

// Runtime value. Unit is the result of statements and of expression
// statements whose value is discarded. Hand-rolled tag instead of
// std::variant: value copies and comparisons sit on the interpreter's
// hottest path.
struct Value {
  enum class Tag : unsigned char { Unit, Int, Bool, Array };

  Tag tag = Tag::Unit;
  long long scalar = 0;           // Int payload; Bool stored as 0/1
  std::vector<long long> elems;   // Array payload

  static Value unit() { return Value{}; }
  static Value of_int(long long i) {
    Value x;
    x.tag = Tag::Int;
    x.scalar = i;
    return x;
  }
  static Value of_bool(bool b) {
    Value x;
    x.tag = Tag::Bool;
    x.scalar = b ? 1 : 0;
    return x;
  }
  static Value of_array(std::vector<long long> a) {
    Value x;
    x.tag = Tag::Array;
    x.elems = std::move(a);
    return x;
  }

  bool is_unit() const { return tag == Tag::Unit; }
  bool is_int() const { return tag == Tag::Int; }
  bool is_bool() const { return tag == Tag::Bool; }
  bool is_array() const { return tag == Tag::Array; }
  long long as_int() const { return scalar; }
  bool as_bool() const { return scalar != 0; }
  const std::vector<long long>& as_array() const { return elems; }
  std::vector<long long>& as_array() { return elems; }

  friend bool operator==(const Value& a, const Value& b) {
    if (a.tag != b.tag) return false;
    if (a.tag == Tag::Array) return a.elems == b.elems;
    return a.tag == Tag::Unit || a.scalar == b.scalar;
  }
  friend bool operator!=(const Value& a, const Value& b) { return !(a == b); }

  std::string to_string() const {
    if (is_unit()) return "unit";
    if (is_int()) return std::to_string(as_int());
    if (is_bool()) return as_bool() ? "true" : "false";
    std::string s = "[";
    const auto& a = as_array();
    for (size_t i = 0; i < a.size(); ++i) {
      if (i) s += ", ";
      s += std::to_string(a[i]);
    }
    s += "]";
    return s;
  }
};

// Dense node handle, assigned by canonicalize(). -1 means "not assigned yet".
using NodeUid = int;

// Stable node identity: function name plus pre-order index within that
// function (the function definition itself is index 0).
struct NodeRef {
  std::string fn;
  int index = -1;

  friend bool operator==(const NodeRef& a, const NodeRef& b) {
    return a.index == b.index && a.fn == b.fn;
  }
  friend bool operator<(const NodeRef& a, const NodeRef& b) {
    if (a.fn != b.fn) return a.fn < b.fn;
    return a.index < b.index;
  }
  std::string to_string() const { return fn + "#" + std::to_string(index); }
};

enum class ExprKind {
  IntLit,
  BoolLit,
  ArrayLit,
  Var,
  Index,
  Len,
  Call,
  Unary,
  Binary
};

struct Expr {
  ExprKind kind = ExprKind::IntLit;
  long long int_val = 0;     // IntLit
  bool bool_val = false;     // BoolLit
  std::string name;          // Var, Index base, Call callee
  std::string op;            // Unary ("!", "-"), Binary operator token
  std::vector<Expr> args;    // children: elements, subscript, operands, args
  NodeUid uid = -1;
  int line = 0;
  int slot = -1;      // Var/Index: frame slot, resolved by canonicalize()
  signed char op_code = -1;  // Unary/Binary: resolved operator (see op_code_of)
};

// Operator dispatch codes; string comparisons are too slow for the
// interpreter's inner loop.
enum : signed char {
  kOpAnd, kOpOr, kOpEq, kOpNe, kOpLt, kOpLe, kOpGt, kOpGe,
  kOpAdd, kOpSub, kOpMul, kOpDiv, kOpMod, kOpNot, kOpNeg
};

inline signed char op_code_of(const std::string& op, bool unary) {
  if (unary) return op == "!" ? kOpNot : kOpNeg;
  if (op == "&&") return kOpAnd;
  if (op == "||") return kOpOr;
  if (op == "==") return kOpEq;
  if (op == "!=") return kOpNe;
  if (op == "<") return kOpLt;
  if (op == "<=") return kOpLe;
  if (op == ">") return kOpGt;
  if (op == ">=") return kOpGe;
  if (op == "+") return kOpAdd;
  if (op == "-") return kOpSub;
  if (op == "*") return kOpMul;
  if (op == "/") return kOpDiv;
  return kOpMod;
}

inline Expr int_lit(long long v) {
  if (v < 0) {
    Expr e;
    e.kind = ExprKind::Unary;
    e.op = "-";
    Expr inner;
    inner.kind = ExprKind::IntLit;
    inner.int_val = -v;
    e.args.push_back(std::move(inner));
    return e;
  }
  Expr e;
  e.kind = ExprKind::IntLit;
  e.int_val = v;
  return e;
}

inline Expr bool_lit(bool b) {
  Expr e;
  e.kind = ExprKind::BoolLit;
  e.bool_val = b;
  return e;
}

inline Expr var_ref(std::string name) {
  Expr e;
  e.kind = ExprKind::Var;
  e.name = std::move(name);
  return e;
}

inline Expr unary_expr(std::string op, Expr operand) {
  Expr e;
  e.kind = ExprKind::Unary;
  e.op = std::move(op);
  e.args.push_back(std::move(operand));
  return e;
}

inline Expr binary_expr(std::string op, Expr lhs, Expr rhs) {
  Expr e;
  e.kind = ExprKind::Binary;
  e.op = std::move(op);
  e.args.push_back(std::move(lhs));
  e.args.push_back(std::move(rhs));
  return e;
}

inline Expr len_expr(Expr arg) {
  Expr e;
  e.kind = ExprKind::Len;
  e.args.push_back(std::move(arg));
  return e;
}

enum class StmtKind { Let, Assign, AssignIndex, If, While, Return, Abort, ExprStmt };

struct Stmt {
  StmtKind kind = StmtKind::ExprStmt;
  std::string name;           // Let/Assign/AssignIndex target
  std::string message;        // Abort
  Type decl_type = Type::Int; // Let
  // Expression slots by kind:
  //   Let [init], Assign [rhs], AssignIndex [index, rhs],
  //   If/While [cond], Return [expr?], ExprStmt [expr], Abort []
  std::vector<Expr> exprs;
  std::vector<Stmt> body;       // If then-branch / While body
  std::vector<Stmt> else_body;  // If else-branch
  NodeUid uid = -1;
  int line = 0;
  int slot = -1;  // Let/Assign/AssignIndex target slot
};

struct Param {
  std::string name;
  Type type = Type::Int;
};

struct FunctionDef {
  std::string name;
  std::vector<Param> params;
  Type ret = Type::Int;
  std::vector<Stmt> body;
  NodeUid uid = -1;
  int line = 0;
  int frame_size = 0;  // slots: parameters plus every let in the body
};

// A variable visible at some program point, with its resolved frame slot.
struct ScopeVar {
  std::string name;
  Type type = Type::Int;
  int slot = -1;
};

// Per-node metadata filled in by canonicalize(). Executable "units" are the
// things traces, spectra and rankings talk about: simple statements plus the
// guard expressions of if/while.
struct NodeInfo {
  NodeRef id;
  int line = 0;
  int fn_index = -1;
  bool is_stmt = false;
  bool is_guard = false;      // if/while condition expression
  bool is_unit = false;       // emits trace events
  StmtKind stmt_kind = StmtKind::ExprStmt;  // valid when is_stmt
  NodeUid owner_stmt = -1;    // for exprs: the enclosing statement
  std::vector<std::string> defs;   // units only
  std::vector<std::string> uses;   // units only
  std::vector<ScopeVar> scope;     // in-scope vars at node
};

struct Program {
  std::vector<FunctionDef> functions;

  // Everything below is derived; rebuilt by canonicalize().
  std::vector<NodeInfo> nodes;
  std::map<std::string, int> fn_by_name;
  std::map<std::string, std::vector<long long>> fn_constants;

  const FunctionDef* find_function(const std::string& n) const {
    auto it = fn_by_name.find(n);
    return it == fn_by_name.end() ? nullptr : &functions[it->second];
  }

  const NodeInfo& info(NodeUid uid) const { return nodes[uid]; }

  // Executable unit at a canonical (function, line), or -1.
  NodeUid unit_at(const std::string& fn, int line) const {
    for (NodeUid u = 0; u < static_cast<NodeUid>(nodes.size()); ++u) {
      const auto& n = nodes[u];
      if (n.is_unit && n.line == line && n.id.fn == fn) return u;
    }
    return -1;
  }
};

// ---------------------------------------------------------------------------
// Structural equality (ignores uids and line numbers).

inline bool struct_eq(const Expr& a, const Expr& b) {
  if (a.kind != b.kind || a.name != b.name || a.op != b.op) return false;
  if (a.kind == ExprKind::IntLit && a.int_val != b.int_val) return false;
  if (a.kind == ExprKind::BoolLit && a.bool_val != b.bool_val) return false;
  if (a.args.size() != b.args.size()) return false;
  for (size_t i = 0; i < a.args.size(); ++i)
    if (!struct_eq(a.args[i], b.args[i])) return false;
  return true;
}

inline bool struct_eq(const Stmt& a, const Stmt& b) {
  if (a.kind != b.kind || a.name != b.name || a.message != b.message)
    return false;
  if (a.kind == StmtKind::Let && a.decl_type != b.decl_type) return false;
  if (a.exprs.size() != b.exprs.size()) return false;
  for (size_t i = 0; i < a.exprs.size(); ++i)
    if (!struct_eq(a.exprs[i], b.exprs[i])) return false;
  if (a.body.size() != b.body.size() || a.else_body.size() != b.else_body.size())
    return false;
  for (size_t i = 0; i < a.body.size(); ++i)
    if (!struct_eq(a.body[i], b.body[i])) return false;
  for (size_t i = 0; i < a.else_body.size(); ++i)
    if (!struct_eq(a.else_body[i], b.else_body[i])) return false;
  return true;
}

inline bool struct_eq(const FunctionDef& a, const FunctionDef& b) {
  if (a.name != b.name || a.ret != b.ret || a.params.size() != b.params.size())
    return false;
  for (size_t i = 0; i < a.params.size(); ++i)
    if (a.params[i].name != b.params[i].name || a.params[i].type != b.params[i].type)
      return false;
  if (a.body.size() != b.body.size()) return false;
  for (size_t i = 0; i < a.body.size(); ++i)
    if (!struct_eq(a.body[i], b.body[i])) return false;
  return true;
}

inline bool struct_eq(const Program& a, const Program& b) {
  if (a.functions.size() != b.functions.size()) return false;
  for (size_t i = 0; i < a.functions.size(); ++i)
    if (!struct_eq(a.functions[i], b.functions[i])) return false;
  return true;
}

}  // namespace mlrepair::minilang
