#pragma once

#include <cctype>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mlrepair/minilang/ast.hpp"
#include "mlrepair/minilang/printer.hpp"

namespace mlrepair::minilang {

// Syntax and static-semantics errors share one error type; a type error is
// reported as a parse failure of the compilation unit.
struct ParseError : std::runtime_error {
  int line;
  int col;
  ParseError(int line_, int col_, const std::string& msg)
      : std::runtime_error("parse error at " + std::to_string(line_) + ":" +
                           std::to_string(col_) + ": " + msg),
        line(line_),
        col(col_) {}
};

namespace detail {

struct Token {
  enum class Kind { Ident, Int, String, Punct, End } kind;
  std::string text;
  long long int_val = 0;
  int line = 1;
  int col = 1;
};

class Lexer {
 public:
  explicit Lexer(const std::string& src) : src_(src) { next(); }

  const Token& peek() const { return tok_; }

  Token take() {
    Token t = tok_;
    next();
    return t;
  }

 private:
  void error(const std::string& msg) const { throw ParseError(line_, col_, msg); }

  char cur() const { return pos_ < src_.size() ? src_[pos_] : '\0'; }

  void advance() {
    if (pos_ < src_.size()) {
      if (src_[pos_] == '\n') {
        ++line_;
        col_ = 1;
      } else {
        ++col_;
      }
      ++pos_;
    }
  }

  void next() {
    for (;;) {
      while (std::isspace(static_cast<unsigned char>(cur()))) advance();
      if (cur() == '/' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '/') {
        while (cur() != '\n' && cur() != '\0') advance();
        continue;
      }
      break;
    }
    tok_.line = line_;
    tok_.col = col_;
    char c = cur();
    if (c == '\0') {
      tok_.kind = Token::Kind::End;
      tok_.text.clear();
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::string s;
      while (std::isalnum(static_cast<unsigned char>(cur())) || cur() == '_') {
        s += cur();
        advance();
      }
      tok_.kind = Token::Kind::Ident;
      tok_.text = s;
      return;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      unsigned long long v = 0;
      while (std::isdigit(static_cast<unsigned char>(cur()))) {
        v = v * 10 + static_cast<unsigned long long>(cur() - '0');
        if (v > 9223372036854775807ULL) error("integer literal out of range");
        advance();
      }
      tok_.kind = Token::Kind::Int;
      tok_.int_val = static_cast<long long>(v);
      tok_.text = std::to_string(v);
      return;
    }
    if (c == '"') {
      advance();
      std::string s;
      while (cur() != '"') {
        if (cur() == '\0' || cur() == '\n') error("unterminated string literal");
        if (cur() == '\\') error("escape sequences are not supported");
        s += cur();
        advance();
      }
      advance();
      tok_.kind = Token::Kind::String;
      tok_.text = s;
      return;
    }
    // Multi-char operators first.
    static const char* two[] = {"==", "!=", "<=", ">=", "&&", "||", "->"};
    for (const char* op : two) {
      if (c == op[0] && pos_ + 1 < src_.size() && src_[pos_ + 1] == op[1]) {
        tok_.kind = Token::Kind::Punct;
        tok_.text = op;
        advance();
        advance();
        return;
      }
    }
    static const std::string singles = "(){}[];:,=<>!+-*/%";
    if (singles.find(c) != std::string::npos) {
      tok_.kind = Token::Kind::Punct;
      tok_.text = std::string(1, c);
      advance();
      return;
    }
    error(std::string("unexpected character '") + c + "'");
  }

  const std::string& src_;
  size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
  Token tok_;
};

class Parser {
 public:
  explicit Parser(const std::string& src) : lex_(src) {}

  Program parse_program() {
    Program p;
    while (lex_.peek().kind != Token::Kind::End) {
      expect_keyword("fn");
      p.functions.push_back(parse_function());
    }
    return p;
  }

 private:
  [[noreturn]] void error(const Token& t, const std::string& msg) {
    throw ParseError(t.line, t.col, msg);
  }

  bool peek_punct(const std::string& s) {
    return lex_.peek().kind == Token::Kind::Punct && lex_.peek().text == s;
  }

  bool peek_ident(const std::string& s) {
    return lex_.peek().kind == Token::Kind::Ident && lex_.peek().text == s;
  }

  Token expect_punct(const std::string& s) {
    if (!peek_punct(s)) error(lex_.peek(), "expected '" + s + "'");
    return lex_.take();
  }

  Token expect_keyword(const std::string& s) {
    if (!peek_ident(s)) error(lex_.peek(), "expected '" + s + "'");
    return lex_.take();
  }

  std::string expect_name() {
    if (lex_.peek().kind != Token::Kind::Ident)
      error(lex_.peek(), "expected identifier");
    Token t = lex_.take();
    if (is_keyword(t.text)) error(t, "'" + t.text + "' is a keyword");
    return t.text;
  }

  static bool is_keyword(const std::string& s) {
    return s == "fn" || s == "let" || s == "if" || s == "else" || s == "while" ||
           s == "return" || s == "abort" || s == "true" || s == "false" ||
           s == "int" || s == "bool" || s == "len";
  }

  Type parse_type() {
    Token t = lex_.take();
    if (t.kind != Token::Kind::Ident) error(t, "expected type");
    if (t.text == "bool") return Type::Bool;
    if (t.text == "int") {
      if (peek_punct("[")) {
        lex_.take();
        expect_punct("]");
        return Type::IntArray;
      }
      return Type::Int;
    }
    error(t, "expected type");
  }

  FunctionDef parse_function() {
    FunctionDef f;
    Token name_tok = lex_.peek();
    f.name = expect_name();
    f.line = name_tok.line;
    expect_punct("(");
    if (!peek_punct(")")) {
      for (;;) {
        Param prm;
        prm.name = expect_name();
        expect_punct(":");
        prm.type = parse_type();
        f.params.push_back(std::move(prm));
        if (peek_punct(",")) {
          lex_.take();
          continue;
        }
        break;
      }
    }
    expect_punct(")");
    expect_punct("->");
    f.ret = parse_type();
    f.body = parse_block();
    return f;
  }

  std::vector<Stmt> parse_block() {
    expect_punct("{");
    std::vector<Stmt> stmts;
    while (!peek_punct("}")) stmts.push_back(parse_stmt());
    lex_.take();
    return stmts;
  }

  Stmt parse_stmt() {
    Token t = lex_.peek();
    Stmt s;
    s.line = t.line;
    if (peek_ident("let")) {
      lex_.take();
      s.kind = StmtKind::Let;
      s.name = expect_name();
      expect_punct(":");
      s.decl_type = parse_type();
      expect_punct("=");
      s.exprs.push_back(parse_expr());
      expect_punct(";");
      return s;
    }
    if (peek_ident("if")) {
      lex_.take();
      s.kind = StmtKind::If;
      expect_punct("(");
      s.exprs.push_back(parse_expr());
      expect_punct(")");
      s.body = parse_block();
      if (peek_ident("else")) {
        lex_.take();
        s.else_body = parse_block();
      }
      return s;
    }
    if (peek_ident("while")) {
      lex_.take();
      s.kind = StmtKind::While;
      expect_punct("(");
      s.exprs.push_back(parse_expr());
      expect_punct(")");
      s.body = parse_block();
      return s;
    }
    if (peek_ident("return")) {
      lex_.take();
      s.kind = StmtKind::Return;
      if (!peek_punct(";")) s.exprs.push_back(parse_expr());
      expect_punct(";");
      return s;
    }
    if (peek_ident("abort")) {
      lex_.take();
      s.kind = StmtKind::Abort;
      expect_punct("(");
      if (lex_.peek().kind != Token::Kind::String)
        error(lex_.peek(), "abort takes a string literal");
      s.message = lex_.take().text;
      expect_punct(")");
      expect_punct(";");
      return s;
    }
    // lvalue assignment or expression statement
    Expr e = parse_expr();
    if (peek_punct("=")) {
      lex_.take();
      if (e.kind == ExprKind::Var) {
        s.kind = StmtKind::Assign;
        s.name = e.name;
      } else if (e.kind == ExprKind::Index) {
        s.kind = StmtKind::AssignIndex;
        s.name = e.name;
        s.exprs.push_back(std::move(e.args[0]));
      } else {
        error(t, "invalid assignment target");
      }
      s.exprs.push_back(parse_expr());
      expect_punct(";");
      return s;
    }
    s.kind = StmtKind::ExprStmt;
    s.exprs.push_back(std::move(e));
    expect_punct(";");
    return s;
  }

  Expr parse_expr() { return parse_binary(1); }

  Expr parse_binary(int min_prec) {
    Expr lhs = parse_unary();
    for (;;) {
      const Token& t = lex_.peek();
      if (t.kind != Token::Kind::Punct) break;
      int prec = detail::precedence(t.text);
      if (prec == 0 || prec < min_prec) break;
      std::string op = lex_.take().text;
      Expr rhs = parse_binary(prec + 1);
      Expr e = binary_expr(op, std::move(lhs), std::move(rhs));
      e.line = t.line;
      lhs = std::move(e);
    }
    return lhs;
  }

  Expr parse_unary() {
    Token t = lex_.peek();
    if (peek_punct("!") || peek_punct("-")) {
      std::string op = lex_.take().text;
      Expr e = unary_expr(op, parse_unary());
      e.line = t.line;
      return e;
    }
    return parse_atom();
  }

  Expr parse_atom() {
    Token t = lex_.peek();
    Expr e;
    e.line = t.line;
    if (t.kind == Token::Kind::Int) {
      lex_.take();
      e.kind = ExprKind::IntLit;
      e.int_val = t.int_val;
      return e;
    }
    if (peek_ident("true") || peek_ident("false")) {
      lex_.take();
      e.kind = ExprKind::BoolLit;
      e.bool_val = t.text == "true";
      return e;
    }
    if (peek_punct("[")) {
      lex_.take();
      e.kind = ExprKind::ArrayLit;
      if (!peek_punct("]")) {
        for (;;) {
          e.args.push_back(parse_expr());
          if (peek_punct(",")) {
            lex_.take();
            continue;
          }
          break;
        }
      }
      expect_punct("]");
      return e;
    }
    if (peek_punct("(")) {
      lex_.take();
      Expr inner = parse_expr();
      expect_punct(")");
      return inner;
    }
    if (peek_ident("len")) {
      lex_.take();
      expect_punct("(");
      e.kind = ExprKind::Len;
      e.args.push_back(parse_expr());
      expect_punct(")");
      return e;
    }
    if (t.kind == Token::Kind::Ident && !is_keyword(t.text)) {
      std::string name = lex_.take().text;
      if (peek_punct("(")) {
        lex_.take();
        e.kind = ExprKind::Call;
        e.name = name;
        if (!peek_punct(")")) {
          for (;;) {
            e.args.push_back(parse_expr());
            if (peek_punct(",")) {
              lex_.take();
              continue;
            }
            break;
          }
        }
        expect_punct(")");
        return e;
      }
      if (peek_punct("[")) {
        lex_.take();
        e.kind = ExprKind::Index;
        e.name = name;
        e.args.push_back(parse_expr());
        expect_punct("]");
        return e;
      }
      e.kind = ExprKind::Var;
      e.name = name;
      return e;
    }
    error(t, "expected expression");
  }

  Lexer lex_;
};

// -----------------------------------------------------------------------
// Static type check.

struct TypeIssue {
  int line = 0;
  std::string message;
};

class Checker {
 public:
  explicit Checker(const Program& p) : p_(p) {}

  std::optional<TypeIssue> run() {
    for (size_t i = 0; i < p_.functions.size(); ++i) {
      for (size_t j = 0; j < i; ++j)
        if (p_.functions[i].name == p_.functions[j].name)
          return issue(p_.functions[i].line,
                       "duplicate function " + p_.functions[i].name);
    }
    for (const auto& f : p_.functions) {
      cur_ = &f;
      std::vector<std::pair<std::string, Type>> scope;
      for (const auto& prm : f.params) {
        for (const auto& [n, t] : scope)
          if (n == prm.name)
            return issue(f.line, "duplicate parameter " + prm.name);
        scope.emplace_back(prm.name, prm.type);
      }
      if (auto bad = check_block(f.body, scope)) return bad;
      if (!always_returns(f.body))
        return issue(f.line, "missing return in function " + f.name);
    }
    return std::nullopt;
  }

 private:
  std::optional<TypeIssue> issue(int line, const std::string& msg) {
    return TypeIssue{line, msg};
  }

  static bool always_returns(const std::vector<Stmt>& body) {
    for (const auto& s : body) {
      if (s.kind == StmtKind::Return || s.kind == StmtKind::Abort) return true;
      if (s.kind == StmtKind::If && !s.else_body.empty() &&
          always_returns(s.body) && always_returns(s.else_body))
        return true;
    }
    return false;
  }

  using Scope = std::vector<std::pair<std::string, Type>>;

  static std::optional<Type> lookup(const Scope& scope, const std::string& n) {
    for (const auto& [name, t] : scope)
      if (name == n) return t;
    return std::nullopt;
  }

  std::optional<TypeIssue> check_block(const std::vector<Stmt>& body, Scope scope) {
    for (const auto& s : body) {
      switch (s.kind) {
        case StmtKind::Let: {
          if (lookup(scope, s.name))
            return issue(s.line, "redeclared variable " + s.name);
          auto t = type_of(s.exprs[0], scope);
          if (!t) return err_;
          if (*t != s.decl_type)
            return issue(s.line, "initializer type mismatch for " + s.name);
          scope.emplace_back(s.name, s.decl_type);
          break;
        }
        case StmtKind::Assign: {
          auto vt = lookup(scope, s.name);
          if (!vt) return issue(s.line, "undeclared variable " + s.name);
          auto t = type_of(s.exprs[0], scope);
          if (!t) return err_;
          if (*t != *vt)
            return issue(s.line, "assignment type mismatch for " + s.name);
          break;
        }
        case StmtKind::AssignIndex: {
          auto vt = lookup(scope, s.name);
          if (!vt) return issue(s.line, "undeclared variable " + s.name);
          if (*vt != Type::IntArray)
            return issue(s.line, s.name + " is not an array");
          auto it = type_of(s.exprs[0], scope);
          if (!it) return err_;
          if (*it != Type::Int) return issue(s.line, "array index must be int");
          auto rt = type_of(s.exprs[1], scope);
          if (!rt) return err_;
          if (*rt != Type::Int)
            return issue(s.line, "array element must be int");
          break;
        }
        case StmtKind::If:
        case StmtKind::While: {
          auto ct = type_of(s.exprs[0], scope);
          if (!ct) return err_;
          if (*ct != Type::Bool)
            return issue(s.line, "condition must be bool");
          if (auto bad = check_block(s.body, scope)) return bad;
          if (auto bad = check_block(s.else_body, scope)) return bad;
          break;
        }
        case StmtKind::Return: {
          if (s.exprs.empty())
            return issue(s.line, "return must produce a value");
          auto t = type_of(s.exprs[0], scope);
          if (!t) return err_;
          if (*t != cur_->ret) return issue(s.line, "return type mismatch");
          break;
        }
        case StmtKind::Abort:
          break;
        case StmtKind::ExprStmt: {
          if (!type_of(s.exprs[0], scope)) return err_;
          break;
        }
      }
    }
    return std::nullopt;
  }

  std::optional<Type> fail(int line, const std::string& msg) {
    err_ = TypeIssue{line, msg};
    return std::nullopt;
  }

  std::optional<Type> type_of(const Expr& e, const Scope& scope) {
    switch (e.kind) {
      case ExprKind::IntLit:
        return Type::Int;
      case ExprKind::BoolLit:
        return Type::Bool;
      case ExprKind::ArrayLit:
        for (const auto& a : e.args) {
          auto t = type_of(a, scope);
          if (!t) return std::nullopt;
          if (*t != Type::Int)
            return fail(e.line, "array elements must be int");
        }
        return Type::IntArray;
      case ExprKind::Var: {
        auto t = lookup(scope, e.name);
        if (!t) return fail(e.line, "undeclared variable " + e.name);
        return t;
      }
      case ExprKind::Index: {
        auto t = lookup(scope, e.name);
        if (!t) return fail(e.line, "undeclared variable " + e.name);
        if (*t != Type::IntArray) return fail(e.line, e.name + " is not an array");
        auto it = type_of(e.args[0], scope);
        if (!it) return std::nullopt;
        if (*it != Type::Int) return fail(e.line, "array index must be int");
        return Type::Int;
      }
      case ExprKind::Len: {
        auto t = type_of(e.args[0], scope);
        if (!t) return std::nullopt;
        if (*t != Type::IntArray) return fail(e.line, "len expects an array");
        return Type::Int;
      }
      case ExprKind::Call: {
        const FunctionDef* callee = nullptr;
        for (const auto& f : p_.functions)
          if (f.name == e.name) callee = &f;
        if (!callee) return fail(e.line, "unknown function " + e.name);
        if (callee->params.size() != e.args.size())
          return fail(e.line, "wrong arity calling " + e.name);
        for (size_t i = 0; i < e.args.size(); ++i) {
          auto t = type_of(e.args[i], scope);
          if (!t) return std::nullopt;
          if (*t != callee->params[i].type)
            return fail(e.line, "argument type mismatch calling " + e.name);
        }
        return callee->ret;
      }
      case ExprKind::Unary: {
        auto t = type_of(e.args[0], scope);
        if (!t) return std::nullopt;
        if (e.op == "!") {
          if (*t != Type::Bool) return fail(e.line, "! expects bool");
          return Type::Bool;
        }
        if (*t != Type::Int) return fail(e.line, "unary - expects int");
        return Type::Int;
      }
      case ExprKind::Binary: {
        auto lt = type_of(e.args[0], scope);
        if (!lt) return std::nullopt;
        auto rt = type_of(e.args[1], scope);
        if (!rt) return std::nullopt;
        const std::string& op = e.op;
        if (op == "&&" || op == "||") {
          if (*lt != Type::Bool || *rt != Type::Bool)
            return fail(e.line, op + " expects bool operands");
          return Type::Bool;
        }
        if (op == "==" || op == "!=") {
          if (*lt != *rt || *lt == Type::IntArray)
            return fail(e.line, op + " expects matching int or bool operands");
          return Type::Bool;
        }
        if (op == "<" || op == "<=" || op == ">" || op == ">=") {
          if (*lt != Type::Int || *rt != Type::Int)
            return fail(e.line, op + " expects int operands");
          return Type::Bool;
        }
        if (*lt != Type::Int || *rt != Type::Int)
          return fail(e.line, op + " expects int operands");
        return Type::Int;
      }
    }
    return fail(e.line, "bad expression");
  }

  const Program& p_;
  const FunctionDef* cur_ = nullptr;
  std::optional<TypeIssue> err_;
};

}  // namespace detail

// Non-throwing type check; used to filter candidate mutants.
inline std::optional<detail::TypeIssue> check_program(const Program& p) {
  return detail::Checker(p).run();
}

// Parses, type-checks and canonicalizes a compilation unit.
inline Program parse(const std::string& source) {
  detail::Parser parser(source);
  Program p = parser.parse_program();
  if (auto bad = check_program(p)) throw ParseError(bad->line, 0, bad->message);
  canonicalize(p);
  return p;
}

}  // namespace mlrepair::minilang
