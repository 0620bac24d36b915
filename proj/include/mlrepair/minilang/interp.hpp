#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mlrepair/minilang/ast.hpp"

namespace mlrepair::minilang {

constexpr long long kDefaultFuel = 100000;
constexpr int kMaxCallDepth = 256;

enum class ErrKind { DivByZero, IndexOutOfBounds, Abort };

inline const char* err_name(ErrKind k) {
  switch (k) {
    case ErrKind::DivByZero: return "DivByZero";
    case ErrKind::IndexOutOfBounds: return "IndexOutOfBounds";
    case ErrKind::Abort: return "Abort";
  }
  return "?";
}

inline std::optional<ErrKind> err_from_name(const std::string& s) {
  if (s == "DivByZero") return ErrKind::DivByZero;
  if (s == "IndexOutOfBounds") return ErrKind::IndexOutOfBounds;
  if (s == "Abort") return ErrKind::Abort;
  return std::nullopt;
}

struct Termination {
  enum class Kind { Normal, RuntimeError, FuelExhausted } kind = Kind::Normal;
  Value value;            // Normal
  ErrKind err = ErrKind::Abort;
  std::string message;    // Abort payload
  NodeUid error_node = -1;

  bool normal() const { return kind == Kind::Normal; }
  bool is_error() const { return kind == Kind::RuntimeError; }

  static Termination ok(Value v) {
    Termination t;
    t.kind = Kind::Normal;
    t.value = std::move(v);
    return t;
  }

  std::string to_string() const {
    switch (kind) {
      case Kind::Normal: return value.to_string();
      case Kind::FuelExhausted: return "FuelExhausted";
      case Kind::RuntimeError:
        return std::string(err_name(err)) +
               (err == ErrKind::Abort ? "(\"" + message + "\")" : "");
    }
    return "?";
  }
};

// Result comparison used by tests and differential checking: values compare
// structurally, runtime errors compare by kind only (messages are free text).
inline bool same_outcome(const Termination& a, const Termination& b) {
  if (a.kind != b.kind) return false;
  if (a.kind == Termination::Kind::Normal) return a.value == b.value;
  if (a.kind == Termination::Kind::RuntimeError) return a.err == b.err;
  return true;
}

enum class EventKind { Stmt, Branch };

struct TraceEvent {
  int step = 0;
  NodeUid node = -1;
  EventKind kind = EventKind::Stmt;
  std::optional<bool> branch_outcome;  // effective outcome (Branch only)
  std::optional<bool> real_outcome;    // unforced evaluation, when known
  bool forced = false;
  int frame = 0;
  int gov = -1;  // step of governing event: branch occurrence or call site
};

struct ExecTrace {
  Termination term;
  std::vector<TraceEvent> events;
};

struct OverridePolicy {
  bool uniform = true;
  bool uniform_value = false;
  std::vector<bool> seq;  // PerOccurrence; falls through to real evaluation

  static OverridePolicy uniform_of(bool v) {
    OverridePolicy p;
    p.uniform = true;
    p.uniform_value = v;
    return p;
  }
  static OverridePolicy per_occurrence(std::vector<bool> s) {
    OverridePolicy p;
    p.uniform = false;
    p.seq = std::move(s);
    return p;
  }
};

using OverrideSchedule = std::map<NodeUid, OverridePolicy>;

struct CondObservation {
  int occurrence = 0;
  std::vector<std::pair<std::string, Value>> env;
  bool effective = false;
  std::optional<bool> real;
  bool forced = false;
};

enum class TraceMode { None, Coverage, Full };

struct CallSpec {
  std::string fn;
  std::vector<Value> args;

  std::string to_string() const {
    std::string s = fn + "(";
    for (size_t i = 0; i < args.size(); ++i) {
      if (i) s += ", ";
      s += args[i].to_string();
    }
    return s + ")";
  }
};

struct ExecOptions {
  long long fuel = kDefaultFuel;
  const OverrideSchedule* overrides = nullptr;
  NodeUid observe = -1;  // condition node to snapshot
  TraceMode trace = TraceMode::Full;
};

struct ExecResult {
  ExecTrace trace;
  std::vector<CondObservation> observations;
  std::vector<char> covered;  // per-uid flags (Coverage/Full modes)
  long long steps = 0;
};

namespace detail {

struct RtSignal {
  enum class Kind { Error, Fuel } kind;
  ErrKind err;
  std::string message;
  NodeUid node;
};

class Interp {
 public:
  Interp(const Program& p, const ExecOptions& opts) : p_(p), o_(opts) {
    if (o_.trace != TraceMode::None || o_.observe >= 0)
      covered_.assign(p.nodes.size(), 0);
    // Occurrence counters only matter when something keys off occurrences.
    if (o_.overrides || o_.observe >= 0) occ_.assign(p.nodes.size(), 0);
  }

  ExecResult run(const CallSpec& call) {
    ExecResult r;
    fuel_ = o_.fuel;
    const FunctionDef* f = p_.find_function(call.fn);
    if (!f) throw std::invalid_argument("no function named " + call.fn);
    if (f->params.size() != call.args.size())
      throw std::invalid_argument("wrong arity calling " + call.fn);
    try {
      Value v = exec_call(*f, call.args, -1, 0);
      r.trace.term = Termination::ok(std::move(v));
    } catch (RtSignal& sig) {
      if (sig.kind == RtSignal::Kind::Fuel) {
        r.trace.term.kind = Termination::Kind::FuelExhausted;
      } else {
        r.trace.term.kind = Termination::Kind::RuntimeError;
        r.trace.term.err = sig.err;
        r.trace.term.message = sig.message;
        r.trace.term.error_node = sig.node;
      }
    }
    r.trace.events = std::move(events_);
    r.observations = std::move(obs_);
    r.covered = std::move(covered_);
    r.steps = o_.fuel - fuel_;
    return r;
  }

 private:
  struct Frame {
    std::vector<Value> slots;
    int id = 0;
  };

  [[noreturn]] void raise(ErrKind k, std::string msg) {
    throw RtSignal{RtSignal::Kind::Error, k, std::move(msg), cur_unit_};
  }

  void charge() {
    if (--fuel_ < 0) throw RtSignal{RtSignal::Kind::Fuel, ErrKind::Abort, "", -1};
  }

  int emit(NodeUid node, EventKind kind, Frame& fr, int gov) {
    if (!covered_.empty()) covered_[node] = 1;
    if (o_.trace != TraceMode::Full) return -1;
    TraceEvent e;
    e.step = static_cast<int>(events_.size());
    e.node = node;
    e.kind = kind;
    e.frame = fr.id;
    e.gov = gov;
    events_.push_back(e);
    return e.step;
  }

  Value exec_call(const FunctionDef& f, const std::vector<Value>& args,
                  int caller_step, int depth) {
    if (depth > kMaxCallDepth)
      throw RtSignal{RtSignal::Kind::Fuel, ErrKind::Abort, "", -1};
    Frame fr;
    fr.id = next_frame_++;
    fr.slots.resize(static_cast<size_t>(f.frame_size));
    for (size_t i = 0; i < f.params.size(); ++i) fr.slots[i] = args[i];
    auto ret = exec_block(f.body, fr, caller_step, depth);
    if (!ret) raise(ErrKind::Abort, "function " + f.name + " did not return");
    return *ret;
  }

  // Returns the function result once a return statement fires.
  std::optional<Value> exec_block(const std::vector<Stmt>& body, Frame& fr,
                                  int gov, int depth) {
    for (const auto& s : body) {
      auto ret = exec_stmt(s, fr, gov, depth);
      if (ret) return ret;
    }
    return std::nullopt;
  }

  std::optional<Value> exec_stmt(const Stmt& s, Frame& fr, int gov, int depth) {
    if (s.kind == StmtKind::If || s.kind == StmtKind::While)
      return exec_branching(s, fr, gov, depth);

    charge();
    cur_unit_ = s.uid;
    owner_step_ = emit(s.uid, EventKind::Stmt, fr, gov);
    switch (s.kind) {
      case StmtKind::Let:
      case StmtKind::Assign:
        fr.slots[static_cast<size_t>(s.slot)] = eval(s.exprs[0], fr, depth);
        break;
      case StmtKind::AssignIndex: {
        Value iv = eval(s.exprs[0], fr, depth);
        Value rv = eval(s.exprs[1], fr, depth);
        auto& arr = fr.slots[static_cast<size_t>(s.slot)].as_array();
        long long i = iv.as_int();
        if (i < 0 || i >= static_cast<long long>(arr.size()))
          raise(ErrKind::IndexOutOfBounds,
                "index " + std::to_string(i) + " out of bounds for " + s.name);
        arr[static_cast<size_t>(i)] = rv.as_int();
        break;
      }
      case StmtKind::Return:
        return eval(s.exprs[0], fr, depth);
      case StmtKind::Abort:
        raise(ErrKind::Abort, s.message);
      case StmtKind::ExprStmt:
        eval(s.exprs[0], fr, depth);
        break;
      default:
        break;
    }
    return std::nullopt;
  }

  std::optional<Value> exec_branching(const Stmt& s, Frame& fr, int gov,
                                      int depth) {
    if (s.kind == StmtKind::If) {
      auto [taken, step] = eval_condition(s.exprs[0], fr, gov, depth);
      if (taken) return exec_block(s.body, fr, step, depth);
      return exec_block(s.else_body, fr, step, depth);
    }
    for (;;) {
      auto [taken, step] = eval_condition(s.exprs[0], fr, gov, depth);
      if (!taken) return std::nullopt;
      auto ret = exec_block(s.body, fr, step, depth);
      if (ret) return ret;
    }
  }

  // Evaluates an if/while guard, applying any override for this occurrence.
  // Returns the effective outcome and the step of the emitted branch event.
  std::pair<bool, int> eval_condition(const Expr& cond, Frame& fr, int gov,
                                      int depth) {
    charge();
    cur_unit_ = cond.uid;
    int step = emit(cond.uid, EventKind::Branch, fr, gov);
    owner_step_ = step;

    int occurrence =
        occ_.empty() ? 0 : occ_[static_cast<size_t>(cond.uid)]++;
    const OverridePolicy* pol = nullptr;
    if (o_.overrides) {
      auto it = o_.overrides->find(cond.uid);
      if (it != o_.overrides->end()) pol = &it->second;
    }
    bool has_force = false;
    bool forced_val = false;
    if (pol) {
      if (pol->uniform) {
        has_force = true;
        forced_val = pol->uniform_value;
      } else if (occurrence < static_cast<int>(pol->seq.size())) {
        has_force = true;
        forced_val = pol->seq[static_cast<size_t>(occurrence)];
      }
    }

    std::optional<bool> real;
    bool effective;
    bool want_real = o_.trace == TraceMode::Full || cond.uid == o_.observe;
    if (!has_force) {
      // Errors inside the guard are attributed to the guard node; the
      // already-emitted event is downgraded so branch_outcome stays tied to
      // kind == Branch.
      bool v;
      try {
        v = eval(cond, fr, depth).as_bool();
      } catch (RtSignal&) {
        if (step >= 0) events_[static_cast<size_t>(step)].kind = EventKind::Stmt;
        throw;
      }
      real = v;
      effective = v;
    } else {
      effective = forced_val;
      if (want_real) real = silent_eval(cond, fr);
    }

    if (step >= 0) {
      auto& e = events_[static_cast<size_t>(step)];
      e.branch_outcome = effective;
      e.real_outcome = real;
      e.forced = has_force;
    }
    if (cond.uid == o_.observe) {
      CondObservation ob;
      ob.occurrence = occurrence;
      for (const auto& v : p_.nodes[cond.uid].scope)
        ob.env.emplace_back(v.name, fr.slots[static_cast<size_t>(v.slot)]);
      ob.effective = effective;
      ob.real = real;
      ob.forced = has_force;
      obs_.push_back(std::move(ob));
    }
    return {effective, step};
  }

  // Side-effect-free evaluation of the unforced guard: no events, scratch
  // fuel, errors swallowed.
  std::optional<bool> silent_eval(const Expr& cond, Frame& fr) {
    long long saved_fuel = fuel_;
    NodeUid saved_unit = cur_unit_;
    int saved_owner = owner_step_;
    int saved_frame = next_frame_;
    TraceMode saved_mode = o_.trace;
    NodeUid saved_obs = o_.observe;
    const OverrideSchedule* saved_ov = o_.overrides;
    size_t saved_events = events_.size();
    auto saved_occ = occ_;
    auto& mut = const_cast<ExecOptions&>(o_);
    mut.trace = TraceMode::None;
    mut.observe = -1;
    mut.overrides = nullptr;
    fuel_ = 10000;
    std::optional<bool> out;
    try {
      out = eval(cond, fr, 0).as_bool();
    } catch (RtSignal&) {
      out = std::nullopt;
    }
    fuel_ = saved_fuel;
    cur_unit_ = saved_unit;
    owner_step_ = saved_owner;
    next_frame_ = saved_frame;
    mut.trace = saved_mode;
    mut.observe = saved_obs;
    mut.overrides = saved_ov;
    events_.resize(saved_events);
    occ_ = std::move(saved_occ);
    return out;
  }

  static long long wrap_add(long long a, long long b) {
    return static_cast<long long>(static_cast<unsigned long long>(a) +
                                  static_cast<unsigned long long>(b));
  }
  static long long wrap_sub(long long a, long long b) {
    return static_cast<long long>(static_cast<unsigned long long>(a) -
                                  static_cast<unsigned long long>(b));
  }
  static long long wrap_mul(long long a, long long b) {
    return static_cast<long long>(static_cast<unsigned long long>(a) *
                                  static_cast<unsigned long long>(b));
  }
  static long long wrap_neg(long long a) {
    return static_cast<long long>(0ULL - static_cast<unsigned long long>(a));
  }

  Value eval(const Expr& e, Frame& fr, int depth) {
    switch (e.kind) {
      case ExprKind::IntLit:
        return Value::of_int(e.int_val);
      case ExprKind::BoolLit:
        return Value::of_bool(e.bool_val);
      case ExprKind::Var:
        return fr.slots[static_cast<size_t>(e.slot)];
      case ExprKind::ArrayLit: {
        std::vector<long long> a;
        a.reserve(e.args.size());
        for (const auto& el : e.args) a.push_back(eval(el, fr, depth).as_int());
        return Value::of_array(std::move(a));
      }
      case ExprKind::Index: {
        long long i = eval(e.args[0], fr, depth).as_int();
        const auto& arr = fr.slots[static_cast<size_t>(e.slot)].as_array();
        if (i < 0 || i >= static_cast<long long>(arr.size()))
          raise(ErrKind::IndexOutOfBounds,
                "index " + std::to_string(i) + " out of bounds for " + e.name);
        return Value::of_int(arr[static_cast<size_t>(i)]);
      }
      case ExprKind::Len:
        return Value::of_int(
            static_cast<long long>(eval(e.args[0], fr, depth).as_array().size()));
      case ExprKind::Call: {
        const FunctionDef* callee = p_.find_function(e.name);
        std::vector<Value> args;
        args.reserve(e.args.size());
        for (const auto& a : e.args) args.push_back(eval(a, fr, depth));
        // The callee's top-level events are governed by the unit whose
        // expression contains this call.
        int saved_owner = owner_step_;
        Value v = exec_call(*callee, args, saved_owner, depth + 1);
        owner_step_ = saved_owner;
        return v;
      }
      case ExprKind::Unary: {
        Value v = eval(e.args[0], fr, depth);
        if (e.op_code == kOpNot) return Value::of_bool(!v.as_bool());
        return Value::of_int(wrap_neg(v.as_int()));
      }
      case ExprKind::Binary: {
        if (e.op_code == kOpAnd) {
          if (!eval(e.args[0], fr, depth).as_bool()) return Value::of_bool(false);
          return Value::of_bool(eval(e.args[1], fr, depth).as_bool());
        }
        if (e.op_code == kOpOr) {
          if (eval(e.args[0], fr, depth).as_bool()) return Value::of_bool(true);
          return Value::of_bool(eval(e.args[1], fr, depth).as_bool());
        }
        Value lv = eval(e.args[0], fr, depth);
        Value rv = eval(e.args[1], fr, depth);
        if (e.op_code == kOpEq) return Value::of_bool(lv == rv);
        if (e.op_code == kOpNe) return Value::of_bool(!(lv == rv));
        long long a = lv.as_int();
        long long b = rv.as_int();
        switch (e.op_code) {
          case kOpLt: return Value::of_bool(a < b);
          case kOpLe: return Value::of_bool(a <= b);
          case kOpGt: return Value::of_bool(a > b);
          case kOpGe: return Value::of_bool(a >= b);
          case kOpAdd: return Value::of_int(wrap_add(a, b));
          case kOpSub: return Value::of_int(wrap_sub(a, b));
          case kOpMul: return Value::of_int(wrap_mul(a, b));
          default: break;
        }
        if (b == 0) raise(ErrKind::DivByZero, "division by zero");
        if (b == -1) {
          // INT64_MIN / -1 wraps; avoids the hardware trap.
          if (e.op_code == kOpDiv) return Value::of_int(wrap_neg(a));
          return Value::of_int(0);
        }
        if (e.op_code == kOpDiv) return Value::of_int(a / b);
        return Value::of_int(a % b);
      }
    }
    raise(ErrKind::Abort, "bad expression");
  }

  const Program& p_;
  const ExecOptions& o_;
  long long fuel_ = 0;
  NodeUid cur_unit_ = -1;
  int owner_step_ = -1;
  int next_frame_ = 0;
  std::vector<TraceEvent> events_;
  std::vector<CondObservation> obs_;
  std::vector<char> covered_;
  std::vector<int> occ_;
};

}  // namespace detail

inline ExecResult execute_opts(const Program& p, const CallSpec& call,
                               const ExecOptions& opts) {
  detail::Interp in(p, opts);
  return in.run(call);
}

inline ExecResult execute(const Program& p, const CallSpec& call,
                          long long fuel = kDefaultFuel) {
  ExecOptions o;
  o.fuel = fuel;
  return execute_opts(p, call, o);
}

inline ExecResult execute_with_overrides(const Program& p, const CallSpec& call,
                                         const OverrideSchedule& schedule,
                                         long long fuel = kDefaultFuel) {
  ExecOptions o;
  o.fuel = fuel;
  o.overrides = &schedule;
  return execute_opts(p, call, o);
}

// Structural trace validation: every event names an executable unit of the
// program, branch events sit on guards, defs/uses stay within the node's
// scope, governors precede their governed events, and runtime errors point at
// the last executed event.
inline bool validate_trace(const Program& p, const ExecTrace& t,
                           std::string* why = nullptr) {
  auto fail = [&](const std::string& m) {
    if (why) *why = m;
    return false;
  };
  for (const auto& e : t.events) {
    if (e.node < 0 || e.node >= static_cast<NodeUid>(p.nodes.size()))
      return fail("event names unknown node");
    const NodeInfo& n = p.nodes[e.node];
    if (!n.is_unit) return fail("event on non-executable node");
    if ((e.kind == EventKind::Branch) != e.branch_outcome.has_value())
      return fail("branch_outcome must be present iff kind is branch");
    if (e.kind == EventKind::Branch && !n.is_guard)
      return fail("branch event on non-guard node");
    if (e.gov >= e.step) return fail("governor does not precede event");
    for (const auto& d : n.defs) {
      // A let introduces its own variable at this node.
      bool ok = n.is_stmt && n.stmt_kind == StmtKind::Let;
      for (const auto& v : n.scope) ok = ok || v.name == d;
      if (!ok) return fail("def of out-of-scope variable " + d);
    }
    for (const auto& u : n.uses) {
      bool ok = false;
      for (const auto& v : n.scope) ok = ok || v.name == u;
      if (!ok) return fail("use of out-of-scope variable " + u);
    }
  }
  if (t.term.kind == Termination::Kind::RuntimeError) {
    if (t.events.empty()) return fail("error with empty trace");
    if (t.events.back().node != t.term.error_node)
      return fail("error node is not the last executed event");
  }
  return true;
}

}  // namespace mlrepair::minilang
