#pragma once

// Process terms for the synchronous, asynchronous and extended session
// calculi: parsing (with bound-name freshening and guardedness checks),
// printing, capture-avoiding substitution, free-name functions, structural
// congruence normal forms, and the gamma/delta/phi channel analysis used by
// the orphan-message error rule.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "sesst/type.hpp"

namespace sesst {

enum class IdKind { Variable, Linear, Shared };

struct Id {
  std::string name;
  IdKind kind = IdKind::Linear;
};

struct Value {
  enum class Kind { True, False, Int, SharedChan };
  Kind kind = Kind::True;
  long long num = 0;       // Int
  std::string chan;        // SharedChan
};

inline Value v_true() { return {Value::Kind::True, 0, ""}; }
inline Value v_false() { return {Value::Kind::False, 0, ""}; }
inline Value v_int(long long n) { return {Value::Kind::Int, n, ""}; }
inline Value v_shared(std::string s) { return {Value::Kind::SharedChan, 0, std::move(s)}; }

// Identifier-or-value: subjects, objects, message contents, invoke arguments.
using UVal = std::variant<Id, Value>;

// A shared channel may sit in a slot either as an Id of Shared kind or as a
// SharedChan value produced by substitution; the two are interchangeable.
inline std::optional<std::string> shared_chan_of(const UVal& u) {
  if (std::holds_alternative<Id>(u)) {
    const Id& id = std::get<Id>(u);
    if (id.kind == IdKind::Shared) return id.name;
    return std::nullopt;
  }
  const Value& v = std::get<Value>(u);
  if (v.kind == Value::Kind::SharedChan) return v.chan;
  return std::nullopt;
}

inline std::optional<std::string> linear_chan_of(const UVal& u) {
  if (std::holds_alternative<Id>(u)) {
    const Id& id = std::get<Id>(u);
    if (id.kind == IdKind::Linear) return id.name;
  }
  return std::nullopt;
}

// true/false/integers: values that can never stand for a channel
inline bool is_base_value(const UVal& u) {
  return std::holds_alternative<Value>(u) &&
         std::get<Value>(u).kind != Value::Kind::SharedChan;
}

struct Expr;
using ExprRef = std::shared_ptr<const Expr>;

struct Expr {
  enum class Kind { Val, Var, Not, Succ, Neg, Gt, Chan };
  Kind kind = Kind::Val;
  Value val;         // Val
  std::string var;   // Var
  Id chan;           // Chan: a channel landed in expression position (stuck)
  ExprRef a, b;
};

inline ExprRef e_val(Value v) {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::Val;
  e->val = std::move(v);
  return e;
}
inline ExprRef e_var(std::string x) {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::Var;
  e->var = std::move(x);
  return e;
}
inline ExprRef e_chan(Id id) {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::Chan;
  e->chan = std::move(id);
  return e;
}
inline ExprRef e_un(Expr::Kind k, ExprRef a) {
  auto e = std::make_shared<Expr>();
  e->kind = k;
  e->a = std::move(a);
  return e;
}
inline ExprRef e_gt(ExprRef a, ExprRef b) {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::Gt;
  e->a = std::move(a);
  e->b = std::move(b);
  return e;
}

struct Message {
  std::string label;
  UVal content;
};

struct Process;
using ProcRef = std::shared_ptr<const Process>;

enum class ProcKind {
  Nil, Invoke, Input, OutputChan, OutputExpr, Par, Choice, Def,
  NewLinear, NewShared, Accept, Request, Cond, Queue, Error
};

struct InputBranch {
  std::string label;
  std::string bound;
  ProcRef body;
};

using InvArg = std::variant<UVal, ExprRef>;

struct Process {
  ProcKind kind = ProcKind::Nil;
  // Invoke
  std::string invoke_name;
  std::vector<InvArg> args;
  // Input / Accept / Request / outputs
  UVal subject;
  std::vector<InputBranch> branches;  // Input
  std::string label;                  // outputs
  UVal object;                        // OutputChan
  ExprRef expr;                       // OutputExpr / Cond
  std::string bound;                  // Accept / Request
  // binary structure
  ProcRef left, right;                // Par, Choice; Cond then/else; prefix cont in `left`
  // Def
  std::string def_name;
  std::vector<std::string> params;
  ProcRef def_body;
  // NewLinear / NewShared
  std::string nu_a, nu_b;
  // Queue
  std::string q_from, q_to;
  std::vector<Message> items;
};

// Constructors --------------------------------------------------------------

inline ProcRef p_nil() {
  static const ProcRef n = std::make_shared<Process>();
  return n;
}
inline ProcRef p_error() {
  auto p = std::make_shared<Process>();
  p->kind = ProcKind::Error;
  return p;
}
inline ProcRef p_invoke(std::string name, std::vector<InvArg> args) {
  auto p = std::make_shared<Process>();
  p->kind = ProcKind::Invoke;
  p->invoke_name = std::move(name);
  p->args = std::move(args);
  return p;
}
inline ProcRef p_input(UVal subject, std::vector<InputBranch> branches) {
  if (branches.empty()) throw std::invalid_argument("input needs at least one branch");
  std::set<std::string> ls;
  for (const auto& b : branches)
    if (!ls.insert(b.label).second)
      throw std::invalid_argument("duplicate input label '" + b.label + "'");
  auto p = std::make_shared<Process>();
  p->kind = ProcKind::Input;
  p->subject = std::move(subject);
  p->branches = std::move(branches);
  return p;
}
inline ProcRef p_out_chan(UVal subject, std::string label, UVal object, ProcRef cont) {
  auto p = std::make_shared<Process>();
  p->kind = ProcKind::OutputChan;
  p->subject = std::move(subject);
  p->label = std::move(label);
  p->object = std::move(object);
  p->left = std::move(cont);
  return p;
}
inline ProcRef p_out_expr(UVal subject, std::string label, ExprRef e, ProcRef cont) {
  auto p = std::make_shared<Process>();
  p->kind = ProcKind::OutputExpr;
  p->subject = std::move(subject);
  p->label = std::move(label);
  p->expr = std::move(e);
  p->left = std::move(cont);
  return p;
}
inline ProcRef p_par(ProcRef a, ProcRef b) {
  auto p = std::make_shared<Process>();
  p->kind = ProcKind::Par;
  p->left = std::move(a);
  p->right = std::move(b);
  return p;
}
inline ProcRef p_choice(ProcRef a, ProcRef b) {
  auto p = std::make_shared<Process>();
  p->kind = ProcKind::Choice;
  p->left = std::move(a);
  p->right = std::move(b);
  return p;
}
inline ProcRef p_def(std::string name, std::vector<std::string> params, ProcRef body,
                     ProcRef scope) {
  auto p = std::make_shared<Process>();
  p->kind = ProcKind::Def;
  p->def_name = std::move(name);
  p->params = std::move(params);
  p->def_body = std::move(body);
  p->left = std::move(scope);
  return p;
}
inline ProcRef p_new(std::string a, std::string b, ProcRef scope) {
  auto p = std::make_shared<Process>();
  p->kind = ProcKind::NewLinear;
  p->nu_a = std::move(a);
  p->nu_b = std::move(b);
  p->left = std::move(scope);
  return p;
}
inline ProcRef p_news(std::string s, ProcRef scope) {
  auto p = std::make_shared<Process>();
  p->kind = ProcKind::NewShared;
  p->nu_a = std::move(s);
  p->left = std::move(scope);
  return p;
}
inline ProcRef p_accept(UVal subject, std::string bound, ProcRef body) {
  auto p = std::make_shared<Process>();
  p->kind = ProcKind::Accept;
  p->subject = std::move(subject);
  p->bound = std::move(bound);
  p->left = std::move(body);
  return p;
}
inline ProcRef p_request(UVal subject, std::string bound, ProcRef body) {
  auto p = std::make_shared<Process>();
  p->kind = ProcKind::Request;
  p->subject = std::move(subject);
  p->bound = std::move(bound);
  p->left = std::move(body);
  return p;
}
inline ProcRef p_cond(ExprRef e, ProcRef then_p, ProcRef else_p) {
  auto p = std::make_shared<Process>();
  p->kind = ProcKind::Cond;
  p->expr = std::move(e);
  p->left = std::move(then_p);
  p->right = std::move(else_p);
  return p;
}
inline ProcRef p_queue(std::string from, std::string to, std::vector<Message> items) {
  auto p = std::make_shared<Process>();
  p->kind = ProcKind::Queue;
  p->q_from = std::move(from);
  p->q_to = std::move(to);
  p->items = std::move(items);
  return p;
}

// Printing ------------------------------------------------------------------

namespace detail {

struct PrintCtx {
  const std::map<std::string, std::string>* rename = nullptr;  // channel/def names
  bool canonical = false;
  int local_counter = 0;
  std::map<std::string, std::string> locals;  // bound variables, canonical mode

  std::string name(const std::string& n) const {
    auto it = locals.find(n);
    if (it != locals.end()) return it->second;
    if (rename) {
      auto r = rename->find(n);
      if (r != rename->end()) return r->second;
    }
    return n;
  }
};

inline std::string print_value(const Value& v, const PrintCtx& c) {
  switch (v.kind) {
    case Value::Kind::True: return "true";
    case Value::Kind::False: return "false";
    case Value::Kind::Int: return std::to_string(v.num);
    case Value::Kind::SharedChan: return c.name(v.chan);
  }
  return "?";
}

inline std::string print_uval(const UVal& u, const PrintCtx& c) {
  if (std::holds_alternative<Id>(u)) return c.name(std::get<Id>(u).name);
  return print_value(std::get<Value>(u), c);
}

inline std::string print_expr(const ExprRef& e, const PrintCtx& c, int prec = 0) {
  switch (e->kind) {
    case Expr::Kind::Val: return print_value(e->val, c);
    case Expr::Kind::Var: return c.name(e->var);
    case Expr::Kind::Chan: return c.name(e->chan.name);
    case Expr::Kind::Not: return "not " + print_expr(e->a, c, 2);
    case Expr::Kind::Succ: return "succ " + print_expr(e->a, c, 2);
    case Expr::Kind::Neg: return "neg " + print_expr(e->a, c, 2);
    case Expr::Kind::Gt: {
      std::string s = print_expr(e->a, c, 2) + " > " + print_expr(e->b, c, 2);
      return prec >= 2 ? "(" + s + ")" : s;
    }
  }
  return "?";
}

// levels: 0 primary/prefix, 1 par, 2 choice
inline int proc_level(const Process& p) {
  if (p.kind == ProcKind::Par) return 1;
  if (p.kind == ProcKind::Choice) return 2;
  return 0;
}

inline void print_proc(const ProcRef& p, PrintCtx& c, int maxlevel, std::ostream& os);

inline void print_sub(const ProcRef& p, PrintCtx& c, int maxlevel, std::ostream& os) {
  if (proc_level(*p) > maxlevel) {
    os << "(";
    print_proc(p, c, 2, os);
    os << ")";
  } else {
    print_proc(p, c, maxlevel, os);
  }
}

inline std::string bind_local(PrintCtx& c, const std::string& n) {
  if (!c.canonical) return n;
  std::string fresh = "%" + std::to_string(c.local_counter++);
  c.locals[n] = fresh;
  return fresh;
}

inline void print_proc(const ProcRef& p, PrintCtx& c, int maxlevel, std::ostream& os) {
  switch (p->kind) {
    case ProcKind::Nil:
      os << "0";
      return;
    case ProcKind::Error:
      os << "error";
      return;
    case ProcKind::Invoke: {
      os << c.name(p->invoke_name) << "<";
      bool first = true;
      for (const auto& a : p->args) {
        if (!first) os << ", ";
        first = false;
        if (std::holds_alternative<UVal>(a))
          os << print_uval(std::get<UVal>(a), c);
        else
          os << print_expr(std::get<ExprRef>(a), c);
      }
      os << ">";
      return;
    }
    case ProcKind::Input: {
      os << print_uval(p->subject, c) << "?";
      if (p->branches.size() == 1) {
        auto saved = c.locals;
        const auto& b = p->branches[0];
        std::string x = bind_local(c, b.bound);
        os << b.label << "(" << x << ").";
        print_sub(b.body, c, 0, os);
        c.locals = saved;
        return;
      }
      os << "{";
      bool first = true;
      for (const auto& b : p->branches) {
        if (!first) os << ", ";
        first = false;
        auto saved = c.locals;
        std::string x = bind_local(c, b.bound);
        os << b.label << "(" << x << ").";
        print_sub(b.body, c, 0, os);
        c.locals = saved;
      }
      os << "}";
      return;
    }
    case ProcKind::OutputChan:
      os << print_uval(p->subject, c) << "!" << p->label << "<" << print_uval(p->object, c)
         << ">.";
      print_sub(p->left, c, 0, os);
      return;
    case ProcKind::OutputExpr:
      os << print_uval(p->subject, c) << "!" << p->label << "[" << print_expr(p->expr, c)
         << "].";
      print_sub(p->left, c, 0, os);
      return;
    case ProcKind::Par:
      print_sub(p->left, c, 1, os);
      os << " | ";
      print_sub(p->right, c, 1, os);
      return;
    case ProcKind::Choice:
      print_sub(p->left, c, 2 - 1, os);  // right-assoc display
      os << " (+) ";
      print_sub(p->right, c, 2, os);
      return;
    case ProcKind::Def: {
      auto saved = c.locals;
      std::string dn = c.canonical ? bind_local(c, p->def_name) : c.name(p->def_name);
      auto with_name = c.locals;
      os << "def " << dn << "(";
      std::vector<std::string> ps;
      for (const auto& prm : p->params) ps.push_back(bind_local(c, prm));
      for (std::size_t i = 0; i < ps.size(); ++i) os << (i ? ", " : "") << ps[i];
      os << ") = ";
      print_proc(p->def_body, c, 2, os);
      c.locals = with_name;  // params scope only over the body
      os << " in ";
      print_proc(p->left, c, 2, os);
      c.locals = saved;
      return;
    }
    case ProcKind::NewLinear: {
      auto saved = c.locals;
      std::string a = bind_local(c, p->nu_a);
      std::string b = bind_local(c, p->nu_b);
      os << "(new " << a << " " << b << ")";
      print_sub(p->left, c, 0, os);
      c.locals = saved;
      return;
    }
    case ProcKind::NewShared: {
      auto saved = c.locals;
      std::string s = bind_local(c, p->nu_a);
      os << "(news " << s << ")";
      print_sub(p->left, c, 0, os);
      c.locals = saved;
      return;
    }
    case ProcKind::Accept:
    case ProcKind::Request: {
      auto saved = c.locals;
      os << (p->kind == ProcKind::Accept ? "accept " : "request ")
         << print_uval(p->subject, c) << "(" << bind_local(c, p->bound) << ").";
      print_sub(p->left, c, 0, os);
      c.locals = saved;
      return;
    }
    case ProcKind::Cond:
      os << "if " << print_expr(p->expr, c) << " then ";
      print_sub(p->left, c, 0, os);
      os << " else ";
      print_sub(p->right, c, 0, os);
      return;
    case ProcKind::Queue: {
      os << "queue " << c.name(p->q_from) << " " << c.name(p->q_to) << " [";
      bool first = true;
      for (const auto& m : p->items) {
        if (!first) os << ", ";
        first = false;
        os << m.label << "<" << print_uval(m.content, c) << ">";
      }
      os << "]";
      return;
    }
  }
}

}  // namespace detail

inline std::string print_process(const ProcRef& p) {
  std::ostringstream os;
  detail::PrintCtx c;
  detail::print_proc(p, c, 2, os);
  return os.str();
}

inline std::string print_process_renamed(const ProcRef& p,
                                         const std::map<std::string, std::string>& rename,
                                         bool canonical_locals) {
  std::ostringstream os;
  detail::PrintCtx c;
  c.rename = &rename;
  c.canonical = canonical_locals;
  detail::print_proc(p, c, 2, os);
  return os.str();
}

inline std::string print_value(const Value& v) {
  detail::PrintCtx c;
  return detail::print_value(v, c);
}
inline std::string print_uval(const UVal& u) {
  detail::PrintCtx c;
  return detail::print_uval(u, c);
}
inline std::string print_expr(const ExprRef& e) {
  detail::PrintCtx c;
  return detail::print_expr(e, c);
}

// Free names ----------------------------------------------------------------

namespace detail {

inline void fc_value(const Value& v, std::set<std::string>& out) {
  if (v.kind == Value::Kind::SharedChan) out.insert(v.chan);
}
inline void fc_uval(const UVal& u, std::set<std::string>& out) {
  if (std::holds_alternative<Id>(u)) {
    const Id& id = std::get<Id>(u);
    if (id.kind != IdKind::Variable) out.insert(id.name);
  } else {
    fc_value(std::get<Value>(u), out);
  }
}
inline void fc_expr(const ExprRef& e, std::set<std::string>& out) {
  switch (e->kind) {
    case Expr::Kind::Val: fc_value(e->val, out); return;
    case Expr::Kind::Var: return;
    case Expr::Kind::Chan: out.insert(e->chan.name); return;
    case Expr::Kind::Gt:
      fc_expr(e->a, out);
      fc_expr(e->b, out);
      return;
    default:
      fc_expr(e->a, out);
      return;
  }
}

inline void fc_rec(const ProcRef& p, std::set<std::string>& out) {
  switch (p->kind) {
    case ProcKind::Nil:
    case ProcKind::Error:
      return;
    case ProcKind::Invoke:
      for (const auto& a : p->args) {
        if (std::holds_alternative<UVal>(a))
          fc_uval(std::get<UVal>(a), out);
        else
          fc_expr(std::get<ExprRef>(a), out);
      }
      return;
    case ProcKind::Input:
      fc_uval(p->subject, out);
      for (const auto& b : p->branches) fc_rec(b.body, out);
      return;
    case ProcKind::OutputChan:
      fc_uval(p->subject, out);
      fc_uval(p->object, out);
      fc_rec(p->left, out);
      return;
    case ProcKind::OutputExpr:
      fc_uval(p->subject, out);
      fc_expr(p->expr, out);
      fc_rec(p->left, out);
      return;
    case ProcKind::Par:
    case ProcKind::Choice:
      fc_rec(p->left, out);
      fc_rec(p->right, out);
      return;
    case ProcKind::Def:
      fc_rec(p->def_body, out);
      fc_rec(p->left, out);
      return;
    case ProcKind::NewLinear: {
      std::set<std::string> inner;
      fc_rec(p->left, inner);
      inner.erase(p->nu_a);
      inner.erase(p->nu_b);
      out.insert(inner.begin(), inner.end());
      return;
    }
    case ProcKind::NewShared: {
      std::set<std::string> inner;
      fc_rec(p->left, inner);
      inner.erase(p->nu_a);
      out.insert(inner.begin(), inner.end());
      return;
    }
    case ProcKind::Accept:
    case ProcKind::Request:
      fc_uval(p->subject, out);
      fc_rec(p->left, out);
      return;
    case ProcKind::Cond:
      fc_expr(p->expr, out);
      fc_rec(p->left, out);
      fc_rec(p->right, out);
      return;
    case ProcKind::Queue:
      out.insert(p->q_from);
      out.insert(p->q_to);
      for (const auto& m : p->items) fc_uval(m.content, out);
      return;
  }
}

}  // namespace detail

inline std::set<std::string> free_channels(const ProcRef& p) {
  std::set<std::string> out;
  detail::fc_rec(p, out);
  return out;
}

inline void fpv_rec(const ProcRef& p, std::set<std::string>& bound, std::set<std::string>& out) {
  switch (p->kind) {
    case ProcKind::Invoke:
      if (!bound.count(p->invoke_name)) out.insert(p->invoke_name);
      return;
    case ProcKind::Input:
      for (const auto& b : p->branches) fpv_rec(b.body, bound, out);
      return;
    case ProcKind::Def: {
      bool fresh = bound.insert(p->def_name).second;
      fpv_rec(p->def_body, bound, out);
      fpv_rec(p->left, bound, out);
      if (fresh) bound.erase(p->def_name);
      return;
    }
    case ProcKind::Par:
    case ProcKind::Choice:
    case ProcKind::Cond:
      fpv_rec(p->left, bound, out);
      fpv_rec(p->right, bound, out);
      return;
    case ProcKind::OutputChan:
    case ProcKind::OutputExpr:
    case ProcKind::NewLinear:
    case ProcKind::NewShared:
    case ProcKind::Accept:
    case ProcKind::Request:
      fpv_rec(p->left, bound, out);
      return;
    default:
      return;
  }
}

inline std::set<std::string> free_process_vars(const ProcRef& p) {
  std::set<std::string> bound, out;
  fpv_rec(p, bound, out);
  return out;
}

// Free subject channels, page "sn" equations: outputs/inputs contribute
// fc(subject); definitions pass through; restrictions remove bound names.
inline void sc_rec(const ProcRef& p, std::set<std::string>& out) {
  switch (p->kind) {
    case ProcKind::Nil:
    case ProcKind::Error:
    case ProcKind::Invoke:
    case ProcKind::Queue:
      return;
    case ProcKind::Input:
      detail::fc_uval(p->subject, out);
      for (const auto& b : p->branches) sc_rec(b.body, out);
      return;
    case ProcKind::OutputChan:
    case ProcKind::OutputExpr:
      detail::fc_uval(p->subject, out);
      sc_rec(p->left, out);
      return;
    case ProcKind::Par:
    case ProcKind::Choice:
    case ProcKind::Cond:
      sc_rec(p->left, out);
      sc_rec(p->right, out);
      return;
    case ProcKind::Def:
      sc_rec(p->left, out);
      return;
    case ProcKind::NewLinear: {
      std::set<std::string> inner;
      sc_rec(p->left, inner);
      inner.erase(p->nu_a);
      inner.erase(p->nu_b);
      out.insert(inner.begin(), inner.end());
      return;
    }
    case ProcKind::NewShared: {
      std::set<std::string> inner;
      sc_rec(p->left, inner);
      inner.erase(p->nu_a);
      out.insert(inner.begin(), inner.end());
      return;
    }
    case ProcKind::Accept:
    case ProcKind::Request:
      sc_rec(p->left, out);
      return;
  }
}

inline std::set<std::string> subject_channels(const ProcRef& p) {
  std::set<std::string> out;
  sc_rec(p, out);
  return out;
}

// Substitution ---------------------------------------------------------------

using Subst = std::map<std::string, UVal>;

namespace detail {

inline std::set<std::string> subst_names(const Subst& s) {
  std::set<std::string> out;
  for (const auto& [k, v] : s) {
    (void)k;
    if (std::holds_alternative<Id>(v))
      out.insert(std::get<Id>(v).name);
    else if (std::get<Value>(v).kind == Value::Kind::SharedChan)
      out.insert(std::get<Value>(v).chan);
  }
  return out;
}

inline UVal subst_uval(const UVal& u, const Subst& s) {
  if (std::holds_alternative<Id>(u)) {
    const Id& id = std::get<Id>(u);
    auto it = s.find(id.name);
    if (it != s.end()) return it->second;
  }
  return u;
}

inline ExprRef subst_expr(const ExprRef& e, const Subst& s) {
  switch (e->kind) {
    case Expr::Kind::Val:
    case Expr::Kind::Chan:
      return e;
    case Expr::Kind::Var: {
      auto it = s.find(e->var);
      if (it == s.end()) return e;
      if (std::holds_alternative<Value>(it->second)) return e_val(std::get<Value>(it->second));
      const Id& id = std::get<Id>(it->second);
      if (id.kind == IdKind::Shared) return e_val(v_shared(id.name));
      if (id.kind == IdKind::Variable) return e_var(id.name);
      return e_chan(id);
    }
    case Expr::Kind::Gt:
      return e_gt(subst_expr(e->a, s), subst_expr(e->b, s));
    default:
      return e_un(e->kind, subst_expr(e->a, s));
  }
}

inline ProcRef subst_rec(const ProcRef& p, Subst s, std::set<std::string>& avoid);

inline std::string freshen_binder(const std::string& base, std::set<std::string>& avoid) {
  if (!avoid.count(base)) {
    avoid.insert(base);
    return base;
  }
  for (int i = 1;; ++i) {
    std::string cand = base + "_" + std::to_string(i);
    if (!avoid.count(cand)) {
      avoid.insert(cand);
      return cand;
    }
  }
}

// Rename a binder occurrence if it would capture a substitution target.
inline std::string maybe_rename(const std::string& binder, Subst& s,
                                const std::set<std::string>& targets,
                                std::set<std::string>& avoid, IdKind kind) {
  s.erase(binder);
  if (!targets.count(binder)) return binder;
  std::string fresh = freshen_binder(binder, avoid);
  s[binder] = UVal(Id{fresh, kind});
  return fresh;
}

inline ProcRef subst_rec(const ProcRef& p, Subst s, std::set<std::string>& avoid) {
  if (s.empty()) return p;
  std::set<std::string> targets = subst_names(s);
  switch (p->kind) {
    case ProcKind::Nil:
    case ProcKind::Error:
      return p;
    case ProcKind::Invoke: {
      std::vector<InvArg> args;
      for (const auto& a : p->args) {
        if (std::holds_alternative<UVal>(a))
          args.emplace_back(subst_uval(std::get<UVal>(a), s));
        else
          args.emplace_back(subst_expr(std::get<ExprRef>(a), s));
      }
      return p_invoke(p->invoke_name, std::move(args));
    }
    case ProcKind::Input: {
      UVal subj = subst_uval(p->subject, s);
      std::vector<InputBranch> bs;
      for (const auto& b : p->branches) {
        Subst s2 = s;
        std::string x = maybe_rename(b.bound, s2, targets, avoid, IdKind::Variable);
        bs.push_back({b.label, x, subst_rec(b.body, s2, avoid)});
      }
      return p_input(std::move(subj), std::move(bs));
    }
    case ProcKind::OutputChan:
      return p_out_chan(subst_uval(p->subject, s), p->label, subst_uval(p->object, s),
                        subst_rec(p->left, s, avoid));
    case ProcKind::OutputExpr:
      return p_out_expr(subst_uval(p->subject, s), p->label, subst_expr(p->expr, s),
                        subst_rec(p->left, s, avoid));
    case ProcKind::Par:
      return p_par(subst_rec(p->left, s, avoid), subst_rec(p->right, s, avoid));
    case ProcKind::Choice:
      return p_choice(subst_rec(p->left, s, avoid), subst_rec(p->right, s, avoid));
    case ProcKind::Def: {
      Subst body_s = s;
      std::vector<std::string> params = p->params;
      for (auto& prm : params) {
        std::string renamed = maybe_rename(prm, body_s, targets, avoid, IdKind::Variable);
        prm = renamed;
      }
      return p_def(p->def_name, std::move(params), subst_rec(p->def_body, body_s, avoid),
                   subst_rec(p->left, s, avoid));
    }
    case ProcKind::NewLinear: {
      Subst s2 = s;
      std::string a = maybe_rename(p->nu_a, s2, targets, avoid, IdKind::Linear);
      std::string b = maybe_rename(p->nu_b, s2, targets, avoid, IdKind::Linear);
      return p_new(a, b, subst_rec(p->left, s2, avoid));
    }
    case ProcKind::NewShared: {
      Subst s2 = s;
      std::string a = maybe_rename(p->nu_a, s2, targets, avoid, IdKind::Shared);
      return p_news(a, subst_rec(p->left, s2, avoid));
    }
    case ProcKind::Accept:
    case ProcKind::Request: {
      Subst s2 = s;
      std::string x = maybe_rename(p->bound, s2, targets, avoid, IdKind::Variable);
      UVal subj = subst_uval(p->subject, s);
      ProcRef body = subst_rec(p->left, s2, avoid);
      return p->kind == ProcKind::Accept ? p_accept(std::move(subj), x, std::move(body))
                                         : p_request(std::move(subj), x, std::move(body));
    }
    case ProcKind::Cond:
      return p_cond(subst_expr(p->expr, s), subst_rec(p->left, s, avoid),
                    subst_rec(p->right, s, avoid));
    case ProcKind::Queue: {
      std::vector<Message> items;
      for (const auto& m : p->items) items.push_back({m.label, subst_uval(m.content, s)});
      std::string from = p->q_from, to = p->q_to;
      auto remap = [&](std::string& n) {
        auto it = s.find(n);
        if (it != s.end() && std::holds_alternative<Id>(it->second))
          n = std::get<Id>(it->second).name;
      };
      remap(from);
      remap(to);
      return p_queue(from, to, std::move(items));
    }
  }
  return p;
}

}  // namespace detail

inline ProcRef substitute(const ProcRef& p, const Subst& s) {
  std::set<std::string> avoid = free_channels(p);
  for (const auto& n : detail::subst_names(s)) avoid.insert(n);
  return detail::subst_rec(p, s, avoid);
}

// Parser ---------------------------------------------------------------------

namespace detail {

class ProcParser {
public:
  explicit ProcParser(std::string_view src) : src_(src) {}

  ProcRef parse() {
    ProcRef p = parse_choice();
    skip_ws();
    if (pos_ != src_.size()) fail("trailing input after process");
    return p;
  }

private:
  [[noreturn]] void fail(const std::string& msg) { throw ParseError(msg, pos_); }

  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool peek_word(const char* w) {
    skip_ws();
    std::size_t n = std::string_view(w).size();
    if (src_.compare(pos_, n, w) != 0) return false;
    std::size_t end = pos_ + n;
    if (end < src_.size() && ident_char(src_[end])) return false;
    return true;
  }

  bool eat_word(const char* w) {
    if (!peek_word(w)) return false;
    pos_ += std::string_view(w).size();
    return true;
  }

  bool eat(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!eat(c)) fail(std::string("expected '") + c + "'");
  }

  static bool ident_start(char c) {
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
  }
  static bool ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '\'';
  }

  std::optional<std::string> try_ident() {
    skip_ws();
    if (pos_ >= src_.size() || !ident_start(src_[pos_])) return std::nullopt;
    std::size_t start = pos_;
    while (pos_ < src_.size() && ident_char(src_[pos_])) ++pos_;
    return std::string(src_.substr(start, pos_ - start));
  }

  std::string ident() {
    auto id = try_ident();
    if (!id) fail("expected identifier");
    return *id;
  }

  bool peek_choice_op() {
    skip_ws();
    return src_.compare(pos_, 3, "(+)") == 0;
  }

  ProcRef parse_choice() {
    ProcRef left = parse_par();
    if (peek_choice_op()) {
      pos_ += 3;
      return p_choice(left, parse_choice());
    }
    return left;
  }

  ProcRef parse_par() {
    ProcRef left = parse_primary();
    skip_ws();
    while (pos_ < src_.size() && src_[pos_] == '|') {
      ++pos_;
      left = p_par(left, parse_primary());
      skip_ws();
    }
    return left;
  }

  ExprRef parse_expr() { return parse_gt(); }

  ExprRef parse_gt() {
    ExprRef a = parse_expr_atom();
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == '>') {
      ++pos_;
      return e_gt(a, parse_expr_atom());
    }
    return a;
  }

  ExprRef parse_expr_atom() {
    skip_ws();
    if (eat_word("not")) return e_un(Expr::Kind::Not, parse_expr_atom());
    if (eat_word("succ")) return e_un(Expr::Kind::Succ, parse_expr_atom());
    if (eat_word("neg")) return e_un(Expr::Kind::Neg, parse_expr_atom());
    if (eat_word("true")) return e_val(v_true());
    if (eat_word("false")) return e_val(v_false());
    if (pos_ < src_.size() && (std::isdigit(static_cast<unsigned char>(src_[pos_])) ||
                               (src_[pos_] == '-' && pos_ + 1 < src_.size() &&
                                std::isdigit(static_cast<unsigned char>(src_[pos_ + 1]))))) {
      std::size_t start = pos_;
      if (src_[pos_] == '-') ++pos_;
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      return e_val(v_int(std::stoll(std::string(src_.substr(start, pos_ - start)))));
    }
    if (eat('(')) {
      ExprRef e = parse_expr();
      expect(')');
      return e;
    }
    return e_var(ident());
  }

  UVal parse_uval() {
    skip_ws();
    if (eat_word("true")) return v_true();
    if (eat_word("false")) return v_false();
    if (pos_ < src_.size() && (std::isdigit(static_cast<unsigned char>(src_[pos_])) ||
                               (src_[pos_] == '-' && pos_ + 1 < src_.size() &&
                                std::isdigit(static_cast<unsigned char>(src_[pos_ + 1]))))) {
      std::size_t start = pos_;
      if (src_[pos_] == '-') ++pos_;
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      return v_int(std::stoll(std::string(src_.substr(start, pos_ - start))));
    }
    return Id{ident(), IdKind::Linear};  // kinds resolved by the freshening pass
  }

  InputBranch parse_input_branch() {
    std::string label = ident();
    expect('(');
    std::string x = ident();
    expect(')');
    expect('.');
    return {label, x, parse_primary()};
  }

  ProcRef parse_primary() {
    skip_ws();
    if (pos_ >= src_.size()) fail("unexpected end of input");

    if (eat('(')) {
      // "(new a b)P", "(news s)P" or a parenthesised process
      if (eat_word("new")) {
        std::string a = ident();
        std::string b = ident();
        expect(')');
        return p_new(a, b, parse_primary());
      }
      if (eat_word("news")) {
        std::string s = ident();
        expect(')');
        return p_news(s, parse_primary());
      }
      ProcRef p = parse_choice();
      expect(')');
      return p;
    }

    if (eat_word("0")) return p_nil();
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == '0') {
      ++pos_;
      return p_nil();
    }
    if (eat_word("error")) return p_error();

    if (eat_word("def")) {
      std::string name = ident();
      expect('(');
      std::vector<std::string> params;
      skip_ws();
      if (pos_ < src_.size() && src_[pos_] != ')') {
        params.push_back(ident());
        while (eat(',')) params.push_back(ident());
      }
      expect(')');
      expect('=');
      ProcRef body = parse_choice();
      if (!eat_word("in")) fail("expected 'in' after definition body");
      return p_def(name, std::move(params), body, parse_choice());
    }

    if (eat_word("accept")) {
      UVal subj = parse_uval();
      expect('(');
      std::string x = ident();
      expect(')');
      expect('.');
      return p_accept(subj, x, parse_primary());
    }
    if (eat_word("request")) {
      UVal subj = parse_uval();
      expect('(');
      std::string x = ident();
      expect(')');
      expect('.');
      return p_request(subj, x, parse_primary());
    }
    if (eat_word("if")) {
      ExprRef e = parse_expr();
      if (!eat_word("then")) fail("expected 'then'");
      ProcRef t = parse_primary();
      if (!eat_word("else")) fail("expected 'else'");
      return p_cond(e, t, parse_primary());
    }
    if (eat_word("queue")) {
      std::string from = ident();
      std::string to = ident();
      expect('[');
      std::vector<Message> items;
      skip_ws();
      if (pos_ < src_.size() && src_[pos_] != ']') {
        do {
          std::string label = ident();
          expect('<');
          UVal content = parse_uval();
          expect('>');
          items.push_back({label, content});
        } while (eat(','));
      }
      expect(']');
      return p_queue(from, to, std::move(items));
    }

    std::string id = ident();
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == '<') {
      ++pos_;
      std::vector<InvArg> args;
      skip_ws();
      if (pos_ < src_.size() && src_[pos_] != '>') {
        args.push_back(parse_inv_arg());
        while (eat(',')) args.push_back(parse_inv_arg());
      }
      expect('>');
      return p_invoke(id, std::move(args));
    }
    if (pos_ < src_.size() && src_[pos_] == '?') {
      ++pos_;
      skip_ws();
      UVal subj = Id{id, IdKind::Linear};
      if (pos_ < src_.size() && src_[pos_] == '{') {
        ++pos_;
        std::vector<InputBranch> bs;
        bs.push_back(parse_input_branch());
        while (eat(',')) bs.push_back(parse_input_branch());
        expect('}');
        return p_input(subj, std::move(bs));
      }
      std::vector<InputBranch> bs;
      bs.push_back(parse_input_branch());
      return p_input(subj, std::move(bs));
    }
    if (pos_ < src_.size() && src_[pos_] == '!') {
      ++pos_;
      std::string label = ident();
      skip_ws();
      if (eat('<')) {
        UVal obj = parse_uval();
        expect('>');
        expect('.');
        return p_out_chan(Id{id, IdKind::Linear}, label, obj, parse_primary());
      }
      expect('[');
      ExprRef e = parse_expr();
      expect(']');
      expect('.');
      return p_out_expr(Id{id, IdKind::Linear}, label, e, parse_primary());
    }
    fail("expected process after identifier '" + id + "'");
  }

  InvArg parse_inv_arg() {
    skip_ws();
    std::size_t save = pos_;
    // A bare identifier (not followed by an operator) is a channel/variable
    // argument; anything else is an expression.
    if (auto id = try_ident()) {
      if (*id != "not" && *id != "succ" && *id != "neg" && *id != "true" && *id != "false") {
        skip_ws();
        if (pos_ >= src_.size() || src_[pos_] == ',' || src_[pos_] == '>')
          return UVal(Id{*id, IdKind::Linear});
      }
      pos_ = save;
    }
    return parse_expr();
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

// Freshening pass: enforce the Barendregt convention (all binders pairwise
// distinct and distinct from free names) and resolve identifier kinds from
// their binders; free identifiers default to linear channels.
struct Freshener {
  std::set<std::string> used;
  int counter = 0;

  std::string fresh(const std::string& base) {
    if (!used.count(base)) {
      used.insert(base);
      return base;
    }
    for (int i = 1;; ++i) {
      std::string cand = base + "_" + std::to_string(i);
      if (!used.count(cand)) {
        used.insert(cand);
        return cand;
      }
    }
  }

  using Env = std::map<std::string, Id>;  // binder name -> freshened Id

  UVal rename_uval(const UVal& u, const Env& env) {
    if (!std::holds_alternative<Id>(u)) return u;
    const Id& id = std::get<Id>(u);
    auto it = env.find(id.name);
    if (it != env.end()) return it->second;
    used.insert(id.name);
    return Id{id.name, IdKind::Linear};
  }

  ExprRef rename_expr(const ExprRef& e, const Env& env) {
    switch (e->kind) {
      case Expr::Kind::Val:
        if (e->val.kind == Value::Kind::SharedChan) used.insert(e->val.chan);
        return e;
      case Expr::Kind::Chan:
        return e;
      case Expr::Kind::Var: {
        auto it = env.find(e->var);
        if (it == env.end()) {
          used.insert(e->var);
          return e;  // free: keep as expression variable
        }
        const Id& id = it->second;
        if (id.kind == IdKind::Shared) return e_val(v_shared(id.name));
        if (id.kind == IdKind::Variable) return e_var(id.name);
        return e_chan(id);
      }
      case Expr::Kind::Gt:
        return e_gt(rename_expr(e->a, env), rename_expr(e->b, env));
      default:
        return e_un(e->kind, rename_expr(e->a, env));
    }
  }

  ProcRef rename(const ProcRef& p, Env env, std::map<std::string, std::string> defs) {
    switch (p->kind) {
      case ProcKind::Nil:
      case ProcKind::Error:
        return p;
      case ProcKind::Invoke: {
        std::vector<InvArg> args;
        for (const auto& a : p->args) {
          if (std::holds_alternative<UVal>(a))
            args.emplace_back(rename_uval(std::get<UVal>(a), env));
          else
            args.emplace_back(rename_expr(std::get<ExprRef>(a), env));
        }
        auto it = defs.find(p->invoke_name);
        return p_invoke(it != defs.end() ? it->second : p->invoke_name, std::move(args));
      }
      case ProcKind::Input: {
        UVal subj = rename_uval(p->subject, env);
        std::vector<InputBranch> bs;
        for (const auto& b : p->branches) {
          Env env2 = env;
          std::string x = fresh(b.bound);
          env2[b.bound] = Id{x, IdKind::Variable};
          bs.push_back({b.label, x, rename(b.body, env2, defs)});
        }
        return p_input(std::move(subj), std::move(bs));
      }
      case ProcKind::OutputChan:
        return p_out_chan(rename_uval(p->subject, env), p->label, rename_uval(p->object, env),
                          rename(p->left, env, defs));
      case ProcKind::OutputExpr:
        return p_out_expr(rename_uval(p->subject, env), p->label, rename_expr(p->expr, env),
                          rename(p->left, env, defs));
      case ProcKind::Par:
        return p_par(rename(p->left, env, defs), rename(p->right, env, defs));
      case ProcKind::Choice:
        return p_choice(rename(p->left, env, defs), rename(p->right, env, defs));
      case ProcKind::Def: {
        std::string dn = fresh(p->def_name);
        defs[p->def_name] = dn;
        Env benv = env;
        std::vector<std::string> params;
        for (const auto& prm : p->params) {
          std::string x = fresh(prm);
          benv[prm] = Id{x, IdKind::Variable};
          params.push_back(x);
        }
        return p_def(dn, std::move(params), rename(p->def_body, benv, defs),
                     rename(p->left, env, defs));
      }
      case ProcKind::NewLinear: {
        Env env2 = env;
        std::string a = fresh(p->nu_a);
        std::string b = fresh(p->nu_b);
        env2[p->nu_a] = Id{a, IdKind::Linear};
        env2[p->nu_b] = Id{b, IdKind::Linear};
        return p_new(a, b, rename(p->left, env2, defs));
      }
      case ProcKind::NewShared: {
        Env env2 = env;
        std::string s = fresh(p->nu_a);
        env2[p->nu_a] = Id{s, IdKind::Shared};
        return p_news(s, rename(p->left, env2, defs));
      }
      case ProcKind::Accept:
      case ProcKind::Request: {
        UVal subj = rename_uval(p->subject, env);
        // a free accept/request subject names a shared channel
        if (std::holds_alternative<Id>(subj) && std::holds_alternative<Id>(p->subject)) {
          Id& sid = std::get<Id>(subj);
          if (sid.kind == IdKind::Linear && !env.count(std::get<Id>(p->subject).name))
            sid.kind = IdKind::Shared;
        }
        Env env2 = env;
        std::string x = fresh(p->bound);
        env2[p->bound] = Id{x, IdKind::Variable};
        ProcRef body = rename(p->left, env2, defs);
        return p->kind == ProcKind::Accept ? p_accept(std::move(subj), x, std::move(body))
                                           : p_request(std::move(subj), x, std::move(body));
      }
      case ProcKind::Cond:
        return p_cond(rename_expr(p->expr, env), rename(p->left, env, defs),
                      rename(p->right, env, defs));
      case ProcKind::Queue: {
        auto remap = [&](const std::string& n) {
          auto it = env.find(n);
          if (it != env.end()) return it->second.name;
          used.insert(n);
          return n;
        };
        std::vector<Message> items;
        for (const auto& m : p->items) items.push_back({m.label, rename_uval(m.content, env)});
        return p_queue(remap(p->q_from), remap(p->q_to), std::move(items));
      }
    }
    return p;
  }
};

// Guarded recursion: inside every definition body, process invocations must
// occur under an input/output prefix.
inline void check_guarded(const ProcRef& p, bool in_def_body, bool guarded) {
  switch (p->kind) {
    case ProcKind::Invoke:
      if (in_def_body && !guarded)
        throw ParseError("unguarded recursive call to '" + p->invoke_name + "'", 0);
      return;
    case ProcKind::Input:
      for (const auto& b : p->branches) check_guarded(b.body, in_def_body, true);
      return;
    case ProcKind::OutputChan:
    case ProcKind::OutputExpr:
      check_guarded(p->left, in_def_body, true);
      return;
    case ProcKind::Par:
    case ProcKind::Choice:
    case ProcKind::Cond:
      check_guarded(p->left, in_def_body, guarded);
      check_guarded(p->right, in_def_body, guarded);
      return;
    case ProcKind::Def:
      check_guarded(p->def_body, true, false);
      check_guarded(p->left, in_def_body, guarded);
      return;
    case ProcKind::NewLinear:
    case ProcKind::NewShared:
    case ProcKind::Accept:
    case ProcKind::Request:
      check_guarded(p->left, in_def_body, guarded);
      return;
    default:
      return;
  }
}

}  // namespace detail

namespace detail {

// Free identifiers of a raw tree, honouring every binder kind. Used to seed
// the freshener: names bound somewhere must not count as free just because
// the raw parse has not resolved identifier kinds yet.
inline void raw_free_names(const ProcRef& p, std::set<std::string> bound,
                           std::set<std::string>& out) {
  auto add_uval = [&](const UVal& u) {
    if (std::holds_alternative<Id>(u)) {
      if (!bound.count(std::get<Id>(u).name)) out.insert(std::get<Id>(u).name);
    } else if (std::get<Value>(u).kind == Value::Kind::SharedChan) {
      if (!bound.count(std::get<Value>(u).chan)) out.insert(std::get<Value>(u).chan);
    }
  };
  std::function<void(const ExprRef&)> add_expr = [&](const ExprRef& e) {
    switch (e->kind) {
      case Expr::Kind::Var:
        if (!bound.count(e->var)) out.insert(e->var);
        return;
      case Expr::Kind::Chan:
        if (!bound.count(e->chan.name)) out.insert(e->chan.name);
        return;
      case Expr::Kind::Val:
        if (e->val.kind == Value::Kind::SharedChan && !bound.count(e->val.chan))
          out.insert(e->val.chan);
        return;
      case Expr::Kind::Gt:
        add_expr(e->a);
        add_expr(e->b);
        return;
      default:
        add_expr(e->a);
        return;
    }
  };
  switch (p->kind) {
    case ProcKind::Nil:
    case ProcKind::Error:
      return;
    case ProcKind::Invoke:
      for (const auto& a : p->args) {
        if (std::holds_alternative<UVal>(a))
          add_uval(std::get<UVal>(a));
        else
          add_expr(std::get<ExprRef>(a));
      }
      return;
    case ProcKind::Input:
      add_uval(p->subject);
      for (const auto& b : p->branches) {
        std::set<std::string> inner = bound;
        inner.insert(b.bound);
        raw_free_names(b.body, inner, out);
      }
      return;
    case ProcKind::OutputChan:
      add_uval(p->subject);
      add_uval(p->object);
      raw_free_names(p->left, bound, out);
      return;
    case ProcKind::OutputExpr:
      add_uval(p->subject);
      add_expr(p->expr);
      raw_free_names(p->left, bound, out);
      return;
    case ProcKind::Par:
    case ProcKind::Choice:
      raw_free_names(p->left, bound, out);
      raw_free_names(p->right, bound, out);
      return;
    case ProcKind::Cond:
      add_expr(p->expr);
      raw_free_names(p->left, bound, out);
      raw_free_names(p->right, bound, out);
      return;
    case ProcKind::Def: {
      std::set<std::string> benv = bound;
      for (const auto& prm : p->params) benv.insert(prm);
      raw_free_names(p->def_body, benv, out);
      raw_free_names(p->left, bound, out);
      return;
    }
    case ProcKind::NewLinear: {
      std::set<std::string> inner = bound;
      inner.insert(p->nu_a);
      inner.insert(p->nu_b);
      raw_free_names(p->left, inner, out);
      return;
    }
    case ProcKind::NewShared: {
      std::set<std::string> inner = bound;
      inner.insert(p->nu_a);
      raw_free_names(p->left, inner, out);
      return;
    }
    case ProcKind::Accept:
    case ProcKind::Request: {
      add_uval(p->subject);
      std::set<std::string> inner = bound;
      inner.insert(p->bound);
      raw_free_names(p->left, inner, out);
      return;
    }
    case ProcKind::Queue:
      if (!bound.count(p->q_from)) out.insert(p->q_from);
      if (!bound.count(p->q_to)) out.insert(p->q_to);
      for (const auto& m : p->items) add_uval(m.content);
      return;
  }
}

}  // namespace detail

inline ProcRef freshen(const ProcRef& p) {
  detail::Freshener f;
  detail::raw_free_names(p, {}, f.used);
  return f.rename(p, {}, {});
}

inline ProcRef parse_process(std::string_view text) {
  ProcRef raw = detail::ProcParser(text).parse();
  detail::check_guarded(raw, false, false);
  return freshen(raw);
}

// Structural congruence normal form ------------------------------------------

struct Definition {
  std::string name;
  std::vector<std::string> params;
  ProcRef body;
};

struct NormalForm {
  std::vector<std::pair<std::string, std::string>> nu_linear;
  std::vector<std::string> nu_shared;
  std::vector<Definition> defs;
  std::vector<ProcRef> threads;
};

namespace detail {

inline void flatten(const ProcRef& p, NormalForm& nf) {
  switch (p->kind) {
    case ProcKind::Nil:
      return;  // s-par 1
    case ProcKind::Par:
      flatten(p->left, nf);
      flatten(p->right, nf);
      return;
    case ProcKind::Def:
      nf.defs.push_back({p->def_name, p->params, p->def_body});
      flatten(p->left, nf);
      return;
    case ProcKind::NewLinear:
      nf.nu_linear.emplace_back(p->nu_a, p->nu_b);
      flatten(p->left, nf);
      return;
    case ProcKind::NewShared:
      nf.nu_shared.push_back(p->nu_a);
      flatten(p->left, nf);
      return;
    default:
      nf.threads.push_back(p);
      return;
  }
}

inline void collect_names_order(const ProcRef& p, std::vector<std::string>& order,
                                std::set<std::string>& seen) {
  auto add = [&](const std::string& n) {
    if (seen.insert(n).second) order.push_back(n);
  };
  auto add_uval = [&](const UVal& u) {
    if (std::holds_alternative<Id>(u))
      add(std::get<Id>(u).name);
    else if (std::get<Value>(u).kind == Value::Kind::SharedChan)
      add(std::get<Value>(u).chan);
  };
  std::function<void(const ExprRef&)> add_expr = [&](const ExprRef& e) {
    switch (e->kind) {
      case Expr::Kind::Val:
        if (e->val.kind == Value::Kind::SharedChan) add(e->val.chan);
        return;
      case Expr::Kind::Chan: add(e->chan.name); return;
      case Expr::Kind::Var: return;
      case Expr::Kind::Gt: add_expr(e->a); add_expr(e->b); return;
      default: add_expr(e->a); return;
    }
  };
  std::function<void(const ProcRef&)> go = [&](const ProcRef& q) {
    switch (q->kind) {
      case ProcKind::Nil:
      case ProcKind::Error:
        return;
      case ProcKind::Invoke:
        add(q->invoke_name);
        for (const auto& a : q->args) {
          if (std::holds_alternative<UVal>(a))
            add_uval(std::get<UVal>(a));
          else
            add_expr(std::get<ExprRef>(a));
        }
        return;
      case ProcKind::Input:
        add_uval(q->subject);
        for (const auto& b : q->branches) go(b.body);
        return;
      case ProcKind::OutputChan:
        add_uval(q->subject);
        add_uval(q->object);
        go(q->left);
        return;
      case ProcKind::OutputExpr:
        add_uval(q->subject);
        add_expr(q->expr);
        go(q->left);
        return;
      case ProcKind::Par:
      case ProcKind::Choice:
        go(q->left);
        go(q->right);
        return;
      case ProcKind::Def:
        add(q->def_name);
        go(q->def_body);
        go(q->left);
        return;
      case ProcKind::NewLinear:
      case ProcKind::NewShared:
        go(q->left);
        return;
      case ProcKind::Accept:
      case ProcKind::Request:
        add_uval(q->subject);
        go(q->left);
        return;
      case ProcKind::Cond:
        add_expr(q->expr);
        go(q->left);
        go(q->right);
        return;
      case ProcKind::Queue:
        add(q->q_from);
        add(q->q_to);
        for (const auto& m : q->items) add_uval(m.content);
        return;
    }
  };
  go(p);
}

}  // namespace detail

inline NormalForm normalize(const ProcRef& p0) {
  ProcRef p = freshen(p0);
  NormalForm nf;
  detail::flatten(p, nf);

  // names referenced by live threads (transitively through definitions)
  auto referenced = [&nf]() {
    std::set<std::string> names;
    std::set<std::string> live_defs;
    std::function<void(const std::string&)> scan_def = [&](const std::string& v) {
      if (!live_defs.insert(v).second) return;
      for (const auto& d : nf.defs)
        if (d.name == v) {
          for (const auto& n : free_channels(d.body)) names.insert(n);
          for (const auto& w : free_process_vars(d.body)) scan_def(w);
        }
    };
    for (const auto& t : nf.threads) {
      for (const auto& n : free_channels(t)) names.insert(n);
      for (const auto& v : free_process_vars(t)) scan_def(v);
    }
    return std::make_pair(names, live_defs);
  };

  // s-null: a restricted pair whose only occurrences are its two empty
  // co-queues is garbage; so are unreferenced restrictions and definitions.
  bool changed = true;
  while (changed) {
    changed = false;
    auto [names, live_defs] = referenced();

    for (std::size_t i = 0; i < nf.defs.size();) {
      if (!live_defs.count(nf.defs[i].name)) {
        nf.defs.erase(nf.defs.begin() + i);
        changed = true;
      } else {
        ++i;
      }
    }
    if (changed) continue;

    for (std::size_t i = 0; i < nf.nu_linear.size();) {
      const auto& [a, b] = nf.nu_linear[i];
      std::size_t q_ab = nf.threads.size(), q_ba = nf.threads.size();
      bool other_use = false;
      for (std::size_t t = 0; t < nf.threads.size(); ++t) {
        const ProcRef& th = nf.threads[t];
        std::set<std::string> fc = free_channels(th);
        if (!fc.count(a) && !fc.count(b)) continue;
        if (th->kind == ProcKind::Queue && th->items.empty() && th->q_from == a &&
            th->q_to == b && q_ab == nf.threads.size()) {
          q_ab = t;
        } else if (th->kind == ProcKind::Queue && th->items.empty() && th->q_from == b &&
                   th->q_to == a && q_ba == nf.threads.size()) {
          q_ba = t;
        } else {
          other_use = true;
        }
      }
      for (const auto& d : nf.defs) {
        std::set<std::string> fc = free_channels(d.body);
        if (fc.count(a) || fc.count(b)) other_use = true;
      }
      if (!other_use && q_ab < nf.threads.size() && q_ba < nf.threads.size()) {
        for (std::size_t t : {std::max(q_ab, q_ba), std::min(q_ab, q_ba)})
          nf.threads.erase(nf.threads.begin() + t);
        nf.nu_linear.erase(nf.nu_linear.begin() + i);
        changed = true;
        continue;
      }
      if (!other_use && q_ab == nf.threads.size() && q_ba == nf.threads.size() &&
          !names.count(a) && !names.count(b)) {
        nf.nu_linear.erase(nf.nu_linear.begin() + i);
        changed = true;
        continue;
      }
      ++i;
    }
    for (std::size_t i = 0; i < nf.nu_shared.size();) {
      if (!names.count(nf.nu_shared[i])) {
        nf.nu_shared.erase(nf.nu_shared.begin() + i);
        changed = true;
      } else {
        ++i;
      }
    }
  }

  std::sort(nf.defs.begin(), nf.defs.end(),
            [](const Definition& x, const Definition& y) { return x.name < y.name; });
  std::sort(nf.nu_linear.begin(), nf.nu_linear.end());
  std::sort(nf.nu_shared.begin(), nf.nu_shared.end());
  std::sort(nf.threads.begin(), nf.threads.end(), [](const ProcRef& x, const ProcRef& y) {
    return print_process(x) < print_process(y);
  });
  return nf;
}

inline ProcRef to_process(const NormalForm& nf) {
  ProcRef body = nullptr;
  for (const auto& t : nf.threads) body = body ? p_par(body, t) : t;
  if (!body) body = p_nil();
  for (auto it = nf.defs.rbegin(); it != nf.defs.rend(); ++it)
    body = p_def(it->name, it->params, it->body, body);
  for (auto it = nf.nu_shared.rbegin(); it != nf.nu_shared.rend(); ++it)
    body = p_news(*it, body);
  for (auto it = nf.nu_linear.rbegin(); it != nf.nu_linear.rend(); ++it)
    body = p_new(it->first, it->second, body);
  return body;
}

inline std::string print(const NormalForm& nf) { return print_process(to_process(nf)); }

// Canonical key: bound channel/definition names are replaced by indices
// assigned in order of first appearance over shape-sorted threads, making the
// key invariant under the freshening choices made along different reduction
// interleavings.
inline std::string canonical_key(const NormalForm& nf) {
  std::set<std::string> bound;
  for (const auto& [a, b] : nf.nu_linear) {
    bound.insert(a);
    bound.insert(b);
  }
  for (const auto& s : nf.nu_shared) bound.insert(s);
  for (const auto& d : nf.defs) bound.insert(d.name);

  // pass 1: sort threads by shape (bound names erased)
  std::map<std::string, std::string> erase;
  for (const auto& n : bound) erase[n] = "#";
  std::vector<std::size_t> order(nf.threads.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::vector<std::string> shape(nf.threads.size());
  for (std::size_t i = 0; i < nf.threads.size(); ++i)
    shape[i] = print_process_renamed(nf.threads[i], erase, true);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    if (shape[x] != shape[y]) return shape[x] < shape[y];
    return print_process(nf.threads[x]) < print_process(nf.threads[y]);
  });

  // pass 2: assign canonical indices by first appearance
  std::map<std::string, std::string> canon;
  int next = 0;
  auto assign = [&](const std::string& n) {
    if (bound.count(n) && !canon.count(n)) canon[n] = "#" + std::to_string(next++);
  };
  for (std::size_t i : order) {
    std::vector<std::string> names;
    std::set<std::string> seen;
    detail::collect_names_order(nf.threads[i], names, seen);
    for (const auto& n : names) assign(n);
  }
  for (const auto& d : nf.defs) assign(d.name);
  for (const auto& d : nf.defs) {
    std::vector<std::string> names;
    std::set<std::string> seen;
    detail::collect_names_order(d.body, names, seen);
    for (const auto& n : names) assign(n);
  }
  for (const auto& [a, b] : nf.nu_linear) {
    assign(a);
    assign(b);
  }
  for (const auto& s : nf.nu_shared) assign(s);

  std::vector<std::string> lines;
  for (std::size_t i : order)
    lines.push_back(print_process_renamed(nf.threads[i], canon, true));
  std::sort(lines.begin(), lines.end());

  std::ostringstream os;
  std::vector<std::string> rests;
  for (const auto& [a, b] : nf.nu_linear) rests.push_back(canon[a] + "," + canon[b]);
  std::sort(rests.begin(), rests.end());
  os << "nu:";
  for (const auto& r : rests) os << r << ";";
  std::vector<std::string> shs;
  for (const auto& s : nf.nu_shared) shs.push_back(canon[s]);
  std::sort(shs.begin(), shs.end());
  os << " news:";
  for (const auto& s : shs) os << s << ";";
  std::vector<std::string> dl;
  for (const auto& d : nf.defs) {
    std::map<std::string, std::string> r = canon;
    dl.push_back(canon[d.name] + "/" + std::to_string(d.params.size()) + "=" +
                 print_process_renamed(p_def(d.name, d.params, d.body, p_nil()), r, true));
  }
  std::sort(dl.begin(), dl.end());
  os << " defs:";
  for (const auto& d : dl) os << d << ";";
  os << " threads:";
  for (const auto& l : lines) os << l << ";";
  return os.str();
}

// gamma / delta / phi ---------------------------------------------------------

inline std::set<std::string> gamma(const std::vector<Message>& items) {
  std::set<std::string> out;
  for (const auto& m : items) detail::fc_uval(m.content, out);
  return out;
}

namespace detail {

struct DeltaCtx {
  std::map<std::string, const Definition*> decls_by_name;
  std::vector<Definition> owned;
  std::set<std::string> chi;  // invocation keys already considered
  std::size_t unfoldings = 0;
  std::size_t cap = 1024;
};

inline std::string invoke_key(const std::string& name, const std::vector<InvArg>& args) {
  std::string k = name + "(";
  for (const auto& a : args) {
    if (std::holds_alternative<UVal>(a)) {
      const UVal& u = std::get<UVal>(a);
      if (std::holds_alternative<Id>(u)) {
        k += std::get<Id>(u).name;
        k += ",";
      }
      // channel arguments only; value arguments are ignored by the memo
    }
  }
  return k + ")";
}

inline std::set<std::string> delta_rec(const ProcRef& p,
                                       std::map<std::string, Definition> decls, DeltaCtx& ctx);

inline std::set<std::string> delta_invoke(const ProcRef& p,
                                          std::map<std::string, Definition> decls,
                                          DeltaCtx& ctx) {
  std::string key = invoke_key(p->invoke_name, p->args);
  auto it = decls.find(p->invoke_name);
  if (it == decls.end() || ctx.chi.count(key)) return {};
  if (++ctx.unfoldings > ctx.cap)
    throw std::runtime_error("delta: unfolding cap exceeded (" + std::to_string(ctx.cap) + ")");
  const Definition& d = it->second;
  if (d.params.size() != p->args.size()) return {};
  Subst s;
  for (std::size_t i = 0; i < d.params.size(); ++i) {
    if (std::holds_alternative<UVal>(p->args[i])) {
      s[d.params[i]] = std::get<UVal>(p->args[i]);
    } else {
      const ExprRef& e = std::get<ExprRef>(p->args[i]);
      if (e->kind == Expr::Kind::Val)
        s[d.params[i]] = e->val;
      // non-value expression arguments do not carry channels into delta
    }
  }
  DeltaCtx sub = ctx;
  sub.chi.insert(key);
  auto out = delta_rec(substitute(d.body, s), decls, sub);
  ctx.unfoldings = sub.unfoldings;
  return out;
}

inline std::set<std::string> delta_rec(const ProcRef& p,
                                       std::map<std::string, Definition> decls, DeltaCtx& ctx) {
  std::set<std::string> out;
  switch (p->kind) {
    case ProcKind::Nil:
    case ProcKind::Error:
      return out;
    case ProcKind::Invoke:
      return delta_invoke(p, decls, ctx);
    case ProcKind::Input: {
      fc_uval(p->subject, out);
      for (const auto& b : p->branches) {
        auto sub = delta_rec(b.body, decls, ctx);
        sub.erase(b.bound);
        out.insert(sub.begin(), sub.end());
      }
      return out;
    }
    case ProcKind::OutputChan: {
      fc_uval(p->object, out);
      auto sub = delta_rec(p->left, decls, ctx);
      out.insert(sub.begin(), sub.end());
      return out;
    }
    case ProcKind::OutputExpr:
      return delta_rec(p->left, decls, ctx);
    case ProcKind::Par:
    case ProcKind::Choice:
    case ProcKind::Cond: {
      out = delta_rec(p->left, decls, ctx);
      auto r = delta_rec(p->right, decls, ctx);
      out.insert(r.begin(), r.end());
      return out;
    }
    case ProcKind::Def: {
      decls[p->def_name] = {p->def_name, p->params, p->def_body};
      return delta_rec(p->left, decls, ctx);
    }
    case ProcKind::NewLinear: {
      out = delta_rec(p->left, decls, ctx);
      out.erase(p->nu_a);
      out.erase(p->nu_b);
      return out;
    }
    case ProcKind::NewShared:
      return delta_rec(p->left, decls, ctx);
    case ProcKind::Accept:
    case ProcKind::Request: {
      out = delta_rec(p->left, decls, ctx);
      out.erase(p->bound);
      return out;
    }
    case ProcKind::Queue:
      return gamma(p->items);
  }
  return out;
}

}  // namespace detail

inline std::set<std::string> delta(const ProcRef& p,
                                   const std::vector<Definition>& decls,
                                   std::size_t cap = 1024) {
  detail::DeltaCtx ctx;
  ctx.cap = cap;
  std::map<std::string, Definition> m;
  for (const auto& d : decls) m[d.name] = d;
  return detail::delta_rec(p, std::move(m), ctx);
}

inline std::set<std::string> phi(const ProcRef& p, std::size_t cap = 1024) {
  if (!free_process_vars(p).empty())
    throw std::invalid_argument("phi requires fpv(P) to be empty");
  return delta(p, {}, cap);
}

}  // namespace sesst
