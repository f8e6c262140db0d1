#pragma once

// Session environments and queue types, the session remainder, balancing,
// algorithmic typechecking for all calculus variants, and reduction of
// asynchronous session environments.
//
// The checker is syntax-directed with subsumption folded into the leaves,
// following the inversion lemmas: at an input the environment's branch
// labels must be offered by the process and the branches are checked against
// the environment's components; at an output the environment type must offer
// the emitted label. Restriction-bound channels have no annotations, so their
// types are synthesised from their (linear, sequential) usage; this covers
// the characteristic-process fragment and its reducts, and anything beyond
// it fails with a diagnostic rather than guessing.

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "sesst/process.hpp"
#include "sesst/semantics.hpp"
#include "sesst/subtyping.hpp"
#include "sesst/type.hpp"

namespace sesst {

struct QueueType {
  std::vector<std::pair<std::string, Payload>> items;
};

inline std::string print_queue_type(const QueueType& q) {
  std::string s = "[";
  for (std::size_t i = 0; i < q.items.size(); ++i) {
    if (i) s += ", ";
    s += q.items[i].first + "<" + print_payload(q.items[i].second) + ">";
  }
  return s + "]";
}

struct SessionEnv {
  std::map<std::string, TypeRef> linear;
  std::map<std::pair<std::string, std::string>, QueueType> queues;
};

struct SharedEnv {
  std::map<std::string, Sort> sorts;
  std::map<std::string, std::vector<Payload>> procvars;
};

inline std::string print_env(const SessionEnv& env) {
  std::ostringstream os;
  bool first = true;
  for (const auto& [u, t] : env.linear) {
    if (!first) os << ", ";
    first = false;
    os << u << ": " << print_type(t);
  }
  for (const auto& [ab, q] : env.queues) {
    if (!first) os << ", ";
    first = false;
    os << "queue " << ab.first << " " << ab.second << " : " << print_queue_type(q);
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Environment pre-order

inline bool env_sub(const SessionEnv& d1, const SessionEnv& d2, Mode mode,
                    const Budget& budget = {}) {
  for (const auto& [u, t] : d1.linear) {
    auto it = d2.linear.find(u);
    if (it == d2.linear.end()) {
      if (unfold(t)->kind != TypeKind::End) return false;
      continue;
    }
    if (mode_is_async(mode)) {
      if (!async_subtype(t, it->second, budget).yes()) return false;
    } else {
      if (!sync_subtype(t, it->second)) return false;
    }
  }
  for (const auto& [u, t] : d2.linear) {
    if (!d1.linear.count(u) && unfold(t)->kind != TypeKind::End) return false;
  }
  if (mode_is_async(mode)) {
    if (d1.queues.size() != d2.queues.size()) return false;
    for (const auto& [ab, q1] : d1.queues) {
      auto it = d2.queues.find(ab);
      if (it == d2.queues.end()) return false;
      const QueueType& q2 = it->second;
      if (q1.items.size() != q2.items.size()) return false;
      for (std::size_t i = 0; i < q1.items.size(); ++i) {
        if (q1.items[i].first != q2.items[i].first) return false;
        if (!payload_equal(q1.items[i].second, q2.items[i].second)) return false;
      }
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Session remainder T / tau (rm-empty, rm-bra, rm-sel); partial, cycles in
// selection loops have no finite derivation and yield absent.

namespace detail {

inline std::optional<TypeRef> remainder_rec(const TypeRef& t, const QueueType& q,
                                            std::size_t i, const Budget& budget,
                                            std::set<std::string>& in_progress) {
  if (i == q.items.size()) return t;  // rm-empty
  TypeRef w = unfold(t);
  std::string key = type_key(w) + "@" + std::to_string(i);
  if (!in_progress.insert(key).second) return std::nullopt;
  std::optional<TypeRef> result;
  if (w->kind == TypeKind::Branch) {
    const auto& [label, payload] = q.items[i];
    for (const auto& e : w->entries) {
      if (e.label != label) continue;
      if (payload_sub(e.payload, payload, Mode::Async, budget).yes())
        result = remainder_rec(e.cont, q, i + 1, budget, in_progress);
      break;
    }
  } else if (w->kind == TypeKind::Select) {
    std::vector<TypeEntry> entries;
    bool ok = true;
    for (const auto& e : w->entries) {
      auto r = remainder_rec(e.cont, q, i, budget, in_progress);
      if (!r) {
        ok = false;
        break;
      }
      entries.push_back({e.label, e.payload, *r});
    }
    if (ok) result = t_select(std::move(entries));
  }
  in_progress.erase(key);
  return result;
}

}  // namespace detail

inline std::optional<TypeRef> remainder(const TypeRef& t, const QueueType& q,
                                        const Budget& budget = {}) {
  std::set<std::string> in_progress;
  return detail::remainder_rec(t, q, 0, budget, in_progress);
}

// Def 4.8: all remainders defined, and dual for co-channel pairs.
inline bool balanced(const SessionEnv& env, const Budget& budget = {}) {
  for (const auto& [ab, q] : env.queues) {
    const std::string& reader = ab.second;
    auto it = env.linear.find(reader);
    if (it == env.linear.end()) continue;
    if (!remainder(it->second, q, budget)) return false;
  }
  for (const auto& [ab, q1] : env.queues) {
    const auto& [a, b] = ab;
    auto q2 = env.queues.find({b, a});
    auto ta = env.linear.find(a);
    auto tb = env.linear.find(b);
    if (q2 == env.queues.end() || ta == env.linear.end() || tb == env.linear.end()) continue;
    auto ra = remainder(ta->second, q2->second, budget);  // a dequeues <b,a>
    auto rb = remainder(tb->second, q1, budget);          // b dequeues <a,b>
    if (!ra || !rb) return false;
    if (!type_equal(*ra, dual(*rb))) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Typechecking

struct TypecheckResult {
  bool ok = true;
  std::vector<std::string> diagnostics;

  explicit operator bool() const { return ok; }
};

namespace detail {

struct Checker {
  SharedEnv gamma;
  Mode mode;
  Budget budget;
  std::vector<std::string> diags;
  // channel parameters of definitions in scope, synthesised
  std::map<std::string, std::vector<std::optional<TypeRef>>> def_chan_params;
  std::map<std::string, std::vector<std::optional<Sort>>> def_sort_params;
  // definition currently being synthesised: name -> param index -> type var
  std::map<std::string, std::map<std::size_t, std::string>> synth_tvars;

  bool fail(const std::string& msg) {
    diags.push_back(msg);
    return false;
  }

  bool sub_session(const TypeRef& a, const TypeRef& b) {
    if (mode_is_async(mode)) return async_subtype(a, b, budget).yes();
    return sync_subtype(a, b);
  }

  // ---- expression sorts ----------------------------------------------------

  std::optional<Sort> sort_of_value(const Value& v) {
    switch (v.kind) {
      case Value::Kind::True:
      case Value::Kind::False:
        return Sort{BaseSort::Bool, nullptr};
      case Value::Kind::Int:
        return v.num >= 0 ? Sort{BaseSort::Nat, nullptr} : Sort{BaseSort::Int, nullptr};
      case Value::Kind::SharedChan: {
        auto it = gamma.sorts.find(v.chan);
        if (it == gamma.sorts.end()) return std::nullopt;
        return it->second;
      }
    }
    return std::nullopt;
  }

  std::optional<Sort> sort_of_expr(const ExprRef& e) {
    switch (e->kind) {
      case Expr::Kind::Val:
        return sort_of_value(e->val);
      case Expr::Kind::Var: {
        auto it = gamma.sorts.find(e->var);
        if (it == gamma.sorts.end()) return std::nullopt;
        return it->second;
      }
      case Expr::Kind::Chan:
        return std::nullopt;
      case Expr::Kind::Not: {
        auto a = sort_of_expr(e->a);
        if (!a || a->base != BaseSort::Bool) return std::nullopt;
        return Sort{BaseSort::Bool, nullptr};
      }
      case Expr::Kind::Succ: {
        auto a = sort_of_expr(e->a);
        if (!a || !subsort(*a, Sort{BaseSort::Nat, nullptr})) return std::nullopt;
        return Sort{BaseSort::Nat, nullptr};
      }
      case Expr::Kind::Neg: {
        auto a = sort_of_expr(e->a);
        if (!a || !subsort(*a, Sort{BaseSort::Int, nullptr})) return std::nullopt;
        return Sort{BaseSort::Int, nullptr};
      }
      case Expr::Kind::Gt: {
        auto a = sort_of_expr(e->a);
        auto b = sort_of_expr(e->b);
        if (!a || !b) return std::nullopt;
        if (!subsort(*a, Sort{BaseSort::Int, nullptr})) return std::nullopt;
        if (!subsort(*b, Sort{BaseSort::Int, nullptr})) return std::nullopt;
        return Sort{BaseSort::Bool, nullptr};
      }
    }
    return std::nullopt;
  }

  // ---- usage analysis -------------------------------------------------------

  static bool uses_name(const ProcRef& p, const std::string& n) {
    return free_channels(p).count(n) > 0;
  }

  // does `n` occur as an input/output subject or as an invoke argument?
  static bool subject_rooted(const ProcRef& p, const std::string& n) {
    switch (p->kind) {
      case ProcKind::Nil:
      case ProcKind::Error:
        return false;
      case ProcKind::Invoke:
        for (const auto& a : p->args)
          if (std::holds_alternative<UVal>(a)) {
            auto c = linear_chan_of(std::get<UVal>(a));
            if (c && *c == n) return true;
          }
        return false;
      case ProcKind::Input: {
        auto c = linear_chan_of(p->subject);
        if (c && *c == n) return true;
        for (const auto& b : p->branches)
          if (subject_rooted(b.body, n)) return true;
        return false;
      }
      case ProcKind::OutputChan:
      case ProcKind::OutputExpr: {
        auto c = linear_chan_of(p->subject);
        if (c && *c == n) return true;
        return subject_rooted(p->left, n);
      }
      case ProcKind::Par:
      case ProcKind::Choice:
      case ProcKind::Cond:
        return subject_rooted(p->left, n) || subject_rooted(p->right, n);
      case ProcKind::Def:
        return subject_rooted(p->def_body, n) || subject_rooted(p->left, n);
      case ProcKind::NewLinear:
      case ProcKind::NewShared:
      case ProcKind::Accept:
      case ProcKind::Request:
        return subject_rooted(p->left, n);
      case ProcKind::Queue:
        return false;
    }
    return false;
  }

  // ---- session-type synthesis for restriction-bound channels ---------------

  // Synthesise the minimal session type of channel `u` from its usage in `p`.
  std::optional<TypeRef> synth(const ProcRef& p, const std::string& u) {
    switch (p->kind) {
      case ProcKind::Nil:
      case ProcKind::Error:
      case ProcKind::Queue:
        return t_end();
      case ProcKind::Invoke: {
        for (std::size_t i = 0; i < p->args.size(); ++i) {
          if (!std::holds_alternative<UVal>(p->args[i])) continue;
          auto c = linear_chan_of(std::get<UVal>(p->args[i]));
          if (!c || *c != u) continue;
          auto tv = synth_tvars.find(p->invoke_name);
          if (tv != synth_tvars.end()) {
            auto pos = tv->second.find(i);
            if (pos == tv->second.end()) {
              fail("recursive call uses channel '" + u + "' at an unexpected position");
              return std::nullopt;
            }
            return t_var(pos->second);
          }
          auto it = def_chan_params.find(p->invoke_name);
          if (it == def_chan_params.end() || i >= it->second.size() || !it->second[i]) {
            fail("cannot determine parameter type of '" + p->invoke_name + "'");
            return std::nullopt;
          }
          return *it->second[i];
        }
        return t_end();
      }
      case ProcKind::Input: {
        auto subj = linear_chan_of(p->subject);
        if (subj && *subj == u) {
          std::vector<TypeEntry> entries;
          for (const auto& b : p->branches) {
            auto pay = synth_payload(b.body, b.bound);
            if (!pay) return std::nullopt;
            auto cont = synth_without(b.body, b.bound, u);
            if (!cont) return std::nullopt;
            entries.push_back({b.label, *pay, *cont});
          }
          return t_branch(std::move(entries));
        }
        // u inside branches of another channel's input: all branches must agree
        std::optional<TypeRef> agreed;
        for (const auto& b : p->branches) {
          auto r = synth(b.body, u);
          if (!r) return std::nullopt;
          if (!agreed)
            agreed = r;
          else if (!type_equal(*agreed, *r)) {
            fail("channel '" + u + "' used at different types across input branches");
            return std::nullopt;
          }
        }
        return agreed;
      }
      case ProcKind::OutputChan: {
        auto subj = linear_chan_of(p->subject);
        if (subj && *subj == u) {
          auto pay = synth_object_payload(p->object, p->left);
          if (!pay) return std::nullopt;
          auto cont = synth(p->left, u);
          if (!cont) return std::nullopt;
          return t_select({{p->label, *pay, *cont}});
        }
        auto obj = linear_chan_of(p->object);
        if (obj && *obj == u) {
          fail("channel '" + u + "' is delegated mid-session; its type cannot be synthesised");
          return std::nullopt;
        }
        return synth(p->left, u);
      }
      case ProcKind::OutputExpr: {
        auto subj = linear_chan_of(p->subject);
        if (subj && *subj == u) {
          auto srt = sort_of_expr(p->expr);
          if (!srt) {
            fail("cannot type expression payload on '" + u + "'");
            return std::nullopt;
          }
          auto cont = synth(p->left, u);
          if (!cont) return std::nullopt;
          return t_select({{p->label, Payload(*srt), *cont}});
        }
        return synth(p->left, u);
      }
      case ProcKind::Par: {
        bool inl = uses_name(p->left, u), inr = uses_name(p->right, u);
        if (inl && inr) {
          fail("channel '" + u + "' used in parallel components");
          return std::nullopt;
        }
        if (inl) return synth(p->left, u);
        if (inr) return synth(p->right, u);
        return t_end();
      }
      case ProcKind::Choice: {
        auto l = synth(p->left, u);
        auto r = synth(p->right, u);
        if (!l || !r) return std::nullopt;
        return join_choice(*l, *r);
      }
      case ProcKind::Cond: {
        auto l = synth(p->left, u);
        auto r = synth(p->right, u);
        if (!l || !r) return std::nullopt;
        if (type_equal(*l, *r)) return l;
        fail("channel '" + u + "' used at different types across a conditional");
        return std::nullopt;
      }
      case ProcKind::Def: {
        if (!synth_def(p)) return std::nullopt;
        return synth(p->left, u);
      }
      case ProcKind::NewLinear:
      case ProcKind::NewShared:
        return synth(p->left, u);
      case ProcKind::Accept:
      case ProcKind::Request:
        return synth(p->left, u);
    }
    return std::nullopt;
  }

  // synthesise the type of `u` in a branch body ignoring the branch binder
  std::optional<TypeRef> synth_without(const ProcRef& body, const std::string& binder,
                                       const std::string& u) {
    (void)binder;
    return synth(body, u);
  }

  // payload of an input branch: determined by the bound variable's usage
  std::optional<Payload> synth_payload(const ProcRef& body, const std::string& x) {
    if (subject_rooted(body, x)) {
      auto t = synth(body, x);
      if (!t) return std::nullopt;
      return Payload(*t);
    }
    // used in expressions / accept / request?
    auto srt = var_sort_constraints(body, x);
    if (!srt.first) return std::nullopt;
    if (srt.second) return Payload(*srt.second);
    if (uses_name_as_object(body, x)) {
      fail("received channel '" + x + "' is forwarded; payload type cannot be synthesised");
      return std::nullopt;
    }
    return Payload(t_end());  // unused binder: payload end
  }

  bool uses_name_as_object(const ProcRef& p, const std::string& n) {
    switch (p->kind) {
      case ProcKind::OutputChan: {
        auto obj = linear_chan_of(p->object);
        if (obj && *obj == n) return true;
        return uses_name_as_object(p->left, n);
      }
      case ProcKind::Input: {
        for (const auto& b : p->branches)
          if (uses_name_as_object(b.body, n)) return true;
        return false;
      }
      case ProcKind::Par:
      case ProcKind::Choice:
      case ProcKind::Cond:
        return uses_name_as_object(p->left, n) || uses_name_as_object(p->right, n);
      case ProcKind::OutputExpr:
      case ProcKind::NewLinear:
      case ProcKind::NewShared:
      case ProcKind::Accept:
      case ProcKind::Request:
        return uses_name_as_object(p->left, n);
      case ProcKind::Def:
        return uses_name_as_object(p->def_body, n) || uses_name_as_object(p->left, n);
      default:
        return false;
    }
  }

  // (ok, sort): sort constraints on an expression variable; accept/request
  // usage produces a shared sort.
  std::pair<bool, std::optional<Sort>> var_sort_constraints(const ProcRef& p,
                                                            const std::string& x) {
    std::optional<Sort> acc;
    bool ok = true;
    std::function<void(const Sort&)> meet = [&](const Sort& s) {
      if (!ok) return;
      if (!acc) {
        acc = s;
        return;
      }
      if (subsort(*acc, s)) return;        // existing is stronger
      if (subsort(s, *acc)) {
        acc = s;                            // new constraint is stronger
        return;
      }
      ok = false;
    };
    std::function<void(const ExprRef&, std::optional<Sort>)> scan_expr =
        [&](const ExprRef& e, std::optional<Sort> needed) {
          switch (e->kind) {
            case Expr::Kind::Var:
              if (e->var == x && needed) meet(*needed);
              return;
            case Expr::Kind::Not:
              scan_expr(e->a, Sort{BaseSort::Bool, nullptr});
              return;
            case Expr::Kind::Succ:
              scan_expr(e->a, Sort{BaseSort::Nat, nullptr});
              return;
            case Expr::Kind::Neg:
              scan_expr(e->a, Sort{BaseSort::Int, nullptr});
              return;
            case Expr::Kind::Gt:
              scan_expr(e->a, Sort{BaseSort::Int, nullptr});
              scan_expr(e->b, Sort{BaseSort::Int, nullptr});
              return;
            default:
              return;
          }
        };
    std::function<void(const ProcRef&)> scan = [&](const ProcRef& q) {
      switch (q->kind) {
        case ProcKind::OutputExpr:
          scan_expr(q->expr, std::nullopt);
          scan(q->left);
          return;
        case ProcKind::Cond:
          scan_expr(q->expr, Sort{BaseSort::Bool, nullptr});
          scan(q->left);
          scan(q->right);
          return;
        case ProcKind::Accept:
        case ProcKind::Request: {
          if (std::holds_alternative<Id>(q->subject)) {
            const Id& id = std::get<Id>(q->subject);
            if (id.kind == IdKind::Variable && id.name == x) {
              auto carried = synth(q->left, q->bound);
              if (!carried) {
                ok = false;
                return;
              }
              Sort s{BaseSort::Shared,
                     q->kind == ProcKind::Accept ? *carried : dual(*carried)};
              if (!acc) {
                acc = s;
              } else if (!(acc->base == BaseSort::Shared &&
                           type_equal(acc->carried, s.carried))) {
                ok = false;
              }
            }
          }
          scan(q->left);
          return;
        }
        case ProcKind::Input:
          for (const auto& b : q->branches) scan(b.body);
          return;
        case ProcKind::Par:
        case ProcKind::Choice:
          scan(q->left);
          scan(q->right);
          return;
        case ProcKind::OutputChan:
        case ProcKind::NewLinear:
        case ProcKind::NewShared:
          scan(q->left);
          return;
        case ProcKind::Def:
          scan(q->def_body);
          scan(q->left);
          return;
        case ProcKind::Invoke:
          for (const auto& a : q->args)
            if (std::holds_alternative<ExprRef>(a)) scan_expr(std::get<ExprRef>(a), std::nullopt);
          return;
        default:
          return;
      }
    };
    scan(p);
    if (!ok) {
      fail("conflicting sort constraints on variable '" + x + "'");
      return {false, std::nullopt};
    }
    return {true, acc};
  }

  // payload type of a sent object: for a channel bound by an enclosing
  // restriction visible in `cont`... the object's type is fixed by the
  // enclosing NewLinear; here it is only needed when synthesising the
  // sender's own type, where the object must be the fresh channel of a
  // nested restriction. That nested case is handled in synth at the
  // NewLinear node; a bare object defaults to `end` when unused.
  std::optional<Payload> synth_object_payload(const UVal& object, const ProcRef& cont) {
    (void)cont;
    if (is_base_value(object)) {
      auto s = sort_of_value(std::get<Value>(object));
      if (!s) return std::nullopt;
      return Payload(*s);
    }
    if (auto sh = shared_chan_of(object)) {
      auto it = gamma.sorts.find(*sh);
      if (it == gamma.sorts.end()) {
        fail("shared channel '" + *sh + "' has no sort");
        return std::nullopt;
      }
      return Payload(it->second);
    }
    fail("cannot synthesise the payload type of sent channel '" + print_uval(object) + "'");
    return std::nullopt;
  }

  std::optional<TypeRef> join_choice(const TypeRef& a, const TypeRef& b) {
    TypeRef ua = unfold(a), ub = unfold(b);
    if (ua->kind == TypeKind::End && ub->kind == TypeKind::End) return t_end();
    if (ua->kind == TypeKind::Select && ub->kind == TypeKind::Select) {
      std::vector<TypeEntry> entries = ua->entries;
      for (const auto& e : ub->entries) {
        bool found = false;
        for (const auto& f : entries) {
          if (f.label == e.label) {
            found = true;
            if (!payload_equal(f.payload, e.payload) || !type_equal(f.cont, e.cont)) {
              fail("internal choice reuses label '" + e.label + "' at different types");
              return std::nullopt;
            }
          }
        }
        if (!found) entries.push_back(e);
      }
      return t_select(std::move(entries));
    }
    if (type_equal(a, b)) return a;
    fail("branches of an internal choice use a channel at incompatible types");
    return std::nullopt;
  }

  // Synthesise and register the parameter types of a definition.
  bool synth_def(const ProcRef& d) {
    const std::string& name = d->def_name;
    std::map<std::size_t, std::string> tvars;
    for (std::size_t i = 0; i < d->params.size(); ++i)
      tvars[i] = "t_" + name + "_" + std::to_string(i);
    synth_tvars[name] = tvars;

    std::vector<std::optional<TypeRef>> chan_params(d->params.size());
    std::vector<std::optional<Sort>> sort_params(d->params.size());
    bool ok = true;
    for (std::size_t i = 0; i < d->params.size() && ok; ++i) {
      const std::string& x = d->params[i];
      if (subject_rooted(d->def_body, x)) {
        auto t = synth(d->def_body, x);
        if (!t) {
          ok = false;
          break;
        }
        TypeRef folded =
            free_type_vars(*t).count(tvars[i]) ? t_mu(tvars[i], *t) : *t;
        chan_params[i] = folded;
      } else {
        auto [cok, srt] = var_sort_constraints(d->def_body, x);
        if (!cok) {
          ok = false;
          break;
        }
        if (srt)
          sort_params[i] = srt;
        else if (uses_name_as_object(d->def_body, x))
          ok = fail("parameter '" + x + "' is forwarded; cannot synthesise its type");
        else
          chan_params[i] = t_end();
      }
    }
    synth_tvars.erase(name);
    if (!ok) return false;
    def_chan_params[name] = chan_params;
    def_sort_params[name] = sort_params;
    std::vector<Payload> sig;
    for (std::size_t i = 0; i < d->params.size(); ++i)
      sig.push_back(chan_params[i] ? Payload(*chan_params[i]) : Payload(*sort_params[i]));
    gamma.procvars[name] = sig;
    return true;
  }

  // ---- the checker ----------------------------------------------------------

  bool residual_end(const SessionEnv& env, const char* who) {
    for (const auto& [u, t] : env.linear)
      if (unfold(t)->kind != TypeKind::End)
        return fail(std::string(who) + ": channel '" + u + "' left with non-end type " +
                    print_type(t));
    if (!env.queues.empty())
      return fail(std::string(who) + ": unconsumed queue environment entries");
    return true;
  }

  bool check(const ProcRef& p, SessionEnv env) {
    switch (p->kind) {
      case ProcKind::Error:
        return fail("error has no type");
      case ProcKind::Nil:
        return residual_end(env, "t-idle");
      case ProcKind::Invoke: {
        auto it = gamma.procvars.find(p->invoke_name);
        if (it == gamma.procvars.end())
          return fail("unbound process variable '" + p->invoke_name + "'");
        const auto& sig = it->second;
        if (sig.size() != p->args.size())
          return fail("arity mismatch calling '" + p->invoke_name + "'");
        for (std::size_t i = 0; i < sig.size(); ++i) {
          const Payload& want = sig[i];
          if (std::holds_alternative<UVal>(p->args[i])) {
            const UVal& arg = std::get<UVal>(p->args[i]);
            if (auto c = linear_chan_of(arg)) {
              if (!want.is_session())
                return fail("channel argument where sort parameter expected");
              auto et = env.linear.find(*c);
              if (et == env.linear.end())
                return fail("argument channel '" + *c + "' not in the session environment");
              if (!sub_session(want.session(), et->second))
                return fail("argument '" + *c + "' requires " + print_type(want.session()) +
                            " but the environment provides " + print_type(et->second));
              env.linear.erase(et);
              continue;
            }
            // value / shared channel argument
            if (!want.is_sort()) {
              if (want.is_session() && unfold(want.session())->kind == TypeKind::End) continue;
              return fail("value argument where session parameter expected");
            }
            auto s = std::holds_alternative<Value>(arg)
                         ? sort_of_value(std::get<Value>(arg))
                         : std::optional<Sort>{};
            if (std::holds_alternative<Id>(arg)) {
              auto g = gamma.sorts.find(std::get<Id>(arg).name);
              if (g != gamma.sorts.end()) s = g->second;
            }
            if (!s || !subsort(*s, want.sort()))
              return fail("argument sort mismatch calling '" + p->invoke_name + "'");
            continue;
          }
          const ExprRef& e = std::get<ExprRef>(p->args[i]);
          if (!want.is_sort()) return fail("expression argument where channel expected");
          auto s = sort_of_expr(e);
          if (!s || !subsort(*s, want.sort()))
            return fail("expression argument sort mismatch calling '" + p->invoke_name + "'");
        }
        return residual_end(env, "t-var");
      }
      case ProcKind::Input: {
        if (is_base_value(p->subject) || shared_chan_of(p->subject))
          return fail("input subject is not a linear channel");
        auto subj = linear_chan_of(p->subject);
        auto et = env.linear.find(*subj);
        if (et == env.linear.end())
          return fail("input subject '" + *subj + "' not in the session environment");
        TypeRef w = unfold(et->second);
        if (w->kind != TypeKind::Branch)
          return fail("input on '" + *subj + "' but its type is " + print_type(et->second));
        for (const auto& we : w->entries) {
          const InputBranch* br = nullptr;
          for (const auto& b : p->branches)
            if (b.label == we.label) br = &b;
          if (!br)
            return fail("input on '" + *subj + "' does not offer label '" + we.label + "'");
          SessionEnv env2 = env;
          env2.linear.erase(*subj);
          env2.linear[*subj] = we.cont;
          SharedEnv saved = gamma;
          if (we.payload.is_session()) {
            env2.linear[br->bound] = we.payload.session();
          } else {
            gamma.sorts[br->bound] = we.payload.sort();
          }
          bool ok = check(br->body, env2);
          gamma = saved;
          if (!ok) return false;
        }
        return true;
      }
      case ProcKind::OutputChan:
      case ProcKind::OutputExpr: {
        if (is_base_value(p->subject) || shared_chan_of(p->subject))
          return fail("output subject is not a linear channel");
        auto subj = linear_chan_of(p->subject);
        auto et = env.linear.find(*subj);
        if (et == env.linear.end())
          return fail("output subject '" + *subj + "' not in the session environment");
        TypeRef w = unfold(et->second);
        if (w->kind != TypeKind::Select)
          return fail("output on '" + *subj + "' but its type is " + print_type(et->second));
        const TypeEntry* we = nullptr;
        for (const auto& e : w->entries)
          if (e.label == p->label) we = &e;
        if (!we)
          return fail("type of '" + *subj + "' does not permit label '" + p->label + "'");
        SessionEnv env2 = env;
        env2.linear.erase(*subj);
        if (p->kind == ProcKind::OutputChan) {
          if (auto c = linear_chan_of(p->object)) {
            auto ot = env2.linear.find(*c);
            if (ot == env2.linear.end())
              return fail("sent channel '" + *c + "' not in the session environment");
            if (!payload_sub(we->payload, Payload(ot->second), mode, budget).yes())
              return fail("payload mismatch sending '" + *c + "' on '" + *subj + "'");
            env2.linear.erase(ot);
          } else if (is_base_value(p->object)) {
            auto s = sort_of_value(std::get<Value>(p->object));
            bool ok = false;
            if (we->payload.is_sort() && s) ok = subsort(*s, we->payload.sort());
            if (we->payload.is_session() &&
                unfold(we->payload.session())->kind == TypeKind::End)
              ok = true;
            if (!ok) return fail("value payload mismatch on '" + *subj + "'");
          } else if (auto sh = shared_chan_of(p->object)) {
            auto g = gamma.sorts.find(*sh);
            if (g == gamma.sorts.end())
              return fail("shared channel '" + *sh + "' has no sort");
            bool ok = false;
            if (we->payload.is_sort()) ok = subsort(g->second, we->payload.sort());
            if (we->payload.is_session() &&
                unfold(we->payload.session())->kind == TypeKind::End)
              ok = true;
            if (!ok) return fail("shared-channel payload mismatch on '" + *subj + "'");
          }
        } else {
          if (!we->payload.is_sort())
            return fail("expression sent on '" + *subj + "' but the type expects a channel");
          auto s = sort_of_expr(p->expr);
          if (!s || !subsort(*s, we->payload.sort()))
            return fail("expression payload mismatch on '" + *subj + "'");
        }
        env2.linear[*subj] = we->cont;
        return check(p->left, env2);
      }
      case ProcKind::Par:
        return check_par(p, env);
      case ProcKind::Choice: {
        SessionEnv copy = env;
        return check(p->left, copy) && check(p->right, env);
      }
      case ProcKind::Def: {
        if (!synth_def(p)) return false;
        // premise 1: the body against exactly its parameter environment
        SessionEnv benv;
        SharedEnv saved = gamma;
        const auto& cps = def_chan_params[p->def_name];
        const auto& sps = def_sort_params[p->def_name];
        for (std::size_t i = 0; i < p->params.size(); ++i) {
          if (cps[i])
            benv.linear[p->params[i]] = *cps[i];
          else
            gamma.sorts[p->params[i]] = *sps[i];
        }
        bool ok = check(p->def_body, benv);
        gamma = saved;
        if (!ok) return false;
        return check(p->left, env);
      }
      case ProcKind::NewLinear:
        return check_new_linear(p, env);
      case ProcKind::NewShared: {
        // carried type from the first accept/request on s in scope
        auto carried = shared_carried(p->left, p->nu_a);
        if (!carried) return false;
        SharedEnv saved = gamma;
        gamma.sorts[p->nu_a] = Sort{BaseSort::Shared, *carried};
        bool ok = check(p->left, env);
        gamma = saved;
        return ok;
      }
      case ProcKind::Accept:
      case ProcKind::Request: {
        std::optional<Sort> srt;
        if (auto sh = shared_chan_of(p->subject)) {
          auto g = gamma.sorts.find(*sh);
          if (g != gamma.sorts.end()) srt = g->second;
        } else if (std::holds_alternative<Id>(p->subject)) {
          auto g = gamma.sorts.find(std::get<Id>(p->subject).name);
          if (g != gamma.sorts.end()) srt = g->second;
        }
        if (!srt || srt->base != BaseSort::Shared)
          return fail("accept/request subject is not a shared channel of known sort");
        SessionEnv env2 = env;
        env2.linear[p->bound] =
            p->kind == ProcKind::Accept ? srt->carried : dual(srt->carried);
        return check(p->left, env2);
      }
      case ProcKind::Cond: {
        auto s = sort_of_expr(p->expr);
        if (!s || s->base != BaseSort::Bool)
          return fail("conditional guard is not a boolean");
        SessionEnv copy = env;
        return check(p->left, copy) && check(p->right, env);
      }
      case ProcKind::Queue: {
        auto qe = env.queues.find({p->q_from, p->q_to});
        if (qe == env.queues.end())
          return fail("queue <" + p->q_from + "," + p->q_to +
                      "> has no queue type in the environment");
        const QueueType& q = qe->second;
        if (q.items.size() != p->items.size())
          return fail("queue <" + p->q_from + "," + p->q_to + "> length mismatch");
        SessionEnv env2 = env;
        env2.queues.erase({p->q_from, p->q_to});
        for (std::size_t i = 0; i < q.items.size(); ++i) {
          if (q.items[i].first != p->items[i].label)
            return fail("queue label mismatch at position " + std::to_string(i));
          const UVal& content = p->items[i].content;
          const Payload& want = q.items[i].second;
          if (auto c = linear_chan_of(content)) {
            if (!want.is_session()) return fail("queued channel typed as a sort");
            auto ct = env2.linear.find(*c);
            if (ct == env2.linear.end())
              return fail("queued channel '" + *c + "' not in the session environment");
            if (!payload_sub(want, Payload(ct->second), mode, budget).yes())
              return fail("queued channel '" + *c + "' payload mismatch");
            env2.linear.erase(ct);
          } else {
            if (!want.is_sort()) return fail("queued value typed as a session");
            std::optional<Sort> s;
            if (std::holds_alternative<Value>(content))
              s = sort_of_value(std::get<Value>(content));
            if (!s || !subsort(*s, want.sort()))
              return fail("queued value sort mismatch at position " + std::to_string(i));
          }
        }
        return residual_end(env2, "t-message-q");
      }
    }
    return fail("unhandled process form");
  }

  std::optional<TypeRef> shared_carried(const ProcRef& scope, const std::string& s) {
    std::optional<TypeRef> carried;
    bool bad = false;
    std::function<void(const ProcRef&)> scan = [&](const ProcRef& q) {
      if (bad) return;
      switch (q->kind) {
        case ProcKind::Accept:
        case ProcKind::Request: {
          auto sh = shared_chan_of(q->subject);
          if (sh && *sh == s) {
            auto t = synth(q->left, q->bound);
            if (!t) {
              bad = true;
              return;
            }
            TypeRef c = q->kind == ProcKind::Accept ? *t : dual(*t);
            if (!carried)
              carried = c;
            else if (!type_equal(*carried, c))
              bad = true;
          }
          scan(q->left);
          return;
        }
        case ProcKind::Input:
          for (const auto& b : q->branches) scan(b.body);
          return;
        case ProcKind::Par:
        case ProcKind::Choice:
        case ProcKind::Cond:
          scan(q->left);
          scan(q->right);
          return;
        case ProcKind::Def:
          scan(q->def_body);
          scan(q->left);
          return;
        case ProcKind::OutputChan:
        case ProcKind::OutputExpr:
        case ProcKind::NewLinear:
        case ProcKind::NewShared:
          scan(q->left);
          return;
        default:
          return;
      }
    };
    scan(scope);
    if (bad || !carried) {
      fail("cannot determine the carried type of shared channel '" + s + "'");
      return std::nullopt;
    }
    return carried;
  }

  bool check_par(const ProcRef& p, SessionEnv env) {
    // split linear entries by free occurrence; queue entries follow their
    // queue thread; entries used by neither side must be end and go left
    std::set<std::string> lf = free_channels(p->left);
    std::set<std::string> rf = free_channels(p->right);
    SessionEnv le, re;
    for (const auto& [u, t] : env.linear) {
      if (lf.count(u))
        le.linear[u] = t;
      else if (rf.count(u))
        re.linear[u] = t;
      else
        le.linear[u] = t;
    }
    auto owns_queue = [](const ProcRef& side, const std::string& a, const std::string& b) {
      bool found = false;
      std::function<void(const ProcRef&)> scan = [&](const ProcRef& q) {
        if (found) return;
        switch (q->kind) {
          case ProcKind::Queue:
            if (q->q_from == a && q->q_to == b) found = true;
            return;
          case ProcKind::Par:
          case ProcKind::Choice:
          case ProcKind::Cond:
            scan(q->left);
            scan(q->right);
            return;
          case ProcKind::Def:
            scan(q->def_body);
            scan(q->left);
            return;
          case ProcKind::Input:
            for (const auto& br : q->branches) scan(br.body);
            return;
          case ProcKind::Nil:
          case ProcKind::Error:
          case ProcKind::Invoke:
            return;
          default:
            scan(q->left);
            return;
        }
      };
      scan(side);
      return found;
    };
    for (const auto& [ab, q] : env.queues) {
      if (owns_queue(p->left, ab.first, ab.second))
        le.queues[ab] = q;
      else if (owns_queue(p->right, ab.first, ab.second))
        re.queues[ab] = q;
      else
        return fail("queue type <" + ab.first + "," + ab.second + "> has no queue thread");
    }
    return check(p->left, le) && check(p->right, re);
  }

  bool check_new_linear(const ProcRef& p, SessionEnv env) {
    const std::string& a = p->nu_a;
    const std::string& b = p->nu_b;
    const ProcRef& scope = p->left;

    // queue types of the bound pair, from the syntactic queues in scope
    std::optional<QueueType> t_ab, t_ba;
    bool dup = false;
    std::function<void(const ProcRef&)> find_queues = [&](const ProcRef& q) {
      switch (q->kind) {
        case ProcKind::Queue: {
          if (q->q_from == a && q->q_to == b) {
            if (t_ab) dup = true;
            QueueType qt;
            for (const auto& m : q->items) {
              if (auto c = linear_chan_of(m.content)) {
                auto it = env.linear.find(*c);
                if (it != env.linear.end())
                  qt.items.emplace_back(m.label, Payload(it->second));
                else
                  qt.items.emplace_back(m.label, Payload(t_end()));  // resolved later
              } else if (std::holds_alternative<Value>(m.content)) {
                auto s = sort_of_value(std::get<Value>(m.content));
                qt.items.emplace_back(m.label, s ? Payload(*s) : Payload(t_end()));
              }
            }
            t_ab = qt;
          } else if (q->q_from == b && q->q_to == a) {
            if (t_ba) dup = true;
            QueueType qt;
            for (const auto& m : q->items) {
              if (auto c = linear_chan_of(m.content)) {
                auto it = env.linear.find(*c);
                if (it != env.linear.end())
                  qt.items.emplace_back(m.label, Payload(it->second));
                else
                  qt.items.emplace_back(m.label, Payload(t_end()));
              } else if (std::holds_alternative<Value>(m.content)) {
                auto s = sort_of_value(std::get<Value>(m.content));
                qt.items.emplace_back(m.label, s ? Payload(*s) : Payload(t_end()));
              }
            }
            t_ba = qt;
          }
          return;
        }
        case ProcKind::Par:
          find_queues(q->left);
          find_queues(q->right);
          return;
        case ProcKind::Def:
          find_queues(q->left);
          return;
        case ProcKind::NewLinear:
        case ProcKind::NewShared:
          find_queues(q->left);
          return;
        default:
          return;
      }
    };
    find_queues(scope);
    if (dup) return fail("duplicate queues for the restricted pair (" + a + "," + b + ")");

    std::optional<TypeRef> ta, tb;
    if (subject_rooted(scope, a)) ta = synth(scope, a);
    if (subject_rooted(scope, b)) tb = synth(scope, b);
    if (subject_rooted(scope, a) && !ta) return false;
    if (subject_rooted(scope, b) && !tb) return false;

    QueueType q_ab = t_ab.value_or(QueueType{});
    QueueType q_ba = t_ba.value_or(QueueType{});

    if (!ta && !tb) {
      ta = t_end();
      tb = t_end();
    } else if (!ta) {
      auto rb = remainder(*tb, q_ab, budget);
      if (!rb) return fail("remainder undefined for '" + b + "'");
      if (!q_ba.items.empty())
        return fail("cannot synthesise a type for '" + a + "' behind a nonempty queue");
      ta = dual(*rb);
    } else if (!tb) {
      auto ra = remainder(*ta, q_ba, budget);
      if (!ra) return fail("remainder undefined for '" + a + "'");
      if (!q_ab.items.empty())
        return fail("cannot synthesise a type for '" + b + "' behind a nonempty queue");
      tb = dual(*ra);
    }

    if (mode_is_async(mode)) {
      if (!t_ab || !t_ba)
        return fail("restricted pair (" + a + "," + b + ") lacks its queues (t-new-async)");
      auto ra = remainder(*ta, q_ba, budget);
      auto rb = remainder(*tb, q_ab, budget);
      if (!ra || !rb)
        return fail("session remainder undefined for the restricted pair (" + a + "," + b +
                    ")");
      if (!type_equal(*ra, dual(*rb)))
        return fail("remainders of (" + a + "," + b + ") are not dual: " + print_type(*ra) +
                    " vs " + print_type(*rb));
    } else {
      // t-new-sync: exists T1 >= min(a) with dual(T1) >= min(b); check by
      // seeding b at the dual of a's synthesised type
      if (subject_rooted(scope, a) && subject_rooted(scope, b)) {
        if (!sub_session(*ta, dual(*tb)))
          return fail("endpoints (" + a + "," + b + ") are not dual-compatible: " +
                      print_type(*ta) + " vs " + print_type(*tb));
        tb = dual(*ta);
      } else if (subject_rooted(scope, a)) {
        tb = dual(*ta);
      } else if (subject_rooted(scope, b)) {
        ta = dual(*tb);
      }
    }

    SessionEnv env2 = env;
    env2.linear[a] = *ta;
    env2.linear[b] = *tb;
    if (mode_is_async(mode)) {
      env2.queues[{a, b}] = q_ab;
      env2.queues[{b, a}] = q_ba;
    }
    return check(scope, env2);
  }
};

}  // namespace detail

inline bool contains_error(const ProcRef& p) {
  switch (p->kind) {
    case ProcKind::Error:
      return true;
    case ProcKind::Input:
      for (const auto& b : p->branches)
        if (contains_error(b.body)) return true;
      return false;
    case ProcKind::Par:
    case ProcKind::Choice:
    case ProcKind::Cond:
      return contains_error(p->left) || contains_error(p->right);
    case ProcKind::Def:
      return contains_error(p->def_body) || contains_error(p->left);
    case ProcKind::OutputChan:
    case ProcKind::OutputExpr:
    case ProcKind::NewLinear:
    case ProcKind::NewShared:
    case ProcKind::Accept:
    case ProcKind::Request:
      return contains_error(p->left);
    default:
      return false;
  }
}

inline TypecheckResult typecheck(const SharedEnv& gamma, const ProcRef& p,
                                 const SessionEnv& env, Mode mode, const Budget& budget = {}) {
  TypecheckResult r;
  if (contains_error(p)) {
    r.ok = false;
    r.diagnostics.push_back("error has no type");
    return r;
  }
  try {
    syntax_check(p, mode);
  } catch (const std::exception& e) {
    r.ok = false;
    r.diagnostics.push_back(e.what());
    return r;
  }
  detail::Checker c;
  c.gamma = gamma;
  c.mode = mode;
  c.budget = budget;
  r.ok = c.check(p, env);
  r.diagnostics = std::move(c.diags);
  return r;
}

// ---------------------------------------------------------------------------
// Reduction of asynchronous session environments (tr-in, tr-out; tr-res is
// implicit in the flat representation)

inline std::vector<SessionEnv> env_reduce(const SessionEnv& env, const Budget& budget = {}) {
  std::vector<SessionEnv> out;
  std::set<std::string> seen;
  auto emit = [&](SessionEnv next) {
    std::string key = print_env(next);
    if (seen.insert(key).second) out.push_back(std::move(next));
  };

  // tr-in
  for (const auto& [ab, q] : env.queues) {
    if (q.items.empty()) continue;
    const std::string& b = ab.second;
    auto bt = env.linear.find(b);
    if (bt == env.linear.end()) continue;
    TypeRef w = unfold(bt->second);
    if (w->kind != TypeKind::Branch) continue;
    const auto& [label, payload] = q.items.front();
    for (const auto& e : w->entries) {
      if (e.label != label) continue;
      if (!payload_sub(e.payload, payload, Mode::Async, budget).yes()) break;
      SessionEnv next = env;
      next.linear[b] = e.cont;
      next.queues[ab].items.erase(next.queues[ab].items.begin());
      emit(std::move(next));
      break;
    }
  }

  // tr-out: one reduct per output label, through the maximal decomposition
  for (const auto& [ab, q] : env.queues) {
    (void)q;
    const std::string& a = ab.first;
    auto at = env.linear.find(a);
    if (at == env.linear.end()) continue;
    auto dec = decompose_context(at->second, budget.max_unfold);
    if (!dec) continue;
    std::vector<int> holes;
    context_holes(dec->ctx, holes);
    // candidate labels: present in every hole
    std::map<std::string, std::size_t> label_count;
    for (int h : holes)
      for (const auto& e : dec->holes.at(h)->entries) ++label_count[e.label];
    for (const auto& [label, count] : label_count) {
      if (count != holes.size()) continue;
      // the payload supertype: first qualifying hole's payload (recorded
      // choice; alternatives exist when several labels qualify)
      const TypeEntry* first = nullptr;
      for (const auto& e : dec->holes.at(holes.front())->entries)
        if (e.label == label) first = &e;
      const Payload& s = first->payload;
      bool ok = true;
      std::map<int, TypeRef> fills;
      for (int h : holes) {
        const TypeEntry* he = nullptr;
        for (const auto& e : dec->holes.at(h)->entries)
          if (e.label == label) he = &e;
        if (!payload_sub(he->payload, s, Mode::Async, budget).yes()) {
          ok = false;
          break;
        }
        fills[h] = he->cont;
      }
      if (!ok) continue;
      SessionEnv next = env;
      next.linear[a] = fill_context(dec->ctx, fills, TypeKind::Branch);
      next.queues[ab].items.emplace_back(label, s);
      emit(std::move(next));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Environment literal for the CLI:
//   a: T, b: S, queue a b : [l<S>], s: <T>, x: nat

struct ParsedEnv {
  SessionEnv session;
  SharedEnv shared;
};

inline ParsedEnv parse_env(std::string_view text) {
  ParsedEnv out;
  std::vector<std::string> parts;
  int depth = 0;
  std::string cur;
  for (char c : text) {
    if (c == '{' || c == '<' || c == '[' || c == '(') ++depth;
    if (c == '}' || c == '>' || c == ']' || c == ')') --depth;
    if (c == ',' && depth == 0) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) parts.push_back(cur);

  auto trim = [](std::string s) {
    std::size_t b = s.find_first_not_of(" \t\n");
    std::size_t e = s.find_last_not_of(" \t\n");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };

  for (auto& raw : parts) {
    std::string part = trim(raw);
    if (part.empty()) continue;
    if (part.rfind("queue", 0) == 0) {
      std::istringstream is(part.substr(5));
      std::string a, b, colon;
      is >> a >> b >> colon;
      if (colon != ":") throw ParseError("expected ':' in queue entry", 0);
      std::string rest;
      std::getline(is, rest);
      rest = trim(rest);
      if (rest.empty() || rest.front() != '[' || rest.back() != ']')
        throw ParseError("expected [items] in queue entry", 0);
      QueueType q;
      std::string items = rest.substr(1, rest.size() - 2);
      // split items at depth 0
      std::vector<std::string> elems;
      int d = 0;
      std::string e;
      for (char c : items) {
        if (c == '{' || c == '<' || c == '(') ++d;
        if (c == '}' || c == '>' || c == ')') --d;
        if (c == ',' && d == 0) {
          elems.push_back(e);
          e.clear();
        } else {
          e += c;
        }
      }
      if (!trim(e).empty()) elems.push_back(e);
      for (auto& el : elems) {
        std::string item = trim(el);
        auto lt = item.find('<');
        if (lt == std::string::npos || item.back() != '>')
          throw ParseError("queue item must be label<payload>", 0);
        std::string label = trim(item.substr(0, lt));
        std::string payload = item.substr(lt + 1, item.size() - lt - 2);
        std::string pt = trim(payload);
        if (pt == "bool")
          q.items.emplace_back(label, Payload(Sort{BaseSort::Bool, nullptr}));
        else if (pt == "nat")
          q.items.emplace_back(label, Payload(Sort{BaseSort::Nat, nullptr}));
        else if (pt == "int")
          q.items.emplace_back(label, Payload(Sort{BaseSort::Int, nullptr}));
        else
          q.items.emplace_back(label, Payload(parse_type(pt)));
      }
      out.session.queues[{a, b}] = q;
      continue;
    }
    auto colon = part.find(':');
    if (colon == std::string::npos) throw ParseError("expected ':' in environment entry", 0);
    std::string name = trim(part.substr(0, colon));
    std::string ty = trim(part.substr(colon + 1));
    if (ty == "bool")
      out.shared.sorts[name] = Sort{BaseSort::Bool, nullptr};
    else if (ty == "nat")
      out.shared.sorts[name] = Sort{BaseSort::Nat, nullptr};
    else if (ty == "int")
      out.shared.sorts[name] = Sort{BaseSort::Int, nullptr};
    else if (!ty.empty() && ty.front() == '<' && ty.back() == '>')
      out.shared.sorts[name] =
          Sort{BaseSort::Shared, parse_type(ty.substr(1, ty.size() - 2))};
    else
      out.session.linear[name] = parse_type(ty);
  }
  return out;
}

}  // namespace sesst
