#pragma once

// Characteristic processes for the synchronous, asynchronous and extended
// calculi, and automatic counterexample synthesis: every non-subtype pair is
// compiled, through its negation derivation, into a closed composition that
// reduces to error penalty-free, which the bounded semantics then verifies.

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "sesst/process.hpp"
#include "sesst/semantics.hpp"
#include "sesst/subtyping.hpp"
#include "sesst/type.hpp"

namespace sesst {

class NameSupply {
public:
  explicit NameSupply(std::set<std::string> used = {}) : used_(std::move(used)) {}

  void reserve(const std::string& n) { used_.insert(n); }

  std::string fresh(const std::string& base) {
    if (used_.insert(base).second) return base;
    for (int i = 1;; ++i) {
      std::string cand = base + std::to_string(i);
      if (used_.insert(cand).second) return cand;
    }
  }

private:
  std::set<std::string> used_;
};

inline bool type_has_sorts(const TypeRef& t) {
  switch (t->kind) {
    case TypeKind::End:
    case TypeKind::Var:
      return false;
    case TypeKind::Mu:
      return type_has_sorts(t->body);
    case TypeKind::Branch:
    case TypeKind::Select:
      for (const auto& e : t->entries) {
        if (e.payload.is_sort()) return true;
        if (type_has_sorts(e.payload.session())) return true;
        if (type_has_sorts(e.cont)) return true;
      }
      return false;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Characteristic processes (Defs 3.1 / 5.1 / 7.2): the output clause adds the
// two fresh queues in the asynchronous calculi; sort payloads probe the value
// with a conditional (input side) or send a canonical value (output side).

namespace detail {

inline ProcRef char_rec(const Id& u, const TypeRef& t, bool async, NameSupply& ns,
                        std::map<std::string, std::string> recvars);

inline ProcRef char_input_branch_body(const Id& u, const TypeEntry& e, bool async,
                                      NameSupply& ns,
                                      const std::map<std::string, std::string>& recvars,
                                      std::string& bound_out) {
  if (e.payload.is_session()) {
    std::string x = ns.fresh("x");
    bound_out = x;
    return p_par(char_rec(u, e.cont, async, ns, recvars),
                 char_rec(Id{x, IdKind::Variable}, e.payload.session(), async, ns, recvars));
  }
  const Sort& s = e.payload.sort();
  std::string x = ns.fresh("x");
  bound_out = x;
  switch (s.base) {
    case BaseSort::Bool:
      return p_cond(e_un(Expr::Kind::Not, e_var(x)),
                    char_rec(u, e.cont, async, ns, recvars),
                    char_rec(u, e.cont, async, ns, recvars));
    case BaseSort::Nat:
      return p_cond(e_gt(e_un(Expr::Kind::Succ, e_var(x)), e_val(v_int(0))),
                    char_rec(u, e.cont, async, ns, recvars),
                    char_rec(u, e.cont, async, ns, recvars));
    case BaseSort::Int:
      return p_cond(e_gt(e_un(Expr::Kind::Neg, e_var(x)), e_val(v_int(0))),
                    char_rec(u, e.cont, async, ns, recvars),
                    char_rec(u, e.cont, async, ns, recvars));
    case BaseSort::Shared: {
      std::string y = ns.fresh("y");
      std::string z = ns.fresh("z");
      return p_par(
          char_rec(u, e.cont, async, ns, recvars),
          p_par(p_accept(Id{x, IdKind::Variable}, y,
                         char_rec(Id{y, IdKind::Variable}, s.carried, async, ns, recvars)),
                p_request(Id{x, IdKind::Variable}, z,
                          char_rec(Id{z, IdKind::Variable}, dual(s.carried), async, ns,
                                   recvars))));
    }
  }
  return p_nil();
}

inline ProcRef char_output_summand(const Id& u, const TypeEntry& e, bool async, NameSupply& ns,
                                   const std::map<std::string, std::string>& recvars) {
  if (e.payload.is_session()) {
    std::string a = ns.fresh("c");
    std::string b = ns.fresh("d");
    ProcRef body = p_par(
        p_out_chan(u, e.label, Id{a, IdKind::Linear}, char_rec(u, e.cont, async, ns, recvars)),
        char_rec(Id{b, IdKind::Linear}, dual(e.payload.session()), async, ns, recvars));
    if (async) body = p_par(p_par(body, p_queue(b, a, {})), p_queue(a, b, {}));
    return p_new(a, b, body);
  }
  const Sort& s = e.payload.sort();
  switch (s.base) {
    case BaseSort::Bool:
      return p_out_expr(u, e.label, e_val(v_true()), char_rec(u, e.cont, async, ns, recvars));
    case BaseSort::Nat:
      return p_out_expr(u, e.label, e_val(v_int(5)), char_rec(u, e.cont, async, ns, recvars));
    case BaseSort::Int:
      return p_out_expr(u, e.label, e_val(v_int(-5)), char_rec(u, e.cont, async, ns, recvars));
    case BaseSort::Shared: {
      std::string sh = ns.fresh("s");
      std::string y = ns.fresh("y");
      std::string z = ns.fresh("z");
      ProcRef body = p_out_chan(
          u, e.label, Id{sh, IdKind::Shared},
          p_par(char_rec(u, e.cont, async, ns, recvars),
                p_par(p_accept(Id{sh, IdKind::Shared}, y,
                               char_rec(Id{y, IdKind::Variable}, s.carried, async, ns,
                                        recvars)),
                      p_request(Id{sh, IdKind::Shared}, z,
                                char_rec(Id{z, IdKind::Variable}, dual(s.carried), async, ns,
                                         recvars)))));
      return p_news(sh, body);
    }
  }
  return p_nil();
}

inline ProcRef char_rec(const Id& u, const TypeRef& t, bool async, NameSupply& ns,
                        std::map<std::string, std::string> recvars) {
  switch (t->kind) {
    case TypeKind::End:
      return p_nil();
    case TypeKind::Var: {
      auto it = recvars.find(t->name);
      if (it == recvars.end())
        throw std::invalid_argument("characteristic process of an open type: variable '" +
                                    t->name + "'");
      return p_invoke(it->second, {InvArg(UVal(u))});
    }
    case TypeKind::Mu: {
      std::string x = ns.fresh("x");
      std::string proc = ns.fresh("X_" + t->name);
      recvars[t->name] = proc;
      ProcRef body = char_rec(Id{x, IdKind::Variable}, t->body, async, ns, recvars);
      return p_def(proc, {x}, body, p_invoke(proc, {InvArg(UVal(u))}));
    }
    case TypeKind::Branch: {
      std::vector<InputBranch> branches;
      for (const auto& e : t->entries) {
        std::string bound;
        ProcRef body = char_input_branch_body(u, e, async, ns, recvars, bound);
        branches.push_back({e.label, bound, body});
      }
      return p_input(u, std::move(branches));
    }
    case TypeKind::Select: {
      ProcRef acc = nullptr;
      for (auto it = t->entries.rbegin(); it != t->entries.rend(); ++it) {
        ProcRef summand = char_output_summand(u, *it, async, ns, recvars);
        acc = acc ? p_choice(summand, acc) : summand;
      }
      return acc;
    }
  }
  return p_nil();
}

}  // namespace detail

inline ProcRef char_proc(const std::string& u, const TypeRef& t, Mode mode) {
  NameSupply ns({u});
  return detail::char_rec(Id{u, IdKind::Linear}, t, mode_is_async(mode), ns, {});
}

inline ProcRef char_proc_sync(const std::string& u, const TypeRef& t) {
  return char_proc(u, t, Mode::Sync);
}
inline ProcRef char_proc_async(const std::string& u, const TypeRef& t) {
  return char_proc(u, t, Mode::Async);
}
inline ProcRef char_proc_ext(const std::string& u, const TypeRef& t, bool async = false) {
  return char_proc(u, t, async ? Mode::ExtAsync : Mode::ExtSync);
}

// The closed composition used by both preciseness legs.
inline ProcRef compose_characteristic(const TypeRef& left, const TypeRef& right_dual,
                                      Mode mode) {
  ProcRef pa = char_proc("a", left, mode);
  ProcRef pb = char_proc("b", right_dual, mode);
  ProcRef body = p_par(pa, pb);
  if (mode_is_async(mode)) body = p_par(p_par(body, p_queue("b", "a", {})), p_queue("a", "b", {}));
  return p_new("a", "b", body);
}

// ---------------------------------------------------------------------------
// Derivation-directed adjustment (Theorems 3.5 / 5.8). The derivation is a
// single-premise chain; the only rules that force an adjustment are
// n-bra-async and n-sel-async, whose pruned types propagate positionally up
// the chain. All other rules keep both sides unchanged.

namespace detail {

struct Adjust {
  TypeRef t_adj;   // left composition type, a sync-subtype of the node's lhs
  TypeRef v_adj;   // right composition type, a sync-subtype of dual(rhs)
  int side = 0;    // 0 none, 1 left changed, 2 right changed
};

inline TypeRef with_entry(const TypeRef& t, const std::string& label, bool payload,
                          const TypeRef& sub) {
  TypeRef w = unfold(t);
  std::vector<TypeEntry> entries;
  for (const auto& e : w->entries) {
    if (e.label == label) {
      if (payload)
        entries.push_back({e.label, Payload(sub), e.cont});
      else
        entries.push_back({e.label, e.payload, sub});
    } else {
      entries.push_back(e);
    }
  }
  return w->kind == TypeKind::Branch ? t_branch(std::move(entries))
                                     : t_select(std::move(entries));
}

// Replace, inside `t`, the payload or continuation of `label` at the select
// found at the end of the branching `path`.
inline TypeRef replace_under_path(const TypeRef& t, const std::vector<std::string>& path,
                                  std::size_t i, const std::string& label, bool payload,
                                  const TypeRef& sub) {
  TypeRef w = unfold(t);
  if (i == path.size()) return with_entry(w, label, payload, sub);
  std::vector<TypeEntry> entries;
  for (const auto& e : w->entries) {
    if (e.label == path[i])
      entries.push_back({e.label, e.payload, replace_under_path(e.cont, path, i + 1, label,
                                                                payload, sub)});
    else
      entries.push_back(e);
  }
  return w->kind == TypeKind::Branch ? t_branch(std::move(entries))
                                     : t_select(std::move(entries));
}

// Rebuild the right-hand composition type for the n-cont-async case when the
// inner adjustment touched the filled context: walk the (possibly pruned)
// inner type along the context; at each hole, re-attach the full branch set
// of dual(S) there, with the chosen label's continuation taken from the
// inner type.
inline TypeRef embed_in_dual(const TypeRef& inner, const AsyncContextRef& ctx,
                             const TypeRef& s_at_ctx, const std::string& label) {
  if (ctx->is_hole) {
    TypeRef hole = unfold(s_at_ctx);  // the Select in S at this hole
    std::vector<TypeEntry> entries;
    for (const auto& e : hole->entries) {
      if (e.label == label)
        entries.push_back({e.label, e.payload, inner});
      else
        entries.push_back({e.label, e.payload, dual(e.cont)});
    }
    return t_branch(std::move(entries));
  }
  TypeRef w = unfold(inner);  // select node mirroring the dual context
  TypeRef s = unfold(s_at_ctx);
  std::vector<TypeEntry> entries;
  for (const auto& ie : w->entries) {
    const AsyncContextEntry* ce = nullptr;
    for (const auto& c : ctx->entries)
      if (c.label == ie.label) ce = &c;
    const TypeEntry* se = nullptr;
    for (const auto& e : s->entries)
      if (e.label == ie.label) se = &e;
    if (!ce || !se)
      throw std::logic_error("embed_in_dual: inner type does not match the context");
    entries.push_back({ie.label, ie.payload, embed_in_dual(ie.cont, ce->cont, se->cont, label)});
  }
  return t_select(std::move(entries));
}

inline Adjust adjust(const Derivation& d, const Budget& budget) {
  const std::string& r = d.rule;
  auto none = [&]() { return Adjust{d.lhs, dual(d.rhs), 0}; };

  if (r == "n-end r" || r == "n-end l" || r == "n-brasel" || r == "n-selbra-sync" ||
      r == "n-label-bra" || r == "n-label-sel" || r == "n-label-async")
    return none();
  if (r == "n-bra-async") return {prune_branchless(d.lhs), dual(d.rhs), 1};
  if (r == "n-sel-async") return {d.lhs, prune_branchless(dual(d.rhs)), 2};

  if (d.premises.empty()) {
    // sort-payload mismatch leaves (extension): no adjustment
    return none();
  }
  Adjust sub = adjust(d.premises[0], budget);
  const std::string label = d.witness.count("label") ? d.witness.at("label") : "";

  if (r == "n-exch-bra")
    return {with_entry(d.lhs, label, true, sub.t_adj),
            with_entry(dual(d.rhs), label, true, dual(sub.v_adj)), sub.side};
  if (r == "n-cont-bra" || r == "n-cont-sel")
    return {with_entry(d.lhs, label, false, sub.t_adj),
            with_entry(dual(d.rhs), label, false, sub.v_adj), sub.side};
  if (r == "n-exch-sel")
    return {with_entry(d.lhs, label, true, dual(sub.v_adj)),
            with_entry(dual(d.rhs), label, true, sub.t_adj),
            sub.side == 0 ? 0 : (sub.side == 1 ? 2 : 1)};
  if (r == "n-exch-async") {
    // premise pair is (hole payload, lhs payload): sides swap
    auto dec = decompose_context(d.rhs, budget.max_unfold);
    if (!dec) throw std::logic_error("adjust: context vanished for n-exch-async");
    int hole = std::stoi(d.witness.at("hole"));
    const std::vector<std::string>& path = dec->paths.at(hole);
    TypeRef s_adj = replace_under_path(d.rhs, path, 0, label, true, sub.t_adj);
    return {with_entry(d.lhs, label, true, dual(sub.v_adj)), dual(s_adj),
            sub.side == 0 ? 0 : (sub.side == 1 ? 2 : 1)};
  }
  if (r == "n-cont-async") {
    TypeRef t_adj = with_entry(d.lhs, label, false, sub.t_adj);
    if (sub.side != 2) return {t_adj, dual(d.rhs), sub.side};
    auto dec = decompose_context(d.rhs, budget.max_unfold);
    if (!dec) throw std::logic_error("adjust: context vanished for n-cont-async");
    TypeRef v_adj = embed_in_dual(sub.v_adj, dec->ctx, unfold(d.rhs), label);
    return {t_adj, v_adj, 2};
  }
  throw std::logic_error("adjust: unknown rule " + r);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Counterexample reports

struct CounterexampleReport {
  Mode mode = Mode::Sync;
  TypeRef lhs, rhs;
  TriBool subtype;                      // verdict of the mode's relation
  std::optional<Derivation> negation;
  TypeRef adjusted_lhs;                 // T'  (<=s lhs)
  TypeRef adjusted_rhs_dual;            // S'  (<=s dual rhs)
  std::string changed = "none";         // left | right | none
  ProcRef composed;                     // set when a negation was found
  SearchOutcome outcome = NoErrorProven{0};
};

inline CounterexampleReport counterexample(const TypeRef& t, const TypeRef& s, Mode mode,
                                           const Budget& budget = {},
                                           const Bounds& bounds = {}) {
  CounterexampleReport rep;
  // sort payloads need the extended calculus to run
  if ((type_has_sorts(t) || type_has_sorts(s)) && !mode_is_ext(mode))
    mode = mode_is_async(mode) ? Mode::ExtAsync : Mode::ExtSync;
  rep.mode = mode;
  rep.lhs = t;
  rep.rhs = s;

  std::optional<Derivation> neg;
  if (mode_is_async(mode)) {
    AsyncResult ar = async_check(t, s, budget);
    rep.subtype = ar.verdict;
    neg = std::move(ar.negation);
  } else {
    bool yes = sync_subtype(t, s);
    rep.subtype = {yes ? Verdict::Yes : Verdict::No, ""};
    if (!yes) neg = sync_negation(t, s);
  }
  if (!neg) return rep;  // subtype holds or budget ran out: nothing to compose
  rep.negation = neg;

  detail::Adjust adj = detail::adjust(*neg, budget);
  rep.adjusted_lhs = adj.t_adj;
  rep.adjusted_rhs_dual = adj.v_adj;
  rep.changed = adj.side == 0 ? "none" : (adj.side == 1 ? "left" : "right");

  rep.composed = compose_characteristic(adj.t_adj, adj.v_adj, mode);
  rep.outcome = reach_error(rep.composed, mode, bounds);
  return rep;
}

// ---------------------------------------------------------------------------
// Preciseness check: the sound leg verifies that the canonical composition of
// subtype-related processes never errs within bounds; the complete leg
// verifies that a counterexample composition errs.

struct PrecisenessReport {
  Mode mode = Mode::Sync;
  TypeRef lhs, rhs;
  TriBool subtype;
  bool sound_leg = false;     // ran the soundness side
  bool complete_leg = false;  // ran the completeness side
  SearchOutcome sound_outcome = NoErrorProven{0};
  CounterexampleReport completeness;
  bool pass = false;
};

inline PrecisenessReport preciseness_check(const TypeRef& t, const TypeRef& s, Mode mode,
                                           const Budget& budget = {},
                                           const Bounds& bounds = {}) {
  PrecisenessReport rep;
  if ((type_has_sorts(t) || type_has_sorts(s)) && !mode_is_ext(mode))
    mode = mode_is_async(mode) ? Mode::ExtAsync : Mode::ExtSync;
  rep.mode = mode;
  rep.lhs = t;
  rep.rhs = s;

  if (mode_is_async(mode))
    rep.subtype = async_subtype(t, s, budget);
  else
    rep.subtype = {sync_subtype(t, s) ? Verdict::Yes : Verdict::No, ""};

  if (rep.subtype.yes()) {
    rep.sound_leg = true;
    rep.sound_outcome = reach_error(compose_characteristic(t, dual(s), mode), mode, bounds);
    rep.pass = !error_reached(rep.sound_outcome);
    return rep;
  }
  if (rep.subtype.no()) {
    rep.complete_leg = true;
    rep.completeness = counterexample(t, s, mode, budget, bounds);
    rep.pass = error_reached(rep.completeness.outcome);
    return rep;
  }
  return rep;  // unknown: neither leg decided
}

}  // namespace sesst
