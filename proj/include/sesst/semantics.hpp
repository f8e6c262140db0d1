#pragma once

// Operational semantics for the four calculus variants: expression
// evaluation, one-step reduction modulo structural congruence with error-rule
// detection on the pre-step state, and breadth-first error reachability.

#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "sesst/process.hpp"

namespace sesst {

// Expression evaluation, Table "evaluation": succ only on naturals, neg on
// integers, not on booleans, > on integers. Absent means stuck.
inline std::optional<Value> eval_expr(const ExprRef& e) {
  switch (e->kind) {
    case Expr::Kind::Val:
      return e->val;
    case Expr::Kind::Var:
    case Expr::Kind::Chan:
      return std::nullopt;
    case Expr::Kind::Not: {
      auto v = eval_expr(e->a);
      if (!v) return std::nullopt;
      if (v->kind == Value::Kind::True) return v_false();
      if (v->kind == Value::Kind::False) return v_true();
      return std::nullopt;
    }
    case Expr::Kind::Succ: {
      auto v = eval_expr(e->a);
      if (!v || v->kind != Value::Kind::Int || v->num < 0) return std::nullopt;
      return v_int(v->num + 1);
    }
    case Expr::Kind::Neg: {
      auto v = eval_expr(e->a);
      if (!v || v->kind != Value::Kind::Int) return std::nullopt;
      return v_int(-v->num);
    }
    case Expr::Kind::Gt: {
      auto a = eval_expr(e->a);
      auto b = eval_expr(e->b);
      if (!a || !b || a->kind != Value::Kind::Int || b->kind != Value::Kind::Int)
        return std::nullopt;
      return a->num > b->num ? v_true() : v_false();
    }
  }
  return std::nullopt;
}

inline bool expr_stuck(const ExprRef& e) { return !eval_expr(e).has_value(); }

// ---------------------------------------------------------------------------
// Syntax/mode compatibility

inline void syntax_check(const ProcRef& p, Mode mode) {
  const bool async = mode_is_async(mode);
  const bool ext = mode_is_ext(mode);
  switch (p->kind) {
    case ProcKind::Queue:
      if (!async) throw std::invalid_argument("queue term is not part of the synchronous calculus");
      return;
    case ProcKind::OutputExpr:
    case ProcKind::Cond:
      if (!ext) throw std::invalid_argument("expression constructs require the extended calculus");
      syntax_check(p->left, mode);
      if (p->kind == ProcKind::Cond) syntax_check(p->right, mode);
      return;
    case ProcKind::Accept:
    case ProcKind::Request:
    case ProcKind::NewShared:
      if (!ext)
        throw std::invalid_argument("session initialisation requires the extended calculus");
      syntax_check(p->left, mode);
      return;
    case ProcKind::Invoke:
      if (!ext) {
        for (const auto& a : p->args)
          if (std::holds_alternative<ExprRef>(a))
            throw std::invalid_argument("expression arguments require the extended calculus");
      }
      return;
    case ProcKind::Input:
      for (const auto& b : p->branches) syntax_check(b.body, mode);
      return;
    case ProcKind::OutputChan:
      syntax_check(p->left, mode);
      return;
    case ProcKind::Par:
    case ProcKind::Choice:
      syntax_check(p->left, mode);
      syntax_check(p->right, mode);
      return;
    case ProcKind::Def:
      syntax_check(p->def_body, mode);
      syntax_check(p->left, mode);
      return;
    case ProcKind::NewLinear:
      syntax_check(p->left, mode);
      return;
    default:
      return;
  }
}

// ---------------------------------------------------------------------------
// One-step reduction

struct StepResult {
  std::vector<std::pair<std::string, NormalForm>> successors;  // rule, reduct
  std::set<std::string> error_rules;                           // enabled on the pre-state
};

namespace detail {

inline ProcRef scope_process(const NormalForm& nf, std::optional<std::size_t> skip_thread) {
  // Threads (minus one, optionally) under the definitions, without
  // restrictions: the view err-new-sync / err-orph-mess-async inspect.
  ProcRef body = nullptr;
  for (std::size_t i = 0; i < nf.threads.size(); ++i) {
    if (skip_thread && *skip_thread == i) continue;
    body = body ? p_par(body, nf.threads[i]) : nf.threads[i];
  }
  if (!body) body = p_nil();
  for (auto it = nf.defs.rbegin(); it != nf.defs.rend(); ++it)
    body = p_def(it->name, it->params, it->body, body);
  for (auto it = nf.nu_shared.rbegin(); it != nf.nu_shared.rend(); ++it)
    body = p_news(*it, body);
  // inner restrictions other than the one under scrutiny
  return body;
}

inline std::string fresh_name(const std::string& base, std::set<std::string>& used) {
  for (int i = 1;; ++i) {
    std::string cand = base + std::to_string(i);
    if (used.insert(cand).second) return cand;
  }
}

inline std::set<std::string> all_names(const NormalForm& nf) {
  std::set<std::string> names;
  for (const auto& [a, b] : nf.nu_linear) {
    names.insert(a);
    names.insert(b);
  }
  for (const auto& s : nf.nu_shared) names.insert(s);
  for (const auto& d : nf.defs) {
    names.insert(d.name);
    for (const auto& n : free_channels(d.body)) names.insert(n);
    for (const auto& prm : d.params) names.insert(prm);
  }
  for (const auto& t : nf.threads)
    for (const auto& n : free_channels(t)) names.insert(n);
  return names;
}

struct StepBuilder {
  const NormalForm& nf;
  Mode mode;
  StepResult out;
  std::set<std::string> seen_keys;

  explicit StepBuilder(const NormalForm& n, Mode m) : nf(n), mode(m) {}

  // Replace thread `i` (and optionally `j`) with the given processes, add
  // extras, renormalise, and record the reduct.
  void emit(const std::string& rule, std::vector<std::pair<std::size_t, ProcRef>> replace,
            std::vector<ProcRef> extra = {},
            std::vector<std::pair<std::string, std::string>> new_linear = {}) {
    NormalForm next = nf;
    for (auto& [i, r] : replace) next.threads[i] = r ? r : p_nil();
    for (auto& e : extra) next.threads.push_back(e);
    for (auto& ab : new_linear) next.nu_linear.push_back(ab);
    NormalForm normal = normalize(to_process(next));
    std::string key = canonical_key(normal);
    if (seen_keys.insert(rule + "" + key).second)
      out.successors.emplace_back(rule, std::move(normal));
  }
};

inline const Definition* find_def(const NormalForm& nf, const std::string& name) {
  for (const auto& d : nf.defs)
    if (d.name == name) return &d;
  return nullptr;
}

inline bool input_has_label(const ProcRef& in, const std::string& label) {
  for (const auto& b : in->branches)
    if (b.label == label) return true;
  return false;
}

}  // namespace detail

inline StepResult step(const NormalForm& nf, Mode mode) {
  for (const auto& t : nf.threads) syntax_check(t, mode);
  for (const auto& d : nf.defs) syntax_check(d.body, mode);

  const bool async = mode_is_async(mode);
  const bool ext = mode_is_ext(mode);
  detail::StepBuilder sb(nf, mode);

  std::set<std::string> bound_pairs_fwd;  // "a b" for each restricted pair
  std::map<std::string, std::string> co;  // co-channel within a restricted pair
  for (const auto& [a, b] : nf.nu_linear) {
    co[a] = b;
    co[b] = a;
    bound_pairs_fwd.insert(a + " " + b);
  }

  auto subject_linear = [](const ProcRef& t) -> std::optional<std::string> {
    return linear_chan_of(t->subject);
  };

  // --- reductions -----------------------------------------------------------

  for (std::size_t i = 0; i < nf.threads.size(); ++i) {
    const ProcRef& t = nf.threads[i];
    switch (t->kind) {
      case ProcKind::Choice:
        sb.emit("r-choice", {{i, t->left}});
        sb.emit("r-choice", {{i, t->right}});
        break;
      case ProcKind::Invoke: {
        const Definition* d = detail::find_def(nf, t->invoke_name);
        if (!d || d->params.size() != t->args.size()) break;
        Subst s;
        bool ok = true, has_expr = false;
        for (std::size_t k = 0; k < d->params.size(); ++k) {
          if (std::holds_alternative<UVal>(t->args[k])) {
            s[d->params[k]] = std::get<UVal>(t->args[k]);
          } else {
            has_expr = true;
            auto v = eval_expr(std::get<ExprRef>(t->args[k]));
            if (!v) {
              ok = false;
              break;
            }
            s[d->params[k]] = *v;
          }
        }
        if (ok) sb.emit(has_expr ? "r-def-ext" : "r-def", {{i, substitute(d->body, s)}});
        break;
      }
      case ProcKind::Cond: {
        if (!ext) break;
        auto v = eval_expr(t->expr);
        if (v && v->kind == Value::Kind::True) sb.emit("r-t-cond", {{i, t->left}});
        if (v && v->kind == Value::Kind::False) sb.emit("r-f-cond", {{i, t->right}});
        break;
      }
      default:
        break;
    }
  }

  if (!async) {
    // r-com-sync / r-com-sync-ext: communication between restricted co-channels
    for (std::size_t i = 0; i < nf.threads.size(); ++i) {
      const ProcRef& ot = nf.threads[i];
      if (ot->kind != ProcKind::OutputChan && ot->kind != ProcKind::OutputExpr) continue;
      auto a = subject_linear(ot);
      if (!a || !co.count(*a)) continue;
      const std::string& b = co.at(*a);
      for (std::size_t j = 0; j < nf.threads.size(); ++j) {
        if (j == i) continue;
        const ProcRef& it = nf.threads[j];
        if (it->kind != ProcKind::Input) continue;
        auto subj = subject_linear(it);
        if (!subj || *subj != b) continue;
        for (const auto& br : it->branches) {
          if (br.label != ot->label) continue;
          if (ot->kind == ProcKind::OutputChan) {
            Subst s{{br.bound, ot->object}};
            sb.emit("r-com-sync", {{i, ot->left}, {j, substitute(br.body, s)}});
          } else {
            auto v = eval_expr(ot->expr);
            if (v) {
              Subst s{{br.bound, UVal(*v)}};
              sb.emit("r-com-sync-ext", {{i, ot->left}, {j, substitute(br.body, s)}});
            }
          }
        }
      }
    }
  } else {
    for (std::size_t q = 0; q < nf.threads.size(); ++q) {
      const ProcRef& qt = nf.threads[q];
      if (qt->kind != ProcKind::Queue) continue;
      // r-send-async: enqueue at the `from` end
      for (std::size_t i = 0; i < nf.threads.size(); ++i) {
        const ProcRef& ot = nf.threads[i];
        if (ot->kind != ProcKind::OutputChan && ot->kind != ProcKind::OutputExpr) continue;
        auto a = subject_linear(ot);
        if (!a || *a != qt->q_from) continue;
        std::vector<Message> items = qt->items;
        if (ot->kind == ProcKind::OutputChan) {
          items.push_back({ot->label, ot->object});
          sb.emit("r-send-async",
                  {{q, p_queue(qt->q_from, qt->q_to, std::move(items))}, {i, ot->left}});
        } else {
          auto v = eval_expr(ot->expr);
          if (v) {
            items.push_back({ot->label, UVal(*v)});
            sb.emit("r-send-async-ext",
                    {{q, p_queue(qt->q_from, qt->q_to, std::move(items))}, {i, ot->left}});
          }
        }
      }
      // r-receive-async: dequeue at the `to` end
      if (!qt->items.empty()) {
        const Message& head = qt->items.front();
        for (std::size_t j = 0; j < nf.threads.size(); ++j) {
          const ProcRef& it = nf.threads[j];
          if (it->kind != ProcKind::Input) continue;
          auto subj = subject_linear(it);
          if (!subj || *subj != qt->q_to) continue;
          for (const auto& br : it->branches) {
            if (br.label != head.label) continue;
            std::vector<Message> rest(qt->items.begin() + 1, qt->items.end());
            Subst s{{br.bound, head.content}};
            const char* rule =
                is_base_value(head.content) ? "r-receive-async-ext" : "r-receive-async";
            sb.emit(rule, {{q, p_queue(qt->q_from, qt->q_to, std::move(rest))},
                           {j, substitute(br.body, s)}});
          }
        }
      }
    }
  }

  if (ext) {
    // r-init: accept and request on the same shared channel
    for (std::size_t i = 0; i < nf.threads.size(); ++i) {
      const ProcRef& at = nf.threads[i];
      if (at->kind != ProcKind::Accept) continue;
      auto s1 = shared_chan_of(at->subject);
      if (!s1) continue;
      for (std::size_t j = 0; j < nf.threads.size(); ++j) {
        const ProcRef& rt = nf.threads[j];
        if (rt->kind != ProcKind::Request) continue;
        auto s2 = shared_chan_of(rt->subject);
        if (!s2 || *s1 != *s2) continue;
        std::set<std::string> used = detail::all_names(nf);
        std::string a = detail::fresh_name("a", used);
        std::string b = detail::fresh_name("b", used);
        Subst sa{{at->bound, UVal(Id{a, IdKind::Linear})}};
        Subst sr{{rt->bound, UVal(Id{b, IdKind::Linear})}};
        std::vector<ProcRef> extra;
        if (async) {
          extra.push_back(p_queue(b, a, {}));
          extra.push_back(p_queue(a, b, {}));
        }
        sb.emit(async ? "r-init-async" : "r-init-sync",
                {{i, substitute(at->left, sa)}, {j, substitute(rt->left, sr)}}, extra,
                {{a, b}});
      }
    }
  }

  // --- error rules on the pre-state -----------------------------------------

  auto& errs = sb.out.error_rules;
  for (const auto& t : nf.threads)
    if (t->kind == ProcKind::Error) errs.insert("err-context");

  if (!async) {
    for (const auto& [ra, rb] : nf.nu_linear) {
      for (const auto& [a, b] : {std::make_pair(ra, rb), std::make_pair(rb, ra)}) {
        const Process *out_a = nullptr, *in_a = nullptr, *out_b = nullptr, *in_b = nullptr;
        for (const auto& t : nf.threads) {
          auto subj = subject_linear(t);
          if (!subj) continue;
          if (t->kind == ProcKind::OutputChan || t->kind == ProcKind::OutputExpr) {
            if (*subj == a) out_a = t.get();
            if (*subj == b) out_b = t.get();
          } else if (t->kind == ProcKind::Input) {
            if (*subj == a) in_a = t.get();
            if (*subj == b) in_b = t.get();
          }
        }
        if (out_a && in_b) {
          bool match = false;
          for (const auto& br : in_b->branches)
            if (br.label == out_a->label) match = true;
          if (!match) errs.insert("err-mism-sync");
        }
        if (out_a && out_b) errs.insert("err-out-out-sync");
        if (in_a && in_b) errs.insert("err-in-in-sync");
        // err-new-sync, symmetric closure
        ProcRef scope = detail::scope_process(nf, std::nullopt);
        std::set<std::string> sc = subject_channels(scope);
        std::set<std::string> fc = free_channels(scope);
        if (sc.count(a) && !fc.count(b)) errs.insert("err-new-sync");
      }
    }
  } else {
    // err-mism-async: message at the head of a queue vs. an input without
    // that label; no restriction required.
    for (const auto& qt : nf.threads) {
      if (qt->kind != ProcKind::Queue || qt->items.empty()) continue;
      for (const auto& it : nf.threads) {
        if (it->kind != ProcKind::Input) continue;
        auto subj = linear_chan_of(it->subject);
        if (!subj || *subj != qt->q_to) continue;
        if (!detail::input_has_label(it, qt->items.front().label))
          errs.insert("err-mism-async");
      }
    }

    for (const auto& [ra, rb] : nf.nu_linear) {
      // classify the threads touching this pair
      struct Touch {
        std::vector<const Process*> inputs_a, inputs_b;
        const Process* q_ab = nullptr;  // queue ra -> rb
        const Process* q_ba = nullptr;
        std::size_t q_ab_idx = 0, q_ba_idx = 0;
        bool other = false;
        std::size_t touching = 0;
      } tc;
      for (std::size_t i = 0; i < nf.threads.size(); ++i) {
        const ProcRef& t = nf.threads[i];
        std::set<std::string> fc = free_channels(t);
        if (!fc.count(ra) && !fc.count(rb)) continue;
        ++tc.touching;
        if (t->kind == ProcKind::Queue && t->q_from == ra && t->q_to == rb && !tc.q_ab) {
          tc.q_ab = t.get();
          tc.q_ab_idx = i;
          if (gamma(t->items).count(ra) || gamma(t->items).count(rb)) tc.other = true;
          continue;
        }
        if (t->kind == ProcKind::Queue && t->q_from == rb && t->q_to == ra && !tc.q_ba) {
          tc.q_ba = t.get();
          tc.q_ba_idx = i;
          if (gamma(t->items).count(ra) || gamma(t->items).count(rb)) tc.other = true;
          continue;
        }
        if (t->kind == ProcKind::Input) {
          auto subj = linear_chan_of(t->subject);
          std::set<std::string> body_fc;
          for (const auto& br : t->branches) {
            auto f = free_channels(br.body);
            body_fc.insert(f.begin(), f.end());
          }
          if (subj && *subj == ra && !body_fc.count(rb) &&
              !(body_fc.count(ra) && false)) {
            tc.inputs_a.push_back(t.get());
            if (body_fc.count(ra) || body_fc.count(rb)) tc.other = true;
            continue;
          }
          if (subj && *subj == rb) {
            tc.inputs_b.push_back(t.get());
            if (body_fc.count(ra) || body_fc.count(rb)) tc.other = true;
            continue;
          }
        }
        tc.other = true;
      }
      for (const auto& d : nf.defs) {
        std::set<std::string> fc = free_channels(d.body);
        if (fc.count(ra) || fc.count(rb)) tc.other = true;
      }

      // err-in-in-async: both endpoints waiting on empty queues
      if (!tc.other && tc.inputs_a.size() == 1 && tc.inputs_b.size() == 1 && tc.q_ab &&
          tc.q_ba && tc.q_ab->items.empty() && tc.q_ba->items.empty())
        errs.insert("err-in-in-async");

      // err-in-async: one endpoint waiting on an empty queue, co-channel
      // occurring only as a queue name
      if (!tc.other && tc.inputs_b.empty() && tc.inputs_a.size() == 1 && tc.q_ab && tc.q_ba &&
          tc.q_ba->items.empty())
        errs.insert("err-in-async");
      if (!tc.other && tc.inputs_a.empty() && tc.inputs_b.size() == 1 && tc.q_ab && tc.q_ba &&
          tc.q_ab->items.empty())
        errs.insert("err-in-async");

      // err-orph-mess-async: a nonempty queue whose reader can never input
      for (const auto& [qidx, reader] :
           {std::make_pair(tc.q_ba ? std::optional<std::size_t>(tc.q_ba_idx) : std::nullopt, ra),
            std::make_pair(tc.q_ab ? std::optional<std::size_t>(tc.q_ab_idx) : std::nullopt,
                           rb)}) {
        if (!qidx) continue;
        const ProcRef& qt = nf.threads[*qidx];
        if (qt->items.empty()) continue;
        ProcRef rest = detail::scope_process(nf, qidx);
        if (!free_process_vars(rest).empty()) continue;
        if (!phi(rest).count(reader)) errs.insert("err-orph-mess-async");
      }
    }
  }

  if (ext) {
    for (const auto& t : nf.threads) {
      switch (t->kind) {
        case ProcKind::Invoke:
          for (const auto& a : t->args)
            if (std::holds_alternative<ExprRef>(a) && expr_stuck(std::get<ExprRef>(a)))
              errs.insert("err-def");
          break;
        case ProcKind::OutputExpr:
          if (expr_stuck(t->expr)) errs.insert("err-com-ext");
          if (is_base_value(t->subject) || shared_chan_of(t->subject))
            errs.insert("err-chan-out");
          break;
        case ProcKind::OutputChan:
          if (is_base_value(t->subject) || shared_chan_of(t->subject))
            errs.insert("err-chan-out");
          break;
        case ProcKind::Cond:
          if (expr_stuck(t->expr)) errs.insert("err-cond");
          break;
        case ProcKind::Input:
          if (is_base_value(t->subject) || shared_chan_of(t->subject))
            errs.insert("err-chan-in");
          break;
        case ProcKind::Accept:
          if (is_base_value(t->subject) || linear_chan_of(t->subject)) errs.insert("err-acc");
          break;
        case ProcKind::Request:
          if (is_base_value(t->subject) || linear_chan_of(t->subject)) errs.insert("err-req");
          break;
        default:
          break;
      }
    }
  }

  return sb.out;
}

// ---------------------------------------------------------------------------
// Bounded reachability of `error`

struct Bounds {
  std::size_t max_depth = 512;
  std::size_t max_states = 100000;
};

struct TraceEntry {
  std::string rule;
  NormalForm state;
};

struct ErrorReached {
  std::vector<TraceEntry> trace;         // starts with ("init", P0)
  std::set<std::string> error_rules;     // enabled at the final state
};
struct NoErrorProven {
  std::size_t states_explored = 0;
};
struct BudgetExhausted {
  std::size_t frontier_size = 0;
};

using SearchOutcome = std::variant<ErrorReached, NoErrorProven, BudgetExhausted>;

inline bool error_reached(const SearchOutcome& o) {
  return std::holds_alternative<ErrorReached>(o);
}

// Breadth-first exploration of the reduction graph with canonical-form state
// hashing. States deeper than max_depth are not expanded; hitting the state
// cap reports BudgetExhausted instead of a verdict.
inline SearchOutcome reach_error(const ProcRef& p, Mode mode, const Bounds& bounds = {}) {
  struct StateRec {
    NormalForm nf;
    std::size_t parent;
    std::string rule;
    std::size_t depth;
  };
  std::vector<StateRec> states;
  std::map<std::string, std::size_t> seen;
  std::deque<std::size_t> frontier;

  NormalForm start = normalize(p);
  states.push_back({start, 0, "init", 0});
  seen[canonical_key(start)] = 0;
  frontier.push_back(0);

  auto make_trace = [&](std::size_t idx, std::set<std::string> rules) {
    std::vector<TraceEntry> trace;
    std::vector<std::size_t> chain;
    for (std::size_t i = idx;; i = states[i].parent) {
      chain.push_back(i);
      if (i == 0) break;
    }
    for (auto it = chain.rbegin(); it != chain.rend(); ++it)
      trace.push_back({states[*it].rule, states[*it].nf});
    return ErrorReached{std::move(trace), std::move(rules)};
  };

  while (!frontier.empty()) {
    std::size_t idx = frontier.front();
    frontier.pop_front();
    StepResult sr = step(states[idx].nf, mode);
    if (!sr.error_rules.empty()) return make_trace(idx, sr.error_rules);
    if (states[idx].depth >= bounds.max_depth) continue;
    // deterministic expansion order: canonical state order per rule list
    std::vector<std::pair<std::string, NormalForm>> succ = std::move(sr.successors);
    std::sort(succ.begin(), succ.end(),
              [](const auto& x, const auto& y) {
                std::string kx = canonical_key(x.second), ky = canonical_key(y.second);
                return std::tie(kx, x.first) < std::tie(ky, y.first);
              });
    for (auto& [rule, nf] : succ) {
      std::string key = canonical_key(nf);
      if (seen.count(key)) continue;
      if (states.size() >= bounds.max_states)
        return BudgetExhausted{frontier.size() + 1};
      seen[key] = states.size();
      states.push_back({std::move(nf), idx, rule, states[idx].depth + 1});
      frontier.push_back(states.size() - 1);
    }
  }
  return NoErrorProven{states.size()};
}

}  // namespace sesst
