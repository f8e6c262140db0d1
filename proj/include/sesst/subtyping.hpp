#pragma once

// Synchronous subtyping (decided exactly), asynchronous subtyping (budgeted
// search), negation derivations for both, subsorting, and the branch-free
// pruning construction.
//
// Both relations are solved on one pair graph: nodes are head-unfolded type
// pairs, each node carries the premises of the unique applicable positive
// rule, and a three-valued greatest-fixpoint pass assigns Yes/No/Unknown.
// A node is No exactly when a finite negation derivation exists, which the
// reconstruction step then materialises; this keeps subtype and negation
// complements of each other by construction.

#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "sesst/type.hpp"

namespace sesst {

struct Budget {
  std::size_t max_pairs = 4096;       // visited type pairs
  std::size_t max_unfold = 16;        // mu-unfoldings per decomposition path
  std::size_t max_perm_depth = 32;    // sub-perm-async nesting
};

enum class Verdict { Yes, No, Unknown };

struct TriBool {
  Verdict v = Verdict::Unknown;
  std::string reason;  // set for Unknown

  bool yes() const { return v == Verdict::Yes; }
  bool no() const { return v == Verdict::No; }
  bool unknown() const { return v == Verdict::Unknown; }
};

struct Derivation {
  std::string rule;
  TypeRef lhs, rhs;
  std::map<std::string, std::string> witness;
  AsyncContextRef context;  // n-*-async rules
  std::vector<Derivation> premises;
};

inline bool derivation_uses_rule(const Derivation& d, const std::string& rule) {
  if (d.rule == rule) return true;
  for (const auto& p : d.premises)
    if (derivation_uses_rule(p, rule)) return true;
  return false;
}

// ---------------------------------------------------------------------------
// Subsorting: reflexive, nat <=: int, shared channels invariant.

inline bool subsort(const Sort& a, const Sort& b) {
  if (a.base == b.base) {
    if (a.base == BaseSort::Shared) return type_equal(a.carried, b.carried);
    return true;
  }
  return a.base == BaseSort::Nat && b.base == BaseSort::Int;
}

inline const char* sort_name(BaseSort b) {
  switch (b) {
    case BaseSort::Bool: return "bool";
    case BaseSort::Nat: return "nat";
    case BaseSort::Int: return "int";
    case BaseSort::Shared: return "shared";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Pair-graph engine

namespace detail {

class SubtypeEngine {
  static constexpr std::size_t kFalseLeaf = std::numeric_limits<std::size_t>::max();

  struct Premise {
    std::size_t node = kFalseLeaf;  // kFalseLeaf: constant-false leaf
    std::string rule;               // negation rule named after this premise
    std::map<std::string, std::string> witness;
    AsyncContextRef context;
    int order = 0;  // table order for tie-breaking
  };

  struct Node {
    TypeRef lhs, rhs;  // head-unfolded
    bool axiom_fail = false;
    std::string axiom_rule;
    std::map<std::string, std::string> axiom_witness;
    AsyncContextRef axiom_context;
    bool truncated = false;
    std::string truncation_reason;
    std::size_t perm_depth = 0;
    std::vector<Premise> premises;
    Verdict status = Verdict::Yes;
    std::size_t depth = 0;  // refutation depth
  };

public:
  SubtypeEngine(Mode mode, Budget budget) : mode_(mode), budget_(budget) {}

  TriBool run(const TypeRef& lhs, const TypeRef& rhs) {
    root_ = intern(lhs, rhs, 0);
    expand_all();
    solve();
    const Node& n = nodes_[root_];
    if (n.status == Verdict::Unknown)
      return {Verdict::Unknown, unknown_reason_.empty() ? "budget exhausted" : unknown_reason_};
    return {n.status, ""};
  }

  std::optional<Derivation> negation() {
    if (nodes_[root_].status != Verdict::No) return std::nullopt;
    compute_depths();
    return build(root_);
  }

private:
  std::size_t intern(const TypeRef& lhs, const TypeRef& rhs, std::size_t perm_depth) {
    TypeRef l = memo_.unfold(lhs);
    TypeRef r = memo_.unfold(rhs);
    std::string key = type_key(l) + "<=" + type_key(r);
    auto it = index_.find(key);
    if (it != index_.end()) {
      if (perm_depth < nodes_[it->second].perm_depth) nodes_[it->second].perm_depth = perm_depth;
      return it->second;
    }
    Node n;
    n.lhs = l;
    n.rhs = r;
    n.perm_depth = perm_depth;
    nodes_.push_back(std::move(n));
    index_.emplace(std::move(key), nodes_.size() - 1);
    work_.push_back(nodes_.size() - 1);
    return nodes_.size() - 1;
  }

  void expand_all() {
    while (!work_.empty()) {
      if (nodes_.size() > budget_.max_pairs) {
        for (std::size_t i : work_) {
          nodes_[i].truncated = true;
          nodes_[i].truncation_reason = "pair budget exhausted";
        }
        unknown_reason_ = "visited-pair budget (" + std::to_string(budget_.max_pairs) +
                          ") exhausted";
        work_.clear();
        return;
      }
      std::size_t i = work_.front();
      work_.pop_front();
      expand(i);
    }
  }

  // Payload comparison u <= u', covariantly oriented. Session pairs become
  // graph premises; sort pairs are decided on the spot.
  void add_payload_premise(Node& n, const Payload& u, const Payload& u2, const char* rule,
                           std::map<std::string, std::string> wit, AsyncContextRef ctx,
                           int order, std::size_t perm_depth) {
    if (u.is_session() && u2.is_session()) {
      Premise p;
      p.node = intern(u.session(), u2.session(), perm_depth);
      p.rule = rule;
      p.witness = std::move(wit);
      p.context = std::move(ctx);
      p.order = order;
      n.premises.push_back(std::move(p));
      return;
    }
    bool ok;
    if (u.is_sort() && u2.is_sort()) {
      ok = subsort(u2.sort(), u.sort());  // U <= U'  iff  B' <=: B
    } else if (u.is_sort() && u2.is_session()) {
      ok = u2.session()->kind == TypeKind::End ||
           (u2.session()->kind == TypeKind::Mu &&
            memo_.unfold(u2.session())->kind == TypeKind::End);
    } else {
      ok = false;  // session payload below a sort: never
    }
    if (!ok) {
      Premise p;
      p.node = kFalseLeaf;
      p.rule = rule;
      wit["payload"] = print_payload(u) + " </= " + print_payload(u2);
      p.witness = std::move(wit);
      p.context = std::move(ctx);
      p.order = order;
      n.premises.push_back(std::move(p));
    }
  }

  void expand(std::size_t i) {
    // Collect into a local node first: intern() may reallocate nodes_.
    Node n = nodes_[i];
    const TypeRef& l = n.lhs;
    const TypeRef& r = n.rhs;
    const bool async = mode_is_async(mode_);

    if (l->kind == TypeKind::Var || r->kind == TypeKind::Var)
      throw std::invalid_argument("subtyping requires closed types");

    if (l->kind == TypeKind::End && r->kind == TypeKind::End) {
      nodes_[i] = std::move(n);
      return;  // sub-end, no premises
    }
    if (l->kind == TypeKind::End) {
      n.axiom_fail = true;
      n.axiom_rule = "n-end r";
      nodes_[i] = std::move(n);
      return;
    }
    if (r->kind == TypeKind::End) {
      n.axiom_fail = true;
      n.axiom_rule = "n-end l";
      nodes_[i] = std::move(n);
      return;
    }

    if (l->kind == TypeKind::Branch && r->kind == TypeKind::Select) {
      n.axiom_fail = true;
      n.axiom_rule = "n-brasel";
      nodes_[i] = std::move(n);
      return;
    }

    if (l->kind == TypeKind::Branch && r->kind == TypeKind::Branch) {
      expand_branch_branch(n);
      nodes_[i] = std::move(n);
      return;
    }

    if (!async) {
      if (l->kind == TypeKind::Select && r->kind == TypeKind::Branch) {
        n.axiom_fail = true;
        n.axiom_rule = "n-selbra-sync";
        nodes_[i] = std::move(n);
        return;
      }
      expand_select_select_sync(n);
      nodes_[i] = std::move(n);
      return;
    }

    // Async, lhs Select, rhs Select or Branch.
    expand_select_async(n);
    nodes_[i] = std::move(n);
  }

  void expand_branch_branch(Node& n) {
    const TypeRef& l = n.lhs;
    const TypeRef& r = n.rhs;
    std::map<std::string, const TypeEntry*> lm;
    for (const auto& e : l->entries) lm[e.label] = &e;
    for (const auto& e : r->entries) {
      if (!lm.count(e.label)) {
        // subtype must offer every label of the supertype
        n.axiom_fail = true;
        n.axiom_rule = "n-label-bra";
        n.axiom_witness["label"] = e.label;
        return;
      }
    }
    for (const auto& e : r->entries) {
      const TypeEntry* le = lm[e.label];
      add_payload_premise(n, le->payload, e.payload, "n-exch-bra", {{"label", e.label}}, nullptr,
                          1, n.perm_depth);
      Premise p;
      p.node = intern(le->cont, e.cont, n.perm_depth);
      p.rule = "n-cont-bra";
      p.witness = {{"label", e.label}};
      p.order = 2;
      n.premises.push_back(std::move(p));
    }
  }

  void expand_select_select_sync(Node& n) {
    const TypeRef& l = n.lhs;
    const TypeRef& r = n.rhs;
    std::map<std::string, const TypeEntry*> rm;
    for (const auto& e : r->entries) rm[e.label] = &e;
    for (const auto& e : l->entries) {
      if (!rm.count(e.label)) {
        n.axiom_fail = true;
        n.axiom_rule = "n-label-sel";
        n.axiom_witness["label"] = e.label;
        return;
      }
    }
    for (const auto& e : l->entries) {
      const TypeEntry* re = rm[e.label];
      // payload contravariant: S'_i <= S_i
      add_payload_premise(n, re->payload, e.payload, "n-exch-sel", {{"label", e.label}}, nullptr,
                          1, n.perm_depth);
      Premise p;
      p.node = intern(e.cont, re->cont, n.perm_depth);
      p.rule = "n-cont-sel";
      p.witness = {{"label", e.label}};
      p.order = 2;
      n.premises.push_back(std::move(p));
    }
  }

  void expand_select_async(Node& n) {
    const TypeRef& l = n.lhs;
    const TypeRef& r = n.rhs;

    if (l->kind == TypeKind::Select && no_selection(r)) {
      n.axiom_fail = true;
      n.axiom_rule = "n-sel-async";
      return;
    }
    if (r->kind == TypeKind::Branch && no_branching(l)) {
      n.axiom_fail = true;
      n.axiom_rule = "n-bra-async";
      return;
    }

    DecomposeFailure why = DecomposeFailure::None;
    auto dec = decompose_context(r, budget_.max_unfold, &why);
    if (!dec) {
      // Structural absence implies a selection-free path in r, which the
      // n-sel-async check above already caught; what is left is budget.
      n.truncated = true;
      n.truncation_reason = "context decomposition exceeded unfold budget";
      if (unknown_reason_.empty())
        n.truncation_reason +=
            " (" + std::to_string(budget_.max_unfold) + " per path)";
      unknown_reason_ = n.truncation_reason;
      return;
    }

    const bool nonempty_ctx = context_has_branching(dec->ctx);
    std::size_t next_depth = n.perm_depth + (nonempty_ctx ? 1 : 0);
    if (next_depth > budget_.max_perm_depth) {
      n.truncated = true;
      n.truncation_reason = "sub-perm-async nesting budget exhausted";
      unknown_reason_ = n.truncation_reason;
      return;
    }

    std::vector<int> holes;
    context_holes(dec->ctx, holes);

    // Label coverage: every lhs label must appear in every hole.
    for (const auto& le : l->entries) {
      for (int h : holes) {
        const TypeRef& sel = dec->holes.at(h);
        bool found = false;
        for (const auto& he : sel->entries) {
          if (he.label == le.label) {
            found = true;
            break;
          }
        }
        if (!found) {
          n.axiom_fail = true;
          n.axiom_rule = "n-label-async";
          n.axiom_witness = {{"label", le.label}, {"hole", std::to_string(h)}};
          n.axiom_context = dec->ctx;
          return;
        }
      }
    }

    // sub-perm-async premises. The & in A / & in T_i side conditions are
    // equivalent to the n-bra-async check above when the context is
    // nonempty, so no further test is needed here.
    for (const auto& le : l->entries) {
      std::map<int, TypeRef> cont_fill;
      for (int h : holes) {
        const TypeRef& sel = dec->holes.at(h);
        const TypeEntry* he = nullptr;
        for (const auto& e : sel->entries)
          if (e.label == le.label) he = &e;
        add_payload_premise(n, he->payload, le.payload, "n-exch-async",
                            {{"label", le.label}, {"hole", std::to_string(h)}}, dec->ctx, 3,
                            next_depth);
        cont_fill[h] = he->cont;
      }
      Premise p;
      p.node = intern(le.cont, fill_context(dec->ctx, cont_fill, TypeKind::Branch), next_depth);
      p.rule = "n-cont-async";
      p.witness = {{"label", le.label}};
      p.context = dec->ctx;
      p.order = 4;
      n.premises.push_back(std::move(p));
    }
  }

  void solve() {
    // Three-valued downgrade-only fixpoint: Yes > Unknown > No never
    // upgrades, so iteration terminates. Nodes left Yes at the fixpoint form
    // a coinductive derivation.
    for (auto& n : nodes_) {
      if (n.axiom_fail)
        n.status = Verdict::No;
      else if (n.truncated)
        n.status = Verdict::Unknown;
      else
        n.status = Verdict::Yes;
    }
    bool changed = true;
    while (changed) {
      changed = false;
      for (auto& n : nodes_) {
        if (n.status == Verdict::No) continue;
        bool any_unknown = n.status == Verdict::Unknown;
        for (const auto& p : n.premises) {
          Verdict pv = p.node == kFalseLeaf ? Verdict::No : nodes_[p.node].status;
          if (pv == Verdict::No) {
            if (n.status != Verdict::No) {
              n.status = Verdict::No;
              changed = true;
            }
            any_unknown = false;
            break;
          }
          if (pv == Verdict::Unknown) any_unknown = true;
        }
        if (n.status != Verdict::No && any_unknown && n.status != Verdict::Unknown) {
          n.status = Verdict::Unknown;
          changed = true;
        }
      }
    }
  }

  void compute_depths() {
    constexpr std::size_t inf = std::numeric_limits<std::size_t>::max();
    for (auto& n : nodes_) n.depth = n.axiom_fail ? 1 : inf;
    bool changed = true;
    while (changed) {
      changed = false;
      for (auto& n : nodes_) {
        if (n.status != Verdict::No || n.axiom_fail) continue;
        std::size_t best = inf;
        for (const auto& p : n.premises) {
          std::size_t d = p.node == kFalseLeaf ? 0 : nodes_[p.node].depth;
          if (d != inf && d + 1 < best) best = d + 1;
        }
        if (best < n.depth) {
          n.depth = best;
          changed = true;
        }
      }
    }
  }

  Derivation build(std::size_t i) const {
    const Node& n = nodes_[i];
    Derivation d;
    d.lhs = n.lhs;
    d.rhs = n.rhs;
    if (n.axiom_fail) {
      d.rule = n.axiom_rule;
      d.witness = n.axiom_witness;
      d.context = n.axiom_context;
      return d;
    }
    // Pick a refuted premise of minimal depth, tie-broken by table order.
    const Premise* chosen = nullptr;
    std::size_t chosen_depth = std::numeric_limits<std::size_t>::max();
    for (const auto& p : n.premises) {
      std::size_t pd;
      if (p.node == kFalseLeaf) {
        pd = 0;
      } else {
        const Node& pn = nodes_[p.node];
        if (pn.status != Verdict::No) continue;
        pd = pn.depth;
      }
      if (pd >= n.depth) continue;  // keep the derivation finite
      if (!chosen || pd < chosen_depth ||
          (pd == chosen_depth && p.order < chosen->order)) {
        chosen = &p;
        chosen_depth = pd;
      }
    }
    if (!chosen) throw std::logic_error("negation reconstruction lost its witness");
    d.rule = chosen->rule;
    d.witness = chosen->witness;
    d.context = chosen->context;
    if (chosen->node != kFalseLeaf) d.premises.push_back(build(chosen->node));
    return d;
  }

  Mode mode_;
  Budget budget_;
  UnfoldMemo memo_;
  std::map<std::string, std::size_t> index_;
  std::vector<Node> nodes_;
  std::deque<std::size_t> work_;
  std::size_t root_ = 0;
  std::string unknown_reason_;
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Public operations

inline bool sync_subtype(const TypeRef& t, const TypeRef& s) {
  Budget b;
  b.max_pairs = 1u << 20;  // the sync pair closure is finite
  detail::SubtypeEngine e(Mode::Sync, b);
  TriBool r = e.run(t, s);
  if (r.unknown()) throw std::logic_error("sync subtyping exceeded its pair bound");
  return r.yes();
}

inline std::optional<Derivation> sync_negation(const TypeRef& t, const TypeRef& s) {
  Budget b;
  b.max_pairs = 1u << 20;
  detail::SubtypeEngine e(Mode::Sync, b);
  TriBool r = e.run(t, s);
  if (r.unknown()) throw std::logic_error("sync subtyping exceeded its pair bound");
  return e.negation();
}

struct AsyncResult {
  TriBool verdict;
  std::optional<Derivation> negation;
};

// Tandem search: the graph pass decides the pair and, on refutation, the
// negation derivation is reconstructed from the same graph.
inline AsyncResult async_check(const TypeRef& t, const TypeRef& s, const Budget& budget = {}) {
  detail::SubtypeEngine e(Mode::Async, budget);
  AsyncResult r;
  r.verdict = e.run(t, s);
  if (r.verdict.no()) r.negation = e.negation();
  return r;
}

inline TriBool async_subtype(const TypeRef& t, const TypeRef& s, const Budget& budget = {}) {
  return async_check(t, s, budget).verdict;
}

inline std::optional<Derivation> async_negation(const TypeRef& t, const TypeRef& s,
                                                const Budget& budget = {}) {
  return async_check(t, s, budget).negation;
}

// U <= U' following the extension table; Session/Session delegates to the
// mode's relation.
inline TriBool payload_sub(const Payload& u, const Payload& u2, Mode mode,
                           const Budget& budget = {}) {
  if (u.is_session() && u2.is_session()) {
    if (mode_is_async(mode)) return async_subtype(u.session(), u2.session(), budget);
    return {sync_subtype(u.session(), u2.session()) ? Verdict::Yes : Verdict::No, ""};
  }
  if (u.is_sort() && u2.is_sort())
    return {subsort(u2.sort(), u.sort()) ? Verdict::Yes : Verdict::No, ""};
  if (u.is_sort() && u2.is_session() && unfold(u2.session())->kind == TypeKind::End)
    return {Verdict::Yes, ""};
  return {Verdict::No, ""};
}

// Lemma 5.5 construction: given & not-in T, drop at each selection the
// entries whose continuation path contains a branching.
inline TypeRef prune_branchless(const TypeRef& t) {
  switch (t->kind) {
    case TypeKind::End:
    case TypeKind::Var:
      return t;
    case TypeKind::Mu:
      if (has_branching(t)) break;
      return t_mu(t->name, prune_branchless(t->body));
    case TypeKind::Select: {
      if (has_branching(t)) break;
      std::vector<TypeEntry> kept;
      for (const auto& e : t->entries)
        if (no_branching(e.cont)) kept.push_back({e.label, e.payload, prune_branchless(e.cont)});
      return t_select(std::move(kept));
    }
    case TypeKind::Branch:
      break;
  }
  throw std::invalid_argument("prune_branchless: precondition '& not-in T' violated");
}

enum class SubVerdict { SyncSub, AsyncOnlySub, NotSub, Unknown };

struct Classification {
  SubVerdict verdict = SubVerdict::Unknown;
  Mode negation_mode = Mode::Sync;         // valid when NotSub
  std::optional<Derivation> negation;      // valid when NotSub
  TriBool async_verdict;                   // as reported by the async search
};

inline Classification classify(const TypeRef& t, const TypeRef& s, const Budget& budget = {}) {
  Classification c;
  if (sync_subtype(t, s)) {
    c.verdict = SubVerdict::SyncSub;
    c.async_verdict = {Verdict::Yes, ""};
    return c;
  }
  AsyncResult ar = async_check(t, s, budget);
  c.async_verdict = ar.verdict;
  if (ar.verdict.yes()) {
    c.verdict = SubVerdict::AsyncOnlySub;
  } else if (ar.verdict.no()) {
    c.verdict = SubVerdict::NotSub;
    c.negation_mode = Mode::Async;
    c.negation = std::move(ar.negation);
  } else {
    c.verdict = SubVerdict::Unknown;
  }
  return c;
}

}  // namespace sesst
