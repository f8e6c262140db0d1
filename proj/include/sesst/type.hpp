#pragma once

// Session-type AST: equi-recursive terms (end, variables, mu-binders,
// branchings, selections) with session or sort payloads, plus duality,
// unfolding, regular-tree equality, the branching/selection path
// predicates and asynchronous-context decomposition.

#include <algorithm>
#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace sesst {

// Calculus variants: the core synchronous and asynchronous calculi, and the
// extensions with session initialisation and expression communication.
enum class Mode { Sync, Async, ExtSync, ExtAsync };

inline bool mode_is_async(Mode m) { return m == Mode::Async || m == Mode::ExtAsync; }
inline bool mode_is_ext(Mode m) { return m == Mode::ExtSync || m == Mode::ExtAsync; }

class ParseError : public std::runtime_error {
public:
  ParseError(const std::string& what, std::size_t pos)
      : std::runtime_error(what + " (at offset " + std::to_string(pos) + ")"),
        pos_(pos) {}
  std::size_t position() const { return pos_; }

private:
  std::size_t pos_;
};

struct Type;
using TypeRef = std::shared_ptr<const Type>;

enum class BaseSort { Bool, Nat, Int, Shared };

struct Sort {
  BaseSort base = BaseSort::Bool;
  TypeRef carried;  // only for Shared; carries a closed session type
};

struct Payload {
  std::variant<TypeRef, Sort> value;

  Payload() : value(TypeRef{}) {}
  explicit Payload(TypeRef t) : value(std::move(t)) {}
  explicit Payload(Sort s) : value(std::move(s)) {}

  bool is_session() const { return std::holds_alternative<TypeRef>(value); }
  bool is_sort() const { return !is_session(); }
  const TypeRef& session() const { return std::get<TypeRef>(value); }
  const Sort& sort() const { return std::get<Sort>(value); }
};

enum class TypeKind { End, Var, Mu, Branch, Select };

struct TypeEntry {
  std::string label;
  Payload payload;
  TypeRef cont;
};

struct Type {
  TypeKind kind = TypeKind::End;
  std::string name;                // Var, Mu
  TypeRef body;                    // Mu
  std::vector<TypeEntry> entries;  // Branch/Select, in source order
};

inline TypeRef t_end() {
  static const TypeRef e = std::make_shared<Type>(Type{TypeKind::End, "", nullptr, {}});
  return e;
}

inline TypeRef t_var(std::string name) {
  auto t = std::make_shared<Type>();
  t->kind = TypeKind::Var;
  t->name = std::move(name);
  return t;
}

inline TypeRef t_mu(std::string name, TypeRef body) {
  if (!body) throw std::invalid_argument("t_mu: null body");
  auto t = std::make_shared<Type>();
  t->kind = TypeKind::Mu;
  t->name = std::move(name);
  t->body = std::move(body);
  return t;
}

namespace detail {
inline void check_entries(const std::vector<TypeEntry>& entries, const char* who) {
  if (entries.empty()) throw std::invalid_argument(std::string(who) + ": at least one entry required");
  std::set<std::string> seen;
  for (const auto& e : entries) {
    if (!e.cont) throw std::invalid_argument(std::string(who) + ": null continuation");
    if (!seen.insert(e.label).second)
      throw std::invalid_argument(std::string(who) + ": duplicate label '" + e.label + "'");
  }
}
}  // namespace detail

inline TypeRef t_branch(std::vector<TypeEntry> entries) {
  detail::check_entries(entries, "t_branch");
  auto t = std::make_shared<Type>();
  t->kind = TypeKind::Branch;
  t->entries = std::move(entries);
  return t;
}

inline TypeRef t_select(std::vector<TypeEntry> entries) {
  detail::check_entries(entries, "t_select");
  auto t = std::make_shared<Type>();
  t->kind = TypeKind::Select;
  t->entries = std::move(entries);
  return t;
}

// ---------------------------------------------------------------------------
// Free variables, closedness, contractivity

inline void free_type_vars(const TypeRef& t, std::set<std::string>& bound,
                           std::set<std::string>& out) {
  switch (t->kind) {
    case TypeKind::End:
      return;
    case TypeKind::Var:
      if (!bound.count(t->name)) out.insert(t->name);
      return;
    case TypeKind::Mu: {
      bool fresh = bound.insert(t->name).second;
      free_type_vars(t->body, bound, out);
      if (fresh) bound.erase(t->name);
      return;
    }
    case TypeKind::Branch:
    case TypeKind::Select:
      for (const auto& e : t->entries) {
        if (e.payload.is_session()) {
          free_type_vars(e.payload.session(), bound, out);
        } else if (e.payload.sort().base == BaseSort::Shared) {
          free_type_vars(e.payload.sort().carried, bound, out);
        }
        free_type_vars(e.cont, bound, out);
      }
      return;
  }
}

inline std::set<std::string> free_type_vars(const TypeRef& t) {
  std::set<std::string> bound, out;
  free_type_vars(t, bound, out);
  return out;
}

inline bool is_closed(const TypeRef& t) { return free_type_vars(t).empty(); }

// No chain mu t1.mu t2...mu tn.t1; payload subtrees checked independently.
inline bool is_contractive(const TypeRef& t) {
  switch (t->kind) {
    case TypeKind::End:
    case TypeKind::Var:
      return true;
    case TypeKind::Mu: {
      std::set<std::string> chain;
      TypeRef cur = t;
      while (cur->kind == TypeKind::Mu) {
        chain.insert(cur->name);
        cur = cur->body;
      }
      if (cur->kind == TypeKind::Var && chain.count(cur->name)) return false;
      return is_contractive(cur);
    }
    case TypeKind::Branch:
    case TypeKind::Select:
      for (const auto& e : t->entries) {
        if (e.payload.is_session() && !is_contractive(e.payload.session())) return false;
        if (e.payload.is_sort() && e.payload.sort().base == BaseSort::Shared &&
            !is_contractive(e.payload.sort().carried))
          return false;
        if (!is_contractive(e.cont)) return false;
      }
      return true;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Printing

namespace detail {

inline void print_type(const TypeRef& t, std::ostream& os);

inline void print_payload(const Payload& u, std::ostream& os) {
  if (u.is_session()) {
    print_type(u.session(), os);
    return;
  }
  switch (u.sort().base) {
    case BaseSort::Bool: os << "bool"; return;
    case BaseSort::Nat: os << "nat"; return;
    case BaseSort::Int: os << "int"; return;
    case BaseSort::Shared:
      os << "<";
      print_type(u.sort().carried, os);
      os << ">";
      return;
  }
}

inline void print_entry(const TypeEntry& e, bool branching, std::ostream& os) {
  os << e.label;
  if (branching) {
    os << "?(";
    print_payload(e.payload, os);
    os << ").";
  } else {
    os << "!<";
    print_payload(e.payload, os);
    os << ">.";
  }
  print_type(e.cont, os);
}

inline void print_type(const TypeRef& t, std::ostream& os) {
  switch (t->kind) {
    case TypeKind::End:
      os << "end";
      return;
    case TypeKind::Var:
      os << t->name;
      return;
    case TypeKind::Mu:
      os << "rec " << t->name << ".";
      print_type(t->body, os);
      return;
    case TypeKind::Branch:
    case TypeKind::Select: {
      bool branching = t->kind == TypeKind::Branch;
      if (t->entries.size() == 1) {
        print_entry(t->entries[0], branching, os);
        return;
      }
      os << (branching ? "&{" : "+{");
      bool first = true;
      for (const auto& e : t->entries) {
        if (!first) os << ", ";
        first = false;
        print_entry(e, branching, os);
      }
      os << "}";
      return;
    }
  }
}

}  // namespace detail

inline std::string print_type(const TypeRef& t) {
  std::ostringstream os;
  detail::print_type(t, os);
  return os.str();
}

inline std::string print_payload(const Payload& u) {
  std::ostringstream os;
  detail::print_payload(u, os);
  return os.str();
}

// Canonical key: binders numbered de-Bruijn style, entries sorted by label.
// Alpha-equivalent types (and label permutations) share one key.
namespace detail {
inline void key_type(const TypeRef& t, std::vector<std::string>& binders, std::ostream& os) {
  switch (t->kind) {
    case TypeKind::End:
      os << 'e';
      return;
    case TypeKind::Var: {
      for (std::size_t i = binders.size(); i-- > 0;) {
        if (binders[i] == t->name) {
          os << 'v' << (binders.size() - 1 - i);
          return;
        }
      }
      os << "v?" << t->name;  // free variable
      return;
    }
    case TypeKind::Mu:
      os << "m(";
      binders.push_back(t->name);
      key_type(t->body, binders, os);
      binders.pop_back();
      os << ')';
      return;
    case TypeKind::Branch:
    case TypeKind::Select: {
      os << (t->kind == TypeKind::Branch ? "&{" : "+{");
      std::vector<const TypeEntry*> es;
      for (const auto& e : t->entries) es.push_back(&e);
      std::sort(es.begin(), es.end(),
                [](const TypeEntry* a, const TypeEntry* b) { return a->label < b->label; });
      for (const auto* e : es) {
        os << e->label << ':';
        if (e->payload.is_session()) {
          key_type(e->payload.session(), binders, os);
        } else {
          switch (e->payload.sort().base) {
            case BaseSort::Bool: os << 'B'; break;
            case BaseSort::Nat: os << 'N'; break;
            case BaseSort::Int: os << 'I'; break;
            case BaseSort::Shared:
              os << "S(";
              key_type(e->payload.sort().carried, binders, os);
              os << ')';
              break;
          }
        }
        os << '.';
        key_type(e->cont, binders, os);
        os << ';';
      }
      os << '}';
      return;
    }
  }
}
}  // namespace detail

inline std::string type_key(const TypeRef& t) {
  std::ostringstream os;
  std::vector<std::string> binders;
  detail::key_type(t, binders, os);
  return os.str();
}

// ---------------------------------------------------------------------------
// Duality

inline TypeRef dual(const TypeRef& t) {
  switch (t->kind) {
    case TypeKind::End:
      return t;
    case TypeKind::Var:
      return t;
    case TypeKind::Mu:
      return t_mu(t->name, dual(t->body));
    case TypeKind::Branch:
    case TypeKind::Select: {
      std::vector<TypeEntry> entries;
      entries.reserve(t->entries.size());
      for (const auto& e : t->entries) entries.push_back({e.label, e.payload, dual(e.cont)});
      return t->kind == TypeKind::Branch ? t_select(std::move(entries))
                                         : t_branch(std::move(entries));
    }
  }
  return t;
}

inline Payload dual_payload_carrier(const Payload& u) = delete;  // payloads are never dualised

// ---------------------------------------------------------------------------
// Unfolding. Substitution is memoised per (node, mu) so that repeated
// unfolding of a regular type yields pointer-stable results; pair sets keyed
// on those pointers (or on type_key) then stay finite.

class UnfoldMemo {
public:
  // Head normal form: result kind is never Mu.
  TypeRef unfold(TypeRef t) {
    int guard = 0;
    while (t->kind == TypeKind::Mu) {
      auto it = unfolded_.find(t.get());
      if (it != unfolded_.end()) {
        t = it->second;
      } else {
        TypeRef u = subst(t->body, t->name, t);
        unfolded_.emplace(t.get(), u);
        roots_.push_back(t);
        t = u;
      }
      if (++guard > 4096) throw std::logic_error("unfold: non-contractive type");
    }
    return t;
  }

  // One unfolding step (t must be a Mu).
  TypeRef unfold_once(const TypeRef& t) {
    if (t->kind != TypeKind::Mu) return t;
    auto it = unfolded_.find(t.get());
    if (it != unfolded_.end()) return it->second;
    TypeRef u = subst(t->body, t->name, t);
    unfolded_.emplace(t.get(), u);
    roots_.push_back(t);
    return u;
  }

private:
  // Nodes without a free occurrence of the variable are returned unchanged;
  // pointer stability is what keeps pair sets over unfoldings finite.
  bool occurs(const TypeRef& t, const std::string& var) {
    switch (t->kind) {
      case TypeKind::End:
        return false;
      case TypeKind::Var:
        return t->name == var;
      case TypeKind::Mu: {
        if (t->name == var) return false;
        auto k = std::make_pair(t.get(), var);
        auto it = occurs_.find(k);
        if (it != occurs_.end()) return it->second;
        bool r = occurs(t->body, var);
        occurs_.emplace(std::move(k), r);
        return r;
      }
      case TypeKind::Branch:
      case TypeKind::Select: {
        auto k = std::make_pair(t.get(), var);
        auto it = occurs_.find(k);
        if (it != occurs_.end()) return it->second;
        bool r = false;
        for (const auto& e : t->entries) {
          // payloads are closed by construction
          if (occurs(e.cont, var)) {
            r = true;
            break;
          }
        }
        occurs_.emplace(std::move(k), r);
        return r;
      }
    }
    return false;
  }

  TypeRef subst(const TypeRef& t, const std::string& var, const TypeRef& mu) {
    if (!occurs(t, var)) return t;
    switch (t->kind) {
      case TypeKind::End:
        return t;
      case TypeKind::Var:
        return t->name == var ? mu : t;
      case TypeKind::Mu: {
        auto k = std::make_pair(t.get(), mu.get());
        auto it = subst_.find(k);
        if (it != subst_.end()) return it->second;
        TypeRef r = t_mu(t->name, subst(t->body, var, mu));
        subst_.emplace(k, r);
        return r;
      }
      case TypeKind::Branch:
      case TypeKind::Select: {
        auto k = std::make_pair(t.get(), mu.get());
        auto it = subst_.find(k);
        if (it != subst_.end()) return it->second;
        std::vector<TypeEntry> entries;
        entries.reserve(t->entries.size());
        for (const auto& e : t->entries)
          entries.push_back({e.label, e.payload, subst(e.cont, var, mu)});
        TypeRef r = t->kind == TypeKind::Branch ? t_branch(std::move(entries))
                                                : t_select(std::move(entries));
        subst_.emplace(k, r);
        return r;
      }
    }
    return t;
  }

  std::map<const Type*, TypeRef> unfolded_;
  std::map<std::pair<const Type*, const Type*>, TypeRef> subst_;
  std::map<std::pair<const Type*, std::string>, bool> occurs_;
  std::vector<TypeRef> roots_;  // keep keys alive
};

inline TypeRef unfold(const TypeRef& t) {
  UnfoldMemo m;
  return m.unfold(t);
}

// ---------------------------------------------------------------------------
// Regular-tree equality (bisimulation over unfoldings)

namespace detail {
inline bool type_equal_rec(TypeRef a, TypeRef b, UnfoldMemo& m,
                           std::set<std::pair<const Type*, const Type*>>& seen);

inline bool payload_equal_rec(const Payload& x, const Payload& y, UnfoldMemo& m,
                              std::set<std::pair<const Type*, const Type*>>& seen) {
  if (x.is_session() != y.is_session()) return false;
  if (x.is_session()) return type_equal_rec(x.session(), y.session(), m, seen);
  if (x.sort().base != y.sort().base) return false;
  if (x.sort().base == BaseSort::Shared)
    return type_equal_rec(x.sort().carried, y.sort().carried, m, seen);
  return true;
}

inline bool type_equal_rec(TypeRef a, TypeRef b, UnfoldMemo& m,
                           std::set<std::pair<const Type*, const Type*>>& seen) {
  a = m.unfold(a);
  b = m.unfold(b);
  if (a.get() == b.get()) return true;
  if (a->kind != b->kind) return false;
  if (!seen.insert({a.get(), b.get()}).second) return true;
  switch (a->kind) {
    case TypeKind::End:
      return true;
    case TypeKind::Var:
      return a->name == b->name;
    case TypeKind::Branch:
    case TypeKind::Select: {
      if (a->entries.size() != b->entries.size()) return false;
      std::map<std::string, const TypeEntry*> bm;
      for (const auto& e : b->entries) bm[e.label] = &e;
      for (const auto& e : a->entries) {
        auto it = bm.find(e.label);
        if (it == bm.end()) return false;
        if (!payload_equal_rec(e.payload, it->second->payload, m, seen)) return false;
        if (!type_equal_rec(e.cont, it->second->cont, m, seen)) return false;
      }
      return true;
    }
    case TypeKind::Mu:
      return false;  // unreachable after unfold
  }
  return false;
}
}  // namespace detail

inline bool type_equal(const TypeRef& a, const TypeRef& b) {
  UnfoldMemo m;
  std::set<std::pair<const Type*, const Type*>> seen;
  return detail::type_equal_rec(a, b, m, seen);
}

inline bool payload_equal(const Payload& a, const Payload& b) {
  UnfoldMemo m;
  std::set<std::pair<const Type*, const Type*>> seen;
  return detail::payload_equal_rec(a, b, m, seen);
}

// ---------------------------------------------------------------------------
// Path predicates: & in T / & not-in T and the selection duals. Structural
// recursion on open terms; variables fail the "in" form and satisfy the
// "not-in" form, exactly as the inductive rules prescribe.

inline bool has_branching(const TypeRef& t) {
  switch (t->kind) {
    case TypeKind::Branch:
      return true;
    case TypeKind::Select:
      return std::all_of(t->entries.begin(), t->entries.end(),
                         [](const TypeEntry& e) { return has_branching(e.cont); });
    case TypeKind::Mu:
      return has_branching(t->body);
    case TypeKind::Var:
    case TypeKind::End:
      return false;
  }
  return false;
}

inline bool no_branching(const TypeRef& t) {
  switch (t->kind) {
    case TypeKind::End:
    case TypeKind::Var:
      return true;
    case TypeKind::Select:
      return std::any_of(t->entries.begin(), t->entries.end(),
                         [](const TypeEntry& e) { return no_branching(e.cont); });
    case TypeKind::Mu:
      return no_branching(t->body);
    case TypeKind::Branch:
      return false;
  }
  return false;
}

inline bool has_selection(const TypeRef& t) {
  switch (t->kind) {
    case TypeKind::Select:
      return true;
    case TypeKind::Branch:
      return std::all_of(t->entries.begin(), t->entries.end(),
                         [](const TypeEntry& e) { return has_selection(e.cont); });
    case TypeKind::Mu:
      return has_selection(t->body);
    case TypeKind::Var:
    case TypeKind::End:
      return false;
  }
  return false;
}

inline bool no_selection(const TypeRef& t) {
  switch (t->kind) {
    case TypeKind::End:
    case TypeKind::Var:
      return true;
    case TypeKind::Branch:
      return std::any_of(t->entries.begin(), t->entries.end(),
                         [](const TypeEntry& e) { return no_selection(e.cont); });
    case TypeKind::Mu:
      return no_selection(t->body);
    case TypeKind::Select:
      return false;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Asynchronous contexts: finite branching-only prefix trees with indexed
// holes. The dual shape (selection nodes) is obtained by filling with
// TypeKind::Select.

struct AsyncContext;
using AsyncContextRef = std::shared_ptr<const AsyncContext>;

struct AsyncContextEntry {
  std::string label;
  Payload payload;
  AsyncContextRef cont;
};

struct AsyncContext {
  bool is_hole = true;
  int hole = 0;  // hole index when is_hole
  std::vector<AsyncContextEntry> entries;
};

inline AsyncContextRef ctx_hole(int index) {
  auto c = std::make_shared<AsyncContext>();
  c->is_hole = true;
  c->hole = index;
  return c;
}

inline AsyncContextRef ctx_node(std::vector<AsyncContextEntry> entries) {
  auto c = std::make_shared<AsyncContext>();
  c->is_hole = false;
  c->entries = std::move(entries);
  return c;
}

inline bool context_has_branching(const AsyncContextRef& c) { return !c->is_hole; }

inline void context_holes(const AsyncContextRef& c, std::vector<int>& out) {
  if (c->is_hole) {
    out.push_back(c->hole);
    return;
  }
  for (const auto& e : c->entries) context_holes(e.cont, out);
}

inline std::string print_context(const AsyncContextRef& c) {
  if (c->is_hole) return "[]" + std::to_string(c->hole);
  std::ostringstream os;
  os << "&{";
  bool first = true;
  for (const auto& e : c->entries) {
    if (!first) os << ", ";
    first = false;
    os << e.label << "?(" << print_payload(e.payload) << ")." << print_context(e.cont);
  }
  os << "}";
  return os.str();
}

// Fill holes, producing Branch nodes (the context proper) or Select nodes
// (its dual).
inline TypeRef fill_context(const AsyncContextRef& c, const std::map<int, TypeRef>& holes,
                            TypeKind node_kind = TypeKind::Branch) {
  if (c->is_hole) {
    auto it = holes.find(c->hole);
    if (it == holes.end())
      throw std::invalid_argument("fill_context: missing hole " + std::to_string(c->hole));
    return it->second;
  }
  std::vector<TypeEntry> entries;
  entries.reserve(c->entries.size());
  for (const auto& e : c->entries)
    entries.push_back({e.label, e.payload, fill_context(e.cont, holes, node_kind)});
  return node_kind == TypeKind::Branch ? t_branch(std::move(entries))
                                       : t_select(std::move(entries));
}

enum class DecomposeFailure { None, Structural, Budget };

struct Decomposition {
  AsyncContextRef ctx;
  std::map<int, TypeRef> holes;                     // hole index -> Select-headed type
  std::map<int, std::vector<std::string>> paths;    // hole index -> label path from root
};

namespace detail {
inline bool decompose_rec(UnfoldMemo& m, const TypeRef& t, std::size_t unfolds_left,
                          std::size_t budget, int& next_hole,
                          std::vector<std::string>& path, Decomposition& out,
                          AsyncContextRef& ctx, DecomposeFailure& why) {
  TypeRef cur = t;
  std::size_t used = 0;
  while (cur->kind == TypeKind::Mu) {
    if (used >= unfolds_left) {
      why = DecomposeFailure::Budget;
      return false;
    }
    cur = m.unfold_once(cur);
    ++used;
  }
  switch (cur->kind) {
    case TypeKind::End:
    case TypeKind::Var:
      why = DecomposeFailure::Structural;
      return false;
    case TypeKind::Select: {
      int idx = ++next_hole;
      out.holes[idx] = cur;
      out.paths[idx] = path;
      ctx = ctx_hole(idx);
      return true;
    }
    case TypeKind::Branch: {
      std::vector<AsyncContextEntry> entries;
      entries.reserve(cur->entries.size());
      for (const auto& e : cur->entries) {
        AsyncContextRef sub;
        path.push_back(e.label);
        bool ok = decompose_rec(m, e.cont, unfolds_left - used, budget, next_hole, path, out,
                                sub, why);
        path.pop_back();
        if (!ok) return false;
        entries.push_back({e.label, e.payload, sub});
      }
      ctx = ctx_node(std::move(entries));
      return true;
    }
    case TypeKind::Mu:
      break;  // unreachable
  }
  why = DecomposeFailure::Structural;
  return false;
}
}  // namespace detail

// Peel the maximal branching prefix of S; every hole holds a Select-headed
// type. Absent when a path ends in end/variable (structural) or needs more
// than unfold_budget mu-unfoldings (budget).
inline std::optional<Decomposition> decompose_context(const TypeRef& s,
                                                      std::size_t unfold_budget = 16,
                                                      DecomposeFailure* failure = nullptr) {
  UnfoldMemo m;
  Decomposition d;
  int next_hole = 0;
  std::vector<std::string> path;
  AsyncContextRef ctx;
  DecomposeFailure why = DecomposeFailure::None;
  if (!detail::decompose_rec(m, s, unfold_budget, unfold_budget, next_hole, path, d, ctx, why)) {
    if (failure) *failure = why;
    return std::nullopt;
  }
  if (failure) *failure = DecomposeFailure::None;
  d.ctx = ctx;
  return d;
}

// ---------------------------------------------------------------------------
// Parser for the type grammar:
//   T ::= end | ident | rec ident . T
//       | &{ l?(U).T, ... } | +{ l!<U>.T, ... }
//       | l?(U).T | l!<U>.T                      (single-entry sugar)
//   U ::= T | bool | nat | int | <T>

namespace detail {

class TypeParser {
public:
  explicit TypeParser(std::string_view src) : src_(src) {}

  TypeRef parse() {
    TypeRef t = parse_type();
    skip_ws();
    if (pos_ != src_.size()) fail("trailing input after type");
    validate(t);
    return t;
  }

private:
  void validate(const TypeRef& t) {
    if (!is_contractive(t)) throw ParseError("type is not contractive", 0);
    check_payloads_closed(t);
  }

  void check_payloads_closed(const TypeRef& t) {
    switch (t->kind) {
      case TypeKind::End:
      case TypeKind::Var:
        return;
      case TypeKind::Mu:
        check_payloads_closed(t->body);
        return;
      case TypeKind::Branch:
      case TypeKind::Select:
        for (const auto& e : t->entries) {
          if (e.payload.is_session()) {
            if (!is_closed(e.payload.session()))
              throw ParseError("payload type must be closed", 0);
            check_payloads_closed(e.payload.session());
          } else if (e.payload.sort().base == BaseSort::Shared) {
            if (!is_closed(e.payload.sort().carried))
              throw ParseError("shared-channel carried type must be closed", 0);
            check_payloads_closed(e.payload.sort().carried);
          }
          check_payloads_closed(e.cont);
        }
        return;
    }
  }

  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  [[noreturn]] void fail(const std::string& msg) { throw ParseError(msg, pos_); }

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

  Payload parse_payload() {
    skip_ws();
    std::size_t save = pos_;
    if (auto id = try_ident()) {
      if (*id == "bool") return Payload(Sort{BaseSort::Bool, nullptr});
      if (*id == "nat") return Payload(Sort{BaseSort::Nat, nullptr});
      if (*id == "int") return Payload(Sort{BaseSort::Int, nullptr});
      pos_ = save;
    }
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == '<') {
      ++pos_;
      TypeRef carried = parse_type();
      expect('>');
      return Payload(Sort{BaseSort::Shared, carried});
    }
    return Payload(parse_type());
  }

  TypeEntry parse_entry(bool branching) {
    std::string label = ident();
    if (branching) {
      expect('?');
      expect('(');
      Payload u = parse_payload();
      expect(')');
      expect('.');
      return {label, u, parse_type()};
    }
    expect('!');
    expect('<');
    Payload u = parse_payload();
    expect('>');
    expect('.');
    return {label, u, parse_type()};
  }

  TypeRef parse_entries(bool branching) {
    expect('{');
    std::vector<TypeEntry> entries;
    entries.push_back(parse_entry(branching));
    while (eat(',')) entries.push_back(parse_entry(branching));
    expect('}');
    std::set<std::string> labels;
    for (const auto& e : entries)
      if (!labels.insert(e.label).second) fail("duplicate label '" + e.label + "'");
    return branching ? t_branch(std::move(entries)) : t_select(std::move(entries));
  }

  TypeRef parse_type() {
    skip_ws();
    if (pos_ >= src_.size()) fail("unexpected end of input");
    char c = src_[pos_];
    if (c == '&') {
      ++pos_;
      return parse_entries(true);
    }
    if (c == '+') {
      ++pos_;
      return parse_entries(false);
    }
    if (c == '(') {
      ++pos_;
      TypeRef t = parse_type();
      expect(')');
      return t;
    }
    std::size_t save = pos_;
    std::string id = ident();
    if (id == "end") return t_end();
    if (id == "rec") {
      std::string var = ident();
      expect('.');
      return t_mu(var, parse_type());
    }
    if (id == "bool" || id == "nat" || id == "int") fail("sort used as a session type");
    skip_ws();
    if (pos_ < src_.size() && (src_[pos_] == '?' || src_[pos_] == '!')) {
      pos_ = save;
      bool branching = false;
      {
        // peek past the label
        std::size_t p = pos_;
        while (p < src_.size() && ident_char(src_[p])) ++p;
        while (p < src_.size() && std::isspace(static_cast<unsigned char>(src_[p]))) ++p;
        branching = p < src_.size() && src_[p] == '?';
      }
      TypeEntry e = parse_entry(branching);
      std::vector<TypeEntry> entries{std::move(e)};
      return branching ? t_branch(std::move(entries)) : t_select(std::move(entries));
    }
    return t_var(id);
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline TypeRef parse_type(std::string_view text) { return detail::TypeParser(text).parse(); }

}  // namespace sesst
