#pragma once

// JSON views of derivations, traces and reports (schema "sesst/1"). Types and
// processes are printed in the library grammar, so every serialized term can
// be fed back to the parsers.

#include <json.hpp>

#include "sesst/characteristic.hpp"
#include "sesst/semantics.hpp"
#include "sesst/subtyping.hpp"
#include "sesst/typing.hpp"

namespace sesst {

using json = nlohmann::json;

inline json to_json(const Derivation& d) {
  json j;
  j["rule"] = d.rule;
  j["lhs"] = print_type(d.lhs);
  j["rhs"] = print_type(d.rhs);
  json w = json::object();
  for (const auto& [k, v] : d.witness) w[k] = v;
  if (d.context) w["context"] = print_context(d.context);
  j["witnesses"] = w;
  j["premises"] = json::array();
  for (const auto& p : d.premises) j["premises"].push_back(to_json(p));
  return j;
}

inline json derivation_document(const Derivation& d) {
  json j = to_json(d);
  j["schema"] = "sesst/1";
  return j;
}

inline json to_json(const SearchOutcome& o) {
  json j;
  if (const auto* e = std::get_if<ErrorReached>(&o)) {
    j["outcome"] = "error-reached";
    json trace = json::array();
    for (const auto& entry : e->trace)
      trace.push_back({{"rule", entry.rule}, {"state", print(entry.state)}});
    for (const auto& rule : e->error_rules)
      trace.push_back({{"rule", rule}, {"state", "error"}});
    j["trace"] = trace;
    j["error_rules"] = e->error_rules;
  } else if (const auto* n = std::get_if<NoErrorProven>(&o)) {
    j["outcome"] = "no-error-proven";
    j["states_explored"] = n->states_explored;
  } else {
    j["outcome"] = "budget-exhausted";
    j["frontier_size"] = std::get<BudgetExhausted>(o).frontier_size;
  }
  return j;
}

inline const char* mode_name(Mode m) {
  switch (m) {
    case Mode::Sync: return "sync";
    case Mode::Async: return "async";
    case Mode::ExtSync: return "ext-sync";
    case Mode::ExtAsync: return "ext-async";
  }
  return "?";
}

inline json to_json(const TriBool& t) {
  switch (t.v) {
    case Verdict::Yes: return "yes";
    case Verdict::No: return "no";
    case Verdict::Unknown: return json{{"unknown", t.reason}};
  }
  return nullptr;
}

inline json to_json(const CounterexampleReport& r) {
  json j;
  j["schema"] = "sesst/1";
  j["mode"] = mode_name(r.mode);
  j["lhs"] = print_type(r.lhs);
  j["rhs"] = print_type(r.rhs);
  j["subtype"] = to_json(r.subtype);
  if (r.negation) j["negation"] = to_json(*r.negation);
  if (r.adjusted_lhs) j["adjusted_lhs"] = print_type(r.adjusted_lhs);
  if (r.adjusted_rhs_dual) j["adjusted_rhs_dual"] = print_type(r.adjusted_rhs_dual);
  j["changed"] = r.changed;
  if (r.composed) j["composed"] = print_process(r.composed);
  j["result"] = to_json(r.outcome);
  return j;
}

inline json to_json(const PrecisenessReport& r) {
  json j;
  j["schema"] = "sesst/1";
  j["mode"] = mode_name(r.mode);
  j["lhs"] = print_type(r.lhs);
  j["rhs"] = print_type(r.rhs);
  j["subtype"] = to_json(r.subtype);
  j["pass"] = r.pass;
  if (r.sound_leg) j["soundness"] = to_json(r.sound_outcome);
  if (r.complete_leg) j["completeness"] = to_json(r.completeness);
  return j;
}

}  // namespace sesst
