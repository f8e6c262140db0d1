// sesst: session-type algebra, subtyping (sync/async), typechecking,
// operational semantics with error search, characteristic processes and
// preciseness counterexamples on the command line.

#include <CLI11.hpp>

#include <iostream>
#include <sstream>
#include <string>

#include "sesst/characteristic.hpp"
#include "sesst/semantics.hpp"
#include "sesst/serialize.hpp"
#include "sesst/subtyping.hpp"
#include "sesst/testgen.hpp"
#include "sesst/typing.hpp"

namespace {

constexpr int kExitUsage = 64;
constexpr int kExitParse = 65;

struct Options {
  bool flag_sync = false;
  bool flag_async = false;
  bool flag_ext = false;
  bool json = false;
  bool text = false;
  std::size_t depth = 512;
  std::size_t states = 100000;
  std::size_t unfold_budget = 16;
  std::size_t pairs = 4096;

  sesst::Mode mode() const {
    if (flag_ext) return flag_async ? sesst::Mode::ExtAsync : sesst::Mode::ExtSync;
    return flag_async ? sesst::Mode::Async : sesst::Mode::Sync;
  }
  sesst::Budget budget() const { return {pairs, unfold_budget, 32}; }
  sesst::Bounds bounds() const { return {depth, states}; }
};

std::string slurp_arg(const std::string& arg) {
  if (arg != "-") return arg;
  std::ostringstream os;
  os << std::cin.rdbuf();
  return os.str();
}

void add_common(CLI::App* cmd, Options& opt) {
  cmd->add_flag("--sync", opt.flag_sync, "synchronous calculus (default)");
  cmd->add_flag("--async", opt.flag_async, "asynchronous calculus");
  cmd->add_flag("--ext", opt.flag_ext, "extension with sorts and session initialisation");
  cmd->add_flag("--json", opt.json, "JSON output");
  cmd->add_flag("--text", opt.text, "text output (default)");
  cmd->add_option("--depth", opt.depth, "search depth bound");
  cmd->add_option("--states", opt.states, "search state bound");
  cmd->add_option("--unfold", opt.unfold_budget, "mu-unfoldings per decomposition path");
  cmd->add_option("--pairs", opt.pairs, "visited-pair budget for async subtyping");
}

int verdict_exit(const sesst::TriBool& t) {
  if (t.yes()) return 0;
  if (t.no()) return 1;
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace sesst;
  CLI::App app{"session-type subtyping, semantics and preciseness toolkit"};
  app.require_subcommand(1);
  Options opt;

  std::string arg1, arg2;

  auto* c_dual = app.add_subcommand("dual", "dual of a session type");
  c_dual->add_option("type", arg1)->required();
  add_common(c_dual, opt);

  auto* c_unfold = app.add_subcommand("unfold", "head-unfold a session type");
  c_unfold->add_option("type", arg1)->required();
  add_common(c_unfold, opt);

  auto* c_sub = app.add_subcommand("sub", "decide subtyping (exit 0 yes / 1 no / 2 unknown)");
  c_sub->add_option("lhs", arg1)->required();
  c_sub->add_option("rhs", arg2)->required();
  add_common(c_sub, opt);

  auto* c_neg = app.add_subcommand("negate", "negation derivation for a non-subtype pair");
  c_neg->add_option("lhs", arg1)->required();
  c_neg->add_option("rhs", arg2)->required();
  add_common(c_neg, opt);

  auto* c_char = app.add_subcommand("charproc", "characteristic process of a type");
  c_char->add_option("ident", arg1)->required();
  c_char->add_option("type", arg2)->required();
  add_common(c_char, opt);

  auto* c_tc = app.add_subcommand("typecheck", "typecheck a process against an environment");
  c_tc->add_option("process", arg1)->required();
  c_tc->add_option("env", arg2)->required();
  add_common(c_tc, opt);

  auto* c_run = app.add_subcommand("run", "search the reduction graph for error");
  c_run->add_option("process", arg1)->required();
  add_common(c_run, opt);

  auto* c_cex = app.add_subcommand("counterexample",
                                   "synthesise an erring composition for a non-subtype pair");
  c_cex->add_option("lhs", arg1)->required();
  c_cex->add_option("rhs", arg2)->required();
  add_common(c_cex, opt);

  auto* c_prec = app.add_subcommand("preciseness", "run the applicable preciseness leg");
  c_prec->add_option("lhs", arg1)->required();
  c_prec->add_option("rhs", arg2)->required();
  add_common(c_prec, opt);

  auto* c_phi = app.add_subcommand("phi", "input-subject analysis phi(P)");
  c_phi->add_option("process", arg1)->required();
  add_common(c_phi, opt);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    Mode mode = opt.mode();
    Budget budget = opt.budget();
    Bounds bounds = opt.bounds();

    if (*c_dual) {
      std::cout << print_type(dual(parse_type(slurp_arg(arg1)))) << "\n";
      return 0;
    }
    if (*c_unfold) {
      std::cout << print_type(unfold(parse_type(slurp_arg(arg1)))) << "\n";
      return 0;
    }
    if (*c_sub) {
      TypeRef t = parse_type(slurp_arg(arg1));
      TypeRef s = parse_type(slurp_arg(arg2));
      TriBool v;
      if (mode_is_async(mode))
        v = async_subtype(t, s, budget);
      else
        v = {sync_subtype(t, s) ? Verdict::Yes : Verdict::No, ""};
      if (opt.json)
        std::cout << json{{"schema", "sesst/1"}, {"verdict", to_json(v)}}.dump() << "\n";
      else
        std::cout << (v.yes() ? "yes" : v.no() ? "no" : "unknown: " + v.reason) << "\n";
      return verdict_exit(v);
    }
    if (*c_neg) {
      TypeRef t = parse_type(slurp_arg(arg1));
      TypeRef s = parse_type(slurp_arg(arg2));
      std::optional<Derivation> d;
      bool unknown = false;
      if (mode_is_async(mode)) {
        AsyncResult r = async_check(t, s, budget);
        d = std::move(r.negation);
        unknown = r.verdict.unknown();
      } else {
        d = sync_negation(t, s);
      }
      if (!d) {
        std::cout << (unknown ? "unknown" : "subtype holds; no negation derivation") << "\n";
        return unknown ? 2 : 1;
      }
      std::cout << derivation_document(*d).dump(opt.json ? -1 : 2) << "\n";
      return 0;
    }
    if (*c_char) {
      ProcRef p = char_proc(arg1, parse_type(slurp_arg(arg2)), mode);
      std::cout << print_process(p) << "\n";
      return 0;
    }
    if (*c_tc) {
      ProcRef p = parse_process(slurp_arg(arg1));
      ParsedEnv env = parse_env(slurp_arg(arg2));
      TypecheckResult r = typecheck(env.shared, p, env.session, mode, budget);
      if (opt.json) {
        std::cout << json{{"schema", "sesst/1"},
                          {"ok", r.ok},
                          {"diagnostics", r.diagnostics}}
                         .dump()
                  << "\n";
      } else {
        std::cout << (r.ok ? "well-typed" : "ill-typed") << "\n";
        for (const auto& dmsg : r.diagnostics) std::cout << "  " << dmsg << "\n";
      }
      return r.ok ? 0 : 1;
    }
    if (*c_run) {
      ProcRef p = parse_process(slurp_arg(arg1));
      SearchOutcome o = reach_error(p, mode, bounds);
      if (opt.json)
        std::cout << json{{"schema", "sesst/1"}, {"result", to_json(o)}}.dump() << "\n";
      else
        std::cout << to_json(o).dump(2) << "\n";
      if (std::holds_alternative<ErrorReached>(o)) return 1;
      if (std::holds_alternative<BudgetExhausted>(o)) return 2;
      return 0;
    }
    if (*c_cex) {
      TypeRef t = parse_type(slurp_arg(arg1));
      TypeRef s = parse_type(slurp_arg(arg2));
      CounterexampleReport r = counterexample(t, s, mode, budget, bounds);
      std::cout << to_json(r).dump(opt.json ? -1 : 2) << "\n";
      if (error_reached(r.outcome)) return 0;
      if (r.subtype.unknown() || std::holds_alternative<BudgetExhausted>(r.outcome)) return 2;
      return 1;
    }
    if (*c_prec) {
      TypeRef t = parse_type(slurp_arg(arg1));
      TypeRef s = parse_type(slurp_arg(arg2));
      PrecisenessReport r = preciseness_check(t, s, mode, budget, bounds);
      std::cout << to_json(r).dump(opt.json ? -1 : 2) << "\n";
      return r.pass ? 0 : (r.subtype.unknown() ? 2 : 1);
    }
    if (*c_phi) {
      ProcRef p = parse_process(slurp_arg(arg1));
      auto set = phi(p);
      if (opt.json) {
        std::cout << json{{"schema", "sesst/1"}, {"phi", set}}.dump() << "\n";
      } else {
        std::cout << "{";
        bool first = true;
        for (const auto& n : set) {
          if (!first) std::cout << ", ";
          first = false;
          std::cout << n;
        }
        std::cout << "}\n";
      }
      return 0;
    }
  } catch (const sesst::ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kExitParse;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitUsage;
}
