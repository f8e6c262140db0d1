#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "sesst/semantics.hpp"

using namespace sesst;

namespace {

std::set<std::string> successor_keys(const StepResult& sr) {
  std::set<std::string> keys;
  for (const auto& [rule, nf] : sr.successors) keys.insert(canonical_key(nf));
  return keys;
}

}  // namespace

TEST_CASE("expression evaluation") {
  CHECK(eval_expr(parse_process("if succ 5 > 0 then 0 else 0")->expr));
  ExprRef succ5 = e_un(Expr::Kind::Succ, e_val(v_int(5)));
  auto v = eval_expr(succ5);
  REQUIRE(v);
  CHECK(v->num == 6);

  CHECK_FALSE(eval_expr(e_un(Expr::Kind::Succ, e_val(v_int(-5)))));  // succ of a negative
  CHECK_FALSE(eval_expr(e_un(Expr::Kind::Not, e_val(v_int(3)))));
  CHECK_FALSE(eval_expr(e_var("x")));

  auto gt = eval_expr(e_gt(e_val(v_int(1)), e_val(v_int(2))));
  REQUIRE(gt);
  CHECK(gt->kind == Value::Kind::False);

  auto ng = eval_expr(e_un(Expr::Kind::Neg, e_val(v_int(7))));
  REQUIRE(ng);
  CHECK(ng->num == -7);
}

TEST_CASE("mode/syntax mismatches are rejected") {
  CHECK_THROWS_AS(step(normalize(parse_process("queue a b []")), Mode::Sync),
                  std::invalid_argument);
  CHECK_THROWS_AS(step(normalize(parse_process("accept s(x).0")), Mode::Async),
                  std::invalid_argument);
  CHECK_NOTHROW(step(normalize(parse_process("queue a b []")), Mode::Async));
}

TEST_CASE("synchronous reduction") {
  SECTION("r-com-sync") {
    NormalForm nf = normalize(parse_process("(new a b)( a!l<c>.0 | b?l(x).0 )"));
    StepResult sr = step(nf, Mode::Sync);
    CHECK(sr.error_rules.empty());
    REQUIRE(sr.successors.size() == 1);
    CHECK(sr.successors[0].first == "r-com-sync");
    CHECK(sr.successors[0].second.threads.empty());  // reduces to the inert state
  }
  SECTION("substitution of the communicated channel") {
    NormalForm nf = normalize(parse_process("(new a b)( a!l<c>.0 | b?l(x).x!m<d>.0 )"));
    StepResult sr = step(nf, Mode::Sync);
    REQUIRE(sr.successors.size() == 1);
    CHECK(print(sr.successors[0].second).find("c!m<d>") != std::string::npos);
  }
  SECTION("label mismatch flags err-mism-sync") {
    NormalForm nf = normalize(parse_process("(new a b)( a!l<c>.0 | b?m(x).0 )"));
    StepResult sr = step(nf, Mode::Sync);
    CHECK(sr.error_rules.count("err-mism-sync"));
  }
  SECTION("two outputs / two inputs on co-channels") {
    CHECK(step(normalize(parse_process("(new a b)( a!l<c>.0 | b!m<d>.0 )")), Mode::Sync)
              .error_rules.count("err-out-out-sync"));
    CHECK(step(normalize(parse_process("(new a b)( a?l(x).0 | b?m(y).0 )")), Mode::Sync)
              .error_rules.count("err-in-in-sync"));
  }
  SECTION("err-new-sync fires symmetrically") {
    CHECK(step(normalize(parse_process("(new a b)( b?l(x).0 )")), Mode::Sync)
              .error_rules.count("err-new-sync"));
    CHECK(step(normalize(parse_process("(new a b)( a?l(x).0 )")), Mode::Sync)
              .error_rules.count("err-new-sync"));
  }
  SECTION("r-choice explores both branches") {
    NormalForm nf = normalize(parse_process("a!l<c>.0 (+) a!m<c>.0"));
    StepResult sr = step(nf, Mode::Sync);
    CHECK(sr.successors.size() == 2);
  }
  SECTION("r-def expands recursive definitions") {
    NormalForm nf = normalize(parse_process("def X(x) = x!l<c>.X<x> in X<a>"));
    StepResult sr = step(nf, Mode::Sync);
    REQUIRE(sr.successors.size() == 1);
    CHECK(sr.successors[0].first == "r-def");
    CHECK(print(sr.successors[0].second).find("a!l<c>") != std::string::npos);
  }
  SECTION("successors depend only on the normal form") {
    ProcRef p1 = parse_process("(new a b)( a!l<c>.0 | b?l(x).0 ) | d!m<e>.0");
    ProcRef p2 = parse_process("d!m<e>.0 | (new a2 b2)( b2?l(x).0 | a2!l<c>.0 )");
    CHECK(successor_keys(step(normalize(p1), Mode::Sync)) ==
          successor_keys(step(normalize(p2), Mode::Sync)));
  }
}

TEST_CASE("asynchronous reduction") {
  SECTION("r-send-async and r-receive-async") {
    NormalForm nf = normalize(parse_process("queue a b [] | a!l<c>.0 | b?l(x).0"));
    StepResult sr = step(nf, Mode::Async);
    REQUIRE(sr.successors.size() == 1);
    CHECK(sr.successors[0].first == "r-send-async");
    StepResult sr2 = step(sr.successors[0].second, Mode::Async);
    REQUIRE(sr2.successors.size() == 1);
    CHECK(sr2.successors[0].first == "r-receive-async");
  }
  SECTION("err-mism-async on a queued head") {
    NormalForm nf = normalize(parse_process("queue a b [l<c>] | b?m(x).0"));
    CHECK(step(nf, Mode::Async).error_rules.count("err-mism-async"));
  }
  SECTION("err-in-in-async deadlock shape") {
    NormalForm nf = normalize(
        parse_process("(new a b)( a?l(x).0 | b?m(y).0 | queue a b [] | queue b a [] )"));
    CHECK(step(nf, Mode::Async).error_rules.count("err-in-in-async"));
  }
  SECTION("err-in-async: co-channel only a queue name") {
    NormalForm nf =
        normalize(parse_process("(new a b)( a?l(x).0 | queue b a [] | queue a b [l<c>] )"));
    CHECK(step(nf, Mode::Async).error_rules.count("err-in-async"));
  }
  SECTION("the Mostrous-thesis configuration flags an orphan message") {
    ProcRef p = parse_process(
        "(new a b)(new c c1)("
        "  def Z(z) = a!l<z>.Z<z> in (new d d1) Z<d>"
        "| def Y(x) = b!l<x>.b?l2(y).Y<x> in Y<c>"
        "| queue a b [] | queue b a [l2<c>] )");
    StepResult sr = step(normalize(p), Mode::Async);
    CHECK(sr.error_rules.count("err-orph-mess-async"));
  }
  SECTION("a pending reader suppresses the orphan rule") {
    ProcRef p = parse_process("(new a b)( a?l2(x).0 | queue a b [] | queue b a [l2<c>] )");
    StepResult sr = step(normalize(p), Mode::Async);
    CHECK_FALSE(sr.error_rules.count("err-orph-mess-async"));
  }
}

TEST_CASE("extended reduction") {
  SECTION("session initialisation") {
    NormalForm nf = normalize(parse_process("accept s(x).x!l[5].0 | request s(y).y?l(z).0"));
    StepResult sr = step(nf, Mode::ExtSync);
    REQUIRE(sr.successors.size() == 1);
    CHECK(sr.successors[0].first == "r-init-sync");
    CHECK(sr.successors[0].second.nu_linear.size() == 1);

    StepResult sra = step(nf, Mode::ExtAsync);
    REQUIRE(sra.successors.size() == 1);
    CHECK(sra.successors[0].first == "r-init-async");
    int queues = 0;
    for (const auto& t : sra.successors[0].second.threads)
      if (t->kind == ProcKind::Queue) ++queues;
    CHECK(queues == 2);
  }
  SECTION("value communication and conditionals") {
    NormalForm nf = normalize(parse_process("(new a b)( a!l[succ 1].0 | b?l(x).if x > 1 then 0 else error )"));
    StepResult sr = step(nf, Mode::ExtSync);
    REQUIRE(sr.successors.size() == 1);
    CHECK(sr.successors[0].first == "r-com-sync-ext");
    StepResult sr2 = step(sr.successors[0].second, Mode::ExtSync);
    REQUIRE(sr2.successors.size() == 1);
    CHECK(sr2.successors[0].first == "r-t-cond");
  }
  SECTION("stuck expressions flag errors") {
    CHECK(step(normalize(parse_process("if succ -5 > 0 then 0 else 0")), Mode::ExtSync)
              .error_rules.count("err-cond"));
    CHECK(step(normalize(parse_process("a!l[not 3].0")), Mode::ExtSync)
              .error_rules.count("err-com-ext"));
  }
  SECTION("values and shared channels in channel positions") {
    // a value subject
    NormalForm nf =
        normalize(parse_process("(new a b)( a!l[true].0 | b?l(x).x?m(y).0 )"));
    StepResult sr = step(nf, Mode::ExtSync);
    REQUIRE(sr.successors.size() == 1);
    CHECK(step(sr.successors[0].second, Mode::ExtSync).error_rules.count("err-chan-in"));
    // accept on a linear channel
    CHECK(step(normalize(parse_process("(new a b)( accept a(x).0 )")), Mode::ExtSync)
              .error_rules.count("err-acc"));
    CHECK(step(normalize(parse_process("request true(x).0")), Mode::ExtSync)
              .error_rules.count("err-req"));
  }
}

TEST_CASE("reach_error") {
  SECTION("missing co-channel errs immediately") {
    SearchOutcome o = reach_error(parse_process("(new a b)( 0 | b?l(x).0 )"), Mode::Sync);
    REQUIRE(error_reached(o));
    CHECK(std::get<ErrorReached>(o).error_rules.count("err-new-sync"));
    CHECK(std::get<ErrorReached>(o).trace.size() == 1);
  }
  SECTION("a clean communication proves no error") {
    SearchOutcome o = reach_error(parse_process("(new a b)( a!l<c>.0 | b?l(x).0 )"), Mode::Sync);
    REQUIRE(std::holds_alternative<NoErrorProven>(o));
    CHECK(std::get<NoErrorProven>(o).states_explored == 2);
  }
  SECTION("recursive loops fold into a finite graph") {
    SearchOutcome o = reach_error(
        parse_process("(new a b)(def X(x) = x!l<c>.X<x> in def Y(y) = y?l(z).Y<y> in"
                      " (X<a> | Y<b>))"),
        Mode::Sync);
    CHECK(std::holds_alternative<NoErrorProven>(o));
  }
  SECTION("state caps report budget exhaustion") {
    Bounds tight;
    tight.max_states = 2;
    SearchOutcome o = reach_error(
        parse_process("queue a b [] | def X(x) = x!l<c>.X<x> in X<a>"), Mode::Async, tight);
    CHECK(std::holds_alternative<BudgetExhausted>(o));
  }
}

TEST_CASE("error persistence on sampled reduction graphs") {
  // If a state enables an error rule, every non-error reduct enables one too.
  auto sample = [](const ProcRef& p, Mode mode) {
    std::vector<NormalForm> states{normalize(p)};
    std::size_t scanned = 0;
    while (scanned < states.size() && states.size() < 60) {
      StepResult sr = step(states[scanned++], mode);
      for (auto& [rule, nf] : sr.successors) states.push_back(nf);
    }
    return states;
  };
  std::vector<std::pair<std::string, Mode>> configs = {
      {"(new a b)( a!l<c>.0 | b?m(x).d!k<e>.0 )", Mode::Sync},
      {"(new a b)( a!l<c>.a!m<c>.0 | queue a b [l<x>] | queue b a [] | b?k(y).0 )",
       Mode::Async},
  };
  for (const auto& [src, mode] : configs) {
    auto states = sample(parse_process(src), mode);
    for (const auto& st : states) {
      StepResult sr = step(st, mode);
      if (sr.error_rules.empty()) continue;
      for (const auto& [rule, next] : sr.successors) {
        CHECK_FALSE(step(next, mode).error_rules.empty());
      }
    }
  }
}
