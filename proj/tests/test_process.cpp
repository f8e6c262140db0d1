#include <catch2/catch_amalgamated.hpp>

#include "sesst/process.hpp"

using namespace sesst;

TEST_CASE("process parsing") {
  CHECK(parse_process("0")->kind == ProcKind::Nil);
  CHECK(parse_process("error")->kind == ProcKind::Error);

  ProcRef redex = parse_process("(new a b)( a!l<c>.0 | b?l(x).0 )");
  REQUIRE(redex->kind == ProcKind::NewLinear);
  REQUIRE(redex->left->kind == ProcKind::Par);
  CHECK(redex->left->left->kind == ProcKind::OutputChan);
  CHECK(redex->left->right->kind == ProcKind::Input);

  ProcRef multi = parse_process("u?{l1(x).0, l2(y).0}");
  REQUIRE(multi->kind == ProcKind::Input);
  CHECK(multi->branches.size() == 2);

  ProcRef choice = parse_process("0 (+) 0 (+) 0");
  REQUIRE(choice->kind == ProcKind::Choice);
  CHECK(choice->right->kind == ProcKind::Choice);  // folds right

  ProcRef q = parse_process("queue a b [l1<c1>, l2<5>]");
  REQUIRE(q->kind == ProcKind::Queue);
  REQUIRE(q->items.size() == 2);
  CHECK(std::holds_alternative<Id>(q->items[0].content));
  CHECK(std::holds_alternative<Value>(q->items[1].content));

  ProcRef ext = parse_process("if succ x > 0 then u!l[5].0 else (news s)(accept s(y).0)");
  CHECK(ext->kind == ProcKind::Cond);

  SECTION("rejected forms") {
    CHECK_THROWS_AS(parse_process("def X(x) = X<x> in X<a>"), ParseError);  // unguarded recursion
    CHECK_THROWS_AS(parse_process("def X(x) = X<x> (+) a!l<b>.0 in 0"), ParseError);
    CHECK_THROWS_AS(parse_process("u?{l(x).0, l(y).0}"), std::exception);  // duplicate label
    CHECK_THROWS_AS(parse_process("a!l<b>"), ParseError);                  // missing continuation
  }

  SECTION("guarded recursion accepts prefixed calls") {
    CHECK_NOTHROW(parse_process("def X(x) = x!l<a>.X<x> in X<b>"));
    CHECK_NOTHROW(parse_process("def X(x) = x?l(y).X<x> in X<b>"));
  }
}

TEST_CASE("Barendregt freshening") {
  // the same bound name in two bindings gets split apart
  ProcRef p = parse_process("a?l(x).0 | b?l(x).0");
  REQUIRE(p->kind == ProcKind::Par);
  CHECK(p->left->branches[0].bound != p->right->branches[0].bound);

  // a bound name colliding with a free one is renamed
  ProcRef q = parse_process("(new a b)(a!l<c>.0) | a!m<d>.0");
  REQUIRE(q->kind == ProcKind::Par);
  CHECK(q->left->nu_a != "a");
}

TEST_CASE("printing round-trips") {
  auto round = [](const std::string& s) {
    ProcRef p = parse_process(s);
    ProcRef again = parse_process(print_process(p));
    CHECK(print_process(again) == print_process(p));
  };
  round("0");
  round("(new a b)( a!l<c>.0 | b?l(x).0 )");
  round("def X(x) = x!l<a>.X<x> in X<b>");
  round("u?{l1(x).(0 | c!m<x>.0), l2(y).0} (+) queue a b [l<c>, m<-7>]");
  round("if not true then a!l[succ 3].0 else (news s)(accept s(x).0 | request s(y).0)");
}

TEST_CASE("substitution") {
  SECTION("channel for variable") {
    ProcRef p = parse_process("x?l(y).0");
    ProcRef r = substitute(p, {{"x", UVal(Id{"c", IdKind::Linear})}});
    CHECK(print_process(r) == "c?l(y).0");
  }
  SECTION("value into expressions") {
    ProcRef p = parse_process("if succ x > 0 then 0 else 0");
    ProcRef r = substitute(p, {{"x", UVal(v_int(5))}});
    CHECK(print_process(r) == "if succ 5 > 0 then 0 else 0");
  }
  SECTION("both occurrences in a definition") {
    ProcRef p = parse_process("def Y(y) = y!l<x>.0 in Y<x>");
    ProcRef r = substitute(p, {{"x", UVal(Id{"c", IdKind::Linear})}});
    CHECK(print_process(r) == "def Y(y) = y!l<c>.0 in Y<c>");
  }
  SECTION("capture avoidance") {
    ProcRef p = parse_process("a?l(c).x!m<c>.0");
    // substituting c for x must not let the binder capture it
    ProcRef r = substitute(p, {{"x", UVal(Id{"c", IdKind::Linear})}});
    REQUIRE(r->kind == ProcKind::Input);
    std::string bound = r->branches[0].bound;
    CHECK(bound != "c");
    CHECK(print_process(r->branches[0].body) == "c!m<" + bound + ">.0");
  }
}

TEST_CASE("free names") {
  SECTION("subject channels follow the displayed equations") {
    CHECK(subject_channels(parse_process("a!l<c>.0")) == std::set<std::string>{"a"});
    // with a variable subject the first prefix contributes nothing
    ProcRef varsubj = p_out_chan(Id{"x", IdKind::Variable}, "l", Id{"c", IdKind::Linear},
                                 parse_process("a?l(y).0"));
    CHECK(subject_channels(varsubj) == std::set<std::string>{"a"});
    CHECK(subject_channels(parse_process("def X(x) = a!l<x>.X<x> in b?m(z).0")) ==
          std::set<std::string>{"b"});
  }
  SECTION("queues contribute their endpoints and contents") {
    CHECK(free_channels(parse_process("queue c b []")) == std::set<std::string>{"b", "c"});
    CHECK(free_channels(parse_process("queue c b [l<a>]")) ==
          std::set<std::string>{"a", "b", "c"});
  }
  SECTION("process variables") {
    CHECK(free_process_vars(parse_process("X<a> | def Y(x) = x!l<a>.Y<x> in Y<b>")) ==
          std::set<std::string>{"X"});
  }
}

TEST_CASE("structural congruence normal forms") {
  SECTION("nil units disappear") {
    NormalForm nf = normalize(parse_process("0 | a!l<c>.0 | 0"));
    CHECK(nf.threads.size() == 1);
  }
  SECTION("s-null collects an isolated empty queue pair") {
    NormalForm nf = normalize(parse_process("(new a b)( queue a b [] | queue b a [] )"));
    CHECK(nf.threads.empty());
    CHECK(nf.nu_linear.empty());
  }
  SECTION("queues stay while their channels are in use") {
    NormalForm nf =
        normalize(parse_process("(new a b)( queue a b [] | queue b a [] | a!l<c>.0 )"));
    CHECK(nf.threads.size() == 3);
    CHECK(nf.nu_linear.size() == 1);
  }
  SECTION("restrictions and definitions commute into canonical order") {
    ProcRef p1 = parse_process("def B(x) = x!l<a>.B<x> in def A(y) = y!m<a>.A<y> in (A<c> | B<d>)");
    ProcRef p2 = parse_process("def A(y) = y!m<a>.A<y> in def B(x) = x!l<a>.B<x> in (B<d> | A<c>)");
    CHECK(canonical_key(normalize(p1)) == canonical_key(normalize(p2)));
  }
  SECTION("normalization is idempotent") {
    ProcRef p = parse_process(
        "(new a b)(def X(x) = x!l<a>.X<x> in (X<a> | 0 | (b?l(y).0 | queue a b [])))");
    NormalForm n1 = normalize(p);
    NormalForm n2 = normalize(to_process(n1));
    CHECK(canonical_key(n1) == canonical_key(n2));
    CHECK(print(n1) == print(n2));
  }
  SECTION("parallel order does not matter") {
    ProcRef p1 = parse_process("a!l<c>.0 | b?m(x).0");
    ProcRef p2 = parse_process("b?m(x).0 | a!l<c>.0");
    CHECK(canonical_key(normalize(p1)) == canonical_key(normalize(p2)));
  }
  SECTION("normalize preserves the free-name functions") {
    ProcRef p = parse_process("(new a b)(a!l<c>.0 | 0 | b?l(x).x?m(y).0) | d!k<e>.0");
    NormalForm nf = normalize(p);
    CHECK(free_channels(to_process(nf)) == free_channels(p));
    CHECK(subject_channels(to_process(nf)) == subject_channels(p));
  }
}

TEST_CASE("gamma, delta, phi") {
  CHECK(gamma(std::vector<Message>{}).empty());  // gamma(empty) = empty

  SECTION("the motivating example yields {a, b}") {
    ProcRef p = parse_process("b?l0(x).x?l1(y).0 | c!l0<a>.0 | queue c b []");
    CHECK(phi(p) == std::set<std::string>{"a", "b"});
  }
  SECTION("the recursive example yields {c, b}") {
    ProcRef p = parse_process(
        "def X(x) = a!l<x>.X<x> in (X<c> | b?l(y).y?l(z).0 | queue a b [] | queue b a [])");
    CHECK(phi(p) == std::set<std::string>{"b", "c"});
  }
  SECTION("phi requires all process variables bound") {
    CHECK_THROWS_AS(phi(parse_process("X<a>")), std::invalid_argument);
  }
  SECTION("normalize preserves phi") {
    ProcRef p = parse_process(
        "def X(x) = a!l<x>.X<x> in (X<c> | b?l(y).y?l(z).0 | queue a b [] | queue b a [])");
    CHECK(phi(to_process(normalize(p))) == phi(p));
  }
}
