#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "fixtures.hpp"
#include "sesst/testgen.hpp"
#include "sesst/type.hpp"

using namespace sesst;

TEST_CASE("parser handles the grammar and its sugar") {
  CHECK(parse_type("end")->kind == TypeKind::End);

  TypeRef fig2 = parse_type("rec t . +{ l1!<end>.t , l2!<end>.end }");
  REQUIRE(fig2->kind == TypeKind::Mu);
  REQUIRE(fig2->body->kind == TypeKind::Select);
  CHECK(fig2->body->entries.size() == 2);
  CHECK(fig2->body->entries[0].label == "l1");
  CHECK(fig2->body->entries[0].cont->kind == TypeKind::Var);

  TypeRef single = parse_type("ok?(end).end");
  REQUIRE(single->kind == TypeKind::Branch);
  CHECK(single->entries.size() == 1);

  TypeRef sorts = parse_type("+{ a!<bool>.end, b!<nat>.end, c!<int>.end, d!<<end>>.end }");
  CHECK(sorts->entries[0].payload.sort().base == BaseSort::Bool);
  CHECK(sorts->entries[3].payload.sort().base == BaseSort::Shared);

  SECTION("errors carry positions") {
    CHECK_THROWS_AS(parse_type("&{ ok?(end).end, ok?(end).end }"), ParseError);
    CHECK_THROWS_AS(parse_type("rec t. t"), ParseError);           // not contractive
    CHECK_THROWS_AS(parse_type("rec t. rec s. t"), ParseError);    // mu-chain
    CHECK_THROWS_AS(parse_type("l!<t>.end"), ParseError);          // open payload
    CHECK_THROWS_AS(parse_type("&{}"), ParseError);
    CHECK_THROWS_AS(parse_type("end garbage"), ParseError);
  }
}

TEST_CASE("printing round-trips through the parser") {
  auto round = [](const std::string& s) {
    TypeRef t = parse_type(s);
    TypeRef again = parse_type(print_type(t));
    CHECK(type_key(t) == type_key(again));
  };
  round("end");
  round("rec t . +{ l1!<end>.t , l2!<l3!<end>.end>.end }");
  round("&{ a?(bool).end, b?(<l!<end>.end>).a2!<int>.end }");

  std::mt19937_64 rng(7);
  GenConfig cfg;
  cfg.with_sorts = true;
  for (int i = 0; i < 200; ++i) {
    TypeRef t = random_type(rng, cfg);
    CHECK(type_key(parse_type(print_type(t))) == type_key(t));
  }
}

TEST_CASE("duality swaps branchings and selections along continuations") {
  CHECK(dual(t_end())->kind == TypeKind::End);
  CHECK(type_equal(dual(fixtures::type1()), fixtures::type2()));

  // payloads are untouched
  TypeRef t = parse_type("rec t. l!<end>.t");
  TypeRef d = dual(t);
  REQUIRE(d->kind == TypeKind::Mu);
  CHECK(d->body->kind == TypeKind::Branch);
  CHECK(d->body->entries[0].payload.session()->kind == TypeKind::End);

  std::mt19937_64 rng(11);
  GenConfig cfg;
  for (int i = 0; i < 500; ++i) {
    TypeRef x = random_type(rng, cfg);
    CHECK(type_key(dual(dual(x))) == type_key(x));  // involution
  }
}

TEST_CASE("unfolding") {
  CHECK(unfold(t_end())->kind == TypeKind::End);

  TypeRef fig2 = parse_type("rec t . +{ l1!<end>.t , l2!<end>.end }");
  TypeRef u = unfold(fig2);
  REQUIRE(u->kind == TypeKind::Select);
  CHECK(type_equal(u->entries[0].cont, fig2));  // l1 continuation is the mu again

  TypeRef nested = parse_type("rec t. rec s. l!<end>.s");
  TypeRef nu = unfold(nested);
  REQUIRE(nu->kind == TypeKind::Select);
  CHECK(type_equal(nu->entries[0].cont, parse_type("rec s. l!<end>.s")));

  SECTION("unfold preserves tree equality") {
    std::mt19937_64 rng(13);
    for (int i = 0; i < 300; ++i) {
      TypeRef t = random_type(rng, GenConfig{});
      CHECK(type_equal(t, unfold(t)));
    }
  }
}

TEST_CASE("regular tree equality") {
  CHECK(type_equal(parse_type("rec t. l!<end>.t"), parse_type("l!<end>.rec t. l!<end>.t")));
  CHECK_FALSE(type_equal(t_end(), parse_type("rec t. l!<end>.t")));
  CHECK(type_equal(parse_type("rec t. l!<end>.l!<end>.t"), parse_type("rec t. l!<end>.t")));
  // label order is irrelevant
  CHECK(type_equal(parse_type("&{ a?(end).end, b?(end).end }"),
                   parse_type("&{ b?(end).end, a?(end).end }")));
}

TEST_CASE("branching/selection path predicates") {
  // Example 4.4
  CHECK(has_branching(parse_type("l!<end>.l2?(end).end")));
  TypeRef loop = parse_type("rec t. +{ l!<end>.l2?(end).t, l3!<end>.t }");
  CHECK_FALSE(has_branching(loop));
  CHECK(no_branching(loop));
  CHECK_FALSE(has_branching(t_end()));
  CHECK(no_branching(t_end()));
  CHECK(has_branching(parse_type("rec t. l!<end>.l2?(end).t")));

  SECTION("complement and dual properties on random types") {
    std::mt19937_64 rng(17);
    for (int i = 0; i < 500; ++i) {
      TypeRef t = random_type(rng, GenConfig{});
      CHECK(has_branching(t) != no_branching(t));            // Prop C.3
      CHECK(has_selection(t) != no_selection(t));
      CHECK(has_branching(t) == has_selection(dual(t)));     // Prop 5.6
      TypeRef u = unfold(t);
      CHECK(has_branching(t) == has_branching(u));           // Prop B.1
      CHECK(no_branching(t) == no_branching(u));             // Prop C.1
    }
  }
}

TEST_CASE("asynchronous context decomposition") {
  SECTION("a bare selection is a single hole") {
    TypeRef s = parse_type("+{ l!<end>.end, m!<end>.end }");
    auto dec = decompose_context(s);
    REQUIRE(dec);
    CHECK(dec->ctx->is_hole);
    REQUIRE(dec->holes.size() == 1);
    CHECK(type_equal(dec->holes.begin()->second, s));
    CHECK(type_equal(fill_context(dec->ctx, dec->holes), s));
  }

  SECTION("the two-hole context of Example 4.5") {
    TypeRef s = parse_type(
        "&{ r?(end).+{ m!<end>.end, p!<end>.end },"
        "   s?(end).+{ m!<end>.end, p!<end>.end, q!<end>.end } }");
    auto dec = decompose_context(s);
    REQUIRE(dec);
    CHECK_FALSE(dec->ctx->is_hole);
    std::vector<int> holes;
    context_holes(dec->ctx, holes);
    REQUIRE(holes.size() == 2);
    CHECK(dec->holes.at(holes[0])->entries.size() == 2);
    CHECK(dec->holes.at(holes[1])->entries.size() == 3);
    CHECK(type_equal(fill_context(dec->ctx, dec->holes), s));
  }

  SECTION("paths ending in end are structural absence") {
    DecomposeFailure why;
    CHECK_FALSE(decompose_context(parse_type("l?(end).end"), 16, &why));
    CHECK(why == DecomposeFailure::Structural);
    CHECK_FALSE(decompose_context(t_end(), 16, &why));
  }

  SECTION("budget exhaustion is reported distinctly") {
    DecomposeFailure why;
    // an infinite branching spine never reaches a selection
    CHECK_FALSE(decompose_context(parse_type("rec t. l?(end).t"), 8, &why));
    CHECK(why == DecomposeFailure::Budget);
  }

  SECTION("decomposition of unfoldings refills to a tree-equal type") {
    std::mt19937_64 rng(23);
    int decomposed = 0;
    for (int i = 0; i < 400; ++i) {
      TypeRef t = random_type(rng, GenConfig{});
      auto dec = decompose_context(t);
      if (!dec) continue;
      ++decomposed;
      CHECK(type_equal(fill_context(dec->ctx, dec->holes, TypeKind::Branch), t));
    }
    CHECK(decomposed > 20);
  }
}
