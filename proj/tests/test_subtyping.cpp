#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "fixtures.hpp"
#include "sesst/subtyping.hpp"
#include "sesst/testgen.hpp"

using namespace sesst;

TEST_CASE("subsorting") {
  Sort nat{BaseSort::Nat, nullptr}, intg{BaseSort::Int, nullptr}, boolean{BaseSort::Bool, nullptr};
  CHECK(subsort(nat, intg));
  CHECK_FALSE(subsort(intg, nat));
  CHECK(subsort(nat, nat));
  CHECK_FALSE(subsort(boolean, intg));

  Sort sh1{BaseSort::Shared, parse_type("rec t. l!<end>.t")};
  Sort sh2{BaseSort::Shared, parse_type("l!<end>.rec t. l!<end>.t")};
  Sort sh3{BaseSort::Shared, parse_type("m!<end>.end")};
  CHECK(subsort(sh1, sh2));  // invariant up to tree equality
  CHECK_FALSE(subsort(sh1, sh3));
}

TEST_CASE("payload ordering U <= U'") {
  Payload pint{Sort{BaseSort::Int, nullptr}}, pnat{Sort{BaseSort::Nat, nullptr}};
  Payload pbool{Sort{BaseSort::Bool, nullptr}};
  Payload pend{t_end()};
  Payload pbranch{parse_type("l?(end).end")};

  CHECK(payload_sub(pint, pnat, Mode::Sync).yes());   // B' <=: B, reversed
  CHECK_FALSE(payload_sub(pnat, pint, Mode::Sync).yes());
  CHECK(payload_sub(pbool, pend, Mode::Sync).yes());  // sort below end
  CHECK(payload_sub(pbool, pbool, Mode::Sync).yes());
  CHECK_FALSE(payload_sub(pbool, pbranch, Mode::Sync).yes());
  CHECK_FALSE(payload_sub(pend, pbool, Mode::Sync).yes());
}

TEST_CASE("synchronous subtyping on the introduction fixtures") {
  CHECK(sync_subtype(fixtures::type3(), fixtures::type1()));
  CHECK(sync_subtype(fixtures::type4(), fixtures::type2()));
  CHECK_FALSE(sync_subtype(fixtures::type1(), fixtures::type3()));

  // a selection is never below a branching synchronously
  CHECK_FALSE(
      sync_subtype(parse_type("l!<end>.l2?(end).end"), parse_type("l2?(end).l!<end>.end")));

  CHECK(sync_subtype(t_end(), t_end()));
  CHECK(sync_subtype(parse_type("rec t. l!<end>.t"), parse_type("l!<end>.rec t. l!<end>.t")));
}

TEST_CASE("synchronous negation derivations") {
  auto d1 = sync_negation(t_end(), parse_type("l!<end>.end"));
  REQUIRE(d1);
  CHECK(d1->rule == "n-end r");

  auto d2 = sync_negation(parse_type("l?(end).end"), parse_type("l!<end>.end"));
  REQUIRE(d2);
  CHECK(d2->rule == "n-brasel");

  auto d3 = sync_negation(parse_type("l!<end>.end"), parse_type("m!<end>.end"));
  REQUIRE(d3);
  CHECK(d3->rule == "n-label-sel");
  CHECK(d3->witness.at("label") == "l");

  auto d4 = sync_negation(parse_type("l!<end>.l2?(end).end"), parse_type("l2?(end).l!<end>.end"));
  REQUIRE(d4);
  CHECK(d4->rule == "n-selbra-sync");

  CHECK_FALSE(sync_negation(fixtures::type3(), fixtures::type1()));
}

TEST_CASE("asynchronous subtyping: paper examples") {
  SECTION("Example 4.7(1): recursive output/input permutation") {
    TypeRef t = parse_type("rec t. l!<end>.l2?(end).t");
    TypeRef s = parse_type("rec t. l2?(end).l!<end>.t");
    CHECK(async_subtype(t, s).yes());
    CHECK_FALSE(sync_subtype(t, s));
  }
  SECTION("Example 4.7(2): one extra output ahead") {
    TypeRef t = parse_type("l!<end>.rec t. l!<end>.l2?(end).t");
    TypeRef s = parse_type("l2?(end).rec t. l2?(end).l!<end>.t");
    CHECK(async_subtype(t, s).yes());
  }
  SECTION("the introduction's messaging-overlap pair") {
    CHECK(async_subtype(fixtures::intro_ta(), fixtures::intro_ta_permuted()).yes());
  }
  SECTION("the Mostrous-thesis pair is rejected at any budget") {
    for (std::size_t pairs : {std::size_t(64), std::size_t(256), std::size_t(4096)}) {
      Budget b;
      b.max_pairs = pairs;
      TriBool v = async_subtype(fixtures::mostrous_t(), fixtures::mostrous_s(), b);
      CHECK(v.no());
    }
  }
}

TEST_CASE("asynchronous negation derivations") {
  auto d1 = async_negation(t_end(), parse_type("l?(end).end"));
  REQUIRE(d1);
  CHECK(d1->rule == "n-end r");

  SECTION("the n-cont-async worked example") {
    TypeRef t = parse_type("m!<end>.&{ r?(end).end, s?(end).end }");
    TypeRef s = parse_type("&{ r?(end).m!<end>.end, s?(end).m!<end>.p!<end>.end }");
    auto d = async_negation(t, s);
    REQUIRE(d);
    CHECK(d->rule == "n-cont-async");
  }

  SECTION("Mostrous pair refutation goes through n-bra-async") {
    auto d = async_negation(fixtures::mostrous_t(), fixtures::mostrous_s());
    REQUIRE(d);
    CHECK(d->rule == "n-cont-async");
    CHECK(derivation_uses_rule(*d, "n-bra-async"));
  }

  SECTION("5.10-style pair is refuted by n-sel-async") {
    auto d = async_negation(fixtures::ex510_t(), fixtures::ex510_s());
    REQUIRE(d);
    CHECK(derivation_uses_rule(*d, "n-sel-async"));
  }

  SECTION("5.9-style pair is refuted by n-bra-async") {
    auto d = async_negation(fixtures::ex59_t(), fixtures::ex59_s());
    REQUIRE(d);
    CHECK(d->rule == "n-bra-async");
  }
}

namespace {

bool branch_free_paths(const TypeRef& t) {
  switch (t->kind) {
    case TypeKind::End:
    case TypeKind::Var:
      return true;
    case TypeKind::Branch:
      return false;
    case TypeKind::Mu:
      return branch_free_paths(t->body);
    case TypeKind::Select:
      for (const auto& e : t->entries)
        if (!branch_free_paths(e.cont)) return false;
      return true;
  }
  return false;
}

}  // namespace

TEST_CASE("prune_branchless") {
  SECTION("Example 5.9 adjustment") {
    CHECK(type_equal(prune_branchless(fixtures::ex59_t()), fixtures::ex59_t_adjusted()));
  }
  CHECK(prune_branchless(t_end())->kind == TypeKind::End);

  TypeRef already = parse_type("+{ l!<end>.end, m!<end>.rec t. n!<end>.t }");
  CHECK(type_equal(prune_branchless(already), already));

  CHECK_THROWS_AS(prune_branchless(parse_type("l?(end).end")), std::invalid_argument);

  SECTION("pruned types are branch-free subtypes of their input") {
    std::mt19937_64 rng(31);
    int pruned = 0;
    for (int i = 0; i < 400; ++i) {
      TypeRef t = random_type(rng, GenConfig{});
      if (!no_branching(t)) continue;
      ++pruned;
      TypeRef p = prune_branchless(t);
      CHECK(no_branching(p));
      CHECK(branch_free_paths(p));
      CHECK(sync_subtype(p, t));
    }
    CHECK(pruned > 30);
  }
}

TEST_CASE("classify") {
  Classification c1 = classify(fixtures::type3(), fixtures::type1());
  CHECK(c1.verdict == SubVerdict::SyncSub);

  Classification c2 = classify(fixtures::intro_ta(), fixtures::intro_ta_permuted());
  CHECK(c2.verdict == SubVerdict::AsyncOnlySub);

  Classification c3 = classify(t_end(), t_end());
  CHECK(c3.verdict == SubVerdict::SyncSub);

  Classification c4 = classify(fixtures::mostrous_t(), fixtures::mostrous_s());
  CHECK(c4.verdict == SubVerdict::NotSub);
  REQUIRE(c4.negation);
  CHECK(c4.negation_mode == Mode::Async);
}

TEST_CASE("complement and order properties on a random corpus") {
  std::mt19937_64 rng(101);
  GenConfig cfg;
  cfg.max_depth = 3;

  std::vector<std::pair<TypeRef, TypeRef>> sync_positives;

  for (int i = 0; i < 600; ++i) {
    TypeRef t = random_type(rng, cfg);
    TypeRef s = random_type(rng, cfg);

    bool sub = sync_subtype(t, s);
    auto neg = sync_negation(t, s);
    CHECK(sub == !neg.has_value());  // Lemma 3.4

    CHECK(sync_subtype(t, t));  // reflexivity
    if (sub) sync_positives.emplace_back(t, s);

    AsyncResult ar = async_check(t, s);
    if (!ar.verdict.unknown())
      CHECK(ar.verdict.yes() == !ar.negation.has_value());  // Lemma 5.4

    if (sub) CHECK(async_subtype(t, s).yes());  // <=s is included in <=a
  }

  SECTION("transitivity spot-check") {
    CHECK(sync_subtype(parse_type("+{l!<end>.end}"), parse_type("+{l!<end>.end, m!<end>.end}")));
    CHECK(sync_subtype(parse_type("+{l!<end>.end, m!<end>.end}"),
                       parse_type("+{l!<end>.end, m!<end>.end, n!<end>.end}")));
    CHECK(sync_subtype(parse_type("+{l!<end>.end}"),
                       parse_type("+{l!<end>.end, m!<end>.end, n!<end>.end}")));
    int chained = 0;
    for (const auto& [a, b] : sync_positives) {
      for (const auto& [c, d] : sync_positives) {
        if (type_key(b) != type_key(c)) continue;
        CHECK(sync_subtype(a, d));
        CHECK(async_subtype(a, d).yes());
        ++chained;
      }
    }
    INFO("chained pairs: " << chained);
  }
}
