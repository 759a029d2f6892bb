#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "oracles.hpp"

#include <epsos/io.hpp>

using namespace epsos;
using namespace epsos::testing;

namespace {

const Transition* find_by(const std::vector<Transition>& ts,
                          const std::function<bool(const Transition&)>& pred) {
  for (const auto& t : ts)
    if (pred(t)) return &t;
  return nullptr;
}

}  // namespace

TEST_CASE("enabled transitions of simple terms") {
  Tsss c = ccs();
  Engine eng(c);

  CHECK(eng.enabled(parse_term(c.tss, "0")).empty());

  auto ts = eng.enabled(parse_term(c.tss, "a.0"));
  REQUIRE(ts.size() == 1);
  CHECK(ts[0].label == Label("a"));
  CHECK(render(ts[0].tgt) == "0");

  auto choice = eng.enabled(parse_term(c.tss, "a.0 + b.0"));
  CHECK(choice.size() == 2);
}

TEST_CASE("the three transitions of p|q (and p|p)") {
  Fixture f = fixture("sec4_pq");
  Engine eng(f.tsss);
  auto ts = eng.enabled(f.term("pq"));
  REQUIRE(ts.size() == 3);

  const Transition* t_l = find_by(ts, [](const Transition& t) {
    return t.expr->ctor.fmt == "|L" && t.label == Label("a");
  });
  const Transition* t_m = find_by(ts, [](const Transition& t) {
    return t.expr->ctor.fmt == "|L" && t.label == Label("c");
  });
  const Transition* t_r = find_by(ts, [](const Transition& t) {
    return t.expr->ctor.fmt == "|R";
  });
  REQUIRE(t_l);
  REQUIRE(t_m);
  REQUIRE(t_r);
  CHECK(t_r->label == Label("a"));

  // The rightmost transition is concurrent with the middle one; the leftmost
  // one is not.
  CHECK_FALSE(eng.successors(*t_r, *t_m).empty());
  CHECK(eng.successors(*t_l, *t_m).empty());

  // p|p additionally lifts the c-transition on the right; the displayed
  // concurrency pattern concerns the |L pair and the |R a-transition.
  Fixture g = fixture("sec4_pp");
  Engine eng2(g.tsss);
  auto ts2 = eng2.enabled(g.term("pp"));
  REQUIRE(ts2.size() == 4);
  const Transition* s_l = find_by(ts2, [](const Transition& t) {
    return t.expr->ctor.fmt == "|L" && t.label == Label("a");
  });
  const Transition* s_m = find_by(ts2, [](const Transition& t) {
    return t.expr->ctor.fmt == "|L" && t.label == Label("c");
  });
  const Transition* s_r = find_by(ts2, [](const Transition& t) {
    return t.expr->ctor.fmt == "|R" && t.label == Label("a");
  });
  REQUIRE(s_l);
  REQUIRE(s_m);
  REQUIRE(s_r);
  CHECK_FALSE(eng2.successors(*s_r, *s_m).empty());
  CHECK(eng2.successors(*s_l, *s_m).empty());
}

TEST_CASE("successor derivation follows the rule table") {
  Tsss c = ccs();
  Engine eng(c);

  SECTION("rule 7a: left transition survives a right transition") {
    auto ts = eng.enabled(parse_term(c.tss, "a.0 | b.0"));
    REQUIRE(ts.size() == 2);
    const Transition* l = find_by(ts, [](const Transition& t) {
      return t.expr->ctor.fmt == "|L";
    });
    const Transition* r = find_by(ts, [](const Transition& t) {
      return t.expr->ctor.fmt == "|R";
    });
    auto vs = eng.successors(*l, *r);
    REQUIRE(vs.size() == 1);
    CHECK(render_texpr(vs[0].expr) == "(->a 0) |L 0");
    CHECK(render(vs[0].src) == "a.0 | 0");
  }

  SECTION("choice branches are not concurrent") {
    auto ts = eng.enabled(parse_term(c.tss, "a.0 + b.0"));
    REQUIRE(ts.size() == 2);
    CHECK(eng.successors(ts[0], ts[1]).empty());
    CHECK(eng.successors(ts[1], ts[0]).empty());
    CHECK(eng.successors(ts[0], ts[0]).empty());
  }

  SECTION("indicator transitions yield the identity (abcde)") {
    Fixture f = fixture("abcde_bcast");
    Engine ae(f.tsss);
    auto ts = ae.enabled(f.term("r"));
    for (const auto& u : ts) {
      if (f.tsss.tss.universe.is_act(u.label)) continue;
      for (const auto& t : ts) {
        auto vs = ae.successors(t, u);
        REQUIRE(vs.size() == 1);
        CHECK(texpr_equal(vs[0].expr, t.expr));
      }
    }
  }
}

TEST_CASE("abcde nil discards and signal emissions") {
  Fixture f = fixture("abcde_bcast");
  Engine eng(f.tsss);

  auto zero = parse_term(f.tsss.tss, "0");
  auto ts = eng.enabled(zero);
  REQUIRE(ts.size() == 1);
  CHECK(ts[0].label == Label("b", Label::Deco::Dis));
  CHECK(render(ts[0].tgt) == "0");

  auto sig = eng.enabled(parse_term(f.tsss.tss, "0^s"));
  REQUIRE(sig.size() == 2);  // emission ~s and the lifted discard b:
  std::set<std::string> labels;
  for (const auto& t : sig) labels.insert(t.label.str());
  CHECK(labels == std::set<std::string>({"~s", "b:"}));
  for (const auto& t : sig) CHECK(t.tgt->key == t.src->key);  // self-loops
}

TEST_CASE("explore builds the expected systems") {
  Tsss c = ccs();
  Engine eng(c);

  SECTION("a.0") {
    Ltss sys = eng.explore({parse_term(c.tss, "a.0")});
    CHECK(sys.states.size() == 2);
    CHECK(sys.transitions.size() == 1);
    CHECK(sys.successors.empty());
    CHECK(sys.complete);
  }

  SECTION("example 2.2 / 3.1 right program: t1 ~u~> t2 and u ~t1~> u") {
    Fixture f = fixture("ex31");
    Engine fe(f.tsss);
    Ltss sys = fe.explore({f.term("Q")});
    int q = sys.state_of(f.term("Q"));
    REQUIRE(sys.en[q].size() == 2);
    int t1 = -1, u = -1;
    for (int tid : sys.en[q]) {
      if (sys.transitions[tid].label == Label("a")) t1 = tid;
      if (sys.transitions[tid].label == Label("b")) u = tid;
    }
    REQUIRE(t1 >= 0);
    REQUIRE(u >= 0);
    // u ~t1~> u : the b-transition survives the a-loop unchanged.
    auto vs = sys.successors_of(u, t1);
    REQUIRE(vs.size() == 1);
    CHECK(vs[0] == u);
    // t1 ~u~> t2 : the a-loop survives the b-transition as the a-loop of the
    // target state.
    auto ws = sys.successors_of(t1, u);
    REQUIRE(ws.size() == 1);
    const Transition& t2 = sys.transitions[ws[0]];
    CHECK(t2.label == Label("a"));
    CHECK(t2.src->key == sys.transitions[u].tgt->key);
  }
}

TEST_CASE("derived transitions satisfy the indicator invariants") {
  for (const Name& name : {Name("abcde_signal"), Name("abcde_bcast")}) {
    Fixture f = fixture(name);
    Engine eng(f.tsss);
    std::vector<PExpr> roots;
    for (const auto& [_, t] : f.terms) roots.push_back(t);
    Ltss sys = eng.explore(roots);
    REQUIRE(sys.complete);
    for (const auto& t : sys.transitions) {
      if (!f.tsss.tss.universe.is_act(t.label)) {
        INFO(render_texpr(t.expr));
        CHECK(t.tgt->key == t.src->key);  // Obs B.1
      }
    }
    for (const auto& triple : sys.successors) {
      const Transition& u = sys.transitions[triple[1]];
      if (!f.tsss.tss.universe.is_act(u.label)) CHECK(triple[2] == triple[0]);  // Obs B.2
    }
  }
}

TEST_CASE("naming round-trip on every derived transition") {
  for (const auto& name : fixture_names()) {
    Fixture f = fixture(name);
    Engine eng(f.tsss);
    std::vector<PExpr> roots;
    for (const auto& [_, t] : f.terms) roots.push_back(t);
    Ltss sys = eng.explore(roots);
    for (const auto& t : sys.transitions) {
      OpenTransition proof = interpret_expr(f.tsss.tss, t.expr);
      CHECK(texpr_equal(name_of(f.tsss.tss, proof), t.expr));
      CHECK(proof.lit.src->key == t.src->key);
      CHECK(proof.lit.label == t.label);
      CHECK(proof.lit.tgt->key == t.tgt->key);

      // The textual grammar round-trips as well.
      std::string text = render_texpr(t.expr);
      INFO(name + ": " + text);
      TExpr reparsed = parse_transition_expr(f.tsss.tss, text);
      CHECK(texpr_equal(reparsed, t.expr));
    }
  }
}

TEST_CASE("en agrees with the bottom-up proof oracle") {
  for (const auto& name : fixture_names()) {
    Fixture f = fixture(name);
    Engine eng(f.tsss);
    std::vector<PExpr> roots;
    for (const auto& [_, t] : f.terms) roots.push_back(t);
    Ltss sys = eng.explore(roots);
    REQUIRE(sys.complete);
    for (const auto& p : sys.states) {
      ProofOracle oracle(f.tsss);
      std::set<std::string> want = oracle.enabled_keys(p);
      std::set<std::string> got;
      for (int tid : sys.en[sys.state_of(p)]) got.insert(sys.transitions[tid].expr->key);
      INFO(name + " at " + render(p));
      CHECK(got == want);
    }
  }
}

TEST_CASE("unguarded recursion is pruned without error") {
  Tsss c = ccs();
  Engine eng(c);
  auto p = parse_term(c.tss, "<X | X = X>");
  CHECK(eng.enabled(p).empty());

  // Pruned subgoals are not memoized for unrelated computations.
  auto q = parse_term(c.tss, "<X | X = X> | a.0");
  auto ts = eng.enabled(q);
  REQUIRE(ts.size() == 1);
  CHECK(ts[0].label == Label("a"));
}

TEST_CASE("limits") {
  Tsss c = ccs();

  SECTION("depth") {
    ExploreLimits lim;
    lim.max_derivation_depth = 2;
    Engine eng(c, lim);
    CHECK_THROWS_WITH(eng.enabled(parse_term(c.tss, "((a.0 | b.0) | a.0) | b.0")),
                      Catch::Matchers::ContainsSubstring("DepthExceeded"));
  }

  SECTION("transitions per state") {
    ExploreLimits lim;
    lim.max_transitions_per_state = 1;
    Engine eng(c, lim);
    CHECK_THROWS_WITH(eng.enabled(parse_term(c.tss, "a.0 + b.0")),
                      Catch::Matchers::ContainsSubstring("BudgetExceeded"));
  }

  SECTION("state budget truncates exploration") {
    ExploreLimits lim;
    lim.max_states = 1;
    Engine eng(c, lim);
    Ltss sys = eng.explore({parse_term(c.tss, "a.b.0")});
    CHECK_FALSE(sys.complete);
    CHECK_FALSE(sys.truncation_report.empty());
  }
}

TEST_CASE("exploration output is canonical") {
  Fixture f = fixture("sec4_pq");
  Engine a(f.tsss), b(f.tsss);
  Ltss s1 = a.explore({f.term("pq")});
  Ltss s2 = b.explore({f.term("pq")});
  CHECK(ltss_json(s1).dump() == ltss_json(s2).dump());
  CHECK(ltss_json(s1)["complete"] == true);
  CHECK(!ltss_dot(s1).empty());
}
