#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"

using namespace epsos;

namespace {

std::vector<int> trigger_of(const Tss& tss, const std::string& fmt) {
  auto ts = tss.templates_for_name(fmt);
  REQUIRE(!ts.empty());
  return ts[0]->trigger_set();
}

}  // namespace

TEST_CASE("ccs passes both format checkers for several parameter choices") {
  for (auto names : std::vector<std::set<Name>>{{"a"}, {"a", "b"}, {"a", "b", "c"}}) {
    CcsParams p;
    p.handshake_names = names;
    CHECK_NOTHROW(ccs(p));
  }
  CHECK_THROWS_WITH(ccs(CcsParams{{}, {}}),
                    Catch::Matchers::ContainsSubstring("InvalidParams"));
}

TEST_CASE("abcde passes both format checkers") {
  CHECK_NOTHROW(abcde());
  AbcdeParams bad;
  bad.handshake_names = {"x"};
  bad.broadcast_names = {"x"};
  CHECK_THROWS_WITH(abcde(bad), Catch::Matchers::ContainsSubstring("InvalidParams"));
}

TEST_CASE("transition signature trigger sets follow the built-in tables") {
  Tsss a = abcde();
  CHECK(trigger_of(a.tss, "->%1").empty());
  CHECK(trigger_of(a.tss, "(->~%1)").empty());
  CHECK(trigger_of(a.tss, "%1:0").empty());
  CHECK(trigger_of(a.tss, "%1:%2.").empty());
  CHECK(trigger_of(a.tss, "+L") == std::vector<int>{1});
  CHECK(trigger_of(a.tss, "+R") == std::vector<int>{2});
  CHECK(trigger_of(a.tss, "+C") == std::vector<int>({1, 2}));
  CHECK(trigger_of(a.tss, "+Le") == std::vector<int>{1});
  CHECK(trigger_of(a.tss, "+Re") == std::vector<int>{2});
  CHECK(trigger_of(a.tss, "|L") == std::vector<int>{1});
  CHECK(trigger_of(a.tss, "|C") == std::vector<int>({1, 2}));
  CHECK(trigger_of(a.tss, "|R") == std::vector<int>{2});
  CHECK(trigger_of(a.tss, "\\%1") == std::vector<int>{1});
  CHECK(trigger_of(a.tss, "[%1]") == std::vector<int>{1});
  CHECK(trigger_of(a.tss, "^%1A") == std::vector<int>{1});
  CHECK(trigger_of(a.tss, "^%1I") == std::vector<int>{1});
}

TEST_CASE("indicator-identity expansion yields exactly 26 templates") {
  Tsss a = abcde();

  auto expanded = expand_indicator_identity(a.tss, {"nil", "pre", "plus", "sig", "rec"});
  CHECK(expanded.size() == 26);

  std::map<std::string, int> by_type;
  for (const auto& t : expanded) {
    if (t.lhs_is_rec) {
      by_type["rec"]++;
      continue;
    }
    auto ts = a.tss.templates_for_name(t.lhs.fmt);
    REQUIRE(!ts.empty());
    by_type[ts[0]->op_family]++;
  }
  CHECK(by_type["nil"] == 1);
  CHECK(by_type["pre"] == 2);
  CHECK(by_type["plus"] == 15);
  CHECK(by_type["sig"] == 6);
  CHECK(by_type["rec"] == 2);

  SECTION("every expansion template passes the successor format checker") {
    Tsss probe;
    probe.tss = a.tss;
    probe.successor_templates = expanded;
    FormatReport r = check_successor_format(probe);
    INFO(r.str());
    CHECK(r.pass());
  }

  SECTION("nil alone yields one template") {
    auto only = expand_indicator_identity(a.tss, {"nil"});
    CHECK(only.size() == 1);
  }

  SECTION("ccs has no indicator labels, so the expansion is empty") {
    Tsss c = ccs();
    CHECK(expand_indicator_identity(c.tss, {"nil", "pre", "plus", "rec"}).empty());
  }
}

TEST_CASE("fixtures") {
  for (const auto& n : fixture_names()) {
    Fixture f = fixture(n);
    for (const auto& [name, term] : f.terms) {
      INFO(n + "." + name);
      CHECK(is_closed(term));
    }
  }
  Fixture ex31 = fixture("ex31");
  CHECK(render(ex31.term("P")) == "<X|{X = a.X + b.Y, Y = a.Y}>");
  CHECK_THROWS_WITH(fixture("nope"), Catch::Matchers::ContainsSubstring("UnknownFixture"));
  CHECK_THROWS_WITH(ex31.term("nope"), Catch::Matchers::ContainsSubstring("UnknownFixture"));
}

TEST_CASE("instantiate_rules") {
  CcsParams prm;
  prm.handshake_names = {"a", "b"};
  Tsss c = ccs(prm);

  SECTION("choice rules at a label") {
    auto rules = instantiate_rules(c.tss, c.tss.sig.instantiate("plus"), Label("a"));
    REQUIRE(rules.size() == 2);
    std::set<std::string> names;
    for (const auto& r : rules) names.insert(r.name.str());
    CHECK(names == std::set<std::string>({"+L", "+R"}));
    for (const auto& r : rules) {
      REQUIRE(r.premise_labels.size() == 1);
      CHECK(r.premise_labels[0] == Label("a"));
    }
  }

  SECTION("restriction filters by the side condition") {
    auto op = c.tss.sig.instantiate("res", OpParamValue::of_set({Label("a")}));
    CHECK(instantiate_rules(c.tss, op, Label("a")).empty());
    CHECK(instantiate_rules(c.tss, op, Label::bar("a")).empty());
    CHECK(instantiate_rules(c.tss, op, Label("b")).size() == 1);
    CHECK(instantiate_rules(c.tss, op, Label::tau()).size() == 1);
  }

  SECTION("broadcast composition realizes the mode table") {
    Tsss a = abcde();
    auto op = a.tss.sig.instantiate("par");
    auto rules = instantiate_rules(a.tss, op, Label("b", Label::Deco::Snd));
    // b! arises from (!,?), (!,:), (?,!), (:,!).
    std::set<std::pair<std::string, std::string>> pairs;
    for (const auto& r : rules)
      if (r.name.str() == "|C")
        pairs.insert({r.premise_labels[0].str(), r.premise_labels[1].str()});
    CHECK(pairs == std::set<std::pair<std::string, std::string>>(
                       {{"b!", "b?"}, {"b!", "b:"}, {"b?", "b!"}, {"b:", "b!"}}));
  }

  SECTION("unknown operator") {
    OpInstance bogus{"bogus", 0, OpParamValue::none()};
    CHECK_THROWS_WITH(instantiate_rules(c.tss, bogus),
                      Catch::Matchers::ContainsSubstring("UnknownOperator"));
  }
}

TEST_CASE("builtin recursion rules") {
  Tsss c = ccs();
  auto spec = std::make_shared<RecSpec>();
  spec->bindings["X"] = parse_term(c.tss, "a.X");

  auto r = builtin_recursion_rule(c.tss, "X", spec, Label("a"));
  CHECK(r.is_act);
  CHECK(r.name().str() == "rec_Act");
  CHECK(render(r.premise_source) == "a.<X|{X = a.X}>");
  CHECK(render(r.conclusion_source) == "<X|{X = a.X}>");

  Tsss a = abcde();
  auto spec0 = std::make_shared<RecSpec>();
  spec0->bindings["X"] = parse_term(a.tss, "0");
  auto ri = builtin_recursion_rule(a.tss, "X", spec0, Label("b", Label::Deco::Dis));
  CHECK_FALSE(ri.is_act);
  CHECK(ri.name().str() == "rec_In");

  CHECK_THROWS_WITH(builtin_recursion_rule(a.tss, "Y", spec0, Label("b", Label::Deco::Dis)),
                    Catch::Matchers::ContainsSubstring("UnknownRecursionVariable"));
}
