#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"

using namespace epsos;

TEST_CASE("embedded ccs definition loads and passes both checkers") {
  LoadResult r = load_language(ccs_dsl_text());
  INFO(r.de_simone.str());
  INFO(r.successor_format.str());
  CHECK(r.de_simone.pass());
  CHECK(r.successor_format.pass());
}

TEST_CASE("embedded abcde definition loads and passes both checkers") {
  LoadResult r = load_language(abcde_dsl_text());
  INFO(r.de_simone.str());
  INFO(r.successor_format.str());
  CHECK(r.de_simone.pass());
  CHECK(r.successor_format.pass());
}

TEST_CASE("dsl parse errors") {
  CHECK_THROWS_WITH(parse_language(""), Catch::Matchers::ContainsSubstring("ParseError"));
  CHECK_THROWS_WITH(parse_language("language x ;\nlabels { act = {tau} ; }\nlabels {}"),
                    Catch::Matchers::ContainsSubstring("duplicate section"));
}

TEST_CASE("format errors are located diagnostics") {
  // +L with target x1 + x1: fails the univariate clause.
  std::string text = R"dsl(
language broken ;
sorts { C = { a } ; }
labels { act = C ; }
operators {
  nil arity 0 display token "0" ;
  plus arity 2 display infix "+" prec 20 ;
}
rules {
  "+L" : x -a-> x1 |- plus(x, y) -a-> plus(x1, x1) ;
}
)dsl";
  LoadResult r = load_language(text);
  CHECK_FALSE(r.de_simone.pass());
  CHECK(r.de_simone.has_clause("DS3"));
  CHECK_THROWS_WITH(parse_language(text), Catch::Matchers::ContainsSubstring("FormatError"));
}

TEST_CASE("language load round-trips") {
  // Loading the same text twice yields the same templates and universe.
  LoadResult a = load_language(ccs_dsl_text());
  LoadResult b = load_language(ccs_dsl_text());
  CHECK(a.tsss.tss.templates.size() == b.tsss.tss.templates.size());
  CHECK(a.tsss.successor_templates.size() == b.tsss.successor_templates.size());
  CHECK(a.tsss.tss.universe.labels == b.tsss.tss.universe.labels);
  CHECK(a.tsss.tss.universe.act == b.tsss.tss.universe.act);
}

TEST_CASE("term parser") {
  Tsss c = ccs();

  SECTION("sugar and precedence") {
    auto e = parse_term(c.tss, "a.0 + b.0 | c.0");
    CHECK(render(e) == "a.0 + b.0 | c.0");
    CHECK(e->op.family == "plus");
    auto f = parse_term(c.tss, "(a.0 + b.0) | c.0");
    CHECK(f->op.family == "par");
    CHECK(render(f) == "(a.0 + b.0) | c.0");
  }

  SECTION("prefixes, co-names, tau") {
    auto e = parse_term(c.tss, "~a.tau.0");
    CHECK(render(e) == "~a.tau.0");
  }

  SECTION("restriction and recursion") {
    auto e = parse_term(c.tss, "(a.0 | ~a.0)\\{a}");
    CHECK(e->op.family == "res");
    auto r = parse_term(c.tss, "<X | X = a.X + b.Y, Y = a.Y>");
    CHECK(r->kind == ProcessExpr::Kind::Rec);
    CHECK(is_closed(r));
  }

  SECTION("variables are free names") {
    auto e = parse_term(c.tss, "a.x + y");
    CHECK(free_vars(e) == std::set<Name>({"x", "y"}));
  }

  SECTION("abcde decorations and signalling") {
    Tsss a = abcde();
    CHECK(render(parse_term(a.tss, "b!.0 | b?.0")) == "b!.0 | b?.0");
    CHECK(render(parse_term(a.tss, "0^s | s.0")) == "0^s | s.0");
    CHECK_THROWS(parse_term(a.tss, "b:.0"));  // discards cannot prefix
  }
}
