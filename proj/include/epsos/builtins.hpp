#pragma once

#include "epsos/dsl.hpp"

namespace epsos {

// ---------------------------------------------------------------------------
// Built-in language definitions. Both are authored in the DSL and assembled
// as text, so every load exercises the parser and both format checkers.
// ---------------------------------------------------------------------------

struct CcsParams {
  std::set<Name> handshake_names = {"a", "b", "c"};
  std::map<Name, std::map<Name, Name>> relabellings;
};

struct AbcdeParams {
  std::set<Name> handshake_names = {"c"};
  std::set<Name> broadcast_names = {"b"};
  std::set<Name> signal_names = {"s"};
  std::map<Name, std::map<Name, Name>> relabellings;
};

namespace detail {

inline std::string sort_line(const Name& sort, const std::set<Name>& elems) {
  std::vector<std::string> es(elems.begin(), elems.end());
  return "  " + sort + " = { " + join(es, ", ") + " } ;\n";
}

inline std::string functions_section(const std::map<Name, std::map<Name, Name>>& fns,
                                     const std::string& domain) {
  std::string out = "functions {\n";
  for (const auto& [name, table] : fns) {
    std::vector<std::string> entries;
    for (const auto& [from, to] : table) entries.push_back(from + " -> " + to);
    out += "  " + name + " : " + domain + " = { " + join(entries, ", ") + " } ;\n";
  }
  return out + "}\n";
}

/// Rule bodies shared between CCS and ABCdE (Milner's core. The label classes
/// eta and handshakeable differ per language).
inline const char* core_rule_lines() {
  return R"dsl(
  "->%1" name(a) : |- pre[a](x) -a-> x ;
  "+L"           : x -a-> x1 |- plus(x, y) -a-> x1   where a in act ;
  "+R"           : y -a-> y1 |- plus(x, y) -a-> y1   where a in act ;
  "|L"           : x -e-> x1 |- par(x, y) -e-> par(x1, y)  where e in eta ;
  "|C"           : x -c-> x1 , y -d-> y1 |- par(x, y) -tau-> par(x1, y1)
                   where d = ~c , c in handshakeable ;
  "|R"           : y -e-> y1 |- par(x, y) -e-> par(x, y1)  where e in eta ;
  "\%1" name(L)  : x -l-> x1 |- res[L](x) -l-> res[L](x1)  where l notin L | ~L ;
  "[%1]" name(f) : x -l-> x1 |- ren[f](x) -f(l)-> ren[f](x1) ;
)dsl";
}

inline const char* core_successor_lines() {
  return R"dsl(
  "3a"  : "+L"(t1, x2) ~ "+L"(u1, x2) => s1 ;
  "4a"  : "+R"(x1, t2) ~ "+R"(x1, u2) => s2 ;
  "7a"  : "|L"(t1, x2) ~ "|R"(x1, u2) => "|L"(t1, y2) ;
  "7b"  : "|R"(x1, t2) ~ "|L"(u1, x2) => "|R"(y1, t2) ;
  "8a"  : "|L"(t1, x2) ~ "|L"(u1, x2) => "|L"(s1, x2) ;
  "8b"  : "|L"(t1, x2) ~ "|C"(u1, u2) => "|L"(s1, y2) ;
  "8c"  : "|C"(t1, t2) ~ "|L"(u1, x2) => "|C"(s1, t2) ;
  "9a"  : "|R"(x1, t2) ~ "|R"(x1, u2) => "|R"(x1, s2) ;
  "9b"  : "|R"(x1, t2) ~ "|C"(u1, u2) => "|R"(y1, s2) ;
  "9c"  : "|C"(t1, t2) ~ "|R"(x1, u2) => "|C"(t1, s2) ;
  "10"  : "|C"(t1, t2) ~ "|C"(u1, u2) => "|C"(s1, s2) ;
  "11a" : "\%1"[L](t1) ~ "\%1"[L](u1) => "\%1"[L](s1) ;
  "11b" : "[%1]"[f](t1) ~ "[%1]"[f](u1) => "[%1]"[f](s1) ;
)dsl";
}

}  // namespace detail

/// CCS over a finite set of handshake names: Act = C | ~C | {tau}, no
/// indicator labels, successor rules of the full table for choice, parallel
/// composition, restriction, relabelling and recursion.
inline std::string ccs_dsl_text(const CcsParams& params = {}) {
  if (params.handshake_names.empty())
    fail("InvalidParams", "ccs requires a non-empty set of handshake names");
  std::string text = "language ccs ;\n";
  text += "sorts {\n" + detail::sort_line("C", params.handshake_names) + "}\n";
  text += R"dsl(
labels {
  act = C | ~C | { tau } ;
  indicator = { } ;
  eta = act ;
  handshakeable = C | ~C ;
}
)dsl";
  text += detail::functions_section(params.relabellings, "C");
  text += R"dsl(
operators {
  nil  arity 0 display token "0" ;
  pre  arity 1 param label in act display dot ;
  plus arity 2 display infix "+" prec 20 ;
  par  arity 2 display infix "|" prec 30 ;
  res  arity 1 param set of C display restrict ;
  ren  arity 1 param fn display rename ;
}
)dsl";
  text += "rules {\n";
  text += detail::core_rule_lines();
  text += "}\n";
  text += "successor-rules {\n";
  text += detail::core_successor_lines();
  text += "}\n";
  return text;
}

/// ABCdE: CCS plus broadcast (b!, b?, b:), signals (s read, ~s emission) and
/// the signalling operator; the indicator labels are B: | ~S. The identity
/// under indicator transitions is expanded over the constant, prefix,
/// choice, signalling and recursion types.
inline std::string abcde_dsl_text(const AbcdeParams& params = {}) {
  for (const auto& c : params.handshake_names)
    if (params.broadcast_names.count(c) || params.signal_names.count(c))
      fail("InvalidParams", "sorts must be pairwise disjoint");
  for (const auto& b : params.broadcast_names)
    if (params.signal_names.count(b))
      fail("InvalidParams", "sorts must be pairwise disjoint");

  std::string text = "language abcde ;\n";
  text += "sorts {\n" + detail::sort_line("C", params.handshake_names) +
          detail::sort_line("B", params.broadcast_names) +
          detail::sort_line("S", params.signal_names) + "}\n";
  text += R"dsl(
labels {
  act = C | ~C | { tau } | B! | B? | S ;
  indicator = B: | ~S ;
  eta = C | ~C | { tau } | S | ~S ;
  handshakeable = C | ~C | S | ~S ;
  anybroadcast = B! | B? | B: ;
}
)dsl";
  text += detail::functions_section(params.relabellings, "C | B | S");
  text += R"dsl(
operators {
  nil  arity 0 display token "0" ;
  pre  arity 1 param label in act display dot ;
  plus arity 2 display infix "+" prec 20 ;
  par  arity 2 display infix "|" prec 30 ;
  res  arity 1 param set of C display restrict ;
  ren  arity 1 param fn display rename ;
  sig  arity 1 param label in S display signal ;
}
)dsl";
  text += "rules {\n";
  text += detail::core_rule_lines();
  text += R"dsl(
  "%1:0" name(b)      : |- nil() -b:-> nil()  where b in B ;
  "%1:%2." name(b, a) : |- pre[a](x) -b:-> pre[a](x)  where b in B , a notin { b? } ;
  "+C"                : x -g-> x1 , y -g-> y1 |- plus(x, y) -g-> plus(x1, y1)
                        where g in B: ;
  "|C"                : x -g1-> x1 , y -g2-> y1 |- par(x, y) -bcomp(g1, g2)-> par(x1, y1)
                        where defined(bcomp(g1, g2)) , g1 in anybroadcast , g2 in anybroadcast ;
  "(->~%1)" name(s)   : |- sig[s](x) -~s-> sig[s](x) ;
  "+Le"               : x -g-> x1 |- plus(x, y) -g-> plus(x1, y)  where g in ~S ;
  "+Re"               : y -g-> y1 |- plus(x, y) -g-> plus(x, y1)  where g in ~S ;
  "^%1A" name(s)      : x -a-> x1 |- sig[s](x) -a-> x1   where a in act ;
  "^%1I" name(s)      : x -g-> x1 |- sig[s](x) -g-> sig[s](x1)  where g in indicator ;
)dsl";
  text += "}\n";
  text += "successor-rules {\n";
  text += detail::core_successor_lines();
  text += R"dsl(
  "2a"  : "->%1"[b?](x1) ~ "->%1"[b?](x1) => f1  where za1 in { b?, b: } ;
  "2b"  : "%1:%2."[b, a](x1) ~ "->%1"[a](x1) => f1  where za1 in { b?, b: } ;
  "3ae" : "+Le"(t1, x2) ~ "+L"(u1, x2) => s1 ;
  "3b"  : "+C"(t1, t2) ~ "+L"(u1, x2) => s1 ;
  "4ae" : "+Re"(x1, t2) ~ "+R"(x1, u2) => s2 ;
  "4b"  : "+C"(t1, t2) ~ "+R"(x1, u2) => s2 ;
  "5b" vars(b in B) : "+L"(t1, x2) ~ "+R"(x1, u2) => f2
        where xa1 = b? , za2 in { b?, b: } ;
  "5e" vars(s in S) : "+Le"(t1, x2) ~ "+R"(x1, u2) => f2
        where xa1 = ~s , za2 = ~s ;
  "6b" vars(b in B) : "+R"(x1, t2) ~ "+L"(u1, x2) => f1
        where xa2 = b? , za1 in { b?, b: } ;
  "6e" vars(s in S) : "+Re"(x1, t2) ~ "+L"(u1, x2) => f1
        where xa2 = ~s , za1 = ~s ;
  "11d1" : "^%1A"[s](t1) ~ "^%1A"[s](u1) => s1 ;
  "11d2" : "^%1I"[s](t1) ~ "^%1A"[s](u1) => s1 ;
)dsl";
  text += "}\n";
  text += "pragmas { expand identity over { nil, pre, plus, sig, rec } ; }\n";
  return text;
}

inline Tsss ccs(const CcsParams& params = {}) { return parse_language(ccs_dsl_text(params)); }

inline Tsss abcde(const AbcdeParams& params = {}) {
  return parse_language(abcde_dsl_text(params));
}

// ---------------------------------------------------------------------------
// Named fixtures.
// ---------------------------------------------------------------------------

struct Fixture {
  Name name;
  Tsss tsss;
  std::map<Name, PExpr> terms;

  PExpr term(const Name& n) const {
    auto it = terms.find(n);
    if (it == terms.end()) fail("UnknownFixture", "fixture has no term '" + n + "'");
    return it->second;
  }
};

inline std::vector<Name> fixture_names() {
  return {"ex31", "sec4_pq", "sec4_pp", "expansion_pair", "abcde_signal", "abcde_bcast"};
}

inline Fixture fixture(const Name& name) {
  Fixture f;
  f.name = name;
  if (name == "ex31") {
    CcsParams p;
    p.handshake_names = {"a", "b"};
    f.tsss = ccs(p);
    f.terms["P"] = parse_term(f.tsss.tss, "<X | X = a.X + b.Y, Y = a.Y>");
    f.terms["Q"] = parse_term(f.tsss.tss, "<Z | Z = a.Z> | b.0");
  } else if (name == "sec4_pq") {
    CcsParams p;
    p.handshake_names = {"a", "c"};
    f.tsss = ccs(p);
    f.terms["p"] = parse_term(f.tsss.tss, "<X | X = a.X + c.X>");
    f.terms["q"] = parse_term(f.tsss.tss, "<Y | Y = a.Y>");
    f.terms["pq"] = parse_term(f.tsss.tss, "<X | X = a.X + c.X> | <Y | Y = a.Y>");
  } else if (name == "sec4_pp") {
    CcsParams p;
    p.handshake_names = {"a", "c"};
    f.tsss = ccs(p);
    f.terms["p"] = parse_term(f.tsss.tss, "<X | X = a.X + c.X>");
    f.terms["pp"] = parse_term(f.tsss.tss, "<X | X = a.X + c.X> | <X | X = a.X + c.X>");
  } else if (name == "expansion_pair") {
    CcsParams p;
    p.handshake_names = {"a", "b"};
    f.tsss = ccs(p);
    f.terms["left"] = parse_term(f.tsss.tss, "a.0 | b.0");
    f.terms["right"] = parse_term(f.tsss.tss, "a.b.0 + b.a.0");
  } else if (name == "abcde_signal") {
    AbcdeParams p;
    p.handshake_names = {};
    p.broadcast_names = {};
    p.signal_names = {"s"};
    f.tsss = abcde(p);
    f.terms["r"] = parse_term(f.tsss.tss, "0^s | s.0");
  } else if (name == "abcde_bcast") {
    AbcdeParams p;
    p.handshake_names = {};
    p.broadcast_names = {"b"};
    p.signal_names = {"s"};
    f.tsss = abcde(p);
    f.terms["r"] = parse_term(f.tsss.tss, "0^s | b?.0");
  } else {
    fail("UnknownFixture", "no fixture named '" + name + "'");
  }
  return f;
}

}  // namespace epsos
