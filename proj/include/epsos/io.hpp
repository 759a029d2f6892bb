#pragma once

#include <json.hpp>

#include "epsos/equivalence.hpp"

namespace epsos {

/// Canonical LTSS encoding: stable key order, ids in BFS order from the
/// first root; identical across runs and thread counts.
inline nlohmann::ordered_json ltss_json(const Ltss& sys) {
  nlohmann::ordered_json j;
  j["states"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < sys.states.size(); ++i)
    j["states"].push_back({{"id", i}, {"term", render(sys.states[i])}});
  j["transitions"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < sys.transitions.size(); ++i) {
    const Transition& t = sys.transitions[i];
    j["transitions"].push_back({{"id", i},
                                {"src", sys.state_id.at(t.src->key)},
                                {"label", t.label.str()},
                                {"tgt", sys.state_id.at(t.tgt->key)},
                                {"expr", render_texpr(t.expr)}});
  }
  j["successors"] = nlohmann::ordered_json::array();
  for (const auto& s : sys.successors) j["successors"].push_back({s[0], s[1], s[2]});
  j["complete"] = sys.complete;
  if (!sys.complete) j["truncation"] = sys.truncation_report;
  return j;
}

inline nlohmann::ordered_json texpr_json(const TExpr& e) {
  nlohmann::ordered_json j;
  switch (e->kind) {
    case TransitionExpr::Kind::Var:
      j["ctor"] = "var";
      j["tvar"] = e->tvar;
      j["literal"] = e->lit.str();
      return j;
    case TransitionExpr::Kind::RecAct:
    case TransitionExpr::Kind::RecIn:
      j["ctor"] = e->kind == TransitionExpr::Kind::RecAct ? kRecActName : kRecInName;
      j["labelParams"] = nlohmann::ordered_json::array();
      j["args"] = {{{"var", e->rec_var}, {"spec", render_rec_spec(*e->rec)}},
                   texpr_json(e->inner)};
      return j;
    case TransitionExpr::Kind::Ctor: break;
  }
  j["ctor"] = e->ctor.fmt;
  j["labelParams"] = nlohmann::ordered_json::array();
  for (const auto& p : e->ctor.params) j["labelParams"].push_back(p.str());
  j["args"] = nlohmann::ordered_json::array();
  for (const auto& a : e->args) {
    if (a.is_trans())
      j["args"].push_back(texpr_json(a.trans));
    else
      j["args"].push_back(render(a.proc));
  }
  return j;
}

inline std::string dot_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

/// DOT export: states as nodes, transitions as labelled edges, successor
/// triples listed in an annotation table attached to the graph.
inline std::string ltss_dot(const Ltss& sys) {
  std::string out = "digraph ltss {\n  rankdir=LR;\n";
  for (std::size_t i = 0; i < sys.states.size(); ++i)
    out += "  s" + std::to_string(i) + " [label=\"" + dot_escape(render(sys.states[i])) +
           "\"];\n";
  for (std::size_t i = 0; i < sys.transitions.size(); ++i) {
    const Transition& t = sys.transitions[i];
    out += "  s" + std::to_string(sys.state_id.at(t.src->key)) + " -> s" +
           std::to_string(sys.state_id.at(t.tgt->key)) + " [label=\"t" + std::to_string(i) +
           ": " + dot_escape(t.label.str()) + "\"];\n";
  }
  std::string table;
  for (const auto& s : sys.successors)
    table += "t" + std::to_string(s[0]) + " ~t" + std::to_string(s[1]) + "~> t" +
             std::to_string(s[2]) + "\\l";
  out += "  succ [shape=box, label=\"" + (table.empty() ? "no successor triples" : table) +
         "\"];\n";
  out += "}\n";
  return out;
}

inline nlohmann::ordered_json verdict_json(const Ltss& sys, const EpVerdict& v) {
  nlohmann::ordered_json j;
  j["result"] = tri_str(v.result);
  if (v.result == Tri::True) {
    j["witness"] = nlohmann::ordered_json::array();
    for (const auto& t : v.witness) {
      nlohmann::ordered_json rel = nlohmann::ordered_json::array();
      for (const auto& [a, b] : t.rel) rel.push_back({a, b});
      j["witness"].push_back({{"p", t.p}, {"q", t.q}, {"rel", rel}});
    }
  }
  if (v.counterexample) {
    const auto& ce = *v.counterexample;
    nlohmann::ordered_json c;
    c["condition"] = ce.condition;
    if (ce.p >= 0) c["p"] = ce.p;
    if (ce.q >= 0) c["q"] = ce.q;
    if (ce.v >= 0) c["executed"] = {ce.v, ce.w};
    if (ce.t >= 0) c["related"] = {ce.t, ce.u};
    if (ce.succ >= 0) {
      c["unmatchedSuccessor"] = ce.succ;
      c["unmatchedExpr"] = render_texpr(sys.transitions[ce.succ].expr);
    }
    c["message"] = ce.message;
    j["counterexample"] = c;
  }
  j["stats"] = {{"triplesVisited", v.stats.triples_visited},
                {"relationsEnumerated", v.stats.relations_enumerated},
                {"durationMs", v.stats.duration_ms}};
  if (!v.note.empty()) j["note"] = v.note;
  return j;
}

}  // namespace epsos
