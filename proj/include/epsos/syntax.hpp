#pragma once

#include <algorithm>
#include <cassert>

#include "epsos/labels.hpp"

namespace epsos {

// ---------------------------------------------------------------------------
// Operators. A language declares operator *families*; a family may carry a
// parameter (the action of a prefix, a restriction set, a relabelling, a
// signal). Process expressions reference concrete instances.
// ---------------------------------------------------------------------------

enum class OpDisplayKind {
  Token,            // 0
  PrefixDot,        // a.P
  Infix,            // P + Q, P | Q
  PostfixRestrict,  // P\{a,b}
  PostfixRename,    // P[f]
  PostfixSignal,    // P^s
  Call,             // f(P, Q)
};

struct OpParamValue {
  enum class Kind { None, Label, Set, Fn };

  Kind kind = Kind::None;
  Label label;
  std::vector<Label> set;  // kept sorted
  Name fn;

  static OpParamValue none() { return {}; }
  static OpParamValue of_label(Label l) {
    OpParamValue p;
    p.kind = Kind::Label;
    p.label = std::move(l);
    return p;
  }
  static OpParamValue of_set(std::set<Label> s) {
    OpParamValue p;
    p.kind = Kind::Set;
    p.set.assign(s.begin(), s.end());
    return p;
  }
  static OpParamValue of_fn(Name f) {
    OpParamValue p;
    p.kind = Kind::Fn;
    p.fn = std::move(f);
    return p;
  }

  std::string str() const {
    switch (kind) {
      case Kind::None: return "";
      case Kind::Label: return label.str();
      case Kind::Set: {
        std::vector<std::string> es;
        for (const auto& l : set) es.push_back(l.str());
        return "{" + join(es, ",") + "}";
      }
      case Kind::Fn: return fn;
    }
    return "";
  }

  friend bool operator==(const OpParamValue& a, const OpParamValue& b) {
    return a.kind == b.kind && a.label == b.label && a.set == b.set && a.fn == b.fn;
  }
};

struct OperatorFamily {
  Name id;
  int arity = 0;
  OpParamValue::Kind param_kind = OpParamValue::Kind::None;
  LabelSetPtr label_range;  // range of a Label parameter, nullptr = all labels
  Name set_sort;            // base sort of a Set parameter
  OpDisplayKind display = OpDisplayKind::Call;
  Name token;  // constant token or infix symbol
  int precedence = 0;
};

struct OpInstance {
  Name family;
  int arity = 0;
  OpParamValue param;
  OpDisplayKind display = OpDisplayKind::Call;
  Name token;
  int precedence = 0;

  std::string key() const {
    return param.kind == OpParamValue::Kind::None ? family : family + "/" + param.str();
  }

  friend bool operator==(const OpInstance& a, const OpInstance& b) {
    return a.family == b.family && a.param == b.param;
  }
};

struct Signature {
  std::map<Name, OperatorFamily> families;

  const OperatorFamily* find(const Name& id) const {
    auto it = families.find(id);
    return it == families.end() ? nullptr : &it->second;
  }

  OpInstance instantiate(const Name& id, OpParamValue param = OpParamValue::none()) const {
    const OperatorFamily* fam = find(id);
    if (!fam) fail("UnknownOperator", "no operator family '" + id + "'");
    if (fam->param_kind != param.kind)
      fail("KindMismatch", "operator '" + id + "' given a parameter of the wrong kind");
    OpInstance inst;
    inst.family = fam->id;
    inst.arity = fam->arity;
    inst.param = std::move(param);
    inst.display = fam->display;
    inst.token = fam->token;
    inst.precedence = fam->precedence;
    return inst;
  }
};

// ---------------------------------------------------------------------------
// Process expressions: variables, operator applications, recursive calls
// <X|S>. Immutable trees; equality is structural up to alpha-renaming of the
// recursion binders, realized through a canonical key stored on every node.
// ---------------------------------------------------------------------------

struct ProcessExpr;
using PExpr = std::shared_ptr<const ProcessExpr>;

struct RecSpec {
  std::map<Name, PExpr> bindings;  // V_S -> bodies, displayed in name order
};
using RecPtr = std::shared_ptr<const RecSpec>;

struct ProcessExpr {
  enum class Kind { Var, App, Rec };

  Kind kind;
  Name var;                 // Var
  OpInstance op;            // App
  std::vector<PExpr> args;  // App
  Name rec_var;             // Rec: the distinguished X
  RecPtr rec;               // Rec: S
  std::string key;          // alpha-canonical serialization
};

namespace detail {

inline void all_names(const ProcessExpr& e, std::set<Name>& out) {
  switch (e.kind) {
    case ProcessExpr::Kind::Var: out.insert(e.var); return;
    case ProcessExpr::Kind::App:
      for (const auto& a : e.args) all_names(*a, out);
      return;
    case ProcessExpr::Kind::Rec:
      out.insert(e.rec_var);
      for (const auto& [x, body] : e.rec->bindings) {
        out.insert(x);
        all_names(*body, out);
      }
      return;
  }
}

/// Pre-order scan of `e` for free references to names in `targets`,
/// appending first occurrences to `order`.
inline void scan_refs(const ProcessExpr& e, const std::set<Name>& targets,
                      std::set<Name>& shadowed, std::set<Name>& seen,
                      std::vector<Name>& order) {
  switch (e.kind) {
    case ProcessExpr::Kind::Var:
      if (targets.count(e.var) && !shadowed.count(e.var) && !seen.count(e.var)) {
        seen.insert(e.var);
        order.push_back(e.var);
      }
      return;
    case ProcessExpr::Kind::App:
      for (const auto& a : e.args) scan_refs(*a, targets, shadowed, seen, order);
      return;
    case ProcessExpr::Kind::Rec: {
      std::vector<Name> added;
      for (const auto& [x, _] : e.rec->bindings)
        if (shadowed.insert(x).second) added.push_back(x);
      for (const auto& [_, body] : e.rec->bindings)
        scan_refs(*body, targets, shadowed, seen, order);
      for (const auto& x : added) shadowed.erase(x);
      return;
    }
  }
}

/// Canonical binder order of a recursive specification: breadth-first
/// discovery from the head X through the bodies, then leftovers by name.
inline std::vector<Name> binder_order(const Name& head, const RecSpec& spec) {
  std::set<Name> binders;
  for (const auto& [x, _] : spec.bindings) binders.insert(x);
  std::vector<Name> order = {head};
  std::set<Name> seen = {head};
  for (std::size_t i = 0; i < order.size(); ++i) {
    auto it = spec.bindings.find(order[i]);
    if (it == spec.bindings.end()) continue;
    std::set<Name> shadowed;
    std::vector<Name> found;
    scan_refs(*it->second, binders, shadowed, seen, found);
    for (auto& f : found) order.push_back(f);
  }
  for (const auto& [x, _] : spec.bindings)
    if (!seen.count(x)) {
      order.push_back(x);
      seen.insert(x);
    }
  return order;
}

inline void canon_key(const ProcessExpr& e,
                      std::vector<std::map<Name, int>>& frames, std::string& out) {
  switch (e.kind) {
    case ProcessExpr::Kind::Var: {
      for (int d = static_cast<int>(frames.size()) - 1; d >= 0; --d) {
        auto it = frames[d].find(e.var);
        if (it != frames[d].end()) {
          out += "B" + std::to_string(d) + "." + std::to_string(it->second) + ";";
          return;
        }
      }
      out += "V" + e.var + ";";
      return;
    }
    case ProcessExpr::Kind::App: {
      out += "A" + e.op.key() + "(";
      for (const auto& a : e.args) canon_key(*a, frames, out);
      out += ")";
      return;
    }
    case ProcessExpr::Kind::Rec: {
      auto order = binder_order(e.rec_var, *e.rec);
      std::map<Name, int> frame;
      for (std::size_t i = 0; i < order.size(); ++i) frame[order[i]] = static_cast<int>(i);
      frames.push_back(frame);
      out += "R(";
      for (const auto& x : order) {
        auto it = e.rec->bindings.find(x);
        if (it != e.rec->bindings.end()) canon_key(*it->second, frames, out);
      }
      out += ")";
      frames.pop_back();
      return;
    }
  }
}

}  // namespace detail

inline std::string canonical_key(const ProcessExpr& e) {
  std::vector<std::map<Name, int>> frames;
  std::string out;
  detail::canon_key(e, frames, out);
  return out;
}

inline PExpr mk_var(Name x) {
  auto e = std::make_shared<ProcessExpr>();
  e->kind = ProcessExpr::Kind::Var;
  e->var = std::move(x);
  e->key = canonical_key(*e);
  return e;
}

inline PExpr mk_app(OpInstance op, std::vector<PExpr> args) {
  if (static_cast<int>(args.size()) != op.arity)
    fail("ArityMismatch", "operator '" + op.key() + "' expects " +
                              std::to_string(op.arity) + " arguments, got " +
                              std::to_string(args.size()));
  auto e = std::make_shared<ProcessExpr>();
  e->kind = ProcessExpr::Kind::App;
  e->op = std::move(op);
  e->args = std::move(args);
  e->key = canonical_key(*e);
  return e;
}

inline PExpr mk_rec(Name x, RecPtr spec) {
  if (!spec || spec->bindings.empty())
    fail("InvalidParams", "recursive specification must be non-empty");
  if (!spec->bindings.count(x))
    fail("UnknownRecursionVariable", "'" + x + "' is not bound by the specification");
  auto e = std::make_shared<ProcessExpr>();
  e->kind = ProcessExpr::Kind::Rec;
  e->rec_var = std::move(x);
  e->rec = std::move(spec);
  e->key = canonical_key(*e);
  return e;
}

inline bool alpha_equal(const PExpr& a, const PExpr& b) { return a->key == b->key; }

// --- free variables ---------------------------------------------------------

namespace detail {
inline void free_vars_into(const ProcessExpr& e, std::set<Name>& bound, std::set<Name>& out) {
  switch (e.kind) {
    case ProcessExpr::Kind::Var:
      if (!bound.count(e.var)) out.insert(e.var);
      return;
    case ProcessExpr::Kind::App:
      for (const auto& a : e.args) free_vars_into(*a, bound, out);
      return;
    case ProcessExpr::Kind::Rec: {
      std::vector<Name> added;
      for (const auto& [x, _] : e.rec->bindings)
        if (bound.insert(x).second) added.push_back(x);
      for (const auto& [_, body] : e.rec->bindings) free_vars_into(*body, bound, out);
      for (const auto& x : added) bound.erase(x);
      return;
    }
  }
}
}  // namespace detail

inline std::set<Name> free_vars(const PExpr& p) {
  std::set<Name> bound, out;
  detail::free_vars_into(*p, bound, out);
  return out;
}

inline bool is_closed(const PExpr& p) { return free_vars(p).empty(); }

// --- substitution -----------------------------------------------------------

using Substitution = std::map<Name, PExpr>;

/// Smallest positive integer suffix not colliding with any used name.
inline Name fresh_name(const Name& base, const std::set<Name>& used) {
  for (int k = 1;; ++k) {
    Name cand = base + std::to_string(k);
    if (!used.count(cand)) return cand;
  }
}

/// Capture-avoiding substitution; bound recursion variables are renamed with
/// the deterministic fresh-name scheme when a clash would capture.
inline PExpr substitute(const PExpr& p, const Substitution& sigma) {
  if (sigma.empty()) return p;
  switch (p->kind) {
    case ProcessExpr::Kind::Var: {
      auto it = sigma.find(p->var);
      return it == sigma.end() ? p : it->second;
    }
    case ProcessExpr::Kind::App: {
      std::vector<PExpr> args;
      args.reserve(p->args.size());
      bool changed = false;
      for (const auto& a : p->args) {
        args.push_back(substitute(a, sigma));
        changed = changed || args.back() != a;
      }
      if (!changed) return p;
      return mk_app(p->op, std::move(args));
    }
    case ProcessExpr::Kind::Rec: {
      std::set<Name> binders;
      for (const auto& [x, _] : p->rec->bindings) binders.insert(x);

      Substitution live;
      auto freep = free_vars(p);
      for (const auto& [x, img] : sigma)
        if (!binders.count(x) && freep.count(x)) live[x] = img;
      if (live.empty()) return p;

      std::set<Name> image_names;
      for (const auto& [_, img] : live) detail::all_names(*img, image_names);

      Substitution combined = live;
      std::map<Name, Name> rename;
      std::set<Name> clash;
      for (const auto& x : binders)
        if (image_names.count(x)) clash.insert(x);
      if (!clash.empty()) {
        std::set<Name> used = image_names;
        detail::all_names(*p, used);
        for (const auto& x : clash) {
          Name nx = fresh_name(x, used);
          used.insert(nx);
          rename[x] = nx;
          combined[x] = mk_var(nx);
        }
      }

      auto spec = std::make_shared<RecSpec>();
      for (const auto& [x, body] : p->rec->bindings) {
        Name nx = rename.count(x) ? rename.at(x) : x;
        spec->bindings[nx] = substitute(body, combined);
      }
      Name head = rename.count(p->rec_var) ? rename.at(p->rec_var) : p->rec_var;
      return mk_rec(head, spec);
    }
  }
  return p;
}

/// <S_X|S>: the body of X with every free Y in V_S replaced by <Y|S>.
inline PExpr unfold_rec(const Name& x, const RecPtr& spec) {
  auto it = spec->bindings.find(x);
  if (it == spec->bindings.end())
    fail("UnknownRecursionVariable", "'" + x + "' is not bound by the specification");
  Substitution sigma;
  for (const auto& [y, _] : spec->bindings) sigma[y] = mk_rec(y, spec);
  return substitute(it->second, sigma);
}

// --- rendering ---------------------------------------------------------------

inline std::string render(const PExpr& p, int context_prec = 0);

inline std::string render_rec_spec(const RecSpec& spec) {
  std::vector<std::string> parts;
  for (const auto& [x, body] : spec.bindings) parts.push_back(x + " = " + render(body));
  return "{" + join(parts, ", ") + "}";
}

inline std::string render(const PExpr& p, int context_prec) {
  switch (p->kind) {
    case ProcessExpr::Kind::Var: return p->var;
    case ProcessExpr::Kind::Rec:
      return "<" + p->rec_var + "|" + render_rec_spec(*p->rec) + ">";
    case ProcessExpr::Kind::App: break;
  }
  const OpInstance& op = p->op;
  std::string out;
  int prec = op.precedence;
  switch (op.display) {
    case OpDisplayKind::Token: return op.token;
    case OpDisplayKind::PrefixDot:
      out = op.param.label.str() + "." + render(p->args[0], prec);
      break;
    case OpDisplayKind::Infix:
      out = render(p->args[0], prec) + " " + op.token + " " + render(p->args[1], prec + 1);
      break;
    case OpDisplayKind::PostfixRestrict:
      return render(p->args[0], 100) + "\\" + op.param.str();
    case OpDisplayKind::PostfixRename:
      return render(p->args[0], 100) + "[" + op.param.fn + "]";
    case OpDisplayKind::PostfixSignal:
      return render(p->args[0], 100) + "^" + op.param.label.str();
    case OpDisplayKind::Call: {
      std::vector<std::string> as;
      for (const auto& a : p->args) as.push_back(render(a));
      std::string head = op.family;
      if (op.param.kind != OpParamValue::Kind::None) head += "[" + op.param.str() + "]";
      return head + "(" + join(as, ", ") + ")";
    }
  }
  if (prec < context_prec) return "(" + out + ")";
  return out;
}

}  // namespace epsos
