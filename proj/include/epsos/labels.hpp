#pragma once

#include <algorithm>

#include "epsos/common.hpp"

namespace epsos {

/// Transition labels are a base name plus a decoration: plain (`a`, `tau`),
/// complemented (`~a`), or one of the broadcast modes (`b!`, `b?`, `b:`).
struct Label {
  enum class Deco : std::uint8_t { None, Bar, Snd, Rcv, Dis };

  Name base;
  Deco deco = Deco::None;

  Label() = default;
  Label(Name b, Deco d = Deco::None) : base(std::move(b)), deco(d) {}

  static Label tau() { return Label("tau"); }
  static Label bar(const Name& b) { return Label(b, Deco::Bar); }

  bool is_tau() const { return base == "tau" && deco == Deco::None; }
  bool is_broadcast() const {
    return deco == Deco::Snd || deco == Deco::Rcv || deco == Deco::Dis;
  }

  /// Complement: a <-> ~a. Undefined on tau and broadcast labels.
  std::optional<Label> complement() const {
    if (is_tau() || is_broadcast()) return std::nullopt;
    return Label(base, deco == Deco::Bar ? Deco::None : Deco::Bar);
  }

  std::string str() const {
    switch (deco) {
      case Deco::None: return base;
      case Deco::Bar: return "~" + base;
      case Deco::Snd: return base + "!";
      case Deco::Rcv: return base + "?";
      case Deco::Dis: return base + ":";
    }
    return base;
  }

  friend bool operator==(const Label& a, const Label& b) {
    return a.base == b.base && a.deco == b.deco;
  }
  friend bool operator!=(const Label& a, const Label& b) { return !(a == b); }
  friend bool operator<(const Label& a, const Label& b) {
    if (a.base != b.base) return a.base < b.base;
    return a.deco < b.deco;
  }
};

/// Relabelling given by a finite table on base names; identity elsewhere.
/// Extends structurally: f(~c) = ~f(c), f(b#) = f(b)#, f(tau) = tau.
struct LabelFn {
  Name name;
  std::map<Name, Name> table;

  Label apply(const Label& l) const {
    if (l.is_tau()) return l;
    auto it = table.find(l.base);
    if (it == table.end()) return l;
    return Label(it->second, l.deco);
  }
};

/// Broadcast composition table for |: send/receive/discard modes.
///   ! o ! undefined; ! o ? = ! ; ! o : = ! ; ? o ? = ? ; ? o : = ? ; : o : = :
inline std::optional<Label::Deco> broadcast_compose(Label::Deco a, Label::Deco b) {
  using D = Label::Deco;
  if (a == D::Snd && b == D::Snd) return std::nullopt;
  if (a == D::Snd || b == D::Snd) return D::Snd;
  if (a == D::Rcv || b == D::Rcv) return D::Rcv;
  return D::Dis;
}

/// The finite label universe of a language: all labels, the action subset,
/// named carrier sorts (C, B, S, ...) and declared relabellings.
struct LabelUniverse {
  std::set<Label> labels;
  std::set<Label> act;
  std::map<Name, std::set<Name>> sorts;     // sort name -> base names
  std::map<Name, std::set<Label>> classes;  // named label classes (eta, ...)
  std::map<Name, LabelFn> functions;

  bool contains(const Label& l) const { return labels.count(l) > 0; }
  bool is_act(const Label& l) const { return act.count(l) > 0; }

  std::set<Label> indicators() const {
    std::set<Label> out;
    for (const auto& l : labels)
      if (!act.count(l)) out.insert(l);
    return out;
  }

  const LabelFn* function(const Name& f) const {
    auto it = functions.find(f);
    return it == functions.end() ? nullptr : &it->second;
  }

  /// b#1 o b#2 per the broadcast composition table; bases must agree.
  std::optional<Label> bcomp(const Label& l, const Label& r) const {
    if (!l.is_broadcast() || !r.is_broadcast() || l.base != r.base)
      return std::nullopt;
    auto mode = broadcast_compose(l.deco, r.deco);
    if (!mode) return std::nullopt;
    return Label(l.base, *mode);
  }
};

// ---------------------------------------------------------------------------
// Side-condition language: label terms, label-set expressions, predicates.
// Closed world by design: membership, equality, function application with a
// definedness test. This covers every side condition of the built-ins.
// ---------------------------------------------------------------------------

/// Values a rule's schematic variables may take while instantiating.
struct Bindings {
  std::map<Name, Label> label_vars;
  std::map<Name, std::set<Label>> set_params;  // restriction sets etc.
  std::map<Name, Name> fn_params;              // relabelling parameters

  std::optional<Label> label(const Name& v) const {
    auto it = label_vars.find(v);
    if (it == label_vars.end()) return std::nullopt;
    return it->second;
  }
};

struct LabelTerm;
using LabelTermPtr = std::shared_ptr<const LabelTerm>;

struct LabelTerm {
  enum class Kind { Var, Const, Bar, Deco, FnApply, BComp };

  Kind kind;
  Name var;             // Var: variable name; FnApply: function/parameter name
  Label constant;       // Const
  Label::Deco deco{};   // Deco
  LabelTermPtr a, b;    // children

  static LabelTermPtr make_var(Name v) {
    auto t = std::make_shared<LabelTerm>();
    t->kind = Kind::Var;
    t->var = std::move(v);
    return t;
  }
  static LabelTermPtr make_const(Label l) {
    auto t = std::make_shared<LabelTerm>();
    t->kind = Kind::Const;
    t->constant = std::move(l);
    return t;
  }
  static LabelTermPtr make_bar(LabelTermPtr inner) {
    auto t = std::make_shared<LabelTerm>();
    t->kind = Kind::Bar;
    t->a = std::move(inner);
    return t;
  }
  static LabelTermPtr make_deco(LabelTermPtr inner, Label::Deco d) {
    auto t = std::make_shared<LabelTerm>();
    t->kind = Kind::Deco;
    t->a = std::move(inner);
    t->deco = d;
    return t;
  }
  static LabelTermPtr make_fn(Name f, LabelTermPtr arg) {
    auto t = std::make_shared<LabelTerm>();
    t->kind = Kind::FnApply;
    t->var = std::move(f);
    t->a = std::move(arg);
    return t;
  }
  static LabelTermPtr make_bcomp(LabelTermPtr l, LabelTermPtr r) {
    auto t = std::make_shared<LabelTerm>();
    t->kind = Kind::BComp;
    t->a = std::move(l);
    t->b = std::move(r);
    return t;
  }

  /// Partial evaluation: nullopt means "undefined" (unbound variable or a
  /// partial function applied outside its domain).
  std::optional<Label> eval(const LabelUniverse& u, const Bindings& env) const {
    switch (kind) {
      case Kind::Var: return env.label(var);
      case Kind::Const: return constant;
      case Kind::Bar: {
        auto v = a->eval(u, env);
        if (!v) return std::nullopt;
        return v->complement();
      }
      case Kind::Deco: {
        auto v = a->eval(u, env);
        if (!v || v->deco != Label::Deco::None) return std::nullopt;
        return Label(v->base, deco);
      }
      case Kind::FnApply: {
        auto v = a->eval(u, env);
        if (!v) return std::nullopt;
        // Prefer a declared relabelling; fall back to a bound fn parameter.
        const LabelFn* fn = u.function(var);
        if (!fn) {
          auto it = env.fn_params.find(var);
          if (it != env.fn_params.end()) fn = u.function(it->second);
        }
        if (!fn) return std::nullopt;
        return fn->apply(*v);
      }
      case Kind::BComp: {
        auto l = a->eval(u, env);
        auto r = b->eval(u, env);
        if (!l || !r) return std::nullopt;
        return u.bcomp(*l, *r);
      }
    }
    return std::nullopt;
  }

  void collect_vars(std::set<Name>& out) const {
    if (kind == Kind::Var) out.insert(var);
    if (a) a->collect_vars(out);
    if (b) b->collect_vars(out);
  }

  std::string str() const {
    switch (kind) {
      case Kind::Var: return var;
      case Kind::Const: return "'" + constant.str() + "'";
      case Kind::Bar: return "~" + a->str();
      case Kind::Deco: {
        Label probe("x", deco);
        return a->str() + probe.str().substr(1);
      }
      case Kind::FnApply: return var + "(" + a->str() + ")";
      case Kind::BComp: return "bcomp(" + a->str() + ", " + b->str() + ")";
    }
    return "?";
  }
};

struct LabelSetExpr;
using LabelSetPtr = std::shared_ptr<const LabelSetExpr>;

struct LabelSetExpr {
  enum class Kind { Sort, ParamSet, Enum, Bar, Deco, Union, Act, Indicators, All };

  Kind kind;
  Name name;                          // Sort / ParamSet
  std::vector<LabelTermPtr> elems;    // Enum (terms: may mention variables)
  LabelSetPtr a, b;                   // Bar/Deco child, Union children
  Label::Deco deco{};

  static LabelSetPtr make(Kind k) {
    auto s = std::make_shared<LabelSetExpr>();
    s->kind = k;
    return s;
  }
  static LabelSetPtr make_sort(Name n) {
    auto s = make(Kind::Sort);
    std::const_pointer_cast<LabelSetExpr>(s)->name = std::move(n);
    return s;
  }

  std::set<Label> eval(const LabelUniverse& u, const Bindings& env) const {
    std::set<Label> out;
    switch (kind) {
      case Kind::Sort: {
        auto it = u.sorts.find(name);
        if (it != u.sorts.end()) {
          for (const auto& base : it->second) out.insert(Label(base));
          return out;
        }
        auto cl = u.classes.find(name);
        if (cl != u.classes.end()) return cl->second;
        auto ps = env.set_params.find(name);
        if (ps != env.set_params.end()) return ps->second;
        fail("ParseError", "unknown sort or set parameter '" + name + "'");
      }
      case Kind::ParamSet: {
        auto ps = env.set_params.find(name);
        if (ps == env.set_params.end())
          fail("ParseError", "unbound set parameter '" + name + "'");
        return ps->second;
      }
      case Kind::Enum: {
        for (const auto& t : elems) {
          auto v = t->eval(u, env);
          if (v) out.insert(*v);
        }
        return out;
      }
      case Kind::Bar: {
        for (const auto& l : a->eval(u, env)) {
          auto c = l.complement();
          if (c) out.insert(*c);
        }
        return out;
      }
      case Kind::Deco: {
        for (const auto& l : a->eval(u, env))
          if (l.deco == Label::Deco::None) out.insert(Label(l.base, deco));
        return out;
      }
      case Kind::Union: {
        out = a->eval(u, env);
        for (const auto& l : b->eval(u, env)) out.insert(l);
        return out;
      }
      case Kind::Act: return u.act;
      case Kind::Indicators: return u.indicators();
      case Kind::All: return u.labels;
    }
    return out;
  }

  std::string str() const {
    switch (kind) {
      case Kind::Sort: return name;
      case Kind::ParamSet: return name;
      case Kind::Enum: {
        std::vector<std::string> es;
        for (const auto& t : elems) es.push_back(t->str());
        return "{" + join(es, ", ") + "}";
      }
      case Kind::Bar: return "~" + a->str();
      case Kind::Deco: {
        Label probe("x", deco);
        return a->str() + probe.str().substr(1);
      }
      case Kind::Union: return a->str() + " | " + b->str();
      case Kind::Act: return "act";
      case Kind::Indicators: return "indicator";
      case Kind::All: return "all";
    }
    return "?";
  }
};

struct SideCondition {
  enum class Kind { InSet, NotInSet, Eq, Defined };

  Kind kind;
  LabelTermPtr lhs;
  LabelTermPtr rhs;  // Eq
  LabelSetPtr set;   // InSet / NotInSet

  /// A condition on an undefined term is false (Defined tests definedness).
  bool holds(const LabelUniverse& u, const Bindings& env) const {
    auto l = lhs->eval(u, env);
    switch (kind) {
      case Kind::Defined: return l.has_value();
      case Kind::Eq: {
        auto r = rhs->eval(u, env);
        return l && r && *l == *r;
      }
      case Kind::InSet: {
        if (!l) return false;
        auto s = set->eval(u, env);
        return s.count(*l) > 0;
      }
      case Kind::NotInSet: {
        if (!l) return false;
        auto s = set->eval(u, env);
        return s.count(*l) == 0;
      }
    }
    return false;
  }

  void collect_vars(std::set<Name>& out) const {
    lhs->collect_vars(out);
    if (rhs) rhs->collect_vars(out);
    if (set && set->kind == LabelSetExpr::Kind::Enum)
      for (const auto& t : set->elems) t->collect_vars(out);
  }

  std::string str() const {
    switch (kind) {
      case Kind::InSet: return lhs->str() + " in " + set->str();
      case Kind::NotInSet: return lhs->str() + " notin " + set->str();
      case Kind::Eq: return lhs->str() + " = " + rhs->str();
      case Kind::Defined: return "defined(" + lhs->str() + ")";
    }
    return "?";
  }
};

}  // namespace epsos
