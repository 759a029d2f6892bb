#pragma once

#include "epsos/rules.hpp"

namespace epsos {

struct Literal {
  PExpr src;
  Label label;
  PExpr tgt;

  std::string key() const { return src->key + "|" + label.str() + "|" + tgt->key; }
  std::string str() const {
    return render(src) + " -" + label.str() + "-> " + render(tgt);
  }
  friend bool operator==(const Literal& a, const Literal& b) {
    return a.label == b.label && a.src->key == b.src->key && a.tgt->key == b.tgt->key;
  }
};

// ---------------------------------------------------------------------------
// Transition expressions: the canonical names of (open) proof trees.
//   (tx :: p -a-> q)          variable expression
//   rec_Act(X, S, E) / rec_In(X, S, E)
//   R(E_1, .., E_n)           argument i holds a transition expression for
//                             i in the trigger set of R, a process otherwise
// ---------------------------------------------------------------------------

struct TransitionExpr;
using TExpr = std::shared_ptr<const TransitionExpr>;

struct TArg {
  PExpr proc;   // exactly one of proc/trans is set
  TExpr trans;

  bool is_trans() const { return trans != nullptr; }
};

struct TransitionExpr {
  enum class Kind { Var, RecAct, RecIn, Ctor };

  Kind kind;
  // Var
  Name tvar;
  Literal lit;
  // RecAct / RecIn
  Name rec_var;
  RecPtr rec;
  TExpr inner;
  // Ctor
  RuleName ctor;
  std::vector<TArg> args;

  std::string key;  // canonical (alpha-aware through process keys)
};

namespace detail {
inline std::string texpr_key(const TransitionExpr& e) {
  switch (e.kind) {
    case TransitionExpr::Kind::Var:
      return "tv(" + e.tvar + ":" + e.lit.key() + ")";
    case TransitionExpr::Kind::RecAct:
    case TransitionExpr::Kind::RecIn: {
      auto head = mk_rec(e.rec_var, e.rec);
      return (e.kind == TransitionExpr::Kind::RecAct ? "ra(" : "ri(") + head->key + ";" +
             e.inner->key + ")";
    }
    case TransitionExpr::Kind::Ctor: {
      std::string out = "ct(" + e.ctor.fmt;
      for (const auto& p : e.ctor.params) out += "/" + p.str();
      out += ";";
      for (const auto& a : e.args)
        out += a.is_trans() ? "T" + a.trans->key : "P" + a.proc->key;
      return out + ")";
    }
  }
  return "?";
}
}  // namespace detail

inline TExpr mk_tvar(Name tx, Literal lit) {
  auto e = std::make_shared<TransitionExpr>();
  e->kind = TransitionExpr::Kind::Var;
  e->tvar = std::move(tx);
  e->lit = std::move(lit);
  e->key = detail::texpr_key(*e);
  return e;
}

inline TExpr mk_rec_texpr(bool is_act, Name x, RecPtr spec, TExpr inner) {
  auto e = std::make_shared<TransitionExpr>();
  e->kind = is_act ? TransitionExpr::Kind::RecAct : TransitionExpr::Kind::RecIn;
  e->rec_var = std::move(x);
  e->rec = std::move(spec);
  e->inner = std::move(inner);
  e->key = detail::texpr_key(*e);
  return e;
}

inline TExpr mk_ctor(RuleName name, std::vector<TArg> args) {
  auto e = std::make_shared<TransitionExpr>();
  e->kind = TransitionExpr::Kind::Ctor;
  e->ctor = std::move(name);
  e->args = std::move(args);
  e->key = detail::texpr_key(*e);
  return e;
}

inline bool texpr_equal(const TExpr& a, const TExpr& b) { return a->key == b->key; }

inline bool texpr_closed(const TExpr& e) {
  switch (e->kind) {
    case TransitionExpr::Kind::Var: return false;
    case TransitionExpr::Kind::RecAct:
    case TransitionExpr::Kind::RecIn: return texpr_closed(e->inner);
    case TransitionExpr::Kind::Ctor:
      for (const auto& a : e->args)
        if (a.is_trans() && !texpr_closed(a.trans)) return false;
      return true;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Open proofs (Def 4.4 / 6.1): ordered trees of (literal, rule-name) or
// (literal, transition-variable) nodes. Materialized for validation and
// display; the expressions above are the working representation.
// ---------------------------------------------------------------------------

struct OpenTransition {
  Literal lit;
  bool is_var = false;
  Name tvar;      // when is_var
  RuleName rule;  // otherwise
  std::vector<OpenTransition> children;
};

/// (source, label, target) of the root literal.
inline std::tuple<PExpr, Label, PExpr> src_tar_label(const OpenTransition& t) {
  return {t.lit.src, t.lit.label, t.lit.tgt};
}

/// Binding function: transition variable -> literal (Def 6.2). The shared-
/// variable coherence of open proofs is enforced.
inline std::map<Name, Literal> binding_function(const OpenTransition& t) {
  std::map<Name, Literal> out;
  auto walk = [&](auto&& self, const OpenTransition& n) -> void {
    if (n.is_var) {
      auto it = out.find(n.tvar);
      if (it == out.end())
        out.emplace(n.tvar, n.lit);
      else if (!(it->second == n.lit))
        fail("NonTransitionResult",
             "transition variable '" + n.tvar + "' is used for two different literals");
    }
    for (const auto& c : n.children) self(self, c);
  };
  walk(walk, t);
  return out;
}

// ---------------------------------------------------------------------------
// Interpretation: reconstruct the unique proof tree named by an expression,
// validating every node against an instantiable concrete rule.
// ---------------------------------------------------------------------------

inline OpenTransition interpret_expr(const Tss& tss, const TExpr& e);

namespace detail {

inline OpInstance op_from_ctor(const Tss& tss, const DeSimoneRuleTemplate& t,
                               const RuleName& name) {
  const OperatorFamily* fam = tss.sig.find(t.op_family);
  if (!fam) fail("UnknownOperator", "no operator family '" + t.op_family + "'");
  if (fam->param_kind == OpParamValue::Kind::None) return tss.sig.instantiate(fam->id);
  for (std::size_t k = 0; k < t.name_param_vars.size(); ++k) {
    if (t.name_param_vars[k] == t.op_param_var) {
      if (k >= name.params.size())
        fail("KindMismatch", "rule name '" + name.str() + "' lacks its operator parameter");
      return tss.sig.instantiate(fam->id, name.params[k]);
    }
  }
  fail("KindMismatch", "operator parameter of '" + t.name_fmt +
                           "' is not part of the rule name; cannot reconstruct");
}

inline void bind_name_params(const Tss& tss, const DeSimoneRuleTemplate& t,
                             const RuleName& name, Bindings& env) {
  if (name.params.size() != t.name_param_vars.size())
    fail("KindMismatch", "rule name '" + name.str() + "' has wrong parameter count");
  for (std::size_t k = 0; k < name.params.size(); ++k) {
    const Name& v = t.name_param_vars[k];
    const OpParamValue& p = name.params[k];
    switch (p.kind) {
      case OpParamValue::Kind::Label: env.label_vars[v] = p.label; break;
      case OpParamValue::Kind::Set:
        env.set_params[v] = std::set<Label>(p.set.begin(), p.set.end());
        break;
      case OpParamValue::Kind::Fn: env.fn_params[v] = p.fn; break;
      case OpParamValue::Kind::None: break;
    }
  }
  (void)tss;
}

}  // namespace detail

inline OpenTransition interpret_expr(const Tss& tss, const TExpr& e) {
  switch (e->kind) {
    case TransitionExpr::Kind::Var: {
      OpenTransition t;
      t.lit = e->lit;
      t.is_var = true;
      t.tvar = e->tvar;
      return t;
    }
    case TransitionExpr::Kind::RecAct:
    case TransitionExpr::Kind::RecIn: {
      bool is_act = e->kind == TransitionExpr::Kind::RecAct;
      OpenTransition inner = interpret_expr(tss, e->inner);
      PExpr unfolded = unfold_rec(e->rec_var, e->rec);
      if (inner.lit.src->key != unfolded->key)
        fail("NoMatchingRule", "recursion premise proves '" + render(inner.lit.src) +
                                   "', expected '" + render(unfolded) + "'");
      if (tss.universe.is_act(inner.lit.label) != is_act)
        fail("NoMatchingRule", "label '" + inner.lit.label.str() +
                                   (is_act ? "' is not an action" : "' is an action"));
      OpenTransition t;
      PExpr call = mk_rec(e->rec_var, e->rec);
      t.lit = Literal{call, inner.lit.label, is_act ? inner.lit.tgt : call};
      t.rule = RuleName{is_act ? kRecActName : kRecInName, {}};
      t.children.push_back(std::move(inner));
      return t;
    }
    case TransitionExpr::Kind::Ctor: break;
  }

  auto candidates = tss.templates_for_name(e->ctor.fmt);
  if (candidates.empty())
    fail("NoMatchingRule", "no rule named '" + e->ctor.str() + "'");

  std::optional<OpenTransition> result;
  std::string why = "no instance fits";
  for (const auto* t : candidates) {
    if (static_cast<int>(e->args.size()) != t->arity()) {
      why = "arity mismatch for '" + e->ctor.str() + "'";
      continue;
    }
    auto trig = t->trigger_set();
    bool kinds_ok = true;
    for (std::size_t i = 1; i <= e->args.size(); ++i) {
      bool want_trans = std::find(trig.begin(), trig.end(), static_cast<int>(i)) != trig.end();
      if (e->args[i - 1].is_trans() != want_trans) kinds_ok = false;
    }
    if (!kinds_ok) {
      why = "argument kinds do not match the trigger set of '" + e->ctor.str() + "'";
      fail("KindMismatch", why);
    }

    OpInstance op = detail::op_from_ctor(tss, *t, e->ctor);
    Bindings env;
    detail::bind_op_param(*tss.sig.find(t->op_family), t->op_param_var, op.param, env);
    detail::bind_name_params(tss, *t, e->ctor, env);

    // Interpret premise subexpressions and bind their labels.
    std::vector<OpenTransition> children;
    Substitution inst;  // x_i / y_i -> concrete expressions
    bool ok = true;
    for (const auto& pr : t->premises) {
      int i = t->premise_index(pr);
      if (i <= 0 || !e->args[i - 1].is_trans()) {
        ok = false;
        break;
      }
      OpenTransition sub = interpret_expr(tss, e->args[i - 1].trans);
      auto bound = env.label(pr.label_var);
      if (bound && !(*bound == sub.lit.label)) {
        ok = false;
        why = "premise label clash in '" + e->ctor.str() + "'";
        break;
      }
      env.label_vars[pr.label_var] = sub.lit.label;
      inst[pr.target_var] = sub.lit.tgt;
      children.push_back(std::move(sub));
    }
    if (!ok) continue;

    // Source components.
    std::vector<PExpr> src_args(e->args.size());
    {
      std::size_t k = 0;
      for (std::size_t i = 0; i < e->args.size(); ++i) {
        if (e->args[i].is_trans())
          src_args[i] = children[k++].lit.src;
        else
          src_args[i] = e->args[i].proc;
      }
    }
    for (std::size_t i = 0; i < t->source_vars.size(); ++i)
      inst[t->source_vars[i]] = src_args[i];

    // Remaining free label variables: enumerate and filter.
    std::vector<Name> free;
    for (const auto& v : detail::template_label_vars(*t))
      if (!env.label_vars.count(v) && !env.set_params.count(v) && !env.fn_params.count(v))
        free.push_back(v);
    std::sort(free.begin(), free.end());

    std::optional<Label> conclusion;
    Bindings winning;
    bool ambiguous = false;
    detail::enumerate_assignments(tss.universe, *t, free, 0, env, [&](const Bindings& b) {
      auto c = t->conclusion_label->eval(tss.universe, b);
      if (!c || !tss.universe.contains(*c)) return;
      if (conclusion && !(*conclusion == *c)) ambiguous = true;
      conclusion = c;
      winning = b;
    });
    if (!conclusion) {
      why = "side conditions reject '" + e->ctor.str() + "'";
      continue;
    }
    if (ambiguous) fail("NoMatchingRule", "ambiguous conclusion for '" + e->ctor.str() + "'");

    OpenTransition node;
    PExpr target_pat = resolve_op_params(tss.sig, t->target, winning);
    node.lit = Literal{mk_app(op, src_args), *conclusion, substitute(target_pat, inst)};
    node.rule = e->ctor;
    node.children = std::move(children);
    if (result && !(result->lit == node.lit))
      fail("NoMatchingRule", "rule name '" + e->ctor.str() + "' matches two distinct rules");
    result = std::move(node);
  }
  if (!result) fail("NoMatchingRule", why);
  binding_function(*result);  // enforce shared-variable coherence
  return *result;
}

/// Def 6.3: the unique transition expression naming a proof tree.
inline TExpr name_of(const Tss& tss, const OpenTransition& t) {
  if (t.is_var) return mk_tvar(t.tvar, t.lit);
  if (t.rule.fmt == kRecActName || t.rule.fmt == kRecInName) {
    if (t.lit.src->kind != ProcessExpr::Kind::Rec)
      fail("KindMismatch", "recursion rule applied to a non-recursive source");
    if (t.children.size() != 1) fail("KindMismatch", "recursion rule wants one premise");
    return mk_rec_texpr(t.rule.fmt == kRecActName, t.lit.src->rec_var, t.lit.src->rec,
                        name_of(tss, t.children[0]));
  }
  auto templates = tss.templates_for_name(t.rule.fmt);
  if (templates.empty()) fail("NoMatchingRule", "no rule named '" + t.rule.str() + "'");
  auto trig = templates[0]->trigger_set();
  if (t.lit.src->kind != ProcessExpr::Kind::App)
    fail("KindMismatch", "operator rule applied to a non-operator source");

  std::vector<TArg> args;
  std::size_t k = 0;
  for (std::size_t i = 1; i <= t.lit.src->args.size(); ++i) {
    TArg a;
    if (std::find(trig.begin(), trig.end(), static_cast<int>(i)) != trig.end()) {
      if (k >= t.children.size()) fail("KindMismatch", "missing premise proof");
      a.trans = name_of(tss, t.children[k++]);
    } else {
      a.proc = t.lit.src->args[i - 1];
    }
    args.push_back(std::move(a));
  }
  return mk_ctor(t.rule, std::move(args));
}

// ---------------------------------------------------------------------------
// Transition substitution (Def 6.4).
// ---------------------------------------------------------------------------

struct TransitionSubstitution {
  Substitution proc;
  std::map<Name, TExpr> trans;
};

/// Binding function read off an expression without materializing the proof.
inline void texpr_bindings(const TExpr& e, std::map<Name, Literal>& out) {
  switch (e->kind) {
    case TransitionExpr::Kind::Var: {
      auto it = out.find(e->tvar);
      if (it == out.end())
        out.emplace(e->tvar, e->lit);
      else if (!(it->second == e->lit))
        fail("NonTransitionResult",
             "transition variable '" + e->tvar + "' is used for two different literals");
      return;
    }
    case TransitionExpr::Kind::RecAct:
    case TransitionExpr::Kind::RecIn: texpr_bindings(e->inner, out); return;
    case TransitionExpr::Kind::Ctor:
      for (const auto& a : e->args)
        if (a.is_trans()) texpr_bindings(a.trans, out);
      return;
  }
}

inline Literal texpr_root_literal(const Tss& tss, const TExpr& e) {
  if (e->kind == TransitionExpr::Kind::Var) return e->lit;
  return interpret_expr(tss, e).lit;
}

/// Def 6.4 matching: label equality plus source/target compatibility of every
/// substituted transition variable. Match failure is an error, not silent.
inline void check_matches(const Tss& tss, const TExpr& e, const TransitionSubstitution& s) {
  std::map<Name, Literal> beta;
  texpr_bindings(e, beta);
  for (const auto& [tx, mu] : beta) {
    auto it = s.trans.find(tx);
    if (it == s.trans.end()) continue;
    Literal got = texpr_root_literal(tss, it->second);
    PExpr want_src = substitute(mu.src, s.proc);
    PExpr want_tgt = substitute(mu.tgt, s.proc);
    if (!(got.label == mu.label))
      fail("MatchFailure", "substitution for '" + tx + "' has label '" + got.label.str() +
                               "', required '" + mu.label.str() + "'");
    if (got.src->key != want_src->key || got.tgt->key != want_tgt->key)
      fail("MatchFailure",
           "substitution for '" + tx + "' is not source/target compatible");
  }
}

inline TExpr apply_transition_subst(const Tss& tss, const TExpr& e,
                                    const TransitionSubstitution& s) {
  check_matches(tss, e, s);
  auto repl = [&](auto&& self, const TExpr& n) -> TExpr {
    switch (n->kind) {
      case TransitionExpr::Kind::Var: {
        auto it = s.trans.find(n->tvar);
        if (it != s.trans.end()) return it->second;
        Literal l{substitute(n->lit.src, s.proc), n->lit.label,
                  substitute(n->lit.tgt, s.proc)};
        return mk_tvar(n->tvar, l);
      }
      case TransitionExpr::Kind::RecAct:
      case TransitionExpr::Kind::RecIn: {
        PExpr call = substitute(mk_rec(n->rec_var, n->rec), s.proc);
        if (call->kind != ProcessExpr::Kind::Rec)
          fail("KindMismatch", "substitution destroyed a recursive call");
        return mk_rec_texpr(n->kind == TransitionExpr::Kind::RecAct, call->rec_var,
                            call->rec, self(self, n->inner));
      }
      case TransitionExpr::Kind::Ctor: {
        std::vector<TArg> args;
        for (const auto& a : n->args) {
          TArg na;
          if (a.is_trans())
            na.trans = self(self, a.trans);
          else
            na.proc = substitute(a.proc, s.proc);
          args.push_back(std::move(na));
        }
        return mk_ctor(n->ctor, std::move(args));
      }
    }
    return n;
  };
  TExpr out = repl(repl, e);
  std::map<Name, Literal> check;
  texpr_bindings(out, check);  // throws NonTransitionResult on clashes
  return out;
}

// ---------------------------------------------------------------------------
// Rendering: infix for the binary constructors, prefix/postfix for unary,
// recursion wrappers spelled rec_Act / rec_In.
// ---------------------------------------------------------------------------

inline std::string render_texpr(const TExpr& e, bool atom_context = false);

namespace detail {
inline std::string render_targ(const TArg& a) {
  if (a.is_trans()) return render_texpr(a.trans, true);
  std::string s = render(a.proc);
  if (a.proc->kind == ProcessExpr::Kind::App && a.proc->op.display == OpDisplayKind::Infix)
    return "(" + s + ")";
  return s;
}
}  // namespace detail

inline std::string render_texpr(const TExpr& e, bool atom_context) {
  std::string out;
  switch (e->kind) {
    case TransitionExpr::Kind::Var:
      return "(" + e->tvar + " :: " + e->lit.str() + ")";
    case TransitionExpr::Kind::RecAct:
    case TransitionExpr::Kind::RecIn:
      return std::string(e->kind == TransitionExpr::Kind::RecAct ? kRecActName : kRecInName) +
             "(" + e->rec_var + ", " + render_rec_spec(*e->rec) + ", " +
             render_texpr(e->inner) + ")";
    case TransitionExpr::Kind::Ctor: break;
  }
  const RuleName& n = e->ctor;
  bool wrap = atom_context;
  if (n.fmt.size() >= 2 && n.fmt.find('%') == std::string::npos && e->args.size() == 2) {
    out = detail::render_targ(e->args[0]) + " " + n.fmt + " " + detail::render_targ(e->args[1]);
  } else if (n.fmt == "->%1" && e->args.size() == 1) {
    out = "->" + n.params[0].str() + " " + detail::render_targ(e->args[0]);
  } else if (n.fmt == "\\%1" && e->args.size() == 1) {
    out = render_texpr(e->args[0].trans, true) + "\\" + n.params[0].str();
    wrap = false;
  } else if (n.fmt == "[%1]" && e->args.size() == 1) {
    out = render_texpr(e->args[0].trans, true) + "[" + n.params[0].str() + "]";
    wrap = false;
  } else if (e->args.empty()) {
    out = n.str();
    wrap = false;
  } else {
    std::vector<std::string> as;
    for (const auto& a : e->args) as.push_back(detail::render_targ(a));
    out = n.str() + "(" + join(as, ", ") + ")";
    wrap = false;
  }
  return wrap ? "(" + out + ")" : out;
}

}  // namespace epsos
