#pragma once

#include "epsos/transitions.hpp"

namespace epsos {

// ---------------------------------------------------------------------------
// Successor rules derive literals  t ~u~> v  ("t survives the execution of u
// as v"). A rule relates two transition constructors R (left) and S (right)
// of the same operator type; premises live at argument positions I with
// I a subset of both trigger sets. Argument and target patterns are written
// with a fixed positional vocabulary:
//
//   x<i>   process argument i                 y<i>  target of the rhs premise
//   t<i>   lhs transition argument (tx_i)     s<i>  premise result (tz_i)
//   f<i>   fresh transition variable at i (a tz_i without a premise)
//
// Implicit label variables usable in side conditions:
//   xa<i>, ya<i>, za<i>   labels of t<i>/u<i> and of s<i>/f<i>
//   xc, yc                conclusion labels of the whole lhs/rhs transitions
// ---------------------------------------------------------------------------

enum class MetaKind { X, Y, TX, TZ, Fresh };

inline bool meta_is_trans(MetaKind k) { return k != MetaKind::X && k != MetaKind::Y; }

/// Schematic constructor reference in a successor rule: a rule-name format
/// plus one pattern per name parameter. A pattern is a variable, optionally
/// under a fixed decoration (the receive rule of a prefix is ->[b?]).
struct RuleNameSchema {
  Name fmt;
  std::vector<Name> param_vars;
  std::vector<Label::Deco> param_decos;  // parallel; None = bare variable

  Label::Deco deco_at(std::size_t k) const {
    return k < param_decos.size() ? param_decos[k] : Label::Deco::None;
  }
};

struct SuccPatArg {
  bool is_trans = false;
  int index = 0;  // 1-based position the metavariable claims
};

struct STPat;
using STPatPtr = std::shared_ptr<const STPat>;

struct STPat {
  enum class Kind { Meta, Ctor, Rec };

  Kind kind;
  MetaKind meta{};
  int index = 0;
  RuleNameSchema ctor;
  std::vector<STPatPtr> args;
  bool rec_is_act = true;
  STPatPtr rec_inner;

  static STPatPtr make_meta(MetaKind m, int i) {
    auto p = std::make_shared<STPat>();
    p->kind = Kind::Meta;
    p->meta = m;
    p->index = i;
    return p;
  }
  static STPatPtr make_ctor(RuleNameSchema s, std::vector<STPatPtr> as) {
    auto p = std::make_shared<STPat>();
    p->kind = Kind::Ctor;
    p->ctor = std::move(s);
    p->args = std::move(as);
    return p;
  }
  static STPatPtr make_rec(bool is_act, STPatPtr inner) {
    auto p = std::make_shared<STPat>();
    p->kind = Kind::Rec;
    p->rec_is_act = is_act;
    p->rec_inner = std::move(inner);
    return p;
  }

  std::string str() const {
    switch (kind) {
      case Kind::Meta: {
        const char* heads[] = {"x", "y", "t", "s", "f"};
        return heads[static_cast<int>(meta)] + std::to_string(index);
      }
      case Kind::Ctor: {
        std::vector<std::string> as;
        for (const auto& a : args) as.push_back(a->str());
        std::string head = ctor.fmt;
        if (!ctor.param_vars.empty()) head += "[" + join(ctor.param_vars, ",") + "]";
        return head + "(" + join(as, ", ") + ")";
      }
      case Kind::Rec:
        return std::string(rec_is_act ? kRecActName : kRecInName) + "(" +
               rec_inner->str() + ")";
    }
    return "?";
  }
};

struct SuccessorRuleTemplate {
  std::string doc_name;

  bool lhs_is_rec = false;
  bool rhs_is_rec = false;
  bool lhs_rec_act = true;
  bool rhs_rec_act = true;
  RuleNameSchema lhs, rhs;                // when not recursion constructors
  std::vector<SuccPatArg> lhs_args, rhs_args;

  std::vector<int> premise_indices;  // I; for recursion templates: {1}
  STPatPtr target;                   // v-dot

  std::vector<Name> decl_vars;
  std::map<Name, LabelSetPtr> var_ranges;
  std::vector<SideCondition> conditions;
  SourceSpan span;

  std::string locator() const { return doc_name + " @ " + span.str(); }
};

struct Tsss {
  Tss tss;
  std::vector<SuccessorRuleTemplate> successor_templates;
};

/// A successor literal t ~u~> v with the Def 6.6 source/target coherence.
struct SuccessorLiteral {
  TExpr t, u, v;

  static SuccessorLiteral checked(const Tss& tss, TExpr t, TExpr u, TExpr v) {
    Literal lt = texpr_root_literal(tss, t);
    Literal lu = texpr_root_literal(tss, u);
    Literal lv = texpr_root_literal(tss, v);
    if (lt.src->key != lu.src->key)
      fail("InvalidParams", "successor literal: src(t) != src(u)");
    if (lv.src->key != lu.tgt->key)
      fail("InvalidParams", "successor literal: src(v) != tar(u)");
    return SuccessorLiteral{std::move(t), std::move(u), std::move(v)};
  }
};

// ---------------------------------------------------------------------------
// Built-in recursion successor rule (synthesized, never stored). For every
// recursive call <X|S> and labels xa, ya, za:
//
//   (tx :: <S_X|S> -xa-> x1) ~(ty :: <S_X|S> -ya-> y1)~> (tz :: y1 -za-> z1)
//   -----------------------------------------------------------------------
//   rec_chi(X, S, tx-expr)  ~ rec_psi(X, S, ty-expr) ~>  u-dot
//
// with rec_chi = rec_Act iff xa in Act, rec_psi = rec_Act iff ya in Act,
// u-dot the premise result when ya in Act and the lhs expression otherwise.
// ---------------------------------------------------------------------------

struct RecSuccessorRule {
  Label xa, ya, za;
  bool lhs_act = true, rhs_act = true;
  TExpr premise_t, premise_u, premise_v;
  TExpr lhs, rhs, target;
};

inline RecSuccessorRule builtin_recursion_successor_rule(const Tss& tss, const Name& x,
                                                         const RecPtr& spec, const Label& xa,
                                                         const Label& ya, const Label& za) {
  if (!spec->bindings.count(x))
    fail("UnknownRecursionVariable", "'" + x + "' is not bound by the specification");
  PExpr unfolded = unfold_rec(x, spec);
  RecSuccessorRule r;
  r.xa = xa;
  r.ya = ya;
  r.za = za;
  r.lhs_act = tss.universe.is_act(xa);
  r.rhs_act = tss.universe.is_act(ya);
  r.premise_t = mk_tvar("tx", Literal{unfolded, xa, mk_var("x'")});
  r.premise_u = mk_tvar("ty", Literal{unfolded, ya, mk_var("y'")});
  r.premise_v = mk_tvar("tz", Literal{mk_var("y'"), za, mk_var("z'")});
  r.lhs = mk_rec_texpr(r.lhs_act, x, spec, r.premise_t);
  r.rhs = mk_rec_texpr(r.rhs_act, x, spec, r.premise_u);
  r.target = r.rhs_act ? r.premise_v : r.lhs;
  return r;
}

// ---------------------------------------------------------------------------
// Rule-1 expansion: the identity under indicator transitions, converted into
// format-compliant rules by pairing constructors of the listed types.
// ---------------------------------------------------------------------------

namespace detail {

/// One rule-name schema of a family: the template and its trigger set.
struct NameSchemaInfo {
  Name fmt;
  const DeSimoneRuleTemplate* tmpl;
  std::vector<int> trigger;
};

inline std::vector<NameSchemaInfo> family_name_schemas(const Tss& tss, const Name& fam) {
  std::vector<NameSchemaInfo> out;
  for (const auto& t : tss.templates) {
    if (t.op_family != fam) continue;
    bool dup = false;
    for (auto& n : out)
      if (n.fmt == t.name_fmt) {
        dup = true;
        fail("InvalidParams", "expansion requires one template per rule name; '" +
                                  t.name_fmt + "' has several");
      }
    if (!dup) out.push_back({t.name_fmt, &t, t.trigger_set()});
  }
  std::sort(out.begin(), out.end(),
            [](const NameSchemaInfo& a, const NameSchemaInfo& b) { return a.fmt < b.fmt; });
  return out;
}

inline bool indicator_capable(const Tss& tss, const DeSimoneRuleTemplate& t) {
  for (const auto& op : sample_ops(tss, t))
    for (const auto& r : instantiate_template(tss, t, op))
      if (!tss.universe.is_act(r.conclusion)) return true;
  return false;
}

/// Copy a template's label variables under a suffix so both sides of a pair
/// stay independent; the operator parameter stays shared.
struct VarRenaming {
  std::map<Name, Name> map;
  Name shared_op_var;

  Name operator()(const Name& v) const {
    if (v == shared_op_var) return v;
    auto it = map.find(v);
    return it == map.end() ? v : it->second;
  }
};

inline VarRenaming rename_vars(const DeSimoneRuleTemplate& t, const std::string& suffix,
                               const Name& shared_op_var) {
  VarRenaming r;
  r.shared_op_var = shared_op_var;
  for (const auto& v : template_label_vars(t))
    if (v != shared_op_var) r.map[v] = v + suffix;
  return r;
}

inline LabelTermPtr rename_term(const LabelTermPtr& t, const VarRenaming& r) {
  switch (t->kind) {
    case LabelTerm::Kind::Var: return LabelTerm::make_var(r(t->var));
    case LabelTerm::Kind::Const: return t;
    case LabelTerm::Kind::Bar: return LabelTerm::make_bar(rename_term(t->a, r));
    case LabelTerm::Kind::Deco: return LabelTerm::make_deco(rename_term(t->a, r), t->deco);
    case LabelTerm::Kind::FnApply: return LabelTerm::make_fn(r(t->var), rename_term(t->a, r));
    case LabelTerm::Kind::BComp:
      return LabelTerm::make_bcomp(rename_term(t->a, r), rename_term(t->b, r));
  }
  return t;
}

inline LabelSetPtr rename_set(const LabelSetPtr& s, const VarRenaming& r) {
  if (!s) return s;
  auto out = std::make_shared<LabelSetExpr>(*s);
  if (s->kind == LabelSetExpr::Kind::Enum) {
    out->elems.clear();
    for (const auto& e : s->elems) out->elems.push_back(rename_term(e, r));
  }
  out->a = rename_set(s->a, r);
  out->b = rename_set(s->b, r);
  return out;
}

inline SideCondition rename_cond(const SideCondition& c, const VarRenaming& r) {
  SideCondition out = c;
  out.lhs = rename_term(c.lhs, r);
  if (c.rhs) out.rhs = rename_term(c.rhs, r);
  if (c.set) out.set = rename_set(c.set, r);
  return out;
}

/// Import a side template's variables, ranges and conditions into an
/// expansion template under a suffix. Premise label variables are identified
/// with the implicit xa<i>/ya<i> trigger labels of the successor rule.
inline void import_side(const Tss& tss, SuccessorRuleTemplate& out,
                        const DeSimoneRuleTemplate& side, const std::string& suffix,
                        const Name& shared_op_var, const std::string& trig_head) {
  VarRenaming ren = rename_vars(side, suffix, shared_op_var);
  // Premise label variables are the trigger labels of the matched transition.
  for (const auto& pr : side.premises) {
    int i = side.premise_index(pr);
    if (i > 0) ren.map[pr.label_var] = trig_head + std::to_string(i);
  }
  for (const auto& [v, range] : side.var_ranges) {
    Name nv = ren(v);
    if (nv != shared_op_var && !out.var_ranges.count(nv))
      out.var_ranges[nv] = rename_set(range, ren);
  }
  for (const auto& v : template_label_vars(side)) {
    Name nv = ren(v);
    if (nv != shared_op_var &&
        std::find(out.decl_vars.begin(), out.decl_vars.end(), nv) == out.decl_vars.end())
      out.decl_vars.push_back(nv);
  }
  for (const auto& c : side.conditions) out.conditions.push_back(rename_cond(c, ren));
  (void)tss;
}

}  // namespace detail

/// The ze-substituted target R(ze_1..ze_n) prescribed by the final clause.
inline STPatPtr indicator_expansion_target(const RuleNameSchema& lhs,
                                           const std::vector<int>& trig_r,
                                           const std::vector<int>& trig_s,
                                           const std::vector<int>& premise_indices, int arity) {
  auto in = [](const std::vector<int>& v, int i) {
    return std::find(v.begin(), v.end(), i) != v.end();
  };
  std::vector<STPatPtr> zes;
  for (int i = 1; i <= arity; ++i) {
    if (in(premise_indices, i))
      zes.push_back(STPat::make_meta(MetaKind::TZ, i));
    else if (!in(trig_s, i))
      zes.push_back(STPat::make_meta(in(trig_r, i) ? MetaKind::TX : MetaKind::X, i));
    else
      zes.push_back(STPat::make_meta(MetaKind::Y, i));
  }
  return STPat::make_ctor(lhs, std::move(zes));
}

/// Expand the indicator-identity over the given operator types (family names;
/// "rec" stands for the recursion construct). For each ordered pair (R, S) of
/// same-type rule names where S can conclude outside Act, emit the instance
/// with premises at I_R n I_S and the ze-substituted target, guarded by a
/// side condition restricting the rhs conclusion to the indicator labels.
inline std::vector<SuccessorRuleTemplate> expand_indicator_identity(
    const Tss& tss, const std::vector<Name>& op_types) {
  std::vector<SuccessorRuleTemplate> out;
  auto indicator_cond = [] {
    SideCondition c;
    c.kind = SideCondition::Kind::InSet;
    c.lhs = LabelTerm::make_var("yc");
    c.set = LabelSetExpr::make(LabelSetExpr::Kind::Indicators);
    return c;
  };

  for (const auto& fam : op_types) {
    if (fam == "rec") {
      // rec_Act / rec_In paired with rec_In, whose conclusions are the
      // indicator labels; without indicators there is nothing to pair.
      if (tss.universe.indicators().empty()) continue;
      for (bool lhs_act : {true, false}) {
        SuccessorRuleTemplate t;
        t.doc_name = std::string("1/") + (lhs_act ? kRecActName : kRecInName) + "/" + kRecInName;
        t.lhs_is_rec = t.rhs_is_rec = true;
        t.lhs_rec_act = lhs_act;
        t.rhs_rec_act = false;
        t.premise_indices = {1};
        t.target = STPat::make_rec(lhs_act, STPat::make_meta(MetaKind::TZ, 1));
        t.conditions.push_back(indicator_cond());
        out.push_back(std::move(t));
      }
      continue;
    }

    const OperatorFamily* family = tss.sig.find(fam);
    if (!family) fail("UnknownOperatorType", "no operator family '" + fam + "'");
    auto schemas = detail::family_name_schemas(tss, fam);

    for (const auto& r : schemas) {
      for (const auto& s : schemas) {
        if (!detail::indicator_capable(tss, *s.tmpl)) continue;

        SuccessorRuleTemplate t;
        t.doc_name = "1/" + r.fmt + "/" + s.fmt;
        Name shared = r.tmpl->op_param_var;
        if (shared != s.tmpl->op_param_var)
          fail("InvalidParams", "rule names '" + r.fmt + "' and '" + s.fmt +
                                    "' disagree on the operator parameter variable");

        detail::VarRenaming ren_l = detail::rename_vars(*r.tmpl, "#l", shared);
        detail::VarRenaming ren_r = detail::rename_vars(*s.tmpl, "#r", shared);
        t.lhs.fmt = r.fmt;
        for (const auto& v : r.tmpl->name_param_vars) {
          t.lhs.param_vars.push_back(ren_l(v));
          t.lhs.param_decos.push_back(Label::Deco::None);
        }
        t.rhs.fmt = s.fmt;
        for (const auto& v : s.tmpl->name_param_vars) {
          t.rhs.param_vars.push_back(ren_r(v));
          t.rhs.param_decos.push_back(Label::Deco::None);
        }

        std::vector<int> both;
        for (int i : r.trigger)
          if (std::find(s.trigger.begin(), s.trigger.end(), i) != s.trigger.end())
            both.push_back(i);
        t.premise_indices = both;

        int n = family->arity;
        for (int i = 1; i <= n; ++i) {
          bool lt = std::find(r.trigger.begin(), r.trigger.end(), i) != r.trigger.end();
          bool rt = std::find(s.trigger.begin(), s.trigger.end(), i) != s.trigger.end();
          t.lhs_args.push_back({lt, i});
          t.rhs_args.push_back({rt, i});
        }
        t.target = indicator_expansion_target(t.lhs, r.trigger, s.trigger, both, n);

        detail::import_side(tss, t, *r.tmpl, "#l", shared, "xa");
        detail::import_side(tss, t, *s.tmpl, "#r", shared, "ya");
        t.conditions.push_back(indicator_cond());
        out.push_back(std::move(t));
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Def 7.1 format checker. Clause identifiers:
//   SF1 premise shape, SF2 I within both trigger sets, SF3 positional
//   variable discipline, SF4 argument shapes, SF5 type agreement of R and S,
//   SF6 source/target coherence, SF7 target variable shapes (univariate,
//   permitted shapes, index-set containments), SF8 final indicator clause.
// ---------------------------------------------------------------------------

namespace detail {

struct SuccSides {
  const DeSimoneRuleTemplate* lhs = nullptr;
  const DeSimoneRuleTemplate* rhs = nullptr;
  std::vector<int> trig_l, trig_r;
  int arity = 0;
};

/// Symbolic source of a target pattern; positions are rendered as variables
/// #x<i> / #y<i> so it can be compared against the rhs rule's target pattern.
inline PExpr symbolic_source(const Tss& tss, const STPatPtr& pat, const SuccSides& sides,
                             bool* unknown);

inline PExpr symbolic_meta_source(const STPatPtr& p, const SuccSides& sides) {
  auto in = [](const std::vector<int>& v, int i) {
    return std::find(v.begin(), v.end(), i) != v.end();
  };
  switch (p->meta) {
    case MetaKind::X: return mk_var("#x" + std::to_string(p->index));
    case MetaKind::TX: return mk_var("#x" + std::to_string(p->index));
    case MetaKind::Y: return mk_var("#y" + std::to_string(p->index));
    case MetaKind::TZ: return mk_var("#y" + std::to_string(p->index));
    case MetaKind::Fresh:
      return mk_var((in(sides.trig_r, p->index) ? "#y" : "#x") + std::to_string(p->index));
  }
  return mk_var("?");
}

inline PExpr symbolic_source(const Tss& tss, const STPatPtr& pat, const SuccSides& sides,
                             bool* unknown) {
  switch (pat->kind) {
    case STPat::Kind::Meta: return symbolic_meta_source(pat, sides);
    case STPat::Kind::Rec: {
      *unknown = true;  // recursion target patterns are validated separately
      return mk_var("#rec");
    }
    case STPat::Kind::Ctor: {
      auto ts = tss.templates_for_name(pat->ctor.fmt);
      if (ts.empty()) {
        *unknown = true;
        return mk_var("#unknown");
      }
      const auto* t = ts[0];
      const OperatorFamily* fam = tss.sig.find(t->op_family);
      OpParamValue param;
      if (fam && fam->param_kind == OpParamValue::Kind::Label) {
        // Symbolic parameter: use the schema variable name as a marker label.
        for (std::size_t k = 0; k < t->name_param_vars.size(); ++k)
          if (t->name_param_vars[k] == t->op_param_var && k < pat->ctor.param_vars.size())
            param = OpParamValue::of_label(Label("%" + pat->ctor.param_vars[k]));
      } else if (fam && fam->param_kind != OpParamValue::Kind::None) {
        for (std::size_t k = 0; k < t->name_param_vars.size(); ++k)
          if (t->name_param_vars[k] == t->op_param_var && k < pat->ctor.param_vars.size())
            param = fam->param_kind == OpParamValue::Kind::Set
                        ? OpParamValue::of_set({Label("%" + pat->ctor.param_vars[k])})
                        : OpParamValue::of_fn("%" + pat->ctor.param_vars[k]);
      }
      OpInstance op{t->op_family, fam ? fam->arity : 0, param};
      std::vector<PExpr> args;
      for (const auto& a : pat->args) args.push_back(symbolic_source(tss, a, sides, unknown));
      if (static_cast<int>(args.size()) != op.arity) {
        *unknown = true;
        return mk_var("#badarity");
      }
      return mk_app(op, std::move(args));
    }
  }
  return mk_var("?");
}

inline void collect_metas(const STPatPtr& pat, std::vector<const STPat*>& out) {
  switch (pat->kind) {
    case STPat::Kind::Meta: out.push_back(pat.get()); return;
    case STPat::Kind::Ctor:
      for (const auto& a : pat->args) collect_metas(a, out);
      return;
    case STPat::Kind::Rec: collect_metas(pat->rec_inner, out); return;
  }
}

inline bool pat_equal(const STPatPtr& a, const STPatPtr& b) {
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case STPat::Kind::Meta: return a->meta == b->meta && a->index == b->index;
    case STPat::Kind::Rec:
      return a->rec_is_act == b->rec_is_act && pat_equal(a->rec_inner, b->rec_inner);
    case STPat::Kind::Ctor: {
      if (a->ctor.fmt != b->ctor.fmt || a->args.size() != b->args.size()) return false;
      if (a->ctor.param_vars != b->ctor.param_vars) return false;
      for (std::size_t i = 0; i < a->args.size(); ++i)
        if (!pat_equal(a->args[i], b->args[i])) return false;
      return true;
    }
  }
  return false;
}

}  // namespace detail

inline FormatReport check_successor_format(const Tsss& tsss) {
  const Tss& tss = tsss.tss;
  FormatReport report;
  auto diag = [&](const SuccessorRuleTemplate& t, const std::string& clause,
                  const std::string& msg) {
    report.diagnostics.push_back({t.locator(), clause, msg});
  };
  auto in = [](const std::vector<int>& v, int i) {
    return std::find(v.begin(), v.end(), i) != v.end();
  };

  for (const auto& t : tsss.successor_templates) {
    // Recursion-constructor templates: a restricted shape.
    if (t.lhs_is_rec || t.rhs_is_rec) {
      if (!(t.lhs_is_rec && t.rhs_is_rec)) {
        diag(t, "SF5", "recursion constructor paired with an operator constructor");
        continue;
      }
      if (t.premise_indices != std::vector<int>{1})
        diag(t, "SF1", "recursion successor rules have exactly the inner premise");
      bool target_ok =
          t.target->kind == STPat::Kind::Rec && t.target->rec_is_act == t.lhs_rec_act &&
          t.target->rec_inner->kind == STPat::Kind::Meta &&
          ((t.target->rec_inner->meta == MetaKind::TZ && t.target->rec_inner->index == 1) ||
           (t.target->rec_inner->meta == MetaKind::TX && t.target->rec_inner->index == 1));
      bool plain_ok = t.target->kind == STPat::Kind::Meta && t.target->index == 1 &&
                      (t.target->meta == MetaKind::TZ);
      if (t.rhs_rec_act ? !plain_ok : !target_ok)
        diag(t, "SF8", "recursion successor target must be the premise result under "
                       "rec_Act and the lhs expression under rec_In");
      continue;
    }

    auto lts = tss.templates_for_name(t.lhs.fmt);
    auto rts = tss.templates_for_name(t.rhs.fmt);
    if (lts.empty() || rts.empty()) {
      diag(t, "SF5", "unknown transition constructor '" +
                         (lts.empty() ? t.lhs.fmt : t.rhs.fmt) + "'");
      continue;
    }
    detail::SuccSides sides;
    sides.lhs = lts[0];
    sides.rhs = rts[0];
    sides.trig_l = sides.lhs->trigger_set();
    sides.trig_r = sides.rhs->trigger_set();
    sides.arity = sides.lhs->arity();

    // SF5: same operator type, with a shared operator parameter variable.
    if (sides.lhs->op_family != sides.rhs->op_family ||
        sides.lhs->arity() != sides.rhs->arity()) {
      diag(t, "SF5", "'" + t.lhs.fmt + "' and '" + t.rhs.fmt + "' are not of the same type");
      continue;
    }
    const OperatorFamily* fam = tss.sig.find(sides.lhs->op_family);
    if (fam && fam->param_kind != OpParamValue::Kind::None) {
      auto slot = [&](const DeSimoneRuleTemplate* side,
                      const RuleNameSchema& schema) -> std::string {
        for (std::size_t k = 0; k < side->name_param_vars.size(); ++k)
          if (side->name_param_vars[k] == side->op_param_var && k < schema.param_vars.size())
            return schema.param_vars[k] + "/" +
                   std::to_string(static_cast<int>(schema.deco_at(k)));
        return std::string();
      };
      if (slot(sides.lhs, t.lhs) != slot(sides.rhs, t.rhs) || slot(sides.lhs, t.lhs).empty())
        diag(t, "SF5", "lhs and rhs must share the operator parameter");
    }

    // SF1 / SF2: premise positions.
    std::set<int> seen;
    for (int i : t.premise_indices) {
      if (i < 1 || i > sides.arity)
        diag(t, "SF1", "premise position " + std::to_string(i) + " out of range");
      else if (!seen.insert(i).second)
        diag(t, "SF1", "duplicate premise at position " + std::to_string(i));
      else if (!in(sides.trig_l, i) || !in(sides.trig_r, i))
        diag(t, "SF2", "premise position " + std::to_string(i) +
                           " is not in both trigger sets");
    }

    // SF3 / SF4: argument discipline.
    auto check_args = [&](const std::vector<SuccPatArg>& args, const std::vector<int>& trig,
                          const char* side) {
      if (static_cast<int>(args.size()) != sides.arity) {
        diag(t, "SF4", std::string(side) + " argument count does not match the arity");
        return;
      }
      for (int i = 1; i <= sides.arity; ++i) {
        const auto& a = args[i - 1];
        if (a.index != i)
          diag(t, "SF3", std::string(side) + " argument " + std::to_string(i) +
                             " uses the variable of position " + std::to_string(a.index));
        if (a.is_trans != in(trig, i))
          diag(t, "SF4", std::string(side) + " argument " + std::to_string(i) +
                             (a.is_trans ? " must be a process variable"
                                         : " must be a transition variable"));
      }
    };
    check_args(t.lhs_args, sides.trig_l, "lhs");
    check_args(t.rhs_args, sides.trig_r, "rhs");

    // SF7: univariate target over the permitted variable shapes.
    std::vector<const STPat*> metas;
    detail::collect_metas(t.target, metas);
    std::set<std::pair<int, int>> used;
    std::set<int> gen, gen_trans;  // I_G and I_T
    for (const auto* m : metas) {
      if (!used.insert({static_cast<int>(m->meta), m->index}).second)
        diag(t, "SF7", "target is not univariate: " +
                           STPat::make_meta(m->meta, m->index)->str() + " occurs twice");
      gen.insert(m->index);
      if (meta_is_trans(m->meta)) gen_trans.insert(m->index);
      int i = m->index;
      bool ok = true;
      switch (m->meta) {
        case MetaKind::TZ: ok = in(t.premise_indices, i); break;
        case MetaKind::X: ok = !in(sides.trig_l, i) && !in(sides.trig_r, i); break;
        case MetaKind::TX: ok = in(sides.trig_l, i) && !in(sides.trig_r, i); break;
        case MetaKind::Y: ok = in(sides.trig_r, i) && !in(t.premise_indices, i); break;
        case MetaKind::Fresh:
          ok = !in(t.premise_indices, i) &&
               (in(sides.trig_r, i) || (!in(sides.trig_r, i) && !in(sides.trig_l, i)));
          break;
      }
      if (!ok)
        diag(t, "SF7", "target variable " + STPat::make_meta(m->meta, m->index)->str() +
                           " is not among the permitted shapes");
    }
    for (int i : gen) {
      if (in(t.premise_indices, i) && !gen_trans.count(i))
        diag(t, "SF7", "index " + std::to_string(i) + " violates I n I_G within I_T");
      if (in(sides.trig_l, i) && !in(sides.trig_r, i) && !gen_trans.count(i))
        diag(t, "SF7",
             "index " + std::to_string(i) + " violates (I_R n I_G) \\ I_S within I_T");
    }

    // SF6: src(v-dot) = tar(S(ye..)) symbolically. (The first coherence
    // equation holds by the positional argument discipline checked above.)
    {
      bool unknown = false;
      PExpr got = detail::symbolic_source(tss, t.target, sides, &unknown);
      Substitution sigma;
      for (std::size_t i = 0; i < sides.rhs->source_vars.size(); ++i)
        sigma[sides.rhs->source_vars[i]] = mk_var("#x" + std::to_string(i + 1));
      for (const auto& pr : sides.rhs->premises) {
        int i = sides.rhs->premise_index(pr);
        if (i > 0) sigma[pr.target_var] = mk_var("#y" + std::to_string(i));
      }
      PExpr want_raw = substitute(sides.rhs->target, sigma);
      if (!unknown && got->key != want_raw->key)
        diag(t, "SF6", "target source " + render(got) + " differs from the rhs target " +
                           render(want_raw));
    }

    // SF8: the final indicator clause, checked against every indicator-
    // concluding instance of the rhs constructor compatible with the rule.
    bool capable = false;
    bool premise_label_bad = false;
    for (const auto& op : detail::sample_ops(tss, *sides.rhs)) {
      for (const auto& r : instantiate_template(tss, *sides.rhs, op)) {
        if (tss.universe.is_act(r.conclusion)) continue;
        // Compatibility with the successor rule's own conditions, as far as
        // they mention only rhs trigger labels, the rhs conclusion and
        // declared variables.
        Bindings env;
        env.label_vars["yc"] = r.conclusion;
        for (std::size_t k = 0; k < r.trigger.size(); ++k)
          env.label_vars["ya" + std::to_string(r.trigger[k])] = r.premise_labels[k];
        bool compatible = true;
        for (const auto& c : t.conditions) {
          std::set<Name> vars;
          c.collect_vars(vars);
          bool evaluable = true;
          for (const auto& v : vars)
            if (!env.label_vars.count(v)) evaluable = false;
          if (evaluable && !c.holds(tss.universe, env)) compatible = false;
        }
        if (!compatible) continue;
        capable = true;
        for (std::size_t k = 0; k < r.trigger.size(); ++k)
          if (in(t.premise_indices, r.trigger[k]) &&
              tss.universe.is_act(r.premise_labels[k]))
            premise_label_bad = true;
      }
    }
    if (capable) {
      if (premise_label_bad)
        diag(t, "SF8", "an indicator conclusion of '" + t.rhs.fmt +
                           "' admits an action premise label at a premise position");
      for (int i = 1; i <= sides.arity; ++i)
        if (!in(t.premise_indices, i) && in(sides.trig_l, i) && in(sides.trig_r, i))
          diag(t, "SF8", "position " + std::to_string(i) +
                             " must be a process variable on one side");
      STPatPtr want = indicator_expansion_target(t.lhs, sides.trig_l, sides.trig_r,
                                                 t.premise_indices, sides.arity);
      if (!detail::pat_equal(t.target, want))
        diag(t, "SF8", "indicator-capable rhs requires target " + want->str() +
                           ", found " + t.target->str());
    }
  }
  return report;
}

}  // namespace epsos
