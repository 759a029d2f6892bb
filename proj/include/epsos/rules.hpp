#pragma once

#include "epsos/syntax.hpp"

namespace epsos {

// ---------------------------------------------------------------------------
// Rule names. Names are schematic: a format token with placeholders %1, %2
// filled by the name-forming parameters ("->%1" yields ->a, ->b, ...).
// Two concrete rules may share a name only if they have the same type,
// target and trigger set but different triggers.
// ---------------------------------------------------------------------------

struct RuleName {
  Name fmt;
  std::vector<OpParamValue> params;

  std::string str() const {
    std::string out;
    for (std::size_t i = 0; i < fmt.size(); ++i) {
      if (fmt[i] == '%' && i + 1 < fmt.size() && fmt[i + 1] >= '1' && fmt[i + 1] <= '9') {
        std::size_t k = fmt[i + 1] - '1';
        out += k < params.size() ? params[k].str() : "?";
        ++i;
      } else {
        out += fmt[i];
      }
    }
    return out;
  }

  friend bool operator==(const RuleName& a, const RuleName& b) {
    return a.fmt == b.fmt && a.params == b.params;
  }
  friend bool operator<(const RuleName& a, const RuleName& b) {
    if (a.fmt != b.fmt) return a.fmt < b.fmt;
    return a.str() < b.str();
  }
};

inline const Name kRecActName = "rec_Act";
inline const Name kRecInName = "rec_In";

// ---------------------------------------------------------------------------
// Schematic De Simone rules.
// ---------------------------------------------------------------------------

struct Premise {
  Name source_var;  // must be one of the conclusion's argument variables
  Name label_var;
  Name target_var;
};

struct DeSimoneRuleTemplate {
  Name name_fmt;
  std::vector<Name> name_param_vars;  // fill %1.. in order

  Name op_family;
  Name op_param_var;  // binds the operator parameter; "" when none

  std::vector<Name> source_vars;  // x_1..x_n of the conclusion source
  std::vector<Premise> premises;
  LabelTermPtr conclusion_label;
  PExpr target;  // pattern over source/premise-target variables

  std::vector<SideCondition> conditions;
  std::map<Name, LabelSetPtr> var_ranges;  // optional range per label variable
  SourceSpan span;

  int arity() const { return static_cast<int>(source_vars.size()); }

  std::string locator() const { return name_fmt + " @ " + span.str(); }

  /// Premise index (1-based) of a premise, or 0 when its source variable is
  /// not an argument of the conclusion.
  int premise_index(const Premise& pr) const {
    for (std::size_t i = 0; i < source_vars.size(); ++i)
      if (source_vars[i] == pr.source_var) return static_cast<int>(i) + 1;
    return 0;
  }

  std::vector<int> trigger_set() const {
    std::vector<int> is;
    for (const auto& pr : premises) {
      int i = premise_index(pr);
      if (i > 0) is.push_back(i);
    }
    std::sort(is.begin(), is.end());
    is.erase(std::unique(is.begin(), is.end()), is.end());
    return is;
  }
};

/// A fully instantiated rule: concrete name, operator, premise labels and
/// conclusion label. The target stays a pattern over the rule's variables.
struct ConcreteRule {
  RuleName name;
  OpInstance op;
  std::vector<int> trigger;            // I, ascending
  std::vector<Label> premise_labels;   // parallel to trigger
  std::vector<Name> premise_targets;   // y_i names, parallel to trigger
  Label conclusion;
  PExpr target;                        // pattern
  std::vector<Name> source_vars;
  const DeSimoneRuleTemplate* origin = nullptr;

  std::string trigger_str() const {
    std::vector<std::string> parts;
    std::size_t k = 0;
    for (std::size_t i = 1; i <= source_vars.size(); ++i) {
      if (k < trigger.size() && trigger[k] == static_cast<int>(i)) {
        parts.push_back(premise_labels[k].str());
        ++k;
      } else {
        parts.push_back("*");
      }
    }
    return "(" + join(parts, ",") + ")";
  }
};

// ---------------------------------------------------------------------------
// TSS. Recursion rules are never stored: they are built in per the format
// and synthesized on demand.
// ---------------------------------------------------------------------------

struct Tss {
  Signature sig;
  LabelUniverse universe;
  std::vector<DeSimoneRuleTemplate> templates;

  std::vector<const DeSimoneRuleTemplate*> templates_for_family(const Name& fam) const {
    std::vector<const DeSimoneRuleTemplate*> out;
    for (const auto& t : templates)
      if (t.op_family == fam) out.push_back(&t);
    return out;
  }

  std::vector<const DeSimoneRuleTemplate*> templates_for_name(const Name& fmt) const {
    std::vector<const DeSimoneRuleTemplate*> out;
    for (const auto& t : templates)
      if (t.name_fmt == fmt) out.push_back(&t);
    return out;
  }
};

struct Diagnostic {
  std::string locator;
  std::string clause;  // DS1..DS7 / SF1..SF8
  std::string message;

  std::string str() const { return clause + " [" + locator + "]: " + message; }
};

struct FormatReport {
  std::vector<Diagnostic> diagnostics;

  bool pass() const { return diagnostics.empty(); }

  bool has_clause(const std::string& clause) const {
    for (const auto& d : diagnostics)
      if (d.clause == clause) return true;
    return false;
  }

  std::string str() const {
    if (pass()) return "pass";
    std::string out = "fail\n";
    for (const auto& d : diagnostics) out += "  " + d.str() + "\n";
    return out;
  }
};

// ---------------------------------------------------------------------------
// Operator parameters inside rule targets are schematic: the target of the
// prefix-discard rule mentions the prefix operator with its parameter still a
// variable. Such slots are stored as markers "%<var>" and resolved against
// the instantiation environment.
// ---------------------------------------------------------------------------

inline bool is_marker(const Name& n) { return !n.empty() && n[0] == '%'; }

inline OpParamValue marker_param(OpParamValue::Kind kind, const Name& var) {
  switch (kind) {
    case OpParamValue::Kind::Label: return OpParamValue::of_label(Label("%" + var));
    case OpParamValue::Kind::Set: return OpParamValue::of_set({Label("%" + var)});
    case OpParamValue::Kind::Fn: return OpParamValue::of_fn("%" + var);
    case OpParamValue::Kind::None: break;
  }
  return OpParamValue::none();
}

inline PExpr resolve_op_params(const Signature& sig, const PExpr& pattern,
                               const Bindings& env) {
  switch (pattern->kind) {
    case ProcessExpr::Kind::Var: return pattern;
    case ProcessExpr::Kind::Rec: {
      bool touched = false;
      auto spec = std::make_shared<RecSpec>();
      for (const auto& [x, body] : pattern->rec->bindings) {
        spec->bindings[x] = resolve_op_params(sig, body, env);
        touched = touched || spec->bindings[x] != body;
      }
      if (!touched) return pattern;
      return mk_rec(pattern->rec_var, spec);
    }
    case ProcessExpr::Kind::App: break;
  }
  std::vector<PExpr> args;
  for (const auto& a : pattern->args) args.push_back(resolve_op_params(sig, a, env));
  OpParamValue param = pattern->op.param;
  switch (param.kind) {
    case OpParamValue::Kind::Label:
      if (is_marker(param.label.base)) {
        auto v = env.label(param.label.base.substr(1));
        if (!v) fail("KindMismatch", "unresolved operator parameter " + param.label.base);
        param = OpParamValue::of_label(*v);
      }
      break;
    case OpParamValue::Kind::Set:
      if (param.set.size() == 1 && is_marker(param.set[0].base)) {
        auto it = env.set_params.find(param.set[0].base.substr(1));
        if (it == env.set_params.end())
          fail("KindMismatch", "unresolved set parameter " + param.set[0].base);
        param = OpParamValue::of_set(it->second);
      }
      break;
    case OpParamValue::Kind::Fn:
      if (is_marker(param.fn)) {
        auto it = env.fn_params.find(param.fn.substr(1));
        if (it == env.fn_params.end())
          fail("KindMismatch", "unresolved function parameter " + param.fn);
        param = OpParamValue::of_fn(it->second);
      }
      break;
    case OpParamValue::Kind::None: break;
  }
  return mk_app(sig.instantiate(pattern->op.family, std::move(param)), std::move(args));
}

// ---------------------------------------------------------------------------
// Instantiation
// ---------------------------------------------------------------------------

namespace detail {

inline void bind_op_param(const OperatorFamily& fam, const Name& var,
                          const OpParamValue& value, Bindings& env) {
  if (var.empty()) return;
  switch (fam.param_kind) {
    case OpParamValue::Kind::None: return;
    case OpParamValue::Kind::Label: env.label_vars[var] = value.label; return;
    case OpParamValue::Kind::Set:
      env.set_params[var] = std::set<Label>(value.set.begin(), value.set.end());
      return;
    case OpParamValue::Kind::Fn: env.fn_params[var] = value.fn; return;
  }
}

inline std::set<Name> template_label_vars(const DeSimoneRuleTemplate& t) {
  std::set<Name> vars;
  for (const auto& pr : t.premises) vars.insert(pr.label_var);
  t.conclusion_label->collect_vars(vars);
  for (const auto& c : t.conditions) c.collect_vars(vars);
  for (const auto& v : t.name_param_vars) vars.insert(v);
  return vars;
}

template <typename Fn>
void enumerate_assignments(const LabelUniverse& u, const DeSimoneRuleTemplate& t,
                           const std::vector<Name>& vars, std::size_t k, Bindings& env,
                           Fn&& yield) {
  if (k == vars.size()) {
    // Range constraints also apply to variables bound before enumeration
    // (premise labels, name parameters).
    for (const auto& [v, range] : t.var_ranges) {
      auto l = env.label(v);
      if (l && !range->eval(u, env).count(*l)) return;
    }
    for (const auto& c : t.conditions)
      if (!c.holds(u, env)) return;
    yield(env);
    return;
  }
  const Name& v = vars[k];
  std::set<Label> range;
  auto it = t.var_ranges.find(v);
  if (it != t.var_ranges.end())
    range = it->second->eval(u, env);
  else
    range = u.labels;
  for (const auto& l : range) {
    env.label_vars[v] = l;
    enumerate_assignments(u, t, vars, k + 1, env, yield);
  }
  env.label_vars.erase(v);
}

}  // namespace detail

/// All concrete instances of a template for a given operator instance.
inline std::vector<ConcreteRule> instantiate_template(const Tss& tss,
                                                      const DeSimoneRuleTemplate& t,
                                                      const OpInstance& op) {
  const OperatorFamily* fam = tss.sig.find(op.family);
  if (!fam) fail("UnknownOperator", "no operator family '" + op.family + "'");

  Bindings base;
  detail::bind_op_param(*fam, t.op_param_var, op.param, base);

  std::vector<Name> free;
  for (const auto& v : detail::template_label_vars(t))
    if (!base.label_vars.count(v) && !base.set_params.count(v) && !base.fn_params.count(v))
      free.push_back(v);
  std::sort(free.begin(), free.end());

  std::vector<ConcreteRule> out;
  detail::enumerate_assignments(tss.universe, t, free, 0, base, [&](const Bindings& env) {
    auto concl = t.conclusion_label->eval(tss.universe, env);
    if (!concl || !tss.universe.contains(*concl)) return;

    ConcreteRule r;
    r.op = op;
    r.origin = &t;
    r.source_vars = t.source_vars;
    r.conclusion = *concl;
    r.target = resolve_op_params(tss.sig, t.target, env);
    struct Entry {
      int i;
      Label l;
      Name y;
    };
    std::vector<Entry> entries;
    for (const auto& pr : t.premises) {
      int i = t.premise_index(pr);
      auto lv = env.label(pr.label_var);
      if (!lv || !tss.universe.contains(*lv)) return;
      entries.push_back({i, *lv, pr.target_var});
    }
    std::stable_sort(entries.begin(), entries.end(),
                     [](const Entry& a, const Entry& b) { return a.i < b.i; });
    for (const auto& e : entries) {
      r.trigger.push_back(e.i);
      r.premise_labels.push_back(e.l);
      r.premise_targets.push_back(e.y);
    }
    r.name.fmt = t.name_fmt;
    for (const auto& v : t.name_param_vars) {
      if (auto l = env.label(v)) {
        r.name.params.push_back(OpParamValue::of_label(*l));
      } else if (env.set_params.count(v)) {
        r.name.params.push_back(OpParamValue::of_set(env.set_params.at(v)));
      } else if (env.fn_params.count(v)) {
        r.name.params.push_back(OpParamValue::of_fn(env.fn_params.at(v)));
      } else {
        return;  // unbound name parameter: no instance
      }
    }
    out.push_back(std::move(r));
  });
  return out;
}

/// All concrete rules of type (op, n) whose side conditions hold and whose
/// conclusion label matches the filter.
inline std::vector<ConcreteRule> instantiate_rules(const Tss& tss, const OpInstance& op,
                                                   std::optional<Label> conclusion = {}) {
  if (!tss.sig.find(op.family))
    fail("UnknownOperator", "no operator family '" + op.family + "'");
  std::vector<ConcreteRule> out;
  for (const auto* t : tss.templates_for_family(op.family)) {
    auto rules = instantiate_template(tss, *t, op);
    for (auto& r : rules)
      if (!conclusion || r.conclusion == *conclusion) out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Built-in recursion rules (synthesized, never stored).
// ---------------------------------------------------------------------------

struct RecursionRule {
  bool is_act;  // rec_Act vs rec_In
  Name rec_var;
  RecPtr spec;
  Label label;
  PExpr premise_source;    // <S_X|S>
  PExpr conclusion_source; // <X|S>

  RuleName name() const { return RuleName{is_act ? kRecActName : kRecInName, {}}; }
};

inline RecursionRule builtin_recursion_rule(const Tss& tss, const Name& x, const RecPtr& spec,
                                            const Label& label) {
  if (!spec->bindings.count(x))
    fail("UnknownRecursionVariable", "'" + x + "' is not bound by the specification");
  if (!tss.universe.contains(label))
    fail("InvalidParams", "label '" + label.str() + "' is not in the universe");
  RecursionRule r;
  r.is_act = tss.universe.is_act(label);
  r.rec_var = x;
  r.spec = spec;
  r.label = label;
  r.premise_source = unfold_rec(x, spec);
  r.conclusion_source = mk_rec(x, spec);
  return r;
}

// ---------------------------------------------------------------------------
// Def 5.1 format checker. Clause identifiers are stable:
//   DS1 premise shape, DS2 distinct variables, DS3 univariate target over the
//   allowed variables, DS4 closed <X|S> subexpressions, DS5 indicator clause,
//   DS6 rule-name coherence, DS7 reserved recursion-rule names.
// ---------------------------------------------------------------------------

namespace detail {

inline void count_free_occurrences(const ProcessExpr& e, std::set<Name>& bound,
                                   std::map<Name, int>& out) {
  switch (e.kind) {
    case ProcessExpr::Kind::Var:
      if (!bound.count(e.var)) out[e.var]++;
      return;
    case ProcessExpr::Kind::App:
      for (const auto& a : e.args) count_free_occurrences(*a, bound, out);
      return;
    case ProcessExpr::Kind::Rec: {
      std::vector<Name> added;
      for (const auto& [x, _] : e.rec->bindings)
        if (bound.insert(x).second) added.push_back(x);
      for (const auto& [_, body] : e.rec->bindings) count_free_occurrences(*body, bound, out);
      for (const auto& x : added) bound.erase(x);
      return;
    }
  }
}

inline bool rec_subexprs_closed(const PExpr& e) {
  switch (e->kind) {
    case ProcessExpr::Kind::Var: return true;
    case ProcessExpr::Kind::App:
      for (const auto& a : e->args)
        if (!rec_subexprs_closed(a)) return false;
      return true;
    case ProcessExpr::Kind::Rec: return is_closed(e);
  }
  return true;
}

/// Positional normal form of a rule target: x_i -> "#x<i>", y_i -> "#y<i>".
inline PExpr positional_target(const DeSimoneRuleTemplate& t) {
  Substitution sigma;
  for (std::size_t i = 0; i < t.source_vars.size(); ++i)
    sigma[t.source_vars[i]] = mk_var("#x" + std::to_string(i + 1));
  for (const auto& pr : t.premises) {
    int i = t.premise_index(pr);
    if (i > 0) sigma[pr.target_var] = mk_var("#y" + std::to_string(i));
  }
  return substitute(t.target, sigma);
}

/// The target Op(z_1..z_n) required by the indicator clause, with the
/// operator parameter kept schematic so templates compare structurally.
inline PExpr indicator_target(const Tss& tss, const DeSimoneRuleTemplate& t) {
  const OperatorFamily* fam = tss.sig.find(t.op_family);
  OpParamValue param = fam && fam->param_kind != OpParamValue::Kind::None
                           ? marker_param(fam->param_kind, t.op_param_var)
                           : OpParamValue::none();
  auto trig = t.trigger_set();
  std::vector<PExpr> args;
  for (std::size_t i = 1; i <= t.source_vars.size(); ++i) {
    bool in_trigger = std::find(trig.begin(), trig.end(), static_cast<int>(i)) != trig.end();
    args.push_back(mk_var((in_trigger ? "#y" : "#x") + std::to_string(i)));
  }
  return mk_app(tss.sig.instantiate(t.op_family, std::move(param)), std::move(args));
}

/// Sample operator instances for checking a template: label parameters range
/// over their full range; set parameters are probed with {} and the full
/// sort; fn parameters with every declared relabelling (or identity).
inline std::vector<OpInstance> sample_ops(const Tss& tss, const DeSimoneRuleTemplate& t) {
  const OperatorFamily* fam = tss.sig.find(t.op_family);
  if (!fam) return {};
  std::vector<OpInstance> out;
  switch (fam->param_kind) {
    case OpParamValue::Kind::None:
      out.push_back(tss.sig.instantiate(fam->id));
      break;
    case OpParamValue::Kind::Label: {
      Bindings none;
      std::set<Label> range =
          fam->label_range ? fam->label_range->eval(tss.universe, none) : tss.universe.labels;
      for (const auto& l : range)
        out.push_back(tss.sig.instantiate(fam->id, OpParamValue::of_label(l)));
      break;
    }
    case OpParamValue::Kind::Set: {
      out.push_back(tss.sig.instantiate(fam->id, OpParamValue::of_set({})));
      std::set<Label> full;
      auto it = tss.universe.sorts.find(fam->set_sort);
      if (it != tss.universe.sorts.end())
        for (const auto& b : it->second) full.insert(Label(b));
      if (!full.empty())
        out.push_back(tss.sig.instantiate(fam->id, OpParamValue::of_set(full)));
      break;
    }
    case OpParamValue::Kind::Fn: {
      if (tss.universe.functions.empty()) {
        out.push_back(tss.sig.instantiate(fam->id, OpParamValue::of_fn("id")));
      } else {
        for (const auto& [f, _] : tss.universe.functions)
          out.push_back(tss.sig.instantiate(fam->id, OpParamValue::of_fn(f)));
      }
      break;
    }
  }
  return out;
}

}  // namespace detail

inline FormatReport check_de_simone(const Tss& tss) {
  FormatReport report;
  auto diag = [&](const DeSimoneRuleTemplate& t, const std::string& clause,
                  const std::string& msg) {
    report.diagnostics.push_back({t.locator(), clause, msg});
  };

  for (const auto& t : tss.templates) {
    const OperatorFamily* fam = tss.sig.find(t.op_family);
    if (!fam) {
      diag(t, "DS1", "conclusion source uses undeclared operator '" + t.op_family + "'");
      continue;
    }
    if (static_cast<int>(t.source_vars.size()) != fam->arity)
      diag(t, "DS1", "conclusion source arity does not match operator arity");

    // DS1: premises have the form x_i -a_i-> y_i with x_i an argument.
    std::set<int> premise_indices;
    for (const auto& pr : t.premises) {
      int i = t.premise_index(pr);
      if (i == 0)
        diag(t, "DS1", "premise source '" + pr.source_var +
                           "' is not an argument of the conclusion");
      else if (!premise_indices.insert(i).second)
        diag(t, "DS1", "two premises share argument position " + std::to_string(i));
    }

    // DS2: x_i and y_i pairwise distinct.
    std::set<Name> proc_vars;
    for (const auto& x : t.source_vars)
      if (!proc_vars.insert(x).second)
        diag(t, "DS2", "source variable '" + x + "' repeated");
    for (const auto& pr : t.premises)
      if (!proc_vars.insert(pr.target_var).second)
        diag(t, "DS2", "variable '" + pr.target_var + "' repeated");

    // DS3: univariate target over allowed variables only.
    std::set<Name> allowed;
    auto trig = t.trigger_set();
    for (std::size_t i = 0; i < t.source_vars.size(); ++i)
      if (std::find(trig.begin(), trig.end(), static_cast<int>(i) + 1) == trig.end())
        allowed.insert(t.source_vars[i]);
    for (const auto& pr : t.premises) allowed.insert(pr.target_var);
    std::map<Name, int> occ;
    std::set<Name> bound;
    detail::count_free_occurrences(*t.target, bound, occ);
    for (const auto& [v, n] : occ) {
      if (!allowed.count(v))
        diag(t, "DS3", "target uses disallowed variable '" + v + "'");
      else if (n > 1)
        diag(t, "DS3", "target is not univariate: '" + v + "' occurs " +
                           std::to_string(n) + " times");
    }

    // DS4: <X|S> subexpressions of the target are closed.
    if (!detail::rec_subexprs_closed(t.target))
      diag(t, "DS4", "target contains a non-closed recursive call");

    // DS7: reserved recursion-rule names.
    if (t.name_fmt == kRecActName || t.name_fmt == kRecInName)
      diag(t, "DS7", "rule name '" + t.name_fmt + "' is reserved for recursion rules");

    // DS5: indicator clause, per concrete instance.
    for (const auto& op : detail::sample_ops(tss, t)) {
      bool shape_reported = false;
      for (const auto& r : instantiate_template(tss, t, op)) {
        if (tss.universe.is_act(r.conclusion)) continue;
        for (const auto& pl : r.premise_labels)
          if (tss.universe.is_act(pl)) {
            diag(t, "DS5",
                 "indicator conclusion '" + r.conclusion.str() +
                     "' derived from action premise '" + pl.str() + "'");
            break;
          }
        if (!shape_reported) {
          auto want = detail::indicator_target(tss, t);
          if (detail::positional_target(t)->key != want->key) {
            diag(t, "DS5", "indicator conclusion requires target " + render(want));
            shape_reported = true;
          }
        }
      }
      if (shape_reported) break;
    }
  }

  // DS6: name coherence across all concrete rules.
  struct NameInfo {
    std::string op_key;
    std::string target_key;
    std::vector<int> trigger_set;
    const DeSimoneRuleTemplate* origin;
    std::set<std::string> triggers;
  };
  std::map<std::string, NameInfo> by_name;
  for (const auto& t : tss.templates) {
    for (const auto& op : detail::sample_ops(tss, t)) {
      for (const auto& r : instantiate_template(tss, t, op)) {
        std::string key = r.name.str();
        auto pos_target = detail::positional_target(t);
        auto it = by_name.find(key);
        if (it == by_name.end()) {
          NameInfo info{r.op.key(), pos_target->key, r.trigger, &t, {r.trigger_str()}};
          by_name.emplace(key, std::move(info));
          continue;
        }
        NameInfo& info = it->second;
        if (info.op_key != r.op.key())
          diag(t, "DS6", "rules named '" + key + "' have different types");
        else if (info.target_key != pos_target->key)
          diag(t, "DS6", "rules named '" + key + "' have different targets");
        else if (info.trigger_set != r.trigger)
          diag(t, "DS6", "rules named '" + key + "' have different trigger sets");
        else if (!info.triggers.insert(r.trigger_str()).second)
          diag(t, "DS6", "two rules named '" + key + "' share trigger " + r.trigger_str());
      }
    }
  }

  return report;
}

}  // namespace epsos
