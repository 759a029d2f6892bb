#pragma once

#include <array>
#include <functional>

#include "epsos/successors.hpp"

namespace epsos {

struct Transition {
  TExpr expr;
  PExpr src, tgt;
  Label label;

  const std::string& key() const { return expr->key; }
};

struct ExploreLimits {
  int max_states = 10000;
  int max_derivation_depth = 64;
  int max_transitions_per_state = 256;
};

/// A finite labelled transition system with successors, explored from roots.
/// States and transitions carry stable ids (BFS order from the first root).
struct Ltss {
  std::vector<PExpr> states;
  std::vector<Transition> transitions;
  std::vector<int> transition_state;           // source state per transition
  std::vector<std::array<int, 3>> successors;  // (t, u, v) transition ids
  bool complete = true;
  std::vector<std::string> truncation_report;

  std::map<std::string, int> state_id;  // canonical key -> id
  std::map<std::string, int> trans_id;  // expression key -> id
  std::vector<std::vector<int>> en;     // per state: transition ids
  std::map<std::pair<int, int>, std::vector<int>> succ_of;  // (t,u) -> v ids

  int state_of(const PExpr& p) const {
    auto it = state_id.find(p->key);
    if (it == state_id.end()) fail("InvalidParams", "state not in system: " + render(p));
    return it->second;
  }

  const std::vector<int>& enabled_ids(int state) const { return en[state]; }

  std::vector<int> successors_of(int t, int u) const {
    auto it = succ_of.find({t, u});
    if (it == succ_of.end()) return {};
    return it->second;
  }
};

class Engine {
 public:
  explicit Engine(const Tsss& tsss, ExploreLimits limits = {})
      : tsss_(tsss), limits_(limits) {}

  const Tsss& tsss() const { return tsss_; }
  const ExploreLimits& limits() const { return limits_; }

  Transition make_transition(const TExpr& e) {
    const Literal& lit = literal_of(e);
    return Transition{e, lit.src, lit.tgt, lit.label};
  }

  /// en(p): all derivable transitions with source p, canonically ordered.
  std::vector<Transition> enabled(const PExpr& p) {
    if (!is_closed(p)) fail("InvalidParams", "enabled_transitions requires a closed term");
    std::set<std::string> taint;
    return enabled_impl(p, taint);
  }

  /// All v with t ~u~> v derivable from the successor rules.
  std::vector<Transition> successors(const Transition& t, const Transition& u) {
    if (t.src->key != u.src->key)
      fail("InvalidParams", "successors_of requires transitions with a common source");
    std::string memo_key = t.key() + "~" + u.key();
    auto hit = succ_memo_.find(memo_key);
    if (hit != succ_memo_.end()) return hit->second;

    std::vector<Transition> out;
    if (t.src->kind == ProcessExpr::Kind::Rec) {
      derive_rec_successors(t, u, out);
    } else {
      for (const auto& tmpl : tsss_.successor_templates) {
        if (tmpl.lhs_is_rec || tmpl.rhs_is_rec) continue;
        match_successor_template(tmpl, t, u, out);
      }
    }
    sort_dedupe(out);
    succ_memo_[memo_key] = out;
    return out;
  }

  Ltss explore(const std::vector<PExpr>& roots);

 private:
  const Tsss& tsss_;
  ExploreLimits limits_;
  std::map<std::string, std::vector<Transition>> en_memo_;
  std::map<std::string, std::vector<Transition>> succ_memo_;
  std::map<std::string, Literal> lit_memo_;
  std::vector<std::string> stack_;

  const Literal& literal_of(const TExpr& e) {
    auto it = lit_memo_.find(e->key);
    if (it != lit_memo_.end()) return it->second;
    Literal lit = interpret_expr(tsss_.tss, e).lit;
    return lit_memo_.emplace(e->key, std::move(lit)).first->second;
  }

  static void sort_dedupe(std::vector<Transition>& ts) {
    std::sort(ts.begin(), ts.end(),
              [](const Transition& a, const Transition& b) { return a.key() < b.key(); });
    ts.erase(std::unique(ts.begin(), ts.end(),
                         [](const Transition& a, const Transition& b) {
                           return a.key() == b.key();
                         }),
             ts.end());
  }

  /// Goal-directed derivation. A goal identical to one on the current stack
  /// is pruned: no well-founded proof passes through it. Results computed
  /// under such a prune are returned but only memoized for the goal the
  /// prune belongs to.
  std::vector<Transition> enabled_impl(const PExpr& p, std::set<std::string>& taint) {
    const std::string& key = p->key;
    auto hit = en_memo_.find(key);
    if (hit != en_memo_.end()) return hit->second;
    if (std::find(stack_.begin(), stack_.end(), key) != stack_.end()) {
      taint.insert(key);
      return {};
    }
    if (static_cast<int>(stack_.size()) >= limits_.max_derivation_depth)
      fail("DepthExceeded", "derivation depth limit reached at " + render(p));

    stack_.push_back(key);
    std::set<std::string> local;
    std::vector<Transition> out;
    try {
      compute_enabled(p, local, out);
    } catch (...) {
      stack_.pop_back();
      throw;
    }
    stack_.pop_back();
    sort_dedupe(out);
    if (static_cast<int>(out.size()) > limits_.max_transitions_per_state)
      fail("BudgetExceeded", "more than " + std::to_string(limits_.max_transitions_per_state) +
                                 " transitions at " + render(p));
    local.erase(key);
    if (local.empty()) en_memo_[key] = out;
    taint.insert(local.begin(), local.end());
    return out;
  }

  void compute_enabled(const PExpr& p, std::set<std::string>& taint,
                       std::vector<Transition>& out) {
    switch (p->kind) {
      case ProcessExpr::Kind::Var:
        fail("InvalidParams", "cannot derive transitions of a variable");
      case ProcessExpr::Kind::Rec: {
        PExpr unfolded = unfold_rec(p->rec_var, p->rec);
        for (const auto& t : enabled_impl(unfolded, taint)) {
          bool act = tsss_.tss.universe.is_act(t.label);
          TExpr e = mk_rec_texpr(act, p->rec_var, p->rec, t.expr);
          Transition wrapped{e, p, act ? t.tgt : p, t.label};
          lit_memo_.emplace(e->key, Literal{wrapped.src, wrapped.label, wrapped.tgt});
          out.push_back(std::move(wrapped));
        }
        return;
      }
      case ProcessExpr::Kind::App: break;
    }

    for (const auto& tmpl : tsss_.tss.templates) {
      if (tmpl.op_family != p->op.family) continue;
      if (tmpl.arity() != static_cast<int>(p->args.size())) continue;

      const OperatorFamily* fam = tsss_.tss.sig.find(tmpl.op_family);
      Bindings env;
      detail::bind_op_param(*fam, tmpl.op_param_var, p->op.param, env);

      // Candidate transitions per premise position.
      struct Slot {
        int index;
        Name label_var, target_var;
        std::vector<Transition> candidates;
      };
      std::vector<Slot> slots;
      bool viable = true;
      for (const auto& pr : tmpl.premises) {
        int i = tmpl.premise_index(pr);
        if (i <= 0) {
          viable = false;
          break;
        }
        Slot s{i, pr.label_var, pr.target_var, enabled_impl(p->args[i - 1], taint)};
        if (s.candidates.empty()) viable = false;
        slots.push_back(std::move(s));
      }
      if (!viable) continue;

      std::vector<const Transition*> chosen(slots.size());
      choose_premises(p, tmpl, env, slots, 0, chosen, out);
    }
  }

  template <typename Slots>
  void choose_premises(const PExpr& p, const DeSimoneRuleTemplate& tmpl, Bindings& env,
                       const Slots& slots, std::size_t k,
                       std::vector<const Transition*>& chosen, std::vector<Transition>& out) {
    if (k == slots.size()) {
      finish_rule(p, tmpl, env, slots, chosen, out);
      return;
    }
    const auto& slot = slots[k];
    auto prior = env.label(slot.label_var);
    for (const auto& cand : slot.candidates) {
      if (prior && !(*prior == cand.label)) continue;
      env.label_vars[slot.label_var] = cand.label;
      chosen[k] = &cand;
      choose_premises(p, tmpl, env, slots, k + 1, chosen, out);
    }
    if (prior)
      env.label_vars[slot.label_var] = *prior;
    else
      env.label_vars.erase(slot.label_var);
  }

  template <typename Slots>
  void finish_rule(const PExpr& p, const DeSimoneRuleTemplate& tmpl, Bindings& env,
                   const Slots& slots, std::vector<const Transition*>& chosen,
                   std::vector<Transition>& out) {
    std::vector<Name> free;
    for (const auto& v : detail::template_label_vars(tmpl))
      if (!env.label_vars.count(v) && !env.set_params.count(v) && !env.fn_params.count(v))
        free.push_back(v);
    std::sort(free.begin(), free.end());

    detail::enumerate_assignments(tsss_.tss.universe, tmpl, free, 0, env,
                                  [&](const Bindings& b) {
      auto concl = tmpl.conclusion_label->eval(tsss_.tss.universe, b);
      if (!concl || !tsss_.tss.universe.contains(*concl)) return;

      RuleName name;
      name.fmt = tmpl.name_fmt;
      for (const auto& v : tmpl.name_param_vars) {
        if (auto l = b.label(v))
          name.params.push_back(OpParamValue::of_label(*l));
        else if (b.set_params.count(v))
          name.params.push_back(OpParamValue::of_set(b.set_params.at(v)));
        else if (b.fn_params.count(v))
          name.params.push_back(OpParamValue::of_fn(b.fn_params.at(v)));
        else
          return;
      }

      std::vector<TArg> args(p->args.size());
      Substitution inst;
      for (std::size_t i = 0; i < p->args.size(); ++i) args[i].proc = p->args[i];
      for (std::size_t s = 0; s < slots.size(); ++s) {
        args[slots[s].index - 1].proc = nullptr;
        args[slots[s].index - 1].trans = chosen[s]->expr;
        inst[slots[s].target_var] = chosen[s]->tgt;
      }
      for (std::size_t i = 0; i < tmpl.source_vars.size(); ++i)
        inst[tmpl.source_vars[i]] = p->args[i];

      PExpr target = substitute(resolve_op_params(tsss_.tss.sig, tmpl.target, b), inst);
      TExpr e = mk_ctor(std::move(name), std::move(args));
      lit_memo_.emplace(e->key, Literal{p, *concl, target});
      out.push_back(Transition{e, p, target, *concl});
    });
  }

  // --- successor derivation -------------------------------------------------

  /// Built-in recursion successor rule: the premise relates the direct
  /// subtransitions; under an action on the right the premise result is the
  /// successor, under an indicator the transition itself survives.
  void derive_rec_successors(const Transition& t, const Transition& u,
                             std::vector<Transition>& out) {
    bool t_rec = t.expr->kind == TransitionExpr::Kind::RecAct ||
                 t.expr->kind == TransitionExpr::Kind::RecIn;
    bool u_rec = u.expr->kind == TransitionExpr::Kind::RecAct ||
                 u.expr->kind == TransitionExpr::Kind::RecIn;
    if (!t_rec || !u_rec) return;
    Transition it = make_transition(t.expr->inner);
    Transition iu = make_transition(u.expr->inner);
    auto sols = successors(it, iu);
    if (tsss_.tss.universe.is_act(u.label)) {
      for (auto& v : sols) out.push_back(std::move(v));
    } else if (!sols.empty()) {
      out.push_back(t);
    }
  }

  bool bind_name_params(const RuleNameSchema& schema, const RuleName& name,
                        Bindings& env) {
    if (name.fmt != schema.fmt) return false;
    if (name.params.size() != schema.param_vars.size()) return false;
    for (std::size_t k = 0; k < schema.param_vars.size(); ++k) {
      const Name& var = schema.param_vars[k];
      const OpParamValue& val = name.params[k];
      Label::Deco deco = schema.deco_at(k);
      switch (val.kind) {
        case OpParamValue::Kind::Label: {
          Label bound = val.label;
          if (deco != Label::Deco::None) {
            if (val.label.deco != deco) return false;
            bound = Label(val.label.base);
          }
          auto prior = env.label(var);
          if (prior && !(*prior == bound)) return false;
          env.label_vars[var] = bound;
          break;
        }
        case OpParamValue::Kind::Set: {
          std::set<Label> s(val.set.begin(), val.set.end());
          auto it = env.set_params.find(var);
          if (it != env.set_params.end() && it->second != s) return false;
          env.set_params[var] = std::move(s);
          break;
        }
        case OpParamValue::Kind::Fn: {
          auto it = env.fn_params.find(var);
          if (it != env.fn_params.end() && it->second != val.fn) return false;
          env.fn_params[var] = val.fn;
          break;
        }
        case OpParamValue::Kind::None: return false;
      }
    }
    return true;
  }

  void collect_fresh(const STPatPtr& pat, std::set<int>& out) {
    switch (pat->kind) {
      case STPat::Kind::Meta:
        if (pat->meta == MetaKind::Fresh) out.insert(pat->index);
        return;
      case STPat::Kind::Ctor:
        for (const auto& a : pat->args) collect_fresh(a, out);
        return;
      case STPat::Kind::Rec: collect_fresh(pat->rec_inner, out); return;
    }
  }

  void match_successor_template(const SuccessorRuleTemplate& tmpl, const Transition& t,
                                const Transition& u, std::vector<Transition>& out) {
    if (t.expr->kind != TransitionExpr::Kind::Ctor ||
        u.expr->kind != TransitionExpr::Kind::Ctor)
      return;
    Bindings env;
    if (!bind_name_params(tmpl.lhs, t.expr->ctor, env)) return;
    if (!bind_name_params(tmpl.rhs, u.expr->ctor, env)) return;

    std::size_t n = t.expr->args.size();
    if (u.expr->args.size() != n || tmpl.lhs_args.size() != n || tmpl.rhs_args.size() != n)
      return;
    for (std::size_t i = 0; i < n; ++i) {
      if (t.expr->args[i].is_trans() != tmpl.lhs_args[i].is_trans) return;
      if (u.expr->args[i].is_trans() != tmpl.rhs_args[i].is_trans) return;
    }

    env.label_vars["xc"] = t.label;
    env.label_vars["yc"] = u.label;
    for (std::size_t i = 0; i < n; ++i) {
      if (t.expr->args[i].is_trans())
        env.label_vars["xa" + std::to_string(i + 1)] =
            literal_of(t.expr->args[i].trans).label;
      if (u.expr->args[i].is_trans())
        env.label_vars["ya" + std::to_string(i + 1)] =
            literal_of(u.expr->args[i].trans).label;
    }

    // Premises on the direct subtransitions.
    struct Prem {
      int index;
      std::vector<Transition> sols;
    };
    std::vector<Prem> prems;
    for (int i : tmpl.premise_indices) {
      if (i < 1 || i > static_cast<int>(n)) return;
      if (!t.expr->args[i - 1].is_trans() || !u.expr->args[i - 1].is_trans()) return;
      Transition ti = make_transition(t.expr->args[i - 1].trans);
      Transition ui = make_transition(u.expr->args[i - 1].trans);
      Prem pr{i, successors(ti, ui)};
      if (pr.sols.empty()) return;
      prems.push_back(std::move(pr));
    }

    std::set<int> fresh;
    collect_fresh(tmpl.target, fresh);
    std::vector<std::pair<int, std::vector<Transition>>> fresh_cands;
    for (int i : fresh) {
      PExpr source;
      if (u.expr->args[i - 1].is_trans())
        source = literal_of(u.expr->args[i - 1].trans).tgt;
      else
        source = u.expr->args[i - 1].proc;
      std::set<std::string> taint;
      fresh_cands.push_back({i, enabled_impl(source, taint)});
      if (fresh_cands.back().second.empty()) return;
    }

    // Product over premise solutions and fresh candidates.
    std::map<int, const Transition*> picked;
    std::function<void(std::size_t)> go_fresh;
    std::function<void(std::size_t)> go_prem;

    auto emit = [&]() {
      for (const auto& [i, tr] : picked)
        env.label_vars["za" + std::to_string(i)] = tr->label;
      for (const auto& c : tmpl.conditions)
        if (!c.holds(tsss_.tss.universe, env)) return;
      TExpr v = instantiate_target(tmpl.target, t, u, env, picked);
      Transition vt = make_transition(v);
      if (vt.src->key != u.tgt->key)
        fail("InvalidParams", "derived successor violates source/target coherence");
      out.push_back(std::move(vt));
    };
    go_fresh = [&](std::size_t k) {
      if (k == fresh_cands.size()) {
        emit();
        return;
      }
      for (const auto& cand : fresh_cands[k].second) {
        picked[fresh_cands[k].first] = &cand;
        go_fresh(k + 1);
      }
      picked.erase(fresh_cands[k].first);
    };
    go_prem = [&](std::size_t k) {
      if (k == prems.size()) {
        go_fresh(0);
        return;
      }
      for (const auto& sol : prems[k].sols) {
        picked[prems[k].index] = &sol;
        go_prem(k + 1);
      }
      picked.erase(prems[k].index);
    };
    go_prem(0);
  }

  TExpr instantiate_target(const STPatPtr& pat, const Transition& t, const Transition& u,
                           const Bindings& env,
                           const std::map<int, const Transition*>& picked) {
    switch (pat->kind) {
      case STPat::Kind::Rec:
        fail("KindMismatch", "recursion target pattern outside a recursive source");
      case STPat::Kind::Meta: {
        int i = pat->index;
        switch (pat->meta) {
          case MetaKind::TX: return t.expr->args[i - 1].trans;
          case MetaKind::TZ:
          case MetaKind::Fresh: return picked.at(i)->expr;
          case MetaKind::X:
          case MetaKind::Y:
            fail("KindMismatch", "process metavariable at transition position");
        }
        break;
      }
      case STPat::Kind::Ctor: break;
    }
    RuleName name;
    name.fmt = pat->ctor.fmt;
    for (std::size_t k = 0; k < pat->ctor.param_vars.size(); ++k) {
      const Name& v = pat->ctor.param_vars[k];
      if (auto l = env.label(v)) {
        Label val = *l;
        if (pat->ctor.deco_at(k) != Label::Deco::None)
          val = Label(val.base, pat->ctor.deco_at(k));
        name.params.push_back(OpParamValue::of_label(val));
      } else if (env.set_params.count(v)) {
        name.params.push_back(OpParamValue::of_set(env.set_params.at(v)));
      } else if (env.fn_params.count(v)) {
        name.params.push_back(OpParamValue::of_fn(env.fn_params.at(v)));
      } else {
        fail("KindMismatch", "unbound name parameter '" + v + "' in successor target");
      }
    }
    std::vector<TArg> args;
    for (const auto& a : pat->args) {
      TArg out_arg;
      if (a->kind == STPat::Kind::Meta && !meta_is_trans(a->meta)) {
        int i = a->index;
        if (a->meta == MetaKind::X) {
          out_arg.proc = t.src->args[i - 1];
        } else {
          out_arg.proc = literal_of(u.expr->args[i - 1].trans).tgt;
        }
      } else {
        out_arg.trans = instantiate_target(a, t, u, env, picked);
      }
      args.push_back(std::move(out_arg));
    }
    return mk_ctor(std::move(name), std::move(args));
  }
};

inline Ltss Engine::explore(const std::vector<PExpr>& roots) {
  Ltss sys;
  std::vector<int> queue;
  auto add_state = [&](const PExpr& p) -> int {
    auto it = sys.state_id.find(p->key);
    if (it != sys.state_id.end()) return it->second;
    if (static_cast<int>(sys.states.size()) >= limits_.max_states) {
      if (sys.complete) {
        sys.complete = false;
        sys.truncation_report.push_back("state budget reached (" +
                                        std::to_string(limits_.max_states) + ")");
      }
      return -1;
    }
    int id = static_cast<int>(sys.states.size());
    sys.states.push_back(p);
    sys.state_id[p->key] = id;
    sys.en.emplace_back();
    queue.push_back(id);
    return id;
  };

  for (const auto& r : roots) {
    if (!is_closed(r)) fail("InvalidParams", "explore requires closed roots");
    add_state(r);
  }

  for (std::size_t qi = 0; qi < queue.size(); ++qi) {
    int sid = queue[qi];
    PExpr p = sys.states[sid];
    std::vector<Transition> ts;
    try {
      ts = enabled(p);
    } catch (const Error& e) {
      sys.complete = false;
      sys.truncation_report.push_back("at " + render(p) + ": " + e.what());
      continue;
    }
    for (const auto& t : ts) {
      int tid;
      auto it = sys.trans_id.find(t.key());
      if (it != sys.trans_id.end()) {
        tid = it->second;
      } else {
        tid = static_cast<int>(sys.transitions.size());
        sys.transitions.push_back(t);
        sys.transition_state.push_back(sid);
        sys.trans_id[t.key()] = tid;
      }
      sys.en[sid].push_back(tid);
      add_state(t.tgt);
    }
  }

  // Successor triples for every ordered pair of transitions enabled at a
  // reachable state, kept only when the successor's state was materialized.
  for (std::size_t sid = 0; sid < sys.states.size(); ++sid) {
    for (int tid : sys.en[sid]) {
      for (int uid : sys.en[sid]) {
        const Transition& t = sys.transitions[tid];
        const Transition& u = sys.transitions[uid];
        std::vector<Transition> vs;
        try {
          vs = successors(t, u);
        } catch (const Error& e) {
          sys.complete = false;
          sys.truncation_report.push_back("successors at " + render(sys.states[sid]) +
                                          ": " + e.what());
          continue;
        }
        for (const auto& v : vs) {
          auto vit = sys.trans_id.find(v.key());
          if (vit == sys.trans_id.end()) {
            sys.complete = false;
            sys.truncation_report.push_back("successor leads outside the explored system");
            continue;
          }
          sys.successors.push_back({tid, uid, vit->second});
          sys.succ_of[{tid, uid}].push_back(vit->second);
        }
      }
    }
  }
  std::sort(sys.successors.begin(), sys.successors.end());
  return sys;
}

}  // namespace epsos
