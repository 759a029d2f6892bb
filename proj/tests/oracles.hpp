#pragma once

// Test-only oracles, independent of the goal-directed derivation path:
//   - en(p) by bottom-up saturation of proof trees over a closed term universe
//   - strong bisimilarity by naive greatest-fixpoint iteration on state pairs
//   - ep-bisimilarity by greatest-fixpoint removal over all candidate triples
//   - rule instantiation by a plain product over label assignments

#include <epsos/epsos.hpp>

namespace epsos::testing {

// ---------------------------------------------------------------------------
// Bottom-up proof enumeration.
// ---------------------------------------------------------------------------

class ProofOracle {
 public:
  explicit ProofOracle(const Tsss& tsss, int max_terms = 1000, int max_rounds = 64)
      : tsss_(tsss), max_terms_(max_terms), max_rounds_(max_rounds) {}

  /// All proofs with source alpha-equal to p, as named expressions.
  std::set<std::string> enabled_keys(const PExpr& p) {
    add_term(p);
    saturate();
    std::set<std::string> out;
    for (const auto& [key, proof] : proofs_)
      if (proof.lit.src->key == p->key) out.insert(name_of(tsss_.tss, proof)->key);
    return out;
  }

 private:
  void add_term(const PExpr& t) {
    if (term_keys_.count(t->key)) return;
    if (static_cast<int>(terms_.size()) >= max_terms_) return;
    term_keys_.insert(t->key);
    terms_.push_back(t);
    if (t->kind == ProcessExpr::Kind::App)
      for (const auto& a : t->args) add_term(a);
    if (t->kind == ProcessExpr::Kind::Rec) add_term(unfold_rec(t->rec_var, t->rec));
  }

  static std::string proof_key(const OpenTransition& t) {
    std::string k = t.rule.str() + "{" + t.lit.key() + ";";
    for (const auto& c : t.children) k += proof_key(c);
    return k + "}";
  }

  void saturate() {
    bool grew = true;
    int rounds = 0;
    while (grew && rounds++ < max_rounds_) {
      grew = false;
      // Terms may be appended while scanning (targets of recursion bodies
      // are already closed over by add_term).
      for (std::size_t ti = 0; ti < terms_.size(); ++ti) {
        PExpr p = terms_[ti];
        if (p->kind == ProcessExpr::Kind::App) {
          for (const auto& rule : instantiate_rules(tsss_.tss, p->op)) {
            grew |= apply_rule(p, rule);
          }
        } else if (p->kind == ProcessExpr::Kind::Rec) {
          PExpr unfolded = unfold_rec(p->rec_var, p->rec);
          for (const auto& [key, sub] : std::map<std::string, OpenTransition>(proofs_)) {
            if (sub.lit.src->key != unfolded->key) continue;
            bool act = tsss_.tss.universe.is_act(sub.lit.label);
            OpenTransition t;
            t.lit = Literal{p, sub.lit.label, act ? sub.lit.tgt : p};
            t.rule = RuleName{act ? kRecActName : kRecInName, {}};
            t.children.push_back(sub);
            grew |= record(t);
          }
        }
      }
    }
  }

  bool apply_rule(const PExpr& p, const ConcreteRule& rule) {
    // Premise candidates per trigger position.
    std::vector<std::vector<const OpenTransition*>> cands(rule.trigger.size());
    for (std::size_t k = 0; k < rule.trigger.size(); ++k) {
      const PExpr& arg = p->args[rule.trigger[k] - 1];
      for (const auto& [key, proof] : proofs_)
        if (proof.lit.src->key == arg->key && proof.lit.label == rule.premise_labels[k])
          cands[k].push_back(&proof);
      if (cands[k].empty()) return false;
    }
    bool grew = false;
    std::vector<const OpenTransition*> pick(cands.size());
    std::function<void(std::size_t)> go = [&](std::size_t k) {
      if (k == cands.size()) {
        Substitution inst;
        for (std::size_t i = 0; i < rule.source_vars.size(); ++i)
          inst[rule.source_vars[i]] = p->args[i];
        OpenTransition t;
        t.rule = rule.name;
        for (std::size_t i = 0; i < pick.size(); ++i) {
          inst[rule.premise_targets[i]] = pick[i]->lit.tgt;
          t.children.push_back(*pick[i]);
        }
        t.lit = Literal{p, rule.conclusion, substitute(rule.target, inst)};
        grew |= record(t);
        return;
      }
      for (const auto* c : cands[k]) {
        pick[k] = c;
        go(k + 1);
      }
    };
    go(0);
    return grew;
  }

  bool record(const OpenTransition& t) {
    return proofs_.emplace(proof_key(t), t).second;
  }

  const Tsss& tsss_;
  int max_terms_, max_rounds_;
  std::set<std::string> term_keys_;
  std::vector<PExpr> terms_;
  std::map<std::string, OpenTransition> proofs_;
};

// ---------------------------------------------------------------------------
// Naive strong bisimilarity: gfp on state pairs.
// ---------------------------------------------------------------------------

inline bool strong_bisim_oracle(const Ltss& sys, const PExpr& p, const PExpr& q) {
  std::size_t n = sys.states.size();
  std::vector<std::vector<bool>> rel(n, std::vector<bool>(n, true));
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = 0; b < n; ++b) {
        if (!rel[a][b]) continue;
        auto simulates = [&](std::size_t x, std::size_t y, bool flip) {
          for (int tid : sys.en[x]) {
            const Transition& t = sys.transitions[tid];
            bool matched = false;
            for (int uid : sys.en[y]) {
              const Transition& u = sys.transitions[uid];
              if (!(t.label == u.label)) continue;
              std::size_t ta = sys.state_id.at(t.tgt->key);
              std::size_t tb = sys.state_id.at(u.tgt->key);
              if (flip ? rel[tb][ta] : rel[ta][tb]) matched = true;
            }
            if (!matched) return false;
          }
          return true;
        };
        if (!simulates(a, b, false) || !simulates(b, a, true)) {
          rel[a][b] = false;
          changed = true;
        }
      }
    }
  }
  return rel[sys.state_of(p)][sys.state_of(q)];
}

// ---------------------------------------------------------------------------
// Exhaustive ep-bisimilarity: enumerate every candidate triple (p, q, R) with
// R total, surjective and label preserving, then remove triples violating
// condition 2 until a fixpoint; the survivors form the largest
// ep-bisimulation.
// ---------------------------------------------------------------------------

struct OracleTriple {
  int p, q;
  std::vector<std::pair<int, int>> rel;
};

inline bool ep_bisim_oracle(const Ltss& sys, const PExpr& p, const PExpr& q,
                            std::vector<OracleTriple>* witness_out = nullptr) {
  std::size_t n = sys.states.size();
  std::vector<OracleTriple> triples;

  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      // Group by label, then enumerate total+surjective relations per class.
      std::map<std::string, std::pair<std::vector<int>, std::vector<int>>> classes;
      for (int t : sys.en[a]) classes[sys.transitions[t].label.str()].first.push_back(t);
      for (int u : sys.en[b]) classes[sys.transitions[u].label.str()].second.push_back(u);
      bool feasible = true;
      std::vector<std::vector<std::vector<std::pair<int, int>>>> per_class;
      for (auto& [_, tu] : classes) {
        auto& [ts, us] = tu;
        if (ts.empty() != us.empty()) {
          feasible = false;
          break;
        }
        if (ts.empty()) continue;
        std::vector<std::vector<std::pair<int, int>>> rels;
        std::size_t bits = ts.size() * us.size();
        for (std::uint32_t mask = 1; mask < (1u << bits); ++mask) {
          std::vector<std::pair<int, int>> rel;
          std::set<int> ct, cu;
          for (std::size_t i = 0; i < ts.size(); ++i)
            for (std::size_t j = 0; j < us.size(); ++j)
              if (mask & (1u << (i * us.size() + j))) {
                rel.push_back({ts[i], us[j]});
                ct.insert(ts[i]);
                cu.insert(us[j]);
              }
          if (ct.size() == ts.size() && cu.size() == us.size()) rels.push_back(rel);
        }
        per_class.push_back(std::move(rels));
      }
      if (!feasible) continue;
      // Product.
      std::vector<std::size_t> idx(per_class.size(), 0);
      while (true) {
        std::vector<std::pair<int, int>> rel;
        for (std::size_t c = 0; c < per_class.size(); ++c)
          for (const auto& pr : per_class[c][idx[c]]) rel.push_back(pr);
        std::sort(rel.begin(), rel.end());
        triples.push_back({static_cast<int>(a), static_cast<int>(b), rel});
        std::size_t c = 0;
        for (; c < per_class.size(); ++c) {
          if (++idx[c] < per_class[c].size()) break;
          idx[c] = 0;
        }
        if (c == per_class.size()) break;
      }
    }
  }

  // Gfp removal under condition 2.
  std::vector<bool> alive(triples.size(), true);
  auto satisfies = [&](std::size_t i) {
    const auto& tr = triples[i];
    for (const auto& [v, w] : tr.rel) {
      int pv = sys.state_id.at(sys.transitions[v].tgt->key);
      int qw = sys.state_id.at(sys.transitions[w].tgt->key);
      bool found = false;
      for (std::size_t k = 0; k < triples.size() && !found; ++k) {
        if (!alive[k] || triples[k].p != pv || triples[k].q != qw) continue;
        auto related = [&](int x, int y) {
          return std::binary_search(triples[k].rel.begin(), triples[k].rel.end(),
                                    std::make_pair(x, y));
        };
        bool ok = true;
        for (const auto& [t, u] : tr.rel) {
          for (int tv : sys.successors_of(t, v)) {
            bool m = false;
            for (int uw : sys.successors_of(u, w))
              if (related(tv, uw)) m = true;
            if (!m) ok = false;
          }
          for (int uw : sys.successors_of(u, w)) {
            bool m = false;
            for (int tv : sys.successors_of(t, v))
              if (related(tv, uw)) m = true;
            if (!m) ok = false;
          }
        }
        if (ok) found = true;
      }
      if (!found) return false;
    }
    return true;
  };

  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < triples.size(); ++i) {
      if (!alive[i]) continue;
      if (!satisfies(i)) {
        alive[i] = false;
        changed = true;
      }
    }
  }

  int sp = sys.state_of(p), sq = sys.state_of(q);
  for (std::size_t i = 0; i < triples.size(); ++i) {
    if (alive[i] && triples[i].p == sp && triples[i].q == sq) {
      if (witness_out) {
        witness_out->clear();
        for (std::size_t k = 0; k < triples.size(); ++k)
          if (alive[k]) witness_out->push_back(triples[k]);
      }
      return true;
    }
  }
  return false;
}

// ---------------------------------------------------------------------------
// Exhaustive rule instantiation: a plain product over every label variable,
// filtered by the side conditions one by one.
// ---------------------------------------------------------------------------

inline std::set<std::string> instantiate_oracle(const Tss& tss, const DeSimoneRuleTemplate& t,
                                                const OpInstance& op) {
  const OperatorFamily* fam = tss.sig.find(t.op_family);
  Bindings base;
  detail::bind_op_param(*fam, t.op_param_var, op.param, base);

  std::set<Name> vars;
  for (const auto& pr : t.premises) vars.insert(pr.label_var);
  t.conclusion_label->collect_vars(vars);
  for (const auto& c : t.conditions) c.collect_vars(vars);
  for (const auto& v : t.name_param_vars) vars.insert(v);
  std::vector<Name> free;
  for (const auto& v : vars)
    if (!base.label_vars.count(v) && !base.set_params.count(v) && !base.fn_params.count(v))
      free.push_back(v);

  std::set<std::string> out;
  std::vector<Label> all(tss.universe.labels.begin(), tss.universe.labels.end());
  std::vector<std::size_t> idx(free.size(), 0);
  while (true) {
    Bindings env = base;
    for (std::size_t i = 0; i < free.size(); ++i) env.label_vars[free[i]] = all[idx[i]];
    bool ok = true;
    for (const auto& [v, range] : t.var_ranges) {
      auto l = env.label(v);
      if (l && !range->eval(tss.universe, env).count(*l)) ok = false;
    }
    for (const auto& c : t.conditions)
      if (ok && !c.holds(tss.universe, env)) ok = false;
    if (ok) {
      auto concl = t.conclusion_label->eval(tss.universe, env);
      if (concl && tss.universe.contains(*concl)) {
        std::string key = op.key() + "|" + concl->str() + "|";
        for (const auto& pr : t.premises) key += env.label(pr.label_var)->str() + ",";
        out.insert(key);
      }
    }
    std::size_t c = 0;
    for (; c < free.size(); ++c) {
      if (++idx[c] < all.size()) break;
      idx[c] = 0;
    }
    if (c == free.size() || free.empty()) break;
  }
  return out;
}

}  // namespace epsos::testing
