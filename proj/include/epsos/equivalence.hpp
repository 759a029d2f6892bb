#pragma once

#include <chrono>

#include "epsos/engine.hpp"

namespace epsos {

enum class Tri { True, False, Unknown };

inline std::string tri_str(Tri t) {
  switch (t) {
    case Tri::True: return "true";
    case Tri::False: return "false";
    case Tri::Unknown: return "unknown";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Strong bisimilarity by partition refinement over the explored system.
// ---------------------------------------------------------------------------

struct StrongVerdict {
  Tri result = Tri::Unknown;
  std::vector<int> block;  // block id per state
  std::string note;
};

inline StrongVerdict strong_bisim(const Ltss& sys, const PExpr& p, const PExpr& q) {
  StrongVerdict v;
  if (!sys.complete) {
    v.result = Tri::Unknown;
    v.note = "IncompleteSystem: exploration was truncated";
    return v;
  }
  std::size_t n = sys.states.size();
  v.block.assign(n, 0);
  bool changed = true;
  while (changed) {
    changed = false;
    std::map<std::string, int> sig_ids;
    std::vector<int> next(n);
    for (std::size_t s = 0; s < n; ++s) {
      std::set<std::pair<std::string, int>> moves;
      for (int tid : sys.en[s]) {
        const Transition& t = sys.transitions[tid];
        moves.insert({t.label.str(), v.block[sys.state_id.at(t.tgt->key)]});
      }
      std::string sig = std::to_string(v.block[s]) + "#";
      for (const auto& [l, b] : moves) sig += l + ":" + std::to_string(b) + ";";
      auto [it, fresh] = sig_ids.emplace(sig, static_cast<int>(sig_ids.size()));
      next[s] = it->second;
    }
    if (next != v.block) {
      std::set<int> olds(v.block.begin(), v.block.end());
      std::set<int> news(next.begin(), next.end());
      if (news.size() != olds.size()) changed = true;
      v.block = next;
    }
  }
  v.result = v.block[sys.state_of(p)] == v.block[sys.state_of(q)] ? Tri::True : Tri::False;
  return v;
}

// ---------------------------------------------------------------------------
// Ep-bisimilarity (coinductive search for a post-fixed point).
// ---------------------------------------------------------------------------

struct EpOptions {
  int max_class_side = 4;          // transitions per label class and side
  int max_class_bits = 22;         // hard cap on |T|*|U| per class
  long long max_relations = 5'000'000;
  long long max_triples = 1'000'000;
};

struct EpTriple {
  int p = -1, q = -1;
  std::vector<std::pair<int, int>> rel;  // sorted transition-id pairs
};

struct EpCounterexample {
  std::string condition;  // "1", "2.a" or "2.b"
  int p = -1, q = -1;
  int v = -1, w = -1;  // executed pair (condition 2)
  int t = -1, u = -1;  // related pair with the failed obligation
  int succ = -1;       // the unmatched successor transition
  std::string message;
};

struct EpStats {
  long long triples_visited = 0;
  long long relations_enumerated = 0;
  double duration_ms = 0;
};

struct EpVerdict {
  Tri result = Tri::Unknown;
  std::vector<EpTriple> witness;
  std::optional<EpCounterexample> counterexample;
  EpStats stats;
  std::string note;
};

namespace detail {

/// Candidate relations between en(p) and en(q): per label class, all total
/// and surjective sub-relations, combined as a lazy product across classes.
class RelationCandidates {
 public:
  RelationCandidates(const Ltss& sys, int p, int q, const EpOptions& opts,
                     EpStats& stats)
      : stats_(stats), opts_(opts) {
    std::map<std::string, std::pair<std::vector<int>, std::vector<int>>> classes;
    for (int tid : sys.en[p]) classes[sys.transitions[tid].label.str()].first.push_back(tid);
    for (int uid : sys.en[q]) classes[sys.transitions[uid].label.str()].second.push_back(uid);
    for (auto& [label, tu] : classes) {
      auto& [ts, us] = tu;
      if (ts.empty() != us.empty()) {
        feasible_ = false;
        lonely_label_ = label;
        lonely_id_ = ts.empty() ? us.front() : ts.front();
        lonely_on_left_ = us.empty();
        return;
      }
      if (ts.empty()) continue;
      Class c;
      c.ts = ts;
      c.us = us;
      if (static_cast<int>(ts.size()) > opts.max_class_side ||
          static_cast<int>(us.size()) > opts.max_class_side)
        fail("SearchBudgetExceeded",
             "label class '" + label + "' exceeds the candidate-relation cap (" +
                 std::to_string(opts.max_class_side) + "); raise --max-class-side");
      int bits = static_cast<int>(ts.size() * us.size());
      if (bits > opts.max_class_bits)
        fail("SearchBudgetExceeded", "label class '" + label + "' is too large to enumerate");
      for (std::uint32_t mask = 1; mask < (1u << bits); ++mask) {
        if (!total_surjective(mask, ts.size(), us.size())) continue;
        c.masks.push_back(mask);
      }
      std::stable_sort(c.masks.begin(), c.masks.end(),
                       [](std::uint32_t a, std::uint32_t b) {
                         return __builtin_popcount(a) < __builtin_popcount(b);
                       });
      classes_.push_back(std::move(c));
    }
    odometer_.assign(classes_.size(), 0);
    done_ = false;
  }

  bool feasible() const { return feasible_; }
  bool lonely_on_left() const { return lonely_on_left_; }
  int lonely_id() const { return lonely_id_; }

  /// Next candidate relation, or nullopt when exhausted.
  std::optional<std::vector<std::pair<int, int>>> next() {
    if (!feasible_ || done_) return std::nullopt;
    if (++stats_.relations_enumerated > opts_.max_relations)
      fail("SearchBudgetExceeded", "candidate-relation budget exhausted");
    std::vector<std::pair<int, int>> rel;
    for (std::size_t c = 0; c < classes_.size(); ++c) {
      const Class& cl = classes_[c];
      std::uint32_t mask = cl.masks[odometer_[c]];
      for (std::size_t i = 0; i < cl.ts.size(); ++i)
        for (std::size_t j = 0; j < cl.us.size(); ++j)
          if (mask & (1u << (i * cl.us.size() + j))) rel.push_back({cl.ts[i], cl.us[j]});
    }
    std::sort(rel.begin(), rel.end());
    // Advance the odometer.
    std::size_t c = 0;
    for (; c < classes_.size(); ++c) {
      if (++odometer_[c] < classes_[c].masks.size()) break;
      odometer_[c] = 0;
    }
    if (c == classes_.size()) done_ = true;
    return rel;
  }

 private:
  struct Class {
    std::vector<int> ts, us;
    std::vector<std::uint32_t> masks;
  };

  static bool total_surjective(std::uint32_t mask, std::size_t nt, std::size_t nu) {
    for (std::size_t i = 0; i < nt; ++i) {
      bool any = false;
      for (std::size_t j = 0; j < nu; ++j)
        if (mask & (1u << (i * nu + j))) any = true;
      if (!any) return false;
    }
    for (std::size_t j = 0; j < nu; ++j) {
      bool any = false;
      for (std::size_t i = 0; i < nt; ++i)
        if (mask & (1u << (i * nu + j))) any = true;
      if (!any) return false;
    }
    return true;
  }

  EpStats& stats_;
  EpOptions opts_;
  std::vector<Class> classes_;
  std::vector<std::size_t> odometer_;
  bool done_ = true;
  bool feasible_ = true;
  bool lonely_on_left_ = false;
  std::string lonely_label_;
  int lonely_id_ = -1;
};

class EpSearch {
 public:
  EpSearch(const Ltss& sys, const EpOptions& opts) : sys_(sys), opts_(opts) {}

  EpVerdict run(int p, int q) {
    auto start = std::chrono::steady_clock::now();
    EpVerdict verdict;
    bool ok = prove_goal(p, q, 0, nullptr, nullptr, nullptr);
    verdict.stats = stats_;
    verdict.stats.duration_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
            .count();
    if (ok) {
      verdict.result = Tri::True;
      for (const auto& a : assumed_) verdict.witness.push_back({a.p, a.q, a.rel});
    } else {
      verdict.result = Tri::False;
      if (best_fail_)
        verdict.counterexample = best_fail_->second;
    }
    return verdict;
  }

 private:
  struct Assumed {
    int p, q;
    std::vector<std::pair<int, int>> rel;
    std::string key;
  };

  static std::string rel_key(int p, int q, const std::vector<std::pair<int, int>>& rel) {
    std::string k = std::to_string(p) + "|" + std::to_string(q) + "|";
    for (const auto& [a, b] : rel) k += std::to_string(a) + "," + std::to_string(b) + ";";
    return k;
  }

  void record_fail(int depth, EpCounterexample ce) {
    if (!best_fail_ || depth < best_fail_->first) best_fail_ = {depth, std::move(ce)};
  }

  bool prove_goal(int p, int q, int depth, const std::vector<std::pair<int, int>>* parent,
                  const int* v, const int* w) {
    RelationCandidates cands(sys_, p, q, opts_, stats_);
    if (!cands.feasible()) {
      EpCounterexample ce;
      ce.condition = "1";
      ce.p = p;
      ce.q = q;
      ce.t = cands.lonely_on_left() ? cands.lonely_id() : -1;
      ce.u = cands.lonely_on_left() ? -1 : cands.lonely_id();
      ce.message = cands.lonely_on_left()
                       ? "condition 1.a: enabled transition has no counterpart"
                       : "condition 1.b: enabled transition has no counterpart";
      record_fail(depth, ce);
      return false;
    }
    while (auto rel = cands.next()) {
      if (parent && !check_filter(*parent, *v, *w, *rel, depth, p, q)) continue;
      if (prove_triple(p, q, *rel, depth)) return true;
    }
    return false;
  }

  /// Conditions 2.a / 2.b of a candidate relation at the target pair,
  /// relative to the parent relation and the executed pair (v, w).
  bool check_filter(const std::vector<std::pair<int, int>>& parent, int v, int w,
                    const std::vector<std::pair<int, int>>& rel, int depth, int p, int q) {
    auto related = [&rel](int a, int b) {
      return std::binary_search(rel.begin(), rel.end(), std::make_pair(a, b));
    };
    for (const auto& [t, u] : parent) {
      for (int tv : sys_.successors_of(t, v)) {
        bool matched = false;
        for (int uw : sys_.successors_of(u, w))
          if (related(tv, uw)) matched = true;
        if (!matched) {
          record_fail(depth, {"2.a", p, q, v, w, t, u, tv,
                              "no matching successor under the executed pair"});
          return false;
        }
      }
      for (int uw : sys_.successors_of(u, w)) {
        bool matched = false;
        for (int tv : sys_.successors_of(t, v))
          if (related(tv, uw)) matched = true;
        if (!matched) {
          record_fail(depth, {"2.b", p, q, v, w, t, u, uw,
                              "no matching successor under the executed pair"});
          return false;
        }
      }
    }
    return true;
  }

  bool prove_triple(int p, int q, const std::vector<std::pair<int, int>>& rel, int depth) {
    std::string key = rel_key(p, q, rel);
    if (on_stack_.count(key)) return true;
    if (++stats_.triples_visited > opts_.max_triples)
      fail("SearchBudgetExceeded", "triple budget exhausted");

    std::size_t mark = assumed_.size();
    assumed_.push_back({p, q, rel, key});
    on_stack_.insert(key);
    for (const auto& [v, w] : rel) {
      int pv = sys_.state_id.at(sys_.transitions[v].tgt->key);
      int qw = sys_.state_id.at(sys_.transitions[w].tgt->key);
      if (!prove_goal(pv, qw, depth + 1, &rel, &v, &w)) {
        while (assumed_.size() > mark) {
          on_stack_.erase(assumed_.back().key);
          assumed_.pop_back();
        }
        return false;
      }
    }
    return true;
  }

  const Ltss& sys_;
  EpOptions opts_;
  EpStats stats_;
  std::vector<Assumed> assumed_;
  std::set<std::string> on_stack_;
  std::optional<std::pair<int, EpCounterexample>> best_fail_;
};

}  // namespace detail

inline EpVerdict ep_bisim(const Ltss& sys, const PExpr& p, const PExpr& q,
                          const EpOptions& opts = {}) {
  EpVerdict v;
  if (!sys.complete) {
    v.result = Tri::Unknown;
    v.note = "IncompleteSystem: exploration was truncated";
    return v;
  }
  detail::EpSearch search(sys, opts);
  return search.run(sys.state_of(p), sys.state_of(q));
}

/// Independent re-validation of a witness against Def 2.3: used to certify
/// every positive answer of the search.
inline bool check_witness(const Ltss& sys, const std::vector<EpTriple>& witness) {
  auto find_rel = [&](int p, int q) {
    std::vector<const EpTriple*> out;
    for (const auto& t : witness)
      if (t.p == p && t.q == q) out.push_back(&t);
    return out;
  };
  for (const auto& tr : witness) {
    // Condition 1: total, surjective, label preserving, within en(p) x en(q).
    std::set<int> covered_t, covered_u;
    for (const auto& [t, u] : tr.rel) {
      const auto& ts = sys.en[tr.p];
      const auto& us = sys.en[tr.q];
      if (std::find(ts.begin(), ts.end(), t) == ts.end()) return false;
      if (std::find(us.begin(), us.end(), u) == us.end()) return false;
      if (!(sys.transitions[t].label == sys.transitions[u].label)) return false;
      covered_t.insert(t);
      covered_u.insert(u);
    }
    for (int t : sys.en[tr.p])
      if (!covered_t.count(t)) return false;
    for (int u : sys.en[tr.q])
      if (!covered_u.count(u)) return false;

    // Condition 2: every executed pair reaches a triple matching successors.
    for (const auto& [v, w] : tr.rel) {
      int pv = sys.state_id.at(sys.transitions[v].tgt->key);
      int qw = sys.state_id.at(sys.transitions[w].tgt->key);
      bool ok = false;
      for (const auto* next : find_rel(pv, qw)) {
        auto related = [&](int a, int b) {
          return std::binary_search(next->rel.begin(), next->rel.end(),
                                    std::make_pair(a, b));
        };
        bool good = true;
        for (const auto& [t, u] : tr.rel) {
          for (int tv : sys.successors_of(t, v)) {
            bool m = false;
            for (int uw : sys.successors_of(u, w))
              if (related(tv, uw)) m = true;
            if (!m) good = false;
          }
          for (int uw : sys.successors_of(u, w)) {
            bool m = false;
            for (int tv : sys.successors_of(t, v))
              if (related(tv, uw)) m = true;
            if (!m) good = false;
          }
        }
        if (good) {
          ok = true;
          break;
        }
      }
      if (!ok) return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Derived checks.
// ---------------------------------------------------------------------------

/// RDP: <X|S> is ep-bisimilar to <S_X|S>, provided var(S_Y) is within V_S.
inline EpVerdict check_rdp(const Tsss& tsss, const Name& x, const RecPtr& spec,
                           const ExploreLimits& limits = {}, const EpOptions& opts = {}) {
  for (const auto& [y, body] : spec->bindings) {
    for (const auto& v : free_vars(body))
      if (!spec->bindings.count(v))
        fail("PremiseViolated",
             "equation for '" + y + "' has stray free variable '" + v + "'");
  }
  PExpr call = mk_rec(x, spec);
  PExpr unfolded = unfold_rec(x, spec);
  Engine engine(tsss, limits);
  Ltss sys = engine.explore({call, unfolded});
  return ep_bisim(sys, call, unfolded, opts);
}

/// Congruence probe: substitute two pointwise ep-bisimilar closed
/// substitutions into a context; a false verdict on a checked TSSS would
/// contradict the congruence property and is reported loudly by callers.
inline EpVerdict congruence_probe(const Tsss& tsss, const PExpr& context,
                                  const Substitution& rho, const Substitution& nu,
                                  const ExploreLimits& limits = {},
                                  const EpOptions& opts = {}) {
  for (const auto& x : free_vars(context)) {
    auto r = rho.find(x);
    auto n = nu.find(x);
    if (r == rho.end() || n == nu.end())
      fail("PremiseViolated", "no substitution for free variable '" + x + "'");
    Engine engine(tsss, limits);
    Ltss sys = engine.explore({r->second, n->second});
    EpVerdict v = ep_bisim(sys, r->second, n->second, opts);
    if (v.result != Tri::True)
      fail("PremiseViolated",
           "substitutions for '" + x + "' are not ep-bisimilar (" + tri_str(v.result) + ")");
  }
  PExpr p = substitute(context, rho);
  PExpr q = substitute(context, nu);
  Engine engine(tsss, limits);
  Ltss sys = engine.explore({p, q});
  return ep_bisim(sys, p, q, opts);
}

/// For every enabled pair (t, u) with an indicator label on u, the derivable
/// successors must be exactly { t }.
struct SuccClosureReport {
  std::vector<std::string> problems;
  bool clean() const { return problems.empty(); }
};

inline SuccClosureReport succ_closure_check(const Tsss& tsss, const Ltss& sys) {
  SuccClosureReport report;
  if (!sys.complete) {
    report.problems.push_back("IncompleteSystem: exploration was truncated");
    return report;
  }
  for (std::size_t s = 0; s < sys.states.size(); ++s) {
    for (int tid : sys.en[s]) {
      for (int uid : sys.en[s]) {
        const Transition& u = sys.transitions[uid];
        if (tsss.tss.universe.is_act(u.label)) continue;
        auto vs = sys.successors_of(tid, uid);
        bool identity = vs.size() == 1 && vs[0] == tid;
        if (!identity) {
          std::string msg = "state " + render(sys.states[s]) + ": pair (" +
                            render_texpr(sys.transitions[tid].expr) + ", " +
                            render_texpr(u.expr) + ") has ";
          if (vs.empty())
            msg += "no derivable successor (identity expected)";
          else
            msg += std::to_string(vs.size()) + " successors (identity expected)";
          report.problems.push_back(msg);
        }
      }
    }
  }
  return report;
}

}  // namespace epsos
