#pragma once

#include <fstream>
#include <random>

#include "epsos/builtins.hpp"
#include "epsos/io.hpp"

namespace epsos {

// ---------------------------------------------------------------------------
// Congruence suite: seeded random contexts instantiated with ep-bisimilar
// closed pairs; every probe must come out true (a false probe on a checked
// TSSS would contradict the congruence property of the format).
// ---------------------------------------------------------------------------

struct SuiteOptions {
  int trials = 100;
  std::uint64_t seed = 0;
  int max_depth = 3;
  ExploreLimits limits;
  EpOptions ep_options;
};

struct SuiteResult {
  int trials = 0;
  int passed = 0;
  std::vector<std::string> failures;  // context + pair descriptions
  std::set<std::string> ops_seen;

  bool all_passed() const { return passed == trials && failures.empty(); }
};

namespace detail {

class ContextGen {
 public:
  ContextGen(const Tss& tss, bool with_signals, std::mt19937_64& rng)
      : tss_(tss), signals_(with_signals), rng_(rng) {
    Bindings none;
    const OperatorFamily& pre = tss.sig.families.at("pre");
    auto range = pre.label_range ? pre.label_range->eval(tss.universe, none)
                                 : tss.universe.labels;
    prefixable_.assign(range.begin(), range.end());
    if (signals_) {
      for (const auto& base : tss.universe.sorts.at("S")) sigs_.push_back(Label(base));
    }
  }

  /// A context of the given depth over free variables x1, x2 (at most two
  /// occurrences in total, at most two parallel compositions).
  PExpr generate(int depth, std::set<std::string>* ops_seen) {
    var_budget_ = 2;
    par_budget_ = 2;
    PExpr e = gen(depth, ops_seen);
    if (!used_var_) {
      // Guarantee at least one hole.
      (*ops_seen).insert("par");
      e = mk_app(tss_.sig.instantiate("par"), {e, mk_var("x1")});
    }
    return e;
  }

 private:
  PExpr gen(int depth, std::set<std::string>* ops) {
    if (depth <= 0) return leaf(ops);
    switch (pick(signals_ ? 6 : 5)) {
      case 0: return leaf(ops);
      case 1: {
        ops->insert("pre");
        Label l = prefixable_[pick(prefixable_.size())];
        return mk_app(tss_.sig.instantiate("pre", OpParamValue::of_label(l)),
                      {gen(depth - 1, ops)});
      }
      case 2:
        ops->insert("plus");
        return mk_app(tss_.sig.instantiate("plus"),
                      {gen(depth - 1, ops), gen(depth - 1, ops)});
      case 3:
        if (par_budget_ > 0) {
          --par_budget_;
          ops->insert("par");
          return mk_app(tss_.sig.instantiate("par"),
                        {gen(depth - 1, ops), gen(depth - 1, ops)});
        }
        return leaf(ops);
      case 4: {
        ops->insert("plus");
        return mk_app(tss_.sig.instantiate("plus"),
                      {gen(depth - 1, ops), leaf(ops)});
      }
      case 5: {
        ops->insert("sig");
        Label s = sigs_[pick(sigs_.size())];
        return mk_app(tss_.sig.instantiate("sig", OpParamValue::of_label(s)),
                      {gen(depth - 1, ops)});
      }
    }
    return leaf(ops);
  }

  PExpr leaf(std::set<std::string>* ops) {
    if (var_budget_ > 0 && pick(2) == 0) {
      --var_budget_;
      used_var_ = true;
      return mk_var(pick(2) == 0 ? "x1" : "x2");
    }
    (void)ops;
    return mk_app(tss_.sig.instantiate("nil"), {});
  }

  std::size_t pick(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_);
  }

  const Tss& tss_;
  bool signals_;
  std::mt19937_64& rng_;
  std::vector<Label> prefixable_;
  std::vector<Label> sigs_;
  int var_budget_ = 2;
  int par_budget_ = 2;
  bool used_var_ = false;
};

}  // namespace detail

/// Known ep-bisimilar closed pairs; the probe re-verifies each premise.
inline std::vector<std::pair<std::string, std::string>> ccs_pair_pool() {
  return {{"a.0 + a.0", "a.0"},
          {"a.0 | 0", "a.0"},
          {"<X | X = a.X>", "<X | X = a.a.X>"},
          {"a.b.0 + a.b.0", "a.b.0"},
          {"b.0 + a.0", "a.0 + b.0"}};
}

inline std::vector<std::pair<std::string, std::string>> abcde_pair_pool() {
  return {{"c.0 + c.0", "c.0"},
          {"b?.0 + b?.0", "b?.0"},
          {"0^s | 0", "0^s"},
          {"<X | X = c.X>", "<X | X = c.c.X>"},
          {"tau.0 + tau.0", "tau.0"}};
}

inline SuiteResult congruence_suite(const Tsss& tsss,
                                    const std::vector<std::pair<std::string, std::string>>& pool,
                                    bool with_signals, const SuiteOptions& opts,
                                    std::ostream* log = nullptr) {
  SuiteResult result;
  std::mt19937_64 rng(opts.seed);
  detail::ContextGen gen(tsss.tss, with_signals, rng);

  std::vector<std::pair<PExpr, PExpr>> pairs;
  for (const auto& [l, r] : pool)
    pairs.push_back({parse_term(tsss.tss, l), parse_term(tsss.tss, r)});

  for (int trial = 0; trial < opts.trials; ++trial) {
    PExpr context = gen.generate(opts.max_depth, &result.ops_seen);
    const auto& pr = pairs[trial % pairs.size()];
    Substitution rho, nu;
    for (const auto& x : free_vars(context)) {
      rho[x] = pr.first;
      nu[x] = pr.second;
    }
    ++result.trials;
    std::string desc = render(context) + "  with  x := " + render(pr.first) +
                       "  vs  " + render(pr.second);
    try {
      EpVerdict v = congruence_probe(tsss, context, rho, nu, opts.limits, opts.ep_options);
      if (v.result == Tri::True) {
        ++result.passed;
        if (log) *log << "ok   " << desc << "\n";
      } else {
        result.failures.push_back(desc + " -> " + tri_str(v.result));
        if (log) *log << "FAIL " << desc << " (" << tri_str(v.result) << ")\n";
      }
    } catch (const Error& e) {
      result.failures.push_back(desc + " -> " + e.what());
      if (log) *log << "FAIL " << desc << " (" << e.what() << ")\n";
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// The command-line workbench.
// ---------------------------------------------------------------------------

struct RunConfig {
  std::string command;
  std::string language = "ccs";  // ccs | abcde | <file.dsl>
  std::map<Name, std::set<Name>> sort_params;
  std::map<Name, std::map<Name, Name>> relabellings;
  std::string fixture;
  std::vector<std::string> terms;
  bool strong = false;
  bool ep = false;
  std::string rec_var;   // rdp
  std::string rec_spec;  // rdp
  std::string format = "text";
  int trials = 100;
  int abcde_trials = 20;
  std::uint64_t seed = 0;
  bool run_all = false;
  bool unicode = false;
  ExploreLimits limits;
  EpOptions ep_options;
};

namespace detail {

inline std::string unicodify(const std::string& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s.compare(i, 3, "tau") == 0 &&
        (i == 0 || !std::isalnum(static_cast<unsigned char>(s[i - 1]))) &&
        (i + 3 >= s.size() || !std::isalnum(static_cast<unsigned char>(s[i + 3])))) {
      out += "τ";
      i += 2;
    } else if (s[i] == '~' && i + 1 < s.size() &&
               std::isalnum(static_cast<unsigned char>(s[i + 1]))) {
      out += s[i + 1];
      out += "̄";  // combining macron
      ++i;
    } else if (s.compare(i, 2, "->") == 0) {
      out += "→";
      ++i;
    } else if (s.compare(i, 2, "~>") == 0) {
      out += "⇝";
      ++i;
    } else {
      out += s[i];
    }
  }
  return out;
}

struct Workbench {
  RunConfig cfg;
  std::ostream& out;
  std::ostream& err;
  std::optional<Fixture> fix;
  Tsss tsss;

  std::string pretty(const std::string& s) const {
    return cfg.unicode ? unicodify(s) : s;
  }

  void load() {
    if (!cfg.fixture.empty()) {
      fix = fixture(cfg.fixture);
      tsss = fix->tsss;
      return;
    }
    if (cfg.language == "ccs") {
      CcsParams p;
      if (cfg.sort_params.count("C")) p.handshake_names = cfg.sort_params.at("C");
      p.relabellings = cfg.relabellings;
      tsss = ccs(p);
    } else if (cfg.language == "abcde") {
      AbcdeParams p;
      if (cfg.sort_params.count("C")) p.handshake_names = cfg.sort_params.at("C");
      if (cfg.sort_params.count("B")) p.broadcast_names = cfg.sort_params.at("B");
      if (cfg.sort_params.count("S")) p.signal_names = cfg.sort_params.at("S");
      p.relabellings = cfg.relabellings;
      tsss = abcde(p);
    } else {
      std::ifstream in(cfg.language);
      if (!in) fail("ParseError", "cannot open language file '" + cfg.language + "'");
      std::stringstream ss;
      ss << in.rdbuf();
      tsss = parse_language(ss.str(), cfg.sort_params);
    }
  }

  PExpr term(const std::string& spec) {
    if (fix) {
      auto it = fix->terms.find(spec);
      if (it != fix->terms.end()) return it->second;
    }
    return parse_term(tsss.tss, spec);
  }

  int check_format_cmd() {
    LoadResult r;
    if (cfg.language == "ccs" || cfg.language == "abcde" || !cfg.fixture.empty()) {
      std::string text;
      if (!cfg.fixture.empty()) {
        Fixture f = fixture(cfg.fixture);
        text = f.tsss.tss.universe.sorts.count("B") ? abcde_dsl_text() : ccs_dsl_text();
      } else if (cfg.language == "ccs") {
        CcsParams p;
        if (cfg.sort_params.count("C")) p.handshake_names = cfg.sort_params.at("C");
        p.relabellings = cfg.relabellings;
        text = ccs_dsl_text(p);
      } else {
        AbcdeParams p;
        if (cfg.sort_params.count("C")) p.handshake_names = cfg.sort_params.at("C");
        if (cfg.sort_params.count("B")) p.broadcast_names = cfg.sort_params.at("B");
        if (cfg.sort_params.count("S")) p.signal_names = cfg.sort_params.at("S");
        p.relabellings = cfg.relabellings;
        text = abcde_dsl_text(p);
      }
      r = load_language(text);
    } else {
      std::ifstream in(cfg.language);
      if (!in) fail("ParseError", "cannot open language file '" + cfg.language + "'");
      std::stringstream ss;
      ss << in.rdbuf();
      r = load_language(ss.str(), cfg.sort_params);
    }
    out << "de-simone: " << r.de_simone.str();
    out << "successor-format: " << r.successor_format.str();
    return r.pass() ? 0 : 1;
  }

  int lts_cmd() {
    load();
    if (cfg.terms.empty()) fail("InvalidParams", "lts needs a term");
    Engine eng(tsss, cfg.limits);
    std::vector<PExpr> roots;
    for (const auto& t : cfg.terms) roots.push_back(term(t));
    Ltss sys = eng.explore(roots);
    if (cfg.format == "json") {
      out << ltss_json(sys).dump(2) << "\n";
    } else if (cfg.format == "dot") {
      out << ltss_dot(sys);
    } else {
      out << pretty(std::to_string(sys.states.size()) + " states, " +
                    std::to_string(sys.transitions.size()) + " transitions, " +
                    std::to_string(sys.successors.size()) + " successor triples, " +
                    (sys.complete ? "complete" : "truncated")) << "\n";
      for (std::size_t i = 0; i < sys.transitions.size(); ++i) {
        const Transition& t = sys.transitions[i];
        out << pretty("t" + std::to_string(i) + ": " + render(t.src) + " -" +
                      t.label.str() + "-> " + render(t.tgt) + "   [" +
                      render_texpr(t.expr) + "]") << "\n";
      }
      for (const auto& s : sys.truncation_report) out << "truncated: " << s << "\n";
    }
    return sys.complete ? 0 : 2;
  }

  int succ_cmd() {
    load();
    if (cfg.terms.empty()) fail("InvalidParams", "succ needs a term");
    Engine eng(tsss, cfg.limits);
    Ltss sys = eng.explore({term(cfg.terms[0])});
    if (cfg.format == "json") {
      out << ltss_json(sys).dump(2) << "\n";
    } else {
      for (const auto& triple : sys.successors) {
        out << pretty(render_texpr(sys.transitions[triple[0]].expr) + "  ~" +
                      render_texpr(sys.transitions[triple[1]].expr) + "~>  " +
                      render_texpr(sys.transitions[triple[2]].expr)) << "\n";
      }
      if (sys.successors.empty()) out << "no successor triples\n";
    }
    return sys.complete ? 0 : 2;
  }

  int bisim_cmd() {
    load();
    if (cfg.terms.size() != 2) fail("InvalidParams", "bisim needs two terms");
    if (cfg.strong == cfg.ep)
      fail("InvalidParams", "bisim needs exactly one of --strong / --ep");
    PExpr p = term(cfg.terms[0]);
    PExpr q = term(cfg.terms[1]);
    Engine eng(tsss, cfg.limits);
    Ltss sys = eng.explore({p, q});
    if (cfg.strong) {
      StrongVerdict v = strong_bisim(sys, p, q);
      if (cfg.format == "json") {
        nlohmann::ordered_json j;
        j["result"] = tri_str(v.result);
        if (!v.note.empty()) j["note"] = v.note;
        out << j.dump(2) << "\n";
      } else {
        out << tri_str(v.result) << (v.note.empty() ? "" : " (" + v.note + ")") << "\n";
      }
      return v.result == Tri::True ? 0 : v.result == Tri::False ? 1 : 2;
    }
    EpVerdict v = ep_bisim(sys, p, q, cfg.ep_options);
    if (cfg.format == "json") {
      out << verdict_json(sys, v).dump(2) << "\n";
    } else {
      out << tri_str(v.result) << "\n";
      if (v.counterexample) {
        const auto& ce = *v.counterexample;
        out << "counterexample: condition " << ce.condition << "\n";
        if (ce.t >= 0 && ce.u >= 0)
          out << pretty("  related pair: " + render_texpr(sys.transitions[ce.t].expr) +
                        "  ~  " + render_texpr(sys.transitions[ce.u].expr)) << "\n";
        if (ce.v >= 0)
          out << pretty("  executed pair: " + render_texpr(sys.transitions[ce.v].expr) +
                        "  ~  " + render_texpr(sys.transitions[ce.w].expr)) << "\n";
        if (ce.succ >= 0)
          out << pretty("  unmatched successor: " +
                        render_texpr(sys.transitions[ce.succ].expr)) << "\n";
        out << "  " << ce.message << "\n";
      }
    }
    return v.result == Tri::True ? 0 : v.result == Tri::False ? 1 : 2;
  }

  int rdp_cmd() {
    load();
    if (cfg.rec_var.empty() || cfg.rec_spec.empty())
      fail("InvalidParams", "rdp needs a variable and a specification");
    RecPtr spec = parse_rec_spec(tsss.tss, cfg.rec_spec);
    EpVerdict v = check_rdp(tsss, cfg.rec_var, spec, cfg.limits, cfg.ep_options);
    out << tri_str(v.result) << "\n";
    return v.result == Tri::True ? 0 : v.result == Tri::False ? 1 : 2;
  }

  int congruence_cmd() {
    SuiteOptions opts;
    opts.seed = cfg.seed;
    opts.limits = cfg.limits;
    opts.ep_options = cfg.ep_options;
    opts.ep_options.max_class_side = std::max(opts.ep_options.max_class_side, 8);

    opts.trials = cfg.trials;
    Tsss c = ccs();
    SuiteResult ccs_result = congruence_suite(c, ccs_pair_pool(), false, opts, nullptr);
    out << "ccs: " << ccs_result.passed << "/" << ccs_result.trials << " probes true\n";

    opts.trials = cfg.abcde_trials;
    opts.seed = cfg.seed + 1;
    Tsss a = abcde();
    SuiteResult ab_result = congruence_suite(a, abcde_pair_pool(), true, opts, nullptr);
    out << "abcde: " << ab_result.passed << "/" << ab_result.trials << " probes true\n";

    for (const auto& f : ccs_result.failures) err << "ccs failure: " << f << "\n";
    for (const auto& f : ab_result.failures) err << "abcde failure: " << f << "\n";
    return ccs_result.all_passed() && ab_result.all_passed() ? 0 : 1;
  }

  int fixtures_cmd() {
    if (!cfg.run_all) fail("InvalidParams", "fixtures requires --run-all");
    bool all_ok = true;
    for (const auto& name : fixture_names()) {
      Fixture f = fixture(name);
      Engine eng(f.tsss, cfg.limits);
      std::vector<PExpr> roots;
      for (const auto& [_, t] : f.terms) roots.push_back(t);
      bool ok = true;
      std::string note;
      try {
        Ltss sys = eng.explore(roots);
        if (!sys.complete) {
          ok = false;
          note = "truncated";
        }
        // Naming round-trip and literal coherence on every transition.
        for (const auto& t : sys.transitions) {
          OpenTransition proof = interpret_expr(f.tsss.tss, t.expr);
          if (!texpr_equal(name_of(f.tsss.tss, proof), t.expr)) {
            ok = false;
            note = "naming round-trip failed";
          }
        }
        // Indicator invariants and closure.
        for (const auto& t : sys.transitions)
          if (!f.tsss.tss.universe.is_act(t.label) && t.tgt->key != t.src->key) {
            ok = false;
            note = "indicator transition is not a self-loop";
          }
        auto closure = succ_closure_check(f.tsss, sys);
        if (!closure.clean()) {
          ok = false;
          note = "successor closure: " + closure.problems.front();
        }
      } catch (const Error& e) {
        ok = false;
        note = e.what();
      }
      out << (ok ? "pass " : "FAIL ") << name << (note.empty() ? "" : "  (" + note + ")")
          << "\n";
      all_ok = all_ok && ok;
    }
    return all_ok ? 0 : 1;
  }
};

}  // namespace detail

/// Dispatch a workbench command. Exit codes: 0 pass/true, 1 fail/false,
/// 2 unknown or truncation, 3 usage or parse errors.
inline int run(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  detail::Workbench wb{cfg, out, err};
  try {
    if (cfg.command == "check-format") return wb.check_format_cmd();
    if (cfg.command == "lts") return wb.lts_cmd();
    if (cfg.command == "succ") return wb.succ_cmd();
    if (cfg.command == "bisim") return wb.bisim_cmd();
    if (cfg.command == "rdp") return wb.rdp_cmd();
    if (cfg.command == "congruence-suite") return wb.congruence_cmd();
    if (cfg.command == "fixtures") return wb.fixtures_cmd();
    fail("InvalidParams", "unknown command '" + cfg.command + "'");
  } catch (const Error& e) {
    err << e.what() << "\n";
    const std::string& c = e.code();
    if (c == "DepthExceeded" || c == "BudgetExceeded" || c == "SearchBudgetExceeded" ||
        c == "IncompleteSystem")
      return 2;
    return 3;
  }
}

}  // namespace epsos
