#pragma once

#include "epsos/successors.hpp"

namespace epsos {

// ---------------------------------------------------------------------------
// Language definition files. Braced sections in free order, each at most
// once: sorts, labels, functions, operators, rules, successor-rules, pragmas.
// '#' starts a line comment. See the embedded ccs/abcde definitions for the
// concrete idiom.
// ---------------------------------------------------------------------------

namespace dsl {

struct Token {
  enum class Kind { Ident, String, Punct, End };
  Kind kind = Kind::End;
  std::string text;
  int line = 1, col = 1;
  std::size_t offset = 0;  // byte offset of the token start
};

class Lexer {
 public:
  explicit Lexer(const std::string& src) : src_(src) { advance(); }

  const Token& peek() const { return tok_; }

  Token take() {
    Token t = tok_;
    advance();
    return t;
  }

  struct State {
    std::size_t pos;
    int line, col;
    Token tok;
  };
  State save() const { return {pos_, line_, col_, tok_}; }
  void restore(const State& s) {
    pos_ = s.pos;
    line_ = s.line;
    col_ = s.col;
    tok_ = s.tok;
  }

  [[noreturn]] void error(const std::string& msg) const {
    fail("ParseError", std::to_string(tok_.line) + ":" + std::to_string(tok_.col) + ": " +
                           msg + " (at '" + tok_.text + "')");
  }

 private:
  void advance() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
        continue;
      }
      if (c == '\n') {
        ++line_;
        col_ = 1;
        ++pos_;
        continue;
      }
      if (c == ' ' || c == '\t' || c == '\r') {
        ++col_;
        ++pos_;
        continue;
      }
      break;
    }
    tok_ = Token{Token::Kind::End, "", line_, col_, pos_};
    if (pos_ >= src_.size()) return;
    tok_.line = line_;
    tok_.col = col_;
    tok_.offset = pos_;
    char c = src_[pos_];
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '\'') {
      std::string id;
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_' ||
              src_[pos_] == '\'')) {
        id += src_[pos_++];
        ++col_;
      }
      tok_.kind = Token::Kind::Ident;
      tok_.text = id;
      return;
    }
    if (c == '"') {
      std::string s;
      ++pos_;
      ++col_;
      while (pos_ < src_.size() && src_[pos_] != '"') {
        s += src_[pos_++];
        ++col_;
      }
      if (pos_ >= src_.size()) fail("ParseError", "unterminated string literal");
      ++pos_;
      ++col_;
      tok_.kind = Token::Kind::String;
      tok_.text = s;
      return;
    }
    // Multi-character punctuation first.
    static const char* multi[] = {"|-", "->", "=>", "~>", nullptr};
    for (int i = 0; multi[i]; ++i) {
      std::size_t len = std::strlen(multi[i]);
      if (src_.compare(pos_, len, multi[i]) == 0) {
        tok_.kind = Token::Kind::Punct;
        tok_.text = multi[i];
        pos_ += len;
        col_ += static_cast<int>(len);
        return;
      }
    }
    tok_.kind = Token::Kind::Punct;
    tok_.text = std::string(1, c);
    ++pos_;
    ++col_;
  }

  const std::string& src_;
  std::size_t pos_ = 0;
  int line_ = 1, col_ = 1;
  Token tok_;
};

}  // namespace dsl

// ---------------------------------------------------------------------------
// Parsed document.
// ---------------------------------------------------------------------------

struct DslDocument {
  Name language;
  std::map<Name, std::set<Name>> sorts;  // base-name sorts
  // labels section, in declaration order: "act" and "indicator" are special,
  // any other name declares a reusable label class.
  std::vector<std::pair<Name, LabelSetPtr>> label_defs;
  std::map<Name, LabelFn> functions;
  Signature signature;
  std::vector<DeSimoneRuleTemplate> rules;
  std::vector<SuccessorRuleTemplate> successor_rules;
  std::vector<std::vector<Name>> expand_pragmas;  // operator type lists
};

class DslParser {
 public:
  explicit DslParser(const std::string& src,
                     const std::map<Name, std::set<Name>>& sort_overrides = {})
      : lex_(src), overrides_(sort_overrides) {}

  DslDocument parse() {
    expect_ident("language");
    doc_.language = take_ident();
    expect_punct(";");
    std::set<std::string> seen;
    while (lex_.peek().kind != dsl::Token::Kind::End) {
      std::string section = take_section_name();
      if (!seen.insert(section).second) lex_.error("duplicate section '" + section + "'");
      expect_punct("{");
      if (section == "sorts")
        parse_sorts();
      else if (section == "labels")
        parse_labels();
      else if (section == "functions")
        parse_functions();
      else if (section == "operators")
        parse_operators();
      else if (section == "rules")
        parse_rules();
      else if (section == "successor-rules")
        parse_successor_rules();
      else if (section == "pragmas")
        parse_pragmas();
      else
        lex_.error("unknown section '" + section + "'");
      expect_punct("}");
    }
    bool has_act = false;
    for (const auto& [n, _] : doc_.label_defs) has_act = has_act || n == "act";
    if (!has_act) lex_.error("missing labels section (no 'act' definition)");
    return std::move(doc_);
  }

 private:
  dsl::Lexer lex_;
  std::map<Name, std::set<Name>> overrides_;
  DslDocument doc_;

  // --- token helpers ---------------------------------------------------------

  bool peek_punct(const std::string& p) const {
    return lex_.peek().kind == dsl::Token::Kind::Punct && lex_.peek().text == p;
  }
  bool peek_ident(const std::string& id) const {
    return lex_.peek().kind == dsl::Token::Kind::Ident && lex_.peek().text == id;
  }
  void expect_punct(const std::string& p) {
    if (!peek_punct(p)) lex_.error("expected '" + p + "'");
    lex_.take();
  }
  void expect_ident(const std::string& id) {
    if (!peek_ident(id)) lex_.error("expected '" + id + "'");
    lex_.take();
  }
  Name take_ident() {
    if (lex_.peek().kind != dsl::Token::Kind::Ident) lex_.error("expected an identifier");
    return lex_.take().text;
  }
  std::string take_string() {
    if (lex_.peek().kind != dsl::Token::Kind::String) lex_.error("expected a string");
    return lex_.take().text;
  }
  std::string take_section_name() {
    std::string s = take_ident();
    if (peek_punct("-")) {
      lex_.take();
      s += "-" + take_ident();
    }
    return s;
  }
  SourceSpan span() const { return SourceSpan{lex_.peek().line, lex_.peek().col}; }

  // --- sections ---------------------------------------------------------------

  void parse_sorts() {
    while (!peek_punct("}")) {
      Name sort = take_ident();
      expect_punct("=");
      expect_punct("{");
      std::set<Name> elems;
      while (!peek_punct("}")) {
        elems.insert(take_ident());
        if (peek_punct(",")) lex_.take();
      }
      expect_punct("}");
      expect_punct(";");
      auto ov = overrides_.find(sort);
      doc_.sorts[sort] = ov != overrides_.end() ? ov->second : elems;
    }
    for (const auto& [sort, elems] : overrides_)
      if (!doc_.sorts.count(sort)) doc_.sorts[sort] = elems;
  }

  void parse_labels() {
    while (!peek_punct("}")) {
      Name which = take_ident();
      expect_punct("=");
      LabelSetPtr e = parse_set_expr({});
      expect_punct(";");
      doc_.label_defs.push_back({which, e});
    }
  }

  void parse_functions() {
    while (!peek_punct("}")) {
      LabelFn fn;
      fn.name = take_ident();
      expect_punct(":");
      take_ident();  // domain sort(s); informative
      while (peek_punct("|")) {
        lex_.take();
        take_ident();
      }
      expect_punct("=");
      expect_punct("{");
      while (!peek_punct("}")) {
        Name from = take_ident();
        expect_punct("->");
        Name to = take_ident();
        fn.table[from] = to;
        if (peek_punct(",")) lex_.take();
      }
      expect_punct("}");
      expect_punct(";");
      doc_.functions[fn.name] = fn;
    }
  }

  void parse_operators() {
    while (!peek_punct("}")) {
      OperatorFamily fam;
      fam.id = take_ident();
      expect_ident("arity");
      fam.arity = std::stoi(take_ident());
      if (peek_ident("param")) {
        lex_.take();
        Name kind = take_ident();
        if (kind == "label") {
          fam.param_kind = OpParamValue::Kind::Label;
          if (peek_ident("in")) {
            lex_.take();
            fam.label_range = parse_set_expr({});
          }
        } else if (kind == "set") {
          fam.param_kind = OpParamValue::Kind::Set;
          expect_ident("of");
          fam.set_sort = take_ident();
        } else if (kind == "fn") {
          fam.param_kind = OpParamValue::Kind::Fn;
        } else {
          lex_.error("parameter kind must be label, set or fn");
        }
      }
      if (peek_ident("display")) {
        lex_.take();
        Name d = take_ident();
        if (d == "token") {
          fam.display = OpDisplayKind::Token;
          fam.token = take_string();
        } else if (d == "dot") {
          fam.display = OpDisplayKind::PrefixDot;
          fam.precedence = 50;
        } else if (d == "infix") {
          fam.display = OpDisplayKind::Infix;
          fam.token = take_string();
          expect_ident("prec");
          fam.precedence = std::stoi(take_ident());
        } else if (d == "restrict") {
          fam.display = OpDisplayKind::PostfixRestrict;
        } else if (d == "rename") {
          fam.display = OpDisplayKind::PostfixRename;
        } else if (d == "signal") {
          fam.display = OpDisplayKind::PostfixSignal;
        } else if (d == "call") {
          fam.display = OpDisplayKind::Call;
        } else {
          lex_.error("unknown display kind '" + d + "'");
        }
      }
      expect_punct(";");
      if (doc_.signature.families.count(fam.id))
        lex_.error("duplicate operator '" + fam.id + "'");
      doc_.signature.families[fam.id] = fam;
    }
  }

  void parse_rules() {
    while (!peek_punct("}")) {
      DeSimoneRuleTemplate r;
      r.span = span();
      r.name_fmt = take_string();
      std::set<Name> declared;
      if (peek_ident("name")) {
        lex_.take();
        expect_punct("(");
        while (!peek_punct(")")) {
          r.name_param_vars.push_back(take_ident());
          declared.insert(r.name_param_vars.back());
          if (peek_punct(",")) lex_.take();
        }
        expect_punct(")");
      }
      if (peek_ident("vars")) {
        lex_.take();
        expect_punct("(");
        while (!peek_punct(")")) {
          declared.insert(take_ident());
          if (peek_punct(",")) lex_.take();
        }
        expect_punct(")");
      }
      expect_punct(":");
      // Premises up to |-.
      while (!peek_punct("|-")) {
        Premise pr;
        pr.source_var = take_ident();
        expect_punct("-");
        pr.label_var = take_ident();
        declared.insert(pr.label_var);
        expect_punct("->");
        pr.target_var = take_ident();
        r.premises.push_back(pr);
        if (peek_punct(",")) lex_.take();
      }
      expect_punct("|-");
      // Conclusion source pattern.
      r.op_family = take_ident();
      const OperatorFamily* fam = doc_.signature.find(r.op_family);
      if (!fam) lex_.error("undeclared operator '" + r.op_family + "'");
      if (peek_punct("[")) {
        lex_.take();
        r.op_param_var = take_ident();
        declared.insert(r.op_param_var);
        expect_punct("]");
      }
      expect_punct("(");
      while (!peek_punct(")")) {
        r.source_vars.push_back(take_ident());
        if (peek_punct(",")) lex_.take();
      }
      expect_punct(")");
      expect_punct("-");
      r.conclusion_label = parse_label_term(declared);
      expect_punct("->");
      r.target = parse_term_pattern(declared, r);
      if (peek_ident("where")) {
        lex_.take();
        while (true) {
          r.conditions.push_back(parse_condition(declared));
          if (peek_punct(",")) {
            lex_.take();
            continue;
          }
          break;
        }
      }
      expect_punct(";");
      // Sort premises by argument position; authoring order is free.
      std::stable_sort(r.premises.begin(), r.premises.end(),
                       [&r](const Premise& a, const Premise& b) {
                         return r.premise_index(a) < r.premise_index(b);
                       });
      promote_ranges(r);
      doc_.rules.push_back(std::move(r));
    }
  }

  /// Membership conditions on a bare variable become enumeration ranges.
  void promote_ranges(DeSimoneRuleTemplate& r) {
    std::vector<SideCondition> rest;
    for (auto& c : r.conditions) {
      if (c.kind == SideCondition::Kind::InSet && c.lhs->kind == LabelTerm::Kind::Var &&
          !r.var_ranges.count(c.lhs->var)) {
        bool has_vars = false;
        if (c.set->kind == LabelSetExpr::Kind::Enum) {
          std::set<Name> vs;
          for (const auto& e : c.set->elems) e->collect_vars(vs);
          has_vars = !vs.empty();
        }
        if (!has_vars) {
          r.var_ranges[c.lhs->var] = c.set;
          continue;
        }
      }
      rest.push_back(c);
    }
    r.conditions = std::move(rest);
  }

  void parse_successor_rules() {
    while (!peek_punct("}")) {
      SuccessorRuleTemplate s;
      s.span = span();
      s.doc_name = take_string();
      std::set<Name> declared = {"xc", "yc"};
      if (peek_ident("vars")) {
        lex_.take();
        expect_punct("(");
        while (!peek_punct(")")) {
          Name v = take_ident();
          s.decl_vars.push_back(v);
          declared.insert(v);
          if (peek_ident("in")) {
            lex_.take();
            s.var_ranges[v] = parse_set_expr(declared);
          }
          if (peek_punct(",")) lex_.take();
        }
        expect_punct(")");
      }
      for (int i = 1; i <= 9; ++i) {
        declared.insert("xa" + std::to_string(i));
        declared.insert("ya" + std::to_string(i));
        declared.insert("za" + std::to_string(i));
      }
      expect_punct(":");
      parse_ctor_pattern(s, true, declared);
      expect_punct("~");
      parse_ctor_pattern(s, false, declared);
      expect_punct("=>");
      s.target = parse_succ_target(declared);
      bool needs_given = false;
      if (peek_ident("needs")) {
        lex_.take();
        needs_given = true;
        expect_punct("(");
        while (!peek_punct(")")) {
          s.premise_indices.push_back(std::stoi(take_ident()));
          if (peek_punct(",")) lex_.take();
        }
        expect_punct(")");
      }
      if (peek_ident("where")) {
        lex_.take();
        while (true) {
          s.conditions.push_back(parse_condition(declared));
          if (peek_punct(",")) {
            lex_.take();
            continue;
          }
          break;
        }
      }
      expect_punct(";");
      if (!needs_given) s.premise_indices = default_premises(s);
      doc_.successor_rules.push_back(std::move(s));
    }
  }

  /// Default premise set: the intersection of both trigger sets.
  std::vector<int> default_premises(const SuccessorRuleTemplate& s) {
    std::vector<int> out;
    if (s.lhs_is_rec && s.rhs_is_rec) return {1};
    auto trig = [&](const Name& fmt) -> std::set<int> {
      std::set<int> t;
      for (const auto& r : doc_.rules)
        if (r.name_fmt == fmt) {
          for (int i : r.trigger_set()) t.insert(i);
          break;
        }
      return t;
    };
    std::set<int> l = trig(s.lhs.fmt), r = trig(s.rhs.fmt);
    for (int i : l)
      if (r.count(i)) out.push_back(i);
    return out;
  }

  void parse_ctor_pattern(SuccessorRuleTemplate& s, bool left, std::set<Name>& declared) {
    bool is_rec = false, rec_act = true;
    RuleNameSchema schema;
    if (peek_ident(kRecActName) || peek_ident(kRecInName)) {
      is_rec = true;
      rec_act = lex_.take().text == kRecActName;
    } else {
      schema.fmt = take_string();
      if (peek_punct("[")) {
        lex_.take();
        while (!peek_punct("]")) {
          schema.param_vars.push_back(take_ident());
          Label::Deco deco = Label::Deco::None;
          if (peek_punct("!")) deco = Label::Deco::Snd;
          if (peek_punct("?")) deco = Label::Deco::Rcv;
          if (peek_punct(":")) deco = Label::Deco::Dis;
          if (peek_punct("~")) lex_.error("bar decorations are not allowed in name patterns");
          if (deco != Label::Deco::None) lex_.take();
          schema.param_decos.push_back(deco);
          declared.insert(schema.param_vars.back());
          if (peek_punct(",")) lex_.take();
        }
        expect_punct("]");
      }
    }
    std::vector<SuccPatArg> args;
    expect_punct("(");
    while (!peek_punct(")")) {
      Name v = take_ident();
      SuccPatArg a = parse_meta_arg(v, left);
      args.push_back(a);
      if (peek_punct(",")) lex_.take();
    }
    expect_punct(")");
    if (left) {
      s.lhs_is_rec = is_rec;
      s.lhs_rec_act = rec_act;
      s.lhs = schema;
      s.lhs_args = args;
    } else {
      s.rhs_is_rec = is_rec;
      s.rhs_rec_act = rec_act;
      s.rhs = schema;
      s.rhs_args = args;
    }
    if (is_rec && args.size() != 1)
      lex_.error("recursion constructors take exactly one argument");
  }

  SuccPatArg parse_meta_arg(const Name& v, bool left) {
    if (v.size() < 2) lex_.error("expected a positional metavariable, got '" + v + "'");
    char head = v[0];
    int idx = std::atoi(v.c_str() + 1);
    if (idx <= 0) lex_.error("bad metavariable index in '" + v + "'");
    if (head == 'x') return {false, idx};
    if (left && head == 't') return {true, idx};
    if (!left && head == 'u') return {true, idx};
    lex_.error(std::string("argument metavariables are x<i> and ") +
               (left ? "t<i>" : "u<i>"));
  }

  STPatPtr parse_succ_target(const std::set<Name>& declared) {
    if (peek_ident(kRecActName) || peek_ident(kRecInName)) {
      bool act = lex_.take().text == kRecActName;
      expect_punct("(");
      STPatPtr inner = parse_succ_target(declared);
      expect_punct(")");
      return STPat::make_rec(act, inner);
    }
    if (lex_.peek().kind == dsl::Token::Kind::String) {
      RuleNameSchema schema;
      schema.fmt = take_string();
      if (peek_punct("[")) {
        lex_.take();
        while (!peek_punct("]")) {
          schema.param_vars.push_back(take_ident());
          Label::Deco deco = Label::Deco::None;
          if (peek_punct("!")) deco = Label::Deco::Snd;
          if (peek_punct("?")) deco = Label::Deco::Rcv;
          if (peek_punct(":")) deco = Label::Deco::Dis;
          if (deco != Label::Deco::None) lex_.take();
          schema.param_decos.push_back(deco);
          if (peek_punct(",")) lex_.take();
        }
        expect_punct("]");
      }
      std::vector<STPatPtr> args;
      expect_punct("(");
      while (!peek_punct(")")) {
        args.push_back(parse_succ_target(declared));
        if (peek_punct(",")) lex_.take();
      }
      expect_punct(")");
      return STPat::make_ctor(schema, args);
    }
    Name v = take_ident();
    if (v.size() < 2) lex_.error("expected a metavariable, got '" + v + "'");
    int idx = std::atoi(v.c_str() + 1);
    if (idx <= 0) lex_.error("bad metavariable index in '" + v + "'");
    switch (v[0]) {
      case 'x': return STPat::make_meta(MetaKind::X, idx);
      case 'y': return STPat::make_meta(MetaKind::Y, idx);
      case 't': return STPat::make_meta(MetaKind::TX, idx);
      case 's': return STPat::make_meta(MetaKind::TZ, idx);
      case 'f': return STPat::make_meta(MetaKind::Fresh, idx);
      default: break;
    }
    lex_.error("unknown metavariable head in '" + v + "'");
  }

  void parse_pragmas() {
    while (!peek_punct("}")) {
      expect_ident("expand");
      expect_ident("identity");
      expect_ident("over");
      expect_punct("{");
      std::vector<Name> types;
      while (!peek_punct("}")) {
        types.push_back(take_ident());
        if (peek_punct(",")) lex_.take();
      }
      expect_punct("}");
      expect_punct(";");
      doc_.expand_pragmas.push_back(types);
    }
  }

  // --- expressions -------------------------------------------------------------

  Label::Deco peek_deco() {
    if (peek_punct("!")) return Label::Deco::Snd;
    if (peek_punct("?")) return Label::Deco::Rcv;
    if (peek_punct(":")) return Label::Deco::Dis;
    return Label::Deco::None;
  }

  LabelTermPtr parse_label_term(const std::set<Name>& declared) {
    LabelTermPtr t;
    if (peek_punct("~")) {
      lex_.take();
      return LabelTerm::make_bar(parse_label_term(declared));
    }
    if (peek_ident("bcomp")) {
      lex_.take();
      expect_punct("(");
      LabelTermPtr a = parse_label_term(declared);
      expect_punct(",");
      LabelTermPtr b = parse_label_term(declared);
      expect_punct(")");
      t = LabelTerm::make_bcomp(a, b);
    } else {
      Name id = take_ident();
      if (peek_punct("(")) {
        lex_.take();
        LabelTermPtr a = parse_label_term(declared);
        expect_punct(")");
        t = LabelTerm::make_fn(id, a);
      } else if (declared.count(id)) {
        t = LabelTerm::make_var(id);
      } else {
        t = LabelTerm::make_const(Label(id));
      }
    }
    Label::Deco d = peek_deco();
    if (d != Label::Deco::None) {
      lex_.take();
      t = t->kind == LabelTerm::Kind::Const ? LabelTerm::make_const(Label(t->constant.base, d))
                                            : LabelTerm::make_deco(t, d);
    }
    return t;
  }

  LabelSetPtr parse_set_expr(const std::set<Name>& declared) {
    LabelSetPtr lhs = parse_set_deco(declared);
    while (peek_punct("|")) {
      lex_.take();
      auto u = LabelSetExpr::make(LabelSetExpr::Kind::Union);
      std::const_pointer_cast<LabelSetExpr>(u)->a = lhs;
      std::const_pointer_cast<LabelSetExpr>(u)->b = parse_set_deco(declared);
      lhs = u;
    }
    return lhs;
  }

  LabelSetPtr parse_set_deco(const std::set<Name>& declared) {
    LabelSetPtr s = parse_set_primary(declared);
    while (true) {
      Label::Deco d = peek_deco();
      if (d == Label::Deco::None) break;
      lex_.take();
      auto ds = LabelSetExpr::make(LabelSetExpr::Kind::Deco);
      std::const_pointer_cast<LabelSetExpr>(ds)->a = s;
      std::const_pointer_cast<LabelSetExpr>(ds)->deco = d;
      s = ds;
    }
    return s;
  }

  LabelSetPtr parse_set_primary(const std::set<Name>& declared) {
    if (peek_punct("~")) {
      lex_.take();
      auto b = LabelSetExpr::make(LabelSetExpr::Kind::Bar);
      std::const_pointer_cast<LabelSetExpr>(b)->a = parse_set_primary(declared);
      return b;
    }
    if (peek_punct("(")) {
      lex_.take();
      LabelSetPtr s = parse_set_expr(declared);
      expect_punct(")");
      return s;
    }
    if (peek_punct("{")) {
      lex_.take();
      auto e = LabelSetExpr::make(LabelSetExpr::Kind::Enum);
      while (!peek_punct("}")) {
        std::const_pointer_cast<LabelSetExpr>(e)->elems.push_back(parse_label_term(declared));
        if (peek_punct(",")) lex_.take();
      }
      expect_punct("}");
      return e;
    }
    Name id = take_ident();
    if (id == "act") return LabelSetExpr::make(LabelSetExpr::Kind::Act);
    if (id == "indicator") return LabelSetExpr::make(LabelSetExpr::Kind::Indicators);
    if (id == "all") return LabelSetExpr::make(LabelSetExpr::Kind::All);
    return LabelSetExpr::make_sort(id);
  }

  SideCondition parse_condition(const std::set<Name>& declared) {
    SideCondition c;
    if (peek_ident("defined")) {
      lex_.take();
      expect_punct("(");
      c.kind = SideCondition::Kind::Defined;
      c.lhs = parse_label_term(declared);
      expect_punct(")");
      return c;
    }
    c.lhs = parse_label_term(declared);
    if (peek_ident("in")) {
      lex_.take();
      c.kind = SideCondition::Kind::InSet;
      c.set = parse_set_expr(declared);
    } else if (peek_ident("notin")) {
      lex_.take();
      c.kind = SideCondition::Kind::NotInSet;
      c.set = parse_set_expr(declared);
    } else if (peek_punct("=")) {
      lex_.take();
      c.kind = SideCondition::Kind::Eq;
      c.rhs = parse_label_term(declared);
    } else {
      lex_.error("expected 'in', 'notin' or '=' in side condition");
    }
    return c;
  }

  /// Rule-target patterns: the generic applicative form fam[p](args), pattern
  /// variables, and recursive calls. Operator parameters that are declared
  /// rule variables become %-markers.
  PExpr parse_term_pattern(const std::set<Name>& declared, const DeSimoneRuleTemplate& r) {
    if (peek_punct("<")) {
      lex_.take();
      Name head = take_ident();
      expect_punct("|");
      auto spec = std::make_shared<RecSpec>();
      bool braced = peek_punct("{");
      if (braced) lex_.take();
      while (true) {
        Name x = take_ident();
        expect_punct("=");
        spec->bindings[x] = parse_term_pattern(declared, r);
        if (peek_punct(",")) {
          lex_.take();
          continue;
        }
        break;
      }
      if (braced) expect_punct("}");
      expect_punct(">");
      return mk_rec(head, spec);
    }
    Name id = take_ident();
    const OperatorFamily* fam = doc_.signature.find(id);
    if (!fam) return mk_var(id);
    OpParamValue param;
    if (peek_punct("[")) {
      lex_.take();
      Name pv = take_ident();
      expect_punct("]");
      if (declared.count(pv))
        param = marker_param(fam->param_kind, pv);
      else
        lex_.error("operator parameter '" + pv + "' is not a declared variable");
    }
    std::vector<PExpr> args;
    expect_punct("(");
    while (!peek_punct(")")) {
      args.push_back(parse_term_pattern(declared, r));
      if (peek_punct(",")) lex_.take();
    }
    expect_punct(")");
    return mk_app(doc_.signature.instantiate(id, std::move(param)), std::move(args));
  }
};

// ---------------------------------------------------------------------------
// Elaboration: document -> checked TSSS.
// ---------------------------------------------------------------------------

struct LoadResult {
  Tsss tsss;
  FormatReport de_simone;
  FormatReport successor_format;

  bool pass() const { return de_simone.pass() && successor_format.pass(); }
};

inline LabelUniverse build_universe(const DslDocument& doc) {
  LabelUniverse u;
  u.sorts = doc.sorts;
  u.functions = doc.functions;
  Bindings none;
  for (const auto& [name, expr] : doc.label_defs) {
    std::set<Label> value = expr->eval(u, none);
    if (name == "act") {
      u.act = value;
      for (const auto& l : value) u.labels.insert(l);
    } else if (name == "indicator") {
      for (const auto& l : value) u.labels.insert(l);
    } else {
      u.classes[name] = value;
    }
  }
  return u;
}

inline LoadResult load_language(const std::string& text,
                                const std::map<Name, std::set<Name>>& sort_overrides = {}) {
  DslParser parser(text, sort_overrides);
  DslDocument doc = parser.parse();

  LoadResult out;
  out.tsss.tss.sig = doc.signature;
  out.tsss.tss.universe = build_universe(doc);
  out.tsss.tss.templates = doc.rules;
  out.tsss.successor_templates = doc.successor_rules;
  for (const auto& types : doc.expand_pragmas) {
    auto expanded = expand_indicator_identity(out.tsss.tss, types);
    for (auto& t : expanded) out.tsss.successor_templates.push_back(std::move(t));
  }
  out.de_simone = check_de_simone(out.tsss.tss);
  out.successor_format = check_successor_format(out.tsss);
  return out;
}

/// Parse and check; failures are an error carrying the diagnostics.
inline Tsss parse_language(const std::string& text,
                           const std::map<Name, std::set<Name>>& sort_overrides = {}) {
  LoadResult r = load_language(text, sort_overrides);
  if (!r.pass())
    fail("FormatError", "\n" + r.de_simone.str() + r.successor_format.str());
  return std::move(r.tsss);
}

// ---------------------------------------------------------------------------
// Term parser (the CLI surface syntax).
//   choice > parallel > prefix > postfix > atom
//   0, a.P, P+Q, P|Q, P\{a,b}, P[f], P^s, <X | X = a.X, Y = b.Y>
// ---------------------------------------------------------------------------

class TermParser {
 public:
  TermParser(const Tss& tss, const std::string& src) : tss_(tss), lex_(src) {
    for (const auto& [id, fam] : tss.sig.families) {
      if (fam.display == OpDisplayKind::Token) tokens_[fam.token] = id;
      if (fam.display == OpDisplayKind::PrefixDot) prefix_ = id;
      if (fam.display == OpDisplayKind::Infix && fam.token == "+") plus_ = id;
      if (fam.display == OpDisplayKind::Infix && fam.token == "|") par_ = id;
      if (fam.display == OpDisplayKind::PostfixRestrict) res_ = id;
      if (fam.display == OpDisplayKind::PostfixRename) ren_ = id;
      if (fam.display == OpDisplayKind::PostfixSignal) sig_ = id;
    }
  }

  PExpr parse() {
    PExpr e = parse_choice();
    if (lex_.peek().kind != dsl::Token::Kind::End) lex_.error("trailing input after term");
    return e;
  }

  PExpr parse_partial() { return parse_choice(); }
  /// Operand-level parse: stops before any top-level infix operator.
  PExpr parse_partial_prefix() { return parse_prefix(); }
  bool at_end() const { return lex_.peek().kind == dsl::Token::Kind::End; }
  std::size_t consumed() const { return lex_.peek().offset; }

  RecPtr parse_rec_spec() {
    auto spec = std::make_shared<RecSpec>();
    bool braced = peek_punct("{");
    if (braced) lex_.take();
    while (true) {
      Name x = take_ident();
      expect_punct("=");
      spec->bindings[x] = parse_choice();
      if (peek_punct(",")) {
        lex_.take();
        continue;
      }
      break;
    }
    if (braced) expect_punct("}");
    if (lex_.peek().kind != dsl::Token::Kind::End) lex_.error("trailing input after spec");
    return spec;
  }

 private:
  const Tss& tss_;
  dsl::Lexer lex_;
  std::map<std::string, Name> tokens_;
  Name prefix_, plus_, par_, res_, ren_, sig_;

  bool peek_punct(const std::string& p) const {
    return lex_.peek().kind == dsl::Token::Kind::Punct && lex_.peek().text == p;
  }
  void expect_punct(const std::string& p) {
    if (!peek_punct(p)) lex_.error("expected '" + p + "'");
    lex_.take();
  }
  Name take_ident() {
    if (lex_.peek().kind != dsl::Token::Kind::Ident) lex_.error("expected an identifier");
    return lex_.take().text;
  }

  PExpr parse_choice() {
    PExpr e = parse_par();
    while (peek_punct("+")) {
      lex_.take();
      if (plus_.empty()) lex_.error("language has no choice operator");
      e = mk_app(tss_.sig.instantiate(plus_), {e, parse_par()});
    }
    return e;
  }

  PExpr parse_par() {
    PExpr e = parse_prefix();
    while (peek_punct("|")) {
      lex_.take();
      if (par_.empty()) lex_.error("language has no parallel operator");
      e = mk_app(tss_.sig.instantiate(par_), {e, parse_prefix()});
    }
    return e;
  }

  /// A prefix `l.P` is recognized by a label token followed by '.'.
  PExpr parse_prefix() {
    if (peek_punct("~")) {
      lex_.take();
      Name base = take_ident();
      Label l = Label::bar(base);
      expect_punct(".");
      return make_prefix(l, parse_prefix());
    }
    if (lex_.peek().kind == dsl::Token::Kind::Ident) {
      Name id = lex_.peek().text;
      // Lookahead: identifier (+ optional broadcast decoration) then '.'.
      auto save = lex_.save();
      lex_.take();
      Label::Deco d = Label::Deco::None;
      if (peek_punct("!")) d = Label::Deco::Snd;
      if (peek_punct("?")) d = Label::Deco::Rcv;
      if (peek_punct(":")) d = Label::Deco::Dis;
      if (d != Label::Deco::None) lex_.take();
      if (peek_punct(".")) {
        lex_.take();
        return make_prefix(Label(id, d), parse_prefix());
      }
      lex_.restore(save);
    }
    return parse_postfix();
  }

  PExpr make_prefix(const Label& l, PExpr body) {
    if (prefix_.empty()) lex_.error("language has no prefix operator");
    const OperatorFamily& fam = tss_.sig.families.at(prefix_);
    if (fam.label_range) {
      Bindings none;
      auto range = fam.label_range->eval(tss_.universe, none);
      if (!range.count(l)) lex_.error("label '" + l.str() + "' cannot prefix");
    }
    return mk_app(tss_.sig.instantiate(prefix_, OpParamValue::of_label(l)), {std::move(body)});
  }

  PExpr parse_postfix() {
    PExpr e = parse_atom();
    while (true) {
      if (peek_punct("\\")) {
        lex_.take();
        if (res_.empty()) lex_.error("language has no restriction operator");
        std::set<Label> ls;
        if (peek_punct("{")) {
          lex_.take();
          while (!peek_punct("}")) {
            ls.insert(Label(take_ident()));
            if (peek_punct(",")) lex_.take();
          }
          expect_punct("}");
        } else {
          ls.insert(Label(take_ident()));
        }
        e = mk_app(tss_.sig.instantiate(res_, OpParamValue::of_set(ls)), {e});
      } else if (peek_punct("[")) {
        lex_.take();
        Name f = take_ident();
        expect_punct("]");
        if (ren_.empty()) lex_.error("language has no relabelling operator");
        if (!tss_.universe.function(f)) lex_.error("undeclared relabelling '" + f + "'");
        e = mk_app(tss_.sig.instantiate(ren_, OpParamValue::of_fn(f)), {e});
      } else if (peek_punct("^")) {
        lex_.take();
        if (sig_.empty()) lex_.error("language has no signalling operator");
        e = mk_app(tss_.sig.instantiate(sig_, OpParamValue::of_label(Label(take_ident()))),
                   {e});
      } else {
        break;
      }
    }
    return e;
  }

  PExpr parse_atom() {
    if (peek_punct("(")) {
      lex_.take();
      PExpr e = parse_choice();
      expect_punct(")");
      return e;
    }
    if (peek_punct("<")) {
      lex_.take();
      Name head = take_ident();
      expect_punct("|");
      auto spec = std::make_shared<RecSpec>();
      bool braced = peek_punct("{");
      if (braced) lex_.take();
      while (true) {
        Name x = take_ident();
        expect_punct("=");
        spec->bindings[x] = parse_choice();
        if (peek_punct(",")) {
          lex_.take();
          continue;
        }
        break;
      }
      if (braced) expect_punct("}");
      expect_punct(">");
      return mk_rec(head, spec);
    }
    Name id = take_ident();
    auto tok = tokens_.find(id);
    if (tok != tokens_.end()) return mk_app(tss_.sig.instantiate(tok->second), {});
    // Generic applicative form for declared operators; variables otherwise.
    if (tss_.sig.find(id) && peek_punct("(")) {
      lex_.take();
      std::vector<PExpr> args;
      while (!peek_punct(")")) {
        args.push_back(parse_choice());
        if (peek_punct(",")) lex_.take();
      }
      expect_punct(")");
      return mk_app(tss_.sig.instantiate(id), std::move(args));
    }
    return mk_var(id);
  }
};

inline PExpr parse_term(const Tss& tss, const std::string& src) {
  return TermParser(tss, src).parse();
}

inline RecPtr parse_rec_spec(const Tss& tss, const std::string& src) {
  return TermParser(tss, src).parse_rec_spec();
}

// ---------------------------------------------------------------------------
// Transition-expression parser: the inverse of render_texpr. Accepts
//   (tx :: P -l-> Q)           variable expressions
//   rec_Act(X, {X = ..}, E)    recursion wrappers
//   ->l E                      prefix transitions
//   E +L Q, P |R E, ...        infix binary constructors
//   E\{a,b}, E[f]              postfix restriction / relabelling
//   b:0, b:a.P                 broadcast discards
//   NAME[params](args)         any constructor in applicative form
// ---------------------------------------------------------------------------

class TExprParser {
 public:
  TExprParser(const Tss& tss, const std::string& src)
      : tss_(tss), src_(src), lex_(src_) {}

  TExpr parse() {
    TExpr e = parse_infix();
    if (lex_.peek().kind != dsl::Token::Kind::End)
      lex_.error("trailing input after transition expression");
    return e;
  }

 private:
  const Tss& tss_;
  std::string src_;
  dsl::Lexer lex_;

  bool peek_punct(const std::string& p) const {
    return lex_.peek().kind == dsl::Token::Kind::Punct && lex_.peek().text == p;
  }
  void expect_punct(const std::string& p) {
    if (!peek_punct(p)) lex_.error("expected '" + p + "'");
    lex_.take();
  }
  Name take_ident() {
    if (lex_.peek().kind != dsl::Token::Kind::Ident) lex_.error("expected an identifier");
    return lex_.take().text;
  }

  Label parse_label() {
    Label l;
    if (peek_punct("~")) {
      lex_.take();
      l = Label::bar(take_ident());
    } else {
      l = Label(take_ident());
      if (peek_punct("!")) {
        lex_.take();
        l.deco = Label::Deco::Snd;
      } else if (peek_punct("?")) {
        lex_.take();
        l.deco = Label::Deco::Rcv;
      } else if (peek_punct(":")) {
        lex_.take();
        l.deco = Label::Deco::Dis;
      }
    }
    return l;
  }

  /// Operands of infix constructors are transition expressions or process
  /// terms; try the transition reading first, then fall back to a term.
  struct Operand {
    TExpr trans;
    PExpr proc;
  };

  Operand parse_operand() {
    auto save = lex_.save();
    try {
      return Operand{parse_atom(), nullptr};
    } catch (const Error&) {
      lex_.restore(save);
    }
    return Operand{nullptr, parse_proc_atom()};
  }

  /// Delegate a process operand to the term parser on the remaining input,
  /// then resynchronize this lexer at the term's end. Rendered process
  /// operands inside transition expressions never carry infix tails, so the
  /// greedy term parse stops at the right place.
  PExpr parse_proc_atom(bool full = false) {
    std::string rest = src_.substr(lex_.peek().offset);
    TermParser tp(tss_, rest);
    PExpr e = full ? tp.parse_partial() : tp.parse_partial_prefix();
    resync(lex_.peek().offset + tp.consumed());
    return e;
  }

  void resync(std::size_t offset) {
    dsl::Lexer fresh(src_);
    while (fresh.peek().kind != dsl::Token::Kind::End && fresh.peek().offset < offset)
      fresh.take();
    lex_.restore(fresh.save());
  }

  TExpr parse_infix() {
    Operand lhs = parse_operand();
    while (true) {
      std::string tok;
      auto save = lex_.save();
      if (peek_punct("+") || peek_punct("|")) {
        tok = lex_.take().text;
        if (lex_.peek().kind == dsl::Token::Kind::Ident) {
          tok += lex_.take().text;
        } else {
          lex_.restore(save);
          break;
        }
      } else {
        break;
      }
      auto templates = tss_.templates_for_name(tok);
      if (templates.empty()) lex_.error("unknown transition constructor '" + tok + "'");
      Operand rhs = parse_operand();
      auto trig = templates[0]->trigger_set();
      auto to_arg = [&](Operand& o, bool want_trans) -> TArg {
        if (want_trans) {
          if (!o.trans) lex_.error("'" + tok + "' needs a transition at this position");
          return TArg{nullptr, o.trans};
        }
        if (!o.proc) {
          // A transition reading of a bare process term cannot happen; a
          // parenthesized transition where a process is required is an error.
          lex_.error("'" + tok + "' needs a process at this position");
        }
        return TArg{o.proc, nullptr};
      };
      bool t1 = std::find(trig.begin(), trig.end(), 1) != trig.end();
      bool t2 = std::find(trig.begin(), trig.end(), 2) != trig.end();
      TExpr combined = mk_ctor(RuleName{tok, {}}, {to_arg(lhs, t1), to_arg(rhs, t2)});
      lhs = Operand{combined, nullptr};
    }
    if (!lhs.trans) lex_.error("expected a transition expression");
    return lhs.trans;
  }

  TExpr parse_postfix(TExpr e) {
    while (true) {
      if (peek_punct("\\")) {
        lex_.take();
        std::set<Label> ls;
        if (peek_punct("{")) {
          lex_.take();
          while (!peek_punct("}")) {
            ls.insert(Label(take_ident()));
            if (peek_punct(",")) lex_.take();
          }
          expect_punct("}");
        } else {
          ls.insert(Label(take_ident()));
        }
        e = mk_ctor(RuleName{"\\%1", {OpParamValue::of_set(ls)}}, {TArg{nullptr, e}});
      } else if (peek_punct("[")) {
        lex_.take();
        Name f = take_ident();
        expect_punct("]");
        e = mk_ctor(RuleName{"[%1]", {OpParamValue::of_fn(f)}}, {TArg{nullptr, e}});
      } else {
        break;
      }
    }
    return e;
  }

  TExpr parse_atom() {
    if (peek_punct("->")) {
      lex_.take();
      Label l = parse_label();
      Operand arg = parse_operand();
      if (!arg.proc) lex_.error("prefix transitions take a process argument");
      return parse_postfix(mk_ctor(RuleName{"->%1", {OpParamValue::of_label(l)}},
                                   {TArg{arg.proc, nullptr}}));
    }
    if (peek_punct("(")) {
      lex_.take();
      // (tx :: ...), (->~s)(P), or a parenthesized transition expression.
      if (lex_.peek().kind == dsl::Token::Kind::Ident) {
        auto save = lex_.save();
        Name tx = take_ident();
        if (peek_punct(":")) {
          lex_.take();
          expect_punct(":");
          PExpr src = parse_proc_atom();
          expect_punct("-");
          Label l = parse_label();
          expect_punct("->");
          PExpr tgt = parse_proc_atom();
          expect_punct(")");
          return parse_postfix(mk_tvar(tx, Literal{src, l, tgt}));
        }
        lex_.restore(save);
      }
      if (peek_punct("->")) {
        auto save = lex_.save();
        lex_.take();
        if (peek_punct("~")) {
          lex_.take();
          Name s = take_ident();
          if (peek_punct(")")) {
            lex_.take();
            expect_punct("(");
            PExpr arg = parse_proc_atom();
            expect_punct(")");
            return parse_postfix(mk_ctor(RuleName{"(->~%1)", {OpParamValue::of_label(Label(s))}},
                                         {TArg{arg, nullptr}}));
          }
        }
        lex_.restore(save);
      }
      TExpr inner = parse_infix();
      expect_punct(")");
      return parse_postfix(inner);
    }
    if (lex_.peek().kind == dsl::Token::Kind::Ident) {
      Name id = lex_.peek().text;
      if (id == kRecActName || id == kRecInName) {
        lex_.take();
        bool act = id == kRecActName;
        expect_punct("(");
        Name x = take_ident();
        expect_punct(",");
        PExpr spec_holder = parse_spec_braces();
        expect_punct(",");
        TExpr inner = parse_infix();
        expect_punct(")");
        return parse_postfix(mk_rec_texpr(act, x, spec_holder->rec, inner));
      }
      // Discard forms b:0 and b:a.P, or an applicative constructor name.
      auto save = lex_.save();
      lex_.take();
      if (peek_punct(":")) {
        lex_.take();
        if (lex_.peek().kind == dsl::Token::Kind::Ident && lex_.peek().text == "0") {
          lex_.take();
          return parse_postfix(
              mk_ctor(RuleName{"%1:0", {OpParamValue::of_label(Label(id))}}, {}));
        }
        Label a = parse_label();
        expect_punct(".");
        PExpr arg = parse_proc_atom();
        return parse_postfix(mk_ctor(RuleName{"%1:%2.",
                                              {OpParamValue::of_label(Label(id)),
                                               OpParamValue::of_label(a)}},
                                     {TArg{arg, nullptr}}));
      }
      lex_.restore(save);
    }
    // Applicative fallback: NAME or "FMT"[params](args).
    return parse_applicative();
  }

  /// Parse {X = spec} as a recursion body holder.
  PExpr parse_spec_braces() {
    expect_punct("{");
    auto spec = std::make_shared<RecSpec>();
    Name first;
    while (true) {
      Name x = take_ident();
      if (first.empty()) first = x;
      expect_punct("=");
      spec->bindings[x] = parse_proc_atom(/*full=*/true);
      if (peek_punct(",")) {
        lex_.take();
        continue;
      }
      break;
    }
    expect_punct("}");
    return mk_rec(first, spec);
  }

  TExpr parse_applicative() {
    std::string fmt;
    std::vector<OpParamValue> params;
    if (lex_.peek().kind == dsl::Token::Kind::String) {
      fmt = lex_.take().text;
    } else {
      // Render-form constructor heads like ^sA, ^sI.
      if (peek_punct("^")) {
        lex_.take();
        Name id = take_ident();
        if (id.size() > 1 && (id.back() == 'A' || id.back() == 'I')) {
          fmt = id.back() == 'A' ? "^%1A" : "^%1I";
          params.push_back(OpParamValue::of_label(Label(id.substr(0, id.size() - 1))));
        } else {
          lex_.error("unknown constructor '^" + id + "'");
        }
      } else {
        lex_.error("expected a transition expression");
      }
    }
    if (peek_punct("[")) {
      lex_.take();
      while (!peek_punct("]")) {
        if (peek_punct("{")) {
          lex_.take();
          std::set<Label> ls;
          while (!peek_punct("}")) {
            ls.insert(parse_label());
            if (peek_punct(",")) lex_.take();
          }
          expect_punct("}");
          params.push_back(OpParamValue::of_set(ls));
        } else {
          params.push_back(OpParamValue::of_label(parse_label()));
        }
        if (peek_punct(",")) lex_.take();
      }
      expect_punct("]");
    }
    auto templates = tss_.templates_for_name(fmt);
    if (templates.empty()) lex_.error("unknown transition constructor '" + fmt + "'");
    auto trig = templates[0]->trigger_set();
    std::vector<TArg> args;
    expect_punct("(");
    int i = 1;
    while (!peek_punct(")")) {
      bool want_trans = std::find(trig.begin(), trig.end(), i) != trig.end();
      if (want_trans) {
        args.push_back(TArg{nullptr, parse_infix()});
      } else {
        args.push_back(TArg{parse_proc_atom(), nullptr});
      }
      if (peek_punct(",")) lex_.take();
      ++i;
    }
    expect_punct(")");
    return parse_postfix(mk_ctor(RuleName{fmt, std::move(params)}, std::move(args)));
  }
};

inline TExpr parse_transition_expr(const Tss& tss, const std::string& src) {
  return TExprParser(tss, src).parse();
}

}  // namespace epsos
