#pragma once

#include <epsos/epsos.hpp>

namespace epsos::testing {

/// A bare CCS-shaped signature for unit tests below the DSL layer.
inline Signature test_signature() {
  Signature sig;
  OperatorFamily nil{"nil", 0, OpParamValue::Kind::None, nullptr, "", OpDisplayKind::Token,
                     "0", 100};
  OperatorFamily pre{"pre", 1, OpParamValue::Kind::Label, nullptr, "",
                     OpDisplayKind::PrefixDot, "", 50};
  OperatorFamily plus{"plus", 2, OpParamValue::Kind::None, nullptr, "", OpDisplayKind::Infix,
                      "+", 20};
  OperatorFamily par{"par", 2, OpParamValue::Kind::None, nullptr, "", OpDisplayKind::Infix,
                     "|", 30};
  sig.families = {{"nil", nil}, {"pre", pre}, {"plus", plus}, {"par", par}};
  return sig;
}

inline PExpr nil(const Signature& sig) { return mk_app(sig.instantiate("nil"), {}); }

inline PExpr pre(const Signature& sig, const std::string& l, PExpr p) {
  return mk_app(sig.instantiate("pre", OpParamValue::of_label(Label(l))), {std::move(p)});
}

inline PExpr plus(const Signature& sig, PExpr a, PExpr b) {
  return mk_app(sig.instantiate("plus"), {std::move(a), std::move(b)});
}

inline PExpr par(const Signature& sig, PExpr a, PExpr b) {
  return mk_app(sig.instantiate("par"), {std::move(a), std::move(b)});
}

inline RecPtr spec1(const Name& x, PExpr body) {
  auto s = std::make_shared<RecSpec>();
  s->bindings[x] = std::move(body);
  return s;
}

}  // namespace epsos::testing
