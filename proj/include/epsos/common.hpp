#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace epsos {

using Name = std::string;

/// Error with a stable machine-readable code ("ArityMismatch", "ParseError", ...).
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(code + ": " + what), code_(std::move(code)) {}

  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

[[noreturn]] inline void fail(const std::string& code, const std::string& what) {
  throw Error(code, what);
}

struct SourceSpan {
  int line = 0;
  int column = 0;

  std::string str() const {
    if (line <= 0) return "<builtin>";
    return std::to_string(line) + ":" + std::to_string(column);
  }
};

template <typename Seq>
std::string join(const Seq& items, const std::string& sep) {
  std::string out;
  bool first = true;
  for (const auto& it : items) {
    if (!first) out += sep;
    first = false;
    out += it;
  }
  return out;
}

}  // namespace epsos
