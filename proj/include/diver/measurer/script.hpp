#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "diver/sim/device.hpp"

namespace diver::measurer {

using Value = std::variant<double, bool>;
std::string format_value(const Value& v);

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

/// Expression grammar, loosest binding first:
///   or      := and ('or' and)*
///   and     := not ('and' not)*
///   not     := 'not' not | cmp
///   cmp     := sum (('<'|'<='|'>'|'>='|'=='|'!=') sum)?
///   sum     := product (('+'|'-') product)*
///   product := unary (('*'|'/') unary)*
///   unary   := '-' unary | primary
///   primary := number | 'true' | 'false' | name '(' args ')' | '(' or ')'
/// The Unicode forms × ÷ − ≤ ≥ are accepted as aliases.
/// Only whitelisted device reads may be called: uptime() rtc() ain(ch)
/// aout(ch) din(ch) dout(ch).
ExprPtr parse_expr(std::string_view text);
Value evaluate(const Expr& e, const sim::DeviceState& s);
Value eval_text(std::string_view text, const sim::DeviceState& s);

/// A compiled callback body. Statements are separated by ';' or newlines:
///   if <expr> then <statement>
///   syslog write "<text>"
///   io write <kind> <channel> <expr>
class Script {
 public:
  static Script compile(std::string_view source);

  /// Runs every statement against the device. Errors are written to syslog
  /// rather than propagated, so a faulty script cannot stop the timer tree.
  void run(sim::Device& device) const;

  const std::string& source() const { return source_; }
  std::size_t size() const { return statements_.size(); }

  struct Statement;

 private:
  std::string source_;
  std::vector<std::shared_ptr<const Statement>> statements_;
};

}  // namespace diver::measurer
