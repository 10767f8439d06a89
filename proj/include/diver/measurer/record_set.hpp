#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "diver/util/error.hpp"

namespace diver::measurer {

/// Uniform response shape for every back-end.
///
/// Text form:
///   #<kind> tick=<n>
///   col1\tcol2...
///   v1\tv2...
/// Cells escape backslash, tab and newline, so the encoding is canonical.
struct RecordSet {
  std::string kind;
  std::uint64_t tick = 0;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  RecordSet() = default;
  RecordSet(std::string k, std::uint64_t t, std::vector<std::string> cols)
      : kind(std::move(k)), tick(t), columns(std::move(cols)) {}

  /// Throws BadArgument on arity mismatch.
  void add_row(std::vector<std::string> row);
  std::size_t column(std::string_view name) const;
  bool has_column(std::string_view name) const;
  const std::string& at(std::size_t row, std::string_view col) const;

  std::string to_text() const;
  static RecordSet parse(std::string_view text);

  bool operator==(const RecordSet&) const = default;
};

RecordSet ack(std::uint64_t tick, std::string_view result = "ok");
RecordSet subscription_ack(std::uint64_t tick, std::uint64_t sub_id);

std::string error_text(ErrorCode code, std::string_view msg);
std::string error_text(const Error& e);

bool is_error_text(std::string_view text);
/// Parses a response payload; `#error` responses are rethrown as Error.
RecordSet parse_response(std::string_view text);

/// Shortest decimal text that round-trips the double.
std::string format_real(double v);

}  // namespace diver::measurer
