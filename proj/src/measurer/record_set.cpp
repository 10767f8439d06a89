#include "diver/measurer/record_set.hpp"

#include <charconv>
#include <cmath>

#include "diver/measurer/command.hpp"

namespace diver::measurer {

namespace {

void append_cell(std::string& out, std::string_view cell) {
  for (char c : cell) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\t': out += "\\t"; break;
      case '\n': out += "\\n"; break;
      default: out.push_back(c);
    }
  }
}

std::vector<std::string> split_line(std::string_view line) {
  std::vector<std::string> cells(1);
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (c == '\t') {
      cells.emplace_back();
    } else if (c == '\\' && i + 1 < line.size()) {
      char e = line[++i];
      cells.back().push_back(e == 't' ? '\t' : e == 'n' ? '\n' : e);
    } else {
      cells.back().push_back(c);
    }
  }
  return cells;
}

void append_line(std::string& out, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out.push_back('\t');
    append_cell(out, cells[i]);
  }
  out.push_back('\n');
}

}  // namespace

void RecordSet::add_row(std::vector<std::string> row) {
  if (row.size() != columns.size())
    throw Error(ErrorCode::BadArgument, "row arity " + std::to_string(row.size()) + " != " +
                                            std::to_string(columns.size()));
  rows.push_back(std::move(row));
}

std::size_t RecordSet::column(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return i;
  throw Error(ErrorCode::BadArgument, "no column '" + std::string(name) + "' in " + kind);
}

bool RecordSet::has_column(std::string_view name) const {
  for (const auto& c : columns)
    if (c == name) return true;
  return false;
}

const std::string& RecordSet::at(std::size_t row, std::string_view col) const {
  return rows.at(row).at(column(col));
}

std::string RecordSet::to_text() const {
  std::string out = "#" + kind + " tick=" + std::to_string(tick) + "\n";
  append_line(out, columns);
  for (const auto& r : rows) append_line(out, r);
  return out;
}

RecordSet RecordSet::parse(std::string_view text) {
  std::vector<std::string_view> lines;
  while (!text.empty()) {
    auto nl = text.find('\n');
    lines.push_back(text.substr(0, nl));
    if (nl == std::string_view::npos) break;
    text.remove_prefix(nl + 1);
  }
  if (lines.size() < 2 || !lines[0].starts_with('#'))
    throw Error(ErrorCode::ParseError, "not a record set");
  auto head = Command::parse(lines[0].substr(1));
  RecordSet rs;
  rs.kind = head.verb();
  rs.tick = static_cast<std::uint64_t>(head.integer_or("tick", 0));
  rs.columns = lines[1].empty() ? std::vector<std::string>{} : split_line(lines[1]);
  for (std::size_t i = 2; i < lines.size(); ++i) {
    auto cells = split_line(lines[i]);
    if (cells.size() != rs.columns.size())
      throw Error(ErrorCode::ParseError, "row " + std::to_string(i - 2) + " has wrong arity");
    rs.rows.push_back(std::move(cells));
  }
  return rs;
}

RecordSet ack(std::uint64_t tick, std::string_view result) {
  RecordSet rs("ack", tick, {"result"});
  rs.add_row({std::string(result)});
  return rs;
}

RecordSet subscription_ack(std::uint64_t tick, std::uint64_t sub_id) {
  RecordSet rs("ack", tick, {"sub_id"});
  rs.add_row({std::to_string(sub_id)});
  return rs;
}

std::string error_text(ErrorCode code, std::string_view msg) {
  return "#error code=" + std::string(error_name(code)) + " msg=" + quote(msg) + "\n";
}

std::string error_text(const Error& e) { return error_text(e.code(), e.what()); }

bool is_error_text(std::string_view text) { return text.starts_with("#error "); }

RecordSet parse_response(std::string_view text) {
  if (is_error_text(text)) {
    auto nl = text.find('\n');
    auto cmd = Command::parse(text.substr(1, nl == std::string_view::npos ? text.size() - 1 : nl - 1));
    throw Error(error_from_name(cmd.text_or("code", "Unknown")), cmd.text_or("msg", ""));
  }
  return RecordSet::parse(text);
}

std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0) return "0";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace diver::measurer
