#include "diver/measurer/command.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>

#include "diver/util/bytes.hpp"
#include "diver/util/error.hpp"

namespace diver::measurer {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; }

std::string read_quoted(std::string_view text, std::size_t& i) {
  std::string out;
  ++i;  // opening quote
  while (i < text.size()) {
    char c = text[i++];
    if (c == '"') return out;
    if (c == '\\') {
      if (i >= text.size()) break;
      char e = text[i++];
      switch (e) {
        case 'n': out.push_back('\n'); break;
        case 't': out.push_back('\t'); break;
        case 'r': out.push_back('\r'); break;
        default: out.push_back(e); break;
      }
    } else {
      out.push_back(c);
    }
  }
  throw Error(ErrorCode::ParseError, "unterminated string literal");
}

std::string read_bare(std::string_view text, std::size_t& i) {
  std::size_t start = i;
  while (i < text.size() && !is_space(text[i])) ++i;
  return std::string(text.substr(start, i - start));
}

bool is_key(std::string_view s) {
  if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-';
  });
}

}  // namespace

std::string quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default: out.push_back(c);
    }
  }
  out.push_back('"');
  return out;
}

Command Command::parse(std::string_view text) {
  while (!text.empty() && is_space(text.back())) text.remove_suffix(1);
  std::size_t i = 0;
  while (i < text.size() && is_space(text[i])) ++i;
  Command cmd;
  cmd.verb_ = read_bare(text, i);
  if (cmd.verb_.empty()) throw Error(ErrorCode::ParseError, "empty command");
  while (i < text.size() && is_space(text[i])) ++i;
  cmd.rest_ = std::string(text.substr(i));

  while (i < text.size()) {
    if (is_space(text[i])) {
      ++i;
      continue;
    }
    if (text[i] == '"') {
      cmd.args_.push_back({"", read_quoted(text, i), true});
    } else {
      std::size_t start = i;
      while (i < text.size() && !is_space(text[i]) && text[i] != '=' && text[i] != '"') ++i;
      auto key = text.substr(start, i - start);
      if (i < text.size() && text[i] == '=' && is_key(key)) {
        ++i;
        if (i < text.size() && text[i] == '"')
          cmd.args_.push_back({std::string(key), read_quoted(text, i), true});
        else
          cmd.args_.push_back({std::string(key), read_bare(text, i), false});
      } else {
        i = start;
        cmd.args_.push_back({"", read_bare(text, i), false});
      }
    }
    if (i < text.size() && !is_space(text[i]))
      throw Error(ErrorCode::ParseError, "expected whitespace after argument");
  }
  return cmd;
}

Command& Command::set(std::string key, std::string value, bool quoted) {
  for (auto& a : args_)
    if (a.key == key) {
      a.value = std::move(value);
      a.quoted = quoted;
      return *this;
    }
  args_.push_back({std::move(key), std::move(value), quoted});
  return *this;
}

Command& Command::add_positional(std::string value, bool quoted) {
  args_.push_back({"", std::move(value), quoted});
  return *this;
}

Command& Command::erase(std::string_view key) {
  std::erase_if(args_, [&](const Arg& a) { return a.key == key; });
  return *this;
}

bool Command::has(std::string_view key) const {
  return std::any_of(args_.begin(), args_.end(), [&](const Arg& a) { return a.key == key; });
}

std::optional<std::string> Command::get(std::string_view key) const {
  for (const auto& a : args_)
    if (a.key == key) return a.value;
  return std::nullopt;
}

std::string Command::text(std::string_view key) const {
  auto v = get(key);
  if (!v) throw Error(ErrorCode::BadArgument, "missing argument '" + std::string(key) + "'");
  return *v;
}

std::string Command::text_or(std::string_view key, std::string fallback) const {
  return get(key).value_or(std::move(fallback));
}

std::int64_t Command::integer(std::string_view key) const {
  auto v = text(key);
  std::int64_t out = 0;
  int base = 10;
  std::string_view s = v;
  bool neg = false;
  if (s.starts_with('-')) {
    neg = true;
    s.remove_prefix(1);
  }
  if (s.starts_with("0x") || s.starts_with("0X")) {
    base = 16;
    s.remove_prefix(2);
  }
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out, base);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size())
    throw Error(ErrorCode::BadArgument, std::string(key));
  return neg ? -out : out;
}

std::int64_t Command::integer_or(std::string_view key, std::int64_t fallback) const {
  return has(key) ? integer(key) : fallback;
}

double Command::real(std::string_view key) const {
  auto v = text(key);
  char* end = nullptr;
  double d = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size()) throw Error(ErrorCode::BadArgument, std::string(key));
  return d;
}

double Command::real_or(std::string_view key, double fallback) const {
  return has(key) ? real(key) : fallback;
}

std::uint64_t Command::address(std::string_view key) const {
  try {
    return parse_address(text(key));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::BadArgument) throw Error(ErrorCode::BadArgument, std::string(key));
    throw;
  }
}

std::vector<std::string> Command::positionals() const {
  std::vector<std::string> out;
  for (const auto& a : args_)
    if (a.key.empty()) out.push_back(a.value);
  return out;
}

void Command::bind_positionals(const std::vector<std::string_view>& names) {
  std::size_t n = 0;
  for (auto& a : args_) {
    if (!a.key.empty()) continue;
    // skip names already supplied as key=value
    while (n < names.size() && has(names[n])) ++n;
    if (n >= names.size()) throw Error(ErrorCode::BadArgument, "unexpected argument '" + a.value + "'");
    a.key = std::string(names[n++]);
  }
}

std::string Command::to_text() const {
  std::string out = verb_;
  for (const auto& a : args_) {
    out.push_back(' ');
    if (!a.key.empty()) out += a.key + "=";
    bool needs_quote = a.quoted || a.value.empty() ||
                       std::any_of(a.value.begin(), a.value.end(), [](char c) { return is_space(c) || c == '"' || c == '='; });
    out += needs_quote ? quote(a.value) : a.value;
  }
  return out;
}

}  // namespace diver::measurer
