#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace diver::measurer {

struct Arg {
  std::string key;  // empty for positional arguments
  std::string value;
  bool quoted = false;
};

/// `verb key=value key="quoted text" positional ...`
///
/// Values stay textual until a handler asks for a typed view; the typed
/// getters throw BadArgument(name) on conversion failure.
class Command {
 public:
  Command() = default;
  explicit Command(std::string verb) : verb_(std::move(verb)) {}

  static Command parse(std::string_view text);

  const std::string& verb() const { return verb_; }
  const std::vector<Arg>& args() const { return args_; }
  /// Raw text after the verb, as received.
  const std::string& rest() const { return rest_; }

  Command& set(std::string key, std::string value, bool quoted = false);
  Command& add_positional(std::string value, bool quoted = false);
  Command& erase(std::string_view key);

  bool has(std::string_view key) const;
  std::optional<std::string> get(std::string_view key) const;
  std::string text(std::string_view key) const;
  std::string text_or(std::string_view key, std::string fallback) const;
  std::int64_t integer(std::string_view key) const;
  std::int64_t integer_or(std::string_view key, std::int64_t fallback) const;
  double real(std::string_view key) const;
  double real_or(std::string_view key, double fallback) const;
  std::uint64_t address(std::string_view key) const;

  std::vector<std::string> positionals() const;
  /// Names positional arguments in order (`syslog write "hb"` -> action=write text=hb).
  void bind_positionals(const std::vector<std::string_view>& names);

  /// Canonical single-line form, parseable by parse().
  std::string to_text() const;

 private:
  std::string verb_;
  std::vector<Arg> args_;
  std::string rest_;
};

std::string quote(std::string_view s);

}  // namespace diver::measurer
