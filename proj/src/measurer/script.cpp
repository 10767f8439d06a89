#include "diver/measurer/script.hpp"

#include <cmath>
#include <cstdlib>

#include "diver/measurer/command.hpp"
#include "diver/measurer/record_set.hpp"
#include "diver/util/error.hpp"

namespace diver::measurer {

enum class Op { Num, Bool, Call, Neg, Not, Add, Sub, Mul, Div, Lt, Le, Gt, Ge, Eq, Ne, And, Or };

struct Expr {
  Op op = Op::Num;
  double number = 0;
  bool boolean = false;
  std::string name;
  std::vector<ExprPtr> args;
};

std::string format_value(const Value& v) {
  if (const auto* b = std::get_if<bool>(&v)) return *b ? "true" : "false";
  return format_real(std::get<double>(v));
}

namespace {

struct Token {
  enum Kind { Number, Name, Symbol, End } kind = End;
  std::string text;
  double number = 0;
};

struct FunctionSpec {
  std::string_view name;
  std::size_t arity;
};

constexpr FunctionSpec kFunctions[] = {{"uptime", 0}, {"rtc", 0},  {"ain", 1},
                                       {"aout", 1},   {"din", 1},  {"dout", 1}};

class Lexer {
 public:
  explicit Lexer(std::string_view s) : s_(s) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (true) {
      skip_space();
      if (i_ >= s_.size()) break;
      out.push_back(next());
    }
    out.push_back({Token::End, "", 0});
    return out;
  }

 private:
  void skip_space() {
    while (i_ < s_.size() && (s_[i_] == ' ' || s_[i_] == '\t' || s_[i_] == '\r' || s_[i_] == '\n')) ++i_;
  }

  bool take(std::string_view lit) {
    if (s_.substr(i_).starts_with(lit)) {
      i_ += lit.size();
      return true;
    }
    return false;
  }

  Token next() {
    char c = s_[i_];
    if (std::isdigit(static_cast<unsigned char>(c)) || (c == '.' && i_ + 1 < s_.size() &&
                                                        std::isdigit(static_cast<unsigned char>(s_[i_ + 1])))) {
      std::string num(s_.substr(i_));
      char* end = nullptr;
      double v = std::strtod(num.c_str(), &end);
      std::size_t used = static_cast<std::size_t>(end - num.c_str());
      // Reject hex floats and similar: plain decimal only.
      for (std::size_t k = 0; k < used; ++k) {
        char d = num[k];
        if (!(std::isdigit(static_cast<unsigned char>(d)) || d == '.' || d == 'e' || d == 'E' || d == '+' ||
              d == '-'))
          throw Error(ErrorCode::ParseError, "malformed number");
      }
      i_ += used;
      return {Token::Number, num.substr(0, used), v};
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = i_;
      while (i_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[i_])) || s_[i_] == '_')) ++i_;
      return {Token::Name, std::string(s_.substr(start, i_ - start)), 0};
    }
    static constexpr std::pair<std::string_view, std::string_view> kSymbols[] = {
        {"<=", "<="}, {">=", ">="}, {"==", "=="}, {"!=", "!="}, {"&&", "and"}, {"||", "or"},
        {"≤", "<="}, {"≥", ">="}, {"×", "*"}, {"÷", "/"}, {"−", "-"},
        {"<", "<"},   {">", ">"},   {"+", "+"},   {"-", "-"},   {"*", "*"},   {"/", "/"},
        {"(", "("},   {")", ")"},   {",", ","},   {"!", "not"}};
    for (const auto& [lit, canon] : kSymbols)
      if (take(lit)) return {canon == "and" || canon == "or" || canon == "not" ? Token::Name : Token::Symbol,
                             std::string(canon), 0};
    throw Error(ErrorCode::ParseError, "unexpected character '" + std::string(1, c) + "'");
  }

  std::string_view s_;
  std::size_t i_ = 0;
};

ExprPtr node(Op op, std::vector<ExprPtr> args = {}) {
  auto e = std::make_shared<Expr>();
  e->op = op;
  e->args = std::move(args);
  return e;
}

class Parser {
 public:
  explicit Parser(std::vector<Token> t) : t_(std::move(t)) {}

  ExprPtr parse() {
    auto e = parse_or();
    if (peek().kind != Token::End) throw Error(ErrorCode::ParseError, "unexpected '" + peek().text + "'");
    return e;
  }

 private:
  const Token& peek() const { return t_[i_]; }
  bool accept(std::string_view text) {
    if (peek().kind != Token::End && peek().kind != Token::Number && peek().text == text) {
      ++i_;
      return true;
    }
    return false;
  }
  void expect(std::string_view text) {
    if (!accept(text)) throw Error(ErrorCode::ParseError, "expected '" + std::string(text) + "'");
  }

  ExprPtr parse_or() {
    auto e = parse_and();
    while (accept("or")) e = node(Op::Or, {e, parse_and()});
    return e;
  }
  ExprPtr parse_and() {
    auto e = parse_not();
    while (accept("and")) e = node(Op::And, {e, parse_not()});
    return e;
  }
  ExprPtr parse_not() {
    if (accept("not")) return node(Op::Not, {parse_not()});
    return parse_cmp();
  }
  ExprPtr parse_cmp() {
    auto e = parse_sum();
    static constexpr std::pair<std::string_view, Op> kCmp[] = {
        {"<=", Op::Le}, {">=", Op::Ge}, {"<", Op::Lt}, {">", Op::Gt}, {"==", Op::Eq}, {"!=", Op::Ne}};
    for (const auto& [sym, op] : kCmp)
      if (peek().kind == Token::Symbol && peek().text == sym) {
        ++i_;
        return node(op, {e, parse_sum()});
      }
    return e;
  }
  ExprPtr parse_sum() {
    auto e = parse_product();
    while (true) {
      if (accept("+")) e = node(Op::Add, {e, parse_product()});
      else if (accept("-")) e = node(Op::Sub, {e, parse_product()});
      else return e;
    }
  }
  ExprPtr parse_product() {
    auto e = parse_unary();
    while (true) {
      if (accept("*")) e = node(Op::Mul, {e, parse_unary()});
      else if (accept("/")) e = node(Op::Div, {e, parse_unary()});
      else return e;
    }
  }
  ExprPtr parse_unary() {
    if (accept("-")) return node(Op::Neg, {parse_unary()});
    return parse_primary();
  }
  ExprPtr parse_primary() {
    const Token& t = peek();
    if (t.kind == Token::Number) {
      ++i_;
      auto e = std::make_shared<Expr>();
      e->number = t.number;
      return e;
    }
    if (accept("(")) {
      auto e = parse_or();
      expect(")");
      return e;
    }
    if (t.kind == Token::Name) {
      std::string name = t.text;
      ++i_;
      if (name == "true" || name == "false") {
        auto e = std::make_shared<Expr>();
        e->op = Op::Bool;
        e->boolean = name == "true";
        return e;
      }
      expect("(");
      auto e = std::make_shared<Expr>();
      e->op = Op::Call;
      e->name = name;
      if (!accept(")")) {
        do e->args.push_back(parse_or());
        while (accept(","));
        expect(")");
      }
      const FunctionSpec* spec = nullptr;
      for (const auto& f : kFunctions)
        if (f.name == name) spec = &f;
      if (spec == nullptr) throw Error(ErrorCode::UnknownFunction, "unknown function '" + name + "'");
      if (spec->arity != e->args.size())
        throw Error(ErrorCode::ParseError, name + "() takes " + std::to_string(spec->arity) + " argument(s)");
      return e;
    }
    if (t.kind == Token::End) throw Error(ErrorCode::ParseError, "unexpected end of expression");
    throw Error(ErrorCode::ParseError, "unexpected '" + t.text + "'");
  }

  std::vector<Token> t_;
  std::size_t i_ = 0;
};

double num(const Value& v) {
  if (const auto* d = std::get_if<double>(&v)) return *d;
  throw Error(ErrorCode::TypeError, "expected a number, got a boolean");
}

bool truth(const Value& v) {
  if (const auto* b = std::get_if<bool>(&v)) return *b;
  throw Error(ErrorCode::TypeError, "expected a boolean, got a number");
}

std::size_t channel_arg(double v) {
  if (v < 0 || v != std::floor(v)) throw Error(ErrorCode::ChannelOutOfRange, "channel must be a whole number");
  return static_cast<std::size_t>(v);
}

double read_channel(const std::vector<double>& v, std::size_t ch) {
  if (ch >= v.size()) throw Error(ErrorCode::ChannelOutOfRange, "channel " + std::to_string(ch));
  return v[ch];
}

double read_channel(const std::vector<std::uint8_t>& v, std::size_t ch) {
  if (ch >= v.size()) throw Error(ErrorCode::ChannelOutOfRange, "channel " + std::to_string(ch));
  return v[ch] ? 1.0 : 0.0;
}

Value call(const Expr& e, const sim::DeviceState& s) {
  if (e.name == "uptime") return static_cast<double>(s.uptime_ticks);
  if (e.name == "rtc") return static_cast<double>(s.rtc_ms);
  auto ch = channel_arg(num(evaluate(*e.args[0], s)));
  if (e.name == "ain") return read_channel(s.analog_in, ch);
  if (e.name == "aout") return read_channel(s.analog_out, ch);
  if (e.name == "din") return read_channel(s.digital_in, ch);
  if (e.name == "dout") return read_channel(s.digital_out, ch);
  throw Error(ErrorCode::UnknownFunction, e.name);
}

}  // namespace

ExprPtr parse_expr(std::string_view text) { return Parser(Lexer(text).run()).parse(); }

Value evaluate(const Expr& e, const sim::DeviceState& s) {
  auto arg = [&](std::size_t i) { return evaluate(*e.args[i], s); };
  switch (e.op) {
    case Op::Num: return e.number;
    case Op::Bool: return e.boolean;
    case Op::Call: return call(e, s);
    case Op::Neg: return -num(arg(0));
    case Op::Not: return !truth(arg(0));
    case Op::Add: return num(arg(0)) + num(arg(1));
    case Op::Sub: return num(arg(0)) - num(arg(1));
    case Op::Mul: return num(arg(0)) * num(arg(1));
    case Op::Div: {
      double d = num(arg(1));
      if (d == 0.0) throw Error(ErrorCode::DivByZero, "division by zero");
      return num(arg(0)) / d;
    }
    case Op::Lt: return num(arg(0)) < num(arg(1));
    case Op::Le: return num(arg(0)) <= num(arg(1));
    case Op::Gt: return num(arg(0)) > num(arg(1));
    case Op::Ge: return num(arg(0)) >= num(arg(1));
    case Op::Eq:
    case Op::Ne: {
      auto a = arg(0), b = arg(1);
      if (a.index() != b.index()) throw Error(ErrorCode::TypeError, "comparing a number with a boolean");
      return (a == b) == (e.op == Op::Eq);
    }
    case Op::And: return truth(arg(0)) && truth(arg(1));  // short-circuit
    case Op::Or: return truth(arg(0)) || truth(arg(1));
  }
  throw Error(ErrorCode::ParseError, "corrupt expression");
}

Value eval_text(std::string_view text, const sim::DeviceState& s) { return evaluate(*parse_expr(text), s); }

// ---- statements -------------------------------------------------------------

struct Script::Statement {
  enum Kind { SyslogWrite, IoWrite } kind = SyslogWrite;
  ExprPtr condition;  // optional
  std::string text;
  sim::IoKind io_kind = sim::IoKind::AnalogOut;
  std::size_t channel = 0;
  ExprPtr value;
};

namespace {

std::vector<std::string> split_statements(std::string_view src) {
  std::vector<std::string> out(1);
  bool in_string = false;
  for (std::size_t i = 0; i < src.size(); ++i) {
    char c = src[i];
    if (in_string) {
      out.back().push_back(c);
      if (c == '\\' && i + 1 < src.size()) out.back().push_back(src[++i]);
      else if (c == '"') in_string = false;
    } else if (c == ';' || c == '\n') {
      out.emplace_back();
    } else {
      if (c == '"') in_string = true;
      out.back().push_back(c);
    }
  }
  std::vector<std::string> trimmed;
  for (auto& s : out) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    auto e = s.find_last_not_of(" \t\r");
    trimmed.push_back(s.substr(b, e - b + 1));
  }
  return trimmed;
}

/// Position of the keyword `then` outside string literals, or npos.
std::size_t find_then(std::string_view s) {
  bool in_string = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    char c = s[i];
    if (in_string) {
      if (c == '\\') ++i;
      else if (c == '"') in_string = false;
      continue;
    }
    if (c == '"') in_string = true;
    bool boundary_before = i == 0 || s[i - 1] == ' ' || s[i - 1] == '\t' || s[i - 1] == ')';
    if (boundary_before && s.substr(i).starts_with("then") &&
        (i + 4 == s.size() || s[i + 4] == ' ' || s[i + 4] == '\t'))
      return i;
  }
  return std::string_view::npos;
}

std::shared_ptr<Script::Statement> compile_statement(std::string_view text) {
  if (text.starts_with("if ") || text.starts_with("if\t") || text.starts_with("if(")) {
    auto then = find_then(text);
    if (then == std::string_view::npos) throw Error(ErrorCode::ParseError, "'if' without 'then'");
    auto cond = parse_expr(text.substr(2, then - 2));
    auto body = text.substr(then + 4);
    auto b = body.find_first_not_of(" \t");
    if (b == std::string_view::npos) throw Error(ErrorCode::ParseError, "'then' without a statement");
    auto st = compile_statement(body.substr(b));
    if (st->condition) st->condition = node(Op::And, {cond, st->condition});
    else st->condition = cond;
    return st;
  }

  auto cmd = Command::parse(text);
  auto st = std::make_shared<Script::Statement>();
  if (cmd.verb() == "syslog") {
    cmd.bind_positionals({"action", "text"});
    if (cmd.text_or("action", "") != "write")
      throw Error(ErrorCode::ParseError, "scripts may only use 'syslog write'");
    st->kind = Script::Statement::SyslogWrite;
    st->text = cmd.text("text");
  } else if (cmd.verb() == "io") {
    cmd.bind_positionals({"action", "kind", "channel", "value"});
    if (cmd.text_or("action", "") != "write") throw Error(ErrorCode::ParseError, "scripts may only use 'io write'");
    st->kind = Script::Statement::IoWrite;
    st->io_kind = sim::parse_io_kind(cmd.text("kind"));
    auto ch = cmd.integer("channel");
    if (ch < 0) throw Error(ErrorCode::ChannelOutOfRange, "channel " + std::to_string(ch));
    st->channel = static_cast<std::size_t>(ch);
    st->value = parse_expr(cmd.text("value"));
  } else {
    throw Error(ErrorCode::ParseError, "'" + cmd.verb() + "' is not allowed in scripts");
  }
  return st;
}

}  // namespace

Script Script::compile(std::string_view source) {
  Script s;
  s.source_ = std::string(source);
  for (const auto& text : split_statements(source)) s.statements_.push_back(compile_statement(text));
  if (s.statements_.empty()) throw Error(ErrorCode::ParseError, "empty script");
  return s;
}

void Script::run(sim::Device& device) const {
  for (const auto& st : statements_) {
    try {
      if (st->condition && !truth(evaluate(*st->condition, device.state()))) continue;
      if (st->kind == Statement::SyslogWrite) {
        device.syslog_write(sim::Severity::Info, st->text);
      } else {
        device.io_write(st->io_kind, st->channel, num(evaluate(*st->value, device.state())));
      }
    } catch (const Error& e) {
      device.syslog_write(sim::Severity::Error, "script: " + std::string(e.name()) + ": " + e.what());
    }
  }
}

}  // namespace diver::measurer
