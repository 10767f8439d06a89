#include <gtest/gtest.h>

#include "diver/measurer/script.hpp"
#include "diver/sim/fixture.hpp"
#include "diver/util/error.hpp"

using namespace diver;
using namespace diver::measurer;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Unknown;
}

std::string eval(const std::string& text, const sim::DeviceState& s = sim::DeviceState{}) {
  return format_value(eval_text(text, s));
}

std::size_t count_syslog(const sim::Device& d, const std::string& text) {
  std::size_t n = 0;
  for (const auto& e : d.state().syslog) n += e.text == text;
  return n;
}

}  // namespace

TEST(Expr, Arithmetic) {
  EXPECT_EQ(eval("(2+3)*4"), "20");
  EXPECT_EQ(eval("2+3*4"), "14");
  EXPECT_EQ(eval("-2*-3"), "6");
  EXPECT_EQ(eval("10/4"), "2.5");
  EXPECT_EQ(eval("8 ÷ 2 × 3 − 1"), "11");
  EXPECT_EQ(eval("1.5e2"), "150");
}

TEST(Expr, ComparisonsAndLogic) {
  EXPECT_EQ(eval("1 < 2"), "true");
  EXPECT_EQ(eval("2 ≤ 2 and 3 ≥ 4"), "false");
  EXPECT_EQ(eval("not (1 == 2) or false"), "true");
  EXPECT_EQ(eval("1 != 1"), "false");
  EXPECT_EQ(eval("true == (1 < 2)"), "true");
}

TEST(Expr, Errors) {
  EXPECT_EQ(code_of([] { eval("1/0"); }), ErrorCode::DivByZero);
  EXPECT_EQ(code_of([] { eval("1/(2-2)"); }), ErrorCode::DivByZero);
  EXPECT_EQ(code_of([] { eval("(1+2"); }), ErrorCode::ParseError);
  EXPECT_EQ(code_of([] { eval("1 +"); }), ErrorCode::ParseError);
  EXPECT_EQ(code_of([] { eval("system(1)"); }), ErrorCode::UnknownFunction);
  EXPECT_EQ(code_of([] { eval("1 + true"); }), ErrorCode::TypeError);
  EXPECT_EQ(code_of([] { eval("not 3"); }), ErrorCode::TypeError);
  EXPECT_EQ(code_of([] { eval("ain()"); }), ErrorCode::ParseError);
  EXPECT_EQ(code_of([] { eval("1 $ 2"); }), ErrorCode::ParseError);
}

TEST(Expr, DeviceReads) {
  sim::Device d(sim::nominal_fixture());
  d.io_write(sim::IoKind::AnalogIn, 3, 2.5);
  d.advance(25);
  EXPECT_EQ(eval("ain(3) > 2.0", d.state()), "true");
  EXPECT_EQ(eval("ain(3)", d.state()), "2.5");
  EXPECT_EQ(eval("uptime()", d.state()), "25");
  EXPECT_EQ(code_of([&] { eval("ain(99)", d.state()); }), ErrorCode::ChannelOutOfRange);
}

TEST(Script, CompileErrors) {
  EXPECT_EQ(code_of([] { Script::compile("reset"); }), ErrorCode::ParseError);
  EXPECT_EQ(code_of([] { Script::compile("if 1 < 2 syslog write \"x\""); }), ErrorCode::ParseError);
  EXPECT_EQ(code_of([] { Script::compile("if foo() then syslog write \"x\""); }), ErrorCode::UnknownFunction);
  EXPECT_EQ(code_of([] { Script::compile("   "); }), ErrorCode::ParseError);
}

TEST(Script, HeartbeatOnOneSecondTimer) {
  sim::Device d(sim::nominal_fixture());
  auto script = std::make_shared<Script>(Script::compile("syslog write \"hb\""));
  d.register_script(2, script->source(), [script](sim::Device& dev) { script->run(dev); });
  d.advance(10 * sim::kTicksPerSecond);
  EXPECT_EQ(count_syslog(d, "hb"), 10u);
}

TEST(Script, ConditionalWritesOnlyWhenInputHigh) {
  sim::Device d(sim::nominal_fixture());
  auto script = std::make_shared<Script>(Script::compile("if ain(0) > 1 then syslog write \"high; really\""));
  d.register_script(1, script->source(), [script](sim::Device& dev) { script->run(dev); });
  d.advance(1000);
  EXPECT_EQ(count_syslog(d, "high; really"), 0u);
  d.io_write(sim::IoKind::AnalogIn, 0, 1.5);
  d.advance(1000);
  EXPECT_EQ(count_syslog(d, "high; really"), 10u);
  d.io_write(sim::IoKind::AnalogIn, 0, 0.5);
  d.advance(1000);
  EXPECT_EQ(count_syslog(d, "high; really"), 10u);
}

TEST(Script, MultipleStatementsAndIoWrite) {
  sim::Device d(sim::nominal_fixture());
  auto script = std::make_shared<Script>(Script::compile("io write analog_out 2 ain(1)*2\nsyslog write \"done\""));
  EXPECT_EQ(script->size(), 2u);
  d.io_write(sim::IoKind::AnalogIn, 1, 1.25);
  d.register_script(0, script->source(), [script](sim::Device& dev) { script->run(dev); });
  d.advance(10);
  EXPECT_EQ(d.io_read(sim::IoKind::AnalogOut, 2), 2.5);
  EXPECT_EQ(count_syslog(d, "done"), 1u);
}

TEST(Script, RuntimeErrorsGoToSyslog) {
  sim::Device d(sim::nominal_fixture());
  auto script = std::make_shared<Script>(Script::compile("io write analog_out 0 1/ain(5)"));
  d.register_script(0, script->source(), [script](sim::Device& dev) { script->run(dev); });
  d.advance(10);
  auto tail = d.syslog_tail(1);
  ASSERT_EQ(tail.size(), 1u);
  EXPECT_EQ(tail[0].severity, sim::Severity::Error);
  EXPECT_NE(tail[0].text.find("DivByZero"), std::string::npos);
}
