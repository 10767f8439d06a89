#include <gtest/gtest.h>

#include "diver/measurer/command.hpp"
#include "diver/measurer/record_set.hpp"
#include "diver/util/bytes.hpp"

using namespace diver;
using namespace diver::measurer;

TEST(Command, KeyValueAndQuoted) {
  auto c = Command::parse("register_script timer_id=2 script=\"syslog write \\\"hb\\\"\"\n");
  EXPECT_EQ(c.verb(), "register_script");
  EXPECT_EQ(c.integer("timer_id"), 2);
  EXPECT_EQ(c.text("script"), "syslog write \"hb\"");
}

TEST(Command, PositionalsBindInOrder) {
  auto c = Command::parse("io write analog_out 3 value=2.5");
  c.bind_positionals({"action", "kind", "channel", "value"});
  EXPECT_EQ(c.text("action"), "write");
  EXPECT_EQ(c.text("kind"), "analog_out");
  EXPECT_EQ(c.integer("channel"), 3);
  EXPECT_EQ(c.real("value"), 2.5);
  auto extra = Command::parse("tasks a b");
  EXPECT_THROW(extra.bind_positionals({"x"}), Error);
}

TEST(Command, TypedGettersReportArgumentName) {
  auto c = Command::parse("read_memory addr=0x01000000 len=ten");
  EXPECT_EQ(c.address("addr"), 0x01000000u);
  try {
    c.integer("len");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BadArgument);
    EXPECT_STREQ(e.what(), "len");
  }
  EXPECT_EQ(c.integer_or("missing", 7), 7);
  EXPECT_EQ(Command::parse("x n=0x10").integer("n"), 16);
  EXPECT_EQ(Command::parse("x n=-3").integer("n"), -3);
}

TEST(Command, CanonicalTextReparses) {
  Command c("syslog");
  c.add_positional("write").set("text", "two words\tand \"quotes\"");
  auto again = Command::parse(c.to_text());
  EXPECT_EQ(again.to_text(), c.to_text());
  EXPECT_EQ(again.text("text"), "two words\tand \"quotes\"");
}

TEST(Command, Errors) {
  EXPECT_THROW(Command::parse(""), Error);
  EXPECT_THROW(Command::parse("x a=\"open"), Error);
}

TEST(RecordSet, TextRoundTripAndEscaping) {
  RecordSet rs("syslog", 42, {"tick", "text"});
  rs.add_row({"1", "tab\there"});
  rs.add_row({"2", "line\nbreak \\ slash"});
  rs.add_row({"3", ""});
  auto text = rs.to_text();
  EXPECT_TRUE(text.starts_with("#syslog tick=42\ntick\ttext\n"));
  EXPECT_EQ(RecordSet::parse(text), rs);
  EXPECT_EQ(RecordSet::parse(text).to_text(), text);
  EXPECT_THROW(rs.add_row({"only one"}), Error);
}

TEST(RecordSet, EqualContentHashesEqual) {
  auto make = [] {
    RecordSet rs("tasks", 5, {"task_id", "name"});
    rs.add_row({"1", "tCtrl"});
    return rs;
  };
  EXPECT_EQ(sha256_hex(as_bytes(make().to_text())), sha256_hex(as_bytes(make().to_text())));
}

TEST(RecordSet, ErrorResponsesRethrow) {
  auto text = error_text(ErrorCode::NoSuchTask, "no task \"x\"");
  EXPECT_EQ(text, "#error code=NoSuchTask msg=\"no task \\\"x\\\"\"\n");
  try {
    parse_response(text);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoSuchTask);
    EXPECT_STREQ(e.what(), "no task \"x\"");
  }
}

TEST(RecordSet, FormatReal) {
  EXPECT_EQ(format_real(20.0), "20");
  EXPECT_EQ(format_real(2.5), "2.5");
  EXPECT_EQ(format_real(0.1), "0.1");
  EXPECT_EQ(std::stod(format_real(1.0 / 3.0)), 1.0 / 3.0);
}
