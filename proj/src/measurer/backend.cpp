#include "diver/measurer/backend.hpp"

#include <algorithm>
#include <cmath>
#include <ctime>
#include <set>

#include "diver/measurer/script.hpp"
#include "diver/util/error.hpp"

namespace diver::measurer {

namespace {

using sim::DeviceSnapshot;
using sim::DeviceState;
using sim::TaskState;

std::string task_id_text(std::uint64_t id) { return std::to_string(id); }

/// Folds RUNNING into READY: a running task was READY when it was scheduled.
TaskState observed_state(TaskState s) { return s == TaskState::Running ? TaskState::Ready : s; }

std::string iso8601(std::int64_t epoch_ms) {
  std::time_t secs = static_cast<std::time_t>(epoch_ms / 1000);
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[40];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[48];
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(epoch_ms % 1000));
  return out;
}

const sim::SimTask& lookup_task(const DeviceSnapshot& snap, const std::string& id) {
  const sim::SimTask* t = nullptr;
  if (!id.empty() && std::all_of(id.begin(), id.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
    t = snap.find_task(static_cast<std::uint64_t>(std::stoull(id)));
  else
    t = snap.find_task(std::string_view(id));
  if (t == nullptr) throw Error(ErrorCode::NoSuchTask, "no task '" + id + "'");
  return *t;
}

void timer_rows(RecordSet& rs, const DeviceState& s, const sim::TimerNode& n, int depth) {
  auto base = [&] {
    return std::vector<std::string>{std::to_string(depth), std::to_string(n.timer_id), std::to_string(n.period_ticks),
                                    std::to_string(n.divisor_from_parent)};
  };
  if (n.callbacks.empty()) {
    auto row = base();
    for (int i = 0; i < 6; ++i) row.push_back("-");
    rs.add_row(std::move(row));
  }
  for (const auto& cb : n.callbacks) {
    auto row = base();
    row.push_back(std::to_string(cb.callback_id));
    row.push_back(std::string(to_string(cb.kind)));
    row.push_back(cb.name);
    row.push_back(format_address(cb.address));
    row.push_back(std::to_string(cb.segment_len));
    row.push_back(sim::callback_code_hash(s, cb));
    rs.add_row(std::move(row));
  }
  std::vector<const sim::TimerNode*> kids;
  for (const auto& c : n.children) kids.push_back(&c);
  std::sort(kids.begin(), kids.end(), [](auto* a, auto* b) { return a->timer_id < b->timer_id; });
  for (const auto* c : kids) timer_rows(rs, s, *c, depth + 1);
}

std::size_t to_size(std::int64_t v, std::string_view name) {
  if (v < 0) throw Error(ErrorCode::BadArgument, std::string(name));
  return static_cast<std::size_t>(v);
}

}  // namespace

bool wants_stream(const Command& c) {
  if (auto s = c.get("stream")) {
    if (*s == "on") return true;
    if (*s == "off") return false;
    throw Error(ErrorCode::BadArgument, "stream");
  }
  return c.verb() != "task_activity" && c.has("rate");
}

double stream_rate(const Command& c) {
  double r = c.real_or("rate", 1.0);
  if (!(r > 0.0) || !std::isfinite(r)) throw Error(ErrorCode::BadArgument, "rate");
  if (r > kMaxRateHz) throw Error(ErrorCode::RateTooHigh, "rate " + format_real(r) + " Hz exceeds 100 Hz");
  return r;
}

Dispatcher::Dispatcher(DeviceAccess& device, DispatchOptions options) : device_(device), options_(options) {
  add("help", "help", [this](Command&, SessionContext*) {
    RecordSet rs("help", 0, {"verb", "usage"});
    for (const auto& [name, v] : verbs_) rs.add_row({name, v.usage});
    return rs;
  });

  add("tasks", "tasks [stream=on rate=<hz>]", [this](Command&, SessionContext*) {
    auto snap = device_.snapshot();
    RecordSet rs("tasks", snap.tick(), {"task_id", "name"});
    auto tasks = snap->tasks;
    std::sort(tasks.begin(), tasks.end(), [](auto& a, auto& b) { return a.task_id < b.task_id; });
    for (const auto& t : tasks) rs.add_row({task_id_text(t.task_id), t.name});
    return rs;
  });

  add("task_details", "task_details [id=all|<id>|<name>] [granularity=brief|full]",
      [this](Command& c, SessionContext*) {
        c.bind_positionals({"id", "granularity"});
        auto gran = c.text_or("granularity", "full");
        if (gran != "brief" && gran != "full") throw Error(ErrorCode::BadArgument, "granularity");
        bool full = gran == "full";
        auto id = c.text_or("id", "all");
        auto snap = device_.snapshot();
        std::vector<std::string> cols{"task_id", "name", "state", "priority"};
        if (full) cols.insert(cols.end(), {"pc", "sp", "link_register", "entry_point", "delay_remaining"});
        RecordSet rs("task_details", snap.tick(), cols);
        auto emit = [&](const sim::SimTask& t) {
          std::vector<std::string> row{task_id_text(t.task_id), t.name, std::string(to_string(t.state)),
                                       std::to_string(t.priority)};
          if (full)
            row.insert(row.end(), {format_address(t.pc), format_address(t.sp), format_address(t.link_register),
                                   format_address(t.entry_point), std::to_string(t.delay_remaining)});
          rs.add_row(std::move(row));
        };
        if (id == "all") {
          auto tasks = snap->tasks;
          std::sort(tasks.begin(), tasks.end(), [](auto& a, auto& b) { return a.task_id < b.task_id; });
          for (const auto& t : tasks) emit(t);
        } else {
          emit(lookup_task(snap, id));
        }
        return rs;
      });

  add("taskstats", "taskstats [rate=<hz>]", [this](Command&, SessionContext*) {
    auto snap = device_.snapshot();
    RecordSet rs("taskstats", snap.tick(), {"task_id", "name", "state", "priority", "pc"});
    auto tasks = snap->tasks;
    std::sort(tasks.begin(), tasks.end(), [](auto& a, auto& b) { return a.task_id < b.task_id; });
    for (const auto& t : tasks)
      rs.add_row({task_id_text(t.task_id), t.name, std::string(to_string(t.state)), std::to_string(t.priority),
                  format_address(t.pc)});
    return rs;
  });

  add("task_activity", "task_activity window=<samples>=10.. [rate=<hz>]", [this](Command& c, SessionContext* ctx) {
    c.bind_positionals({"window", "rate"});
    auto window = c.integer_or("window", 30);
    if (window < 10) throw Error(ErrorCode::BadArgument, "window");
    double rate = c.real_or("rate", 10.0);
    if (!(rate > 0.0)) throw Error(ErrorCode::BadArgument, "rate");
    if (rate > kMaxRateHz) throw Error(ErrorCode::RateTooHigh, "rate " + format_real(rate) + " Hz exceeds 100 Hz");
    auto interval = static_cast<std::uint64_t>(std::llround(sim::kTicksPerSecond / rate));
    if (interval == 0) interval = 1;

    struct Acc {
      std::size_t samples = 0;
      std::map<TaskState, std::size_t> states;
      std::set<Address> pcs;
    };
    std::map<std::string, Acc> acc;
    std::uint64_t last_tick = 0;
    for (std::int64_t i = 0; i < window; ++i) {
      if (i > 0) {
        if (ctx != nullptr && ctx->cancelled()) throw Error(ErrorCode::ConnectionLost, "client went away");
        device_.wait_ticks(interval);
      }
      auto snap = device_.snapshot();
      last_tick = snap.tick();
      for (const auto& t : snap->tasks) {
        auto& a = acc[t.name];
        ++a.samples;
        ++a.states[observed_state(t.state)];
        a.pcs.insert(t.pc);
      }
    }
    RecordSet rs("task_activity", last_tick, {"name", "samples", "ready_fraction", "distinct_pc", "state_histogram"});
    for (const auto& [name, a] : acc) {
      std::string hist;
      for (auto s : sim::kAllTaskStates) {
        if (s == TaskState::Running) continue;
        if (!hist.empty()) hist += ",";
        auto it = a.states.find(s);
        hist += std::string(to_string(s)) + ":" + std::to_string(it == a.states.end() ? 0 : it->second);
      }
      auto ready = a.states.count(TaskState::Ready) ? a.states.at(TaskState::Ready) : 0;
      rs.add_row({name, std::to_string(a.samples),
                  format_real(static_cast<double>(ready) / static_cast<double>(a.samples)),
                  std::to_string(a.pcs.size()), hist});
    }
    return rs;
  });

  add("sysinfo", "sysinfo [section=kernel|io|flash|config] [key=<name>]", [this](Command& c, SessionContext*) {
    c.bind_positionals({"section", "key"});
    auto snap = device_.snapshot();
    const auto& s = snap.state();
    RecordSet rs("sysinfo", snap.tick(), {"section", "key", "value"});
    auto section = c.get("section");
    auto key = c.get("key");
    auto emit = [&](const std::string& sec, const std::string& k, const std::string& v) {
      if (section && *section != sec) return;
      if (key && *key != k) return;
      rs.add_row({sec, k, v});
    };
    emit("kernel", "version", s.kernel_version);
    emit("kernel", "uptime_ticks", std::to_string(s.uptime_ticks));
    emit("kernel", "tick_rate_hz", std::to_string(sim::kTicksPerSecond));
    emit("kernel", "rtc_ms", std::to_string(s.rtc_ms));
    emit("kernel", "task_count", std::to_string(s.tasks.size()));
    emit("io", "analog_in", std::to_string(s.analog_in.size()));
    emit("io", "analog_out", std::to_string(s.analog_out.size()));
    emit("io", "digital_in", std::to_string(s.digital_in.size()));
    emit("io", "digital_out", std::to_string(s.digital_out.size()));
    emit("flash", "size", std::to_string(s.flash->size()));
    for (const auto& [k, v] : s.config) emit("config", k, v);
    return rs;
  });

  add("modules", "modules", [this](Command&, SessionContext*) {
    auto snap = device_.snapshot();
    RecordSet rs("modules", snap.tick(),
                 {"name", "kind", "file_path", "load_address", "size", "jump_table", "control_fn", "segment_hash"});
    auto mods = snap->modules;
    std::sort(mods.begin(), mods.end(), [](auto& a, auto& b) { return a.load_address < b.load_address; });
    for (const auto& m : mods)
      rs.add_row({m.name, std::string(to_string(m.kind)), m.file_path, format_address(m.load_address),
                  std::to_string(m.segment->size()), format_address(m.jump_table_addr),
                  format_address(m.control_fn_addr), sim::module_segment_hash(m)});
    return rs;
  });

  add("read_memory", "read_memory addr=<address> len=<1..65536>", [this](Command& c, SessionContext*) {
    c.bind_positionals({"addr", "len"});
    auto addr = c.address("addr");
    auto len = to_size(c.integer("len"), "len");
    if (len == 0 || len > sim::kMaxMemoryRead) throw Error(ErrorCode::BadArgument, "len");
    auto snap = device_.snapshot();
    auto bytes = snap.read_memory(addr, len);
    RecordSet rs("read_memory", snap.tick(), {"address", "len", "data_b64"});
    rs.add_row({format_address(addr), std::to_string(len), base64_encode(bytes)});
    return rs;
  });

  add("timer_tree", "timer_tree", [this](Command&, SessionContext*) {
    auto snap = device_.snapshot();
    RecordSet rs("timer_tree", snap.tick(),
                 {"depth", "timer_id", "period_ticks", "divisor", "callback_id", "kind", "name", "address",
                  "segment_len", "code_hash"});
    timer_rows(rs, snap.state(), snap->timer_root, 0);
    return rs;
  });

  add("io", "io read|write <analog_in|analog_out|digital_in|digital_out> <channel> [value]",
      [this](Command& c, SessionContext*) {
        c.bind_positionals({"action", "kind", "channel", "value"});
        auto action = c.text("action");
        auto kind_text = c.text("kind");
        auto kind = sim::parse_io_kind(kind_text);
        auto ch_raw = c.integer("channel");
        if (ch_raw < 0) throw Error(ErrorCode::ChannelOutOfRange, "channel " + std::to_string(ch_raw));
        auto ch = static_cast<std::size_t>(ch_raw);
        if (action == "write") {
          double v = c.real("value");
          device_.mutate([&](sim::Device& d) { d.io_write(kind, ch, v); });
          return ack(device_.snapshot().tick());
        }
        if (action != "read") throw Error(ErrorCode::BadArgument, "action");
        double v = 0;
        std::uint64_t tick = 0;
        device_.mutate([&](sim::Device& d) {
          v = d.io_read(kind, ch);
          tick = d.state().uptime_ticks;
        });
        RecordSet rs("io", tick, {"kind", "channel", "value"});
        rs.add_row({kind_text, std::to_string(ch), format_real(v)});
        return rs;
      });

  add("syslog", "syslog read [tail=<n>] | syslog write \"<text>\"", [this](Command& c, SessionContext*) {
    c.bind_positionals({"action", "text"});
    auto action = c.text_or("action", "read");
    if (action == "write") {
      auto text = c.text("text");
      device_.mutate([&](sim::Device& d) { d.syslog_write(sim::Severity::Info, text); });
      return ack(device_.snapshot().tick());
    }
    if (action != "read") throw Error(ErrorCode::BadArgument, "action");
    auto tail = to_size(c.integer_or("tail", 10), "tail");
    auto snap = device_.snapshot();
    const auto& log = snap->syslog;
    RecordSet rs("syslog", snap.tick(), {"tick", "severity", "text"});
    auto n = std::min(tail, log.size());
    for (auto it = log.end() - static_cast<std::ptrdiff_t>(n); it != log.end(); ++it)
      rs.add_row({std::to_string(it->tick), std::string(to_string(it->severity)), it->text});
    return rs;
  });

  add("flash", "flash read <addr> <len> | flash write <addr> <hex>", [this](Command& c, SessionContext*) {
    auto pos = c.positionals();
    auto action = c.has("action") ? c.text("action") : (pos.empty() ? std::string("read") : pos.front());
    if (action == "write")
      c.bind_positionals({"action", "addr", "data"});
    else
      c.bind_positionals({"action", "addr", "len"});
    auto addr = static_cast<std::size_t>(c.address("addr"));
    if (action == "write") {
      Bytes data;
      try {
        data = from_hex(c.text("data"));
      } catch (const Error&) {
        throw Error(ErrorCode::BadArgument, "data");
      }
      device_.mutate([&](sim::Device& d) { d.flash_write(addr, data); });
      return ack(device_.snapshot().tick());
    }
    if (action != "read") throw Error(ErrorCode::BadArgument, "action");
    auto len = to_size(c.integer("len"), "len");
    if (len > sim::kMaxMemoryRead) throw Error(ErrorCode::BadArgument, "len");
    Bytes data;
    std::uint64_t tick = 0;
    device_.mutate([&](sim::Device& d) {
      data = d.flash_read(addr, len);
      tick = d.state().uptime_ticks;
    });
    RecordSet rs("flash", tick, {"address", "len", "data_hex"});
    rs.add_row({format_address(addr), std::to_string(len), to_hex(data)});
    return rs;
  });

  add("datetime", "datetime [get] | datetime set ms=<epoch_ms>", [this](Command& c, SessionContext*) {
    c.bind_positionals({"action", "ms"});
    auto action = c.text_or("action", "get");
    if (action == "set") {
      auto ms = c.integer("ms");
      device_.mutate([&](sim::Device& d) { d.set_rtc(ms); });
    } else if (action != "get") {
      throw Error(ErrorCode::BadArgument, "action");
    }
    auto snap = device_.snapshot();
    RecordSet rs("datetime", snap.tick(), {"rtc_ms", "iso8601"});
    rs.add_row({std::to_string(snap->rtc_ms), iso8601(snap->rtc_ms)});
    return rs;
  });

  add("reset", "reset", [this](Command&, SessionContext*) {
    device_.mutate([](sim::Device& d) { d.reset(); });
    return ack(device_.snapshot().tick(), "reset");
  });

  add("config", "config set <key> <value> | config erase <key>", [this](Command& c, SessionContext*) {
    c.bind_positionals({"action", "key", "value"});
    auto action = c.text("action");
    auto key = c.text("key");
    if (action == "set") {
      auto value = c.text("value");
      device_.mutate([&](sim::Device& d) { d.set_config(key, value); });
    } else if (action == "erase") {
      device_.mutate([&](sim::Device& d) { d.erase_config(key); });
    } else {
      throw Error(ErrorCode::BadArgument, "action");
    }
    return ack(device_.snapshot().tick());
  });

  add("eval", "eval <expression>", [this](Command& c, SessionContext*) {
    auto expr = c.has("expr") ? c.text("expr") : c.rest();
    auto snap = device_.snapshot();
    auto v = eval_text(expr, snap.state());
    RecordSet rs("eval", snap.tick(), {"value"});
    rs.add_row({format_value(v)});
    return rs;
  });

  add("register_script", "register_script timer_id=<id> script=\"<statements>\"", [this](Command& c, SessionContext*) {
    c.bind_positionals({"timer_id", "script"});
    auto timer_id = static_cast<int>(c.integer("timer_id"));
    auto script = std::make_shared<const Script>(Script::compile(c.text("script")));
    int id = 0;
    device_.mutate([&](sim::Device& d) {
      id = d.register_script(timer_id, script->source(), [script](sim::Device& dev) { script->run(dev); });
    });
    RecordSet rs("register_script", device_.snapshot().tick(), {"callback_id", "timer_id"});
    rs.add_row({std::to_string(id), std::to_string(timer_id)});
    return rs;
  });

  add("inject", "inject scenario=<1..10>", [this](Command& c, SessionContext*) {
    if (!options_.allow_inject) throw Error(ErrorCode::BadArgument, "attack injection is disabled on this device");
    c.bind_positionals({"scenario"});
    auto scenario = static_cast<int>(c.integer("scenario"));
    device_.mutate([&](sim::Device& d) { sim::inject_attack(d, scenario); });
    return ack(device_.snapshot().tick(), "scenario " + std::to_string(scenario));
  });

  add("unsubscribe", "unsubscribe sub_id=<id>", [](Command& c, SessionContext* ctx) {
    c.bind_positionals({"sub_id"});
    auto id = c.integer("sub_id");
    if (ctx == nullptr || id < 0 || !ctx->unsubscribe(static_cast<std::uint64_t>(id)))
      throw Error(ErrorCode::BadArgument, "sub_id");
    return ack(0, "unsubscribed");
  });
}

void Dispatcher::add(std::string name, std::string usage, Handler fn) {
  verbs_[std::move(name)] = Verb{std::move(usage), std::move(fn)};
}

std::vector<std::string> Dispatcher::verbs() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : verbs_) out.push_back(name);
  return out;
}

RecordSet Dispatcher::execute(Command command, SessionContext* ctx) {
  auto it = verbs_.find(command.verb());
  if (it == verbs_.end()) throw Error(ErrorCode::UnknownVerb, "unknown verb '" + command.verb() + "'");
  command.erase("stream");
  if (command.verb() != "task_activity") command.erase("rate");
  return it->second.fn(command, ctx);
}

RecordSet Dispatcher::stream_record(std::uint64_t sub_id, const Command& command) {
  auto rs = execute(command);
  rs.columns.insert(rs.columns.begin(), "sub_id");
  for (auto& r : rs.rows) r.insert(r.begin(), std::to_string(sub_id));
  return rs;
}

std::string Dispatcher::handle(std::string_view request, SessionContext* ctx) {
  try {
    // eval carries free-form expressions; everything else uses key=value syntax.
    auto trimmed = request.substr(0, request.find_last_not_of(" \t\r\n") + 1);
    auto start = trimmed.find_first_not_of(" \t");
    if (start == std::string_view::npos) throw Error(ErrorCode::ParseError, "empty command");
    trimmed.remove_prefix(start);
    if (trimmed.starts_with("eval ") || trimmed.starts_with("eval\t")) {
      auto expr = trimmed.substr(5);
      auto snap = device_.snapshot();
      auto v = expr.starts_with("expr=") ? eval_text(Command::parse("eval " + std::string(expr)).text("expr"), snap.state())
                                         : eval_text(expr, snap.state());
      RecordSet rs("eval", snap.tick(), {"value"});
      rs.add_row({format_value(v)});
      return rs.to_text();
    }

    auto cmd = Command::parse(trimmed);
    if (verbs_.find(cmd.verb()) == verbs_.end())
      throw Error(ErrorCode::UnknownVerb, "unknown verb '" + cmd.verb() + "'");
    if (wants_stream(cmd)) {
      double rate = stream_rate(cmd);
      if (ctx == nullptr) throw Error(ErrorCode::BadArgument, "streaming needs a session");
      auto probe = cmd;
      execute(probe);  // reject bad arguments before subscribing
      auto id = ctx->subscribe(cmd, rate);
      return subscription_ack(device_.snapshot().tick(), id).to_text();
    }
    return execute(std::move(cmd), ctx).to_text();
  } catch (const Error& e) {
    return error_text(e);
  } catch (const std::exception& e) {
    return error_text(ErrorCode::DeviceFault, e.what());
  }
}

}  // namespace diver::measurer
