// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on failure.

#include <sys/socket.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "diver/channel/frame.hpp"
#include "diver/channel/session.hpp"
#include "diver/listener/client.hpp"
#include "diver/listener/local_link.hpp"
#include "diver/listener/monitor.hpp"
#include "diver/measurer/device_host.hpp"
#include "diver/measurer/server.hpp"
#include "diver/pendulum/bench.hpp"
#include "diver/sim/fixture.hpp"

using namespace diver;
using namespace std::chrono_literals;
using Clock = std::chrono::steady_clock;
using channel::Direction;

namespace {

const auto kPsk = channel::ascon::key_from(from_hex("000102030405060708090a0b0c0d0e0f"));
constexpr std::uint64_t kSeed = 42;

struct Outcome {
  bool pass = false;
  std::string detail;
};

int g_failures = 0;

void report(const std::string& name, const Outcome& o) {
  std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
  if (!o.pass) ++g_failures;
}

template <typename Fn>
Outcome guarded(Fn fn) {
  try {
    return fn();
  } catch (const Error& e) {
    return {false, std::string("unexpected ") + std::string(e.name()) + ": " + e.what()};
  } catch (const std::exception& e) {
    return {false, std::string("unexpected exception: ") + e.what()};
  }
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

listener::ClientOptions client_options(std::uint16_t port) {
  listener::ClientOptions o;
  o.device = {"127.0.0.1", port};
  o.psk = kPsk;
  return o;
}

// ---- Ascon conformance --------------------------------------------------------

Outcome ascon_conformance() {
  std::ifstream in(std::string(DIVER_TEST_DATA) + "/ascon_aead128_kat.txt");
  if (!in) return {false, "KAT file missing"};
  std::size_t total = 0, matched = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string part;
    while (std::getline(ss, part, ',')) f.push_back(part);
    while (f.size() < 5) f.emplace_back();
    ++total;
    auto key = channel::ascon::key_from(from_hex(f[0]));
    auto nonce = channel::ascon::nonce_from(from_hex(f[1]));
    auto ad = from_hex(f[2]), pt = from_hex(f[3]), ct = from_hex(f[4]);
    auto got = channel::ascon::encrypt(key, nonce, ad, pt);
    bool ok = got == ct;
    try {
      ok = ok && channel::ascon::decrypt(key, nonce, ad, ct) == pt;
    } catch (const Error&) {
      ok = false;
    }
    if (ok) ++matched;
  }

  std::mt19937_64 rng(7);
  std::size_t tamper_ok = 0, replay_ok = 0;
  for (int i = 0; i < 100; ++i) {
    channel::Session tx(channel::random_session_id(), kPsk), rx(tx.id(), kPsk);
    Bytes msg(1 + rng() % 200);
    for (auto& b : msg) b = static_cast<std::uint8_t>(rng());
    auto frame = tx.seal(Direction::ToMeasurer, msg);
    // Flip one bit of ciphertext or tag.
    auto bits = (frame.payload.size() + frame.tag.size()) * 8;
    auto bit = rng() % bits;
    auto bad = frame;
    if (bit / 8 < bad.payload.size())
      bad.payload[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
    else
      bad.tag[bit / 8 - bad.payload.size()] ^= static_cast<std::uint8_t>(1u << (bit % 8));
    try {
      rx.open(Direction::ToMeasurer, bad);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::AuthFailure) ++tamper_ok;
    }
    try {
      if (rx.open(Direction::ToMeasurer, frame) != msg) continue;
      rx.open(Direction::ToMeasurer, frame);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::ReplayDetected) ++replay_ok;
    }
  }
  bool pass = total == 100 && matched == 100 && tamper_ok == 100 && replay_ok == 100;
  return {pass, std::to_string(matched) + "/" + std::to_string(total) + " vectors, tamper " +
                    std::to_string(tamper_ok) + "/100 AuthFailure, replay " + std::to_string(replay_ok) +
                    "/100 ReplayDetected"};
}

// ---- Encryption overhead ---------------------------------------------------------

Outcome encryption_overhead() {
  Bytes msg(128, 0x5a);
  auto nonce = channel::random_nonce();
  auto t0 = Clock::now();
  Bytes ct;
  for (int i = 0; i < 10000; ++i) {
    nonce[15] = static_cast<std::uint8_t>(i);
    ct = channel::ascon::encrypt(kPsk, nonce, {}, msg);
  }
  auto t1 = Clock::now();
  std::size_t ok = 0;
  for (int i = 0; i < 10000; ++i)
    if (channel::ascon::decrypt(kPsk, nonce, {}, ct).size() == 128) ++ok;
  auto t2 = Clock::now();
  double enc = std::chrono::duration<double, std::milli>(t1 - t0).count();
  double dec = std::chrono::duration<double, std::milli>(t2 - t1).count();
  return {ok == 10000 && (enc + dec) < 5000.0,
          fmt("encrypt %.1f ms", enc) + fmt(", decrypt %.1f ms", dec) + " (bound 5000 ms)"};
}

// ---- Timer tree ground truth -------------------------------------------------------

struct TreeCallback {
  int id = 0;
  std::string kind, name, address, len, hash;
  bool operator==(const TreeCallback&) const = default;
};

struct TreeNode {
  int id = 0;
  std::uint32_t period = 0, divisor = 0;
  std::vector<TreeCallback> callbacks;
  std::vector<TreeNode> children;
  bool operator==(const TreeNode&) const = default;
};

TreeNode truth_tree(const sim::DeviceState& s, const sim::TimerNode& n) {
  TreeNode t{n.timer_id, n.period_ticks, n.divisor_from_parent, {}, {}};
  for (const auto& cb : n.callbacks)
    t.callbacks.push_back({cb.callback_id, std::string(sim::to_string(cb.kind)), cb.name,
                           format_address(cb.address), std::to_string(cb.segment_len),
                           sha256_hex(sim::read_memory(s, cb.address, cb.segment_len))});
  for (const auto& c : n.children) t.children.push_back(truth_tree(s, c));
  std::sort(t.children.begin(), t.children.end(), [](auto& a, auto& b) { return a.id < b.id; });
  return t;
}

/// Nests the pre-order listing by depth.
TreeNode nest_rows(const measurer::RecordSet& rs) {
  TreeNode root;
  std::vector<TreeNode*> path;
  int last_depth = -1;
  for (std::size_t r = 0; r < rs.rows.size(); ++r) {
    int depth = std::stoi(rs.at(r, "depth"));
    int id = std::stoi(rs.at(r, "timer_id"));
    bool same = depth == last_depth && !path.empty() && path.back()->id == id;
    if (!same) {
      if (depth == 0) {
        root = TreeNode{};
        path = {&root};
      } else {
        path.resize(static_cast<std::size_t>(depth));
        path.back()->children.emplace_back();
        path.push_back(&path.back()->children.back());
      }
      auto* n = path.back();
      n->id = id;
      n->period = static_cast<std::uint32_t>(std::stoul(rs.at(r, "period_ticks")));
      n->divisor = static_cast<std::uint32_t>(std::stoul(rs.at(r, "divisor")));
      last_depth = depth;
    }
    if (rs.at(r, "callback_id") != "-")
      path.back()->callbacks.push_back({std::stoi(rs.at(r, "callback_id")), rs.at(r, "kind"), rs.at(r, "name"),
                                        rs.at(r, "address"), rs.at(r, "segment_len"), rs.at(r, "code_hash")});
  }
  return root;
}

bool tree_matches(listener::LocalLink& link) {
  auto reported = nest_rows(link.request("timer_tree"));
  const auto& s = link.device().state();
  return reported == truth_tree(s, s.timer_root);
}

// ---- Detection matrix -----------------------------------------------------------

using listener::Alert;
using listener::Category;

struct Expect {
  Category category;
  const char* kind;
};

const std::map<int, std::vector<Expect>> kExpected = {
    {1, {{Category::Module, "UNEXPECTED"}, {Category::Runtime, "UNEXPECTED_TASK"}}},
    {2, {{Category::Module, "UNEXPECTED"}, {Category::Runtime, "UNEXPECTED_TASK"}}},
    {3, {{Category::Module, "HASH_MISMATCH"}}},
    {4, {{Category::Timer, "PERIOD_CHANGED"}}},
    {5, {{Category::Timer, "ADDED_CALLBACK"}}},
    {6, {{Category::Timer, "CALLBACK_MODIFIED"}}},
    {7, {{Category::Runtime, "MISSING_TASK"}}},
    {8, {{Category::Runtime, "STATE_SHIFT"}}},
    {9, {{Category::Runtime, "PC_STAGNATION"}}},
    {10, {{Category::Runtime, "PRIORITY_CHANGED"}}},
};

listener::Baseline baseline_for(listener::LocalLink& link, listener::Link::StreamHandler on_record = {}) {
  listener::BuildOptions b;
  b.sample_rate_hz = 1.0;
  b.duration_s = 60.0;
  b.on_record = std::move(on_record);
  return listener::build_baseline(link, b);
}

std::vector<Alert> observe(listener::LocalLink& link, listener::Monitor& monitor, const listener::Baseline& b) {
  link.elapse(60s);
  auto w = monitor.window();
  return listener::check_device(link, b, w);
}

std::string kinds_of(const std::vector<Alert>& alerts) {
  std::set<std::string> k;
  for (const auto& a : alerts) k.insert(std::string(listener::to_string(a.category)) + "/" + a.kind);
  std::string out;
  for (const auto& s : k) out += (out.empty() ? "" : ",") + s;
  return out.empty() ? "none" : out;
}

struct MatrixResult {
  Outcome detection;
  Outcome fidelity;
};

MatrixResult detection_matrix() {
  MatrixResult res;
  auto t0 = Clock::now();
  int true_pos = 0, trees_ok = 0, trees_total = 0;
  for (int k = 1; k <= 10; ++k) {
    sim::Device dev(sim::nominal_fixture(kSeed), kSeed);
    listener::LocalLink link(dev);
    ++trees_total;
    if (tree_matches(link)) ++trees_ok;
    auto baseline = baseline_for(link);
    listener::AlertStore store;
    listener::Monitor monitor(link, store, {.sample_rate_hz = 1.0, .window = 60, .check_interval = 10s, .activity = {}});
    monitor.attach();
    link.request("inject scenario=" + std::to_string(k));
    ++trees_total;
    if (tree_matches(link)) ++trees_ok;
    auto alerts = observe(link, monitor, baseline);
    monitor.detach();
    bool hit = true;
    for (const auto& e : kExpected.at(k))
      hit = hit && std::any_of(alerts.begin(), alerts.end(),
                               [&](const Alert& a) { return a.category == e.category && a.kind == e.kind; });
    if (hit) ++true_pos;
    std::cout << "  scenario " << k << (hit ? " detected: " : " MISSED: ") << kinds_of(alerts) << std::endl;
  }

  // Clean runs: successive 60 s windows against one baseline.
  sim::Device dev(sim::nominal_fixture(kSeed), kSeed);
  listener::LocalLink link(dev);
  auto baseline = baseline_for(link);
  listener::AlertStore store;
  listener::Monitor monitor(link, store, {.sample_rate_hz = 1.0, .window = 60, .check_interval = 10s, .activity = {}});
  monitor.attach();
  std::size_t false_pos = 0;
  for (int run = 0; run < 20; ++run) {
    auto alerts = observe(link, monitor, baseline);
    if (!alerts.empty()) std::cout << "  clean run " << run + 1 << " alerts: " << kinds_of(alerts) << std::endl;
    false_pos += alerts.size();
  }
  monitor.detach();
  double secs = std::chrono::duration<double>(Clock::now() - t0).count();

  res.detection = {true_pos == 10 && false_pos == 0 && secs < 300.0,
                   std::to_string(true_pos) + "/10 true positives, " + std::to_string(false_pos) +
                       " alerts over 20 clean runs, " + fmt("%.1f s", secs) + " (bound 300 s)"};
  res.fidelity = {trees_ok == trees_total,
                  std::to_string(trees_ok) + "/" + std::to_string(trees_total) +
                      " trees equal ground truth (before and after each scenario)"};
  return res;
}

// ---- Statistics oracle ------------------------------------------------------------

struct Recount {
  std::size_t samples = 0;
  std::map<std::string, std::size_t> states;
  std::set<std::string> pcs;
};

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out(1);
  for (char c : line) {
    if (c == '\t')
      out.emplace_back();
    else
      out.back().push_back(c);
  }
  return out;
}

/// Recounts task states and PCs straight from the record text.
std::map<std::string, Recount> recount(const std::vector<std::string>& texts) {
  std::map<std::string, Recount> out;
  for (const auto& text : texts) {
    std::stringstream ss(text);
    std::string line;
    std::getline(ss, line);  // "#task_details tick=N"
    std::getline(ss, line);
    auto cols = split_tabs(line);
    auto col = [&](const char* name) {
      return static_cast<std::size_t>(std::find(cols.begin(), cols.end(), name) - cols.begin());
    };
    auto ci_name = col("name"), ci_state = col("state"), ci_pc = col("pc"), ci_entry = col("entry_point");
    while (std::getline(ss, line)) {
      if (line.empty()) continue;
      auto cells = split_tabs(line);
      auto key = cells[ci_name].empty() ? "@" + cells[ci_entry] : cells[ci_name];
      auto state = cells[ci_state] == "RUNNING" ? std::string("READY") : cells[ci_state];
      auto& r = out[key];
      ++r.samples;
      ++r.states[state];
      r.pcs.insert(cells[ci_pc]);
    }
  }
  return out;
}

Outcome statistics_oracle() {
  sim::Device dev(sim::nominal_fixture(kSeed), kSeed);
  listener::LocalLink link(dev);
  std::vector<std::string> texts;
  auto b = baseline_for(link, [&](const measurer::RecordSet& rs) { texts.push_back(rs.to_text()); });
  auto oracle = recount(texts);
  if (oracle.size() != b.task_profiles.size()) return {false, "task sets differ"};
  double worst = 0;
  for (const auto& [key, r] : oracle) {
    auto it = b.task_profiles.find(key);
    if (it == b.task_profiles.end()) return {false, "task " + key + " missing from profiles"};
    const auto& p = it->second;
    if (p.samples != r.samples) return {false, key + " sample count differs"};
    if (p.distinct_pc != r.pcs.size()) return {false, key + " distinct_pc differs"};
    for (auto st : listener::kTrackedStates) {
      auto name = std::string(sim::to_string(st));
      auto n = r.states.count(name) ? r.states.at(name) : 0;
      double expect = static_cast<double>(n) / static_cast<double>(r.samples);
      double got = p.state_fractions.count(st) ? p.state_fractions.at(st) : 0.0;
      worst = std::max(worst, std::abs(expect - got));
    }
  }
  return {worst <= 1e-9, std::to_string(texts.size()) + " records, " + std::to_string(oracle.size()) +
                             " tasks, counts exact, max fraction error " + fmt("%.2g", worst) + " (bound 1e-9)"};
}

// ---- Streaming cadence ----------------------------------------------------------

Outcome streaming_cadence() {
  measurer::DeviceHost host(sim::nominal_fixture(kSeed), kSeed, {1.0, std::nullopt});
  host.start();
  measurer::ServerOptions so;
  so.psks.add("ops", kPsk);
  measurer::Server server(host, so);
  server.start();

  listener::TcpClient slow(client_options(server.port())), fast(client_options(server.port()));
  std::mutex mu;
  std::vector<Clock::time_point> at1, at10;
  auto s1 = slow.subscribe("taskstats rate=1", [&](const measurer::RecordSet&) {
    std::lock_guard lk(mu);
    at1.push_back(Clock::now());
  });
  auto s10 = fast.subscribe("taskstats rate=10", [&](const measurer::RecordSet&) {
    std::lock_guard lk(mu);
    at10.push_back(Clock::now());
  });
  std::this_thread::sleep_for(60s);
  slow.unsubscribe(s1);
  fast.unsubscribe(s10);
  server.stop();
  host.stop();

  std::lock_guard lk(mu);
  auto mean_interval = [](const std::vector<Clock::time_point>& v) {
    if (v.size() < 2) return std::nan("");
    return std::chrono::duration<double>(v.back() - v.front()).count() / static_cast<double>(v.size() - 1);
  };
  double m1 = mean_interval(at1), m10 = mean_interval(at10);
  bool pass = at1.size() >= 54 && at1.size() <= 66 && std::abs(m1 - 1.0) <= 0.1 && std::abs(m10 - 0.1) <= 0.01;
  return {pass, "1 Hz: " + std::to_string(at1.size()) + " frames" + fmt(", mean %.4f s", m1) + "; 10 Hz: " +
                    std::to_string(at10.size()) + " frames" + fmt(", mean %.4f s", m10)};
}

// ---- Protocol robustness ---------------------------------------------------------

struct RawSession {
  net::Socket sock;
  std::optional<channel::Session> session;
};

RawSession raw_handshake(std::uint16_t port) {
  RawSession r{net::tcp_connect({"127.0.0.1", port}), std::nullopt};
  channel::ClientHello hello{"ops", channel::random_nonce()};
  channel::write_frame(r.sock, channel::make_client_hello(hello, kPsk));
  r.session.emplace(channel::finish_handshake(channel::read_frame(r.sock), hello, kPsk, {}));
  return r;
}

Bytes random_bytes(std::mt19937_64& rng, std::size_t n) {
  Bytes b(n);
  for (auto& x : b) x = static_cast<std::uint8_t>(rng());
  return b;
}

/// A garbage frame: random bytes, a plausible header with random fields, or a
/// sealed frame with corrupted bits.
Bytes fuzz_frame(std::mt19937_64& rng, channel::Session* session) {
  switch (rng() % (session ? 4 : 3)) {
    case 0:
      return random_bytes(rng, rng() % 256);
    case 1: {
      channel::Frame f;
      f.flags = static_cast<std::uint8_t>(rng());
      f.seq = rng() & channel::kMaxSeq;
      f.timestamp_ms = rng();
      f.payload = random_bytes(rng, rng() % 512);
      for (auto& b : f.session_id) b = static_cast<std::uint8_t>(rng());
      auto bytes = f.encode();
      if (rng() % 2) bytes[4 + rng() % 2] ^= static_cast<std::uint8_t>(1 + rng() % 255);  // version or flags
      return bytes;
    }
    case 2: {
      auto bytes = random_bytes(rng, channel::kHeaderSize + rng() % 64);
      std::copy(channel::kMagic.begin(), channel::kMagic.end(), bytes.begin());
      return bytes;  // declared length rarely matches what follows
    }
    default: {
      auto f = session->seal(Direction::ToMeasurer, as_bytes("tasks"));
      auto bytes = f.encode();
      auto pos = rng() % bytes.size();
      bytes[pos] ^= static_cast<std::uint8_t>(1u << (rng() % 8));
      return bytes;
    }
  }
}

Outcome protocol_robustness() {
  measurer::DeviceHost host(sim::nominal_fixture(kSeed), kSeed, {10.0, std::nullopt});
  host.start();
  measurer::ServerOptions so;
  so.psks.add("ops", kPsk);
  measurer::Server server(host, so);
  server.start();

  // Three sessions: two interleave requests with unique answers, one streams.
  listener::TcpClient a(client_options(server.port())), b(client_options(server.port())),
      c(client_options(server.port()));
  std::atomic<std::size_t> stream_frames{0}, foreign{0};
  std::atomic<std::uint64_t> c_sub{0};
  c_sub = c.subscribe("taskstats rate=50", [&](const measurer::RecordSet& rs) {
    ++stream_frames;
    if (rs.rows.empty() || rs.columns.front() != "sub_id" || rs.rows.front().front() != std::to_string(c_sub.load()))
      ++foreign;
  });
  auto worker = [](listener::TcpClient& cl, int base) {
    std::size_t wrong = 0;
    for (int i = 0; i < 200; ++i) {
      auto x = base + i;
      if (cl.request("eval " + std::to_string(x) + "*3").at(0, "value") != std::to_string(x * 3)) ++wrong;
      if (i % 10 == 0 && cl.request("tasks").kind != "tasks") ++wrong;
      std::this_thread::sleep_for(2ms);  // keep the stream interleaved
    }
    return wrong;
  };
  auto fa = std::async(std::launch::async, worker, std::ref(a), 1000);
  auto fb = std::async(std::launch::async, worker, std::ref(b), 5000);
  std::size_t c_wrong = 0;
  for (int i = 0; i < 50; ++i) {
    if (c.request("eval " + std::to_string(9000 + i) + "+1").at(0, "value") != std::to_string(9001 + i)) ++c_wrong;
    std::this_thread::sleep_for(8ms);
  }
  std::size_t wrong = fa.get() + fb.get() + c_wrong;
  c.unsubscribe(c_sub);
  auto unrouted = a.unrouted_stream_frames() + b.unrouted_stream_frames();

  // Fuzz: each garbage frame on a fresh connection, half before the handshake.
  std::mt19937_64 rng(2024);
  std::size_t sent = 0;
  for (int i = 0; i < 1000; ++i) {
    try {
      RawSession s;
      bool post = i % 2 == 1;
      if (post)
        s = raw_handshake(server.port());
      else
        s.sock = net::tcp_connect({"127.0.0.1", server.port()});
      auto bytes = fuzz_frame(rng, post ? &*s.session : nullptr);
      if (!bytes.empty()) ::send(s.sock.fd(), bytes.data(), bytes.size(), MSG_NOSIGNAL);
      ::shutdown(s.sock.fd(), SHUT_WR);
      ++sent;
    } catch (const Error&) {
    }
  }
  for (int i = 0; i < 100 && server.active_connections() > 3; ++i) std::this_thread::sleep_for(50ms);

  // The server still serves old and new sessions.
  bool alive = a.request("eval 6*7").at(0, "value") == "42";
  listener::TcpClient fresh(client_options(server.port()));
  alive = alive && fresh.request("tasks").rows.size() == 8;

  bool pass = wrong == 0 && foreign == 0 && unrouted == 0 && stream_frames > 0 && sent == 1000 && alive;
  std::string detail = std::to_string(wrong) + " wrong answers, " + std::to_string(foreign + unrouted) +
                       " foreign stream frames (" + std::to_string(stream_frames.load()) + " streamed), " +
                       std::to_string(sent) + " fuzz frames, " + std::to_string(server.protocol_errors()) +
                       " protocol errors, server " + (alive ? "serving" : "NOT serving");
  server.stop();
  host.stop();
  return {pass, detail};
}

// ---- Pendulum -------------------------------------------------------------------

double max_abs_theta_after(const std::vector<pendulum::TrajectoryPoint>& t, double after) {
  double m = 0;
  for (const auto& p : t)
    if (p.t > after) m = std::max(m, std::abs(p.theta));
  return m;
}

Outcome pendulum_loop() {
  constexpr double kTransient = 2.0;
  pendulum::PendulumParams params;
  pendulum::OfflineOptions off;
  off.duration_s = 20;
  off.noise = false;
  auto quiet = pendulum::simulate_offline(params, {}, off);
  double settle = max_abs_theta_after(quiet, 10.0);

  measurer::HostOptions ho{1.0, net::Endpoint{"127.0.0.1", 0}};
  measurer::DeviceHost host(sim::nominal_fixture(kSeed), kSeed, ho);
  host.mutate([](sim::Device& d) { pendulum::install_controller(d); });
  host.start();
  measurer::ServerOptions so;
  so.psks.add("ops", kPsk);
  measurer::Server server(host, so);
  server.start();

  pendulum::BenchOptions bo;
  bo.device_udp = {"127.0.0.1", host.control_port()};
  bo.duration_s = 20;
  bo.noise = true;
  bo.seed = 1;
  auto without = pendulum::run_benchmark(bo);
  bo.measurer = client_options(server.port());
  bo.stream_rate_hz = 10;
  auto with = pendulum::run_benchmark(bo);
  server.stop();
  host.stop();

  double b_off = max_abs_theta_after(without.trajectory, kTransient);
  double b_on = max_abs_theta_after(with.trajectory, kTransient);
  double l_off = without.metrics.mean_latency_ms(), l_on = with.metrics.mean_latency_ms();
  double ratio = l_on / l_off;
  bool pass = settle < 0.05 && !without.aborted && !with.aborted && b_off < 0.5 && b_on < 0.5 && ratio <= 1.25 &&
              with.stream_records > 0;
  return {pass, fmt("delta=0 max|theta| after 10 s %.2e", settle) + fmt("; noisy max|theta| after 2 s %.3f", b_off) +
                    fmt(" (off) / %.3f", b_on) + fmt(" (on); latency %.3f ms", l_off) +
                    fmt(" off, %.3f ms on", l_on) + fmt(", ratio %.3f (bound 1.25)", ratio) + "; drops " +
                    std::to_string(without.metrics.dropped) + "/" + std::to_string(with.metrics.dropped) + ", " +
                    std::to_string(with.stream_records) + " stream records"};
}

}  // namespace

int main() {
  std::cout << "acceptance: streaming cadence runs in the background for 60 s" << std::endl;
  auto cadence = std::async(std::launch::async, [] { return guarded(streaming_cadence); });

  report("ascon conformance", guarded(ascon_conformance));
  report("encryption overhead", guarded(encryption_overhead));
  auto matrix = guarded([] {
    auto m = detection_matrix();
    report("detection matrix", m.detection);
    return m.fidelity;
  });
  if (matrix.detail.starts_with("unexpected")) report("detection matrix", matrix);
  report("timer tree fidelity", matrix);
  report("statistics oracle", guarded(statistics_oracle));
  report("protocol robustness", guarded(protocol_robustness));
  report("streaming cadence", cadence.get());
  report("pendulum closed loop", guarded(pendulum_loop));

  std::cout << (g_failures == 0 ? "acceptance: all criteria passed" : "acceptance: " + std::to_string(g_failures) +
                                                                         " criteria failed")
            << std::endl;
  return g_failures == 0 ? 0 : 1;
}
