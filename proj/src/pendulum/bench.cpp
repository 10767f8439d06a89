#include "diver/pendulum/bench.hpp"

#include <poll.h>
#include <sys/socket.h>

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>

namespace diver::pendulum {

using Clock = std::chrono::steady_clock;

double LoopMetrics::mean_latency_ms() const {
  if (latencies_ms.empty()) return std::nan("");
  return std::accumulate(latencies_ms.begin(), latencies_ms.end(), 0.0) / static_cast<double>(latencies_ms.size());
}

double LoopMetrics::p99_ms() const {
  if (latencies_ms.empty()) return std::nan("");
  auto v = latencies_ms;
  std::sort(v.begin(), v.end());
  auto idx = static_cast<std::size_t>(std::ceil(0.99 * static_cast<double>(v.size()))) - 1;
  return v[std::min(idx, v.size() - 1)];
}

double LoopMetrics::mean_inter_command_ms() const {
  double sum = 0;
  std::size_t n = 0;
  for (double x : inter_command_ms)
    if (!std::isnan(x)) sum += x, ++n;
  return n == 0 ? std::nan("") : sum / static_cast<double>(n);
}

double LoopMetrics::inter_command_std_ms() const {
  double mean = mean_inter_command_ms();
  double sq = 0;
  std::size_t n = 0;
  for (double x : inter_command_ms)
    if (!std::isnan(x)) sq += (x - mean) * (x - mean), ++n;
  return n < 2 ? std::nan("") : std::sqrt(sq / static_cast<double>(n - 1));
}

BenchResult run_benchmark(const BenchOptions& o) {
  o.params.validate();
  if (!(o.rate_hz > 0.0) || !(o.duration_s > 0.0)) throw Error(ErrorCode::BadArgument, "rate and duration must be positive");

  auto sock = net::udp_connect(o.device_udp);
  BenchResult result;
  auto& m = result.metrics;

  std::atomic<std::size_t> records{0};
  std::unique_ptr<listener::TcpClient> client;
  std::uint64_t sub = 0;
  if (o.measurer) {
    client = std::make_unique<listener::TcpClient>(*o.measurer);
    sub = client->subscribe("taskstats rate=" + measurer::format_real(o.stream_rate_hz),
                            [&records](const measurer::RecordSet&) { ++records; });
  }

  const double period_s = 1.0 / o.rate_hz;
  const auto period = std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(period_s));
  const auto n = static_cast<std::size_t>(std::llround(o.duration_s * o.rate_hz));
  const auto substeps = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(period_s / 0.001)));
  const double h = period_s / static_cast<double>(substeps);

  std::vector<std::optional<Clock::time_point>> sent(n);
  std::vector<bool> answered(n, false);
  std::optional<Clock::time_point> last_receipt;
  std::optional<std::uint32_t> applied_seq;
  double u = 0.0;
  bool refused = false;

  auto on_datagram = [&](ByteView data, Clock::time_point at) {
    auto cmd = CommandMsg::decode(data);
    if (!cmd || cmd->seq >= n || !sent[cmd->seq] || answered[cmd->seq]) return;
    auto latency = at - *sent[cmd->seq];
    if (latency > o.drop_timeout) return;  // too late: counted as a drop
    answered[cmd->seq] = true;
    m.seqs.push_back(cmd->seq);
    m.latencies_ms.push_back(std::chrono::duration<double, std::milli>(latency).count());
    m.inter_command_ms.push_back(last_receipt ? std::chrono::duration<double, std::milli>(at - *last_receipt).count()
                                              : std::nan(""));
    last_receipt = at;
    if (!applied_seq || cmd->seq >= *applied_seq) {
      applied_seq = cmd->seq;
      u = cmd->u;
    }
  };

  // Handles replies until `until`.
  auto pump = [&](Clock::time_point until) {
    std::uint8_t buf[64];
    while (true) {
      auto now = Clock::now();
      int timeout_ms = 0;
      if (until > now)
        timeout_ms = static_cast<int>(std::chrono::ceil<std::chrono::milliseconds>(until - now).count());
      pollfd pfd{sock.fd(), POLLIN, 0};
      int r = ::poll(&pfd, 1, timeout_ms);
      if (r > 0) {
        while (true) {
          auto got = ::recv(sock.fd(), buf, sizeof buf, MSG_DONTWAIT);
          if (got < 0) {
            if (errno == ECONNREFUSED) refused = true;
            break;
          }
          on_datagram(ByteView(buf, static_cast<std::size_t>(got)), Clock::now());
        }
      }
      if (Clock::now() >= until) return;
      if (r == 0 && timeout_ms == 0) return;
    }
  };

  std::mt19937_64 rng(o.seed);
  std::normal_distribution<double> noise(0.0, o.params.noise_sigma);
  PendulumState s{o.params.theta0, 0.0};
  auto t0 = Clock::now() + std::chrono::milliseconds(5);

  for (std::size_t k = 0; k < n; ++k) {
    auto start = t0 + k * period;
    pump(start);
    result.trajectory.push_back({static_cast<double>(k) * period_s, s.theta, s.theta_dot, u});

    auto now = Clock::now();
    SensorMsg msg{static_cast<std::uint32_t>(k),
                  static_cast<std::uint64_t>(
                      std::chrono::duration_cast<std::chrono::nanoseconds>(now.time_since_epoch()).count()),
                  s.theta, s.theta_dot};
    auto bytes = msg.encode();
    sent[k] = now;
    ::send(sock.fd(), bytes.data(), bytes.size(), 0);
    ++m.n_samples;

    double delta = o.noise ? noise(rng) : 0.0;
    for (std::size_t j = 0; j < substeps; ++j) {
      if (j > 0) pump(start + std::chrono::duration_cast<Clock::duration>(j * std::chrono::duration<double>(h)));
      s = dynamics_step(s, u, h, delta, o.params);
    }
    if (!std::isfinite(s.theta) || std::abs(s.theta) > M_PI) result.aborted = true;
    if ((result.aborted || k + 1 == static_cast<std::size_t>(o.rate_hz)) && m.latencies_ms.empty())
      throw Error(ErrorCode::ConnectionLost, "controller at " + o.device_udp.str() +
                                                 (refused ? " refused the datagrams" : " is not answering"));
    if (result.aborted) break;
  }
  pump(Clock::now() + o.drop_timeout);
  result.trajectory.push_back({static_cast<double>(m.n_samples) * period_s, s.theta, s.theta_dot, u});
  m.dropped = m.n_samples - m.latencies_ms.size();

  if (client) {
    try {
      client->unsubscribe(sub);
    } catch (const Error&) {
    }
    result.stream_records = records;
  }
  return result;
}

void write_trajectory_csv(const std::filesystem::path& path, const std::vector<TrajectoryPoint>& t) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::BadArgument, "cannot write " + path.string());
  out << "t,theta,theta_dot,u\n";
  char line[128];
  for (const auto& p : t) {
    std::snprintf(line, sizeof line, "%.3f,%.9g,%.9g,%.9g\n", p.t, p.theta, p.theta_dot, p.u);
    out << line;
  }
}

void write_metrics_csv(const std::filesystem::path& path, const LoopMetrics& m) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::BadArgument, "cannot write " + path.string());
  out << "seq,latency_ms,inter_command_ms\n";
  char line[128];
  for (std::size_t i = 0; i < m.latencies_ms.size(); ++i) {
    if (std::isnan(m.inter_command_ms[i]))
      std::snprintf(line, sizeof line, "%u,%.4f,\n", m.seqs[i], m.latencies_ms[i]);
    else
      std::snprintf(line, sizeof line, "%u,%.4f,%.4f\n", m.seqs[i], m.latencies_ms[i], m.inter_command_ms[i]);
    out << line;
  }
}

std::string summary_line(const LoopMetrics& m) {
  char line[128];
  std::snprintf(line, sizeof line, "mean_latency_ms=%.4f p99_ms=%.4f drops=%zu", m.mean_latency_ms(), m.p99_ms(),
                m.dropped);
  return line;
}

}  // namespace diver::pendulum
