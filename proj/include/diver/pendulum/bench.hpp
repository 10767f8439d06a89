#pragma once

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "diver/listener/client.hpp"
#include "diver/pendulum/dynamics.hpp"

namespace diver::pendulum {

struct LoopMetrics {
  std::size_t n_samples = 0;
  std::vector<std::uint32_t> seqs;       // one per received command
  std::vector<double> latencies_ms;      // sensor send -> command receipt
  std::vector<double> inter_command_ms;  // receipt gaps; NaN for the first command
  std::size_t dropped = 0;

  double mean_latency_ms() const;
  double p99_ms() const;
  /// Mean and std of the receipt gaps (jitter).
  double mean_inter_command_ms() const;
  double inter_command_std_ms() const;
};

struct BenchOptions {
  net::Endpoint device_udp;
  double duration_s = 20.0;
  double rate_hz = 100.0;
  std::chrono::milliseconds drop_timeout{50};
  PendulumParams params;
  ControllerGains gains;  // only used for the offline comparison
  bool noise = true;
  std::uint64_t seed = 1;
  /// When set, a listener subscribes `taskstats rate=<stream_rate_hz>` for the run.
  std::optional<listener::ClientOptions> measurer;
  double stream_rate_hz = 10.0;
};

struct BenchResult {
  LoopMetrics metrics;
  std::vector<TrajectoryPoint> trajectory;  // one point per control period
  bool aborted = false;                     // |theta| exceeded pi
  std::size_t stream_records = 0;
};

/// Physics sender and metrics collector. Throws ConnectionLost when the
/// controller does not answer at all during the first second.
BenchResult run_benchmark(const BenchOptions& options);

void write_trajectory_csv(const std::filesystem::path& path, const std::vector<TrajectoryPoint>& t);
void write_metrics_csv(const std::filesystem::path& path, const LoopMetrics& m);
/// `mean_latency_ms=<x> p99_ms=<y> drops=<n>`
std::string summary_line(const LoopMetrics& m);

}  // namespace diver::pendulum
