// Closed-loop pendulum benchmark against the device's controller task.

#include <iostream>

#include "CLI11.hpp"
#include "diver/pendulum/bench.hpp"

using namespace diver;
using namespace diver::pendulum;

int main(int argc, char** argv) {
  CLI::App app{"Inverted pendulum latency benchmark"};
  std::string device_udp, stream = "off", measurer, psk_hex, psk_id = "ops", encrypt = "on", out_dir = ".";
  double duration = 20, sigma = 1.0, stream_rate = 10;
  std::uint64_t seed = 1;
  bool offline = false, no_noise = false;
  app.add_option("--device-udp", device_udp, "Controller endpoint host:port");
  app.add_option("--duration", duration, "Seconds");
  app.add_option("--stream", stream, "on|off: measurer streaming during the run")
      ->check(CLI::IsMember({"on", "off"}));
  app.add_option("--measurer", measurer, "Measurer endpoint host:port (for --stream on)");
  app.add_option("--psk-hex", psk_hex, "Measurer key, hex");
  app.add_option("--psk-id", psk_id, "Measurer key identifier");
  app.add_option("--encrypt", encrypt, "on|off")->check(CLI::IsMember({"on", "off"}));
  app.add_option("--stream-rate", stream_rate, "Measurer stream rate in Hz");
  app.add_option("--seed", seed, "Disturbance seed");
  app.add_option("--noise-sigma", sigma, "Std dev of the disturbance");
  app.add_flag("--no-noise", no_noise, "Run with zero disturbance");
  app.add_flag("--offline", offline, "Simulate the loop without networking");
  app.add_option("--out-dir", out_dir, "Directory for trajectory.csv and metrics.csv");
  CLI11_PARSE(app, argc, argv);

  try {
    PendulumParams params;
    params.noise_sigma = sigma;
    std::filesystem::create_directories(out_dir);
    auto dir = std::filesystem::path(out_dir);

    if (offline) {
      OfflineOptions o;
      o.duration_s = duration;
      o.noise = !no_noise;
      o.seed = seed;
      auto traj = simulate_offline(params, ControllerGains{}, o);
      write_trajectory_csv(dir / "trajectory.csv", traj);
      std::cout << "final theta=" << traj.back().theta << "\n";
      return 0;
    }

    if (device_udp.empty()) throw Error(ErrorCode::BadArgument, "--device-udp is required");
    BenchOptions o;
    o.device_udp = net::Endpoint::parse(device_udp);
    o.duration_s = duration;
    o.params = params;
    o.noise = !no_noise;
    o.seed = seed;
    o.stream_rate_hz = stream_rate;
    if (stream == "on") {
      if (measurer.empty()) throw Error(ErrorCode::BadArgument, "--measurer is required with --stream on");
      listener::ClientOptions c;
      c.device = net::Endpoint::parse(measurer);
      c.encrypt = encrypt == "on";
      c.psk_id = psk_id;
      if (c.encrypt) c.psk = channel::ascon::key_from(from_hex(psk_hex));
      o.measurer = c;
    }
    auto r = run_benchmark(o);
    write_trajectory_csv(dir / "trajectory.csv", r.trajectory);
    write_metrics_csv(dir / "metrics.csv", r.metrics);
    std::cout << summary_line(r.metrics) << "\n";
    if (r.aborted) {
      std::cerr << "diver-pendulum: run aborted, |theta| exceeded pi\n";
      return 2;
    }
  } catch (const Error& e) {
    std::cerr << "diver-pendulum: " << e.name() << ": " << e.what() << "\n";
    return 1;
  }
  return 0;
}
