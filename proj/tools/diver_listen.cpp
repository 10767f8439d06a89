// Remote listener: baseline building, monitoring, operator console, gateway.

#include <csignal>
#include <iostream>

#include "CLI11.hpp"
#include "diver/listener/client.hpp"
#include "diver/listener/gateway.hpp"
#include "diver/listener/repl.hpp"

using namespace diver;
using namespace diver::listener;

int main(int argc, char** argv) {
  CLI::App app{"DIVER listener"};
  std::string device, psk_hex, psk_id = "ops", encrypt = "on", baseline_path, gateway, mode = "repl";
  std::string config_path, alerts_out;
  double duration = 60, rate = 1, check_interval = 10;
  app.add_option("--device", device, "Measurer endpoint host:port")->required();
  app.add_option("--psk-hex", psk_hex, "16-byte pre-shared key, hex");
  app.add_option("--psk-id", psk_id, "Key identifier");
  app.add_option("--encrypt", encrypt, "on|off")->check(CLI::IsMember({"on", "off"}));
  app.add_option("--baseline", baseline_path, "Baseline file");
  app.add_option("--gateway", gateway, "Serve the HTTP gateway on host:port");
  app.add_option("--mode", mode, "repl|monitor|build-baseline")
      ->check(CLI::IsMember({"repl", "monitor", "build-baseline"}));
  app.add_option("--duration", duration, "Baseline duration in seconds");
  app.add_option("--rate", rate, "Sampling rate in Hz");
  app.add_option("--config", config_path, "Detector thresholds (JSON)");
  app.add_option("--alerts-out", alerts_out, "Append alerts here as JSON lines");
  app.add_option("--check-interval", check_interval, "Seconds between detection passes in monitor mode");
  CLI11_PARSE(app, argc, argv);

  try {
    ListenerConfig cfg;
    if (!config_path.empty()) cfg = load_listener_config(config_path);

    ClientOptions copts;
    copts.device = net::Endpoint::parse(device);
    copts.encrypt = encrypt == "on";
    copts.psk_id = psk_id;
    if (copts.encrypt) {
      if (psk_hex.empty()) throw Error(ErrorCode::BadArgument, "--psk-hex is required with --encrypt on");
      copts.psk = channel::ascon::key_from(from_hex(psk_hex));
    }

    sigset_t sigs;
    sigemptyset(&sigs);
    sigaddset(&sigs, SIGINT);
    sigaddset(&sigs, SIGTERM);
    if (mode == "monitor") pthread_sigmask(SIG_BLOCK, &sigs, nullptr);

    TcpClient link(copts);

    if (mode == "build-baseline") {
      if (baseline_path.empty()) throw Error(ErrorCode::BadArgument, "--baseline is required");
      BuildOptions opts;
      opts.duration_s = duration;
      opts.sample_rate_hz = rate;
      opts.tolerances = cfg.tolerances;
      std::cout << "sampling for " << duration << " s at " << rate << " Hz\n" << std::flush;
      auto b = build_baseline(link, opts);
      save_baseline(b, baseline_path);
      std::cout << "baseline: " << b.sample_count << " samples, " << b.task_profiles.size() << " tasks, "
                << b.modules.size() << " modules -> " << baseline_path << "\n";
      return 0;
    }

    AlertStore store(alerts_out.empty() ? std::nullopt : std::optional<std::filesystem::path>(alerts_out));
    MonitorOptions mopts;
    mopts.sample_rate_hz = rate;
    mopts.check_interval = std::chrono::milliseconds(static_cast<std::int64_t>(check_interval * 1000));
    mopts.activity = cfg.activity;
    Monitor monitor(link, store, mopts);
    if (!baseline_path.empty()) {
      auto b = load_baseline(baseline_path);
      b.tolerances = config_path.empty() ? b.tolerances : cfg.tolerances;
      monitor.set_baseline(b);
    }
    monitor.attach();

    std::unique_ptr<Gateway> gw;
    if (!gateway.empty()) {
      gw = std::make_unique<Gateway>(monitor, net::Endpoint::parse(gateway));
      gw->start();
      std::cerr << "gateway on port " << gw->port() << "\n";
    }

    if (mode == "monitor") {
      if (!monitor.baseline()) throw Error(ErrorCode::BadArgument, "--baseline is required for monitor mode");
      store.listen([](const Alert& a) { std::cout << to_json(a).dump() << std::endl; });
      monitor.start();
      int sig = 0;
      sigwait(&sigs, &sig);
      monitor.stop();
    } else {
      Repl repl(monitor, cfg.tolerances);
      repl.run(std::cin, std::cout);
    }
    if (gw) gw->stop();
    monitor.detach();
  } catch (const Error& e) {
    std::cerr << "diver-listen: " << e.name() << ": " << e.what() << "\n";
    return 1;
  }
  return 0;
}
