// Simulated device with the measurer implant.

#include <csignal>
#include <iostream>

#include "CLI11.hpp"
#include "diver/measurer/device_host.hpp"
#include "diver/measurer/server.hpp"
#include "diver/pendulum/dynamics.hpp"
#include "diver/sim/fixture.hpp"

using namespace diver;

int main(int argc, char** argv) {
  CLI::App app{"Simulated RTOS device hosting the measurer"};
  std::string fixture_path, dump_path, listen = "127.0.0.1:7700", encrypt = "on", psk_hex, psk_id = "ops";
  std::string control_udp;
  std::uint64_t seed = 42;
  double time_scale = 1.0, idle_s = 120;
  bool allow_inject = false, verbose = false;
  app.add_option("--fixture", fixture_path, "Fixture JSON (default: built-in nominal)");
  app.add_option("--dump-fixture", dump_path, "Write the nominal fixture to this path and exit");
  app.add_option("--seed", seed, "Behavior seed");
  app.add_option("--listen", listen, "Measurer TCP endpoint host:port");
  app.add_option("--encrypt", encrypt, "on|off")->check(CLI::IsMember({"on", "off"}));
  app.add_option("--psk-hex", psk_hex, "16-byte pre-shared key, hex");
  app.add_option("--psk-id", psk_id, "Identifier clients send for the key");
  app.add_option("--time-scale", time_scale, "Device ticks per wall-clock millisecond");
  app.add_option("--control-udp", control_udp, "host:port for the pendulum controller");
  app.add_option("--idle-timeout", idle_s, "Seconds before an idle session is closed");
  app.add_flag("--allow-inject", allow_inject, "Enable the inject verb");
  app.add_flag("-v,--verbose", verbose, "Log connections");
  CLI11_PARSE(app, argc, argv);

  try {
    if (!dump_path.empty()) {
      sim::save_fixture(sim::nominal_fixture(seed), dump_path);
      std::cout << "wrote " << dump_path << "\n";
      return 0;
    }
    auto fixture = fixture_path.empty() ? sim::nominal_fixture(seed) : sim::load_fixture(fixture_path);

    measurer::ServerOptions sopts;
    sopts.listen = net::Endpoint::parse(listen);
    sopts.encrypt = encrypt == "on";
    sopts.idle_timeout = std::chrono::milliseconds(static_cast<std::int64_t>(idle_s * 1000));
    sopts.dispatch.allow_inject = allow_inject;
    sopts.verbose = verbose;
    if (sopts.encrypt) {
      if (psk_hex.empty()) throw Error(ErrorCode::BadArgument, "--psk-hex is required with --encrypt on");
      sopts.psks.add(psk_id, channel::ascon::key_from(from_hex(psk_hex)));
    }

    measurer::HostOptions hopts;
    hopts.time_scale = time_scale;
    if (!control_udp.empty()) hopts.control_udp = net::Endpoint::parse(control_udp);

    // Block termination signals before any thread starts; main waits for them.
    sigset_t sigs;
    sigemptyset(&sigs);
    sigaddset(&sigs, SIGINT);
    sigaddset(&sigs, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &sigs, nullptr);

    measurer::DeviceHost host(fixture, seed, hopts);
    if (hopts.control_udp) host.mutate([](sim::Device& d) { pendulum::install_controller(d); });
    host.start();
    measurer::Server server(host, sopts);
    server.start();
    std::cout << "measurer listening on " << sopts.listen.host << ":" << server.port()
              << (sopts.encrypt ? " (encrypted)" : " (plaintext)") << "\n";
    if (hopts.control_udp) std::cout << "controller on udp port " << host.control_port() << "\n";
    std::cout.flush();

    int sig = 0;
    sigwait(&sigs, &sig);
    server.stop();
    host.stop();
  } catch (const Error& e) {
    std::cerr << "diver-device: " << e.name() << ": " << e.what() << "\n";
    return 1;
  }
  return 0;
}
