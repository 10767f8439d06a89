#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "diver/util/bytes.hpp"

namespace diver::sim {
class Device;
}

namespace diver::pendulum {

struct PendulumState {
  double theta = 0.0;      // rad
  double theta_dot = 0.0;  // rad/s
};

struct PendulumParams {
  double m = 2.0;
  double l = 0.5;
  double g = 9.81;
  double noise_sigma = 1.0;  // std dev of the disturbance
  double theta0 = 0.5;

  /// Throws BadArgument unless m and l are positive.
  void validate() const;
};

struct ControllerGains {
  double k1 = 12.5;
  double k2 = 2.25;
};

/// theta'' = (g/l) sin(theta) + u / (m l^2) + delta
double angular_acceleration(const PendulumState& s, double u, double delta, const PendulumParams& p = {});

/// One RK4 step with u and delta held over the step.
PendulumState dynamics_step(const PendulumState& s, double u, double dt, double delta,
                            const PendulumParams& p = {});

/// u = -k1 theta - k2 theta_dot
double control_law(double theta, double theta_dot, const ControllerGains& k = {});

struct TrajectoryPoint {
  double t = 0;
  double theta = 0;
  double theta_dot = 0;
  double u = 0;
};

struct OfflineOptions {
  double duration_s = 20.0;
  double control_period_s = 0.01;
  double dt = 0.001;
  bool noise = false;
  std::uint64_t seed = 1;
};

/// Closed loop without networking: the command is computed from the state at
/// each control instant and held, delta is drawn once per period. One point
/// per control period.
std::vector<TrajectoryPoint> simulate_offline(const PendulumParams& p, const ControllerGains& k,
                                              const OfflineOptions& o);

// Datagrams, little-endian.

struct SensorMsg {
  static constexpr std::size_t kSize = 28;
  std::uint32_t seq = 0;
  std::uint64_t t_send_ns = 0;
  double theta = 0;
  double theta_dot = 0;

  Bytes encode() const;
  static std::optional<SensorMsg> decode(ByteView b);
};

struct CommandMsg {
  static constexpr std::size_t kSize = 12;
  std::uint32_t seq = 0;
  double u = 0;

  Bytes encode() const;
  static std::optional<CommandMsg> decode(ByteView b);
};

/// Controller side: command for a sensor datagram, nothing for junk.
std::optional<Bytes> controller_reply(ByteView sensor, const ControllerGains& k = {});

/// Turns the device's controller task into the UDP responder.
void install_controller(sim::Device& device, const ControllerGains& k = {});

}  // namespace diver::pendulum
