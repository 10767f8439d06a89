#include "diver/pendulum/dynamics.hpp"

#include <cmath>
#include <random>

#include "diver/sim/device.hpp"
#include "diver/util/error.hpp"

namespace diver::pendulum {

void PendulumParams::validate() const {
  if (!(m > 0.0) || !(l > 0.0)) throw Error(ErrorCode::BadArgument, "pendulum mass and length must be positive");
}

double angular_acceleration(const PendulumState& s, double u, double delta, const PendulumParams& p) {
  return (p.g / p.l) * std::sin(s.theta) + u / (p.m * p.l * p.l) + delta;
}

PendulumState dynamics_step(const PendulumState& s, double u, double dt, double delta, const PendulumParams& p) {
  auto f = [&](const PendulumState& x) {
    return PendulumState{x.theta_dot, angular_acceleration(x, u, delta, p)};
  };
  auto add = [](const PendulumState& a, const PendulumState& d, double h) {
    return PendulumState{a.theta + h * d.theta, a.theta_dot + h * d.theta_dot};
  };
  auto k1 = f(s);
  auto k2 = f(add(s, k1, dt / 2));
  auto k3 = f(add(s, k2, dt / 2));
  auto k4 = f(add(s, k3, dt));
  return PendulumState{s.theta + dt / 6 * (k1.theta + 2 * k2.theta + 2 * k3.theta + k4.theta),
                       s.theta_dot + dt / 6 * (k1.theta_dot + 2 * k2.theta_dot + 2 * k3.theta_dot + k4.theta_dot)};
}

double control_law(double theta, double theta_dot, const ControllerGains& k) {
  return -k.k1 * theta - k.k2 * theta_dot;
}

std::vector<TrajectoryPoint> simulate_offline(const PendulumParams& p, const ControllerGains& k,
                                              const OfflineOptions& o) {
  p.validate();
  std::mt19937_64 rng(o.seed);
  std::normal_distribution<double> noise(0.0, p.noise_sigma);
  auto periods = static_cast<std::size_t>(std::llround(o.duration_s / o.control_period_s));
  auto substeps = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(o.control_period_s / o.dt)));
  double h = o.control_period_s / static_cast<double>(substeps);

  std::vector<TrajectoryPoint> out;
  out.reserve(periods + 1);
  PendulumState s{p.theta0, 0.0};
  for (std::size_t i = 0; i < periods; ++i) {
    double u = control_law(s.theta, s.theta_dot, k);
    out.push_back({static_cast<double>(i) * o.control_period_s, s.theta, s.theta_dot, u});
    double delta = o.noise ? noise(rng) : 0.0;
    for (std::size_t j = 0; j < substeps; ++j) s = dynamics_step(s, u, h, delta, p);
  }
  out.push_back({static_cast<double>(periods) * o.control_period_s, s.theta, s.theta_dot,
                 control_law(s.theta, s.theta_dot, k)});
  return out;
}

Bytes SensorMsg::encode() const {
  Bytes b;
  put_le(b, seq, 4);
  put_le(b, t_send_ns, 8);
  put_f64_le(b, theta);
  put_f64_le(b, theta_dot);
  return b;
}

std::optional<SensorMsg> SensorMsg::decode(ByteView b) {
  if (b.size() != kSize) return std::nullopt;
  SensorMsg m;
  m.seq = static_cast<std::uint32_t>(get_le(b.subspan(0, 4), 4));
  m.t_send_ns = get_le(b.subspan(4, 8), 8);
  m.theta = get_f64_le(b.subspan(12, 8));
  m.theta_dot = get_f64_le(b.subspan(20, 8));
  return m;
}

Bytes CommandMsg::encode() const {
  Bytes b;
  put_le(b, seq, 4);
  put_f64_le(b, u);
  return b;
}

std::optional<CommandMsg> CommandMsg::decode(ByteView b) {
  if (b.size() != kSize) return std::nullopt;
  return CommandMsg{static_cast<std::uint32_t>(get_le(b.subspan(0, 4), 4)), get_f64_le(b.subspan(4, 8))};
}

std::optional<Bytes> controller_reply(ByteView sensor, const ControllerGains& k) {
  auto m = SensorMsg::decode(sensor);
  if (!m || !std::isfinite(m->theta) || !std::isfinite(m->theta_dot)) return std::nullopt;
  return CommandMsg{m->seq, control_law(m->theta, m->theta_dot, k)}.encode();
}

void install_controller(sim::Device& device, const ControllerGains& k) {
  const auto* t = device.find_task(sim::kControllerTask);
  if (t == nullptr) throw Error(ErrorCode::NoSuchTask, "controller task not found");
  device.set_io_handler([k](ByteView req) { return controller_reply(req, k); });
  device.make_io_driven(t->task_id);
}

}  // namespace diver::pendulum
