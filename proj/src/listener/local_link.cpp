#include "diver/listener/local_link.hpp"

#include <cmath>

namespace diver::listener {

using measurer::Command;

class LocalLink::Context : public measurer::SessionContext {
 public:
  explicit Context(LocalLink& link) : link_(link) {}

  std::uint64_t subscribe(const Command& command, double rate_hz) override {
    auto period = static_cast<std::uint64_t>(std::llround(sim::kTicksPerSecond / rate_hz));
    if (period == 0) period = 1;
    auto id = link_.next_sub_++;
    link_.subs_[id] = Sub{command, period, link_.device_.state().uptime_ticks + period, std::move(link_.pending_)};
    link_.pending_ = nullptr;
    return id;
  }

  bool unsubscribe(std::uint64_t sub_id) override { return link_.subs_.erase(sub_id) > 0; }

 private:
  LocalLink& link_;
};

LocalLink::LocalLink(sim::Device& device, measurer::DispatchOptions options)
    : device_(device), access_(device), dispatcher_(access_, options) {}

std::string LocalLink::request_text(const std::string& text) {
  std::lock_guard lk(mu_);
  Context ctx(*this);
  return dispatcher_.handle(text, &ctx);
}

std::uint64_t LocalLink::subscribe(const std::string& text, StreamHandler on_record) {
  std::lock_guard lk(mu_);
  pending_ = std::move(on_record);
  Context ctx(*this);
  auto reply = dispatcher_.handle(text, &ctx);
  pending_ = nullptr;
  auto ack = measurer::parse_response(reply);
  if (!ack.has_column("sub_id") || ack.rows.empty())
    throw Error(ErrorCode::BadArgument, "'" + text + "' did not start a stream");
  return std::stoull(ack.at(0, "sub_id"));
}

void LocalLink::unsubscribe(std::uint64_t sub_id) {
  std::lock_guard lk(mu_);
  subs_.erase(sub_id);
}

void LocalLink::elapse(std::chrono::milliseconds d) {
  std::lock_guard lk(mu_);
  auto end = device_.state().uptime_ticks + static_cast<std::uint64_t>(d.count());
  while (true) {
    auto now = device_.state().uptime_ticks;
    auto next = end;
    for (const auto& [id, s] : subs_) next = std::min(next, s.next_due);
    if (next > now) device_.advance(next - now);
    now = device_.state().uptime_ticks;
    // Handlers may unsubscribe; collect due ids first.
    std::vector<std::uint64_t> due;
    for (const auto& [id, s] : subs_)
      if (s.next_due <= now) due.push_back(id);
    for (auto id : due) {
      auto it = subs_.find(id);
      if (it == subs_.end()) continue;
      it->second.next_due += it->second.period_ticks;
      auto handler = it->second.handler;
      try {
        auto rs = dispatcher_.stream_record(id, it->second.command);
        if (handler) handler(rs);
      } catch (const Error&) {
        // Same as the server: a failed emission does not end the stream.
      }
    }
    if (now >= end) break;
  }
}

}  // namespace diver::listener
