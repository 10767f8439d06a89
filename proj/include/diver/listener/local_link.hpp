#pragma once

#include <map>
#include <mutex>

#include "diver/listener/link.hpp"
#include "diver/measurer/backend.hpp"

namespace diver::listener {

/// In-process link over a stepped device. Simulated time only moves inside
/// elapse() (and verbs such as task_activity), so a 60 s window costs a
/// fraction of a second.
class LocalLink : public Link {
 public:
  explicit LocalLink(sim::Device& device, measurer::DispatchOptions options = {.allow_inject = true});

  std::string request_text(const std::string& text) override;
  std::uint64_t subscribe(const std::string& text, StreamHandler on_record) override;
  void unsubscribe(std::uint64_t sub_id) override;
  void elapse(std::chrono::milliseconds d) override;
  bool connected() const override { return true; }

  sim::Device& device() { return device_; }

 private:
  struct Sub {
    measurer::Command command;
    std::uint64_t period_ticks = 1000;
    std::uint64_t next_due = 0;
    StreamHandler handler;
  };
  class Context;

  sim::Device& device_;
  measurer::SteppedDevice access_;
  measurer::Dispatcher dispatcher_;
  std::recursive_mutex mu_;
  std::map<std::uint64_t, Sub> subs_;
  std::uint64_t next_sub_ = 1;
  StreamHandler pending_;
};

}  // namespace diver::listener
