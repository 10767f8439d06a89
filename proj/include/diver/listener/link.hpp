#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <string>

#include "diver/measurer/record_set.hpp"

namespace diver::listener {

/// A connection to one measurer. Implementations are safe to share between
/// threads; stream handlers run on an implementation-owned thread and must
/// not issue requests themselves.
class Link {
 public:
  using StreamHandler = std::function<void(const measurer::RecordSet&)>;

  virtual ~Link() = default;

  /// Response payload verbatim, including `#error` replies.
  virtual std::string request_text(const std::string& text) = 0;
  /// Parsed response; `#error` replies are rethrown.
  measurer::RecordSet request(const std::string& text) {
    return measurer::parse_response(request_text(text));
  }

  /// Starts a stream (`text` carries rate= or stream=on). Records arrive
  /// with the leading sub_id column. Returns the sub_id.
  virtual std::uint64_t subscribe(const std::string& text, StreamHandler on_record) = 0;
  virtual void unsubscribe(std::uint64_t sub_id) = 0;

  /// Blocks while `d` of device time passes. Network links sleep; simulated
  /// links run the device forward and deliver due stream records.
  virtual void elapse(std::chrono::milliseconds d) = 0;

  virtual bool connected() const = 0;
};

}  // namespace diver::listener
