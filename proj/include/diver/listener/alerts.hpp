#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <vector>

#include "diver/listener/detectors.hpp"
#include "json.hpp"

namespace diver::listener {

nlohmann::json to_json(const Alert& a);
Alert alert_from_json(const nlohmann::json& j);
nlohmann::json to_json(const measurer::RecordSet& rs);

/// Append-only alert list. Repeats of an already recorded key() are dropped;
/// fresh alerts go to the optional JSON-lines file and to every listener.
class AlertStore {
 public:
  using Listener = std::function<void(const Alert&)>;

  explicit AlertStore(std::optional<std::filesystem::path> export_path = std::nullopt);

  /// Returns the alerts that were new.
  std::vector<Alert> add(const std::vector<Alert>& alerts);
  std::vector<Alert> all() const;
  std::size_t size() const;

  std::uint64_t listen(Listener fn);
  void unlisten(std::uint64_t id);

 private:
  mutable std::mutex mu_;
  std::vector<Alert> alerts_;
  std::set<std::string> seen_;
  std::optional<std::filesystem::path> export_path_;
  std::map<std::uint64_t, Listener> listeners_;
  std::uint64_t next_listener_ = 1;
};

}  // namespace diver::listener
