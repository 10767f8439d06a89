#include "diver/listener/alerts.hpp"

#include <fstream>

namespace diver::listener {

using nlohmann::json;

json to_json(const Alert& a) {
  return {{"category", to_string(a.category)},
          {"severity", to_string(a.severity)},
          {"kind", a.kind},
          {"subject", a.subject},
          {"detail", a.detail},
          {"observed_at_tick", a.observed_at_tick},
          {"baseline_ref", a.baseline_ref}};
}

Alert alert_from_json(const json& j) {
  Alert a;
  a.category = parse_category(j.at("category").get<std::string>());
  a.severity = parse_alert_severity(j.at("severity").get<std::string>());
  a.kind = j.at("kind");
  a.subject = j.at("subject");
  a.detail = j.at("detail");
  a.observed_at_tick = j.at("observed_at_tick");
  a.baseline_ref = j.at("baseline_ref");
  return a;
}

json to_json(const measurer::RecordSet& rs) {
  return {{"kind", rs.kind}, {"tick", rs.tick}, {"columns", rs.columns}, {"rows", rs.rows}};
}

AlertStore::AlertStore(std::optional<std::filesystem::path> export_path) : export_path_(std::move(export_path)) {}

std::vector<Alert> AlertStore::add(const std::vector<Alert>& alerts) {
  std::vector<Alert> fresh;
  std::vector<Listener> targets;
  {
    std::lock_guard lk(mu_);
    for (const auto& a : alerts) {
      if (!seen_.insert(a.key()).second) continue;
      alerts_.push_back(a);
      fresh.push_back(a);
    }
    if (fresh.empty()) return fresh;
    if (export_path_) {
      std::ofstream out(*export_path_, std::ios::app);
      for (const auto& a : fresh) out << to_json(a).dump() << "\n";
    }
    for (const auto& [id, fn] : listeners_) targets.push_back(fn);
  }
  for (const auto& fn : targets)
    for (const auto& a : fresh) fn(a);
  return fresh;
}

std::vector<Alert> AlertStore::all() const {
  std::lock_guard lk(mu_);
  return alerts_;
}

std::size_t AlertStore::size() const {
  std::lock_guard lk(mu_);
  return alerts_.size();
}

std::uint64_t AlertStore::listen(Listener fn) {
  std::lock_guard lk(mu_);
  auto id = next_listener_++;
  listeners_[id] = std::move(fn);
  return id;
}

void AlertStore::unlisten(std::uint64_t id) {
  std::lock_guard lk(mu_);
  listeners_.erase(id);
}

}  // namespace diver::listener
