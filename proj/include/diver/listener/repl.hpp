#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "diver/listener/monitor.hpp"

namespace diver::listener {

/// Column-aligned text table with a `#kind tick=N` caption.
std::string render_table(const measurer::RecordSet& rs);
std::string render_alert(const Alert& a);

/// Operator console. Lines go to the measurer verbatim except the local
/// verbs: baseline build|save|load|check|show, alerts, history, quit.
class Repl {
 public:
  explicit Repl(Monitor& monitor, Tolerances tolerances = {});

  /// Runs one line and returns what to print. Device and local errors are
  /// rendered, never thrown.
  std::string execute(const std::string& line);
  void run(std::istream& in, std::ostream& out);

  const std::vector<std::string>& history() const { return history_; }
  bool done() const { return done_; }

 private:
  std::string local_baseline(const std::vector<std::string>& args);

  Monitor& monitor_;
  Tolerances tolerances_;
  std::vector<std::string> history_;
  bool done_ = false;
};

}  // namespace diver::listener
