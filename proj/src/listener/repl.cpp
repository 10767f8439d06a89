#include "diver/listener/repl.hpp"

#include <algorithm>
#include <iostream>
#include <sstream>

namespace diver::listener {

using measurer::RecordSet;

namespace {

std::vector<std::string> split(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string render_error(const Error& e) { return "error: " + std::string(e.name()) + ": " + e.what() + "\n"; }

constexpr const char* kLocalHelp =
    "local verbs:\n"
    "  baseline build [duration_s] [rate_hz]\n"
    "  baseline save <path> | load <path> | check | show\n"
    "  alerts | history | quit\n";

}  // namespace

std::string render_table(const RecordSet& rs) {
  std::ostringstream out;
  out << "#" << rs.kind << " tick=" << rs.tick << "\n";
  std::vector<std::size_t> width(rs.columns.size());
  for (std::size_t c = 0; c < rs.columns.size(); ++c) {
    width[c] = rs.columns[c].size();
    for (const auto& row : rs.rows) width[c] = std::max(width[c], row[c].size());
  }
  auto line = [&](const std::vector<std::string>& cells) {
    std::string text;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      text += cells[c];
      if (c + 1 < cells.size()) text += std::string(width[c] - cells[c].size() + 2, ' ');
    }
    out << text << "\n";
  };
  line(rs.columns);
  std::vector<std::string> rule;
  for (auto w : width) rule.push_back(std::string(w, '-'));
  line(rule);
  for (const auto& row : rs.rows) line(row);
  if (rs.rows.empty()) out << "(no rows)\n";
  return out.str();
}

std::string render_alert(const Alert& a) {
  return "[" + std::string(to_string(a.severity)) + "] " + std::string(to_string(a.category)) + " " + a.kind +
         " " + a.subject + ": " + a.detail + " (tick " + std::to_string(a.observed_at_tick) + ")\n";
}

Repl::Repl(Monitor& monitor, Tolerances tolerances) : monitor_(monitor), tolerances_(tolerances) {}

std::string Repl::execute(const std::string& raw) {
  auto line = trim(raw);
  if (line.empty()) return "";
  history_.push_back(line);
  auto words = split(line);
  const auto& verb = words[0];
  try {
    if (verb == "quit" || verb == "exit") {
      done_ = true;
      return "";
    }
    if (verb == "history") {
      std::string out;
      for (std::size_t i = 0; i < history_.size(); ++i) out += std::to_string(i + 1) + "  " + history_[i] + "\n";
      return out;
    }
    if (verb == "alerts") {
      auto all = monitor_.alerts().all();
      if (all.empty()) return "no alerts\n";
      std::string out;
      for (const auto& a : all) out += render_alert(a);
      return out;
    }
    if (verb == "baseline") return local_baseline({words.begin() + 1, words.end()});

    auto text = monitor_.link().request_text(line);
    if (measurer::is_error_text(text)) {
      try {
        measurer::parse_response(text);
      } catch (const Error& e) {
        return render_error(e);
      }
    }
    auto out = render_table(RecordSet::parse(text));
    if (verb == "help" && words.size() == 1) out += kLocalHelp;
    return out;
  } catch (const Error& e) {
    return render_error(e);
  } catch (const std::exception& e) {
    return std::string("error: ") + e.what() + "\n";
  }
}

std::string Repl::local_baseline(const std::vector<std::string>& args) {
  auto sub = args.empty() ? std::string("show") : args[0];
  auto need = [&]() {
    auto b = monitor_.baseline();
    if (!b) throw Error(ErrorCode::BadArgument, "no baseline loaded");
    return *b;
  };
  auto path_arg = [&]() {
    if (args.size() < 2) throw Error(ErrorCode::BadArgument, "baseline " + sub + " needs a path");
    return args[1];
  };
  if (sub == "build") {
    BuildOptions opts;
    opts.tolerances = tolerances_;
    if (args.size() > 1) opts.duration_s = std::stod(args[1]);
    if (args.size() > 2) opts.sample_rate_hz = std::stod(args[2]);
    auto b = build_baseline(monitor_.link(), opts);
    monitor_.set_baseline(b);
    return "baseline built: " + std::to_string(b.sample_count) + " samples, " +
           std::to_string(b.task_profiles.size()) + " tasks, " + std::to_string(b.modules.size()) + " modules, " +
           std::to_string(b.timer_tree.size()) + " timer rows\n";
  }
  if (sub == "save") {
    auto path = path_arg();
    save_baseline(need(), path);
    return "saved " + path + "\n";
  }
  if (sub == "load") {
    auto path = path_arg();
    monitor_.set_baseline(load_baseline(path));
    return "loaded " + path + "\n";
  }
  if (sub == "check") {
    auto b = need();
    auto window = monitor_.window();
    auto alerts = check_device(monitor_.link(), b, window);
    monitor_.alerts().add(alerts);
    if (alerts.empty()) return "no alerts\n";
    std::string out;
    for (const auto& a : alerts) out += render_alert(a);
    return out;
  }
  if (sub == "show") {
    auto b = need();
    RecordSet rs("baseline", 0, {"task", "READY", "PEND", "PEND_T", "DELAY", "SUSPEND", "distinct_pc", "priority"});
    for (const auto& [key, p] : b.task_profiles) {
      std::vector<std::string> row{key};
      for (auto s : kTrackedStates)
        row.push_back(measurer::format_real(p.state_fractions.contains(s) ? p.state_fractions.at(s) : 0.0));
      row.push_back(std::to_string(p.distinct_pc));
      row.push_back(std::to_string(p.priority));
      rs.add_row(std::move(row));
    }
    return "device " + b.device_id + ", " + std::to_string(b.sample_count) + " samples at " +
           measurer::format_real(b.sample_rate_hz) + " Hz\n" + render_table(rs);
  }
  throw Error(ErrorCode::BadArgument, "unknown baseline verb '" + sub + "'");
}

void Repl::run(std::istream& in, std::ostream& out) {
  std::string line;
  out << "diver> " << std::flush;
  while (!done_ && std::getline(in, line)) {
    out << execute(line);
    if (done_) break;
    out << "diver> " << std::flush;
  }
}

}  // namespace diver::listener
