#include "diver/listener/gateway.hpp"

#include <condition_variable>
#include <deque>
#include <set>

#include "diver/measurer/command.hpp"
#include "httplib.h"

namespace diver::listener {

using measurer::RecordSet;
using nlohmann::json;

namespace {

struct StreamClient {
  std::mutex mu;
  std::condition_variable cv;
  std::deque<std::string> queue;
  bool closed = false;
};

int status_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::ConnectionLost:
    case ErrorCode::Timeout:
    case ErrorCode::AuthFailure:
      return 502;
    default:
      return 400;
  }
}

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void reply_error(httplib::Response& res, const Error& e) {
  reply(res, status_for(e), {{"error", {{"code", e.name()}, {"message", e.what()}}}});
}

/// Nests the pre-order listing back into a tree for the front end.
json timer_tree_json(const RecordSet& rs) {
  json root = json::array();
  std::vector<json*> stack;  // stack[d] = node at depth d on the current path
  auto rows = timer_rows_from_records(rs);
  int last_timer = -1;
  for (const auto& r : rows) {
    if (r.timer_id != last_timer) {
      json node = {{"timer_id", r.timer_id},
                   {"period_ticks", r.period_ticks},
                   {"divisor", r.divisor},
                   {"callbacks", json::array()},
                   {"children", json::array()}};
      stack.resize(static_cast<std::size_t>(r.depth));
      json& parent_list = stack.empty() ? root : (*stack.back())["children"];
      parent_list.push_back(std::move(node));
      stack.push_back(&parent_list.back());
      last_timer = r.timer_id;
    }
    if (r.has_callback())
      (*stack.back())["callbacks"].push_back({{"callback_id", r.callback_id},
                                              {"kind", r.kind},
                                              {"name", r.name},
                                              {"address", r.address},
                                              {"segment_len", r.segment_len},
                                              {"code_hash", r.code_hash}});
  }
  return root;
}

}  // namespace

struct Gateway::Impl {
  Monitor& monitor;
  net::Endpoint bind;
  httplib::Server http;
  std::thread thread;
  int port = 0;
  std::uint64_t record_listener = 0;
  std::uint64_t alert_listener = 0;

  mutable std::mutex clients_mu;
  std::set<std::shared_ptr<StreamClient>> clients;

  Impl(Monitor& m, net::Endpoint b) : monitor(m), bind(std::move(b)) {}

  void broadcast(const json& event) {
    auto line = event.dump() + "\n";
    std::lock_guard lk(clients_mu);
    for (const auto& c : clients) {
      std::lock_guard cl(c->mu);
      if (c->queue.size() < 1024) c->queue.push_back(line);
      c->cv.notify_all();
    }
  }

  json tasks_json() {
    auto latest = monitor.latest();
    RecordSet rs = latest ? *latest : monitor.link().request("task_details id=all granularity=full");
    auto profiles = monitor.window_profiles();
    json tasks = json::array();
    for (std::size_t i = 0; i < rs.rows.size(); ++i) {
      json t = json::object();
      for (std::size_t c = 0; c < rs.columns.size(); ++c)
        if (rs.columns[c] != "sub_id") t[rs.columns[c]] = rs.rows[i][c];
      auto key = task_key(rs.at(i, "name"), rs.has_column("entry_point") ? rs.at(i, "entry_point") : "?");
      auto it = profiles.find(key);
      if (it != profiles.end()) {
        double ready = it->second.state_fractions.at(TaskState::Ready);
        auto level = activity_level(ready, it->second.distinct_pc, monitor.options().activity);
        t["activity"] = {{"ready_bucket", to_string(level.ready_bucket)},
                         {"pc_bucket", to_string(level.pc_bucket)},
                         {"ready_fraction", ready},
                         {"distinct_pc", it->second.distinct_pc},
                         {"samples", it->second.samples}};
      } else {
        t["activity"] = nullptr;
      }
      tasks.push_back(std::move(t));
    }
    return {{"tick", rs.tick}, {"tasks", tasks}};
  }

  void routes() {
    http.Get("/api/tasks", [this](const httplib::Request&, httplib::Response& res) {
      try {
        reply(res, 200, tasks_json());
      } catch (const Error& e) {
        reply_error(res, e);
      }
    });
    http.Get("/api/timer-tree", [this](const httplib::Request&, httplib::Response& res) {
      try {
        auto rs = monitor.link().request("timer_tree");
        reply(res, 200, {{"records", to_json(rs)}, {"tree", timer_tree_json(rs)}});
      } catch (const Error& e) {
        reply_error(res, e);
      }
    });
    http.Get("/api/modules", [this](const httplib::Request&, httplib::Response& res) {
      try {
        reply(res, 200, to_json(monitor.link().request("modules")));
      } catch (const Error& e) {
        reply_error(res, e);
      }
    });
    http.Get("/api/baseline", [this](const httplib::Request&, httplib::Response& res) {
      auto b = monitor.baseline();
      if (!b) return reply(res, 404, {{"error", {{"code", "NoBaseline"}, {"message", "no baseline loaded"}}}});
      reply(res, 200, json::parse(baseline_to_json(*b)));
    });
    http.Get("/api/alerts", [this](const httplib::Request&, httplib::Response& res) {
      json out = json::array();
      for (const auto& a : monitor.alerts().all()) out.push_back(to_json(a));
      reply(res, 200, out);
    });
    http.Post("/api/command", [this](const httplib::Request& req, httplib::Response& res) {
      std::string text;
      try {
        auto body = json::parse(req.body);
        text = body.at("text").get<std::string>();
        measurer::Command::parse(text);
      } catch (const json::exception& e) {
        return reply(res, 400, {{"error", {{"code", "BadRequest"}, {"message", e.what()}}}});
      } catch (const Error& e) {
        return reply(res, 400, {{"error", {{"code", e.name()}, {"message", e.what()}}}});
      }
      try {
        reply(res, 200, to_json(monitor.link().request(text)));
      } catch (const Error& e) {
        reply_error(res, e);
      }
    });
    http.Post("/api/baseline/build", [this](const httplib::Request& req, httplib::Response& res) {
      BuildOptions opts;
      try {
        if (!req.body.empty()) {
          auto body = json::parse(req.body);
          opts.duration_s = body.value("duration_s", opts.duration_s);
          opts.sample_rate_hz = body.value("rate_hz", opts.sample_rate_hz);
        }
      } catch (const json::exception& e) {
        return reply(res, 400, {{"error", {{"code", "BadRequest"}, {"message", e.what()}}}});
      }
      if (auto current = monitor.baseline()) opts.tolerances = current->tolerances;
      try {
        auto b = build_baseline(monitor.link(), opts);
        monitor.set_baseline(b);
        reply(res, 200, {{"device_id", b.device_id},
                         {"sample_count", b.sample_count},
                         {"tasks", b.task_profiles.size()},
                         {"modules", b.modules.size()},
                         {"timer_rows", b.timer_tree.size()}});
      } catch (const Error& e) {
        reply_error(res, e);
      }
    });
    http.Get("/api/stream", [this](const httplib::Request&, httplib::Response& res) {
      auto client = std::make_shared<StreamClient>();
      {
        std::lock_guard lk(clients_mu);
        clients.insert(client);
      }
      res.set_header("Cache-Control", "no-cache");
      res.set_chunked_content_provider(
          "application/x-ndjson",
          [client](std::size_t, httplib::DataSink& sink) {
            std::unique_lock lk(client->mu);
            client->cv.wait_for(lk, std::chrono::milliseconds(500),
                                [&] { return !client->queue.empty() || client->closed; });
            if (client->closed) return false;
            while (!client->queue.empty()) {
              auto line = std::move(client->queue.front());
              client->queue.pop_front();
              lk.unlock();
              if (!sink.write(line.data(), line.size())) return false;
              lk.lock();
            }
            return true;
          },
          [this, client](bool) {
            std::lock_guard lk(clients_mu);
            clients.erase(client);
          });
    });
  }
};

Gateway::Gateway(Monitor& monitor, net::Endpoint bind) : impl_(std::make_unique<Impl>(monitor, std::move(bind))) {
  impl_->routes();
}

Gateway::~Gateway() { stop(); }

void Gateway::start() {
  auto& im = *impl_;
  im.record_listener = im.monitor.listen([&im](const RecordSet& rs) {
    im.broadcast({{"type", "record"}, {"data", to_json(rs)}});
  });
  im.alert_listener = im.monitor.alerts().listen([&im](const Alert& a) {
    im.broadcast({{"type", "alert"}, {"data", to_json(a)}});
  });
  if (im.bind.port == 0) {
    im.port = im.http.bind_to_any_port(im.bind.host);
  } else {
    im.port = im.http.bind_to_port(im.bind.host, im.bind.port) ? im.bind.port : -1;
  }
  if (im.port <= 0) throw Error(ErrorCode::BadArgument, "gateway cannot bind " + im.bind.str());
  im.thread = std::thread([&im] { im.http.listen_after_bind(); });
  im.http.wait_until_ready();
}

void Gateway::stop() {
  auto& im = *impl_;
  if (im.record_listener) im.monitor.unlisten(std::exchange(im.record_listener, 0));
  if (im.alert_listener) im.monitor.alerts().unlisten(std::exchange(im.alert_listener, 0));
  {
    std::lock_guard lk(im.clients_mu);
    for (const auto& c : im.clients) {
      std::lock_guard cl(c->mu);
      c->closed = true;
      c->cv.notify_all();
    }
  }
  im.http.stop();
  if (im.thread.joinable()) im.thread.join();
}

std::uint16_t Gateway::port() const { return static_cast<std::uint16_t>(impl_->port); }

std::size_t Gateway::stream_clients() const {
  std::lock_guard lk(impl_->clients_mu);
  return impl_->clients.size();
}

}  // namespace diver::listener
