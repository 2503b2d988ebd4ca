#include <httplib.h>

#include <condition_variable>
#include <cstdio>
#include <deque>
#include <map>
#include <mutex>
#include <regex>
#include <thread>

#include "common.hpp"

namespace cli {

namespace fs = std::filesystem;

namespace {

const char* kFallbackIndex = R"(<!doctype html>
<html><head><meta charset="utf-8"><title>modelscope</title></head>
<body><h1>modelscope</h1><p>No UI bundle installed. Runs:</p><ul id="runs"></ul>
<script>
fetch('/api/runs').then(r => r.json()).then(runs => {
  const ul = document.getElementById('runs');
  for (const r of runs) {
    const li = document.createElement('li');
    li.textContent = r.id + ' (' + r.status + ')';
    for (const k of r.kinds) {
      const a = document.createElement('a');
      a.href = '/api/' + k + '/' + encodeURIComponent(r.id);
      a.textContent = ' ' + k;
      li.appendChild(a);
    }
    ul.appendChild(li);
  }
});
</script></body></html>
)";

enum class Status { Queued, Running, Done, Failed };

const char* name(Status s) {
  switch (s) {
    case Status::Queued: return "queued";
    case Status::Running: return "running";
    case Status::Done: return "done";
    case Status::Failed: return "failed";
  }
  return "?";
}

struct Run {
  std::string id;
  Status status = Status::Done;
  std::vector<std::string> kinds;  // result documents present
  std::optional<json> config;      // pending runs only
  json error;
};

bool valid_id(const std::string& id) {
  static const std::regex re("[A-Za-z0-9_.-]{1,64}");
  return std::regex_match(id, re) && id != "." && id != "..";
}

class Service {
 public:
  Service(fs::path root, int cores) : root_(std::move(root)), cores_(cores) {
    fs::create_directories(root_);
    scan();
    worker_ = std::jthread([this](std::stop_token st) { work(st); });
  }

  ~Service() {
    worker_.request_stop();
    cv_.notify_all();
  }

  json list() {
    std::lock_guard lock(mu_);
    json out = json::array();
    for (const auto& [id, r] : runs_) out.push_back(describe(r));
    return out;
  }

  std::optional<json> status(const std::string& id) {
    std::lock_guard lock(mu_);
    auto it = runs_.find(id);
    if (it == runs_.end()) return std::nullopt;
    return describe(it->second);
  }

  /// Path of a finished result document, if any.
  std::optional<fs::path> document(const std::string& id, const std::string& kind) {
    std::lock_guard lock(mu_);
    auto it = runs_.find(id);
    if (it == runs_.end() || it->second.status != Status::Done) return std::nullopt;
    const auto& k = it->second.kinds;
    if (std::find(k.begin(), k.end(), kind) == k.end()) return std::nullopt;
    return root_ / id / (kind + ".json");
  }

  /// Config of a run, from its first result document or its pending request.
  std::optional<json> config_of(const std::string& id) {
    std::lock_guard lock(mu_);
    auto it = runs_.find(id);
    if (it == runs_.end()) return std::nullopt;
    if (it->second.config) return it->second.config;
    for (const auto& k : it->second.kinds) {
      try {
        return json::parse(read_file(root_ / id / (k + ".json"))).at("config");
      } catch (const std::exception&) {
      }
    }
    return std::nullopt;
  }

  /// 202 with the id, 409 for a taken id, 422 for an invalid config.
  std::pair<int, json> submit(const std::string& kind, json body) {
    if (!body.is_object()) return {422, error_report(MS_INVALID_ARGUMENT, "body must be a JSON object")};
    std::string id;
    if (body.contains("id")) {
      if (!body["id"].is_string() || !valid_id(body["id"].get<std::string>()))
        return {422, error_report(MS_INVALID_ARGUMENT, "id must match [A-Za-z0-9_.-]{1,64}")};
      id = body["id"].get<std::string>();
      body.erase("id");
    }
    if (body.contains("command") && body["command"] != kind)
      return {422, error_report(MS_INVALID_ARGUMENT, "command does not match the endpoint")};
    body["command"] = kind;
    body.erase("out");
    json cfg;
    try {
      cfg = normalize(body);
    } catch (const ApiError& e) {
      return {422, error_report(e.status, e.what())};
    }
    std::lock_guard lock(mu_);
    if (id.empty()) {
      do id = "run-" + std::to_string(++counter_);
      while (runs_.count(id) || fs::exists(root_ / id));
    } else if (runs_.count(id) || fs::exists(root_ / id)) {
      return {409, error_report(MS_INVALID_ARGUMENT, "run id '" + id + "' already exists")};
    }
    cfg["out"] = (root_ / id).string();
    cfg["cores"] = cores_;
    Run r;
    r.id = id;
    r.status = Status::Queued;
    r.config = cfg;
    runs_[id] = r;
    queue_.push_back(id);
    cv_.notify_one();
    return {202, {{"id", id}, {"status", name(Status::Queued)}}};
  }

 private:
  json describe(const Run& r) const {
    json j = {{"id", r.id}, {"status", name(r.status)}, {"kinds", r.kinds}};
    if (!r.error.is_null()) j["error"] = r.error;
    return j;
  }

  void scan() {
    for (const auto& entry : fs::directory_iterator(root_)) {
      if (!entry.is_directory()) continue;
      Run r;
      r.id = entry.path().filename().string();
      if (!valid_id(r.id)) continue;
      for (const char* k : {"vis", "af"})
        if (fs::exists(entry.path() / (std::string(k) + ".json"))) r.kinds.push_back(k);
      if (!r.kinds.empty()) runs_[r.id] = std::move(r);
    }
  }

  void work(std::stop_token st) {
    while (!st.stop_requested()) {
      std::string id;
      json cfg;
      {
        std::unique_lock lock(mu_);
        if (!cv_.wait(lock, st, [&] { return !queue_.empty(); })) return;
        id = queue_.front();
        queue_.pop_front();
        runs_[id].status = Status::Running;
        cfg = *runs_[id].config;
      }
      Status final_status = Status::Done;
      json error;
      std::string kind;
      try {
        const json doc = run(cfg);
        kind = doc.at("kind").get<std::string>();
        persist(doc, cfg.at("out").get<std::string>(), cfg.value("plots", false));
      } catch (const ApiError& e) {
        final_status = Status::Failed;
        error = error_report(e.status, e.what()).at("error");
      } catch (const std::exception& e) {
        final_status = Status::Failed;
        error = error_report(MS_INTERNAL, e.what()).at("error");
      }
      std::lock_guard lock(mu_);
      auto& r = runs_[id];
      r.status = final_status;
      r.error = error;
      if (final_status == Status::Done) r.kinds.push_back(kind);
    }
  }

  fs::path root_;
  int cores_;
  std::mutex mu_;
  std::condition_variable_any cv_;
  std::map<std::string, Run> runs_;
  std::deque<std::string> queue_;
  int counter_ = 0;
  std::jthread worker_;
};

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

}  // namespace

int serve(const fs::path& results, const std::string& host, int port, const std::optional<fs::path>& ui,
          int cores) {
  Service service(results, cores);
  httplib::Server server;

  server.Get("/api/runs", [&](const httplib::Request&, httplib::Response& res) {
    send_json(res, 200, service.list());
  });
  server.Get(R"(/api/runs/([^/]+)/status)", [&](const httplib::Request& req, httplib::Response& res) {
    if (auto s = service.status(req.matches[1])) return send_json(res, 200, *s);
    send_json(res, 404, error_report(MS_INVALID_ARGUMENT, "unknown run"));
  });
  for (const std::string kind : {"vis", "af"}) {
    server.Get("/api/" + kind + R"(/([^/]+))", [&, kind](const httplib::Request& req, httplib::Response& res) {
      const auto path = service.document(req.matches[1], kind);
      if (!path) return send_json(res, 404, error_report(MS_INVALID_ARGUMENT, "no " + kind + " result for this run"));
      try {
        res.set_content(read_file(*path), "application/json");
      } catch (const std::exception& e) {
        send_json(res, 500, error_report(MS_IO, e.what()));
      }
    });
    server.Post("/api/" + kind, [&, kind](const httplib::Request& req, httplib::Response& res) {
      json body;
      try {
        body = json::parse(req.body);
      } catch (const json::exception& e) {
        return send_json(res, 422, error_report(MS_INVALID_ARGUMENT, e.what()));
      }
      auto [status, reply] = service.submit(kind, std::move(body));
      send_json(res, status, reply);
    });
  }
  server.Get(R"(/api/dataset/([^/]+)/columns)", [&](const httplib::Request& req, httplib::Response& res) {
    const auto cfg = service.config_of(req.matches[1]);
    if (!cfg) return send_json(res, 404, error_report(MS_INVALID_ARGUMENT, "unknown run"));
    std::vector<std::string> factors = cfg->value("factors", std::vector<std::string>{});
    std::vector<const char*> fptr;
    for (const auto& f : factors) fptr.push_back(f.c_str());
    ms_dataset* d = nullptr;
    const ms_status s = ms_dataset_load(cfg->value("data", "").c_str(), cfg->value("response", "").c_str(),
                                        cfg->value("family", "gaussian").c_str(), fptr.data(), fptr.size(), &d);
    if (s != MS_OK) return send_json(res, 404, error_report(s, ms_last_error()));
    CString out;
    const ms_status c = ms_dataset_columns_json(d, &out.p);
    ms_dataset_free(d);
    if (c != MS_OK) return send_json(res, 500, error_report(c, ms_last_error()));
    res.set_content(out.str(), "application/json");
  });

  if (ui && fs::is_directory(*ui)) {
    server.set_mount_point("/", ui->string());
  } else {
    server.Get("/", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(kFallbackIndex, "text/html");
    });
  }

  if (port == 0) {
    port = server.bind_to_any_port(host);
  } else if (!server.bind_to_port(host, port)) {
    std::fprintf(stderr, "cannot bind %s:%d\n", host.c_str(), port);
    return 1;
  }
  std::printf("listening on http://%s:%d\n", host.c_str(), port);
  std::fflush(stdout);
  server.listen_after_bind();
  return 0;
}

}  // namespace cli
