#include "fairlab/service.hpp"

#include <algorithm>
#include <filesystem>
#include <chrono>
#include <sys/socket.h>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "fairlab/error.hpp"

namespace fairlab {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

Session::Session(std::string id, Scenario scenario)
    : id_(std::move(id)), scenario_(std::move(scenario)), model_(scenario_model(scenario_)) {
  state_ = scenario_initial_state(scenario_, model_);
  for (const auto& v : model_.variables) traj_.variables.push_back(v.id);
  traj_.rows.push_back(state_.values);
  // the opening policy is the schedule's t = 0 event, as in a batch run
  state_ = switch_policy(model_, state_, scenario_.policy());
  traj_.events.push_back({0, scenario_.policy()});
}

void Session::step(int n) {
  if (n < 1 || n > kMaxStepsPerRequest)
    throw Error(ErrorCode::Input, "n must lie in [1, " + std::to_string(kMaxStepsPerRequest) + "]");
  if (state_.t + n > kMaxSessionSteps) throw Error(ErrorCode::State, "session length limit reached");
  for (int k = 0; k < n; ++k) {
    state_ = fairlab::step(model_, state_);
    traj_.rows.push_back(state_.values);
  }
  log_.push_back(json{{"op", "step"}, {"n", n}}.dump());
}

void Session::set_policy(PolicyRegime p) {
  if (!traj_.events.empty() && traj_.events.back().t == state_.t)
    throw Error(ErrorCode::State, "policy already switched at step " + std::to_string(state_.t));
  state_ = switch_policy(model_, state_, p);
  traj_.events.push_back({state_.t, p});
  log_.push_back(json{{"op", "policy"}, {"policy", policy_name(p)}}.dump());
}

std::string Session::summary_json() const {
  const auto& sp = scenario_.simulation;
  ordered_json j;
  j["id"] = id_;
  j["scenario"] = scenario_.name;
  j["t"] = state_.t;
  j["policy"] = policy_name(state_.policy);
  j["events"] = ordered_json::array();
  for (const auto& e : traj_.events) j["events"].push_back({{"t", e.t}, {"policy", policy_name(e.policy)}});
  j["windows"] = {{"t_short", sp.t_short}, {"t_long", sp.t_long}, {"deadband", sp.gap_deadband}};
  if (state_.t > sp.t_long)
    j["gaps"] = ordered_json::parse(gaps_to_json(measure_gaps(traj_, sp.t_short, sp.t_long, sp.gap_deadband)));
  else
    j["gaps"] = nullptr;
  return j.dump();
}

std::string Session::snapshot_json() const {
  json j;
  j["id"] = id_;
  j["scenario"] = json::parse(canonical_scenario(scenario_));
  j["commands"] = json::array();
  for (const auto& c : log_) j["commands"].push_back(json::parse(c));
  return j.dump(2) + "\n";
}

std::unique_ptr<Session> Session::from_snapshot(const std::string& text) {
  try {
    auto j = json::parse(text);
    auto s = std::make_unique<Session>(j.at("id").get<std::string>(),
                                       parse_scenario(j.at("scenario").dump()));
    for (const auto& c : j.at("commands")) {
      const auto op = c.at("op").get<std::string>();
      if (op == "step") s->step(c.at("n").get<int>());
      else if (op == "policy") s->set_policy(parse_policy(c.at("policy").get<std::string>()));
      else throw Error(ErrorCode::Input, "unknown command '" + op + "'");
    }
    return s;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Input, std::string("session snapshot: ") + e.what());
  }
}

SessionStore::SessionStore(std::string state_dir) : dir_(std::move(state_dir)) {
  std::error_code ec;
  fs::create_directories(fs::path(dir_) / "sessions", ec);
  if (ec) throw Error(ErrorCode::Io, "state dir '" + dir_ + "' is not writable: " + ec.message());
  std::vector<fs::path> files;
  for (const auto& f : fs::directory_iterator(fs::path(dir_) / "sessions"))
    if (f.path().extension() == ".json") files.push_back(f.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    auto s = Session::from_snapshot(read_file(f.string()));
    const auto& id = s->id();
    if (id.size() > 1 && id[0] == 's') next_ = std::max(next_, std::stol(id.substr(1)) + 1);
    auto e = std::make_shared<Entry>();
    e->session = std::move(s);
    sessions_[id] = e;
  }
}

std::string SessionStore::create(const std::string& scenario_json) {
  auto scenario = parse_scenario(scenario_json);
  std::string id;
  {
    std::lock_guard lock(mu_);
    char buf[16];
    std::snprintf(buf, sizeof buf, "s%06ld", next_++);
    id = buf;
  }
  auto e = std::make_shared<Entry>();
  e->session = std::make_unique<Session>(id, std::move(scenario));
  save(*e->session);
  std::lock_guard lock(mu_);
  sessions_[id] = e;
  return id;
}

void SessionStore::remove(const std::string& id) {
  auto e = find(id);
  std::lock_guard lock(e->mu);
  e->deleted = true;
  std::error_code ec;
  fs::remove(path_for(id), ec);
  std::lock_guard g(mu_);
  sessions_.erase(id);
}

std::vector<std::string> SessionStore::ids() const {
  std::lock_guard lock(mu_);
  std::vector<std::string> out;
  for (const auto& [id, e] : sessions_) out.push_back(id);
  return out;
}

std::shared_ptr<SessionStore::Entry> SessionStore::find(const std::string& id) const {
  std::lock_guard lock(mu_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw_not_found(id);
  return it->second;
}

void SessionStore::throw_not_found(const std::string& id) {
  throw Error(ErrorCode::NotFound, "unknown session '" + id + "'");
}

void SessionStore::save(const Session& s) const { write_file(path_for(s.id()), s.snapshot_json()); }

std::string SessionStore::path_for(const std::string& id) const {
  return (fs::path(dir_) / "sessions" / (id + ".json")).string();
}

struct Service::Impl {
  httplib::Server server;
  std::mutex mu;
  bool stop_requested = false;
  bool in_run = false;
};

namespace {

int http_status(ErrorCode c) {
  switch (c) {
    case ErrorCode::Input:
    case ErrorCode::Unsupported: return 400;
    case ErrorCode::Validation: return 422;
    case ErrorCode::NotFound: return 404;
    case ErrorCode::State: return 409;
    case ErrorCode::InsufficientData:
    case ErrorCode::Degenerate:
    case ErrorCode::CalibrationDegenerate:
    case ErrorCode::TrainingDegenerate:
    case ErrorCode::Unclassifiable: return 422;
    case ErrorCode::Io: return 500;
  }
  return 500;
}

void reply_error(httplib::Response& res, int status, const std::string& code, const std::string& msg) {
  res.status = status;
  res.set_content(json{{"error", {{"code", code}, {"message", msg}}}}.dump(), "application/json");
}

template <class F>
httplib::Server::Handler guarded(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const Error& e) {
      reply_error(res, http_status(e.code()), error_code_name(e.code()), e.what());
    } catch (const json::exception& e) {
      reply_error(res, 400, "input", std::string("malformed request body: ") + e.what());
    } catch (const std::exception& e) {
      reply_error(res, 500, "internal", e.what());
    }
  };
}

json body_object(const httplib::Request& req) {
  auto j = json::parse(req.body.empty() ? "{}" : req.body);
  if (!j.is_object()) throw Error(ErrorCode::Input, "request body must be a JSON object");
  return j;
}

}  // namespace

Service::Service(const std::string& state_dir) : store_(state_dir), impl_(std::make_unique<Impl>()) {
  auto& srv = impl_->server;
  srv.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof yes);
  });
  const std::string json_type = "application/json";

  srv.Get("/v1/health", guarded([=](const httplib::Request&, httplib::Response& res) {
            res.set_content(json{{"status", "ok"}, {"engine_version", engine_version()}}.dump(), json_type);
          }));
  srv.Get("/v1/sessions", guarded([=, this](const httplib::Request&, httplib::Response& res) {
            res.set_content(json{{"sessions", store_.ids()}}.dump(), json_type);
          }));
  srv.Post("/v1/sessions", guarded([=, this](const httplib::Request& req, httplib::Response& res) {
             const auto id = store_.create(req.body);
             const auto t = store_.with(id, [](Session& s) { return s.t(); });
             res.status = 201;
             res.set_header("Location", "/v1/sessions/" + id);
             res.set_content(json{{"id", id}, {"t", t}}.dump(), json_type);
           }));
  srv.Post("/v1/sessions/:id/step", guarded([=, this](const httplib::Request& req, httplib::Response& res) {
             auto body = body_object(req);
             for (const auto& [k, v] : body.items())
               if (k != "n") throw Error(ErrorCode::Input, "unknown key '" + k + "'");
             const auto& nv = body.contains("n") ? body["n"] : json(1);
             if (!nv.is_number_integer()) throw Error(ErrorCode::Input, "n must be an integer");
             const int n = nv.get<int>();
             auto out = store_.with(
                 req.path_params.at("id"),
                 [n](Session& s) {
                   s.step(n);
                   return json{{"t", s.t()}, {"policy", policy_name(s.policy())}}.dump();
                 },
                 true);
             res.set_content(out, json_type);
           }));
  srv.Post("/v1/sessions/:id/policy", guarded([=, this](const httplib::Request& req, httplib::Response& res) {
             auto body = body_object(req);
             for (const auto& [k, v] : body.items())
               if (k != "policy") throw Error(ErrorCode::Input, "unknown key '" + k + "'");
             if (!body.contains("policy") || !body["policy"].is_string())
               throw Error(ErrorCode::Input, "policy is required");
             const auto p = parse_policy(body["policy"].get<std::string>());
             auto out = store_.with(
                 req.path_params.at("id"),
                 [p](Session& s) {
                   s.set_policy(p);
                   return json{{"t", s.t()}, {"policy", policy_name(s.policy())}}.dump();
                 },
                 true);
             res.set_content(out, json_type);
           }));
  srv.Get("/v1/sessions/:id/trajectory", guarded([=, this](const httplib::Request& req, httplib::Response& res) {
            const auto format = req.has_param("format") ? req.get_param_value("format") : "json";
            if (format != "json" && format != "csv") throw Error(ErrorCode::Input, "format must be csv or json");
            auto out = store_.with(req.path_params.at("id"), [&](Session& s) {
              return format == "csv" ? trajectory_to_csv(s.trajectory()) : trajectory_to_json(s.trajectory());
            });
            res.set_content(out, format == "csv" ? "text/csv" : json_type);
          }));
  srv.Get("/v1/sessions/:id/summary", guarded([=, this](const httplib::Request& req, httplib::Response& res) {
            res.set_content(store_.with(req.path_params.at("id"), [](Session& s) { return s.summary_json(); }),
                            json_type);
          }));
  srv.Delete("/v1/sessions/:id", guarded([=, this](const httplib::Request& req, httplib::Response& res) {
               store_.remove(req.path_params.at("id"));
               res.status = 204;
             }));
  srv.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) reply_error(res, res.status, "http", httplib::status_message(res.status));
  });
}

Service::~Service() { stop(); }

int Service::bind(const std::string& host, int port) {
  if (port < 0 || port > 65535) throw Error(ErrorCode::Input, "port out of range");
  if (port == 0) {
    int bound = impl_->server.bind_to_any_port(host);
    if (bound < 0) throw Error(ErrorCode::Io, "cannot bind to " + host);
    return bound;
  }
  if (!impl_->server.bind_to_port(host, port))
    throw Error(ErrorCode::Io, "port " + std::to_string(port) + " is busy or unavailable");
  return port;
}

void Service::run() {
  {
    std::lock_guard lock(impl_->mu);
    if (impl_->stop_requested) return;
    impl_->in_run = true;
  }
  impl_->server.listen_after_bind();
  std::lock_guard lock(impl_->mu);
  impl_->in_run = false;
}

void Service::stop() {
  if (!impl_) return;
  {
    std::lock_guard lock(impl_->mu);
    impl_->stop_requested = true;
    if (!impl_->in_run) return;
  }
  // the listener may not have started yet; stopping before then is a no-op
  for (;;) {
    {
      std::lock_guard lock(impl_->mu);
      if (!impl_->in_run) return;
    }
    if (impl_->server.is_running()) break;
    std::this_thread::sleep_for(std::chrono::milliseconds(1));
  }
  impl_->server.stop();
}

}  // namespace fairlab
