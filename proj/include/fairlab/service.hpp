#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <type_traits>
#include <string>
#include <vector>

#include "fairlab/scenario.hpp"

namespace fairlab {

// one interactive simulation; commands are replayable from its log
class Session {
 public:
  Session(std::string id, Scenario scenario);

  const std::string& id() const { return id_; }
  const Scenario& scenario() const { return scenario_; }
  int t() const { return state_.t; }
  PolicyRegime policy() const { return state_.policy; }
  const Trajectory& trajectory() const { return traj_; }

  void step(int n);
  void set_policy(PolicyRegime p);
  std::string summary_json() const;
  // scenario plus command log, enough to rebuild the session
  std::string snapshot_json() const;
  static std::unique_ptr<Session> from_snapshot(const std::string& text);

 private:
  std::string id_;
  Scenario scenario_;
  LoopModel model_;
  SimState state_;
  Trajectory traj_;
  std::vector<std::string> log_;  // serialized commands
};

inline constexpr int kMaxStepsPerRequest = 100000;
inline constexpr int kMaxSessionSteps = 1000000;

class SessionStore {
 public:
  // replays every snapshot found under state_dir/sessions
  explicit SessionStore(std::string state_dir);

  std::string create(const std::string& scenario_json);
  // runs f with the session locked; its commands are serialized
  template <class F>
  auto with(const std::string& id, F&& f, bool persist = false) {
    auto entry = find(id);
    std::lock_guard lock(entry->mu);
    if (entry->deleted) throw_not_found(id);
    if constexpr (std::is_void_v<decltype(f(*entry->session))>) {
      f(*entry->session);
      if (persist) save(*entry->session);
    } else {
      auto out = f(*entry->session);
      if (persist) save(*entry->session);
      return out;
    }
  }
  void remove(const std::string& id);
  std::vector<std::string> ids() const;

 private:
  struct Entry {
    std::mutex mu;
    std::unique_ptr<Session> session;
    bool deleted = false;
  };
  std::shared_ptr<Entry> find(const std::string& id) const;
  [[noreturn]] static void throw_not_found(const std::string& id);
  void save(const Session& s) const;
  std::string path_for(const std::string& id) const;

  std::string dir_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
  long next_ = 1;
};

class Service {
 public:
  explicit Service(const std::string& state_dir);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  // port 0 picks a free port; a busy port raises an Io error
  int bind(const std::string& host, int port);
  void run();  // blocks until stop()
  void stop();
  SessionStore& store() { return store_; }

 private:
  struct Impl;
  SessionStore store_;
  std::unique_ptr<Impl> impl_;
};

}  // namespace fairlab
