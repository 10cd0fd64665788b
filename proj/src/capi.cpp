#include "fairlab/fairlab.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <new>
#include <set>
#include <sstream>

#include <json.hpp>

#include "fairlab/error.hpp"
#include "fairlab/regimes.hpp"
#include "fairlab/scenario.hpp"
#include "fairlab/service.hpp"

struct fl_session {
  std::unique_ptr<fairlab::Session> impl;
};

struct fl_service {
  std::unique_ptr<fairlab::Service> impl;
};

namespace {

thread_local std::string g_last_error;

fl_status fail(fl_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

template <class F>
fl_status guard(F&& f) {
  g_last_error.clear();
  try {
    f();
    return FL_OK;
  } catch (const fairlab::Error& e) {
    return fail(static_cast<fl_status>(static_cast<int>(e.code())), e.what());
  } catch (const std::bad_alloc&) {
    return fail(FL_E_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(FL_E_INTERNAL, e.what());
  }
}

char* dup(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

void need(const void* p, const char* name) {
  if (!p) throw fairlab::Error(fairlab::ErrorCode::Input, std::string(name) + " is null");
}

fairlab::Reading parse_reading(const char* r) {
  if (!r || std::strcmp(r, "fairness") == 0) return fairlab::Reading::Fairness;
  if (std::strcmp(r, "discrimination") == 0) return fairlab::Reading::Discrimination;
  throw fairlab::Error(fairlab::ErrorCode::Input, std::string("unknown reading '") + r + "'");
}

}  // namespace

extern "C" {

const char* fl_version(void) { return fairlab::engine_version(); }

const char* fl_last_error(void) { return g_last_error.c_str(); }

const char* fl_status_name(fl_status s) {
  switch (s) {
    case FL_OK: return "ok";
    case FL_E_INTERNAL: return "internal";
    default: break;
  }
  if (s >= FL_E_INPUT && s <= FL_E_STATE)
    return fairlab::error_code_name(static_cast<fairlab::ErrorCode>(s));
  return "unknown";
}

void fl_free_string(char* s) { std::free(s); }

fl_status fl_validate_scenario(const char* scenario_json, char** canonical_out) {
  return guard([&] {
    need(scenario_json, "scenario_json");
    auto s = fairlab::parse_scenario(scenario_json);
    if (canonical_out) *canonical_out = dup(fairlab::canonical_scenario(s));
  });
}

fl_status fl_run_scenario(const char* path, const char* runs_dir, char** run_id_out,
                          char** summary_json_out) {
  return guard([&] {
    need(path, "path");
    auto rec = fairlab::run_scenario(path, runs_dir ? runs_dir : "runs");
    if (run_id_out) *run_id_out = dup(rec.id);
    if (summary_json_out) *summary_json_out = dup(rec.summary_json);
  });
}

fl_status fl_export_run(const char* runs_dir, const char* run_id, const char* format,
                        const char* out_dir, char** paths_json_out) {
  return guard([&] {
    need(run_id, "run_id");
    need(format, "format");
    auto paths = fairlab::export_run(runs_dir ? runs_dir : "runs", run_id, format, out_dir ? out_dir : "");
    if (paths_json_out) *paths_json_out = dup(nlohmann::json(paths).dump());
  });
}

fl_status fl_classify(const char* de_sign, const char* ie_sign, char** regime_out) {
  return guard([&] {
    need(de_sign, "de_sign");
    need(ie_sign, "ie_sign");
    need(regime_out, "regime_out");
    auto r = fairlab::classify_regime(fairlab::CompositeSign::parse(de_sign),
                                      fairlab::CompositeSign::parse(ie_sign));
    *regime_out = dup(fairlab::regime_name(r));
  });
}

fl_status fl_law_mapping(const char* regime, char** json_out) {
  return guard([&] {
    need(regime, "regime");
    need(json_out, "json_out");
    auto r = fairlab::parse_regime(regime);
    auto law = fairlab::law_mapping(r);
    nlohmann::ordered_json j = {{"regime", fairlab::regime_name(r)},
                                {"fairness", fairlab::is_fairness_regime(r)},
                                {"policy", fairlab::policy_name(fairlab::regime_policy(r))},
                                {"us", fairlab::us_law_name(law.us)},
                                {"eu", fairlab::eu_law_name(law.eu)}};
    *json_out = dup(j.dump());
  });
}

fl_status fl_assess_policy(const char* scm_json, const char* policy, const char* data_bias,
                           const char* reading, char** json_out) {
  return guard([&] {
    need(scm_json, "scm_json");
    need(policy, "policy");
    need(data_bias, "data_bias");
    need(json_out, "json_out");
    // reuse the scenario validator for the scm block
    nlohmann::json doc = {{"name", "assessment"},
                          {"policy", policy},
                          {"data_bias", data_bias},
                          {"scm", nlohmann::json::parse(scm_json)},
                          {"simulation", {{"steps", 0}}}};
    auto s = fairlab::parse_scenario(doc.dump());
    auto a = fairlab::assess_policy(fairlab::scenario_scm(s), s.policy(), s.data_bias,
                                    parse_reading(reading));
    nlohmann::ordered_json j = {{"policy", fairlab::policy_name(a.policy)},
                                {"de", a.effects.de},
                                {"ie", a.effects.ie},
                                {"te", a.effects.te},
                                {"de_sign", a.de_sign.render()},
                                {"ie_sign", a.ie_sign.render()},
                                {"regime", a.regime ? nlohmann::ordered_json(fairlab::regime_name(*a.regime))
                                                    : nlohmann::ordered_json()}};
    if (a.policy == fairlab::PolicyRegime::Lottery) {
      j["baseline_ie"] = a.baseline_ie;
      j["removal_gap"] = a.removal_gap;
    }
    *json_out = dup(j.dump());
  });
}

fl_status fl_d_separated(const char* graph_json, const char* x, const char* y, const char* given_csv,
                         int* separated_out) {
  return guard([&] {
    need(graph_json, "graph_json");
    need(x, "x");
    need(y, "y");
    need(separated_out, "separated_out");
    auto g = fairlab::graph_from_json(graph_json);
    std::set<std::string> given;
    if (given_csv) {
      std::stringstream ss(given_csv);
      std::string item;
      while (std::getline(ss, item, ','))
        if (!item.empty()) given.insert(item);
    }
    *separated_out = fairlab::d_separated(g, {x}, {y}, given) ? 1 : 0;
  });
}

fl_status fl_standard_graph(const char* policy, char** graph_json_out) {
  return guard([&] {
    need(graph_json_out, "graph_json_out");
    auto g = policy ? fairlab::standard_fairness_graph(fairlab::parse_policy(policy))
                    : fairlab::full_fairness_graph();
    *graph_json_out = dup(fairlab::graph_to_json(g));
  });
}

fl_status fl_session_create(const char* scenario_json, fl_session** out) {
  return guard([&] {
    need(scenario_json, "scenario_json");
    need(out, "out");
    auto s = std::make_unique<fl_session>();
    s->impl = std::make_unique<fairlab::Session>("local", fairlab::parse_scenario(scenario_json));
    *out = s.release();
  });
}

void fl_session_free(fl_session* s) { delete s; }

fl_status fl_session_step(fl_session* s, int n) {
  return guard([&] {
    need(s, "session");
    s->impl->step(n);
  });
}

fl_status fl_session_set_policy(fl_session* s, const char* policy) {
  return guard([&] {
    need(s, "session");
    need(policy, "policy");
    s->impl->set_policy(fairlab::parse_policy(policy));
  });
}

fl_status fl_session_time(const fl_session* s, int* t_out) {
  return guard([&] {
    need(s, "session");
    need(t_out, "t_out");
    *t_out = s->impl->t();
  });
}

fl_status fl_session_trajectory(const fl_session* s, const char* format, char** out) {
  return guard([&] {
    need(s, "session");
    need(out, "out");
    const std::string f = format ? format : "json";
    if (f == "csv") *out = dup(fairlab::trajectory_to_csv(s->impl->trajectory()));
    else if (f == "json") *out = dup(fairlab::trajectory_to_json(s->impl->trajectory()));
    else throw fairlab::Error(fairlab::ErrorCode::Input, "format must be csv or json");
  });
}

fl_status fl_session_summary(const fl_session* s, char** json_out) {
  return guard([&] {
    need(s, "session");
    need(json_out, "json_out");
    *json_out = dup(s->impl->summary_json());
  });
}

fl_status fl_service_create(const char* state_dir, fl_service** out) {
  return guard([&] {
    need(state_dir, "state_dir");
    need(out, "out");
    auto svc = std::make_unique<fl_service>();
    svc->impl = std::make_unique<fairlab::Service>(state_dir);
    *out = svc.release();
  });
}

fl_status fl_service_bind(fl_service* svc, const char* host, int port, int* bound_port_out) {
  return guard([&] {
    need(svc, "service");
    int p = svc->impl->bind(host ? host : "127.0.0.1", port);
    if (bound_port_out) *bound_port_out = p;
  });
}

fl_status fl_service_run(fl_service* svc) {
  return guard([&] {
    need(svc, "service");
    svc->impl->run();
  });
}

void fl_service_stop(fl_service* svc) {
  if (svc) svc->impl->stop();
}

void fl_service_free(fl_service* svc) { delete svc; }

}  // extern "C"
