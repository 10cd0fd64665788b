#include "fairlab/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <openssl/evp.h>

#include <json.hpp>

#include "fairlab/error.hpp"

#ifndef FAIRLAB_ENGINE_VERSION
#define FAIRLAB_ENGINE_VERSION "0.0.0"
#endif

namespace fairlab {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

const char* engine_version() { return FAIRLAB_ENGINE_VERSION; }

namespace {

Error invalid(const std::string& field, const std::string& msg) {
  return Error(ErrorCode::Validation, "field '" + field + "': " + msg);
}

// strict view over one JSON object: unknown keys and wrong types name the field
class Fields {
 public:
  Fields(const json& j, std::string path, std::set<std::string> allowed)
      : j_(j), path_(std::move(path)) {
    if (!j.is_object()) throw invalid(path_.empty() ? "(root)" : path_, "expected an object");
    for (const auto& [k, v] : j.items())
      if (!allowed.count(k)) throw invalid(at(k), "unknown key");
  }

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  bool has(const std::string& key) const { return j_.contains(key); }
  const json& raw(const std::string& key) const { return j_.at(key); }

  double number(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_number()) throw invalid(at(key), "expected a number");
    double d = v.get<double>();
    if (!std::isfinite(d)) throw invalid(at(key), "must be finite");
    return d;
  }
  std::int64_t integer(const std::string& key, std::int64_t fallback) const {
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_number_integer()) throw invalid(at(key), "expected an integer");
    return v.get<std::int64_t>();
  }
  std::uint64_t seed(const std::string& key, std::uint64_t fallback) const {
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_number_unsigned()) throw invalid(at(key), "expected a non-negative integer");
    return v.get<std::uint64_t>();
  }
  std::string text(const std::string& key, const std::string& fallback) const {
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_string()) throw invalid(at(key), "expected a string");
    return v.get<std::string>();
  }
  Fields object(const std::string& key, std::set<std::string> allowed) const {
    static const json empty = json::object();
    return Fields(has(key) ? j_.at(key) : empty, at(key), std::move(allowed));
  }

 private:
  const json& j_;
  std::string path_;
};

template <class F>
auto field(const std::string& name, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Validation) throw;
    throw invalid(name, e.what());
  }
}

const std::vector<std::string> kOptionalArtifacts = {"trajectory.csv", "model.json",
                                                     "compliance.json", "dataset.csv"};

std::string reading_name(Reading r) { return r == Reading::Fairness ? "fairness" : "discrimination"; }

std::string now_utc() {
  auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json params_json(const CombinedParams& p) {
  json j;
  j["weights"] = p.weights;
  j["delays"] = p.delays;
  j["decay"] = p.decay;
  j["constants"] = p.constants;
  j["bounds"] = json::object();
  for (const auto& [k, b] : p.bounds) j["bounds"][k] = {b.first, b.second};
  return j;
}

}  // namespace

std::vector<std::string> artifact_names() {
  return {"scenario.json", "summary.json", "trajectory.json", "trajectory.csv",
          "model.json",    "compliance.json", "dataset.csv"};
}

InitialConditions census_initial(const CensusSeed& c) {
  auto income = [&](const std::string& g) {
    auto it = c.incomes.find(g);
    if (it == c.incomes.end()) throw Error(ErrorCode::Input, "no income for group '" + g + "'");
    if (!(it->second > 0.0)) throw Error(ErrorCode::Input, "income of '" + g + "' must be > 0");
    return it->second;
  };
  if (c.group_a == c.group_b) throw Error(ErrorCode::Input, "census groups must differ");
  const double ma = income(c.group_a), mb = income(c.group_b);
  InitialConditions init;
  init.historical_advantage = (ma - mb) / (ma + mb);
  init.values["R_A"] = 2.0 * ma / (ma + mb);
  init.values["R_B"] = 2.0 * mb / (ma + mb);
  return init;
}

Scenario parse_scenario(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw Error(ErrorCode::Validation, "line " + std::to_string(line) + ", column " +
                                           std::to_string(col) + ": " + e.what());
  }

  Fields root(j, "", {"name", "description", "application", "scm", "data_bias", "policy",
                      "policy_schedule", "reading", "dataset", "training", "compliance",
                      "simulation", "outputs"});
  Scenario s;
  if (!root.has("name")) throw invalid("name", "required");
  s.name = root.text("name", "");
  if (s.name.empty()) throw invalid("name", "must not be empty");
  s.description = root.text("description", "");

  auto app = root.object("application", {"domain", "decision", "outcome"});
  for (const char* k : {"domain", "decision", "outcome"})
    if (app.has(k)) s.application[k] = app.text(k, "");

  auto scm = root.object("scm", {"coefficients", "noise", "protected_levels", "p_protected"});
  auto co = scm.object("coefficients", {"alpha_aw", "alpha_wx", "beta_xd", "gamma_wy", "gamma_dy"});
  for (const char* k : {"alpha_aw", "alpha_wx", "beta_xd", "gamma_wy", "gamma_dy"})
    if (!co.has(k)) throw invalid(co.at(k), "required");
  s.coefficients.alpha_aw = co.number("alpha_aw", 0);
  s.coefficients.alpha_wx = co.number("alpha_wx", 0);
  s.coefficients.beta_xd = co.number("beta_xd", 0);
  s.coefficients.gamma_wy = co.number("gamma_wy", 0);
  s.coefficients.gamma_dy = co.number("gamma_dy", 0);
  auto no = scm.object("noise", {"w", "x", "d", "y"});
  s.noise = {no.number("w", s.noise.w), no.number("x", s.noise.x), no.number("d", s.noise.d),
             no.number("y", s.noise.y)};
  for (auto [k, v] : {std::pair{"w", s.noise.w}, {"x", s.noise.x}, {"d", s.noise.d}, {"y", s.noise.y}})
    if (v < 0) throw invalid(no.at(k), "noise scale must be >= 0");
  if (scm.has("protected_levels")) {
    const auto& l = scm.raw("protected_levels");
    if (!l.is_array() || l.size() != 2 || !l[0].is_number() || !l[1].is_number())
      throw invalid(scm.at("protected_levels"), "expected two numbers");
    s.protected_levels = {l[0].get<double>(), l[1].get<double>()};
    if (!(s.protected_levels.first < s.protected_levels.second))
      throw invalid(scm.at("protected_levels"), "levels must be increasing");
  }
  s.p_protected = scm.number("p_protected", 0.5);
  if (!(s.p_protected > 0 && s.p_protected < 1)) throw invalid(scm.at("p_protected"), "must lie in (0,1)");

  s.data_bias = field("data_bias", [&] { return parse_sign(root.text("data_bias", "-")); });
  if (s.data_bias == Sign::Zero) throw invalid("data_bias", "must be + or -");

  if (root.has("policy") == root.has("policy_schedule"))
    throw invalid("policy", "exactly one of policy and policy_schedule is required");
  if (root.has("policy")) {
    s.schedule = {{0, field("policy", [&] { return parse_policy(root.text("policy", "")); })}};
  } else {
    const auto& arr = root.raw("policy_schedule");
    if (!arr.is_array() || arr.empty()) throw invalid("policy_schedule", "expected a non-empty array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      Fields ev(arr[i], "policy_schedule[" + std::to_string(i) + "]", {"t", "policy"});
      if (!ev.has("t") || !ev.has("policy")) throw invalid(ev.at("t"), "entries need t and policy");
      PolicyEvent e{static_cast<int>(ev.integer("t", 0)),
                    field(ev.at("policy"), [&] { return parse_policy(ev.text("policy", "")); })};
      if (i == 0 && e.t != 0) throw invalid(ev.at("t"), "the first entry must be at t = 0");
      if (i > 0 && e.t <= s.schedule.back().t) throw invalid(ev.at("t"), "times must increase");
      s.schedule.push_back(e);
    }
  }
  const auto reading = root.text("reading", "fairness");
  if (reading == "fairness") s.reading = Reading::Fairness;
  else if (reading == "discrimination") s.reading = Reading::Discrimination;
  else throw invalid("reading", "expected fairness or discrimination");

  auto ds = root.object("dataset", {"n", "seed", "label_threshold"});
  const auto n = ds.integer("n", 10000);
  if (n < 100) throw invalid(ds.at("n"), "must be >= 100");
  s.n = static_cast<std::size_t>(n);
  s.data_seed = ds.seed("seed", 0);
  s.label_threshold = ds.number("label_threshold", 0.0);

  auto tr = root.object("training", {"learning_rate", "epochs", "l2"});
  s.training.learning_rate = tr.number("learning_rate", s.training.learning_rate);
  s.training.epochs = static_cast<int>(tr.integer("epochs", s.training.epochs));
  s.training.l2 = tr.number("l2", 0.0);
  if (!(s.training.learning_rate > 0)) throw invalid(tr.at("learning_rate"), "must be > 0");
  if (s.training.epochs < 1) throw invalid(tr.at("epochs"), "must be >= 1");
  if (s.training.l2 < 0) throw invalid(tr.at("l2"), "must be >= 0");
  s.training.label_threshold = s.label_threshold;

  auto cp = root.object("compliance", {"tau_disp", "tau_nec", "delta_acc", "budget"});
  s.compliance.tau_disp = cp.number("tau_disp", s.compliance.tau_disp);
  s.compliance.tau_nec = cp.number("tau_nec", s.compliance.tau_nec);
  s.compliance.delta_acc = cp.number("delta_acc", s.compliance.delta_acc);
  const auto budget = cp.integer("budget", static_cast<std::int64_t>(s.compliance.budget));
  if (budget < 1) throw invalid(cp.at("budget"), "must be >= 1");
  s.compliance.budget = static_cast<std::size_t>(budget);
  for (auto [k, v] : {std::pair{"tau_disp", s.compliance.tau_disp}, {"tau_nec", s.compliance.tau_nec},
                      {"delta_acc", s.compliance.delta_acc}})
    if (v < 0) throw invalid(cp.at(k), "must be >= 0");
  s.compliance.training = s.training;
  s.compliance.decision_seed = s.data_seed;

  auto sim = root.object("simulation", {"steps", "t_short", "t_long", "gap_deadband", "seed",
                                        "params", "initial"});
  auto& sp = s.simulation;
  sp.steps = static_cast<int>(sim.integer("steps", kHorizon));
  sp.t_short = static_cast<int>(sim.integer("t_short", kShortWindow));
  sp.t_long = static_cast<int>(sim.integer("t_long", kLongWindow));
  sp.gap_deadband = sim.number("gap_deadband", kGapDeadband);
  sp.seed = sim.seed("seed", 0);
  if (sp.steps < 0) throw invalid(sim.at("steps"), "must be >= 0");
  if (sp.steps > 0 && !(0 < sp.t_short && sp.t_short <= sp.t_long && sp.t_long < sp.steps))
    throw invalid(sim.at("t_short"), "windows need 0 < t_short <= t_long < steps");
  if (sp.gap_deadband < 0) throw invalid(sim.at("gap_deadband"), "must be >= 0");
  for (const auto& e : s.schedule)
    if (e.t > sp.steps) throw invalid("policy_schedule", "event after the final step");

  auto pr = sim.object("params", {"weights", "delays", "bounds", "decay", "constants"});
  auto numbers = [&](const std::string& key, auto& target, bool integral) {
    if (!pr.has(key)) return;
    const auto& o = pr.raw(key);
    if (!o.is_object()) throw invalid(pr.at(key), "expected an object");
    for (const auto& [k, v] : o.items()) {
      if (integral ? !v.is_number_integer() : !v.is_number())
        throw invalid(pr.at(key) + "." + k, integral ? "expected an integer" : "expected a number");
      target[k] = v.template get<typename std::decay_t<decltype(target)>::mapped_type>();
    }
  };
  numbers("weights", sp.params.weights, false);
  numbers("delays", sp.params.delays, true);
  numbers("decay", sp.params.decay, false);
  numbers("constants", sp.params.constants, false);
  if (pr.has("bounds")) {
    const auto& o = pr.raw("bounds");
    if (!o.is_object()) throw invalid(pr.at("bounds"), "expected an object");
    for (const auto& [k, v] : o.items()) {
      if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
        throw invalid(pr.at("bounds") + "." + k, "expected [lo, hi]");
      sp.params.bounds[k] = {v[0].get<double>(), v[1].get<double>()};
    }
  }

  auto in = sim.object("initial", {"historical_advantage", "values", "census"});
  if (in.has("census")) {
    if (in.has("historical_advantage") || in.has("values"))
      throw invalid(in.at("census"), "census seeding excludes historical_advantage and values");
    auto c = in.object("census", {"incomes", "group_a", "group_b"});
    CensusSeed seed;
    if (!c.has("incomes") || !c.raw("incomes").is_object())
      throw invalid(c.at("incomes"), "expected an object of group incomes");
    for (const auto& [k, v] : c.raw("incomes").items()) {
      if (!v.is_number()) throw invalid(c.at("incomes") + "." + k, "expected a number");
      seed.incomes[k] = v.get<double>();
    }
    seed.group_a = c.text("group_a", "");
    seed.group_b = c.text("group_b", "");
    sp.initial = field(c.at("group_a"), [&] { return census_initial(seed); });
    sp.census = seed;
  } else {
    sp.initial.historical_advantage = in.number("historical_advantage", 0.15);
    if (in.has("values")) {
      const auto& o = in.raw("values");
      if (!o.is_object()) throw invalid(in.at("values"), "expected an object");
      for (const auto& [k, v] : o.items()) {
        if (!v.is_number()) throw invalid(in.at("values") + "." + k, "expected a number");
        sp.initial.values[k] = v.get<double>();
      }
    }
  }

  auto out = root.object("outputs", {"artifacts"});
  if (out.has("artifacts")) {
    const auto& a = out.raw("artifacts");
    if (!a.is_array()) throw invalid(out.at("artifacts"), "expected an array");
    std::set<std::string> seen;
    for (const auto& v : a) {
      if (!v.is_string()) throw invalid(out.at("artifacts"), "expected strings");
      auto name = v.get<std::string>();
      if (std::find(kOptionalArtifacts.begin(), kOptionalArtifacts.end(), name) == kOptionalArtifacts.end())
        throw invalid(out.at("artifacts"), "unknown artifact '" + name + "'");
      if (seen.insert(name).second) s.outputs.push_back(name);
    }
    std::sort(s.outputs.begin(), s.outputs.end());
  } else {
    s.outputs = {"compliance.json", "model.json", "trajectory.csv"};
  }

  // fail early on engine-level problems, reported against their section
  field("scm", [&] { return scenario_scm(s); });
  auto model = field("simulation.params", [&] { return scenario_model(s); });
  field("simulation.initial", [&] { return scenario_initial_state(s, model); });
  return s;
}

Scenario load_scenario(const std::string& path) {
  try {
    return parse_scenario(read_file(path));
  } catch (const Error& e) {
    if (e.code() != ErrorCode::Validation) throw;
    throw Error(ErrorCode::Validation, path + ": " + e.what());
  }
}

std::string canonical_scenario(const Scenario& s) {
  json j;
  j["name"] = s.name;
  j["description"] = s.description;
  j["application"] = s.application;
  const auto& c = s.coefficients;
  j["scm"] = {{"coefficients",
               {{"alpha_aw", c.alpha_aw}, {"alpha_wx", c.alpha_wx}, {"beta_xd", c.beta_xd},
                {"gamma_wy", c.gamma_wy}, {"gamma_dy", c.gamma_dy}}},
              {"noise", {{"w", s.noise.w}, {"x", s.noise.x}, {"d", s.noise.d}, {"y", s.noise.y}}},
              {"protected_levels", {s.protected_levels.first, s.protected_levels.second}},
              {"p_protected", s.p_protected}};
  j["data_bias"] = sign_name(s.data_bias);
  j["policy_schedule"] = json::array();
  for (const auto& e : s.schedule) j["policy_schedule"].push_back({{"t", e.t}, {"policy", policy_name(e.policy)}});
  j["reading"] = reading_name(s.reading);
  j["dataset"] = {{"n", s.n}, {"seed", s.data_seed}, {"label_threshold", s.label_threshold}};
  j["training"] = {{"learning_rate", s.training.learning_rate},
                   {"epochs", s.training.epochs},
                   {"l2", s.training.l2}};
  j["compliance"] = {{"tau_disp", s.compliance.tau_disp},
                     {"tau_nec", s.compliance.tau_nec},
                     {"delta_acc", s.compliance.delta_acc},
                     {"budget", s.compliance.budget}};
  const auto& sp = s.simulation;
  json init;
  if (sp.census) {
    init["census"] = {{"incomes", sp.census->incomes},
                      {"group_a", sp.census->group_a},
                      {"group_b", sp.census->group_b}};
  } else {
    init["historical_advantage"] = sp.initial.historical_advantage;
    init["values"] = sp.initial.values;
  }
  j["simulation"] = {{"steps", sp.steps},       {"t_short", sp.t_short},
                     {"t_long", sp.t_long},     {"gap_deadband", sp.gap_deadband},
                     {"seed", sp.seed},         {"params", params_json(sp.params)},
                     {"initial", init}};
  j["outputs"] = {{"artifacts", s.outputs}};
  return j.dump(2) + "\n";
}

std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw Error(ErrorCode::State, "sha-256 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

std::string run_id(const Scenario& s) {
  return sha256_hex(canonical_scenario(s) + "engine " + engine_version() + "\n").substr(0, 16);
}

LinearSCM scenario_scm(const Scenario& s) {
  return make_standard_scm(standard_fairness_graph(PolicyRegime::Unawareness), s.coefficients,
                           s.noise, s.protected_levels, s.p_protected);
}

LoopModel scenario_model(const Scenario& s) {
  return build_combined(s.simulation.params, s.policy());
}

SimState scenario_initial_state(const Scenario& s, const LoopModel& m) {
  return initial_state(m, s.simulation.initial, s.simulation.seed);
}

std::string gaps_to_json(const GapSummary& g) {
  ordered_json j = {{"t_short", g.t_short},
                    {"t_long", g.t_long},
                    {"deadband", g.deadband},
                    {"decision_short", g.decision_short},
                    {"decision_long", g.decision_long},
                    {"outcome_short", g.outcome_short},
                    {"outcome_long", g.outcome_long},
                    {"decision_short_sign", sign_name(g.decision_short_sign)},
                    {"decision_long_sign", sign_name(g.decision_long_sign)},
                    {"outcome_short_sign", sign_name(g.outcome_short_sign)},
                    {"outcome_long_sign", sign_name(g.outcome_long_sign)}};
  return j.dump();
}

RunResult execute_scenario(const Scenario& s) {
  const auto policy = s.policy();
  auto assessment = assess_policy(scenario_scm(s), policy, s.data_bias, s.reading);
  const auto data = sample(assessment.scm, s.n, s.data_seed);
  auto criterion = check_criterion(data, policy);

  auto model = train(data, policy, s.training);
  if (policy == PolicyRegime::AffirmativeAction || policy == PolicyRegime::Supremacism)
    model = calibrate_direct_weight(model, data);
  const auto labels = make_labels(data, s.label_threshold);
  const double acc = accuracy(decide_all(model, data, s.compliance.decision_seed), labels);
  auto compliance = run_compliance(data, model, s.compliance);

  const auto lm = scenario_model(s);
  const auto st = scenario_initial_state(s, lm);
  Trajectory traj;
  std::optional<GapSummary> gaps;
  if (s.simulation.steps > 0) {
    traj = simulate(lm, st, s.simulation.steps, s.schedule);
    gaps = measure_gaps(traj, s.simulation.t_short, s.simulation.t_long, s.simulation.gap_deadband);
  } else {
    for (const auto& v : lm.variables) traj.variables.push_back(v.id);
    traj.rows.push_back(st.values);
    traj.events.push_back(s.schedule.front());
  }

  const auto id = run_id(s);
  ordered_json j;
  j["run_id"] = id;
  j["scenario"] = s.name;
  j["engine_version"] = engine_version();
  j["policy"] = policy_name(policy);
  j["data_bias"] = sign_name(s.data_bias);
  j["reading"] = reading_name(s.reading);
  const auto& e = assessment.effects;
  j["effects"] = {{"de", e.de},
                  {"ie", e.ie},
                  {"te", e.te},
                  {"de_sign", assessment.de_sign.render()},
                  {"ie_sign", assessment.ie_sign.render()}};
  if (policy == PolicyRegime::Lottery)
    j["effects"]["lottery"] = {{"baseline_ie", assessment.baseline_ie},
                               {"removal_gap", assessment.removal_gap}};
  if (assessment.regime) {
    const auto law = law_mapping(*assessment.regime);
    j["regime"] = regime_name(*assessment.regime);
    j["law"] = {{"us", us_law_name(law.us)}, {"eu", eu_law_name(law.eu)}};
  } else {
    j["regime"] = nullptr;
  }
  ordered_json tests = ordered_json::array();
  for (const auto& t : criterion.tests)
    tests.push_back({{"statement", t.statement},
                     {"statistic", t.statistic},
                     {"threshold", t.threshold},
                     {"independent", t.independent}});
  j["criterion"] = {{"name", criterion_name(criterion.criterion.kind)},
                    {"notation", criterion.criterion.notation},
                    {"passed", criterion.passed},
                    {"substitution", criterion.substitution},
                    {"tests", tests}};
  ordered_json weights;
  for (std::size_t k = 0; k < model.features.size(); ++k) weights[model.features[k]] = model.weights[k];
  j["model"] = {{"features", model.features},
                {"weights", weights},
                {"threshold", model.threshold},
                {"accuracy", acc},
                {"soft_total_effect", soft_total_effect(model, data)}};
  ordered_json comp = {{"rate_a", compliance.step1.rate_a},
                       {"rate_b", compliance.step1.rate_b},
                       {"gap", compliance.step1.signed_gap},
                       {"adverse", compliance.step1.adverse}};
  if (compliance.step3) {
    comp["alternative_found"] = compliance.step3->found;
    comp["disparity_reduction"] = compliance.step3->disparity_reduction;
    comp["accuracy_delta"] = compliance.step3->accuracy_delta;
  }
  j["compliance"] = comp;
  j["steps"] = traj.steps();
  j["events"] = ordered_json::array();
  for (const auto& ev : traj.events) j["events"].push_back({{"t", ev.t}, {"policy", policy_name(ev.policy)}});
  j["gaps"] = gaps ? ordered_json::parse(gaps_to_json(*gaps)) : ordered_json();

  return RunResult{id, std::move(assessment), std::move(criterion), std::move(model), acc,
                   std::move(compliance), std::move(traj), gaps, j.dump(2) + "\n"};
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::NotFound, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  const auto tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write '" + path + "'");
    out << content;
    if (!out.flush()) throw Error(ErrorCode::Io, "cannot write '" + path + "'");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot write '" + path + "': " + ec.message());
}

RunRecord persist_run(const Scenario& s, const RunResult& r, const std::string& runs_dir) {
  RunRecord rec;
  rec.id = r.id;
  rec.dir = (fs::path(runs_dir) / r.id).string();
  rec.created_at = now_utc();
  rec.summary_json = r.summary_json;
  std::error_code ec;
  fs::create_directories(rec.dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create '" + rec.dir + "': " + ec.message());

  auto put = [&](const std::string& name, const std::string& content) {
    write_file((fs::path(rec.dir) / name).string(), content);
    rec.artifacts.push_back(name);
  };
  auto wanted = [&](const std::string& name) {
    return std::find(s.outputs.begin(), s.outputs.end(), name) != s.outputs.end();
  };
  put("scenario.json", canonical_scenario(s));
  put("summary.json", r.summary_json);
  put("trajectory.json", trajectory_to_json(r.trajectory) + "\n");
  if (wanted("trajectory.csv")) put("trajectory.csv", trajectory_to_csv(r.trajectory));
  if (wanted("model.json")) put("model.json", model_to_json(r.model) + "\n");
  if (wanted("compliance.json")) put("compliance.json", report_to_json(r.compliance) + "\n");
  if (wanted("dataset.csv"))
    put("dataset.csv", sample(r.assessment.scm, s.n, s.data_seed).to_csv());

  ordered_json j = {{"run_id", rec.id},
                    {"engine_version", engine_version()},
                    {"created_at", rec.created_at},
                    {"artifacts", rec.artifacts}};
  write_file((fs::path(rec.dir) / "record.json").string(), j.dump(2) + "\n");
  return rec;
}

RunRecord run_scenario(const std::string& path, const std::string& runs_dir) {
  const auto s = load_scenario(path);
  return persist_run(s, execute_scenario(s), runs_dir);
}

std::vector<std::string> export_run(const std::string& runs_dir, const std::string& id,
                                    const std::string& format, const std::string& out_dir) {
  if (format != "csv" && format != "json") throw Error(ErrorCode::Input, "format must be csv or json");
  const auto dir = fs::path(runs_dir) / id;
  if (id.empty() || id.find('/') != std::string::npos || !fs::exists(dir / "trajectory.json"))
    throw Error(ErrorCode::NotFound, "unknown run id '" + id + "'");
  const auto traj = trajectory_from_json(read_file((dir / "trajectory.json").string()));
  if (traj.steps() == 0) throw Error(ErrorCode::State, "run '" + id + "' has no steps to export");

  const fs::path out = out_dir.empty() ? dir / "export" : fs::path(out_dir);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create '" + out.string() + "': " + ec.message());
  std::vector<std::string> written;
  const auto traj_path = (out / ("trajectory." + format)).string();
  write_file(traj_path, format == "csv" ? trajectory_to_csv(traj) : trajectory_to_json(traj) + "\n");
  written.push_back(traj_path);
  const auto summary_path = (out / "summary.json").string();
  write_file(summary_path, read_file((dir / "summary.json").string()));
  written.push_back(summary_path);
  if (fs::exists(dir / "compliance.json")) {
    const auto p = (out / "compliance.json").string();
    write_file(p, read_file((dir / "compliance.json").string()));
    written.push_back(p);
  }
  return written;
}

}  // namespace fairlab
