#include "fairlab/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <json.hpp>

#include "fairlab/error.hpp"
#include "format.hpp"

namespace fairlab {

namespace {

Error input(const std::string& m) { return Error(ErrorCode::Input, m); }

double signed_weight(const LoopEdge& e, double w) {
  return e.polarity == Polarity::Positive ? w : -w;
}

// pairwise sum keeps mirrored inputs exactly cancelling
double pairwise(const std::vector<double>& v, std::size_t lo, std::size_t hi) {
  if (hi - lo == 0) return 0.0;
  if (hi - lo == 1) return v[lo];
  std::size_t mid = lo + (hi - lo + 1) / 2;
  return pairwise(v, lo, mid) + pairwise(v, mid, hi);
}

std::string swap_groups(const std::string& s) {
  std::string out = s;
  for (std::size_t i = 0; i + 1 < out.size(); ++i) {
    char& g = out[i + 1];
    bool at_end = i + 2 == out.size() || out[i + 2] == '-';
    if (out[i] == '_' && (g == 'A' || g == 'B') && at_end) g = g == 'A' ? 'B' : 'A';
  }
  return out;
}

void validate(const LoopModel& m) {
  std::set<std::string> ids;
  for (const auto& v : m.variables) {
    if (!ids.insert(v.id).second) throw input("duplicate variable '" + v.id + "'");
    if (v.lo > v.hi) throw input("empty bounds on '" + v.id + "'");
    if (v.decay < 0.0 || v.decay > 1.0) throw input("decay of '" + v.id + "' outside [0,1]");
  }
  for (const auto& e : m.edges) {
    m.index_of(e.from);
    const auto& target = m.variables[m.index_of(e.to)];
    if (!e.reference.empty()) m.index_of(e.reference);
    if (e.delay < 0) throw input("negative delay on " + e.key());
    if (e.weight < 0.0 || !std::isfinite(e.weight)) throw input("weight on " + e.key() + " must be >= 0");
    if (target.kind == VariableKind::Stock && e.delay != 0)
      throw input("stock inflow " + e.key() + " cannot carry a delay");
  }
  for (const auto& c : check_registry(m))
    if (!c.ok()) throw input("loop " + c.name + " does not have its registered polarity");
}

}  // namespace

std::size_t LoopModel::index_of(const std::string& id) const {
  for (std::size_t i = 0; i < variables.size(); ++i)
    if (variables[i].id == id) return i;
  throw input("unknown variable '" + id + "'");
}

CausalGraph LoopModel::as_graph() const {
  std::vector<Node> nodes;
  for (const auto& v : variables) nodes.push_back({v.id, NodeRole::Auxiliary, false});
  std::vector<Edge> links;
  for (const auto& e : edges) links.push_back({e.from, e.to, e.polarity, BiasColor::Neutral});
  return CausalGraph(nodes, links, false);
}

std::vector<LoopCheck> check_registry(const LoopModel& m) {
  auto g = m.as_graph();
  std::vector<LoopCheck> out;
  for (const auto& l : m.registry) out.push_back({l.name, l.expected, loop_polarity(g, l.cycle)});
  return out;
}

std::string archetype_name(Archetype a) {
  switch (a) {
    case Archetype::SuccessToSuccessful: return "success-to-the-successful";
    case Archetype::LimitsToSuccess: return "limits-to-success";
    case Archetype::ShiftingBurden: return "shifting-the-burden";
  }
  return "";
}

LoopModel build_archetype(Archetype kind) {
  const auto P = Polarity::Positive, N = Polarity::Negative;
  const auto R = LoopPolarity::Reinforcing, B = LoopPolarity::Balancing;
  LoopModel m;
  auto var = [&](const std::string& id) { m.variables.push_back({id, VariableKind::Auxiliary, 0.0, 2.0, 1.0}); };
  auto edge = [&](const std::string& a, const std::string& b, Polarity p, int delay = 0) {
    m.edges.push_back({a, b, p, 0.5, delay, "", EdgeGate::Always, 0, 0.5});
  };
  switch (kind) {
    case Archetype::SuccessToSuccessful:
      var("allocation_to_a");
      m.variables.back().lo = -1.0;
      m.variables.back().hi = 1.0;
      m.variables.back().init = 0.0;
      for (const char* v : {"resources_a", "resources_b", "success_a", "success_b"}) var(v);
      edge("allocation_to_a", "resources_a", P);
      edge("allocation_to_a", "resources_b", N);
      edge("resources_a", "success_a", P);
      edge("resources_b", "success_b", P);
      edge("success_a", "allocation_to_a", P);
      edge("success_b", "allocation_to_a", N);
      m.registry = {{"R1", {"allocation_to_a", "resources_a", "success_a"}, R},
                    {"R2", {"allocation_to_a", "resources_b", "success_b"}, R}};
      break;
    case Archetype::LimitsToSuccess:
      for (const char* v : {"efforts", "performance", "limiting_action", "constraint"}) var(v);
      edge("efforts", "performance", P);
      edge("performance", "efforts", P);
      edge("performance", "limiting_action", P);
      edge("limiting_action", "performance", N);
      edge("constraint", "limiting_action", N);
      m.registry = {{"R1", {"efforts", "performance"}, R},
                    {"B1", {"performance", "limiting_action"}, B}};
      break;
    case Archetype::ShiftingBurden:
      for (const char* v : {"problem_symptom", "internal_solution", "external_intervention", "dependence"})
        var(v);
      edge("problem_symptom", "internal_solution", P);
      edge("internal_solution", "problem_symptom", N, 2);
      edge("problem_symptom", "external_intervention", P);
      edge("external_intervention", "problem_symptom", N);
      edge("external_intervention", "dependence", P);
      edge("dependence", "internal_solution", N);
      m.registry = {
          {"B1", {"problem_symptom", "internal_solution"}, B},
          {"B2", {"problem_symptom", "external_intervention"}, B},
          {"R1", {"external_intervention", "dependence", "internal_solution", "problem_symptom"}, R}};
      break;
  }
  validate(m);
  return m;
}

std::vector<std::string> combined_edge_keys() {
  std::vector<std::string> keys = {"X_A->D", "X_B->D", "A_A->D", "A_B->D", "D->R_A", "D->R_B"};
  for (const char* g : {"A", "B"}) {
    std::string s(g);
    for (const auto& k : {"R_" + s + "->Y_" + s, "R_" + s + "->L_" + s, "L_" + s + "->Y_" + s,
                          "Y_" + s + "->X_" + s, "R_" + s + "->A_" + s, "A_" + s + "->DEP_" + s,
                          "DEP_" + s + "->Y_" + s})
      keys.push_back(k);
  }
  return keys;
}

CombinedParams fixture_params() {
  CombinedParams p;
  p.weights = {{"X_A->D", 0.5},  {"X_B->D", 0.5},  {"A_A->D", 1.0},  {"A_B->D", 1.0},
               {"D->R_A", 0.5},  {"D->R_B", 0.5}};
  for (const char* g : {"A", "B"}) {
    std::string s(g);
    p.weights["R_" + s + "->Y_" + s] = 0.5;
    p.weights["R_" + s + "->L_" + s] = 0.02;
    p.weights["L_" + s + "->Y_" + s] = 1.0;
    p.weights["Y_" + s + "->X_" + s] = 1.0;
    p.weights["R_" + s + "->A_" + s] = 0.5;
    p.weights["A_" + s + "->DEP_" + s] = 0.02;
    p.weights["DEP_" + s + "->Y_" + s] = 0.25;
    p.delays["R_" + s + "->Y_" + s] = 2;
    p.bounds["L_" + s] = {-0.21, 0.21};
    p.bounds["DEP_" + s] = {0.0, 2.0};
    p.decay["DEP_" + s] = 0.0;
    p.decay["L_" + s] = 0.0;
    p.constants["C_" + s] = 1.0;
  }
  return p;
}

CombinedParams mirror_params(const CombinedParams& p) {
  CombinedParams out;
  for (const auto& [k, v] : p.weights) out.weights[swap_groups(k)] = v;
  for (const auto& [k, v] : p.delays) out.delays[swap_groups(k)] = v;
  for (const auto& [k, v] : p.bounds) out.bounds[swap_groups(k)] = v;
  for (const auto& [k, v] : p.decay) out.decay[swap_groups(k)] = v;
  for (const auto& [k, v] : p.constants) out.constants[swap_groups(k)] = v;
  return out;
}

InitialConditions mirror_initial(const InitialConditions& init) {
  InitialConditions out;
  out.historical_advantage = -init.historical_advantage;
  for (const auto& [k, v] : init.values) out.values[swap_groups(k)] = k == "D" ? -v : v;
  return out;
}

LoopModel build_combined(const CombinedParams& params, PolicyRegime policy) {
  std::vector<std::string> missing;
  for (const auto& k : combined_edge_keys())
    if (!params.weights.count(k)) missing.push_back(k);
  if (!missing.empty()) {
    std::string msg = "missing edge weights:";
    for (const auto& k : missing) msg += " " + k;
    throw input(msg);
  }
  auto known = combined_edge_keys();
  for (const auto& [k, v] : params.weights)
    if (std::find(known.begin(), known.end(), k) == known.end())
      throw input("unknown edge weight '" + k + "'");

  LoopModel m;
  m.policy = policy;
  auto var = [&](const std::string& id, VariableKind kind, double lo, double hi, double init) {
    Variable v{id, kind, lo, hi, init, 0.0};
    if (auto it = params.bounds.find(id); it != params.bounds.end()) {
      v.lo = it->second.first;
      v.hi = it->second.second;
    }
    if (auto it = params.decay.find(id); it != params.decay.end()) v.decay = it->second;
    if (auto it = params.constants.find(id); it != params.constants.end()) v.init = it->second;
    m.variables.push_back(v);
  };
  var("D", VariableKind::Auxiliary, -1.0, 1.0, 0.0);
  for (const char* prefix : {"R_", "Y_", "X_"})
    for (const char* g : {"A", "B"}) var(std::string(prefix) + g, VariableKind::Auxiliary, 0.0, 2.0, 1.0);
  for (const char* g : {"A", "B"}) var(std::string("L_") + g, VariableKind::Stock, -0.2, 0.2, 0.0);
  for (const char* g : {"A", "B"}) var(std::string("C_") + g, VariableKind::Auxiliary, 0.0, 2.0, 1.0);
  for (const char* g : {"A", "B"}) var(std::string("A_") + g, VariableKind::Auxiliary, -1.0, 1.0, 0.0);
  for (const char* g : {"A", "B"}) var(std::string("DEP_") + g, VariableKind::Stock, 0.0, 2.0, 0.0);

  const auto P = Polarity::Positive, N = Polarity::Negative;
  auto edge = [&](const std::string& a, const std::string& b, Polarity pol, EdgeGate gate,
                  char group, const std::string& ref = "") {
    LoopEdge e{a, b, pol, 0.0, 0, ref, gate, group};
    e.weight = e.base_weight = params.weights.at(e.key());
    if (auto it = params.delays.find(e.key()); it != params.delays.end()) e.delay = it->second;
    m.edges.push_back(e);
  };
  // inputs to D are listed as A/B pairs so mirrored contributions cancel exactly
  edge("X_A", "D", P, EdgeGate::Data, 'A');
  edge("X_B", "D", N, EdgeGate::Data, 'B');
  edge("A_A", "D", P, EdgeGate::Intervention, 'A');
  edge("A_B", "D", N, EdgeGate::Intervention, 'B');
  edge("D", "R_A", P, EdgeGate::Always, 'A');
  edge("D", "R_B", N, EdgeGate::Always, 'B');
  for (char g : {'A', 'B'}) {
    std::string s(1, g);
    edge("R_" + s, "Y_" + s, P, EdgeGate::Always, g);
    edge("R_" + s, "L_" + s, P, EdgeGate::Always, g, "C_" + s);
    edge("L_" + s, "Y_" + s, N, EdgeGate::Always, g);
    edge("Y_" + s, "X_" + s, P, EdgeGate::Always, g);
    edge("R_" + s, "A_" + s, N, EdgeGate::Reaction, g);
    edge("A_" + s, "DEP_" + s, P, EdgeGate::Dependence, g);
    edge("DEP_" + s, "Y_" + s, N, EdgeGate::Always, g);
  }

  const auto R = LoopPolarity::Reinforcing, B = LoopPolarity::Balancing;
  m.registry = {
      {"R1", {"D", "R_A", "Y_A", "X_A"}, R},
      {"R2", {"D", "R_B", "Y_B", "X_B"}, R},
      {"B1", {"R_A", "L_A", "Y_A", "X_A", "D"}, B},
      {"B2", {"R_B", "L_B", "Y_B", "X_B", "D"}, B},
      {"B3", {"A_A", "D", "R_A"}, B},
      {"B4", {"A_B", "D", "R_B"}, B},
      {"R3", {"A_A", "DEP_A", "Y_A", "X_A", "D", "R_A"}, R},
      {"R4", {"A_B", "DEP_B", "Y_B", "X_B", "D", "R_B"}, R},
  };
  validate(m);

  // build-time weights reflect the policy without any state-dependent side selection
  for (auto& e : m.edges) {
    bool on = true;
    switch (e.gate) {
      case EdgeGate::Always: break;
      case EdgeGate::Data: on = policy != PolicyRegime::Lottery; break;
      case EdgeGate::Intervention:
      case EdgeGate::Reaction:
        on = policy == PolicyRegime::AffirmativeAction || policy == PolicyRegime::Supremacism;
        break;
      case EdgeGate::Dependence: on = policy == PolicyRegime::AffirmativeAction; break;
    }
    if (!on) e.weight = 0.0;
  }
  return m;
}

SimState initial_state(const LoopModel& m, const InitialConditions& init, std::uint64_t seed) {
  SimState s;
  s.seed = seed;
  s.policy = m.policy;
  for (const auto& v : m.variables) s.values.push_back(v.init);
  s.deltas.assign(m.variables.size(), 0.0);
  for (const auto& [id, value] : init.values) s.values[m.index_of(id)] = value;
  for (const auto& e : m.edges) {
    s.buffers.emplace_back(static_cast<std::size_t>(e.delay), 0.0);
    s.weights.push_back(e.weight);
  }
  // a historical impulse on D: the tilt exists and has just arrived
  if (init.historical_advantage != 0.0) {
    const auto d = m.index_of("D");
    const auto& v = m.variables[d];
    double next = std::clamp(s.values[d] + init.historical_advantage, v.lo, v.hi);
    s.deltas[d] = next - s.values[d];
    s.values[d] = next;
  }
  for (std::size_t i = 0; i < m.variables.size(); ++i) {
    const auto& v = m.variables[i];
    if (s.values[i] < v.lo || s.values[i] > v.hi)
      throw input("initial value of '" + v.id + "' outside its bounds");
  }
  return s;
}

SimState step(const LoopModel& m, const SimState& s) {
  const std::size_t nv = m.variables.size();
  std::vector<std::vector<double>> contrib(nv);
  SimState next = s;
  for (std::size_t k = 0; k < m.edges.size(); ++k) {
    const auto& e = m.edges[k];
    const auto src = m.index_of(e.from);
    const auto dst = m.index_of(e.to);
    const double w = signed_weight(e, s.weights[k]);
    if (m.variables[dst].kind == VariableKind::Stock) {
      double ref = e.reference.empty() ? 0.0 : s.values[m.index_of(e.reference)];
      contrib[dst].push_back(w * (s.values[src] - ref));
    } else {
      double d = s.deltas[src];
      if (e.delay > 0) {
        auto& buf = next.buffers[k];
        buf.push_back(d);
        d = buf.front();
        buf.pop_front();
      }
      contrib[dst].push_back(w * d);
    }
  }
  for (std::size_t i = 0; i < nv; ++i) {
    const auto& v = m.variables[i];
    double base = v.kind == VariableKind::Stock ? s.values[i] * (1.0 - v.decay) : s.values[i];
    double value = std::clamp(base + pairwise(contrib[i], 0, contrib[i].size()), v.lo, v.hi);
    next.deltas[i] = value - s.values[i];
    next.values[i] = value;
  }
  next.t = s.t + 1;
  return next;
}

SimState switch_policy(const LoopModel& m, const SimState& s, PolicyRegime policy) {
  SimState out = s;
  out.policy = policy;
  const bool intervening =
      policy == PolicyRegime::AffirmativeAction || policy == PolicyRegime::Supremacism;
  const std::size_t d = m.index_of("D");
  const double tilt = s.values[d];

  // AA helps the side D disfavours, supremacism the side it favours; no tilt engages both
  std::set<char> sides;
  if (intervening) {
    char disadvantaged = tilt > 0 ? 'B' : 'A';
    char advantaged = tilt > 0 ? 'A' : 'B';
    if (tilt == 0.0) sides = {'A', 'B'};
    else sides = {policy == PolicyRegime::AffirmativeAction ? disadvantaged : advantaged};
  }
  for (std::size_t k = 0; k < m.edges.size(); ++k) {
    const auto& e = m.edges[k];
    bool on = true;
    switch (e.gate) {
      case EdgeGate::Always: break;
      case EdgeGate::Data: on = policy != PolicyRegime::Lottery; break;
      case EdgeGate::Intervention:
      case EdgeGate::Reaction: on = sides.count(e.group) > 0; break;
      case EdgeGate::Dependence:
        on = policy == PolicyRegime::AffirmativeAction && sides.count(e.group) > 0;
        break;
    }
    out.weights[k] = on ? e.base_weight : 0.0;
  }

  if (policy == PolicyRegime::Lottery) {
    out.values[d] = 0.0;
    out.deltas[d] = 0.0;
  } else if (intervening && sides.size() == 1) {
    const char side = *sides.begin();
    const double target = policy == PolicyRegime::AffirmativeAction ? -tilt : tilt;
    for (std::size_t k = 0; k < m.edges.size(); ++k) {
      const auto& e = m.edges[k];
      if (e.gate != EdgeGate::Intervention || e.group != side) continue;
      const double w = signed_weight(e, out.weights[k]);
      if (w == 0.0) break;
      const auto a = m.index_of(e.from);
      const auto& v = m.variables[a];
      double next = std::clamp(out.values[a] + target / w, v.lo, v.hi);
      out.deltas[a] += next - out.values[a];
      out.values[a] = next;
      break;
    }
  }
  return out;
}

std::vector<double> Trajectory::series(const std::string& id) const {
  auto it = std::find(variables.begin(), variables.end(), id);
  if (it == variables.end()) throw input("trajectory has no variable '" + id + "'");
  const auto c = static_cast<std::size_t>(it - variables.begin());
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r[c]);
  return out;
}

Trajectory simulate(const LoopModel& m, const SimState& init, int steps,
                    const std::vector<PolicyEvent>& schedule) {
  if (steps < 1) throw input("steps must be >= 1");
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    if (schedule[i].t < init.t) throw input("policy event precedes the initial state");
    if (schedule[i].t > init.t + steps) throw input("policy event after the final step");
    if (i && schedule[i].t <= schedule[i - 1].t)
      throw input("policy schedule times must be strictly increasing");
  }
  Trajectory traj;
  for (const auto& v : m.variables) traj.variables.push_back(v.id);
  SimState s = init;
  std::size_t next_event = 0;
  for (int k = 0; k <= steps; ++k) {
    traj.rows.push_back(s.values);
    if (next_event < schedule.size() && schedule[next_event].t == s.t) {
      s = switch_policy(m, s, schedule[next_event].policy);
      traj.events.push_back(schedule[next_event]);
      ++next_event;
    }
    if (k < steps) s = step(m, s);
  }
  return traj;
}

Sign deadband_sign(double v, double deadband) {
  if (std::abs(v) < deadband) return Sign::Zero;
  return v > 0 ? Sign::Positive : Sign::Negative;
}

GapSummary measure_gaps(const Trajectory& traj, int t_short, int t_long, double deadband) {
  const int T = static_cast<int>(traj.steps());
  if (!(0 < t_short && t_short <= t_long && t_long < T))
    throw input("gap windows need 0 < t_short <= t_long < T");
  if (!(deadband >= 0.0)) throw input("dead-band must be >= 0");
  const auto D = traj.series("D");
  const auto ya = traj.series("Y_A");
  const auto yb = traj.series("Y_B");
  auto mean = [](const std::vector<double>& v, int lo, int hi) {
    double s = 0.0;
    for (int t = lo; t < hi; ++t) s += v[static_cast<std::size_t>(t)];
    return s / static_cast<double>(hi - lo);
  };
  std::vector<double> decision(D.size()), outcome(D.size());
  for (std::size_t t = 0; t < D.size(); ++t) {
    decision[t] = -D[t];
    outcome[t] = yb[t] - ya[t];
  }
  GapSummary g;
  g.t_short = t_short;
  g.t_long = t_long;
  g.deadband = deadband;
  g.decision_short = mean(decision, 0, t_short);
  g.decision_long = mean(decision, t_long, T + 1);
  g.outcome_short = mean(outcome, 0, t_short);
  g.outcome_long = mean(outcome, t_long, T + 1);
  g.decision_short_sign = deadband_sign(g.decision_short, deadband);
  g.decision_long_sign = deadband_sign(g.decision_long, deadband);
  g.outcome_short_sign = deadband_sign(g.outcome_short, deadband);
  g.outcome_long_sign = deadband_sign(g.outcome_long, deadband);
  return g;
}

std::string trajectory_to_csv(const Trajectory& traj) {
  std::string out = "t";
  for (const auto& v : traj.variables) out += "," + v;
  out += '\n';
  for (std::size_t t = 0; t < traj.rows.size(); ++t) {
    out += std::to_string(t);
    for (double x : traj.rows[t]) out += "," + detail::format_double(x);
    out += '\n';
  }
  return out;
}

std::string trajectory_to_json(const Trajectory& traj) {
  nlohmann::ordered_json j;
  j["variables"] = traj.variables;
  j["frames"] = nlohmann::ordered_json::array();
  for (std::size_t t = 0; t < traj.rows.size(); ++t) {
    auto values = traj.rows[t];
    for (auto& v : values)
      if (v == 0.0) v = 0.0;  // the csv writer folds -0 as well
    j["frames"].push_back({{"t", t}, {"values", values}});
  }
  j["events"] = nlohmann::ordered_json::array();
  for (const auto& e : traj.events) j["events"].push_back({{"t", e.t}, {"policy", policy_name(e.policy)}});
  return j.dump();
}

Trajectory trajectory_from_json(const std::string& text) {
  try {
    auto j = nlohmann::json::parse(text);
    Trajectory traj;
    traj.variables = j.at("variables").get<std::vector<std::string>>();
    for (const auto& f : j.at("frames")) {
      if (f.at("t").get<std::size_t>() != traj.rows.size()) throw input("frames out of order");
      traj.rows.push_back(f.at("values").get<std::vector<double>>());
      if (traj.rows.back().size() != traj.variables.size()) throw input("frame width mismatch");
    }
    for (const auto& e : j.value("events", nlohmann::json::array()))
      traj.events.push_back({e.at("t").get<int>(), parse_policy(e.at("policy").get<std::string>())});
    return traj;
  } catch (const nlohmann::json::exception& ex) {
    throw input(std::string("trajectory json: ") + ex.what());
  }
}

}  // namespace fairlab
