#pragma once

#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "fairlab/graph.hpp"
#include "fairlab/policy.hpp"

namespace fairlab {

enum class VariableKind { Auxiliary, Stock };

struct Variable {
  std::string id;
  VariableKind kind = VariableKind::Auxiliary;
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  double init = 0.0;
  double decay = 0.0;  // stocks only
};

// which policy switch controls an edge
enum class EdgeGate { Always, Data, Intervention, Reaction, Dependence };

struct LoopEdge {
  std::string from;
  std::string to;
  Polarity polarity = Polarity::Positive;
  double weight = 0.0;       // as wired under the model's policy
  int delay = 0;
  std::string reference;  // stock edges: level subtracted from the source
  EdgeGate gate = EdgeGate::Always;
  char group = 0;         // 'A', 'B' or 0
  double base_weight = 0.0;  // parameter value before policy gating
  std::string key() const { return from + "->" + to; }
};

struct RegisteredLoop {
  std::string name;
  std::vector<std::string> cycle;
  LoopPolarity expected;
};

struct LoopModel {
  std::vector<Variable> variables;
  std::vector<LoopEdge> edges;
  std::vector<RegisteredLoop> registry;
  PolicyRegime policy = PolicyRegime::Unawareness;

  std::size_t index_of(const std::string& id) const;
  CausalGraph as_graph() const;
};

struct LoopCheck {
  std::string name;
  LoopPolarity expected;
  LoopPolarity measured;
  bool ok() const { return expected == measured; }
};

std::vector<LoopCheck> check_registry(const LoopModel& m);

enum class Archetype { SuccessToSuccessful, LimitsToSuccess, ShiftingBurden };

std::string archetype_name(Archetype a);
LoopModel build_archetype(Archetype kind);

struct CombinedParams {
  std::map<std::string, double> weights;  // keyed "from->to"; every combined edge required
  std::map<std::string, int> delays;
  std::map<std::string, std::pair<double, double>> bounds;
  std::map<std::string, double> decay;
  std::map<std::string, double> constants;  // constraint levels C_A, C_B
};

std::vector<std::string> combined_edge_keys();
CombinedParams fixture_params();
// swaps every A/B-labelled entry
CombinedParams mirror_params(const CombinedParams& p);

LoopModel build_combined(const CombinedParams& params, PolicyRegime policy);

struct InitialConditions {
  double historical_advantage = 0.15;  // initial tilt of D toward group A
  std::map<std::string, double> values;
};

InitialConditions mirror_initial(const InitialConditions& init);

struct SimState {
  int t = 0;
  std::vector<double> values;
  std::vector<double> deltas;
  std::vector<std::deque<double>> buffers;  // one per edge, `delay` slots
  std::vector<double> weights;              // effective edge weights
  PolicyRegime policy = PolicyRegime::Unawareness;
  std::uint64_t seed = 0;
  bool operator==(const SimState&) const = default;
};

SimState initial_state(const LoopModel& m, const InitialConditions& init, std::uint64_t seed = 0);
SimState step(const LoopModel& m, const SimState& s);
// re-wires gated edges and injects the policy's calibration impulse
SimState switch_policy(const LoopModel& m, const SimState& s, PolicyRegime policy);

struct PolicyEvent {
  int t = 0;
  PolicyRegime policy = PolicyRegime::Unawareness;
  bool operator==(const PolicyEvent&) const = default;
};

struct Trajectory {
  std::vector<std::string> variables;
  std::vector<std::vector<double>> rows;  // rows[t][variable]
  std::vector<PolicyEvent> events;

  std::size_t steps() const { return rows.empty() ? 0 : rows.size() - 1; }
  std::vector<double> series(const std::string& id) const;
  bool operator==(const Trajectory&) const = default;
};

// rows[t] is recorded before any event scheduled at t takes effect
Trajectory simulate(const LoopModel& m, const SimState& init, int steps,
                    const std::vector<PolicyEvent>& schedule);

inline constexpr int kShortWindow = 50;
inline constexpr int kLongWindow = 300;
inline constexpr int kHorizon = 400;
inline constexpr double kGapDeadband = 0.02;

struct GapSummary {
  int t_short = 0;
  int t_long = 0;
  double deadband = 0.0;
  double decision_short = 0.0;
  double decision_long = 0.0;
  double outcome_short = 0.0;
  double outcome_long = 0.0;
  Sign decision_short_sign = Sign::Zero;
  Sign decision_long_sign = Sign::Zero;
  Sign outcome_short_sign = Sign::Zero;
  Sign outcome_long_sign = Sign::Zero;
};

Sign deadband_sign(double v, double deadband);
GapSummary measure_gaps(const Trajectory& traj, int t_short = kShortWindow,
                        int t_long = kLongWindow, double deadband = kGapDeadband);

std::string trajectory_to_csv(const Trajectory& traj);
std::string trajectory_to_json(const Trajectory& traj);
Trajectory trajectory_from_json(const std::string& text);

}  // namespace fairlab
