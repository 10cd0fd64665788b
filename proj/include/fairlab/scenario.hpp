#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fairlab/compliance.hpp"
#include "fairlab/decision_model.hpp"
#include "fairlab/dynamics.hpp"
#include "fairlab/regimes.hpp"
#include "fairlab/scm.hpp"

namespace fairlab {

const char* engine_version();

struct CensusSeed {
  std::map<std::string, double> incomes;
  std::string group_a;
  std::string group_b;
};

// resource levels 2 m_g / (m_a + m_b) and a historical tilt (m_a - m_b) / (m_a + m_b)
InitialConditions census_initial(const CensusSeed& c);

struct SimulationSpec {
  int steps = kHorizon;
  int t_short = kShortWindow;
  int t_long = kLongWindow;
  double gap_deadband = kGapDeadband;
  std::uint64_t seed = 0;
  CombinedParams params = fixture_params();
  InitialConditions initial;
  std::optional<CensusSeed> census;
};

struct Scenario {
  std::string name;
  std::string description;
  std::map<std::string, std::string> application;
  StandardCoefficients coefficients;
  StandardNoise noise;
  std::pair<double, double> protected_levels{0.0, 1.0};
  double p_protected = 0.5;
  Sign data_bias = Sign::Negative;
  std::vector<PolicyEvent> schedule;  // first entry at t = 0
  Reading reading = Reading::Fairness;
  std::size_t n = 10000;
  std::uint64_t data_seed = 0;
  double label_threshold = 0.0;
  TrainConfig training;
  ComplianceConfig compliance;
  SimulationSpec simulation;
  std::vector<std::string> outputs;

  PolicyRegime policy() const { return schedule.front().policy; }
};

std::vector<std::string> artifact_names();

// validation errors name the offending field, syntax errors the line and column
Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::string& path);
// every field, defaults included, with sorted keys
std::string canonical_scenario(const Scenario& s);
std::string run_id(const Scenario& s);
std::string sha256_hex(const std::string& data);

LinearSCM scenario_scm(const Scenario& s);
LoopModel scenario_model(const Scenario& s);
SimState scenario_initial_state(const Scenario& s, const LoopModel& m);

struct RunResult {
  std::string id;
  PolicyAssessment assessment;
  CriterionReport criterion;
  DecisionModel model;
  double model_accuracy = 0.0;
  ComplianceReport compliance;
  Trajectory trajectory;
  std::optional<GapSummary> gaps;
  std::string summary_json;
};

RunResult execute_scenario(const Scenario& s);

struct RunRecord {
  std::string id;
  std::string dir;
  std::string created_at;
  std::vector<std::string> artifacts;
  std::string summary_json;
};

RunRecord run_scenario(const std::string& path, const std::string& runs_dir);
RunRecord persist_run(const Scenario& s, const RunResult& r, const std::string& runs_dir);

// writes trajectory.<format> and summary.json into out_dir, default <run dir>/export
std::vector<std::string> export_run(const std::string& runs_dir, const std::string& id,
                                    const std::string& format, const std::string& out_dir = "");

std::string gaps_to_json(const GapSummary& g);
std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace fairlab
