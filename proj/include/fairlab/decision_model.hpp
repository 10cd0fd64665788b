#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fairlab/policy.hpp"
#include "fairlab/scm.hpp"

namespace fairlab {

inline const std::string kBiasFeature = "bias";

struct TrainConfig {
  double learning_rate = 1.0;
  int epochs = 1000;
  double l2 = 0.0;
  std::uint64_t seed = 0;
  double label_threshold = 0.0;
};

struct LossRecord {
  int epoch = 0;
  double loss = 0.0;
  bool operator==(const LossRecord&) const = default;
};

struct DecisionModel {
  PolicyRegime policy = PolicyRegime::Unawareness;
  std::vector<std::string> features;  // always starts with the bias term
  std::vector<double> weights;
  std::vector<std::string> fixed;     // set by calibration, never learned
  double threshold = 0.5;
  double label_threshold = 0.0;
  std::vector<LossRecord> training_log;

  double weight(const std::string& feature) const;
  bool operator==(const DecisionModel&) const = default;
};

std::vector<std::string> policy_features(PolicyRegime p);

std::vector<double> make_labels(const Dataset& data, double label_threshold);

DecisionModel train(const Dataset& data, PolicyRegime policy, const TrainConfig& cfg);

// mean penalised log-loss and its gradient over every model feature
double logistic_loss(const DecisionModel& m, const Dataset& data, double l2);
std::vector<double> logistic_gradient(const DecisionModel& m, const Dataset& data, double l2);

double decision_probability(const DecisionModel& m, const std::map<std::string, double>& row);
int decide(const DecisionModel& m, const std::map<std::string, double>& row,
           std::optional<double> rng_draw = std::nullopt);
std::vector<int> decide_all(const DecisionModel& m, const Dataset& data, std::uint64_t seed);

// mean decision probability of the a1 group minus the a0 group
double soft_total_effect(const DecisionModel& m, const Dataset& data);

inline constexpr double kLogisticCalibrationTolerance = 1e-4;

// root-find on the direct A weight: affirmative action cancels the total effect,
// supremacism takes the opposite-signed magnitude
DecisionModel calibrate_direct_weight(const DecisionModel& m, const Dataset& data);

double accuracy(const std::vector<int>& decisions, const std::vector<double>& labels);

std::string model_to_json(const DecisionModel& m);
DecisionModel model_from_json(const std::string& text);

}  // namespace fairlab
