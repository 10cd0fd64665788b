#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fairlab/decision_model.hpp"
#include "fairlab/scm.hpp"

namespace fairlab {

struct ComplianceConfig {
  double tau_disp = 0.05;
  double tau_nec = 0.1;
  double delta_acc = 0.05;
  std::size_t budget = 1000;
  TrainConfig training;
  std::uint64_t decision_seed = 0;
};

struct DisparityResult {
  double rate_a = 0.0;  // group coded with the lower protected level
  double rate_b = 0.0;
  double gap = 0.0;         // |rate_b - rate_a|
  double signed_gap = 0.0;  // rate_b - rate_a
  bool adverse = false;
  bool operator==(const DisparityResult&) const = default;
};

struct NecessityResult {
  double relevance = 0.0;
  bool necessary = false;
  bool operator==(const NecessityResult&) const = default;
};

struct CandidateResult {
  std::string id;
  std::vector<std::string> features;
  double l2 = 0.0;
  double threshold = 0.5;
  double rate_a = 0.0;
  double rate_b = 0.0;
  double gap = 0.0;
  double accuracy = 0.0;
  bool operator==(const CandidateResult&) const = default;
};

struct LdaResult {
  bool found = false;
  CandidateResult base;
  std::optional<CandidateResult> alternative;
  double disparity_reduction = 0.0;
  double accuracy_delta = 0.0;  // alternative minus base
  std::size_t evaluated = 0;
  bool operator==(const LdaResult&) const = default;
};

struct ComplianceReport {
  DisparityResult step1;
  std::optional<NecessityResult> step2;
  std::optional<LdaResult> step3;
  bool operator==(const ComplianceReport&) const = default;
};

DisparityResult disparity_test(const Dataset& data, const std::vector<int>& decisions,
                               double tau_disp = 0.05);
NecessityResult necessity_check(const Dataset& data, double tau_nec = 0.1);

// candidate ids in evaluation order: the base first, then the grid sorted by id
std::vector<std::string> lda_candidate_ids();

LdaResult lda_search(const Dataset& data, const DecisionModel& base, std::size_t budget,
                     const ComplianceConfig& cfg = {});

ComplianceReport run_compliance(const Dataset& data, const DecisionModel& base,
                                const ComplianceConfig& cfg = {});

std::string report_to_json(const ComplianceReport& r);
ComplianceReport report_from_json(const std::string& text);
std::string report_to_text(const ComplianceReport& r);

}  // namespace fairlab
