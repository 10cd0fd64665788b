#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "fairlab/policy.hpp"
#include "fairlab/scm.hpp"

namespace fairlab {

enum class Regime {
  FairLottery,
  NoDiscrimination,
  FairAffirmativeAction,
  ReverseDiscrimination,
  FairUnawareness,
  CovertDiscrimination,
  FairSupremacism,
  OvertDiscrimination,
};

inline constexpr std::array<Regime, 8> kAllRegimes = {
    Regime::FairLottery,          Regime::NoDiscrimination,      Regime::FairAffirmativeAction,
    Regime::ReverseDiscrimination, Regime::FairUnawareness,      Regime::CovertDiscrimination,
    Regime::FairSupremacism,      Regime::OvertDiscrimination};

std::string regime_name(Regime r);
Regime parse_regime(const std::string& name);
bool is_fairness_regime(Regime r);
// the fairness regime and discrimination regime sharing a direct-effect sign
Regime pair_partner(Regime r);
PolicyRegime regime_policy(Regime r);

struct SignPair {
  CompositeSign de;
  CompositeSign ie;
};

Regime classify_regime(const CompositeSign& de, const CompositeSign& ie);
SignPair canonical_signs(Regime r);

enum class CriterionKind { IndependentOfAAndW, IndependentOfA, IndependentOfAGivenW, DependentOnA };

struct FairnessCriterion {
  CriterionKind kind;
  std::string notation;
  bool individual_fairness;
  bool group_fairness;
  std::string worldview;
  std::string pearl_law;  // empty where no law applies
};

FairnessCriterion criterion_for(PolicyRegime p);
std::string criterion_name(CriterionKind k);

enum class UsLaw { None, DisparateTreatment, DisparateImpact };
enum class EuLaw { None, DirectDiscrimination, IndirectDiscrimination };

struct LawCategory {
  UsLaw us = UsLaw::None;
  EuLaw eu = EuLaw::None;
  bool operator==(const LawCategory&) const = default;
};

LawCategory law_mapping(Regime r);
std::string us_law_name(UsLaw l);
std::string eu_law_name(EuLaw l);

// sets sign(alpha_AW) from data_bias, then performs the policy's surgery and calibration
LinearSCM apply_policy(const LinearSCM& scm, PolicyRegime policy, Sign data_bias);

enum class Reading { Fairness, Discrimination };

struct PolicyAssessment {
  PolicyRegime policy;
  Sign data_bias;
  Reading reading;
  LinearSCM scm;
  EffectDecomposition effects;
  CompositeSign de_sign;
  CompositeSign ie_sign;
  std::optional<Regime> regime;
  // lottery only: indirect effect of the unawareness baseline and the gap its removal opens
  double baseline_ie = 0.0;
  double removal_gap = 0.0;
};

PolicyAssessment assess_policy(const LinearSCM& base, PolicyRegime policy, Sign data_bias,
                               Reading reading = Reading::Fairness);

struct CriterionTest {
  std::string statement;
  std::string x;
  std::string y;
  std::vector<std::string> given;
  double statistic = 0.0;
  double threshold = 0.0;
  bool independent = false;
};

struct CriterionReport {
  PolicyRegime policy;
  FairnessCriterion criterion;
  std::vector<CriterionTest> tests;
  std::string substitution;  // non-empty when X stands in for a latent W
  bool passed = false;
};

CriterionReport evaluate_criterion(const Dataset& data, CriterionKind kind,
                                   double tau = kCiThreshold);
CriterionReport check_criterion(const Dataset& data, PolicyRegime policy,
                                double tau = kCiThreshold);

// node colours derived from edge bias, propagated downstream; red and blue reaching the
// same node cancel
std::vector<std::pair<std::string, BiasColor>> derive_node_bias(const CausalGraph& g);
// edge-coloured graph of a regime's panel
CausalGraph regime_graph(Regime r);

}  // namespace fairlab
