#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "fairlab/decision_model.hpp"
#include "fairlab/regimes.hpp"
#include "fairlab/scenario.hpp"

namespace fixtures {

inline std::string source(const std::string& rel) { return std::string(FAIRLAB_SOURCE_DIR) + "/" + rel; }

inline fairlab::StandardCoefficients coefficients() {
  fairlab::StandardCoefficients c;
  c.alpha_aw = -0.5;
  c.alpha_wx = 1.0;
  c.beta_xd = 0.8;
  c.gamma_wy = 1.0;
  c.gamma_dy = 0.2;
  return c;
}

inline fairlab::LinearSCM scm() {
  using namespace fairlab;
  return make_standard_scm(standard_fairness_graph(PolicyRegime::Unawareness), coefficients());
}

// fixture dataset: n = 10000, seed 7
inline fairlab::Dataset data(fairlab::PolicyRegime p = fairlab::PolicyRegime::Unawareness,
                             std::size_t n = 10000, std::uint64_t seed = 7) {
  using namespace fairlab;
  return sample(apply_policy(scm(), p, Sign::Negative), n, seed);
}

struct Training {
  std::string name;
  fairlab::Dataset data;
  fairlab::PolicyRegime policy;
  fairlab::TrainConfig cfg;
};

// every dataset a shipped scenario or the unit fixture trains on
inline std::vector<Training> shipped_trainings() {
  using namespace fairlab;
  std::vector<Training> out;
  for (auto p : kAllPolicies) out.push_back({"fixture/" + policy_name(p), data(p), p, {}});
  for (const char* f : {"scenarios/credit-unawareness.json", "scenarios/census-income.json"}) {
    auto s = load_scenario(source(f));
    auto a = assess_policy(scenario_scm(s), s.policy(), s.data_bias, s.reading);
    out.push_back({f, sample(a.scm, s.n, s.data_seed), s.policy(), s.training});
  }
  return out;
}

// max |analytic - central difference| over max(|central difference|), step h
inline double gradient_error(const fairlab::DecisionModel& m, const fairlab::Dataset& d, double l2,
                             double h = 1e-5) {
  auto g = fairlab::logistic_gradient(m, d, l2);
  double num = 0.0, den = 0.0;
  for (std::size_t j = 0; j < m.weights.size(); ++j) {
    auto up = m, dn = m;
    up.weights[j] += h;
    dn.weights[j] -= h;
    double fd = (fairlab::logistic_loss(up, d, l2) - fairlab::logistic_loss(dn, d, l2)) / (2 * h);
    num = std::max(num, std::abs(g[j] - fd));
    den = std::max(den, std::abs(fd));
  }
  return num / den;
}

}  // namespace fixtures
