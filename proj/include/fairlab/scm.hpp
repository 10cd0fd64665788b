#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fairlab/graph.hpp"

namespace fairlab {

inline constexpr double kSignEpsilon = 1e-6;
inline constexpr double kCiThreshold = 0.02;

using EdgeKey = std::pair<std::string, std::string>;

class LinearSCM {
 public:
  LinearSCM(CausalGraph graph, std::map<EdgeKey, double> coefficients,
            std::map<std::string, double> noise_scales, std::pair<double, double> levels = {0.0, 1.0},
            double p_protected = 0.5, std::map<std::string, double> clamped = {});

  const CausalGraph& graph() const { return graph_; }
  const std::map<EdgeKey, double>& coefficients() const { return coef_; }
  const std::map<std::string, double>& noise_scales() const { return noise_; }
  const std::map<std::string, double>& clamped() const { return clamped_; }
  std::pair<double, double> levels() const { return levels_; }
  double delta_a() const { return levels_.second - levels_.first; }
  double p_protected() const { return p_; }
  const std::string& protected_node() const { return protected_; }

  double coefficient(const std::string& from, const std::string& to) const;
  double noise(const std::string& id) const;

  bool operator==(const LinearSCM&) const = default;

 private:
  CausalGraph graph_;
  std::map<EdgeKey, double> coef_;
  std::map<std::string, double> noise_;
  std::pair<double, double> levels_;
  double p_;
  std::map<std::string, double> clamped_;
  std::string protected_;
};

struct StandardCoefficients {
  double alpha_aw = 0.0;
  double alpha_wx = 0.0;
  double beta_xd = 0.0;
  double beta_ad = 0.0;
  double gamma_wy = 0.0;
  double gamma_dy = 0.0;
};

struct StandardNoise {
  double w = 1.0;
  double x = 0.1;
  double d = 0.5;
  double y = 1.0;
};

// builds an SCM over g, taking coefficients for whichever standard edges g carries
LinearSCM make_standard_scm(const CausalGraph& g, const StandardCoefficients& c,
                            const StandardNoise& noise = {}, std::pair<double, double> levels = {0.0, 1.0},
                            double p_protected = 0.5);
StandardCoefficients standard_coefficients(const LinearSCM& scm);

class Dataset {
 public:
  Dataset() = default;
  Dataset(std::vector<std::string> columns, std::vector<std::vector<double>> values,
          std::uint64_t seed = 0);

  const std::vector<std::string>& columns() const { return columns_; }
  std::size_t rows() const { return values_.empty() ? 0 : values_.front().size(); }
  bool has(const std::string& c) const;
  const std::vector<double>& column(const std::string& c) const;
  std::uint64_t seed() const { return seed_; }

  Dataset with_column(const std::string& name, std::vector<double> values) const;
  std::string to_csv() const;

  bool operator==(const Dataset&) const = default;

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<double>> values_;
  std::uint64_t seed_ = 0;
};

struct SampleOptions {
  bool include_latent = false;
};

Dataset sample(const LinearSCM& scm, std::size_t n, std::uint64_t seed,
               const SampleOptions& opt = {});

LinearSCM intervene(const LinearSCM& scm, const std::vector<std::pair<std::string, double>>& assignments);

// E[node] for every node, exact for linear models
std::map<std::string, double> expected_values(const LinearSCM& scm);

class CompositeSign {
 public:
  CompositeSign() = default;
  static CompositeSign from_values(const std::vector<double>& components, double eps = kSignEpsilon);
  static CompositeSign from_value(double v, double eps = kSignEpsilon) { return from_values({v}, eps); }
  static CompositeSign parse(const std::string& text);

  int negatives() const { return neg_; }
  int positives() const { return pos_; }
  bool zero() const { return neg_ == 0 && pos_ == 0; }
  std::string render() const;

  bool operator==(const CompositeSign&) const = default;

 private:
  int neg_ = 0;
  int pos_ = 0;
};

struct EffectDecomposition {
  double de = 0.0;
  double ie = 0.0;
  double te = 0.0;
  CompositeSign de_sign;
  CompositeSign ie_sign;
  CompositeSign te_sign;
};

EffectDecomposition effect_decomposition(const LinearSCM& scm, const std::string& cause,
                                         const std::string& effect);

struct CiResult {
  double statistic = 0.0;
  bool independent = true;
};

CiResult ci_test(const Dataset& data, const std::string& x, const std::string& y,
                 const std::vector<std::string>& given, double tau = kCiThreshold);

// Pearson correlation, shared by several modules
double correlation(const std::vector<double>& a, const std::vector<double>& b);

std::string scm_to_json(const LinearSCM& scm);
LinearSCM scm_from_json(const std::string& text);

}  // namespace fairlab
