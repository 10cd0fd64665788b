#include "fairlab/decision_model.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/tools/roots.hpp>
#include <json.hpp>

#include "fairlab/error.hpp"
#include "rng.hpp"

namespace fairlab {

namespace {

Error input(const std::string& m) { return Error(ErrorCode::Input, m); }

double sigmoid(double s) {
  if (s >= 0) return 1.0 / (1.0 + std::exp(-s));
  double e = std::exp(s);
  return e / (1.0 + e);
}

double softplus(double s) { return std::max(s, 0.0) + std::log1p(std::exp(-std::abs(s))); }

// feature columns in model order; the bias column is null
std::vector<const std::vector<double>*> columns(const DecisionModel& m, const Dataset& data) {
  std::vector<const std::vector<double>*> cols;
  for (const auto& f : m.features) cols.push_back(f == kBiasFeature ? nullptr : &data.column(f));
  return cols;
}

double score_row(const DecisionModel& m, const std::vector<const std::vector<double>*>& cols,
                 std::size_t r) {
  double s = 0.0;
  for (std::size_t j = 0; j < cols.size(); ++j) s += m.weights[j] * (cols[j] ? (*cols[j])[r] : 1.0);
  return s;
}

double penalty(const DecisionModel& m, double l2) {
  double p = 0.0;
  for (std::size_t j = 0; j < m.features.size(); ++j)
    if (m.features[j] != kBiasFeature) p += m.weights[j] * m.weights[j];
  return 0.5 * l2 * p;
}

double loss_with(const DecisionModel& m, const std::vector<const std::vector<double>*>& cols,
                 const std::vector<double>& y, double l2) {
  double total = 0.0;
  for (std::size_t r = 0; r < y.size(); ++r) {
    double s = score_row(m, cols, r);
    total += softplus(s) - y[r] * s;
  }
  return total / static_cast<double>(y.size()) + penalty(m, l2);
}

std::vector<double> grad_with(const DecisionModel& m,
                              const std::vector<const std::vector<double>*>& cols,
                              const std::vector<double>& y, double l2) {
  std::vector<double> g(m.features.size(), 0.0);
  for (std::size_t r = 0; r < y.size(); ++r) {
    double err = sigmoid(score_row(m, cols, r)) - y[r];
    for (std::size_t j = 0; j < cols.size(); ++j) g[j] += err * (cols[j] ? (*cols[j])[r] : 1.0);
  }
  for (std::size_t j = 0; j < g.size(); ++j) {
    g[j] /= static_cast<double>(y.size());
    if (m.features[j] != kBiasFeature) g[j] += l2 * m.weights[j];
  }
  return g;
}

// loss and gradient in one pass, sharing exp(-|s|) per row
double loss_and_grad(const DecisionModel& m, const std::vector<const std::vector<double>*>& cols,
                     const std::vector<double>& y, double l2, std::vector<double>& g) {
  g.assign(m.features.size(), 0.0);
  double total = 0.0;
  for (std::size_t r = 0; r < y.size(); ++r) {
    const double s = score_row(m, cols, r);
    const double e = std::exp(-std::abs(s));
    total += std::max(s, 0.0) + std::log1p(e) - y[r] * s;
    const double err = (s >= 0 ? 1.0 / (1.0 + e) : e / (1.0 + e)) - y[r];
    for (std::size_t j = 0; j < cols.size(); ++j) g[j] += err * (cols[j] ? (*cols[j])[r] : 1.0);
  }
  for (std::size_t j = 0; j < g.size(); ++j) {
    g[j] /= static_cast<double>(y.size());
    if (m.features[j] != kBiasFeature) g[j] += l2 * m.weights[j];
  }
  return total / static_cast<double>(y.size()) + penalty(m, l2);
}

std::pair<double, double> protected_levels(const Dataset& data) {
  const auto& a = data.column("A");
  auto [lo, hi] = std::minmax_element(a.begin(), a.end());
  if (*lo == *hi) throw input("dataset contains a single protected group");
  for (double v : a)
    if (v != *lo && v != *hi) throw input("protected attribute must be binary");
  return {*lo, *hi};
}

}  // namespace

double DecisionModel::weight(const std::string& feature) const {
  for (std::size_t j = 0; j < features.size(); ++j)
    if (features[j] == feature) return weights[j];
  throw input("model has no feature '" + feature + "'");
}

std::vector<std::string> policy_features(PolicyRegime p) {
  switch (p) {
    case PolicyRegime::Lottery: return {kBiasFeature};
    case PolicyRegime::Unawareness: return {kBiasFeature, "X"};
    case PolicyRegime::AffirmativeAction:
    case PolicyRegime::Supremacism: return {kBiasFeature, "X", "A"};
  }
  return {};
}

std::vector<double> make_labels(const Dataset& data, double label_threshold) {
  const auto& y = data.column("Y");
  std::vector<double> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = y[i] > label_threshold ? 1.0 : 0.0;
  return out;
}

double logistic_loss(const DecisionModel& m, const Dataset& data, double l2) {
  return loss_with(m, columns(m, data), make_labels(data, m.label_threshold), l2);
}

std::vector<double> logistic_gradient(const DecisionModel& m, const Dataset& data, double l2) {
  return grad_with(m, columns(m, data), make_labels(data, m.label_threshold), l2);
}

DecisionModel train(const Dataset& data, PolicyRegime policy, const TrainConfig& cfg) {
  if (cfg.epochs < 1) throw input("epochs must be >= 1");
  if (!(cfg.learning_rate >= 0.0)) throw input("learning rate must be >= 0");
  if (!(cfg.l2 >= 0.0)) throw input("l2 must be >= 0");
  if (data.rows() == 0) throw input("empty training data");

  DecisionModel m;
  m.policy = policy;
  m.features = policy_features(policy);
  m.weights.assign(m.features.size(), 0.0);
  m.label_threshold = cfg.label_threshold;
  if (policy == PolicyRegime::AffirmativeAction || policy == PolicyRegime::Supremacism)
    m.fixed = {"A"};

  const auto y = make_labels(data, cfg.label_threshold);
  double pos = 0.0;
  for (double v : y) pos += v;
  if (pos == 0.0 || pos == static_cast<double>(y.size()))
    throw Error(ErrorCode::TrainingDegenerate, "labels contain a single class");
  const auto cols = columns(m, data);

  std::vector<bool> learn(m.features.size(), true);
  for (std::size_t j = 0; j < m.features.size(); ++j)
    learn[j] = std::find(m.fixed.begin(), m.fixed.end(), m.features[j]) == m.fixed.end();

  std::vector<double> g, trial_g;
  double loss = loss_and_grad(m, cols, y, cfg.l2, g);
  m.training_log.push_back({0, loss});
  double step = cfg.learning_rate;
  DecisionModel trial = m;
  trial.training_log.clear();
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    // halve the step whenever it would raise the loss
    for (int tries = 0; tries < 60 && step > 0.0; ++tries) {
      for (std::size_t j = 0; j < g.size(); ++j)
        trial.weights[j] = learn[j] ? m.weights[j] - step * g[j] : m.weights[j];
      double next = loss_and_grad(trial, cols, y, cfg.l2, trial_g);
      if (next <= loss) {
        m.weights = trial.weights;
        loss = next;
        g.swap(trial_g);
        break;
      }
      step *= 0.5;
    }
    m.training_log.push_back({epoch, loss});
  }

  if (policy == PolicyRegime::Lottery) m.threshold = sigmoid(m.weights[0]);
  return m;
}

double decision_probability(const DecisionModel& m, const std::map<std::string, double>& row) {
  double s = 0.0;
  for (std::size_t j = 0; j < m.features.size(); ++j) {
    if (m.features[j] == kBiasFeature) {
      s += m.weights[j];
      continue;
    }
    auto it = row.find(m.features[j]);
    if (it == row.end()) throw input("row lacks feature '" + m.features[j] + "'");
    s += m.weights[j] * it->second;
  }
  return sigmoid(s);
}

int decide(const DecisionModel& m, const std::map<std::string, double>& row,
           std::optional<double> rng_draw) {
  if (m.policy == PolicyRegime::Lottery) {
    if (!rng_draw) throw input("lottery decisions need a random draw");
    if (!(*rng_draw >= 0.0 && *rng_draw < 1.0)) throw input("random draw must lie in [0,1)");
    return *rng_draw < m.threshold ? 1 : 0;
  }
  return decision_probability(m, row) >= m.threshold ? 1 : 0;
}

std::vector<int> decide_all(const DecisionModel& m, const Dataset& data, std::uint64_t seed) {
  std::vector<int> out(data.rows());
  if (m.policy == PolicyRegime::Lottery) {
    detail::Rng rng(seed);
    for (auto& d : out) d = rng.uniform() < m.threshold ? 1 : 0;
    return out;
  }
  const auto cols = columns(m, data);
  for (std::size_t r = 0; r < out.size(); ++r)
    out[r] = sigmoid(score_row(m, cols, r)) >= m.threshold ? 1 : 0;
  return out;
}

double soft_total_effect(const DecisionModel& m, const Dataset& data) {
  const auto [a0, a1] = protected_levels(data);
  const auto& a = data.column("A");
  const auto cols = columns(m, data);
  double s0 = 0.0, s1 = 0.0, n0 = 0.0, n1 = 0.0;
  for (std::size_t r = 0; r < data.rows(); ++r) {
    double p = m.policy == PolicyRegime::Lottery ? m.threshold : sigmoid(score_row(m, cols, r));
    if (a[r] == a1) {
      s1 += p;
      n1 += 1.0;
    } else {
      s0 += p;
      n0 += 1.0;
    }
  }
  (void)a0;
  return s1 / n1 - s0 / n0;
}

DecisionModel calibrate_direct_weight(const DecisionModel& m, const Dataset& data) {
  if (m.policy != PolicyRegime::AffirmativeAction && m.policy != PolicyRegime::Supremacism)
    throw input("only affirmative-action and supremacism models carry a direct weight");
  std::size_t ja = m.features.size();
  for (std::size_t j = 0; j < m.features.size(); ++j)
    if (m.features[j] == "A") ja = j;
  if (ja == m.features.size()) throw input("model lacks the A feature");

  DecisionModel work = m;
  auto te = [&](double w) {
    work.weights[ja] = w;
    return soft_total_effect(work, data);
  };
  const double te0 = te(0.0);
  if (std::abs(te0) < kSignEpsilon)
    throw Error(ErrorCode::CalibrationDegenerate, "total effect is already zero");

  double lo = 0.0, hi = 0.0, step = 1.0;
  double flo = te0, fhi = te0;
  for (int i = 0; i < 60 && (flo > 0) == (fhi > 0); ++i) {
    if (te0 < 0) {
      hi += step;
      fhi = te(hi);
    } else {
      lo -= step;
      flo = te(lo);
    }
    step *= 2.0;
  }
  if ((flo > 0) == (fhi > 0))
    throw Error(ErrorCode::CalibrationDegenerate, "could not bracket the calibrating weight");
  std::uintmax_t iters = 200;
  auto [a, b] = boost::math::tools::toms748_solve(te, lo, hi, flo, fhi,
                                                  boost::math::tools::eps_tolerance<double>(52), iters);
  double root = std::abs(te(a)) <= std::abs(te(b)) ? a : b;
  if (std::abs(te(root)) >= kLogisticCalibrationTolerance)
    throw Error(ErrorCode::CalibrationDegenerate, "root-find missed the tolerance");

  DecisionModel out = m;
  out.weights[ja] = m.policy == PolicyRegime::AffirmativeAction ? root : -std::abs(root);
  return out;
}

double accuracy(const std::vector<int>& decisions, const std::vector<double>& labels) {
  if (decisions.size() != labels.size() || decisions.empty())
    throw input("decisions and labels must be non-empty and aligned");
  double hits = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (static_cast<double>(decisions[i]) == labels[i]) hits += 1.0;
  return hits / static_cast<double>(labels.size());
}

std::string model_to_json(const DecisionModel& m) {
  nlohmann::ordered_json j;
  j["policy"] = policy_name(m.policy);
  j["features"] = m.features;
  j["weights"] = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < m.features.size(); ++i) j["weights"][m.features[i]] = m.weights[i];
  j["fixed"] = m.fixed;
  j["threshold"] = m.threshold;
  j["label_threshold"] = m.label_threshold;
  j["training_log"] = nlohmann::ordered_json::array();
  for (const auto& r : m.training_log) j["training_log"].push_back({r.epoch, r.loss});
  return j.dump(2);
}

DecisionModel model_from_json(const std::string& text) {
  try {
    auto j = nlohmann::json::parse(text);
    DecisionModel m;
    m.policy = parse_policy(j.at("policy").get<std::string>());
    m.features = j.at("features").get<std::vector<std::string>>();
    for (const auto& f : m.features) m.weights.push_back(j.at("weights").at(f).get<double>());
    m.fixed = j.value("fixed", std::vector<std::string>{});
    m.threshold = j.at("threshold").get<double>();
    m.label_threshold = j.value("label_threshold", 0.0);
    for (const auto& r : j.value("training_log", nlohmann::json::array()))
      m.training_log.push_back({r.at(0).get<int>(), r.at(1).get<double>()});
    if (!(m.threshold > 0.0 && m.threshold < 1.0)) throw input("threshold must lie in (0,1)");
    return m;
  } catch (const nlohmann::json::exception& ex) {
    throw input(std::string("model json: ") + ex.what());
  }
}

}  // namespace fairlab
