#include "fairlab/compliance.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <map>

#include <json.hpp>

#include "fairlab/error.hpp"

namespace fairlab {

namespace {

Error input(const std::string& m) { return Error(ErrorCode::Input, m); }

const std::vector<std::vector<std::string>> kMasks = {{}, {"X"}};
const std::vector<double> kL2Grid = {0.0, 0.01, 0.1, 1.0};

std::vector<double> threshold_grid() {
  std::vector<double> out;
  for (int k = 2; k <= 38; ++k) out.push_back(k * 0.025);
  return out;
}

std::string mask_name(const std::vector<std::string>& mask) {
  if (mask.empty()) return "none";
  std::string s;
  for (const auto& f : mask) s += (s.empty() ? "" : "+") + f;
  return s;
}

std::string candidate_id(const std::vector<std::string>& mask, double l2, double threshold) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "mask=%s;l2=%.3f;threshold=%.3f", mask_name(mask).c_str(), l2,
                threshold);
  return buf;
}

struct GridPoint {
  std::string id;
  std::size_t mask;
  std::size_t l2;
  double threshold;
};

std::vector<GridPoint> grid() {
  std::vector<GridPoint> pts;
  for (std::size_t m = 0; m < kMasks.size(); ++m)
    for (std::size_t l = 0; l < kL2Grid.size(); ++l) {
      // the penalty never touches the bias, so a bias-only model ignores l2
      if (kMasks[m].empty() && l > 0) continue;
      for (double t : threshold_grid()) pts.push_back({candidate_id(kMasks[m], kL2Grid[l], t), m, l, t});
    }
  std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  return pts;
}

std::pair<double, double> group_rates(const std::vector<double>& a, const std::vector<int>& d) {
  auto [lo, hi] = std::minmax_element(a.begin(), a.end());
  double s0 = 0, s1 = 0, n0 = 0, n1 = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == *lo) {
      s0 += d[i];
      n0 += 1;
    } else {
      s1 += d[i];
      n1 += 1;
    }
  }
  return {s0 / n0, s1 / n1};
}

}  // namespace

DisparityResult disparity_test(const Dataset& data, const std::vector<int>& decisions,
                               double tau_disp) {
  const auto& a = data.column("A");
  if (decisions.size() != a.size()) throw input("one decision per row is required");
  for (int d : decisions)
    if (d != 0 && d != 1) throw input("decisions must be binary");
  auto [lo, hi] = std::minmax_element(a.begin(), a.end());
  if (a.empty() || *lo == *hi) throw input("disparity test needs both groups");
  for (double v : a)
    if (v != *lo && v != *hi) throw input("protected attribute must be binary");
  DisparityResult r;
  std::tie(r.rate_a, r.rate_b) = group_rates(a, decisions);
  r.signed_gap = r.rate_b - r.rate_a;
  r.gap = std::abs(r.signed_gap);
  r.adverse = r.gap > tau_disp;
  return r;
}

NecessityResult necessity_check(const Dataset& data, double tau_nec) {
  NecessityResult r;
  r.relevance = ci_test(data, "X", "Y", {}, tau_nec).statistic;
  r.necessary = std::abs(r.relevance) > tau_nec;
  return r;
}

std::vector<std::string> lda_candidate_ids() {
  std::vector<std::string> ids = {"base"};
  for (const auto& p : grid()) ids.push_back(p.id);
  return ids;
}

LdaResult lda_search(const Dataset& data, const DecisionModel& base, std::size_t budget,
                     const ComplianceConfig& cfg) {
  if (budget < 1) throw input("budget must be >= 1");
  const auto labels = make_labels(data, base.label_threshold);
  const auto& a = data.column("A");

  auto evaluate = [&](CandidateResult c, const std::vector<int>& d) {
    std::tie(c.rate_a, c.rate_b) = group_rates(a, d);
    c.gap = c.rate_b - c.rate_a;
    c.accuracy = accuracy(d, labels);
    return c;
  };

  LdaResult res;
  CandidateResult b;
  b.id = "base";
  for (const auto& f : base.features)
    if (f != kBiasFeature) b.features.push_back(f);
  b.threshold = base.threshold;
  res.base = evaluate(b, decide_all(base, data, cfg.decision_seed));
  res.evaluated = 1;
  if (std::abs(res.base.gap) <= cfg.tau_disp) {
    res.found = true;
    res.alternative = res.base;
    return res;
  }
  std::vector<CandidateResult> pool = {res.base};

  const auto points = grid();
  const std::size_t n_grid = std::min(points.size(), budget - 1);
  std::map<std::pair<std::size_t, std::size_t>, std::future<std::vector<double>>> pending;
  for (std::size_t i = 0; i < n_grid; ++i) {
    const auto& p = points[i];
    auto key = std::make_pair(p.mask, p.l2);
    if (pending.count(key)) continue;
    // independent fits, trained concurrently
    pending[key] = std::async(std::launch::async, [&data, &cfg, &base, p] {
      TrainConfig tc = cfg.training;
      tc.l2 = kL2Grid[p.l2];
      tc.label_threshold = base.label_threshold;
      auto policy = kMasks[p.mask].empty() ? PolicyRegime::Lottery : PolicyRegime::Unawareness;
      auto m = train(data, policy, tc);
      m.policy = PolicyRegime::Unawareness;  // scored deterministically, never drawn
      std::vector<double> pr(data.rows());
      std::map<std::string, double> row;
      for (std::size_t r = 0; r < data.rows(); ++r) {
        for (const auto& f : kMasks[p.mask]) row[f] = data.column(f)[r];
        pr[r] = decision_probability(m, row);
      }
      return pr;
    });
  }
  std::map<std::pair<std::size_t, std::size_t>, std::vector<double>> probs;
  for (auto& [key, fut] : pending) probs[key] = fut.get();

  for (std::size_t i = 0; i < n_grid; ++i) {
    const auto& p = points[i];
    auto key = std::make_pair(p.mask, p.l2);
    const auto& pr = probs[key];
    std::vector<int> d(pr.size());
    for (std::size_t r = 0; r < pr.size(); ++r) d[r] = pr[r] >= p.threshold ? 1 : 0;
    CandidateResult c;
    c.id = p.id;
    c.features = kMasks[p.mask];
    c.l2 = kL2Grid[p.l2];
    c.threshold = p.threshold;
    pool.push_back(evaluate(c, d));
    ++res.evaluated;
  }

  const CandidateResult* best = nullptr;
  for (const auto& c : pool) {
    if (res.base.accuracy - c.accuracy > cfg.delta_acc) continue;
    if (!best || std::abs(c.gap) < std::abs(best->gap) ||
        (std::abs(c.gap) == std::abs(best->gap) && c.id < best->id))
      best = &c;
  }
  // the base always satisfies the accuracy constraint, so best is set
  const double g0 = std::abs(res.base.gap);
  const double g1 = std::abs(best->gap);
  res.found = g1 < g0;
  if (res.found) {
    res.alternative = *best;
    res.disparity_reduction = g0 > 0 ? std::clamp((g0 - g1) / g0, 0.0, 1.0) : 0.0;
    res.accuracy_delta = best->accuracy - res.base.accuracy;
  }
  return res;
}

ComplianceReport run_compliance(const Dataset& data, const DecisionModel& base,
                                const ComplianceConfig& cfg) {
  ComplianceReport r;
  r.step1 = disparity_test(data, decide_all(base, data, cfg.decision_seed), cfg.tau_disp);
  if (r.step1.adverse) {
    r.step2 = necessity_check(data, cfg.tau_nec);
    r.step3 = lda_search(data, base, cfg.budget, cfg);
  }
  return r;
}

namespace {

nlohmann::ordered_json candidate_json(const CandidateResult& c) {
  return {{"id", c.id},          {"features", c.features}, {"l2", c.l2},
          {"threshold", c.threshold}, {"rate_a", c.rate_a}, {"rate_b", c.rate_b},
          {"gap", c.gap},        {"accuracy", c.accuracy}};
}

CandidateResult candidate_from(const nlohmann::json& j) {
  CandidateResult c;
  c.id = j.at("id").get<std::string>();
  c.features = j.at("features").get<std::vector<std::string>>();
  c.l2 = j.at("l2").get<double>();
  c.threshold = j.at("threshold").get<double>();
  c.rate_a = j.at("rate_a").get<double>();
  c.rate_b = j.at("rate_b").get<double>();
  c.gap = j.at("gap").get<double>();
  c.accuracy = j.at("accuracy").get<double>();
  return c;
}

}  // namespace

std::string report_to_json(const ComplianceReport& r) {
  nlohmann::ordered_json j;
  j["step1"] = {{"rate_a", r.step1.rate_a},
                {"rate_b", r.step1.rate_b},
                {"gap", r.step1.gap},
                {"signed_gap", r.step1.signed_gap},
                {"adverse", r.step1.adverse}};
  j["step2"] = nullptr;
  if (r.step2) j["step2"] = {{"relevance", r.step2->relevance}, {"necessary", r.step2->necessary}};
  j["step3"] = nullptr;
  if (r.step3) {
    const auto& s = *r.step3;
    nlohmann::ordered_json k;
    k["found"] = s.found;
    k["base"] = candidate_json(s.base);
    k["alternative"] = s.alternative ? candidate_json(*s.alternative) : nlohmann::ordered_json();
    k["disparity_reduction"] = s.disparity_reduction;
    k["accuracy_delta"] = s.accuracy_delta;
    k["evaluated"] = s.evaluated;
    j["step3"] = k;
  }
  return j.dump(2);
}

ComplianceReport report_from_json(const std::string& text) {
  try {
    auto j = nlohmann::json::parse(text);
    ComplianceReport r;
    const auto& s1 = j.at("step1");
    r.step1 = {s1.at("rate_a").get<double>(), s1.at("rate_b").get<double>(),
               s1.at("gap").get<double>(), s1.at("signed_gap").get<double>(),
               s1.at("adverse").get<bool>()};
    if (!j.at("step2").is_null())
      r.step2 = NecessityResult{j["step2"].at("relevance").get<double>(),
                                j["step2"].at("necessary").get<bool>()};
    if (!j.at("step3").is_null()) {
      const auto& s = j["step3"];
      LdaResult l;
      l.found = s.at("found").get<bool>();
      l.base = candidate_from(s.at("base"));
      if (!s.at("alternative").is_null()) l.alternative = candidate_from(s["alternative"]);
      l.disparity_reduction = s.at("disparity_reduction").get<double>();
      l.accuracy_delta = s.at("accuracy_delta").get<double>();
      l.evaluated = s.at("evaluated").get<std::size_t>();
      r.step3 = l;
    }
    return r;
  } catch (const nlohmann::json::exception& ex) {
    throw input(std::string("compliance json: ") + ex.what());
  }
}

std::string report_to_text(const ComplianceReport& r) {
  char buf[512];
  std::string out;
  std::snprintf(buf, sizeof buf, "step 1  decision rates A %.4f  B %.4f  gap %+.4f  adverse: %s\n",
                r.step1.rate_a, r.step1.rate_b, r.step1.signed_gap, r.step1.adverse ? "yes" : "no");
  out += buf;
  if (!r.step2) return out + "steps 2-3 not reached\n";
  std::snprintf(buf, sizeof buf, "step 2  relevance of X for Y %.4f  necessary: %s\n",
                r.step2->relevance, r.step2->necessary ? "yes" : "no");
  out += buf;
  const auto& s = *r.step3;
  if (!s.found) {
    std::snprintf(buf, sizeof buf, "step 3  no less discriminatory alternative in %zu candidates\n",
                  s.evaluated);
    return out + buf;
  }
  std::snprintf(buf, sizeof buf,
                "step 3  alternative %s  gap %+.4f  reduction %.1f%%  accuracy change %+.4f  "
                "(%zu candidates)\n",
                s.alternative->id.c_str(), s.alternative->gap, 100.0 * s.disparity_reduction,
                s.accuracy_delta, s.evaluated);
  return out + buf;
}

}  // namespace fairlab
