#include <doctest.h>

#include <cmath>
#include <random>

#include "fairlab/error.hpp"
#include "fairlab/regimes.hpp"
#include "fairlab/scm.hpp"
#include "oracles.hpp"

using namespace fairlab;

namespace {

StandardCoefficients fixture_coefficients() {
  StandardCoefficients c;
  c.alpha_aw = -0.5;
  c.alpha_wx = 1.0;
  c.beta_xd = 0.8;
  c.gamma_wy = 1.0;
  c.gamma_dy = 0.2;
  return c;
}

LinearSCM fixture_scm() {
  return make_standard_scm(standard_fairness_graph(PolicyRegime::Unawareness), fixture_coefficients());
}

double mean(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

LinearSCM random_full_scm(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> coef(-1.0, 1.0), scale(0.1, 1.0);
  StandardCoefficients c{coef(rng), coef(rng), coef(rng), coef(rng), coef(rng), coef(rng)};
  StandardNoise n{scale(rng), scale(rng), scale(rng), scale(rng)};
  return make_standard_scm(full_fairness_graph(), c, n);
}

oracle::StandardModel hand_model(const LinearSCM& s) {
  oracle::StandardModel m;
  m.aw = s.coefficient("A", "W");
  m.wx = s.coefficient("W", "X");
  m.xd = s.coefficient("X", "D");
  m.ad = s.graph().has_edge("A", "D") ? s.coefficient("A", "D") : 0.0;
  m.sw = s.noise("W");
  m.sx = s.noise("X");
  m.sd = s.noise("D");
  return m;
}

}  // namespace

TEST_CASE("coefficients must match the edges exactly") {
  auto g = standard_fairness_graph(PolicyRegime::Unawareness);
  std::map<EdgeKey, double> coef = {{{"A", "W"}, 1}, {{"W", "X"}, 1}, {{"X", "D"}, 1}, {{"D", "Y"}, 1}};
  CHECK_THROWS_AS(LinearSCM(g, coef, {}), Error);
  coef[{"W", "Y"}] = 1;
  CHECK_NOTHROW(LinearSCM(g, coef, {}));
  coef[{"A", "D"}] = 1;
  CHECK_THROWS_AS(LinearSCM(g, coef, {}), Error);
  coef.erase({"A", "D"});
  CHECK_THROWS_AS(LinearSCM(g, coef, {}, {0, 1}, 1.0), Error);
  CHECK_THROWS_AS(LinearSCM(g, coef, {}, {0, 1}, 0.0), Error);
}

TEST_CASE("a zero model samples zeros everywhere but A") {
  auto s = make_standard_scm(standard_fairness_graph(PolicyRegime::Unawareness), {}, {0, 0, 0, 0});
  auto d = sample(s, 5, 1);
  CHECK(d.columns() == std::vector<std::string>{"A", "X", "D", "Y"});
  for (const char* c : {"X", "D", "Y"})
    for (double v : d.column(c)) CHECK(v == 0.0);
  for (double a : d.column("A")) CHECK((a == 0.0 || a == 1.0));
}

TEST_CASE("sampling is deterministic per seed and hides the latent mediator") {
  auto s = fixture_scm();
  auto a = sample(s, 3, 42), b = sample(s, 3, 42);
  CHECK(a == b);
  CHECK(a.to_csv() == b.to_csv());
  CHECK(sample(s, 3, 43).to_csv() != a.to_csv());
  CHECK_FALSE(a.has("W"));
  CHECK(sample(s, 3, 42, {true}).has("W"));
  CHECK(a.to_csv().rfind("A,X,D,Y\n", 0) == 0);
}

TEST_CASE("group mean difference of W matches alpha_AW") {
  auto d = sample(fixture_scm(), 200000, 11, {true});
  std::vector<double> w1, w0;
  for (std::size_t r = 0; r < d.rows(); ++r) (d.column("A")[r] == 1.0 ? w1 : w0).push_back(d.column("W")[r]);
  auto c = oracle::contrast(w1, w0);
  CHECK(std::abs(c.value - (-0.5)) <= 3 * c.se);
}

TEST_CASE("intervention severs incoming edges and fixes the value") {
  auto s = make_standard_scm(full_fairness_graph(), {0.5, 1, 0.8, 0.3, 1, 0.2});
  auto doa = intervene(s, {{"A", 1.0}});
  CHECK(doa.graph().parents("A").empty());
  const auto clamped = sample(doa, 50, 3);
  for (double a : clamped.column("A")) CHECK(a == 1.0);
  auto dod = intervene(s, {{"D", 1.0}});
  CHECK_FALSE(dod.graph().has_edge("A", "D"));
  CHECK_FALSE(dod.graph().has_edge("X", "D"));
  CHECK(dod.graph().has_edge("D", "Y"));
  CHECK_THROWS_AS(intervene(s, {{"Q", 1.0}}), Error);
  CHECK_THROWS_AS(intervene(doa, {{"A", 0.0}}), Error);
}

TEST_CASE("interventional contrast on Y recovers gamma_DY") {
  auto s = fixture_scm();
  auto hi = sample(intervene(s, {{"D", 1.0}}), 200000, 101);
  auto lo = sample(intervene(s, {{"D", 0.0}}), 200000, 202);
  auto c = oracle::contrast(hi.column("Y"), lo.column("Y"));
  CHECK(std::abs(c.value - 0.2) <= 3 * c.se);
  auto ev = expected_values(intervene(s, {{"D", 1.0}}));
  CHECK(ev["Y"] - expected_values(intervene(s, {{"D", 0.0}}))["Y"] == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("effect decomposition on the fixture") {
  auto e = effect_decomposition(fixture_scm(), "A", "D");
  CHECK(e.de == 0.0);
  CHECK(e.ie == doctest::Approx(-0.4).epsilon(1e-12));
  CHECK(e.te == doctest::Approx(-0.4).epsilon(1e-12));
  CHECK(e.de_sign.render() == "0");
  CHECK(e.ie_sign.render() == "-");
  auto zero = effect_decomposition(make_standard_scm(full_fairness_graph(), {}), "A", "D");
  CHECK(zero.de == 0.0);
  CHECK(zero.ie == 0.0);
  CHECK(zero.te == 0.0);
  auto aa = effect_decomposition(apply_policy(fixture_scm(), PolicyRegime::AffirmativeAction, Sign::Negative), "A", "D");
  CHECK(aa.de_sign.render() == "+");
  CHECK(aa.ie_sign.render() == "-");
  CHECK(aa.te_sign.render() == "0");
  CHECK_THROWS_AS(effect_decomposition(fixture_scm(), "X", "D"), Error);
}

TEST_CASE("total effect equals direct plus indirect on 1000 random models") {
  std::mt19937_64 rng(1234);
  for (int k = 0; k < 1000; ++k) {
    auto s = random_full_scm(rng);
    auto e = effect_decomposition(s, "A", "D");
    CHECK(std::abs(e.te - (e.de + e.ie)) <= 1e-9);
    oracle::LinearModel lm;
    for (const auto& [key, c] : s.coefficients()) lm.coef[key] = c;
    CHECK(std::abs(e.te - lm.total_effect("A", "D")) <= 1e-12);
    CHECK(std::abs(effect_decomposition(s, "A", "Y").te - lm.total_effect("A", "Y")) <= 1e-12);
  }
}

TEST_CASE("closed-form effects agree with Monte Carlo on random models") {
  std::mt19937_64 rng(4321);
  const std::size_t n = 50000;
  for (int k = 0; k < 5; ++k) {
    auto s = random_full_scm(rng);
    auto e = effect_decomposition(s, "A", "D");
    auto hi = sample(intervene(s, {{"A", 1.0}}), n, 1000 + 2 * k);
    auto lo = sample(intervene(s, {{"A", 0.0}}), n, 1001 + 2 * k);
    auto te = oracle::contrast(hi.column("D"), lo.column("D"));
    CHECK(std::abs(te.value - e.te) <= 3 * te.se);
    auto m = hand_model(s);
    auto de = oracle::contrast(m.decisions(1, 0, n, 50 + k), m.decisions(0, 0, n, 60 + k));
    auto ie = oracle::contrast(m.decisions(0, 1, n, 70 + k), m.decisions(0, 0, n, 80 + k));
    CHECK(std::abs(de.value - e.de) <= 3 * de.se);
    CHECK(std::abs(ie.value - e.ie) <= 3 * ie.se);
  }
}

TEST_CASE("composite signs parse, render and collapse near zero") {
  CHECK(CompositeSign::parse("-+").render() == "-+");
  CHECK(CompositeSign::parse("\xE2\x88\x92").render() == "-");
  CHECK(CompositeSign::parse("0").zero());
  CHECK(CompositeSign::from_value(5e-7).zero());
  CHECK(CompositeSign::from_value(-2e-6).render() == "-");
  CHECK(CompositeSign::from_values({-0.3, 0.2}).render() == "-+");
  CHECK(CompositeSign::from_values({0.2, -0.3}) == CompositeSign::parse("-+"));
  CHECK_THROWS_AS(CompositeSign::parse("x"), Error);
}

TEST_CASE("ci_test verdicts") {
  auto base = fixture_scm();
  auto lottery = sample(apply_policy(base, PolicyRegime::Lottery, Sign::Negative), 100000, 5);
  CHECK(ci_test(lottery, "D", "A", {}).independent);
  auto sup = sample(apply_policy(base, PolicyRegime::Supremacism, Sign::Negative), 100000, 5);
  CHECK_FALSE(ci_test(sup, "D", "A", {}).independent);

  std::vector<double> x = {1, 2, 3, 4, 5, 7};
  Dataset same({"x", "y"}, {x, x});
  auto r = ci_test(same, "x", "y", {});
  CHECK(r.statistic == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_FALSE(r.independent);

  Dataset flat({"x", "y"}, {{1, 1, 1, 1}, {1, 2, 3, 4}});
  try {
    ci_test(flat, "x", "y", {});
    FAIL("expected a degenerate error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Degenerate);
  }
  Dataset collinear({"x", "y", "z"}, {{1, 2, 3, 4}, {2, 1, 4, 3}, {2, 4, 6, 8}});
  CHECK_THROWS_AS(ci_test(collinear, "x", "y", {"z"}), Error);
  Dataset tiny({"x", "y", "z"}, {{1, 2}, {2, 1}, {0, 1}});
  try {
    ci_test(tiny, "x", "y", {"z"});
    FAIL("expected an insufficient-data error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InsufficientData);
  }
}

TEST_CASE("d-separation implies an independent ci verdict on samples") {
  std::mt19937_64 rng(2718);
  std::uniform_real_distribution<double> coef(0.3, 1.0);
  for (auto p : kAllPolicies) {
    auto g = standard_fairness_graph(p);
    std::map<EdgeKey, double> c;
    for (const auto& e : g.edges()) c[{e.from, e.to}] = coef(rng);
    LinearSCM s(g, c, {{"W", 1.0}, {"X", 0.5}, {"D", 0.5}, {"Y", 1.0}});
    auto d = sample(s, 100000, 31, {true});
    const std::vector<std::string> cols = {"A", "W", "X", "D", "Y"};
    for (const auto& x : cols)
      for (const auto& y : cols) {
        if (x >= y) continue;
        std::vector<std::string> rest;
        for (const auto& z : cols)
          if (z != x && z != y) rest.push_back(z);
        for (const auto& z : oracle::subsets(rest)) {
          if (!d_separated(g, {x}, {y}, z)) continue;
          INFO(policy_name(p), ": ", x, " _||_ ", y);
          CHECK(ci_test(d, x, y, std::vector<std::string>(z.begin(), z.end())).independent);
        }
      }
  }
}

TEST_CASE("scm json round-trips") {
  auto s = apply_policy(fixture_scm(), PolicyRegime::AffirmativeAction, Sign::Negative);
  CHECK(scm_from_json(scm_to_json(s)) == s);
  auto clamped = intervene(s, {{"A", 1.0}});
  CHECK(scm_from_json(scm_to_json(clamped)) == clamped);
}
