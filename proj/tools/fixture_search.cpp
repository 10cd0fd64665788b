// Coarse grid search over the symmetric knobs of the combined loop model.
//
// Every grid point is simulated under the four policies with the default windows and
// dead-band. A point qualifies when the window-mean decision gaps carry the expected
// short/long signs:
//
//   unawareness         -  0
//   affirmative-action  0  -
//   lottery             0  0
//   supremacism         -  -
//
// The margin of a point is the smallest distance of any of the eight gaps from the
// dead-band edge, so a larger margin means a less fragile fixture. Qualifying points are
// printed by margin, then the frozen fixture is re-checked under seeded +-10% draws.
//
// The frozen fixture is the centre of every axis (0.5, 0.5, 0.02, 0.02, 0.25, 0.21). It
// qualifies with margin 0.0109, within 0.0013 of the best point, and keeps the pattern on
// 20/20 draws.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fairlab/dynamics.hpp"

using namespace fairlab;

namespace {

struct Knobs {
  double x_d, d_r, r_l, a_dep, dep_y, l_cap;
};

const std::map<PolicyRegime, std::pair<Sign, Sign>> kPattern = {
    {PolicyRegime::Unawareness, {Sign::Negative, Sign::Zero}},
    {PolicyRegime::AffirmativeAction, {Sign::Zero, Sign::Negative}},
    {PolicyRegime::Lottery, {Sign::Zero, Sign::Zero}},
    {PolicyRegime::Supremacism, {Sign::Negative, Sign::Negative}}};

CombinedParams with_knobs(const Knobs& k) {
  auto p = fixture_params();
  for (const char* g : {"A", "B"}) {
    const std::string s(g);
    p.weights["X_" + s + "->D"] = k.x_d;
    p.weights["D->R_" + s] = k.d_r;
    p.weights["R_" + s + "->L_" + s] = k.r_l;
    p.weights["A_" + s + "->DEP_" + s] = k.a_dep;
    p.weights["DEP_" + s + "->Y_" + s] = k.dep_y;
    p.bounds["L_" + s] = {-k.l_cap, k.l_cap};
  }
  return p;
}

double edge_margin(double gap, Sign want, double deadband) {
  return want == Sign::Zero ? deadband - std::abs(gap) : static_cast<int>(want) * gap - deadband;
}

// smallest margin over the eight gaps; negative when the pattern is missed
double pattern_margin(const CombinedParams& p) {
  double margin = 1e9;
  for (const auto& [pol, want] : kPattern) {
    auto m = build_combined(p, pol);
    auto g = measure_gaps(simulate(m, initial_state(m, {}, 42), kHorizon, {{0, pol}}));
    margin = std::min(margin, edge_margin(g.decision_short, want.first, g.deadband));
    margin = std::min(margin, edge_margin(g.decision_long, want.second, g.deadband));
  }
  return margin;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"grid search for the combined-model fixture"};
  int top = 10, draws = 20;
  std::uint64_t seed = 6;
  app.add_option("--top", top, "Qualifying points to print");
  app.add_option("--draws", draws, "Perturbation draws for the frozen fixture");
  app.add_option("--seed", seed, "Perturbation seed");
  CLI11_PARSE(app, argc, argv);

  const std::vector<double> x_d = {0.25, 0.5, 1.0}, d_r = {0.25, 0.5, 1.0}, r_l = {0.01, 0.02, 0.05},
                            a_dep = {0.01, 0.02, 0.05}, dep_y = {0.1, 0.25, 0.5}, l_cap = {0.1, 0.21, 0.4};
  std::vector<std::pair<double, Knobs>> hits;
  int points = 0;
  for (double a : x_d)
    for (double b : d_r)
      for (double c : r_l)
        for (double d : a_dep)
          for (double e : dep_y)
            for (double f : l_cap) {
              Knobs k{a, b, c, d, e, f};
              ++points;
              if (double m = pattern_margin(with_knobs(k)); m > 0) hits.push_back({m, k});
            }
  std::sort(hits.begin(), hits.end(), [](const auto& l, const auto& r) { return l.first > r.first; });

  std::printf("%d grid points, %zu reproduce the pattern\n", points, hits.size());
  std::printf("%8s %6s %6s %6s %6s %6s %6s\n", "margin", "X->D", "D->R", "R->L", "A->DEP", "DEP->Y", "L cap");
  for (int i = 0; i < top && i < static_cast<int>(hits.size()); ++i) {
    const auto& [m, k] = hits[i];
    std::printf("%8.4f %6.2f %6.2f %6.2f %6.2f %6.2f %6.2f\n", m, k.x_d, k.d_r, k.r_l, k.a_dep, k.dep_y, k.l_cap);
  }

  const double frozen = pattern_margin(fixture_params());
  std::printf("frozen fixture margin %.4f\n", frozen);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> f(0.9, 1.1);
  int held = 0;
  double worst = 1e9;
  for (int i = 0; i < draws; ++i) {
    auto p = fixture_params();
    for (auto& [key, w] : p.weights) w *= f(rng);
    const double m = pattern_margin(p);
    worst = std::min(worst, m);
    held += m > 0;
  }
  std::printf("perturbation: %d/%d draws keep the pattern, worst margin %.4f\n", held, draws, worst);
  return frozen > 0 && held == draws ? 0 : 1;
}
