#include "fairlab/regimes.hpp"

#include <cmath>
#include <map>

#include "fairlab/error.hpp"

namespace fairlab {

namespace {

struct RegimeRow {
  Regime regime;
  const char* name;
  const char* de;
  const char* ie;
  PolicyRegime policy;
  bool fairness;
};

constexpr RegimeRow kRows[] = {
    {Regime::FairLottery, "fair-lottery", "0", "-+", PolicyRegime::Lottery, true},
    {Regime::NoDiscrimination, "no-discrimination", "0", "+", PolicyRegime::Lottery, false},
    {Regime::FairAffirmativeAction, "fair-affirmative-action", "+", "-",
     PolicyRegime::AffirmativeAction, true},
    {Regime::ReverseDiscrimination, "reverse-discrimination", "+", "0",
     PolicyRegime::AffirmativeAction, false},
    {Regime::FairUnawareness, "fair-unawareness", "0", "0", PolicyRegime::Unawareness, true},
    {Regime::CovertDiscrimination, "covert-discrimination", "0", "-", PolicyRegime::Unawareness,
     false},
    {Regime::FairSupremacism, "fair-supremacism", "-", "+", PolicyRegime::Supremacism, true},
    {Regime::OvertDiscrimination, "overt-discrimination", "-", "0", PolicyRegime::Supremacism,
     false},
};

const RegimeRow& row(Regime r) {
  for (const auto& x : kRows)
    if (x.regime == r) return x;
  throw Error(ErrorCode::Input, "unknown regime");
}

void require_standard(const LinearSCM& scm) {
  const auto& g = scm.graph();
  const std::pair<const char*, NodeRole> want[] = {{"A", NodeRole::ProtectedAttribute},
                                                   {"W", NodeRole::Mediator},
                                                   {"X", NodeRole::Data},
                                                   {"D", NodeRole::Decision},
                                                   {"Y", NodeRole::Outcome}};
  if (g.size() != 5) throw Error(ErrorCode::Input, "model is not over the standard fairness graph");
  for (const auto& [id, role] : want)
    if (!g.has_node(id) || g.node(id).role != role)
      throw Error(ErrorCode::Input, "model is not over the standard fairness graph");
}

StandardNoise noise_of(const LinearSCM& scm) {
  return {scm.noise("W"), scm.noise("X"), scm.noise("D"), scm.noise("Y")};
}

}  // namespace

std::string regime_name(Regime r) { return row(r).name; }

Regime parse_regime(const std::string& name) {
  for (const auto& x : kRows)
    if (name == x.name) return x.regime;
  throw Error(ErrorCode::Input, "unknown regime '" + name + "'");
}

bool is_fairness_regime(Regime r) { return row(r).fairness; }

PolicyRegime regime_policy(Regime r) { return row(r).policy; }

Regime pair_partner(Regime r) {
  for (const auto& x : kRows)
    if (x.policy == row(r).policy && x.regime != r) return x.regime;
  throw Error(ErrorCode::Input, "unpaired regime");
}

Regime classify_regime(const CompositeSign& de, const CompositeSign& ie) {
  for (const auto& x : kRows)
    if (CompositeSign::parse(x.de) == de && CompositeSign::parse(x.ie) == ie) return x.regime;
  throw Error(ErrorCode::Unclassifiable,
              "no regime has signs (DE " + de.render() + ", IE " + ie.render() + ")");
}

SignPair canonical_signs(Regime r) {
  return {CompositeSign::parse(row(r).de), CompositeSign::parse(row(r).ie)};
}

FairnessCriterion criterion_for(PolicyRegime p) {
  switch (p) {
    case PolicyRegime::Lottery:
      return {CriterionKind::IndependentOfAAndW, "D _||_ A, W", true, true, "Far-left", ""};
    case PolicyRegime::AffirmativeAction:
      return {CriterionKind::IndependentOfA, "D _||_ A", false, true, "Left-wing", "First"};
    case PolicyRegime::Unawareness:
      return {CriterionKind::IndependentOfAGivenW, "D _||_ A | W", true, false, "Right-wing",
              "Second"};
    case PolicyRegime::Supremacism:
      return {CriterionKind::DependentOnA, "D not _||_ A", false, false, "Far-right", ""};
  }
  throw Error(ErrorCode::Input, "unknown policy");
}

std::string criterion_name(CriterionKind k) {
  switch (k) {
    case CriterionKind::IndependentOfAAndW: return "independent-of-a-and-w";
    case CriterionKind::IndependentOfA: return "independent-of-a";
    case CriterionKind::IndependentOfAGivenW: return "independent-of-a-given-w";
    case CriterionKind::DependentOnA: return "dependent-on-a";
  }
  return "";
}

LawCategory law_mapping(Regime r) {
  switch (r) {
    case Regime::OvertDiscrimination:
    case Regime::ReverseDiscrimination:
      return {UsLaw::DisparateTreatment, EuLaw::DirectDiscrimination};
    case Regime::CovertDiscrimination:
    case Regime::NoDiscrimination:
      return {UsLaw::DisparateImpact, EuLaw::IndirectDiscrimination};
    default:
      return {};
  }
}

std::string us_law_name(UsLaw l) {
  switch (l) {
    case UsLaw::None: return "none";
    case UsLaw::DisparateTreatment: return "disparate-treatment";
    case UsLaw::DisparateImpact: return "disparate-impact";
  }
  return "";
}

std::string eu_law_name(EuLaw l) {
  switch (l) {
    case EuLaw::None: return "none";
    case EuLaw::DirectDiscrimination: return "direct-discrimination";
    case EuLaw::IndirectDiscrimination: return "indirect-discrimination";
  }
  return "";
}

LinearSCM apply_policy(const LinearSCM& scm, PolicyRegime policy, Sign data_bias) {
  require_standard(scm);
  auto c = standard_coefficients(scm);
  c.alpha_aw = static_cast<int>(data_bias) * std::abs(c.alpha_aw);
  c.beta_ad = 0.0;
  const auto noise = noise_of(scm);
  auto unaware = make_standard_scm(standard_fairness_graph(PolicyRegime::Unawareness), c, noise,
                                   scm.levels(), scm.p_protected());
  switch (policy) {
    case PolicyRegime::Unawareness:
      return unaware;
    case PolicyRegime::Lottery:
      c.beta_xd = 0.0;
      return make_standard_scm(standard_fairness_graph(PolicyRegime::Lottery), c, noise,
                               scm.levels(), scm.p_protected());
    case PolicyRegime::AffirmativeAction:
    case PolicyRegime::Supremacism: {
      const double ie = effect_decomposition(unaware, "A", "D").ie;
      if (std::abs(ie) < kSignEpsilon)
        throw Error(ErrorCode::CalibrationDegenerate,
                    "indirect effect is zero; the direct coefficient would be 0");
      const double da = scm.delta_a();
      c.beta_ad = policy == PolicyRegime::AffirmativeAction ? -ie / da : -std::abs(ie) / da;
      return make_standard_scm(standard_fairness_graph(policy), c, noise, scm.levels(),
                               scm.p_protected());
    }
  }
  throw Error(ErrorCode::Input, "unknown policy");
}

PolicyAssessment assess_policy(const LinearSCM& base, PolicyRegime policy, Sign data_bias,
                               Reading reading) {
  auto scm = apply_policy(base, policy, data_bias);
  auto eff = effect_decomposition(scm, "A", "D");
  PolicyAssessment out{policy, data_bias, reading, scm, eff, eff.de_sign, eff.ie_sign,
                       std::nullopt, 0.0, 0.0};
  if (policy == PolicyRegime::Lottery) {
    auto un = apply_policy(base, PolicyRegime::Unawareness, data_bias);
    out.baseline_ie = effect_decomposition(un, "A", "D").ie;
    // between-group decision gap seen by the disadvantaged group, lottery minus unawareness
    out.removal_gap = -std::abs(eff.ie) + std::abs(out.baseline_ie);
    if (reading == Reading::Fairness)
      out.ie_sign = CompositeSign::from_values({out.baseline_ie, eff.ie - out.baseline_ie});
    else
      out.ie_sign = CompositeSign::from_value(out.removal_gap);
  }
  try {
    out.regime = classify_regime(out.de_sign, out.ie_sign);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::Unclassifiable) throw;
  }
  return out;
}

CriterionReport evaluate_criterion(const Dataset& data, CriterionKind kind, double tau) {
  for (const char* c : {"A", "D"})
    if (!data.has(c)) throw Error(ErrorCode::Input, std::string("dataset lacks column ") + c);
  CriterionReport rep{};
  for (auto p : kAllPolicies)
    if (criterion_for(p).kind == kind) {
      rep.policy = p;
      rep.criterion = criterion_for(p);
    }
  std::string w = "W";
  if (!data.has("W")) {
    if (!data.has("X")) throw Error(ErrorCode::Input, "dataset lacks both W and X");
    w = "X";
    rep.substitution = "W is latent; conditioning on its measurement X";
  }
  auto run = [&](const std::string& statement, const std::string& x, const std::string& y,
                 std::vector<std::string> given) {
    auto r = ci_test(data, x, y, given, tau);
    rep.tests.push_back({statement, x, y, given, r.statistic, tau, r.independent});
    return r.independent;
  };
  switch (kind) {
    case CriterionKind::IndependentOfAAndW: {
      bool a = run("D _||_ A | " + w, "D", "A", {w});
      bool b = run("D _||_ " + w + " | A", "D", w, {"A"});
      rep.passed = a && b;
      break;
    }
    case CriterionKind::IndependentOfA:
      rep.passed = run("D _||_ A", "D", "A", {});
      break;
    case CriterionKind::IndependentOfAGivenW:
      rep.passed = run("D _||_ A | " + w, "D", "A", {w});
      break;
    case CriterionKind::DependentOnA:
      rep.passed = !run("D _||_ A | " + w, "D", "A", {w});
      break;
  }
  return rep;
}

CriterionReport check_criterion(const Dataset& data, PolicyRegime policy, double tau) {
  auto rep = evaluate_criterion(data, criterion_for(policy).kind, tau);
  rep.policy = policy;
  rep.criterion = criterion_for(policy);
  return rep;
}

std::vector<std::pair<std::string, BiasColor>> derive_node_bias(const CausalGraph& g) {
  std::map<std::string, std::pair<bool, bool>> seen;  // (negative, positive)
  auto mark = [](std::pair<bool, bool>& s, BiasColor c) {
    if (c == BiasColor::NegativeBias) s.first = true;
    if (c == BiasColor::PositiveBias) s.second = true;
  };
  std::map<std::string, BiasColor> colour;
  for (const auto& id : g.topological_order()) {
    auto& s = seen[id];
    if (g.node(id).role != NodeRole::ProtectedAttribute) {
      for (const auto& e : g.edges()) {
        if (e.to == id) {
          mark(s, e.bias);
          mark(s, colour[e.from]);
        }
        if (e.from == id) mark(s, e.bias);
      }
    }
    colour[id] = s.first == s.second ? BiasColor::Neutral
                 : s.first           ? BiasColor::NegativeBias
                                     : BiasColor::PositiveBias;
  }
  std::vector<std::pair<std::string, BiasColor>> out;
  for (const auto& n : g.nodes()) out.push_back({n.id, colour[n.id]});
  return out;
}

CausalGraph regime_graph(Regime r) {
  const auto base = standard_fairness_graph(regime_policy(r));
  const auto N = BiasColor::Neutral, R = BiasColor::NegativeBias, B = BiasColor::PositiveBias;
  // colours for A->W, W->X, X->D, D->Y, W->Y, A->D
  std::map<Regime, std::array<BiasColor, 6>> palette = {
      {Regime::FairSupremacism, {B, B, B, N, B, R}},
      {Regime::OvertDiscrimination, {N, N, N, R, N, R}},
      {Regime::FairUnawareness, {N, N, N, N, N, N}},
      {Regime::CovertDiscrimination, {R, R, R, R, R, N}},
      {Regime::FairAffirmativeAction, {R, R, R, N, R, B}},
      {Regime::ReverseDiscrimination, {N, N, N, B, N, B}},
      {Regime::FairLottery, {R, R, N, N, R, N}},
      {Regime::NoDiscrimination, {N, N, N, B, N, N}},
  };
  const std::pair<const char*, const char*> order[] = {{"A", "W"}, {"W", "X"}, {"X", "D"},
                                                       {"D", "Y"}, {"W", "Y"}, {"A", "D"}};
  std::vector<Edge> edges;
  for (auto e : base.edges()) {
    for (std::size_t i = 0; i < 6; ++i)
      if (e.from == order[i].first && e.to == order[i].second) e.bias = palette[r][i];
    edges.push_back(e);
  }
  return CausalGraph(base.nodes(), edges);
}

}  // namespace fairlab
