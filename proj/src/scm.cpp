#include "fairlab/scm.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

#include <Eigen/Dense>
#include <json.hpp>

#include "fairlab/error.hpp"
#include "format.hpp"
#include "rng.hpp"

namespace fairlab {

namespace {

Error input(const std::string& m) { return Error(ErrorCode::Input, m); }

int role_rank(NodeRole r) { return static_cast<int>(r); }

}  // namespace

LinearSCM::LinearSCM(CausalGraph graph, std::map<EdgeKey, double> coefficients,
                     std::map<std::string, double> noise_scales, std::pair<double, double> levels,
                     double p_protected, std::map<std::string, double> clamped)
    : graph_(std::move(graph)),
      coef_(std::move(coefficients)),
      noise_(std::move(noise_scales)),
      levels_(levels),
      p_(p_protected),
      clamped_(std::move(clamped)) {
  if (!graph_.acyclic()) throw input("structural models need an acyclic graph");
  for (const auto& e : graph_.edges())
    if (!coef_.count({e.from, e.to}))
      throw input("missing coefficient for edge " + e.from + "->" + e.to);
  for (const auto& [k, v] : coef_) {
    if (!graph_.has_edge(k.first, k.second))
      throw input("coefficient without edge " + k.first + "->" + k.second);
    if (!std::isfinite(v)) throw input("non-finite coefficient on " + k.first + "->" + k.second);
  }
  for (const auto& [id, s] : noise_) {
    graph_.index_of(id);
    if (!(s >= 0.0) || !std::isfinite(s)) throw input("noise scale for '" + id + "' must be >= 0");
  }
  for (const auto& [id, v] : clamped_) {
    graph_.index_of(id);
    if (!graph_.parents(id).empty()) throw input("clamped node '" + id + "' still has parents");
  }
  int n_protected = 0;
  for (const auto& n : graph_.nodes())
    if (n.role == NodeRole::ProtectedAttribute) {
      protected_ = n.id;
      ++n_protected;
    }
  if (n_protected > 1) throw input("at most one protected attribute is supported");
  if (!(p_ > 0.0 && p_ < 1.0)) throw input("protected-attribute probability must lie in (0,1)");
}

double LinearSCM::coefficient(const std::string& from, const std::string& to) const {
  auto it = coef_.find({from, to});
  if (it == coef_.end()) throw input("no edge " + from + "->" + to);
  return it->second;
}

double LinearSCM::noise(const std::string& id) const {
  auto it = noise_.find(id);
  return it == noise_.end() ? 0.0 : it->second;
}

LinearSCM make_standard_scm(const CausalGraph& g, const StandardCoefficients& c,
                            const StandardNoise& noise, std::pair<double, double> levels,
                            double p_protected) {
  const std::map<EdgeKey, double> all = {
      {{"A", "W"}, c.alpha_aw}, {{"W", "X"}, c.alpha_wx}, {{"X", "D"}, c.beta_xd},
      {{"A", "D"}, c.beta_ad},  {{"W", "Y"}, c.gamma_wy}, {{"D", "Y"}, c.gamma_dy}};
  std::map<EdgeKey, double> coef;
  for (const auto& e : g.edges()) {
    auto it = all.find({e.from, e.to});
    if (it == all.end()) throw input("edge " + e.from + "->" + e.to + " is not a standard edge");
    coef[it->first] = it->second;
  }
  return LinearSCM(g, coef, {{"W", noise.w}, {"X", noise.x}, {"D", noise.d}, {"Y", noise.y}},
                   levels, p_protected);
}

StandardCoefficients standard_coefficients(const LinearSCM& scm) {
  auto get = [&](const char* a, const char* b) {
    auto it = scm.coefficients().find({a, b});
    return it == scm.coefficients().end() ? 0.0 : it->second;
  };
  return {get("A", "W"), get("W", "X"), get("X", "D"), get("A", "D"), get("W", "Y"), get("D", "Y")};
}

Dataset::Dataset(std::vector<std::string> columns, std::vector<std::vector<double>> values,
                 std::uint64_t seed)
    : columns_(std::move(columns)), values_(std::move(values)), seed_(seed) {
  if (columns_.size() != values_.size()) throw input("column count mismatch");
  std::set<std::string> names(columns_.begin(), columns_.end());
  if (names.size() != columns_.size()) throw input("duplicate dataset column");
  for (const auto& v : values_)
    if (v.size() != rows()) throw input("ragged dataset columns");
}

bool Dataset::has(const std::string& c) const {
  return std::find(columns_.begin(), columns_.end(), c) != columns_.end();
}

const std::vector<double>& Dataset::column(const std::string& c) const {
  for (std::size_t i = 0; i < columns_.size(); ++i)
    if (columns_[i] == c) return values_[i];
  throw input("dataset has no column '" + c + "'");
}

Dataset Dataset::with_column(const std::string& name, std::vector<double> values) const {
  auto cols = columns_;
  auto vals = values_;
  cols.push_back(name);
  vals.push_back(std::move(values));
  return Dataset(cols, vals, seed_);
}

std::string Dataset::to_csv() const {
  std::string out;
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (i) out += ',';
    out += columns_[i];
  }
  out += '\n';
  for (std::size_t r = 0; r < rows(); ++r) {
    for (std::size_t i = 0; i < columns_.size(); ++i) {
      if (i) out += ',';
      out += detail::format_double(values_[i][r]);
    }
    out += '\n';
  }
  return out;
}

Dataset sample(const LinearSCM& scm, std::size_t n, std::uint64_t seed, const SampleOptions& opt) {
  if (n < 1) throw input("sample size must be >= 1");
  const auto& g = scm.graph();
  const auto order = g.topological_order();
  const std::size_t k = g.size();

  struct Term {
    std::size_t parent;
    double coef;
  };
  std::vector<std::vector<Term>> terms(k);
  for (const auto& e : g.edges())
    terms[g.index_of(e.to)].push_back({g.index_of(e.from), scm.coefficient(e.from, e.to)});
  std::vector<std::size_t> ord;
  for (const auto& id : order) ord.push_back(g.index_of(id));

  std::vector<std::vector<double>> vals(k, std::vector<double>(n));
  std::vector<double> row(k);
  detail::Rng rng(seed);
  const auto [a0, a1] = scm.levels();
  for (std::size_t r = 0; r < n; ++r) {
    for (auto i : ord) {
      const auto& node = g.nodes()[i];
      auto cl = scm.clamped().find(node.id);
      if (cl != scm.clamped().end()) {
        row[i] = cl->second;
      } else if (node.role == NodeRole::ProtectedAttribute) {
        row[i] = rng.uniform() < scm.p_protected() ? a1 : a0;
      } else {
        double v = 0.0;
        for (const auto& t : terms[i]) v += t.coef * row[t.parent];
        v += scm.noise(node.id) * rng.normal();
        row[i] = v;
      }
      vals[i][r] = row[i];
    }
  }

  std::vector<std::size_t> cols;
  for (std::size_t i = 0; i < k; ++i)
    if (opt.include_latent || !g.nodes()[i].latent) cols.push_back(i);
  std::stable_sort(cols.begin(), cols.end(), [&](std::size_t a, std::size_t b) {
    return role_rank(g.nodes()[a].role) < role_rank(g.nodes()[b].role);
  });
  std::vector<std::string> names;
  std::vector<std::vector<double>> data;
  for (auto i : cols) {
    names.push_back(g.nodes()[i].id);
    data.push_back(std::move(vals[i]));
  }
  return Dataset(names, data, seed);
}

LinearSCM intervene(const LinearSCM& scm,
                    const std::vector<std::pair<std::string, double>>& assignments) {
  std::set<std::string> seen;
  CausalGraph g = scm.graph();
  auto coef = scm.coefficients();
  auto clamped = scm.clamped();
  for (const auto& [id, value] : assignments) {
    g.index_of(id);
    if (!seen.insert(id).second || clamped.count(id))
      throw input("node '" + id + "' assigned twice");
    if (!std::isfinite(value)) throw input("intervention value must be finite");
    for (const auto& p : g.parents(id)) coef.erase({p, id});
    g = g.without_incoming(id);
    clamped[id] = value;
  }
  return LinearSCM(g, coef, scm.noise_scales(), scm.levels(), scm.p_protected(), clamped);
}

std::map<std::string, double> expected_values(const LinearSCM& scm) {
  std::map<std::string, double> mean;
  const auto [a0, a1] = scm.levels();
  for (const auto& id : scm.graph().topological_order()) {
    auto cl = scm.clamped().find(id);
    if (cl != scm.clamped().end()) {
      mean[id] = cl->second;
    } else if (scm.graph().node(id).role == NodeRole::ProtectedAttribute) {
      mean[id] = (1.0 - scm.p_protected()) * a0 + scm.p_protected() * a1;
    } else {
      double v = 0.0;
      for (const auto& p : scm.graph().parents(id)) v += scm.coefficient(p, id) * mean[p];
      mean[id] = v;
    }
  }
  return mean;
}

CompositeSign CompositeSign::from_values(const std::vector<double>& components, double eps) {
  CompositeSign s;
  for (double v : components) {
    if (v <= -eps) ++s.neg_;
    else if (v >= eps) ++s.pos_;
  }
  return s;
}

CompositeSign CompositeSign::parse(const std::string& text) {
  CompositeSign s;
  if (text == "0") return s;
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] == '-') {
      ++s.neg_;
      ++i;
    } else if (text[i] == '+') {
      ++s.pos_;
      ++i;
    } else if (text.compare(i, 3, "\xE2\x88\x92") == 0) {
      ++s.neg_;
      i += 3;
    } else if (text[i] == ' ') {
      ++i;
    } else {
      throw input("unreadable sign '" + text + "'");
    }
  }
  if (s.zero()) throw input("unreadable sign '" + text + "'");
  return s;
}

std::string CompositeSign::render() const {
  if (zero()) return "0";
  return std::string(neg_, '-') + std::string(pos_, '+');
}

EffectDecomposition effect_decomposition(const LinearSCM& scm, const std::string& cause,
                                         const std::string& effect) {
  const auto& g = scm.graph();
  if (!g.acyclic()) throw Error(ErrorCode::Unsupported, "effects need an acyclic graph");
  g.index_of(cause);
  g.index_of(effect);
  if (g.node(cause).role != NodeRole::ProtectedAttribute)
    throw input("cause must be the protected attribute");
  if (cause == effect) throw input("cause and effect must differ");

  const auto [a0, a1] = scm.levels();
  const double da = a1 - a0;
  EffectDecomposition out;

  for (const auto& p : enumerate_paths(g, cause, effect, PathScope::Directed)) {
    double prod = 1.0;
    for (std::size_t i = 0; i + 1 < p.nodes.size(); ++i)
      prod *= scm.coefficient(p.nodes[i], p.nodes[i + 1]);
    if (p.nodes.size() == 2) out.de = prod * da;
    else out.ie += prod * da;
  }
  auto hi = expected_values(intervene(scm, {{cause, a1}}));
  auto lo = expected_values(intervene(scm, {{cause, a0}}));
  out.te = hi[effect] - lo[effect];

  out.de_sign = CompositeSign::from_value(out.de);
  out.ie_sign = CompositeSign::from_value(out.ie);
  out.te_sign = CompositeSign::from_value(out.te);
  return out;
}

namespace {

std::vector<double> standardize(const std::vector<double>& v, const std::string& name) {
  const double n = static_cast<double>(v.size());
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  double sd = std::sqrt(ss / n);
  if (!(sd > 1e-12 * (1.0 + std::abs(mean))))
    throw Error(ErrorCode::Degenerate, "column '" + name + "' has zero variance");
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = (v[i] - mean) / sd;
  return out;
}

}  // namespace

CiResult ci_test(const Dataset& data, const std::string& x, const std::string& y,
                 const std::vector<std::string>& given, double tau) {
  const auto& xs = data.column(x);
  const auto& ys = data.column(y);
  for (const auto& z : given) data.column(z);
  if (x == y) throw input("ci_test needs two distinct columns");
  std::set<std::string> uniq(given.begin(), given.end());
  if (uniq.size() != given.size() || uniq.count(x) || uniq.count(y))
    throw input("conditioning set overlaps the tested columns");
  const std::size_t n = data.rows();
  if (n < given.size() + 2)
    throw Error(ErrorCode::InsufficientData, "ci_test needs at least |given| + 2 rows");

  const std::size_t k = 1 + given.size();
  Eigen::MatrixXd design(n, k);
  auto zx = standardize(xs, x);
  for (std::size_t r = 0; r < n; ++r) design(r, 0) = zx[r];
  for (std::size_t j = 0; j < given.size(); ++j) {
    auto zz = standardize(data.column(given[j]), given[j]);
    for (std::size_t r = 0; r < n; ++r) design(r, j + 1) = zz[r];
  }
  auto zy = standardize(ys, y);
  Eigen::Map<const Eigen::VectorXd> target(zy.data(), static_cast<Eigen::Index>(n));

  Eigen::MatrixXd gram = design.transpose() * design;
  Eigen::VectorXd rhs = design.transpose() * target;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
  const auto& piv = ldlt.vectorD();
  if (ldlt.info() != Eigen::Success || ldlt.rcond() < 1e-12 ||
      piv.cwiseAbs().minCoeff() <= 1e-10 * piv.cwiseAbs().maxCoeff())
    throw Error(ErrorCode::Degenerate, "regressors are collinear");
  Eigen::VectorXd beta = ldlt.solve(rhs);
  CiResult r;
  r.statistic = beta(0);
  r.independent = std::abs(r.statistic) < tau;
  return r;
}

double correlation(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) throw input("correlation needs paired samples");
  auto za = standardize(a, "a");
  auto zb = standardize(b, "b");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += za[i] * zb[i];
  return s / static_cast<double>(a.size());
}

std::string scm_to_json(const LinearSCM& scm) {
  nlohmann::ordered_json j;
  j["graph"] = nlohmann::ordered_json::parse(graph_to_json(scm.graph()));
  j["coefficients"] = nlohmann::ordered_json::array();
  for (const auto& e : scm.graph().edges())
    j["coefficients"].push_back(
        {{"from", e.from}, {"to", e.to}, {"value", scm.coefficient(e.from, e.to)}});
  j["noise"] = nlohmann::ordered_json::object();
  for (const auto& [id, s] : scm.noise_scales()) j["noise"][id] = s;
  j["levels"] = {scm.levels().first, scm.levels().second};
  j["p_protected"] = scm.p_protected();
  j["clamped"] = nlohmann::ordered_json::object();
  for (const auto& [id, v] : scm.clamped()) j["clamped"][id] = v;
  return j.dump(2);
}

LinearSCM scm_from_json(const std::string& text) {
  try {
    auto j = nlohmann::json::parse(text);
    auto g = graph_from_json(j.at("graph").dump());
    std::map<EdgeKey, double> coef;
    for (const auto& c : j.at("coefficients"))
      coef[{c.at("from").get<std::string>(), c.at("to").get<std::string>()}] =
          c.at("value").get<double>();
    std::map<std::string, double> noise, clamped;
    const auto jn = j.value("noise", nlohmann::json::object());
    const auto jc = j.value("clamped", nlohmann::json::object());
    for (const auto& [k, v] : jn.items()) noise[k] = v.get<double>();
    for (const auto& [k, v] : jc.items()) clamped[k] = v.get<double>();
    auto lv = j.value("levels", std::vector<double>{0.0, 1.0});
    if (lv.size() != 2) throw input("levels must hold two values");
    return LinearSCM(g, coef, noise, {lv[0], lv[1]}, j.value("p_protected", 0.5), clamped);
  } catch (const nlohmann::json::exception& ex) {
    throw input(std::string("scm json: ") + ex.what());
  }
}

}  // namespace fairlab
