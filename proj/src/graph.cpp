#include "fairlab/graph.hpp"

#include <algorithm>
#include <array>
#include <deque>
#include <functional>
#include <map>

#include <json.hpp>

#include "fairlab/error.hpp"

namespace fairlab {

namespace {

struct RoleName {
  NodeRole role;
  const char* name;
};
constexpr RoleName kRoles[] = {
    {NodeRole::ProtectedAttribute, "protected-attribute"},
    {NodeRole::Mediator, "mediator"},
    {NodeRole::Data, "data"},
    {NodeRole::Decision, "decision"},
    {NodeRole::Outcome, "outcome"},
    {NodeRole::Auxiliary, "auxiliary"},
};

Error input(const std::string& m) { return Error(ErrorCode::Input, m); }

}  // namespace

std::string role_name(NodeRole r) {
  for (const auto& x : kRoles)
    if (x.role == r) return x.name;
  return "";
}

NodeRole parse_role(const std::string& s) {
  for (const auto& x : kRoles)
    if (s == x.name) return x.role;
  throw input("unknown node role '" + s + "'");
}

std::string polarity_name(Polarity p) { return p == Polarity::Positive ? "+" : "-"; }

Polarity parse_polarity(const std::string& s) {
  if (s == "+") return Polarity::Positive;
  if (s == "-") return Polarity::Negative;
  throw input("unknown polarity '" + s + "'");
}

std::string bias_name(BiasColor b) {
  switch (b) {
    case BiasColor::Neutral: return "neutral";
    case BiasColor::NegativeBias: return "negative";
    case BiasColor::PositiveBias: return "positive";
  }
  return "";
}

BiasColor parse_bias(const std::string& s) {
  if (s == "neutral") return BiasColor::Neutral;
  if (s == "negative") return BiasColor::NegativeBias;
  if (s == "positive") return BiasColor::PositiveBias;
  throw input("unknown bias color '" + s + "'");
}

std::string loop_polarity_name(LoopPolarity p) {
  return p == LoopPolarity::Reinforcing ? "reinforcing" : "balancing";
}

std::string Path::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (i) out += kind == PathKind::Directed ? "->" : "-";
    out += nodes[i];
  }
  return out;
}

CausalGraph::CausalGraph(std::vector<Node> nodes, std::vector<Edge> edges, bool acyclic)
    : nodes_(std::move(nodes)), edges_(std::move(edges)), acyclic_(acyclic) {
  std::set<std::string> ids;
  for (const auto& n : nodes_) {
    if (n.id.empty()) throw input("empty node identifier");
    if (!ids.insert(n.id).second) throw input("duplicate node '" + n.id + "'");
  }
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& e : edges_) {
    if (!ids.count(e.from)) throw input("edge from unknown node '" + e.from + "'");
    if (!ids.count(e.to)) throw input("edge to unknown node '" + e.to + "'");
    if (e.from == e.to) throw input("self-edge on '" + e.from + "'");
    if (!seen.insert({e.from, e.to}).second)
      throw input("duplicate edge " + e.from + "->" + e.to);
  }
  if (acyclic_) topological_order();
}

bool CausalGraph::has_node(const std::string& id) const {
  return std::any_of(nodes_.begin(), nodes_.end(), [&](const Node& n) { return n.id == id; });
}

std::size_t CausalGraph::index_of(const std::string& id) const {
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    if (nodes_[i].id == id) return i;
  throw input("unknown node '" + id + "'");
}

const Node& CausalGraph::node(const std::string& id) const { return nodes_[index_of(id)]; }

const Edge* CausalGraph::find_edge(const std::string& from, const std::string& to) const {
  for (const auto& e : edges_)
    if (e.from == from && e.to == to) return &e;
  return nullptr;
}

std::vector<std::string> CausalGraph::parents(const std::string& id) const {
  index_of(id);
  std::vector<std::string> out;
  for (const auto& e : edges_)
    if (e.to == id) out.push_back(e.from);
  return out;
}

std::vector<std::string> CausalGraph::children(const std::string& id) const {
  index_of(id);
  std::vector<std::string> out;
  for (const auto& e : edges_)
    if (e.from == id) out.push_back(e.to);
  return out;
}

std::vector<std::string> CausalGraph::topological_order() const {
  // Kahn's algorithm, ties resolved by declaration order
  std::vector<int> indeg(nodes_.size(), 0);
  for (const auto& e : edges_) ++indeg[index_of(e.to)];
  std::vector<std::string> order;
  std::vector<bool> done(nodes_.size(), false);
  while (order.size() < nodes_.size()) {
    bool progressed = false;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      if (done[i] || indeg[i] != 0) continue;
      done[i] = true;
      order.push_back(nodes_[i].id);
      for (const auto& e : edges_)
        if (e.from == nodes_[i].id) --indeg[index_of(e.to)];
      progressed = true;
      break;
    }
    if (!progressed) throw Error(ErrorCode::Unsupported, "graph contains a cycle");
  }
  return order;
}

std::optional<std::string> CausalGraph::node_with_role(NodeRole role) const {
  for (const auto& n : nodes_)
    if (n.role == role) return n.id;
  return std::nullopt;
}

CausalGraph CausalGraph::without_incoming(const std::string& id) const {
  index_of(id);
  std::vector<Edge> kept;
  for (const auto& e : edges_)
    if (e.to != id) kept.push_back(e);
  return CausalGraph(nodes_, kept, acyclic_);
}

CausalGraph CausalGraph::without_edge(const std::string& from, const std::string& to) const {
  std::vector<Edge> kept;
  for (const auto& e : edges_)
    if (!(e.from == from && e.to == to)) kept.push_back(e);
  return CausalGraph(nodes_, kept, acyclic_);
}

CausalGraph CausalGraph::with_edge(const Edge& e) const {
  auto edges = edges_;
  edges.push_back(e);
  return CausalGraph(nodes_, edges, acyclic_);
}

namespace {

std::vector<Node> standard_nodes() {
  return {{"A", NodeRole::ProtectedAttribute, false},
          {"W", NodeRole::Mediator, true},
          {"X", NodeRole::Data, false},
          {"D", NodeRole::Decision, false},
          {"Y", NodeRole::Outcome, false}};
}

}  // namespace

CausalGraph full_fairness_graph() {
  return CausalGraph(standard_nodes(), {{"A", "W"}, {"W", "X"}, {"X", "D"}, {"D", "Y"},
                                        {"W", "Y"}, {"A", "D"}});
}

CausalGraph standard_fairness_graph(PolicyRegime policy) {
  std::vector<Edge> e = {{"A", "W"}, {"W", "X"}, {"X", "D"}, {"D", "Y"}, {"W", "Y"}};
  switch (policy) {
    case PolicyRegime::Unawareness:
      break;
    case PolicyRegime::Lottery:
      e.erase(e.begin() + 2);
      break;
    case PolicyRegime::AffirmativeAction:
      e.push_back({"A", "D", Polarity::Positive, BiasColor::PositiveBias});
      break;
    case PolicyRegime::Supremacism:
      e.push_back({"A", "D", Polarity::Negative, BiasColor::NegativeBias});
      break;
  }
  return CausalGraph(standard_nodes(), e);
}

bool d_separated(const CausalGraph& g, const std::set<std::string>& src,
                 const std::set<std::string>& dst, const std::set<std::string>& cond) {
  if (!g.acyclic()) throw Error(ErrorCode::Unsupported, "d-separation needs an acyclic graph");
  for (const auto* s : {&src, &dst, &cond})
    for (const auto& id : *s) g.index_of(id);
  for (const auto& id : src)
    if (dst.count(id) || cond.count(id)) throw input("node sets overlap at '" + id + "'");
  for (const auto& id : dst)
    if (cond.count(id)) throw input("node sets overlap at '" + id + "'");

  const std::size_t n = g.size();
  std::vector<std::vector<std::size_t>> pa(n), ch(n);
  for (const auto& e : g.edges()) {
    pa[g.index_of(e.to)].push_back(g.index_of(e.from));
    ch[g.index_of(e.from)].push_back(g.index_of(e.to));
  }
  std::vector<bool> in_cond(n, false), anc(n, false);
  std::deque<std::size_t> q;
  for (const auto& id : cond) {
    in_cond[g.index_of(id)] = true;
    q.push_back(g.index_of(id));
  }
  // ancestors of the conditioning set (inclusive)
  while (!q.empty()) {
    auto v = q.front();
    q.pop_front();
    if (anc[v]) continue;
    anc[v] = true;
    for (auto p : pa[v]) q.push_back(p);
  }

  // reachable trail search; dir 0 = arrived from a child (moving up), 1 = from a parent
  std::vector<std::array<bool, 2>> visited(n, {false, false});
  std::deque<std::pair<std::size_t, int>> work;
  for (const auto& id : src) work.push_back({g.index_of(id), 0});
  std::vector<bool> target(n, false);
  for (const auto& id : dst) target[g.index_of(id)] = true;
  while (!work.empty()) {
    auto [v, dir] = work.front();
    work.pop_front();
    if (visited[v][dir]) continue;
    visited[v][dir] = true;
    if (!in_cond[v] && target[v]) return false;
    if (dir == 0 && !in_cond[v]) {
      for (auto p : pa[v]) work.push_back({p, 0});
      for (auto c : ch[v]) work.push_back({c, 1});
    } else if (dir == 1) {
      if (!in_cond[v])
        for (auto c : ch[v]) work.push_back({c, 1});
      if (anc[v])
        for (auto p : pa[v]) work.push_back({p, 0});
    }
  }
  return true;
}

std::vector<Path> enumerate_paths(const CausalGraph& g, const std::string& from,
                                  const std::string& to, PathScope scope,
                                  std::size_t node_cap) {
  g.index_of(from);
  g.index_of(to);
  if (from == to) throw input("path endpoints must differ");
  if (g.size() > node_cap)
    throw input("path enumeration capped at " + std::to_string(node_cap) + " nodes");

  std::vector<Path> out;
  std::vector<std::string> stack = {from};
  std::set<std::string> on_path = {from};
  std::function<void(bool)> dfs = [&](bool directed) {
    const auto& cur = stack.back();
    if (cur == to) {
      if (scope == PathScope::All || directed)
        out.push_back({stack, directed ? PathKind::Directed : PathKind::NonDirected});
      return;
    }
    std::vector<std::pair<std::string, bool>> next;
    for (const auto& e : g.edges()) {
      if (e.from == cur) next.push_back({e.to, true});
      if (e.to == cur && scope == PathScope::All) next.push_back({e.from, false});
    }
    for (const auto& [nb, forward] : next) {
      if (on_path.count(nb)) continue;
      stack.push_back(nb);
      on_path.insert(nb);
      dfs(directed && forward);
      on_path.erase(nb);
      stack.pop_back();
    }
  };
  dfs(true);
  std::sort(out.begin(), out.end(),
            [](const Path& a, const Path& b) { return a.nodes < b.nodes; });
  return out;
}

bool is_blocked(const CausalGraph& g, const Path& p, const std::set<std::string>& cond) {
  for (std::size_t i = 1; i + 1 < p.nodes.size(); ++i) {
    const auto& prev = p.nodes[i - 1];
    const auto& v = p.nodes[i];
    const auto& next = p.nodes[i + 1];
    bool collider = g.has_edge(prev, v) && g.has_edge(next, v);
    if (collider) {
      std::set<std::string> desc;
      std::deque<std::string> q = {v};
      while (!q.empty()) {
        auto u = q.front();
        q.pop_front();
        if (!desc.insert(u).second) continue;
        for (const auto& c : g.children(u)) q.push_back(c);
      }
      bool opened = std::any_of(desc.begin(), desc.end(),
                                [&](const std::string& d) { return cond.count(d) > 0; });
      if (!opened) return true;
    } else if (cond.count(v)) {
      return true;
    }
  }
  return false;
}

LoopPolarity loop_polarity(const CausalGraph& g, const std::vector<std::string>& cycle) {
  if (cycle.size() < 2) throw input("a cycle needs at least two nodes");
  std::set<std::string> distinct(cycle.begin(), cycle.end());
  if (distinct.size() != cycle.size()) throw input("cycle repeats a node");
  int negatives = 0;
  for (std::size_t i = 0; i < cycle.size(); ++i) {
    const auto& a = cycle[i];
    const auto& b = cycle[(i + 1) % cycle.size()];
    const Edge* e = g.find_edge(a, b);
    if (!e) throw input("not a cycle: missing edge " + a + "->" + b);
    if (e->polarity == Polarity::Negative) ++negatives;
  }
  return negatives % 2 == 0 ? LoopPolarity::Reinforcing : LoopPolarity::Balancing;
}

std::string graph_to_json(const CausalGraph& g) {
  nlohmann::ordered_json j;
  j["nodes"] = nlohmann::ordered_json::array();
  for (const auto& n : g.nodes())
    j["nodes"].push_back({{"id", n.id}, {"role", role_name(n.role)}, {"latent", n.latent}});
  j["edges"] = nlohmann::ordered_json::array();
  for (const auto& e : g.edges())
    j["edges"].push_back({{"from", e.from},
                          {"to", e.to},
                          {"polarity", polarity_name(e.polarity)},
                          {"bias", bias_name(e.bias)}});
  j["acyclic"] = g.acyclic();
  return j.dump(2);
}

CausalGraph graph_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& ex) {
    throw input(std::string("graph json: ") + ex.what());
  }
  try {
    std::vector<Node> nodes;
    for (const auto& n : j.at("nodes"))
      nodes.push_back({n.at("id").get<std::string>(), parse_role(n.at("role").get<std::string>()),
                       n.value("latent", false)});
    std::vector<Edge> edges;
    for (const auto& e : j.at("edges"))
      edges.push_back({e.at("from").get<std::string>(), e.at("to").get<std::string>(),
                       parse_polarity(e.value("polarity", std::string("+"))),
                       parse_bias(e.value("bias", std::string("neutral")))});
    return CausalGraph(nodes, edges, j.value("acyclic", true));
  } catch (const nlohmann::json::exception& ex) {
    throw input(std::string("graph json: ") + ex.what());
  }
}

}  // namespace fairlab
