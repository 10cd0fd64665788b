#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fairlab/policy.hpp"

namespace fairlab {

enum class NodeRole { ProtectedAttribute, Mediator, Data, Decision, Outcome, Auxiliary };
enum class Polarity { Positive, Negative };
enum class BiasColor { Neutral, NegativeBias, PositiveBias };
enum class PathKind { Directed, NonDirected };
enum class LoopPolarity { Reinforcing, Balancing };

std::string role_name(NodeRole r);
NodeRole parse_role(const std::string& s);
std::string polarity_name(Polarity p);
Polarity parse_polarity(const std::string& s);
std::string bias_name(BiasColor b);
BiasColor parse_bias(const std::string& s);
std::string loop_polarity_name(LoopPolarity p);

struct Node {
  std::string id;
  NodeRole role = NodeRole::Auxiliary;
  bool latent = false;
  bool operator==(const Node&) const = default;
};

struct Edge {
  std::string from;
  std::string to;
  Polarity polarity = Polarity::Positive;
  BiasColor bias = BiasColor::Neutral;
  bool operator==(const Edge&) const = default;
};

struct Path {
  std::vector<std::string> nodes;
  PathKind kind = PathKind::Directed;
  std::string to_string() const;
  bool operator==(const Path&) const = default;
};

inline constexpr std::size_t kDefaultPathNodeCap = 10;

class CausalGraph {
 public:
  CausalGraph() = default;
  CausalGraph(std::vector<Node> nodes, std::vector<Edge> edges, bool acyclic = true);

  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }
  bool acyclic() const { return acyclic_; }
  std::size_t size() const { return nodes_.size(); }

  bool has_node(const std::string& id) const;
  std::size_t index_of(const std::string& id) const;
  const Node& node(const std::string& id) const;
  const Edge* find_edge(const std::string& from, const std::string& to) const;
  bool has_edge(const std::string& from, const std::string& to) const {
    return find_edge(from, to) != nullptr;
  }
  std::vector<std::string> parents(const std::string& id) const;
  std::vector<std::string> children(const std::string& id) const;
  // throws Unsupported on cyclic graphs
  std::vector<std::string> topological_order() const;
  std::optional<std::string> node_with_role(NodeRole role) const;

  CausalGraph without_incoming(const std::string& id) const;
  CausalGraph without_edge(const std::string& from, const std::string& to) const;
  CausalGraph with_edge(const Edge& e) const;

  bool operator==(const CausalGraph&) const = default;

 private:
  std::vector<Node> nodes_;
  std::vector<Edge> edges_;
  bool acyclic_ = true;
};

CausalGraph standard_fairness_graph(PolicyRegime policy);
// the five-node graph with a neutral A->D edge
CausalGraph full_fairness_graph();

bool d_separated(const CausalGraph& g, const std::set<std::string>& src,
                 const std::set<std::string>& dst, const std::set<std::string>& cond);

enum class PathScope { Directed, All };

std::vector<Path> enumerate_paths(const CausalGraph& g, const std::string& from,
                                  const std::string& to, PathScope scope = PathScope::Directed,
                                  std::size_t node_cap = kDefaultPathNodeCap);

bool is_blocked(const CausalGraph& g, const Path& p, const std::set<std::string>& cond);

LoopPolarity loop_polarity(const CausalGraph& g, const std::vector<std::string>& cycle);

std::string graph_to_json(const CausalGraph& g);
CausalGraph graph_from_json(const std::string& text);

}  // namespace fairlab
