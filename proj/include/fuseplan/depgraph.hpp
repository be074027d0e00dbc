// fuseplan/depgraph.hpp — dependence graph: nodes, edges, orders, fusibility.
#pragma once

#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fuseplan/ir.hpp"

namespace fuseplan {

using NodeId = int;

// How a consumer traverses one of its inputs, relative to its own output
// traversal. GatherLabel marks a gather's randomly-accessed source: fusing it
// means running the producer as a dedicated in-cluster pre-pass with its own
// order label (2 upward). ScatterSrc is resolved by the consuming scatter's
// own free traversal direction. Unordered edges carry no order constraint
// (and are never fusible).
enum class InOrder {
  SameAsOutput,
  Const0,
  Const1,
  GatherLabel,
  ScatterSrc,
  Unordered
};

enum class EdgeRole {
  Combinator,    // ordinary elementwise argument (map/fold/scan/gather idx)
  GatherSource,  // gather's source array
  ScatterDest,   // scatter's destination buffer
  ScatterSrc,    // scatter's (index, value) source
  Index,         // free array access `a ! e` inside a lambda or shape
  Opaque         // argument of an opaque binding
};

inline const char* edge_role_name(EdgeRole r) {
  switch (r) {
    case EdgeRole::Combinator: return "arg";
    case EdgeRole::GatherSource: return "gather_source";
    case EdgeRole::ScatterDest: return "scatter_dest";
    case EdgeRole::ScatterSrc: return "scatter_src";
    case EdgeRole::Index: return "index";
    case EdgeRole::Opaque: return "opaque";
  }
  return "?";
}

struct DepNode {
  std::string name;
  bool is_param = false;
  int binding_index = -1;  // into Program::bindings; -1 for parameters
  CombKind comb = CombKind::Map;  // meaningful when !is_param
  bool rigid = false;         // parameter, scatter, opaque, or force target
  bool force_target = false;  // some force(...) names this array
  bool is_output = false;     // reachable from the return list
};

struct DepEdge {
  NodeId producer = -1;
  NodeId consumer = -1;
  int port = 0;  // distinct per use within the consumer
  EdgeRole role = EdgeRole::Combinator;
  InOrder in_order = InOrder::Unordered;
  int gather_label = 0;  // when in_order == GatherLabel
  bool fusible = false;
};

// The dependence graph of a validated program. Node order is program order
// (parameters first), which is also a topological order. force bindings add
// no node: their name aliases the forced array, which becomes rigid.
struct DepGraph {
  Program program;
  std::vector<DepNode> nodes;
  std::vector<DepEdge> edges;
  std::map<std::string, NodeId> node_of;  // includes force aliases
  std::vector<NodeId> outputs;            // distinct return nodes, in order
  int num_gathers = 0;                    // order labels run 2..num_gathers+1
  std::vector<std::vector<int>> out_edges;  // edge indices per producer
  std::vector<std::vector<int>> in_edges;   // edge indices per consumer

  NodeId id_of(const std::string& name) const {
    auto it = node_of.find(name);
    if (it == node_of.end())
      throw std::invalid_argument("no node for array '" + name + "'");
    return it->second;
  }
  const DepNode& node(const std::string& name) const {
    return nodes[id_of(name)];
  }
  int fusible_out_degree(NodeId a) const {
    int n = 0;
    for (int e : out_edges[a])
      if (edges[e].fusible) ++n;
    return n;
  }
};

// Build the dependence graph. The program must be validate()-clean; broken
// references throw std::invalid_argument.
inline DepGraph build_graph(const Program& p) {
  DepGraph g;
  g.program = p;

  // Pass 1: force aliases and force targets. Aliases can chain.
  std::map<std::string, std::string> alias;
  auto resolve = [&](std::string n) {
    while (alias.count(n)) n = alias.at(n);
    return n;
  };
  std::set<std::string> force_targets;
  for (const auto& b : p.bindings) {
    if (b.kind != CombKind::Force) continue;
    if (b.args.empty()) throw std::invalid_argument("force without argument");
    std::string target = resolve(b.args[0]);
    alias[b.name] = target;
    force_targets.insert(target);
  }

  // Pass 2: nodes for parameters and non-force bindings.
  for (const auto& prm : p.params) {
    DepNode n;
    n.name = prm.name;
    n.is_param = true;
    n.rigid = true;
    n.force_target = force_targets.count(prm.name) > 0;
    g.node_of[prm.name] = static_cast<NodeId>(g.nodes.size());
    g.nodes.push_back(n);
  }
  for (size_t i = 0; i < p.bindings.size(); ++i) {
    const Binding& b = p.bindings[i];
    if (b.kind == CombKind::Force) continue;
    DepNode n;
    n.name = b.name;
    n.binding_index = static_cast<int>(i);
    n.comb = b.kind;
    n.force_target = force_targets.count(b.name) > 0;
    n.rigid = n.force_target || b.kind == CombKind::Scatter ||
              b.kind == CombKind::Opaque;
    g.node_of[b.name] = static_cast<NodeId>(g.nodes.size());
    g.nodes.push_back(n);
  }
  for (const auto& [from, to] : alias) g.node_of[from] = g.node_of.at(resolve(from));

  auto producer_of = [&](const std::string& name) -> NodeId {
    auto it = g.node_of.find(resolve(name));
    if (it == g.node_of.end())
      throw std::invalid_argument("unknown array '" + name + "'");
    return it->second;
  };

  // Pass 3: edges, in program order per consumer: combinator arguments by
  // position, then free indexed arrays in name order. size() adds no edge.
  int gather_ordinal = 0;
  for (const auto& b : p.bindings) {
    if (b.kind == CombKind::Force) continue;
    NodeId consumer = g.node_of.at(b.name);
    auto add_edge = [&](NodeId prod, int port, EdgeRole role, InOrder ord,
                        int label) {
      DepEdge e;
      e.producer = prod;
      e.consumer = consumer;
      e.port = port;
      e.role = role;
      e.in_order = ord;
      e.gather_label = label;
      bool structurally_fusible = role == EdgeRole::Combinator ||
                                  role == EdgeRole::GatherSource ||
                                  role == EdgeRole::ScatterSrc;
      e.fusible = structurally_fusible && !g.nodes[prod].rigid;
      g.edges.push_back(e);
    };

    int label = 0;
    if (b.kind == CombKind::Gather) label = 2 + gather_ordinal++;

    for (size_t a = 0; a < b.args.size(); ++a) {
      NodeId prod = producer_of(b.args[a]);
      int port = static_cast<int>(a);
      switch (b.kind) {
        case CombKind::Map:
          add_edge(prod, port, EdgeRole::Combinator, InOrder::SameAsOutput, 0);
          break;
        case CombKind::Gather:
          if (a == 0)
            add_edge(prod, port, EdgeRole::Combinator, InOrder::SameAsOutput,
                     0);
          else
            add_edge(prod, port, EdgeRole::GatherSource, InOrder::GatherLabel,
                     label);
          break;
        case CombKind::Scatter:
          if (a == 0)
            add_edge(prod, port, EdgeRole::ScatterDest, InOrder::Unordered, 0);
          else
            add_edge(prod, port, EdgeRole::ScatterSrc, InOrder::ScatterSrc, 0);
          break;
        case CombKind::Fold:
          add_edge(prod, port, EdgeRole::Combinator, InOrder::SameAsOutput, 0);
          break;
        case CombKind::Scanl:
          add_edge(prod, port, EdgeRole::Combinator, InOrder::Const0, 0);
          break;
        case CombKind::Scanr:
          add_edge(prod, port, EdgeRole::Combinator, InOrder::Const1, 0);
          break;
        case CombKind::Opaque:
          add_edge(prod, port, EdgeRole::Opaque, InOrder::Unordered, 0);
          break;
        case CombKind::Generate:
        case CombKind::Force:
          break;  // generate has no array arguments; force adds nothing
      }
    }

    // Free arrays indexed inside the lambda or the shape expression. One
    // edge per distinct array, even when indexed several times.
    FreeArrays fa = free_arrays(b.fn);
    if (b.shape) {
      FreeArrays fs = free_arrays_of_expr(b.shape);
      fa.indexed.insert(fs.indexed.begin(), fs.indexed.end());
    }
    std::set<NodeId> seen;
    int port = static_cast<int>(b.args.size());
    for (const auto& name : fa.indexed) {
      NodeId prod = producer_of(name);
      if (!seen.insert(prod).second) continue;
      add_edge(prod, port++, EdgeRole::Index, InOrder::Unordered, 0);
    }
  }
  g.num_gathers = gather_ordinal;

  // Pass 4: outputs (through aliases), adjacency.
  std::set<NodeId> seen_out;
  for (const auto& r : p.returns) {
    NodeId n = producer_of(r);
    g.nodes[n].is_output = true;
    if (seen_out.insert(n).second) g.outputs.push_back(n);
  }
  g.out_edges.assign(g.nodes.size(), {});
  g.in_edges.assign(g.nodes.size(), {});
  for (size_t i = 0; i < g.edges.size(); ++i) {
    g.out_edges[g.edges[i].producer].push_back(static_cast<int>(i));
    g.in_edges[g.edges[i].consumer].push_back(static_cast<int>(i));
  }
  return g;
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

inline std::string edge_order_string(const DepEdge& e) {
  switch (e.in_order) {
    case InOrder::SameAsOutput: return "out";
    case InOrder::Const0: return "0";
    case InOrder::Const1: return "1";
    case InOrder::GatherLabel:
      return "g" + std::to_string(e.gather_label);
    case InOrder::ScatterSrc: return "s";
    case InOrder::Unordered: return "-";
  }
  return "?";
}

inline std::string to_dot(const DepGraph& g) {
  std::ostringstream os;
  os << "digraph deps {\n";
  os << "  node [fontname=\"monospace\"];\n";
  for (size_t i = 0; i < g.nodes.size(); ++i) {
    const DepNode& n = g.nodes[i];
    os << "  n" << i << " [label=\"" << n.name;
    if (n.is_param)
      os << " : param";
    else
      os << " = " << comb_name(n.comb);
    if (n.force_target) os << " (forced)";
    os << "\", shape=" << (n.is_param ? "box" : "ellipse");
    if (n.is_output) os << ", peripheries=2";
    if (n.rigid) os << ", style=bold";
    os << "];\n";
  }
  for (const auto& e : g.edges) {
    os << "  n" << e.producer << " -> n" << e.consumer << " [label=\"p"
       << e.port << "@" << edge_order_string(e) << "\"";
    if (!e.fusible) os << ", style=dashed";
    os << "];\n";
  }
  os << "}\n";
  return os.str();
}

inline nlohmann::json edge_to_json(const DepGraph& g, const DepEdge& e) {
  nlohmann::json j;
  j["producer"] = g.nodes[e.producer].name;
  j["consumer"] = g.nodes[e.consumer].name;
  j["port"] = e.port;
  j["role"] = edge_role_name(e.role);
  j["fusible"] = e.fusible;
  switch (e.in_order) {
    case InOrder::SameAsOutput: j["in_order"] = "same_as_output"; break;
    case InOrder::Const0: j["in_order"] = "const0"; break;
    case InOrder::Const1: j["in_order"] = "const1"; break;
    case InOrder::GatherLabel:
      j["in_order"] = "gather_label";
      j["label"] = e.gather_label;
      break;
    case InOrder::ScatterSrc: j["in_order"] = "scatter_src"; break;
    case InOrder::Unordered: j["in_order"] = "unordered"; break;
  }
  return j;
}

inline nlohmann::json graph_to_json(const DepGraph& g) {
  nlohmann::json j;
  j["nodes"] = nlohmann::json::array();
  for (const auto& n : g.nodes) {
    nlohmann::json nj;
    nj["name"] = n.name;
    nj["kind"] = n.is_param ? "param" : comb_name(n.comb);
    nj["rigid"] = n.rigid;
    nj["output"] = n.is_output;
    j["nodes"].push_back(nj);
  }
  j["edges"] = nlohmann::json::array();
  for (const auto& e : g.edges) j["edges"].push_back(edge_to_json(g, e));
  j["gathers"] = g.num_gathers;
  return j;
}

}  // namespace fuseplan
