// fuseplan/clustering.hpp — clustering result type and its JSON round-trip.
#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace fuseplan {

// One execution cluster: member arrays (non-parameter bindings) and each
// member's loop order (0 ascending, 1 descending, 2+ gather pre-pass labels).
struct Cluster {
  std::vector<std::string> nodes;
  std::map<std::string, int> orders;
};

struct FusedEdge {
  std::string producer;
  std::string consumer;
  int port = 0;

  friend bool operator==(const FusedEdge& a, const FusedEdge& b) {
    return a.producer == b.producer && a.consumer == b.consumer &&
           a.port == b.port;
  }
  friend bool operator<(const FusedEdge& a, const FusedEdge& b) {
    if (a.producer != b.producer) return a.producer < b.producer;
    if (a.consumer != b.consumer) return a.consumer < b.consumer;
    return a.port < b.port;
  }
};

// A complete fusion decision for a program: ordered clusters, the fused
// dependence edges, which arrays stay manifest (materialized in memory), and
// each scatter's chosen source-read direction.
struct Clustering {
  std::string cost_kind;
  int64_t objective = 0;
  std::vector<Cluster> clusters;          // execution order
  std::vector<FusedEdge> fused_edges;
  std::vector<std::string> manifest;      // non-parameter arrays with m = 0
  std::map<std::string, int> scatter_src_orders;

  // Cluster index per member name; -1 when absent.
  int cluster_of(const std::string& name) const {
    for (size_t c = 0; c < clusters.size(); ++c)
      for (const auto& n : clusters[c].nodes)
        if (n == name) return static_cast<int>(c);
    return -1;
  }
  bool is_fused(const std::string& producer, const std::string& consumer,
                int port) const {
    for (const auto& f : fused_edges)
      if (f.producer == producer && f.consumer == consumer && f.port == port)
        return true;
    return false;
  }
  bool is_manifest(const std::string& name) const {
    for (const auto& m : manifest)
      if (m == name) return true;
    return false;
  }
  // Order of a member array; -1 when the clustering does not record it.
  int order_of(const std::string& name) const {
    for (const auto& c : clusters) {
      auto it = c.orders.find(name);
      if (it != c.orders.end()) return it->second;
    }
    return -1;
  }
  // Cluster member lists in execution order, for the scheduled interpreter.
  std::vector<std::vector<std::string>> schedule() const {
    std::vector<std::vector<std::string>> s;
    s.reserve(clusters.size());
    for (const auto& c : clusters) s.push_back(c.nodes);
    return s;
  }
};

inline nlohmann::json clustering_to_json(const Clustering& c) {
  nlohmann::json j;
  j["cost_kind"] = c.cost_kind;
  j["objective"] = c.objective;
  j["clusters"] = nlohmann::json::array();
  for (const auto& cl : c.clusters) {
    nlohmann::json cj;
    cj["nodes"] = cl.nodes;
    cj["orders"] = nlohmann::json::object();
    for (const auto& [n, o] : cl.orders) cj["orders"][n] = o;
    j["clusters"].push_back(std::move(cj));
  }
  j["fused_edges"] = nlohmann::json::array();
  for (const auto& f : c.fused_edges)
    j["fused_edges"].push_back(
        nlohmann::json::array({f.producer, f.consumer, f.port}));
  j["manifest"] = c.manifest;
  j["scatter_src_orders"] = nlohmann::json::object();
  for (const auto& [n, o] : c.scatter_src_orders)
    j["scatter_src_orders"][n] = o;
  return j;
}

inline Clustering clustering_from_json(const nlohmann::json& j) {
  auto bad = [](const std::string& msg) {
    return std::runtime_error("clustering JSON: " + msg);
  };
  if (!j.is_object()) throw bad("not an object");
  Clustering c;
  if (!j.contains("clusters") || !j.at("clusters").is_array())
    throw bad("missing \"clusters\" array");
  c.cost_kind = j.value("cost_kind", std::string{});
  c.objective = j.value("objective", int64_t{0});
  for (const auto& cj : j.at("clusters")) {
    if (!cj.is_object() || !cj.contains("nodes"))
      throw bad("cluster entry needs a \"nodes\" list");
    Cluster cl;
    for (const auto& n : cj.at("nodes")) {
      if (!n.is_string()) throw bad("cluster node is not a string");
      cl.nodes.push_back(n.get<std::string>());
    }
    if (cj.contains("orders")) {
      if (!cj.at("orders").is_object()) throw bad("\"orders\" is not a map");
      for (auto it = cj.at("orders").begin(); it != cj.at("orders").end(); ++it)
        cl.orders[it.key()] = it.value().get<int>();
    }
    c.clusters.push_back(std::move(cl));
  }
  if (j.contains("fused_edges")) {
    for (const auto& fj : j.at("fused_edges")) {
      if (!fj.is_array() || fj.size() != 3)
        throw bad("fused edge entries are [producer, consumer, port]");
      FusedEdge f;
      f.producer = fj[0].get<std::string>();
      f.consumer = fj[1].get<std::string>();
      f.port = fj[2].get<int>();
      c.fused_edges.push_back(std::move(f));
    }
  }
  if (j.contains("manifest"))
    for (const auto& n : j.at("manifest"))
      c.manifest.push_back(n.get<std::string>());
  if (j.contains("scatter_src_orders")) {
    if (!j.at("scatter_src_orders").is_object())
      throw bad("\"scatter_src_orders\" is not a map");
    for (auto it = j.at("scatter_src_orders").begin();
         it != j.at("scatter_src_orders").end(); ++it)
      c.scatter_src_orders[it.key()] = it.value().get<int>();
  }
  return c;
}

}  // namespace fuseplan
