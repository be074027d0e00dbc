// fuseplan/fusion.hpp — fusion ILP encoding, clustering extraction, splitting,
// checking, signatures, and clustering cost evaluation.
#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "fuseplan/bb_solver.hpp"
#include "fuseplan/clustering.hpp"
#include "fuseplan/depgraph.hpp"
#include "fuseplan/ilp.hpp"

namespace fuseplan {

// ---------------------------------------------------------------------------
// Cost kinds
// ---------------------------------------------------------------------------

enum class CostKind { Clusters, FusedEdges, Manifest, Reads, ReadsWrites };

inline const char* cost_kind_name(CostKind k) {
  switch (k) {
    case CostKind::Clusters: return "clusters";
    case CostKind::FusedEdges: return "fused-edges";
    case CostKind::Manifest: return "manifest";
    case CostKind::Reads: return "reads";
    case CostKind::ReadsWrites: return "reads-writes";
  }
  return "?";
}

inline CostKind cost_kind_from_string(const std::string& s) {
  if (s == "clusters") return CostKind::Clusters;
  if (s == "fused-edges") return CostKind::FusedEdges;
  if (s == "manifest") return CostKind::Manifest;
  if (s == "reads") return CostKind::Reads;
  if (s == "reads-writes") return CostKind::ReadsWrites;
  throw std::invalid_argument(
      "unknown cost kind '" + s +
      "' (expected clusters, fused-edges, manifest, reads, reads-writes)");
}

inline const std::vector<CostKind>& all_cost_kinds() {
  static const std::vector<CostKind> ks = {
      CostKind::Clusters, CostKind::FusedEdges, CostKind::Manifest,
      CostKind::Reads, CostKind::ReadsWrites};
  return ks;
}

// ---------------------------------------------------------------------------
// Variable names (shared between model construction and extraction)
// ---------------------------------------------------------------------------

inline std::string var_x(const DepGraph& g, int e) {
  return "x" + std::to_string(e) + "_" + g.nodes[g.edges[e].producer].name +
         "_" + g.nodes[g.edges[e].consumer].name;
}
inline std::string var_pi(const std::string& n) { return "pi_" + n; }
inline std::string var_m(const std::string& n) { return "m_" + n; }
inline std::string var_d(const std::string& n) { return "d_" + n; }
inline std::string var_ssrc(const std::string& n) { return "ssrc_" + n; }
inline std::string var_r(const std::string& n, int i) {
  return "r_" + n + "_" + std::to_string(i);
}
inline std::string var_s(const std::string& n, int j, int i) {
  return "s_" + n + "_" + std::to_string(j) + "_" + std::to_string(i);
}
inline const char* var_pimax() { return "pimax"; }

// True when the node's m variable is pinned to 0: the array must stay in
// memory no matter what.
inline bool must_stay_manifest(const DepNode& n) {
  return n.is_param || n.is_output || n.force_target ||
         (!n.is_param &&
          (n.comb == CombKind::Scatter || n.comb == CombKind::Opaque));
}

// d^o is pinned for scans (traversal direction is their semantics) and for
// nodes whose loops have no traversal choice to couple (params, scatter,
// opaque).
inline std::pair<int64_t, int64_t> order_bounds(const DepNode& n,
                                                int order_top) {
  if (n.is_param) return {0, 0};
  switch (n.comb) {
    case CombKind::Scanl: return {0, 0};
    case CombKind::Scanr: return {1, 1};
    case CombKind::Scatter:
    case CombKind::Opaque: return {0, 0};
    default: return {0, order_top};
  }
}

namespace detail {

// The consumer-side traversal order of an edge as a linear expression over
// model variables (the producer must match it when the edge is fused).
inline LinExpr edge_order_expr(const DepGraph& g, const DepEdge& e,
                               const IlpModel& m) {
  switch (e.in_order) {
    case InOrder::SameAsOutput:
      return LinExpr::term(m.var(var_d(g.nodes[e.consumer].name)), 1);
    case InOrder::Const0: return LinExpr(0);
    case InOrder::Const1: return LinExpr(1);
    case InOrder::GatherLabel: return LinExpr(e.gather_label);
    case InOrder::ScatterSrc:
      return LinExpr::term(m.var(var_ssrc(g.nodes[e.consumer].name)), 1);
    case InOrder::Unordered: return LinExpr(0);
  }
  return LinExpr(0);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Model construction
// ---------------------------------------------------------------------------

// Build the fusion ILP for a dependence graph under one cost kind.
//
// Variables (declaration order matters: the solver breaks branching ties by
// it, so fusion decisions in edge order come first):
//   x<e>   per edge, 1 = unfused; infusible edges pinned to 1
//   pi_a   cluster position; parameters pinned to 0, others in [1, n]
//   m_a    1 = fused away entirely; pinned 0 where the array must exist
//   d_a    traversal order of a's loop, in [0, g+1]
//   ssrc_s per scatter, its free source-read direction
//   cost-kind auxiliaries (pimax, or read-sharing r/s)
//
// Constraints couple fusion with placement (x <= pi_b - pi_a <= n x), forbid
// consuming a fused-away array from outside (x + m <= 1), force fused
// producers to adopt the consumer-side order (|d_a - o(e)| <= (g+2) x), cap
// orders of manifest arrays at 1 (d <= 1 + g m), and serialize every other
// reader of a scatter destination strictly before the scatter.
inline IlpModel build_fusion_ilp(const DepGraph& g, CostKind kind) {
  IlpModel m;
  const int64_t n = static_cast<int64_t>(g.nodes.size());
  const int gcount = g.num_gathers;
  const int order_top = gcount + 1;
  const int64_t mo = gcount + 2;  // big-M for order coupling

  // --- variables ---
  for (size_t e = 0; e < g.edges.size(); ++e)
    m.add_var(var_x(g, static_cast<int>(e)), g.edges[e].fusible ? 0 : 1, 1);
  for (const auto& nd : g.nodes)
    m.add_var(var_pi(nd.name), nd.is_param ? 0 : 1, nd.is_param ? 0 : n);
  for (const auto& nd : g.nodes)
    m.add_var(var_m(nd.name), 0, must_stay_manifest(nd) ? 0 : 1);
  for (const auto& nd : g.nodes) {
    auto [lo, hi] = order_bounds(nd, order_top);
    m.add_var(var_d(nd.name), lo, hi);
  }
  for (const auto& nd : g.nodes)
    if (!nd.is_param && nd.comb == CombKind::Scatter)
      m.add_var(var_ssrc(nd.name), 0, 1);

  // Read-sharing auxiliaries: for each array with fusible out-edges
  // e_1..e_k (edge order), r_i says "edge i pays for a fresh traversal" and
  // s_ji lets edge i ride along an earlier unfused edge j that reads the
  // array in the same cluster with the same order.
  std::vector<std::vector<int>> fusible_out(g.nodes.size());
  for (size_t a = 0; a < g.nodes.size(); ++a)
    for (int e : g.out_edges[a])
      if (g.edges[e].fusible) fusible_out[a].push_back(e);

  if (kind == CostKind::Reads || kind == CostKind::ReadsWrites) {
    for (size_t a = 0; a < g.nodes.size(); ++a) {
      int k = static_cast<int>(fusible_out[a].size());
      for (int i = 1; i <= k; ++i) m.add_var(var_r(g.nodes[a].name, i), 0, 1);
      for (int i = 1; i <= k; ++i)
        for (int j = 1; j < i; ++j)
          m.add_var(var_s(g.nodes[a].name, j, i), 0, 1);
    }
  }
  if (kind == CostKind::Clusters) m.add_var(var_pimax(), 0, n);

  // --- constraints ---
  for (size_t ei = 0; ei < g.edges.size(); ++ei) {
    const DepEdge& e = g.edges[ei];
    const std::string tag = "_e" + std::to_string(ei);
    int x = m.var(var_x(g, static_cast<int>(ei)));
    int pa = m.var(var_pi(g.nodes[e.producer].name));
    int pb = m.var(var_pi(g.nodes[e.consumer].name));
    // x <= pi_b - pi_a: an unfused edge forces a strictly later cluster.
    LinExpr lo;
    lo.add(pb, 1).add(pa, -1).add(x, -1);
    m.add_constraint(lo, Cmp::Ge, 0, "prec_lo" + tag);
    // pi_b - pi_a <= n x: a fused edge forces the same cluster.
    LinExpr hi;
    hi.add(pb, 1).add(pa, -1).add(x, -n);
    m.add_constraint(hi, Cmp::Le, 0, "prec_hi" + tag);
    // A consumed-from-outside array cannot be fused away.
    LinExpr mf;
    mf.add(x, 1).add(m.var(var_m(g.nodes[e.producer].name)), 1);
    m.add_constraint(mf, Cmp::Le, 1, "mfuse" + tag);
    if (e.fusible) {
      // Fused producer adopts the consumer-side order.
      LinExpr diff = LinExpr::term(m.var(var_d(g.nodes[e.producer].name)), 1);
      diff -= detail::edge_order_expr(g, e, m);
      LinExpr olo = diff;
      olo.add(x, mo);
      m.add_constraint(olo, Cmp::Ge, 0, "ord_lo" + tag);
      LinExpr ohi = diff;
      ohi.add(x, -mo);
      m.add_constraint(ohi, Cmp::Le, 0, "ord_hi" + tag);
    }
  }

  // Manifest arrays can only be traversed plainly (order 0 or 1); gather
  // pre-pass labels require the array to be fused away.
  for (const auto& nd : g.nodes) {
    if (nd.is_param) continue;
    LinExpr cap;
    cap.add(m.var(var_d(nd.name)), 1).add(m.var(var_m(nd.name)), -gcount);
    m.add_constraint(cap, Cmp::Le, 1, "cap_" + nd.name);
  }

  // Every other reader of a scatter destination runs strictly before the
  // scatter (the scatter consumes the buffer).
  for (size_t s = 0; s < g.nodes.size(); ++s) {
    const DepNode& nd = g.nodes[s];
    if (nd.is_param || nd.comb != CombKind::Scatter) continue;
    NodeId dest = -1;
    for (int e : g.in_edges[s])
      if (g.edges[e].role == EdgeRole::ScatterDest) dest = g.edges[e].producer;
    if (dest < 0) continue;
    std::set<NodeId> others;
    for (int e : g.out_edges[dest]) {
      NodeId c = g.edges[e].consumer;
      if (c != static_cast<NodeId>(s)) others.insert(c);
    }
    for (NodeId c : others) {
      LinExpr ex;
      ex.add(m.var(var_pi(g.nodes[c].name)), 1)
          .add(m.var(var_pi(nd.name)), -1);
      m.add_constraint(ex, Cmp::Le, -1,
                       "scat_" + nd.name + "_" + g.nodes[c].name);
    }
  }

  // --- cost-specific constraints and the objective ---
  int64_t infusible_count = 0;
  for (const auto& e : g.edges)
    if (!e.fusible) ++infusible_count;
  int64_t produced_count = 0;
  for (const auto& nd : g.nodes)
    if (!nd.is_param) ++produced_count;

  LinExpr obj;
  switch (kind) {
    case CostKind::Clusters: {
      int pm = m.var(var_pimax());
      for (const auto& nd : g.nodes) {
        if (nd.is_param) continue;
        LinExpr ex;
        ex.add(m.var(var_pi(nd.name)), 1).add(pm, -1);
        m.add_constraint(ex, Cmp::Le, 0, "pmax_" + nd.name);
      }
      obj.add(pm, 1);
      break;
    }
    case CostKind::FusedEdges: {
      for (size_t e = 0; e < g.edges.size(); ++e)
        if (g.edges[e].fusible)
          obj.add(m.var(var_x(g, static_cast<int>(e))), 1);
      break;
    }
    case CostKind::Manifest: {
      for (const auto& nd : g.nodes)
        if (!nd.is_param) obj.add(m.var(var_m(nd.name)), -1);
      break;
    }
    case CostKind::Reads:
    case CostKind::ReadsWrites: {
      for (size_t a = 0; a < g.nodes.size(); ++a) {
        const std::string& an = g.nodes[a].name;
        const auto& fe = fusible_out[a];
        int k = static_cast<int>(fe.size());
        for (int i = 1; i <= k; ++i) {
          const DepEdge& eu = g.edges[fe[i - 1]];
          int xi = m.var(var_x(g, fe[i - 1]));
          // r_i >= x_i - sum_j s_ji
          LinExpr need;
          need.add(xi, 1).add(m.var(var_r(an, i)), -1);
          for (int j = 1; j < i; ++j) need.add(m.var(var_s(an, j, i)), -1);
          m.add_constraint(need, Cmp::Le, 0,
                           "rd_r_" + an + "_" + std::to_string(i));
          if (i > 1) {
            LinExpr one;
            for (int j = 1; j < i; ++j) one.add(m.var(var_s(an, j, i)), 1);
            m.add_constraint(one, Cmp::Le, 1,
                             "rd_one_" + an + "_" + std::to_string(i));
          }
          for (int j = 1; j < i; ++j) {
            const DepEdge& ev = g.edges[fe[j - 1]];
            int sji = m.var(var_s(an, j, i));
            const std::string jt =
                "_" + an + "_" + std::to_string(j) + "_" + std::to_string(i);
            // Ride-along needs the earlier edge to actually read (x_j = 1)…
            LinExpr sx;
            sx.add(sji, 1).add(m.var(var_x(g, fe[j - 1])), -1);
            m.add_constraint(sx, Cmp::Le, 0, "rd_x" + jt);
            // …the same consumer cluster…
            int pi_i = m.var(var_pi(g.nodes[eu.consumer].name));
            int pi_j = m.var(var_pi(g.nodes[ev.consumer].name));
            LinExpr plo;
            plo.add(pi_i, 1).add(pi_j, -1).add(sji, n);
            m.add_constraint(plo, Cmp::Le, n, "rd_pi_hi" + jt);
            LinExpr phi;
            phi.add(pi_i, 1).add(pi_j, -1).add(sji, -n);
            m.add_constraint(phi, Cmp::Ge, -n, "rd_pi_lo" + jt);
            // …and the same traversal order.
            LinExpr od = detail::edge_order_expr(g, eu, m);
            od -= detail::edge_order_expr(g, ev, m);
            LinExpr olo = od;
            olo.add(sji, mo);
            m.add_constraint(olo, Cmp::Le, mo, "rd_o_hi" + jt);
            LinExpr ohi = od;
            ohi.add(sji, -mo);
            m.add_constraint(ohi, Cmp::Ge, -mo, "rd_o_lo" + jt);
          }
          obj.add(m.var(var_r(an, i)), 1);
        }
      }
      obj.constant += infusible_count;
      if (kind == CostKind::ReadsWrites) {
        obj.constant += produced_count;
        for (const auto& nd : g.nodes)
          if (!nd.is_param) obj.add(m.var(var_m(nd.name)), -1);
      }
      break;
    }
  }
  m.set_objective(obj, /*minimize=*/true);
  return m;
}

// ---------------------------------------------------------------------------
// Extraction
// ---------------------------------------------------------------------------

namespace detail {

inline int64_t assigned(const std::map<std::string, int64_t>& a,
                        const std::string& name) {
  auto it = a.find(name);
  if (it == a.end())
    throw std::invalid_argument("assignment misses variable '" + name + "'");
  return it->second;
}

}  // namespace detail

// Raise m to its canonical maximum: every node whose out-edges are all fused
// and which is not forced manifest is marked fused-away. Raising m only
// relaxes the order cap, so feasibility is preserved; objectives that price m
// (manifest, reads-writes) already sit at this maximum in any optimum.
inline void canonicalize_manifest(const DepGraph& g,
                                  std::map<std::string, int64_t>& assign) {
  for (size_t a = 0; a < g.nodes.size(); ++a) {
    const DepNode& nd = g.nodes[a];
    if (must_stay_manifest(nd)) continue;
    bool all_fused = true;
    for (int e : g.out_edges[a])
      if (detail::assigned(assign, var_x(g, e)) != 0) all_fused = false;
    if (all_fused) assign[var_m(nd.name)] = 1;
  }
}

// Read a solver assignment back into a Clustering: clusters are the distinct
// pi values in ascending order, members in program order.
inline Clustering extract_clustering(const DepGraph& g, CostKind kind,
                                     const std::map<std::string, int64_t>& a) {
  Clustering c;
  c.cost_kind = cost_kind_name(kind);
  std::map<int64_t, Cluster> slots;
  for (const auto& nd : g.nodes) {
    if (nd.is_param) continue;
    int64_t pi = detail::assigned(a, var_pi(nd.name));
    Cluster& cl = slots[pi];
    cl.nodes.push_back(nd.name);
    cl.orders[nd.name] =
        static_cast<int>(detail::assigned(a, var_d(nd.name)));
  }
  for (auto& [pi, cl] : slots) c.clusters.push_back(std::move(cl));
  for (size_t e = 0; e < g.edges.size(); ++e) {
    if (!g.edges[e].fusible) continue;
    if (detail::assigned(a, var_x(g, static_cast<int>(e))) == 0)
      c.fused_edges.push_back({g.nodes[g.edges[e].producer].name,
                               g.nodes[g.edges[e].consumer].name,
                               g.edges[e].port});
  }
  for (const auto& nd : g.nodes) {
    if (nd.is_param) continue;
    if (detail::assigned(a, var_m(nd.name)) == 0) c.manifest.push_back(nd.name);
    if (nd.comb == CombKind::Scatter)
      c.scatter_src_orders[nd.name] =
          static_cast<int>(detail::assigned(a, var_ssrc(nd.name)));
  }
  return c;
}

// ---------------------------------------------------------------------------
// Order resolution on clusterings
// ---------------------------------------------------------------------------

// Fill in scatter source orders missing from externally supplied JSON: a
// fused source edge inherits the producer's order; otherwise 0.
inline void fill_scatter_src_defaults(const DepGraph& g, Clustering& c) {
  for (const auto& nd : g.nodes) {
    if (nd.is_param || nd.comb != CombKind::Scatter) continue;
    if (c.scatter_src_orders.count(nd.name)) continue;
    int def = 0;
    for (int e : g.in_edges[g.id_of(nd.name)]) {
      const DepEdge& de = g.edges[e];
      if (de.role != EdgeRole::ScatterSrc) continue;
      const std::string& prod = g.nodes[de.producer].name;
      if (de.fusible && c.is_fused(prod, nd.name, de.port)) {
        int o = c.order_of(prod);
        if (o >= 0) def = o;
      }
    }
    c.scatter_src_orders[nd.name] = def;
  }
}

// Consumer-side traversal order of an edge under a clustering; nullopt for
// unordered edges. Call fill_scatter_src_defaults first on external input.
inline std::optional<int> resolve_edge_order(const DepGraph& g,
                                             const DepEdge& e,
                                             const Clustering& c) {
  switch (e.in_order) {
    case InOrder::SameAsOutput: {
      int o = c.order_of(g.nodes[e.consumer].name);
      return o < 0 ? std::optional<int>{} : std::optional<int>{o};
    }
    case InOrder::Const0: return 0;
    case InOrder::Const1: return 1;
    case InOrder::GatherLabel: return e.gather_label;
    case InOrder::ScatterSrc: {
      auto it = c.scatter_src_orders.find(g.nodes[e.consumer].name);
      return it == c.scatter_src_orders.end() ? std::optional<int>{}
                                              : std::optional<int>{it->second};
    }
    case InOrder::Unordered: return std::nullopt;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Splitting
// ---------------------------------------------------------------------------

namespace detail {

struct Dsu {
  std::vector<int> parent;
  explicit Dsu(size_t n) : parent(n) {
    for (size_t i = 0; i < n; ++i) parent[i] = static_cast<int>(i);
  }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void join(int a, int b) { parent[find(a)] = find(b); }
};

}  // namespace detail

// Separate each cluster into its loop-connected components: members hang
// together through fused edges and through shared (producer, order) input
// streams of unfused fusible edges. Infusible reads bind nothing. New
// clusters are ordered by (original cluster, smallest member node).
inline Clustering split_clusters(const DepGraph& g, const Clustering& in) {
  Clustering out = in;
  out.clusters.clear();
  std::vector<std::pair<int, Cluster>> pieces;  // (original index, cluster)

  for (size_t ci = 0; ci < in.clusters.size(); ++ci) {
    const Cluster& cl = in.clusters[ci];
    std::map<NodeId, int> member_slot;
    for (size_t k = 0; k < cl.nodes.size(); ++k)
      member_slot[g.id_of(cl.nodes[k])] = static_cast<int>(k);

    // Vertices: members, then one per shared parent stream.
    detail::Dsu dsu(cl.nodes.size());
    std::map<std::pair<NodeId, int>, int> parent_slot;
    std::vector<int> parent_vertex;  // dsu ids of parent vertices
    auto parent_id = [&](NodeId prod, int order) {
      auto key = std::make_pair(prod, order);
      auto it = parent_slot.find(key);
      if (it != parent_slot.end()) return it->second;
      int id = static_cast<int>(dsu.parent.size());
      dsu.parent.push_back(id);
      parent_slot[key] = id;
      return id;
    };

    for (const auto& name : cl.nodes) {
      NodeId c = g.id_of(name);
      for (int ei : g.in_edges[c]) {
        const DepEdge& e = g.edges[ei];
        if (!e.fusible) continue;
        const std::string& prod = g.nodes[e.producer].name;
        if (in.is_fused(prod, name, e.port)) {
          auto it = member_slot.find(e.producer);
          if (it != member_slot.end()) dsu.join(member_slot[c], it->second);
        } else {
          std::optional<int> o = resolve_edge_order(g, e, in);
          dsu.join(member_slot[c], parent_id(e.producer, o.value_or(0)));
        }
      }
    }

    std::map<int, Cluster> comps;  // root -> piece
    std::map<int, NodeId> comp_min;
    for (const auto& name : cl.nodes) {
      NodeId id = g.id_of(name);
      int root = dsu.find(member_slot[id]);
      Cluster& piece = comps[root];
      piece.nodes.push_back(name);
      auto it = cl.orders.find(name);
      if (it != cl.orders.end()) piece.orders[name] = it->second;
      if (!comp_min.count(root) || id < comp_min[root]) comp_min[root] = id;
    }
    std::vector<std::pair<NodeId, int>> order;
    for (const auto& [root, mn] : comp_min) order.emplace_back(mn, root);
    std::sort(order.begin(), order.end());
    for (const auto& [mn, root] : order)
      pieces.emplace_back(static_cast<int>(ci), std::move(comps[root]));
  }

  for (auto& [ci, piece] : pieces) out.clusters.push_back(std::move(piece));
  return out;
}

// ---------------------------------------------------------------------------
// Checking
// ---------------------------------------------------------------------------

struct CheckViolation {
  int rule = 0;  // 0 = structure, 1..6 = clustering rules
  std::string message;
};

// Validate a clustering against the graph's rules:
//   1. manifest covers outputs, scatters, opaques, force targets; manifest
//      arrays use plain orders (0/1)
//   2. fusion/order consistency: fusible edge fused iff endpoints share a
//      cluster; fused producers match the consumer-side order; no infusible
//      edge inside a cluster; scans and scatters keep their pinned orders
//   3. producers run no later than consumers; strictly earlier across
//      unfused edges
//   4. every other reader of a scatter destination runs strictly before the
//      scatter
//   5. each cluster is one connected loop nest (via fused edges and shared
//      input streams)
//   6. an array may be dropped from manifest only if all its uses are fused
// Rule 0 reports structural defects (unknown names, missing members, bad
// orders); if any are found, checking stops there.
inline std::vector<CheckViolation> check_clustering(const DepGraph& g,
                                                    const Clustering& in) {
  std::vector<CheckViolation> out;
  Clustering c = in;
  fill_scatter_src_defaults(g, c);

  // --- rule 0: structure ---
  std::map<std::string, int> cluster_of;
  for (size_t ci = 0; ci < c.clusters.size(); ++ci) {
    for (const auto& name : c.clusters[ci].nodes) {
      if (!g.node_of.count(name)) {
        out.push_back({0, "cluster lists unknown array '" + name + "'"});
        continue;
      }
      const DepNode& nd = g.nodes[g.id_of(name)];
      if (nd.is_param) {
        out.push_back({0, "cluster lists parameter '" + name + "'"});
        continue;
      }
      if (nd.name != name) {
        out.push_back({0, "cluster lists alias '" + name + "'"});
        continue;
      }
      if (cluster_of.count(name)) {
        out.push_back({0, "array '" + name + "' is in two clusters"});
        continue;
      }
      cluster_of[name] = static_cast<int>(ci);
      auto it = c.clusters[ci].orders.find(name);
      if (it == c.clusters[ci].orders.end())
        out.push_back({0, "array '" + name + "' has no order"});
      else if (it->second < 0 || it->second > g.num_gathers + 1)
        out.push_back({0, "array '" + name + "' has order " +
                              std::to_string(it->second) + ", outside [0, " +
                              std::to_string(g.num_gathers + 1) + "]"});
    }
  }
  for (const auto& nd : g.nodes)
    if (!nd.is_param && !cluster_of.count(nd.name))
      out.push_back({0, "array '" + nd.name + "' is in no cluster"});
  {
    std::set<std::string> seen;
    for (const auto& name : c.manifest) {
      if (!g.node_of.count(name) || g.nodes[g.id_of(name)].is_param ||
          g.nodes[g.id_of(name)].name != name)
        out.push_back({0, "manifest lists '" + name +
                              "', which is not a produced array"});
      else if (!seen.insert(name).second)
        out.push_back({0, "manifest lists '" + name + "' twice"});
    }
    for (const auto& f : c.fused_edges) {
      bool found = false;
      for (const auto& e : g.edges)
        if (g.nodes[e.producer].name == f.producer &&
            g.nodes[e.consumer].name == f.consumer && e.port == f.port)
          found = e.fusible;
      if (!found)
        out.push_back({0, "fused edge " + f.producer + " -> " + f.consumer +
                              " (port " + std::to_string(f.port) +
                              ") is not a fusible edge"});
    }
    for (const auto& [name, o] : c.scatter_src_orders) {
      bool is_scatter = g.node_of.count(name) &&
                        !g.nodes[g.id_of(name)].is_param &&
                        g.nodes[g.id_of(name)].comb == CombKind::Scatter;
      if (!is_scatter)
        out.push_back(
            {0, "scatter_src_orders names non-scatter '" + name + "'"});
      else if (o != 0 && o != 1)
        out.push_back({0, "scatter source order of '" + name +
                              "' must be 0 or 1"});
    }
  }
  if (!out.empty()) return out;

  auto order_of = [&](const std::string& name) { return c.order_of(name); };

  // --- rule 1: manifest coverage and plain orders ---
  for (const auto& nd : g.nodes) {
    if (nd.is_param) continue;
    if (must_stay_manifest(nd) && !c.is_manifest(nd.name)) {
      const char* why = nd.is_output          ? "a program output"
                        : nd.force_target     ? "a force target"
                        : nd.comb == CombKind::Scatter ? "a scatter result"
                                                       : "an opaque result";
      out.push_back({1, "array '" + nd.name + "' is " + std::string(why) +
                            " and must stay manifest"});
    }
  }
  for (const auto& name : c.manifest) {
    int o = order_of(name);
    if (o > 1)
      out.push_back({1, "manifest array '" + name + "' has pre-pass order " +
                            std::to_string(o)});
  }

  // --- rule 2: fusion and order consistency ---
  for (size_t ei = 0; ei < g.edges.size(); ++ei) {
    const DepEdge& e = g.edges[ei];
    const std::string& pn = g.nodes[e.producer].name;
    const std::string& cn = g.nodes[e.consumer].name;
    bool same = !g.nodes[e.producer].is_param &&
                cluster_of.count(pn) && cluster_of.count(cn) &&
                cluster_of[pn] == cluster_of[cn];
    if (!e.fusible) {
      if (same)
        out.push_back({2, "infusible edge " + pn + " -> " + cn +
                              " lies inside one cluster"});
      continue;
    }
    bool fused = c.is_fused(pn, cn, e.port);
    if (fused != same)
      out.push_back({2, "edge " + pn + " -> " + cn + " (port " +
                            std::to_string(e.port) + ") is " +
                            (fused ? "fused across clusters"
                                   : "unfused inside one cluster")});
    if (fused) {
      std::optional<int> o = resolve_edge_order(g, e, c);
      int dp = order_of(pn);
      if (o && dp != *o)
        out.push_back({2, "fused edge " + pn + " -> " + cn +
                              ": producer order " + std::to_string(dp) +
                              " != consumer-side order " +
                              std::to_string(*o)});
    }
  }
  for (const auto& nd : g.nodes) {
    if (nd.is_param) continue;
    int d = order_of(nd.name);
    auto pinned = [&](int want, const char* what) {
      if (d != want)
        out.push_back({2, std::string("array '") + nd.name + "' is " + what +
                              " and must have order " + std::to_string(want)});
    };
    if (nd.comb == CombKind::Scanl) pinned(0, "a scanl");
    if (nd.comb == CombKind::Scanr) pinned(1, "a scanr");
    if (nd.comb == CombKind::Scatter) pinned(0, "a scatter");
    if (nd.comb == CombKind::Opaque) pinned(0, "an opaque");
  }

  // --- rule 3: precedence ---
  for (const auto& e : g.edges) {
    const DepNode& pn = g.nodes[e.producer];
    const std::string& cn = g.nodes[e.consumer].name;
    int pc = pn.is_param ? -1 : cluster_of[pn.name];
    int cc = cluster_of[cn];
    bool fused = e.fusible && c.is_fused(pn.name, cn, e.port);
    if (!fused && pc >= cc)
      out.push_back({3, "edge " + pn.name + " -> " + cn +
                            ": producer cluster " + std::to_string(pc) +
                            " does not precede consumer cluster " +
                            std::to_string(cc)});
  }

  // --- rule 4: scatter destination uniqueness ---
  for (const auto& nd : g.nodes) {
    if (nd.is_param || nd.comb != CombKind::Scatter) continue;
    int sc = cluster_of[nd.name];
    NodeId dest = -1;
    for (int e : g.in_edges[g.id_of(nd.name)])
      if (g.edges[e].role == EdgeRole::ScatterDest) dest = g.edges[e].producer;
    if (dest < 0) continue;
    for (int e : g.out_edges[dest]) {
      const std::string& cn = g.nodes[g.edges[e].consumer].name;
      if (cn == nd.name) continue;
      if (cluster_of[cn] >= sc)
        out.push_back({4, "array '" + cn + "' reads scatter destination '" +
                              g.nodes[dest].name +
                              "' but does not run strictly before scatter '" +
                              nd.name + "'"});
    }
  }

  // --- rule 5: cluster connectivity ---
  for (size_t ci = 0; ci < c.clusters.size(); ++ci) {
    const Cluster& cl = c.clusters[ci];
    if (cl.nodes.size() <= 1) continue;
    std::map<NodeId, int> member_slot;
    for (size_t k = 0; k < cl.nodes.size(); ++k)
      member_slot[g.id_of(cl.nodes[k])] = static_cast<int>(k);
    detail::Dsu dsu(cl.nodes.size());
    std::map<std::pair<NodeId, int>, int> parent_slot;
    auto parent_id = [&](NodeId prod, int order) {
      auto key = std::make_pair(prod, order);
      auto it = parent_slot.find(key);
      if (it != parent_slot.end()) return it->second;
      int id = static_cast<int>(dsu.parent.size());
      dsu.parent.push_back(id);
      parent_slot[key] = id;
      return id;
    };
    for (const auto& name : cl.nodes) {
      NodeId cid = g.id_of(name);
      for (int ei : g.in_edges[cid]) {
        const DepEdge& e = g.edges[ei];
        if (!e.fusible) continue;
        const std::string& prod = g.nodes[e.producer].name;
        if (c.is_fused(prod, name, e.port)) {
          auto it = member_slot.find(e.producer);
          if (it != member_slot.end()) dsu.join(member_slot[cid], it->second);
        } else {
          std::optional<int> o = resolve_edge_order(g, e, c);
          dsu.join(member_slot[cid], parent_id(e.producer, o.value_or(0)));
        }
      }
    }
    std::set<int> roots;
    for (const auto& [id, slot] : member_slot) roots.insert(dsu.find(slot));
    if (roots.size() > 1)
      out.push_back({5, "cluster " + std::to_string(ci) + " splits into " +
                            std::to_string(roots.size()) +
                            " disconnected loop nests"});
  }

  // --- rule 6: fused-away arrays have no unfused uses ---
  for (const auto& nd : g.nodes) {
    if (nd.is_param || c.is_manifest(nd.name)) continue;
    if (!cluster_of.count(nd.name)) continue;
    for (int e : g.out_edges[g.id_of(nd.name)]) {
      const DepEdge& de = g.edges[e];
      bool fused = de.fusible &&
                   c.is_fused(nd.name, g.nodes[de.consumer].name, de.port);
      if (!fused)
        out.push_back({6, "array '" + nd.name +
                              "' is not manifest but its use by '" +
                              g.nodes[de.consumer].name + "' is not fused"});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Cost of a clustering
// ---------------------------------------------------------------------------

// Evaluate a clustering under a cost kind, from the clustering alone:
//   clusters     number of clusters
//   fused-edges  fusible edges left unfused
//   manifest     minus the number of fused-away arrays
//   reads        array traversals: one per infusible use, plus one per
//                distinct (cluster, order) group of unfused fusible uses
//   reads-writes reads plus one write per manifest array
inline int64_t cost_of(const DepGraph& g, const Clustering& in,
                       CostKind kind) {
  Clustering c = in;
  fill_scatter_src_defaults(g, c);
  switch (kind) {
    case CostKind::Clusters:
      return static_cast<int64_t>(c.clusters.size());
    case CostKind::FusedEdges: {
      int64_t unfused = 0;
      for (const auto& e : g.edges)
        if (e.fusible && !c.is_fused(g.nodes[e.producer].name,
                                     g.nodes[e.consumer].name, e.port))
          ++unfused;
      return unfused;
    }
    case CostKind::Manifest: {
      int64_t produced = 0;
      for (const auto& nd : g.nodes)
        if (!nd.is_param) ++produced;
      return -(produced - static_cast<int64_t>(c.manifest.size()));
    }
    case CostKind::Reads:
    case CostKind::ReadsWrites: {
      int64_t reads = 0;
      for (size_t a = 0; a < g.nodes.size(); ++a) {
        std::set<std::pair<int, int>> groups;  // (consumer cluster, order)
        for (int ei : g.out_edges[a]) {
          const DepEdge& e = g.edges[ei];
          const std::string& cn = g.nodes[e.consumer].name;
          if (!e.fusible) {
            ++reads;
            continue;
          }
          if (c.is_fused(g.nodes[a].name, cn, e.port)) continue;
          std::optional<int> o = resolve_edge_order(g, e, c);
          groups.emplace(c.cluster_of(cn), o.value_or(0));
        }
        reads += static_cast<int64_t>(groups.size());
      }
      if (kind == CostKind::Reads) return reads;
      return reads + static_cast<int64_t>(c.manifest.size());
    }
  }
  return 0;
}

// ---------------------------------------------------------------------------
// Cluster signatures
// ---------------------------------------------------------------------------

struct SigEntry {
  std::string name;
  std::optional<int> order;  // nullopt: unordered use (indexing, scatter dest)

  std::string to_string() const {
    return order ? name + "@" + std::to_string(*order) : name;
  }
  friend bool operator==(const SigEntry& a, const SigEntry& b) {
    return a.name == b.name && a.order == b.order;
  }
};

struct Signature {
  std::vector<SigEntry> inputs;
  std::vector<SigEntry> outputs;

  std::string to_string() const {
    std::string s = "[";
    for (size_t i = 0; i < inputs.size(); ++i) {
      if (i) s += ", ";
      s += inputs[i].to_string();
    }
    s += " | ";
    for (size_t i = 0; i < outputs.size(); ++i) {
      if (i) s += ", ";
      s += outputs[i].to_string();
    }
    return s + "]";
  }
};

struct SignatureResult {
  bool ok = false;
  Signature sig;
  std::string error;  // why no signature derives, when !ok
};

// Derive the [inputs | outputs] signature of one cluster by folding its
// members in program order: fused inputs are satisfied in-cluster (their
// orders must match), outside reads become input entries (same name+order
// merges; entries for one array stay adjacent), and outputs are the manifest
// members with their orders. Fails — no derivation — when a fused edge
// crosses the boundary, a fused order mismatches, or a member's array is
// also read as an outside input.
inline SignatureResult cluster_signature(const DepGraph& g,
                                         const Clustering& in,
                                         size_t cluster_index) {
  SignatureResult res;
  if (cluster_index >= in.clusters.size()) {
    res.error = "no cluster " + std::to_string(cluster_index);
    return res;
  }
  Clustering c = in;
  fill_scatter_src_defaults(g, c);
  const Cluster& cl = c.clusters[cluster_index];
  std::set<std::string> members(cl.nodes.begin(), cl.nodes.end());

  std::vector<SigEntry> inputs;
  auto add_input = [&](const SigEntry& entry) {
    size_t last_same = inputs.size();
    bool seen = false;
    for (size_t i = 0; i < inputs.size(); ++i) {
      if (inputs[i].name != entry.name) continue;
      if (inputs[i] == entry) return;  // horizontal merge
      seen = true;
      last_same = i + 1;
    }
    inputs.insert(seen ? inputs.begin() + last_same : inputs.end(), entry);
  };

  std::vector<NodeId> member_ids;
  for (const auto& n : cl.nodes) member_ids.push_back(g.id_of(n));
  std::sort(member_ids.begin(), member_ids.end());

  for (NodeId mid : member_ids) {
    const std::string& mname = g.nodes[mid].name;
    for (int ei : g.in_edges[mid]) {
      const DepEdge& e = g.edges[ei];
      const std::string& prod = g.nodes[e.producer].name;
      std::optional<int> o = resolve_edge_order(g, e, c);
      bool fused = e.fusible && c.is_fused(prod, mname, e.port);
      if (fused) {
        if (!members.count(prod)) {
          res.error = "fused edge " + prod + " -> " + mname +
                      " reaches outside the cluster";
          return res;
        }
        int dp = c.order_of(prod);
        if (o && dp != *o) {
          res.error = "fused edge " + prod + " -> " + mname +
                      ": producer order " + std::to_string(dp) +
                      " != consumer-side order " + std::to_string(*o);
          return res;
        }
        continue;  // satisfied in-cluster
      }
      if (members.count(prod)) {
        res.error = "array '" + prod +
                    "' is produced in the cluster but read as an input";
        return res;
      }
      add_input({prod, o});
    }
  }
  for (NodeId mid : member_ids) {
    const std::string& mname = g.nodes[mid].name;
    if (c.is_manifest(mname)) {
      int d = c.order_of(mname);
      res.sig.outputs.push_back(
          {mname, d < 0 ? std::optional<int>{} : std::optional<int>{d}});
    }
  }
  res.sig.inputs = std::move(inputs);
  res.ok = true;
  return res;
}

// ---------------------------------------------------------------------------
// The full pipeline
// ---------------------------------------------------------------------------

struct FuseResult {
  Clustering clustering;
  SolveStatus status = SolveStatus::Optimal;
  int64_t nodes_explored = 0;
};

// Solve the fusion ILP and return the checked, split clustering. The
// objective reported is the ILP objective, which equals cost_of for the
// fused-edges/manifest/reads/reads-writes kinds and the pre-split cluster
// count for the clusters kind. Throws when no solution exists within budget.
inline FuseResult fuse(const DepGraph& g, CostKind kind,
                       const SolveOptions& opt = {}) {
  IlpModel model = build_fusion_ilp(g, kind);
  SolveResult res = solve(model, opt);
  if (!res.has_incumbent) {
    if (res.status == SolveStatus::Infeasible)
      throw std::runtime_error("fusion model is infeasible");
    throw std::runtime_error(
        "solver budget exhausted before any clustering was found");
  }
  std::map<std::string, int64_t> assign = res.assignment;
  canonicalize_manifest(g, assign);
  Clustering c = extract_clustering(g, kind, assign);
  c.objective = res.objective;
  c = split_clusters(g, c);
  auto violations = check_clustering(g, c);
  if (!violations.empty())
    throw std::logic_error("extracted clustering fails its own check: " +
                           violations.front().message);
  FuseResult out;
  out.clustering = std::move(c);
  out.status = res.status;
  out.nodes_explored = res.nodes_explored;
  return out;
}

inline FuseResult fuse(const Program& p, CostKind kind,
                       const SolveOptions& opt = {}) {
  return fuse(build_graph(p), kind, opt);
}

}  // namespace fuseplan
