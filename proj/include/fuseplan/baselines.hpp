// fuseplan/baselines.hpp — greedy pairwise fusion and an exhaustive oracle
// that enumerates every clustering of small graphs.
#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "fuseplan/fusion.hpp"

namespace fuseplan {

// ---------------------------------------------------------------------------
// Greedy pairwise fusion
// ---------------------------------------------------------------------------

enum class GreedyDirection { TopDown, BottomUp };

inline const char* greedy_direction_name(GreedyDirection d) {
  return d == GreedyDirection::TopDown ? "top-down" : "bottom-up";
}

inline GreedyDirection greedy_direction_from_string(const std::string& s) {
  if (s == "top-down") return GreedyDirection::TopDown;
  if (s == "bottom-up") return GreedyDirection::BottomUp;
  throw std::invalid_argument("unknown greedy direction '" + s +
                              "' (expected top-down or bottom-up)");
}

struct GreedyResult {
  Clustering clustering;
  int attempted = 0;         // fusible edges probed
  int accepted = 0;          // probes that kept a feasible schedule
  int64_t nodes_explored = 0;  // solver nodes across all probes
};

// Fuse edges one at a time, keeping each fusion only if some feasible
// schedule still exists with all decisions so far. Top-down visits producers
// first-to-last, bottom-up last-to-first; within a producer, consumers in
// program order. Rejections are permanent — this is the irrevocable local
// heuristic the ILP is measured against. The result reports cost_of under
// `kind`; the fused-away set is whatever the feasibility solve happens to
// force, with everything else manifest.
inline GreedyResult greedy_fuse(const DepGraph& g, GreedyDirection dir,
                                CostKind kind, const SolveOptions& opt = {}) {
  IlpModel base = build_fusion_ilp(g, CostKind::FusedEdges);
  std::vector<int> cand;
  for (size_t e = 0; e < g.edges.size(); ++e)
    if (g.edges[e].fusible) cand.push_back(static_cast<int>(e));
  std::stable_sort(cand.begin(), cand.end(), [&](int a, int b) {
    const DepEdge& ea = g.edges[a];
    const DepEdge& eb = g.edges[b];
    if (ea.producer != eb.producer)
      return dir == GreedyDirection::TopDown ? ea.producer < eb.producer
                                             : ea.producer > eb.producer;
    if (ea.consumer != eb.consumer) return ea.consumer < eb.consumer;
    return ea.port < eb.port;
  });

  GreedyResult res;
  std::vector<int> accepted;
  for (int e : cand) {
    ++res.attempted;
    IlpModel probe = base;
    for (int a : accepted)
      probe.add_constraint(LinExpr::term(probe.var(var_x(g, a)), 1), Cmp::Eq,
                           0, "fix_x" + std::to_string(a));
    probe.add_constraint(LinExpr::term(probe.var(var_x(g, e)), 1), Cmp::Eq, 0,
                         "try_x" + std::to_string(e));
    SolveResult r = feasible(probe, opt);
    res.nodes_explored += r.nodes_explored;
    if (r.has_incumbent) {
      accepted.push_back(e);
      ++res.accepted;
    } else if (r.status == SolveStatus::Aborted) {
      throw std::runtime_error("greedy probe exceeded the solver budget");
    }
  }

  IlpModel fin = base;
  std::set<int> acc(accepted.begin(), accepted.end());
  for (int e : cand)
    fin.add_constraint(LinExpr::term(fin.var(var_x(g, e)), 1), Cmp::Eq,
                       acc.count(e) ? 0 : 1, "set_x" + std::to_string(e));
  SolveResult r = feasible(fin, opt);
  res.nodes_explored += r.nodes_explored;
  if (!r.has_incumbent)
    throw std::runtime_error("greedy fusion has no feasible schedule");
  Clustering c = extract_clustering(g, kind, r.assignment);
  c = split_clusters(g, c);
  auto violations = check_clustering(g, c);
  if (!violations.empty())
    throw std::logic_error("greedy clustering fails its own check: " +
                           violations.front().message);
  c.objective = cost_of(g, c, kind);
  res.clustering = std::move(c);
  return res;
}

// ---------------------------------------------------------------------------
// Exhaustive oracle
// ---------------------------------------------------------------------------

struct OracleOptions {
  int max_produced = 16;                    // refuse graphs producing more
  int64_t max_order_assignments = 1 << 20;  // per-partition safety cap
};

struct OracleResult {
  bool found = false;            // some feasible clustering exists
  Clustering clustering;         // cheapest witness, split and checked
  int64_t objective = 0;
  int64_t partitions_explored = 0;
  int64_t feasible_partitions = 0;
};

namespace detail {

// Next restricted growth string (canonical set-partition encoding):
// a[0] = 0, a[i] <= max(a[0..i-1]) + 1. Returns false when exhausted.
inline bool next_rgs(std::vector<int>& a) {
  for (int i = static_cast<int>(a.size()) - 1; i >= 1; --i) {
    int mx = 0;
    for (int j = 0; j < i; ++j) mx = std::max(mx, a[j]);
    if (a[i] <= mx) {
      ++a[i];
      std::fill(a.begin() + i + 1, a.end(), 0);
      return true;
    }
  }
  return false;
}

// Union-find over traversal-order variables with pinned values: fused edges
// tie orders together or pin them to constants; conflicts mark the partition
// infeasible.
struct OrderCsp {
  Dsu dsu;
  std::vector<int> pin;    // authoritative at the root; -1 = free
  std::vector<bool> cap1;  // class limited to orders {0, 1}
  bool bad = false;

  explicit OrderCsp(size_t n) : dsu(n), pin(n, -1), cap1(n, false) {}

  void pin_value(int v, int val) {
    int r = dsu.find(v);
    if (pin[r] == -1)
      pin[r] = val;
    else if (pin[r] != val)
      bad = true;
  }
  void unite(int a, int b) {
    int ra = dsu.find(a), rb = dsu.find(b);
    if (ra == rb) return;
    if (pin[ra] != -1 && pin[rb] != -1 && pin[ra] != pin[rb]) {
      bad = true;
      return;
    }
    int p = pin[ra] != -1 ? pin[ra] : pin[rb];
    bool c = cap1[ra] || cap1[rb];
    dsu.join(ra, rb);
    int r = dsu.find(ra);
    pin[r] = p;
    cap1[r] = c;
  }
  void cap(int v) {
    int r = dsu.find(v);
    cap1[r] = true;
    if (pin[r] > 1) bad = true;
  }
};

// Everything derived from one set partition that evaluation and witness
// construction need.
struct PartitionState {
  std::vector<int> label;        // block per node; -1 for parameters
  int num_blocks = 0;
  std::vector<bool> edge_fused;  // per graph edge
  std::vector<int> layer;        // per block, 1-based; pi of its members
  int num_layers = 0;
  std::vector<bool> m;           // per node: fused away entirely
  OrderCsp csp{0};
  std::vector<int> ssrc_var;     // per node: CSP var of scatter source, -1
  bool feasible = false;
};

inline PartitionState partition_state(const DepGraph& g,
                                      const std::vector<int>& rgs) {
  PartitionState st;
  st.label.assign(g.nodes.size(), -1);
  {
    int k = 0;
    for (size_t a = 0; a < g.nodes.size(); ++a)
      if (!g.nodes[a].is_param) st.label[a] = rgs[k++];
    for (int l : rgs) st.num_blocks = std::max(st.num_blocks, l + 1);
  }

  // Fused = fusible edge inside a block; an infusible edge inside a block
  // kills the partition.
  st.edge_fused.assign(g.edges.size(), false);
  for (size_t e = 0; e < g.edges.size(); ++e) {
    const DepEdge& de = g.edges[e];
    int lp = st.label[de.producer], lc = st.label[de.consumer];
    if (lp >= 0 && lp == lc) {
      if (!de.fusible) return st;
      st.edge_fused[e] = true;
    }
  }

  // Contracted digraph: every unfused edge between blocks is a strict
  // precedence arc, as is "other dest reader before scatter".
  std::set<std::pair<int, int>> arcs;
  for (size_t e = 0; e < g.edges.size(); ++e) {
    const DepEdge& de = g.edges[e];
    int lp = st.label[de.producer], lc = st.label[de.consumer];
    if (lp >= 0 && lp != lc) arcs.emplace(lp, lc);
  }
  for (size_t s = 0; s < g.nodes.size(); ++s) {
    if (g.nodes[s].is_param || g.nodes[s].comb != CombKind::Scatter) continue;
    NodeId dest = -1;
    for (int e : g.in_edges[s])
      if (g.edges[e].role == EdgeRole::ScatterDest) dest = g.edges[e].producer;
    if (dest < 0) continue;
    for (int e : g.out_edges[dest]) {
      NodeId c = g.edges[e].consumer;
      if (c == static_cast<NodeId>(s)) continue;
      if (st.label[c] == st.label[s]) return st;  // must be strictly earlier
      arcs.emplace(st.label[c], st.label[s]);
    }
  }

  // Longest-path layering doubles as the cycle check.
  std::vector<std::vector<int>> succ(st.num_blocks);
  std::vector<int> indeg(st.num_blocks, 0);
  for (const auto& [a, b] : arcs) {
    succ[a].push_back(b);
    ++indeg[b];
  }
  st.layer.assign(st.num_blocks, 1);
  std::vector<int> queue;
  for (int b = 0; b < st.num_blocks; ++b)
    if (indeg[b] == 0) queue.push_back(b);
  size_t done = 0;
  while (done < queue.size()) {
    int b = queue[done++];
    st.num_layers = std::max(st.num_layers, st.layer[b]);
    for (int c : succ[b]) {
      st.layer[c] = std::max(st.layer[c], st.layer[b] + 1);
      if (--indeg[c] == 0) queue.push_back(c);
    }
  }
  if (done < static_cast<size_t>(st.num_blocks)) return st;  // cycle

  // Traversal orders: one CSP variable per node plus one per scatter source.
  int nvars = static_cast<int>(g.nodes.size());
  st.ssrc_var.assign(g.nodes.size(), -1);
  for (size_t a = 0; a < g.nodes.size(); ++a)
    if (!g.nodes[a].is_param && g.nodes[a].comb == CombKind::Scatter)
      st.ssrc_var[a] = nvars++;
  st.csp = OrderCsp(static_cast<size_t>(nvars));
  for (size_t a = 0; a < g.nodes.size(); ++a) {
    const DepNode& nd = g.nodes[a];
    int v = static_cast<int>(a);
    if (nd.is_param) {
      st.csp.pin_value(v, 0);
      continue;
    }
    switch (nd.comb) {
      case CombKind::Scanl: st.csp.pin_value(v, 0); break;
      case CombKind::Scanr: st.csp.pin_value(v, 1); break;
      case CombKind::Scatter:
      case CombKind::Opaque: st.csp.pin_value(v, 0); break;
      default: break;
    }
  }
  for (size_t e = 0; e < g.edges.size(); ++e) {
    if (!st.edge_fused[e]) continue;
    const DepEdge& de = g.edges[e];
    int dp = de.producer;
    switch (de.in_order) {
      case InOrder::SameAsOutput: st.csp.unite(dp, de.consumer); break;
      case InOrder::Const0: st.csp.pin_value(dp, 0); break;
      case InOrder::Const1: st.csp.pin_value(dp, 1); break;
      case InOrder::GatherLabel: st.csp.pin_value(dp, de.gather_label); break;
      case InOrder::ScatterSrc:
        st.csp.unite(dp, st.ssrc_var[de.consumer]);
        break;
      case InOrder::Unordered: break;
    }
    if (st.csp.bad) return st;
  }

  // Maximal fused-away set: an array vanishes when every use is fused.
  st.m.assign(g.nodes.size(), false);
  for (size_t a = 0; a < g.nodes.size(); ++a) {
    if (must_stay_manifest(g.nodes[a])) continue;
    bool all = true;
    for (int e : g.out_edges[a])
      if (!st.edge_fused[e]) all = false;
    st.m[a] = all;
  }

  // Manifest arrays and scatter sources read plainly: cap their classes.
  for (size_t a = 0; a < g.nodes.size(); ++a) {
    if (!g.nodes[a].is_param && !st.m[a]) st.csp.cap(static_cast<int>(a));
    if (st.ssrc_var[a] >= 0) st.csp.cap(st.ssrc_var[a]);
  }
  if (st.csp.bad) return st;
  st.feasible = true;
  return st;
}

// One consumer-side order key of an unfused fusible edge: either a constant
// or a free CSP class to be enumerated.
struct OrderKey {
  bool is_const = true;
  int value = 0;  // constant, or CSP root when !is_const
};

inline OrderKey order_key(PartitionState& st,
                          const DepEdge& e) {
  switch (e.in_order) {
    case InOrder::SameAsOutput: {
      int r = st.csp.dsu.find(e.consumer);
      if (st.csp.pin[r] != -1) return {true, st.csp.pin[r]};
      return {false, r};
    }
    case InOrder::Const0: return {true, 0};
    case InOrder::Const1: return {true, 1};
    case InOrder::GatherLabel: return {true, e.gather_label};
    case InOrder::ScatterSrc: {
      int r = st.csp.dsu.find(st.ssrc_var[e.consumer]);
      if (st.csp.pin[r] != -1) return {true, st.csp.pin[r]};
      return {false, r};
    }
    case InOrder::Unordered: return {true, 0};
  }
  return {true, 0};
}

}  // namespace detail

// Exhaustively enumerate set partitions of the produced arrays (restricted
// growth strings), keep the schedulable ones, choose traversal orders
// optimally, and return the cheapest clustering under `kind`. The witness is
// re-validated against the fusion ILP: it must satisfy every constraint and
// reproduce the claimed objective exactly.
inline OracleResult oracle(const DepGraph& g, CostKind kind,
                           const OracleOptions& opt = {}) {
  int k = 0;
  for (const auto& nd : g.nodes)
    if (!nd.is_param) ++k;
  if (k > opt.max_produced)
    throw std::invalid_argument(
        "oracle refuses programs producing more than " +
        std::to_string(opt.max_produced) + " arrays (got " +
        std::to_string(k) + ")");

  OracleResult out;
  bool have_best = false;
  int64_t best_cost = 0;
  std::vector<int> best_rgs;
  std::map<int, int> best_free;  // CSP root -> chosen order

  std::vector<int> rgs(static_cast<size_t>(k), 0);
  while (true) {
    ++out.partitions_explored;
    detail::PartitionState st = detail::partition_state(g, rgs);
    if (st.feasible) {
      ++out.feasible_partitions;
      int64_t cost = 0;
      std::map<int, int> free_choice;
      switch (kind) {
        case CostKind::Clusters: cost = st.num_layers; break;
        case CostKind::FusedEdges: {
          for (size_t e = 0; e < g.edges.size(); ++e)
            if (g.edges[e].fusible && !st.edge_fused[e]) ++cost;
          break;
        }
        case CostKind::Manifest: {
          for (size_t a = 0; a < g.nodes.size(); ++a)
            if (st.m[a]) --cost;
          break;
        }
        case CostKind::Reads:
        case CostKind::ReadsWrites: {
          // Per array: infusible uses each pay one read; unfused fusible
          // uses group by (consumer block, order). Orders of free classes
          // are enumerated over {0, 1} plus any constant labels they could
          // merge with.
          int64_t flat = 0;
          std::vector<std::vector<std::pair<int, detail::OrderKey>>> uses(
              g.nodes.size());
          std::map<int, std::set<int>> candidates;
          for (size_t a = 0; a < g.nodes.size(); ++a) {
            for (int ei : g.out_edges[a]) {
              const DepEdge& e = g.edges[ei];
              if (!e.fusible) {
                ++flat;
                continue;
              }
              if (st.edge_fused[ei]) continue;
              detail::OrderKey key = detail::order_key(st, e);
              if (!key.is_const) candidates[key.value] = {0, 1};
              uses[a].emplace_back(st.label[e.consumer], key);
            }
          }
          for (size_t a = 0; a < g.nodes.size(); ++a) {
            for (const auto& [blk, key] : uses[a]) {
              if (key.is_const) continue;
              bool capped = st.csp.cap1[key.value];
              for (const auto& [blk2, key2] : uses[a])
                if (key2.is_const && key2.value > 1 && !capped)
                  candidates[key.value].insert(key2.value);
            }
          }
          std::vector<int> roots;
          std::vector<std::vector<int>> vals;
          int64_t product = 1;
          for (const auto& [r, cs] : candidates) {
            roots.push_back(r);
            vals.emplace_back(cs.begin(), cs.end());
            product *= static_cast<int64_t>(cs.size());
            if (product > opt.max_order_assignments)
              throw std::runtime_error(
                  "oracle order enumeration exceeds its safety cap");
          }
          std::vector<size_t> pick(roots.size(), 0);
          bool first = true;
          while (true) {
            int64_t reads = flat;
            for (size_t a = 0; a < g.nodes.size(); ++a) {
              if (uses[a].empty()) continue;
              std::set<std::pair<int, int>> groups;
              for (const auto& [blk, key] : uses[a]) {
                int v = key.value;
                if (!key.is_const) {
                  size_t idx = static_cast<size_t>(
                      std::lower_bound(roots.begin(), roots.end(), key.value) -
                      roots.begin());
                  v = vals[idx][pick[idx]];
                }
                groups.emplace(blk, v);
              }
              reads += static_cast<int64_t>(groups.size());
            }
            if (first || reads < cost) {
              cost = reads;
              free_choice.clear();
              for (size_t i = 0; i < roots.size(); ++i)
                free_choice[roots[i]] = vals[i][pick[i]];
              first = false;
            }
            size_t i = 0;
            for (; i < pick.size(); ++i) {
              if (++pick[i] < vals[i].size()) break;
              pick[i] = 0;
            }
            if (i == pick.size()) break;
          }
          if (kind == CostKind::ReadsWrites)
            for (size_t a = 0; a < g.nodes.size(); ++a)
              if (!g.nodes[a].is_param && !st.m[a]) ++cost;
          break;
        }
      }
      if (!have_best || cost < best_cost) {
        have_best = true;
        best_cost = cost;
        best_rgs = rgs;
        best_free = free_choice;
      }
    }
    if (!detail::next_rgs(rgs)) break;
    if (k == 0) break;
  }

  if (!have_best) return out;

  // Rebuild the winner and assemble a complete ILP assignment for it.
  detail::PartitionState st = detail::partition_state(g, best_rgs);
  auto order_value = [&](int var) {
    int r = st.csp.dsu.find(var);
    if (st.csp.pin[r] != -1) return st.csp.pin[r];
    auto it = best_free.find(r);
    return it == best_free.end() ? 0 : it->second;
  };

  std::map<std::string, int64_t> assign;
  for (size_t a = 0; a < g.nodes.size(); ++a) {
    const DepNode& nd = g.nodes[a];
    assign[var_pi(nd.name)] = nd.is_param ? 0 : st.layer[st.label[a]];
    assign[var_m(nd.name)] = !nd.is_param && st.m[a] ? 1 : 0;
    assign[var_d(nd.name)] =
        nd.is_param ? 0 : order_value(static_cast<int>(a));
    if (st.ssrc_var[a] >= 0)
      assign[var_ssrc(nd.name)] = order_value(st.ssrc_var[a]);
  }
  for (size_t e = 0; e < g.edges.size(); ++e)
    assign[var_x(g, static_cast<int>(e))] = st.edge_fused[e] ? 0 : 1;
  if (kind == CostKind::Clusters) assign[var_pimax()] = st.num_layers;
  if (kind == CostKind::Reads || kind == CostKind::ReadsWrites) {
    for (size_t a = 0; a < g.nodes.size(); ++a) {
      std::vector<int> fe;
      for (int ei : g.out_edges[a])
        if (g.edges[ei].fusible) fe.push_back(ei);
      std::map<std::pair<int, int>, int> rep;  // (block, order) -> index
      for (int i = 1; i <= static_cast<int>(fe.size()); ++i) {
        const std::string& an = g.nodes[a].name;
        for (int j = 1; j < i; ++j) assign[var_s(an, j, i)] = 0;
        if (st.edge_fused[fe[i - 1]]) {
          assign[var_r(an, i)] = 0;
          continue;
        }
        const DepEdge& e = g.edges[fe[i - 1]];
        detail::OrderKey key = detail::order_key(st, e);
        int v = key.value;
        if (!key.is_const) {
          auto it = best_free.find(key.value);
          v = it == best_free.end() ? 0 : it->second;
        }
        auto [it, fresh] = rep.emplace(std::pair{st.label[e.consumer], v}, i);
        if (fresh) {
          assign[var_r(an, i)] = 1;
        } else {
          assign[var_r(an, i)] = 0;
          assign[var_s(an, it->second, i)] = 1;
        }
      }
    }
  }

  IlpModel model = build_fusion_ilp(g, kind);
  std::string why;
  if (!model.check_feasible(assign, &why))
    throw std::logic_error("oracle witness violates the fusion model: " + why);
  if (model.objective_value(assign) != best_cost)
    throw std::logic_error("oracle witness objective " +
                           std::to_string(model.objective_value(assign)) +
                           " != enumerated cost " + std::to_string(best_cost));

  Clustering c = extract_clustering(g, kind, assign);
  c.objective = best_cost;
  c = split_clusters(g, c);
  auto violations = check_clustering(g, c);
  if (!violations.empty())
    throw std::logic_error("oracle clustering fails its own check: " +
                           violations.front().message);
  out.found = true;
  out.clustering = std::move(c);
  out.objective = best_cost;
  return out;
}

}  // namespace fuseplan
