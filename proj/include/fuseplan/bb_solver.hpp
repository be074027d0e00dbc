// fuseplan/bb_solver.hpp — deterministic branch-and-bound over integer models.
#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fuseplan/ilp.hpp"

namespace fuseplan {

enum class SolveStatus { Optimal, Infeasible, Aborted };

inline const char* solve_status_name(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Aborted: return "aborted";
  }
  return "?";
}

struct SolveResult {
  SolveStatus status = SolveStatus::Infeasible;
  bool has_incumbent = false;
  std::map<std::string, int64_t> assignment;  // best solution found
  int64_t objective = 0;                      // its true objective value
  int64_t nodes_explored = 0;
};

struct SolveOptions {
  int64_t max_nodes = 0;    // 0 = unlimited search nodes
  double max_seconds = 0;   // 0 = no time budget
  bool stop_at_first = false;  // stop at the first feasible leaf
};

namespace detail {

inline int64_t floor_div(int64_t a, int64_t b) {
  int64_t q = a / b, r = a % b;
  return (r != 0 && ((r < 0) != (b < 0))) ? q - 1 : q;
}
inline int64_t ceil_div(int64_t a, int64_t b) {
  int64_t q = a / b, r = a % b;
  return (r != 0 && ((r < 0) == (b < 0))) ? q + 1 : q;
}

// One <= constraint in solver form: sum of coeff * var <= rhs.
struct LeRow {
  std::vector<std::pair<int, int64_t>> terms;  // (var, coeff), coeff != 0
  int64_t rhs = 0;
};

class Search {
 public:
  Search(const IlpModel& m, const SolveOptions& opt) : model_(m), opt_(opt) {
    for (const auto& v : m.vars()) {
      lo_.push_back(v.lo);
      hi_.push_back(v.hi);
    }
    auto add_le = [&](const LinExpr& e, int64_t rhs, bool negate) {
      LeRow row;
      for (const auto& [var, c] : e.coeffs)
        row.terms.emplace_back(var, negate ? -c : c);
      row.rhs = (negate ? -(rhs - e.constant) : (rhs - e.constant));
      rows_.push_back(std::move(row));
    };
    for (const auto& c : m.constraints()) {
      if (c.cmp == Cmp::Le || c.cmp == Cmp::Eq)
        add_le(c.expr, c.rhs, /*negate=*/false);
      if (c.cmp == Cmp::Ge || c.cmp == Cmp::Eq)
        add_le(c.expr, c.rhs, /*negate=*/true);
    }
    // Internally always minimize.
    for (const auto& [var, c] : m.objective().coeffs)
      obj_.emplace_back(var, m.minimize() ? c : -c);
    start_ = std::chrono::steady_clock::now();
  }

  SolveResult run() {
    dfs(lo_, hi_);
    SolveResult r;
    r.nodes_explored = nodes_;
    r.has_incumbent = has_best_;
    if (aborted_)
      r.status = SolveStatus::Aborted;
    else if (has_best_)
      r.status = SolveStatus::Optimal;
    else
      r.status = SolveStatus::Infeasible;
    if (has_best_) {
      for (size_t i = 0; i < best_.size(); ++i)
        r.assignment[model_.vars()[i].name] = best_[i];
      r.objective = model_.objective_value(r.assignment);
    }
    return r;
  }

 private:
  bool out_of_budget() {
    if (opt_.max_nodes > 0 && nodes_ >= opt_.max_nodes) return true;
    if (opt_.max_seconds > 0 && (nodes_ & 63) == 0) {
      auto now = std::chrono::steady_clock::now();
      double secs = std::chrono::duration<double>(now - start_).count();
      if (secs >= opt_.max_seconds) return true;
    }
    return false;
  }

  // Tighten domains against every row until a fixpoint; false = wiped out.
  bool propagate(std::vector<int64_t>& lo, std::vector<int64_t>& hi) const {
    bool changed = true;
    while (changed) {
      changed = false;
      for (const auto& row : rows_) {
        // Minimum possible activity, and each term's share of it.
        int64_t min_act = 0;
        for (const auto& [v, c] : row.terms)
          min_act += c > 0 ? c * lo[v] : c * hi[v];
        if (min_act > row.rhs) return false;
        for (const auto& [v, c] : row.terms) {
          int64_t rest = min_act - (c > 0 ? c * lo[v] : c * hi[v]);
          int64_t budget = row.rhs - rest;  // c * x_v <= budget
          if (c > 0) {
            int64_t nb = floor_div(budget, c);
            if (nb < hi[v]) {
              hi[v] = nb;
              if (lo[v] > hi[v]) return false;
              changed = true;
            }
          } else {
            int64_t nb = ceil_div(budget, c);
            if (nb > lo[v]) {
              lo[v] = nb;
              if (lo[v] > hi[v]) return false;
              changed = true;
            }
          }
        }
      }
    }
    return true;
  }

  int64_t objective_floor(const std::vector<int64_t>& lo,
                          const std::vector<int64_t>& hi) const {
    int64_t v = 0;
    for (const auto& [var, c] : obj_) v += c > 0 ? c * lo[var] : c * hi[var];
    return v;
  }

  // Depth-first search with bisection: smallest current domain first, ties
  // by declaration order, lower half before upper half.
  void dfs(std::vector<int64_t> lo, std::vector<int64_t> hi) {
    if (aborted_ || (stop_hit_ && opt_.stop_at_first)) return;
    ++nodes_;
    if (out_of_budget()) {
      aborted_ = true;
      return;
    }
    if (!propagate(lo, hi)) return;
    if (has_best_ && !opt_.stop_at_first &&
        objective_floor(lo, hi) >= best_obj_)
      return;  // cannot strictly beat the incumbent

    int pick = -1;
    int64_t width = 0;
    for (size_t i = 0; i < lo.size(); ++i) {
      if (lo[i] == hi[i]) continue;
      int64_t w = hi[i] - lo[i];
      if (pick < 0 || w < width) {
        pick = static_cast<int>(i);
        width = w;
      }
    }
    if (pick < 0) {
      // Full assignment; propagation already verified every row.
      int64_t obj = 0;
      for (const auto& [var, c] : obj_) obj += c * lo[var];
      if (!has_best_ || obj < best_obj_) {
        has_best_ = true;
        best_obj_ = obj;
        best_ = lo;
      }
      if (opt_.stop_at_first) stop_hit_ = true;
      return;
    }

    int64_t mid = lo[pick] + (hi[pick] - lo[pick]) / 2;
    {
      std::vector<int64_t> l = lo, h = hi;
      h[pick] = mid;
      dfs(std::move(l), std::move(h));
    }
    if (aborted_ || (stop_hit_ && opt_.stop_at_first)) return;
    {
      std::vector<int64_t> l = lo, h = hi;
      l[pick] = mid + 1;
      dfs(std::move(l), std::move(h));
    }
  }

  const IlpModel& model_;
  SolveOptions opt_;
  std::vector<int64_t> lo_, hi_;
  std::vector<LeRow> rows_;
  std::vector<std::pair<int, int64_t>> obj_;
  std::chrono::steady_clock::time_point start_;
  int64_t nodes_ = 0;
  bool has_best_ = false;
  int64_t best_obj_ = 0;
  std::vector<int64_t> best_;
  bool aborted_ = false;
  bool stop_hit_ = false;
};

}  // namespace detail

// Minimize (or maximize) the model's objective exactly. Deterministic: the
// same model yields the same result, bit for bit.
inline SolveResult solve(const IlpModel& m, const SolveOptions& opt = {}) {
  detail::Search s(m, opt);
  return s.run();
}

// Find some feasible assignment, ignoring objective quality beyond reporting
// its value; stops at the first leaf the search reaches.
inline SolveResult feasible(const IlpModel& m, const SolveOptions& opt = {}) {
  SolveOptions o = opt;
  o.stop_at_first = true;
  detail::Search s(m, o);
  SolveResult r = s.run();
  if (r.status == SolveStatus::Aborted && r.has_incumbent)
    r.status = SolveStatus::Optimal;  // a leaf was reached before the budget
  return r;
}

}  // namespace fuseplan
