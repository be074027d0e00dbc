// tests/support/generator.hpp — seeded random programs and ILP models for tests.
#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fuseplan/ilp.hpp"
#include "fuseplan/value.hpp"

namespace fuseplan {
namespace testing {

// ---------------------------------------------------------------------------
// Random programs
//
// Every generated program is runtime-safe for any integer inputs in
// [input_lo, input_hi] and any common extent >= 1: all arrays share the first
// parameter's extent, every index that reaches a gather, scatter, or `!` read
// is clamped or constructed inside [0, extent-1], division never appears, and
// multiplication only scales by small literals, so values stay far from
// overflow.
// ---------------------------------------------------------------------------

struct ProgramGenOptions {
  int min_nodes = 3;  // producing bindings (graph nodes); force adds none
  int max_nodes = 7;
  int num_params = 2;
  bool allow_opaque = false;  // opaque bindings cannot be evaluated
  bool allow_force = true;
};

struct GeneratedProgram {
  std::string source;
  std::vector<std::string> params;  // all declared as rank-1 int arrays
  int64_t input_lo = -4;
  int64_t input_hi = 7;
  bool has_opaque = false;
};

namespace detail {

struct GenArray {
  std::string name;
  int rank = 1;             // 0 only for fold results
  bool index_safe = false;  // rank 1, elements provably in [0, extent-1]
  bool is_pairs = false;    // (index, value) tuples built for a scatter
  bool retired = false;     // consumed as a scatter destination
  int group = 0;            // force-alias group: aliases share their target's
  int consumers = 0;
};

class ProgramGen {
 public:
  ProgramGen(std::mt19937& rng, const ProgramGenOptions& opt)
      : rng_(rng), opt_(opt) {}

  GeneratedProgram run() {
    GeneratedProgram out;
    for (int i = 0; i < std::max(1, opt_.num_params); ++i) {
      GenArray p;
      p.name = "p" + std::to_string(i);
      p.group = static_cast<int>(arrays_.size());
      arrays_.push_back(p);
      out.params.push_back(p.name);
    }

    int target = pick(opt_.min_nodes, opt_.max_nodes);
    int guard = 0;
    while (nodes_ < target && ++guard < 200) {
      int room = target - nodes_;
      switch (roll_kind()) {
        case 0: emit_map(); break;
        case 1: emit_generate(); break;
        case 2:
          if (room >= (have_safe() ? 1 : 2))
            emit_gather();
          else
            emit_map();
          break;
        case 3:
          if (room >= scatter_slots())
            emit_scatter();
          else
            emit_map();
          break;
        case 4: emit_fold(); break;
        case 5: emit_scan(/*left=*/true); break;
        case 6: emit_scan(/*left=*/false); break;
        case 7:
          if (opt_.allow_force && forces_ < 2)
            emit_force();
          else
            emit_map();
          break;
        case 8:
          if (opt_.allow_opaque)
            emit_opaque();
          else
            emit_map();
          break;
      }
    }

    std::vector<std::string> sinks;
    for (size_t i = out.params.size(); i < arrays_.size(); ++i) {
      const GenArray& a = arrays_[i];
      if (a.consumers == 0 && !a.retired && !a.is_pairs)
        sinks.push_back(a.name);
    }
    if (sinks.empty()) {  // can only happen when everything funnels into force
      emit_map();
      sinks.push_back(arrays_.back().name);
    }

    std::ostringstream src;
    src << "def rnd(";
    for (size_t i = 0; i < out.params.size(); ++i) {
      if (i) src << ", ";
      src << out.params[i] << ": [i1]";
    }
    src << ") {\n" << body_.str() << "  return ";
    for (size_t i = 0; i < sinks.size(); ++i) {
      if (i) src << ", ";
      src << sinks[i];
    }
    src << "\n}\n";
    out.source = src.str();
    out.has_opaque = has_opaque_;
    return out;
  }

 private:
  std::mt19937& rng_;
  ProgramGenOptions opt_;
  std::vector<GenArray> arrays_;
  std::ostringstream body_;
  int nodes_ = 0;
  int forces_ = 0;
  int next_id_ = 0;
  bool has_opaque_ = false;

  int pick(int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng_);
  }
  bool chance(int pct) { return pick(1, 100) <= pct; }

  // map 30, generate 12, gather 14, scatter 12, fold 8, scanl 7, scanr 7,
  // force 6, opaque 4
  int roll_kind() {
    int r = pick(1, 100);
    if ((r -= 30) <= 0) return 0;
    if ((r -= 12) <= 0) return 1;
    if ((r -= 14) <= 0) return 2;
    if ((r -= 12) <= 0) return 3;
    if ((r -= 8) <= 0) return 4;
    if ((r -= 7) <= 0) return 5;
    if ((r -= 7) <= 0) return 6;
    if ((r -= 6) <= 0) return 7;
    return 8;
  }

  const std::string& anchor() const { return arrays_[0].name; }
  std::string extent_expr() const { return "size(" + anchor() + ")"; }

  std::string fresh() { return "a" + std::to_string(next_id_++); }

  void add_array(const std::string& name, int rank, bool safe, bool pairs) {
    GenArray a;
    a.name = name;
    a.rank = rank;
    a.index_safe = safe;
    a.is_pairs = pairs;
    a.group = static_cast<int>(arrays_.size());
    arrays_.push_back(a);
    ++nodes_;
  }

  void emit_line(const std::string& name, const std::string& rhs) {
    body_ << "  " << name << " = " << rhs << "\n";
  }

  // Pools are indices into arrays_. Rank-1 element arrays are the workhorse.
  std::vector<int> rank1_pool() const {
    std::vector<int> v;
    for (size_t i = 0; i < arrays_.size(); ++i)
      if (arrays_[i].rank == 1 && !arrays_[i].retired && !arrays_[i].is_pairs)
        v.push_back(static_cast<int>(i));
    return v;
  }
  std::vector<int> rank0_pool() const {
    std::vector<int> v;
    for (size_t i = 0; i < arrays_.size(); ++i)
      if (arrays_[i].rank == 0 && !arrays_[i].retired) v.push_back((int)i);
    return v;
  }
  std::vector<int> safe_pool() const {
    std::vector<int> v;
    for (size_t i = 0; i < arrays_.size(); ++i)
      if (arrays_[i].index_safe && !arrays_[i].retired) v.push_back((int)i);
    return v;
  }
  std::vector<int> pairs_pool() const {
    std::vector<int> v;
    for (size_t i = 0; i < arrays_.size(); ++i)
      if (arrays_[i].is_pairs && !arrays_[i].retired) v.push_back((int)i);
    return v;
  }
  bool have_safe() const { return !safe_pool().empty(); }
  int scatter_slots() const {
    if (!pairs_pool().empty()) return 1;       // reuse pairs: scatter only
    return have_safe() ? 2 : 3;                // [safe +] pairs + scatter
  }

  int pick_from(const std::vector<int>& pool) {
    return pool[pick(0, static_cast<int>(pool.size()) - 1)];
  }

  std::string use(int idx) {
    ++arrays_[idx].consumers;
    return arrays_[idx].name;
  }

  // A clamped element read of a rank-1 array: always in bounds for extent>=1.
  std::string clamped_read(const std::string& arr, const std::string& at) {
    return arr + " ! (min(max(" + at + ", 0), size(" + arr + ") - 1))";
  }

  // Random integer expression over the given lambda variables. Multiplication
  // only scales by literals, so magnitudes grow at most geometrically small.
  std::string gen_expr(const std::vector<std::string>& vars, int depth,
                       bool allow_reads) {
    auto atom = [&]() -> std::string {
      if (!vars.empty() && chance(70)) return vars[pick(0, (int)vars.size() - 1)];
      return std::to_string(pick(0, 5));
    };
    if (depth <= 0 || chance(25)) {
      if (allow_reads && chance(20)) {
        std::vector<int> pool = rank1_pool();
        if (!pool.empty()) {
          int idx = pick_from(pool);
          return clamped_read(use(idx), atom());
        }
      }
      return atom();
    }
    std::string l = gen_expr(vars, depth - 1, allow_reads);
    std::string r = gen_expr(vars, depth - 1, allow_reads);
    switch (pick(0, 5)) {
      case 0: return "(" + l + " + " + r + ")";
      case 1: return "(" + l + " - " + r + ")";
      case 2: return "(" + l + " * " + std::to_string(pick(0, 5)) + ")";
      case 3: return "min(" + l + ", " + r + ")";
      case 4: return "max(" + l + ", " + r + ")";
      default: {
        const char* cmp = chance(40) ? " < " : (chance(50) ? " <= " : " == ");
        return "(if " + atom() + cmp + atom() + " then " + l + " else " + r +
               ")";
      }
    }
  }

  void emit_map() {
    std::vector<int> r0 = rank0_pool();
    bool scalar = !r0.empty() && chance(15);
    std::vector<int> pool = scalar ? r0 : rank1_pool();
    int k = pick(1, std::min(3, static_cast<int>(pool.size())));
    std::vector<int> args;
    if (k == 2 && chance(20)) {
      int a = pick_from(pool);  // same array twice: two ports, one producer
      args = {a, a};
    } else {
      std::shuffle(pool.begin(), pool.end(), rng_);
      args.assign(pool.begin(), pool.begin() + k);
    }
    std::vector<std::string> vars;
    for (size_t i = 0; i < args.size(); ++i)
      vars.push_back("x" + std::to_string(i));
    std::string body = gen_expr(vars, 2, /*allow_reads=*/chance(50));
    std::ostringstream rhs;
    rhs << "map(\\";
    for (size_t i = 0; i < vars.size(); ++i) rhs << (i ? " " : "") << vars[i];
    rhs << " -> " << body << ", ";
    for (size_t i = 0; i < args.size(); ++i)
      rhs << (i ? ", " : "") << use(args[i]);
    rhs << ")";
    std::string name = fresh();
    emit_line(name, rhs.str());
    add_array(name, scalar ? 0 : 1, false, false);
  }

  void emit_generate() {
    std::string name = fresh();
    std::string body = gen_expr({"i"}, 2, /*allow_reads=*/chance(60));
    emit_line(name, "generate(" + extent_expr() + ", \\i -> " + body + ")");
    add_array(name, 1, false, false);
  }

  // Emit one array whose elements are provably valid indices.
  void emit_safe() {
    std::string name = fresh();
    switch (pick(0, 2)) {
      case 0:
        emit_line(name, "generate(" + extent_expr() + ", \\i -> i)");
        break;
      case 1:
        emit_line(name, "generate(" + extent_expr() + ", \\i -> " +
                            extent_expr() + " - 1 - i)");
        break;
      default: {
        std::vector<int> pool = rank1_pool();
        int src = pick_from(pool);
        std::string s = use(src);
        emit_line(name, "map(\\x0 -> min(max(x0, 0), size(" + s + ") - 1), " +
                            s + ")");
        break;
      }
    }
    add_array(name, 1, true, false);
  }

  void emit_gather() {
    if (!have_safe()) emit_safe();
    int inds = pick_from(safe_pool());
    int src = pick_from(rank1_pool());
    std::string name = fresh();
    emit_line(name, "gather(" + use(inds) + ", " + use(src) + ")");
    add_array(name, 1, arrays_[src].index_safe, false);
  }

  void emit_scatter() {
    std::vector<int> dests;
    for (int i : rank1_pool())
      if (arrays_[i].group != 0) dests.push_back(i);  // keep the extent anchor
    if (dests.empty()) {
      emit_map();
      return;
    }
    int dest = dests[pick(0, (int)dests.size() - 1)];

    int src;
    std::vector<int> pairs = pairs_pool();
    if (!pairs.empty() && chance(30)) {
      src = pick_from(pairs);
    } else {
      if (!have_safe()) emit_safe();
      int inds = pick_from(safe_pool());
      std::vector<int> vals_pool = rank1_pool();
      int vals = pick_from(vals_pool);
      std::string pname = fresh();
      emit_line(pname, "map(\\x0 x1 -> (x0, x1), " + use(inds) + ", " +
                           use(vals) + ")");
      add_array(pname, 1, false, true);
      src = static_cast<int>(arrays_.size()) - 1;
    }

    static const char* combiners[] = {"d + s", "s", "max(d, s)", "d + s * 2",
                                      "min(d, s)"};
    std::string name = fresh();
    emit_line(name, "scatter(\\d s -> " + std::string(combiners[pick(0, 4)]) +
                        ", " + use(dest) + ", " + use(src) + ")");
    // Retire the destination together with every alias of it: a read of the
    // buffer laundered through force after the scatter has no valid schedule.
    int dg = arrays_[dest].group;
    for (auto& a : arrays_)
      if (a.group == dg) a.retired = true;
    add_array(name, 1, false, false);
  }

  void emit_fold() {
    static const char* combiners[] = {"a + b", "max(a, b)", "min(a, b)",
                                      "a + b * 2"};
    int arg = pick_from(rank1_pool());
    std::string name = fresh();
    emit_line(name, "fold(\\a b -> " + std::string(combiners[pick(0, 3)]) +
                        ", " + use(arg) + ")");
    add_array(name, 0, false, false);
  }

  void emit_scan(bool left) {
    int which = pick(0, 3);
    static const char* combiners[] = {"a + b", "max(a, b)", "min(a, b)",
                                      "a + b + 1"};
    int arg = pick_from(rank1_pool());
    bool safe = arrays_[arg].index_safe && (which == 1 || which == 2);
    std::string name = fresh();
    emit_line(name, std::string(left ? "scanl" : "scanr") + "(\\a b -> " +
                        combiners[which] + ", " + use(arg) + ")");
    add_array(name, 1, safe, false);
  }

  void emit_force() {
    std::vector<int> pool = rank1_pool();
    int target = pick_from(pool);
    std::string name = fresh();
    emit_line(name, "force(" + use(target) + ")");
    GenArray a = arrays_[target];  // alias: same rank, safety, and group
    a.name = name;
    a.consumers = 0;
    arrays_.push_back(a);  // no ++nodes_: force adds no graph node
    ++forces_;
  }

  void emit_opaque() {
    std::vector<int> pool = rank1_pool();
    int k = pick(1, std::min(2, static_cast<int>(pool.size())));
    std::shuffle(pool.begin(), pool.end(), rng_);
    std::ostringstream rhs;
    rhs << "opaque(";
    for (int i = 0; i < k; ++i) rhs << (i ? ", " : "") << use(pool[i]);
    rhs << ")";
    std::string name = fresh();
    emit_line(name, rhs.str());
    add_array(name, 1, false, false);
    has_opaque_ = true;
  }
};

}  // namespace detail

inline GeneratedProgram random_program(std::mt19937& rng,
                                       const ProgramGenOptions& opt = {}) {
  return detail::ProgramGen(rng, opt).run();
}

// Random inputs for a generated program: one common extent, elements uniform
// in the program's safe range.
inline Env random_inputs(std::mt19937& rng, const GeneratedProgram& gp,
                         int max_extent = 8) {
  std::uniform_int_distribution<int> ext(1, max_extent);
  int64_t n = ext(rng);
  std::uniform_int_distribution<int64_t> elem(gp.input_lo, gp.input_hi);
  Env env;
  for (const auto& p : gp.params) {
    ArrayValue a;
    a.shape = {n};
    for (int64_t i = 0; i < n; ++i) a.elems.push_back(Value::of_int(elem(rng)));
    env[p] = std::move(a);
  }
  return env;
}

// ---------------------------------------------------------------------------
// Random ILP models, small enough for exhaustive comparison
// ---------------------------------------------------------------------------

struct IlpGenOptions {
  int max_vars = 12;
  int max_constraints = 10;
  int64_t max_domain_span = 5;         // hi - lo (domain size <= 6)
  int64_t max_abs_coeff = 3;
  int64_t max_enum_product = 1 << 16;  // keeps exhaustive comparison cheap
};

inline IlpModel random_ilp(std::mt19937& rng, const IlpGenOptions& opt = {}) {
  auto pick = [&](int64_t lo, int64_t hi) {
    return std::uniform_int_distribution<int64_t>(lo, hi)(rng);
  };
  IlpModel m;
  int nv = static_cast<int>(pick(1, opt.max_vars));
  int64_t product = 1;
  for (int i = 0; i < nv; ++i) {
    int64_t lo = pick(-4, 3);
    int64_t span = pick(0, opt.max_domain_span);
    if (product >= opt.max_enum_product)
      span = 0;
    else
      span = std::min(span, opt.max_enum_product / product - 1);
    product *= span + 1;
    m.add_var("v" + std::to_string(i), lo, lo + span);
  }
  int nc = static_cast<int>(pick(0, opt.max_constraints));
  for (int c = 0; c < nc; ++c) {
    LinExpr e;
    int terms = static_cast<int>(pick(1, std::min(nv, 3)));
    std::vector<int> ids(nv);
    std::iota(ids.begin(), ids.end(), 0);
    std::shuffle(ids.begin(), ids.end(), rng);
    for (int t = 0; t < terms; ++t) {
      int64_t coeff = pick(1, opt.max_abs_coeff);
      if (pick(0, 1)) coeff = -coeff;
      e.add(ids[t], coeff);
    }
    e.constant = pick(-2, 2);
    int64_t r = pick(0, 9);
    Cmp cmp = r < 4 ? Cmp::Le : r < 8 ? Cmp::Ge : Cmp::Eq;
    m.add_constraint(std::move(e), cmp, pick(-6, 6), "c" + std::to_string(c));
  }
  LinExpr obj;
  for (int i = 0; i < nv; ++i)
    obj.add(i, pick(-opt.max_abs_coeff, opt.max_abs_coeff));  // 0 makes ties
  obj.constant = pick(-5, 5);
  m.set_objective(std::move(obj), /*minimize=*/pick(0, 9) < 8);
  return m;
}

struct BruteResult {
  bool feasible = false;
  int64_t objective = 0;
  std::vector<int64_t> assignment;  // by declaration order
};

// Exhaustive optimum over all assignments, odometer order (declaration order,
// lower values first); the first assignment reaching the optimum is kept.
inline BruteResult brute_force_opt(const IlpModel& m) {
  const auto& vars = m.vars();
  std::vector<int64_t> cur;
  cur.reserve(vars.size());
  for (const auto& v : vars) cur.push_back(v.lo);

  auto value_of = [&](const LinExpr& e) {
    int64_t s = e.constant;
    for (const auto& [var, c] : e.coeffs) s += c * cur[var];
    return s;
  };

  BruteResult best;
  bool done = vars.empty();
  while (!done) {
    bool ok = true;
    for (const auto& c : m.constraints()) {
      int64_t v = value_of(c.expr);
      if ((c.cmp == Cmp::Le && v > c.rhs) || (c.cmp == Cmp::Ge && v < c.rhs) ||
          (c.cmp == Cmp::Eq && v != c.rhs)) {
        ok = false;
        break;
      }
    }
    if (ok) {
      int64_t obj = value_of(m.objective());
      bool better = !best.feasible ||
                    (m.minimize() ? obj < best.objective : obj > best.objective);
      if (better) {
        best.feasible = true;
        best.objective = obj;
        best.assignment = cur;
      }
    }
    size_t d = vars.size();
    while (d-- > 0) {
      if (cur[d] < vars[d].hi) {
        ++cur[d];
        for (size_t k = d + 1; k < vars.size(); ++k) cur[k] = vars[k].lo;
        break;
      }
      if (d == 0) done = true;
    }
  }
  if (vars.empty()) {  // constant model: feasible iff constant rows hold
    bool ok = true;
    for (const auto& c : m.constraints()) {
      int64_t v = c.expr.constant;
      if ((c.cmp == Cmp::Le && v > c.rhs) || (c.cmp == Cmp::Ge && v < c.rhs) ||
          (c.cmp == Cmp::Eq && v != c.rhs))
        ok = false;
    }
    best.feasible = ok;
    best.objective = m.objective().constant;
  }
  return best;
}

}  // namespace testing
}  // namespace fuseplan
