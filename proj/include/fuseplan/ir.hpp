// fuseplan/ir.hpp — combinator IR: AST types, free-array analysis, validation.
#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

namespace fuseplan {

// ---------------------------------------------------------------------------
// Element types
// ---------------------------------------------------------------------------

// Element type of an array: a scalar or a flat tuple of scalars. Unknown is
// used by inference when a type cannot be derived statically.
struct ElemType {
  enum class Kind { Unknown, Int, Float, Bool, Tuple };
  Kind kind = Kind::Unknown;
  std::vector<ElemType> elems;  // tuple components when kind == Tuple

  static ElemType unknown() { return {}; }
  static ElemType integer() { return {Kind::Int, {}}; }
  static ElemType floating() { return {Kind::Float, {}}; }
  static ElemType boolean() { return {Kind::Bool, {}}; }
  static ElemType tuple(std::vector<ElemType> ts) {
    return {Kind::Tuple, std::move(ts)};
  }

  bool is_unknown() const { return kind == Kind::Unknown; }
  bool is_scalar() const {
    return kind == Kind::Int || kind == Kind::Float || kind == Kind::Bool;
  }

  friend bool operator==(const ElemType& a, const ElemType& b) {
    return a.kind == b.kind && a.elems == b.elems;
  }
  friend bool operator!=(const ElemType& a, const ElemType& b) {
    return !(a == b);
  }

  std::string to_string() const {
    switch (kind) {
      case Kind::Unknown: return "?";
      case Kind::Int: return "i";
      case Kind::Float: return "f";
      case Kind::Bool: return "b";
      case Kind::Tuple: {
        std::string s = "(";
        for (size_t i = 0; i < elems.size(); ++i) {
          if (i) s += ",";
          s += elems[i].to_string();
        }
        return s + ")";
      }
    }
    return "?";
  }
};

// Declared type of a program parameter: element type plus rank.
struct ArrayType {
  ElemType elem;
  int rank = 1;
};

// ---------------------------------------------------------------------------
// Element expressions
// ---------------------------------------------------------------------------

enum class BinOp { Add, Sub, Mul, Div, Min, Max, Eq, Lt, Le };

inline const char* binop_name(BinOp op) {
  switch (op) {
    case BinOp::Add: return "+";
    case BinOp::Sub: return "-";
    case BinOp::Mul: return "*";
    case BinOp::Div: return "/";
    case BinOp::Min: return "min";
    case BinOp::Max: return "max";
    case BinOp::Eq: return "==";
    case BinOp::Lt: return "<";
    case BinOp::Le: return "<=";
  }
  return "?";
}

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

// One element-level expression node. `kind` decides which fields are live.
struct Expr {
  enum class Kind {
    IntLit,    // int_val
    FloatLit,  // float_val
    BoolLit,   // bool_val
    Var,       // name (a lambda parameter)
    Bin,       // op, args[0], args[1]
    If,        // args[0] ? args[1] : args[2]
    Tuple,     // args (2+)
    Proj,      // args[0] . index
    Index,     // name ! args[0]  (name is an array in scope)
    Size       // size(name)
  };

  Kind kind;
  int64_t int_val = 0;
  double float_val = 0.0;
  bool bool_val = false;
  std::string name;
  BinOp op = BinOp::Add;
  int index = 0;
  std::vector<ExprPtr> args;
  int line = 0, col = 0;

  static ExprPtr make_int(int64_t v) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::IntLit;
    e->int_val = v;
    return e;
  }
  static ExprPtr make_float(double v) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::FloatLit;
    e->float_val = v;
    return e;
  }
  static ExprPtr make_bool(bool v) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::BoolLit;
    e->bool_val = v;
    return e;
  }
  static ExprPtr make_var(std::string n) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::Var;
    e->name = std::move(n);
    return e;
  }
  static ExprPtr make_bin(BinOp op, ExprPtr a, ExprPtr b) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::Bin;
    e->op = op;
    e->args = {std::move(a), std::move(b)};
    return e;
  }
  static ExprPtr make_if(ExprPtr c, ExprPtr t, ExprPtr f) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::If;
    e->args = {std::move(c), std::move(t), std::move(f)};
    return e;
  }
  static ExprPtr make_tuple(std::vector<ExprPtr> xs) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::Tuple;
    e->args = std::move(xs);
    return e;
  }
  static ExprPtr make_proj(ExprPtr x, int i) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::Proj;
    e->index = i;
    e->args = {std::move(x)};
    return e;
  }
  static ExprPtr make_index(std::string arr, ExprPtr i) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::Index;
    e->name = std::move(arr);
    e->args = {std::move(i)};
    return e;
  }
  static ExprPtr make_size(std::string arr) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::Size;
    e->name = std::move(arr);
    return e;
  }
};

// A lambda: parameter names and an element-expression body.
struct Lambda {
  std::vector<std::string> params;
  ExprPtr body;
};

// ---------------------------------------------------------------------------
// Programs
// ---------------------------------------------------------------------------

enum class CombKind {
  Map,       // map(fn, xs...)              k-ary pointwise
  Generate,  // generate(shape, fn)         build from index
  Gather,    // gather(is, xs)              xs[is[i]]
  Scatter,   // scatter(op, dest, src)      indexed update of a copy of dest
  Fold,      // fold(op, xs)                reduce innermost dimension
  Scanl,     // scanl(op, xs)               inclusive left-to-right scan
  Scanr,     // scanr(op, xs)               inclusive right-to-left scan
  Force,     // force(xs)                   identity; blocks fusion across it
  Opaque     // opaque(xs...)               foreign code, nothing assumed
};

inline const char* comb_name(CombKind k) {
  switch (k) {
    case CombKind::Map: return "map";
    case CombKind::Generate: return "generate";
    case CombKind::Gather: return "gather";
    case CombKind::Scatter: return "scatter";
    case CombKind::Fold: return "fold";
    case CombKind::Scanl: return "scanl";
    case CombKind::Scanr: return "scanr";
    case CombKind::Force: return "force";
    case CombKind::Opaque: return "opaque";
  }
  return "?";
}

// One binding `name = comb(...)`. Which fields are live depends on `kind`:
// fn for Map/Generate/Scatter/Fold/Scanl/Scanr; shape for Generate;
// args holds the array arguments in syntactic order (Gather: indices, source;
// Scatter: dest, src).
struct Binding {
  std::string name;
  CombKind kind = CombKind::Map;
  Lambda fn;
  ExprPtr shape;
  std::vector<std::string> args;
  int line = 0, col = 0;
};

struct Param {
  std::string name;
  ArrayType type;
};

struct Program {
  std::string name;
  std::vector<Param> params;
  std::vector<Binding> bindings;
  std::vector<std::string> returns;

  const Binding* find_binding(const std::string& n) const {
    for (const auto& b : bindings)
      if (b.name == n) return &b;
    return nullptr;
  }
  bool is_param(const std::string& n) const {
    for (const auto& p : params)
      if (p.name == n) return true;
    return false;
  }
};

// ---------------------------------------------------------------------------
// Free-array analysis
// ---------------------------------------------------------------------------

// Array names a lambda body mentions besides its own parameters, split by how
// they are used. Indexed names become dependence edges later; sized names do
// not (shapes are static metadata).
struct FreeArrays {
  std::set<std::string> indexed;
  std::set<std::string> sized;

  std::set<std::string> all() const {
    std::set<std::string> s = indexed;
    s.insert(sized.begin(), sized.end());
    return s;
  }
};

namespace detail {
inline void collect_free(const ExprPtr& e, const std::set<std::string>& params,
                         FreeArrays& out) {
  if (!e) return;
  switch (e->kind) {
    case Expr::Kind::Index:
      if (!params.count(e->name)) out.indexed.insert(e->name);
      break;
    case Expr::Kind::Size:
      if (!params.count(e->name)) out.sized.insert(e->name);
      break;
    default:
      break;
  }
  for (const auto& a : e->args) collect_free(a, params, out);
}
}  // namespace detail

// Arrays used by indexing or size() in the lambda body, excluding the
// lambda's own parameters.
inline FreeArrays free_arrays(const Lambda& fn) {
  FreeArrays out;
  std::set<std::string> params(fn.params.begin(), fn.params.end());
  detail::collect_free(fn.body, params, out);
  return out;
}

inline FreeArrays free_arrays_of_expr(const ExprPtr& e) {
  FreeArrays out;
  detail::collect_free(e, {}, out);
  return out;
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

enum class ViolationKind {
  DuplicateName,      // a param or binding name is defined twice
  UnknownIdentifier,  // an array reference has no prior definition
  UnboundVariable,    // a bare identifier in a lambda is not a parameter
  ScatterDestReused,  // a scatter destination is referenced after the scatter
  ArityMismatch,      // lambda arity does not fit the combinator
  RankMismatch,       // statically known ranks are inconsistent
  TypeMismatch,       // statically known element types are inconsistent
  ShapeNotStatic      // a generate shape uses values, not just sizes
};

inline const char* violation_name(ViolationKind k) {
  switch (k) {
    case ViolationKind::DuplicateName: return "DuplicateName";
    case ViolationKind::UnknownIdentifier: return "UnknownIdentifier";
    case ViolationKind::UnboundVariable: return "UnboundVariable";
    case ViolationKind::ScatterDestReused: return "ScatterDestReused";
    case ViolationKind::ArityMismatch: return "ArityMismatch";
    case ViolationKind::RankMismatch: return "RankMismatch";
    case ViolationKind::TypeMismatch: return "TypeMismatch";
    case ViolationKind::ShapeNotStatic: return "ShapeNotStatic";
  }
  return "?";
}

struct Violation {
  ViolationKind kind;
  std::string message;
};

// Statically derived array info; rank < 0 means unknown.
struct ArrayInfo {
  ElemType elem;
  int rank = -1;
};

namespace detail {

struct InferCtx {
  const std::map<std::string, ArrayInfo>* arrays = nullptr;
  const std::map<std::string, ElemType>* locals = nullptr;
  std::vector<Violation>* out = nullptr;
  std::string where;

  void fail(ViolationKind k, const std::string& msg) const {
    if (out) out->push_back({k, where + ": " + msg});
  }
  ArrayInfo array(const std::string& n) const {
    if (arrays) {
      auto it = arrays->find(n);
      if (it != arrays->end()) return it->second;
    }
    return {};
  }
};

// Infer the element type of an expression, reporting only definite conflicts.
inline ElemType infer_expr(const ExprPtr& e, const InferCtx& cx) {
  if (!e) return ElemType::unknown();
  switch (e->kind) {
    case Expr::Kind::IntLit: return ElemType::integer();
    case Expr::Kind::FloatLit: return ElemType::floating();
    case Expr::Kind::BoolLit: return ElemType::boolean();
    case Expr::Kind::Var: {
      if (cx.locals) {
        auto it = cx.locals->find(e->name);
        if (it != cx.locals->end()) return it->second;
      }
      cx.fail(ViolationKind::UnboundVariable,
              "identifier '" + e->name + "' is not a lambda parameter");
      return ElemType::unknown();
    }
    case Expr::Kind::Bin: {
      ElemType a = infer_expr(e->args[0], cx);
      ElemType b = infer_expr(e->args[1], cx);
      bool cmp = e->op == BinOp::Eq || e->op == BinOp::Lt || e->op == BinOp::Le;
      for (const ElemType* t : {&a, &b}) {
        if (t->kind == ElemType::Kind::Tuple || t->kind == ElemType::Kind::Bool)
          cx.fail(ViolationKind::TypeMismatch,
                  std::string("operator ") + binop_name(e->op) +
                      " applied to non-numeric operand " + t->to_string());
      }
      if (a.is_scalar() && b.is_scalar() && a != b)
        cx.fail(ViolationKind::TypeMismatch,
                std::string("operator ") + binop_name(e->op) +
                    " mixes " + a.to_string() + " and " + b.to_string());
      if (cmp) return ElemType::boolean();
      if (!a.is_unknown()) return a;
      return b;
    }
    case Expr::Kind::If: {
      ElemType c = infer_expr(e->args[0], cx);
      if (!c.is_unknown() && c.kind != ElemType::Kind::Bool)
        cx.fail(ViolationKind::TypeMismatch,
                "if condition has type " + c.to_string());
      ElemType t = infer_expr(e->args[1], cx);
      ElemType f = infer_expr(e->args[2], cx);
      if (!t.is_unknown() && !f.is_unknown() && t != f)
        cx.fail(ViolationKind::TypeMismatch,
                "if branches have types " + t.to_string() + " and " +
                    f.to_string());
      return t.is_unknown() ? f : t;
    }
    case Expr::Kind::Tuple: {
      std::vector<ElemType> ts;
      ts.reserve(e->args.size());
      for (const auto& a : e->args) ts.push_back(infer_expr(a, cx));
      return ElemType::tuple(std::move(ts));
    }
    case Expr::Kind::Proj: {
      ElemType t = infer_expr(e->args[0], cx);
      if (t.kind == ElemType::Kind::Tuple) {
        if (e->index < 0 || e->index >= static_cast<int>(t.elems.size())) {
          cx.fail(ViolationKind::TypeMismatch,
                  "projection ." + std::to_string(e->index) +
                      " out of range for " + t.to_string());
          return ElemType::unknown();
        }
        return t.elems[e->index];
      }
      if (!t.is_unknown())
        cx.fail(ViolationKind::TypeMismatch,
                "projection applied to non-tuple " + t.to_string());
      return ElemType::unknown();
    }
    case Expr::Kind::Index: {
      if (cx.locals && cx.locals->count(e->name))
        cx.fail(ViolationKind::TypeMismatch,
                "cannot index lambda parameter '" + e->name + "'");
      ElemType i = infer_expr(e->args[0], cx);
      ArrayInfo a = cx.array(e->name);
      if (a.rank == 1 && !i.is_unknown() && i.kind != ElemType::Kind::Int)
        cx.fail(ViolationKind::TypeMismatch,
                "index into '" + e->name + "' has type " + i.to_string());
      if (a.rank > 1 && i.kind == ElemType::Kind::Tuple &&
          static_cast<int>(i.elems.size()) != a.rank)
        cx.fail(ViolationKind::RankMismatch,
                "index tuple width " + std::to_string(i.elems.size()) +
                    " does not match rank " + std::to_string(a.rank) +
                    " of '" + e->name + "'");
      return a.elem;
    }
    case Expr::Kind::Size: {
      ArrayInfo a = cx.array(e->name);
      if (a.rank == 1 || a.rank == 0) return ElemType::integer();
      if (a.rank > 1)
        return ElemType::tuple(
            std::vector<ElemType>(a.rank, ElemType::integer()));
      return ElemType::unknown();
    }
  }
  return ElemType::unknown();
}

// Width of a generate shape expression: 1 for an int, k for a k-tuple of
// ints; -1 when unknown.
inline int shape_width(const ExprPtr& shape, const InferCtx& cx) {
  ElemType t = infer_expr(shape, cx);
  if (t.kind == ElemType::Kind::Int) return 1;
  if (t.kind == ElemType::Kind::Tuple) {
    for (const auto& c : t.elems)
      if (!c.is_unknown() && c.kind != ElemType::Kind::Int)
        cx.fail(ViolationKind::TypeMismatch,
                "shape component has type " + c.to_string());
    return static_cast<int>(t.elems.size());
  }
  if (!t.is_unknown())
    cx.fail(ViolationKind::TypeMismatch, "shape has type " + t.to_string());
  return -1;
}

// Shape expressions may only use literals, arithmetic, tuples, projections
// and size() — never element values. Reports offenders.
inline void check_shape_static(const ExprPtr& e, const InferCtx& cx) {
  if (!e) return;
  switch (e->kind) {
    case Expr::Kind::Var:
      cx.fail(ViolationKind::ShapeNotStatic,
              "shape references value '" + e->name + "'");
      return;
    case Expr::Kind::Index:
      cx.fail(ViolationKind::ShapeNotStatic,
              "shape indexes array '" + e->name + "'");
      return;
    case Expr::Kind::FloatLit:
      cx.fail(ViolationKind::ShapeNotStatic, "shape uses a float literal");
      return;
    default:
      break;
  }
  for (const auto& a : e->args) check_shape_static(a, cx);
}

}  // namespace detail

// Infer element type and rank for every array in the program. Unknown where
// not statically derivable; no violations reported from here.
inline std::map<std::string, ArrayInfo> infer_arrays(const Program& p) {
  std::map<std::string, ArrayInfo> arrays;
  for (const auto& prm : p.params)
    arrays[prm.name] = {prm.type.elem, prm.type.rank};

  for (const auto& b : p.bindings) {
    detail::InferCtx cx;  // silent: no violation sink
    cx.arrays = &arrays;
    ArrayInfo info;
    auto arg_info = [&](size_t i) -> ArrayInfo {
      if (i < b.args.size()) {
        auto it = arrays.find(b.args[i]);
        if (it != arrays.end()) return it->second;
      }
      return {};
    };
    switch (b.kind) {
      case CombKind::Map: {
        info.rank = arg_info(0).rank;
        std::map<std::string, ElemType> locals;
        for (size_t i = 0; i < b.fn.params.size() && i < b.args.size(); ++i)
          locals[b.fn.params[i]] = arg_info(i).elem;
        cx.locals = &locals;
        info.elem = detail::infer_expr(b.fn.body, cx);
        break;
      }
      case CombKind::Generate: {
        int w = detail::shape_width(b.shape, cx);
        info.rank = w;
        std::map<std::string, ElemType> locals;
        if (!b.fn.params.empty()) {
          ElemType idx =
              w == 1 || w == 0
                  ? ElemType::integer()
                  : (w > 1 ? ElemType::tuple(std::vector<ElemType>(
                                 w, ElemType::integer()))
                           : ElemType::unknown());
          locals[b.fn.params[0]] = idx;
        }
        cx.locals = &locals;
        info.elem = detail::infer_expr(b.fn.body, cx);
        break;
      }
      case CombKind::Gather:
        info.rank = arg_info(0).rank;
        info.elem = arg_info(1).elem;
        break;
      case CombKind::Scatter:
        info = arg_info(0);
        break;
      case CombKind::Fold: {
        ArrayInfo a = arg_info(0);
        info.elem = a.elem;
        info.rank = a.rank > 0 ? a.rank - 1 : -1;
        break;
      }
      case CombKind::Scanl:
      case CombKind::Scanr:
        info = arg_info(0);
        break;
      case CombKind::Force:
        info = arg_info(0);
        break;
      case CombKind::Opaque:
        info = {};
        break;
    }
    arrays[b.name] = info;
  }
  return arrays;
}

// Check a program for structural problems. Empty result means valid.
inline std::vector<Violation> validate(const Program& p) {
  std::vector<Violation> out;
  std::map<std::string, ArrayInfo> arrays;
  std::set<std::string> dead_dests;  // scatter destinations, final afterwards

  auto defined = [&](const std::string& n) { return arrays.count(n) > 0; };
  auto use = [&](const std::string& n, const std::string& where) {
    if (!defined(n)) {
      out.push_back({ViolationKind::UnknownIdentifier,
                     where + ": unknown array '" + n + "'"});
      return false;
    }
    if (dead_dests.count(n))
      out.push_back({ViolationKind::ScatterDestReused,
                     where + ": scatter destination '" + n +
                         "' referenced after the scatter"});
    return true;
  };

  for (const auto& prm : p.params) {
    if (arrays.count(prm.name))
      out.push_back({ViolationKind::DuplicateName,
                     "parameter '" + prm.name + "' defined twice"});
    arrays[prm.name] = {prm.type.elem, prm.type.rank};
  }

  for (const auto& b : p.bindings) {
    const std::string where = "binding '" + b.name + "'";

    // Arity of the lambda against the combinator's contract.
    size_t want = 0;
    bool has_fn = true;
    switch (b.kind) {
      case CombKind::Map: want = b.args.size(); break;
      case CombKind::Generate: want = 1; break;
      case CombKind::Scatter: want = 2; break;
      case CombKind::Fold:
      case CombKind::Scanl:
      case CombKind::Scanr: want = 2; break;
      case CombKind::Gather:
      case CombKind::Force:
      case CombKind::Opaque: has_fn = false; break;
    }
    if (has_fn && b.fn.params.size() != want)
      out.push_back({ViolationKind::ArityMismatch,
                     where + ": " + comb_name(b.kind) + " lambda takes " +
                         std::to_string(b.fn.params.size()) +
                         " parameters, needs " + std::to_string(want)});

    // Array arguments must be defined, and must not be retired scatter dests.
    for (const auto& a : b.args) use(a, where);

    // Lambda body: bare identifiers are parameters; indexed/sized arrays are
    // in scope. Type conflicts are reported where derivable.
    detail::InferCtx cx;
    cx.arrays = &arrays;
    cx.out = &out;
    cx.where = where;
    if (has_fn || b.kind == CombKind::Generate) {
      FreeArrays fa = free_arrays(b.fn);
      for (const auto& n : fa.indexed) use(n, where);
      for (const auto& n : fa.sized) use(n, where);
    }
    if (b.shape) {
      detail::check_shape_static(b.shape, cx);
      FreeArrays fa = free_arrays_of_expr(b.shape);
      for (const auto& n : fa.sized) use(n, where);
      for (const auto& n : fa.indexed) use(n, where);
    }

    // Rank and element checks where statically known, and the inferred info
    // for this binding.
    auto arg_info = [&](size_t i) -> ArrayInfo {
      if (i < b.args.size()) {
        auto it = arrays.find(b.args[i]);
        if (it != arrays.end()) return it->second;
      }
      return {};
    };
    ArrayInfo info;
    switch (b.kind) {
      case CombKind::Map: {
        if (b.args.empty())
          out.push_back(
              {ViolationKind::ArityMismatch, where + ": map needs arguments"});
        int rank = -1;
        for (size_t i = 0; i < b.args.size(); ++i) {
          int r = arg_info(i).rank;
          if (r < 0) continue;
          if (rank < 0) rank = r;
          if (r != rank)
            out.push_back({ViolationKind::RankMismatch,
                           where + ": map arguments have ranks " +
                               std::to_string(rank) + " and " +
                               std::to_string(r)});
        }
        std::map<std::string, ElemType> locals;
        for (size_t i = 0; i < b.fn.params.size() && i < b.args.size(); ++i)
          locals[b.fn.params[i]] = arg_info(i).elem;
        cx.locals = &locals;
        info.elem = detail::infer_expr(b.fn.body, cx);
        info.rank = rank;
        break;
      }
      case CombKind::Generate: {
        int w = detail::shape_width(b.shape, cx);
        info.rank = w;
        std::map<std::string, ElemType> locals;
        if (!b.fn.params.empty())
          locals[b.fn.params[0]] =
              w == 1 || w == 0
                  ? ElemType::integer()
                  : (w > 1 ? ElemType::tuple(std::vector<ElemType>(
                                 w, ElemType::integer()))
                           : ElemType::unknown());
        cx.locals = &locals;
        info.elem = detail::infer_expr(b.fn.body, cx);
        break;
      }
      case CombKind::Gather: {
        ArrayInfo is = arg_info(0), src = arg_info(1);
        if (src.rank >= 0) {
          if (is.elem.kind == ElemType::Kind::Int && src.rank != 1)
            out.push_back({ViolationKind::RankMismatch,
                           where + ": scalar indices into rank-" +
                               std::to_string(src.rank) + " source"});
          if (is.elem.kind == ElemType::Kind::Tuple &&
              static_cast<int>(is.elem.elems.size()) != src.rank)
            out.push_back({ViolationKind::RankMismatch,
                           where + ": index tuple width " +
                               std::to_string(is.elem.elems.size()) +
                               " into rank-" + std::to_string(src.rank) +
                               " source"});
        }
        info.rank = is.rank;
        info.elem = src.elem;
        break;
      }
      case CombKind::Scatter: {
        ArrayInfo dest = arg_info(0), src = arg_info(1);
        if (b.args.size() == 2 && b.args[0] == b.args[1])
          out.push_back({ViolationKind::ScatterDestReused,
                         where + ": scatter reads its own destination"});
        if (!b.args.empty() && free_arrays(b.fn).indexed.count(b.args[0]))
          out.push_back({ViolationKind::ScatterDestReused,
                         where + ": scatter combiner indexes its own "
                                 "destination"});
        if (src.elem.kind == ElemType::Kind::Tuple &&
            src.elem.elems.size() != 2)
          out.push_back({ViolationKind::TypeMismatch,
                         where + ": scatter source elements must be "
                                 "(index, value) pairs"});
        if (src.elem.kind != ElemType::Kind::Unknown &&
            src.elem.kind != ElemType::Kind::Tuple)
          out.push_back({ViolationKind::TypeMismatch,
                         where + ": scatter source elements must be "
                                 "(index, value) pairs"});
        std::map<std::string, ElemType> locals;
        if (b.fn.params.size() == 2) {
          locals[b.fn.params[0]] = dest.elem;
          locals[b.fn.params[1]] =
              src.elem.kind == ElemType::Kind::Tuple &&
                      src.elem.elems.size() == 2
                  ? src.elem.elems[1]
                  : ElemType::unknown();
        }
        cx.locals = &locals;
        detail::infer_expr(b.fn.body, cx);
        info = dest;
        break;
      }
      case CombKind::Fold: {
        ArrayInfo a = arg_info(0);
        if (a.rank == 0)
          out.push_back({ViolationKind::RankMismatch,
                         where + ": fold needs rank >= 1"});
        std::map<std::string, ElemType> locals;
        for (const auto& pn : b.fn.params) locals[pn] = a.elem;
        cx.locals = &locals;
        detail::infer_expr(b.fn.body, cx);
        info.elem = a.elem;
        info.rank = a.rank > 0 ? a.rank - 1 : -1;
        break;
      }
      case CombKind::Scanl:
      case CombKind::Scanr: {
        ArrayInfo a = arg_info(0);
        if (a.rank == 0)
          out.push_back({ViolationKind::RankMismatch,
                         where + ": " + std::string(comb_name(b.kind)) +
                             " needs rank >= 1"});
        std::map<std::string, ElemType> locals;
        for (const auto& pn : b.fn.params) locals[pn] = a.elem;
        cx.locals = &locals;
        detail::infer_expr(b.fn.body, cx);
        info = a;
        break;
      }
      case CombKind::Force:
        info = arg_info(0);
        break;
      case CombKind::Opaque:
        if (b.args.empty())
          out.push_back({ViolationKind::ArityMismatch,
                         where + ": opaque needs arguments"});
        info = {};
        break;
    }

    if (arrays.count(b.name))
      out.push_back({ViolationKind::DuplicateName,
                     where + ": name defined twice"});
    arrays[b.name] = info;

    if (b.kind == CombKind::Scatter && !b.args.empty())
      dead_dests.insert(b.args[0]);
  }

  if (p.returns.empty())
    out.push_back(
        {ViolationKind::UnknownIdentifier, "program returns nothing"});
  for (const auto& r : p.returns) use(r, "return");

  return out;
}

}  // namespace fuseplan
