// fuseplan/interp.hpp — reference interpreter and scheduled interpreter.
#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "fuseplan/ir.hpp"
#include "fuseplan/value.hpp"

namespace fuseplan {

// Implementations for opaque bindings, keyed by binding name. An opaque
// binding with no registered implementation cannot be evaluated.
using OpaqueFn = std::function<ArrayValue(const std::vector<ArrayValue>&)>;
using OpaqueRegistry = std::map<std::string, OpaqueFn>;

namespace detail {

// Generated arrays are capped so runaway shape expressions fail fast.
constexpr int64_t kMaxGeneratedElems = int64_t(1) << 24;

inline int64_t flatten_index(const ArrayValue& a, const Value& idx,
                             const std::string& name) {
  auto component = [&](const Value& v) -> int64_t {
    if (v.kind != Value::Kind::Int)
      throw EvalError(EvalError::Kind::TypeMismatch,
                      "index into '" + name + "' is not an integer");
    return v.i;
  };
  std::vector<int64_t> parts;
  if (idx.kind == Value::Kind::Tuple) {
    for (const auto& c : idx.tup) parts.push_back(component(c));
  } else {
    parts.push_back(component(idx));
  }
  if (static_cast<int>(parts.size()) != a.rank())
    throw EvalError(EvalError::Kind::ShapeMismatch,
                    "index into '" + name + "' has " +
                        std::to_string(parts.size()) + " components, rank is " +
                        std::to_string(a.rank()));
  int64_t lin = 0;
  for (size_t d = 0; d < parts.size(); ++d) {
    if (parts[d] < 0 || parts[d] >= a.shape[d])
      throw EvalError(EvalError::Kind::OutOfBounds,
                      "index " + std::to_string(parts[d]) +
                          " out of bounds for dimension " + std::to_string(d) +
                          " of '" + name + "' (extent " +
                          std::to_string(a.shape[d]) + ")");
    lin = lin * a.shape[d] + parts[d];
  }
  return lin;
}

inline Value unflatten_index(const std::vector<int64_t>& shape, int64_t lin) {
  if (shape.size() == 1) return Value::of_int(lin);
  std::vector<Value> parts(shape.size());
  for (size_t d = shape.size(); d-- > 0;) {
    parts[d] = Value::of_int(lin % shape[d]);
    lin /= shape[d];
  }
  return Value::of_tuple(std::move(parts));
}

inline Value apply_bin(BinOp op, const Value& a, const Value& b) {
  auto bad = [&]() -> EvalError {
    return EvalError(EvalError::Kind::TypeMismatch,
                     std::string("operator ") + binop_name(op) +
                         " applied to " + a.to_string() + " and " +
                         b.to_string());
  };
  bool ints = a.kind == Value::Kind::Int && b.kind == Value::Kind::Int;
  bool floats = a.kind == Value::Kind::Float && b.kind == Value::Kind::Float;
  if (!ints && !floats) throw bad();
  switch (op) {
    case BinOp::Add:
      return ints ? Value::of_int(a.i + b.i) : Value::of_float(a.f + b.f);
    case BinOp::Sub:
      return ints ? Value::of_int(a.i - b.i) : Value::of_float(a.f - b.f);
    case BinOp::Mul:
      return ints ? Value::of_int(a.i * b.i) : Value::of_float(a.f * b.f);
    case BinOp::Div:
      if (ints) {
        if (b.i == 0)
          throw EvalError(EvalError::Kind::DivideByZero,
                          "integer division by zero");
        return Value::of_int(a.i / b.i);
      }
      return Value::of_float(a.f / b.f);
    case BinOp::Min:
      return ints ? Value::of_int(std::min(a.i, b.i))
                  : Value::of_float(std::min(a.f, b.f));
    case BinOp::Max:
      return ints ? Value::of_int(std::max(a.i, b.i))
                  : Value::of_float(std::max(a.f, b.f));
    case BinOp::Eq:
      return Value::of_bool(ints ? a.i == b.i : a.f == b.f);
    case BinOp::Lt:
      return Value::of_bool(ints ? a.i < b.i : a.f < b.f);
    case BinOp::Le:
      return Value::of_bool(ints ? a.i <= b.i : a.f <= b.f);
  }
  throw bad();
}

inline const ArrayValue& lookup(const Env& env, const std::string& name) {
  auto it = env.find(name);
  if (it == env.end())
    throw EvalError(EvalError::Kind::MissingInput,
                    "array '" + name + "' is not available");
  return it->second;
}

inline Value eval_expr(const ExprPtr& e,
                       const std::map<std::string, Value>& locals,
                       const Env& env) {
  switch (e->kind) {
    case Expr::Kind::IntLit: return Value::of_int(e->int_val);
    case Expr::Kind::FloatLit: return Value::of_float(e->float_val);
    case Expr::Kind::BoolLit: return Value::of_bool(e->bool_val);
    case Expr::Kind::Var: {
      auto it = locals.find(e->name);
      if (it == locals.end())
        throw EvalError(EvalError::Kind::Generic,
                        "unbound variable '" + e->name + "'");
      return it->second;
    }
    case Expr::Kind::Bin:
      return apply_bin(e->op, eval_expr(e->args[0], locals, env),
                       eval_expr(e->args[1], locals, env));
    case Expr::Kind::If: {
      Value c = eval_expr(e->args[0], locals, env);
      if (c.kind != Value::Kind::Bool)
        throw EvalError(EvalError::Kind::TypeMismatch,
                        "if condition is not a boolean");
      return eval_expr(c.b ? e->args[1] : e->args[2], locals, env);
    }
    case Expr::Kind::Tuple: {
      std::vector<Value> vs;
      vs.reserve(e->args.size());
      for (const auto& a : e->args) vs.push_back(eval_expr(a, locals, env));
      return Value::of_tuple(std::move(vs));
    }
    case Expr::Kind::Proj: {
      Value v = eval_expr(e->args[0], locals, env);
      if (v.kind != Value::Kind::Tuple ||
          e->index >= static_cast<int>(v.tup.size()))
        throw EvalError(EvalError::Kind::TypeMismatch,
                        "bad projection ." + std::to_string(e->index) +
                            " of " + v.to_string());
      return v.tup[e->index];
    }
    case Expr::Kind::Index: {
      const ArrayValue& a = lookup(env, e->name);
      Value idx = eval_expr(e->args[0], locals, env);
      return a.elems[flatten_index(a, idx, e->name)];
    }
    case Expr::Kind::Size: {
      const ArrayValue& a = lookup(env, e->name);
      if (a.rank() == 1) return Value::of_int(a.shape[0]);
      std::vector<Value> dims;
      for (int64_t d : a.shape) dims.push_back(Value::of_int(d));
      return Value::of_tuple(std::move(dims));
    }
  }
  throw EvalError(EvalError::Kind::Generic, "unreachable expression kind");
}

inline std::vector<int64_t> eval_shape(const ExprPtr& shape, const Env& env) {
  Value v = eval_expr(shape, {}, env);
  std::vector<int64_t> dims;
  if (v.kind == Value::Kind::Int) {
    dims.push_back(v.i);
  } else if (v.kind == Value::Kind::Tuple) {
    for (const auto& c : v.tup) {
      if (c.kind != Value::Kind::Int)
        throw EvalError(EvalError::Kind::TypeMismatch,
                        "shape component is not an integer");
      dims.push_back(c.i);
    }
  } else {
    throw EvalError(EvalError::Kind::TypeMismatch,
                    "shape is not an integer or integer tuple");
  }
  int64_t total = 1;
  for (int64_t d : dims) {
    if (d < 0)
      throw EvalError(EvalError::Kind::ShapeMismatch,
                      "negative shape dimension " + std::to_string(d));
    total *= d;
  }
  if (total > kMaxGeneratedElems)
    throw EvalError(EvalError::Kind::ShapeMismatch,
                    "generated array would have " + std::to_string(total) +
                        " elements");
  return dims;
}

// Apply a scatter's updates to buf (the destination buffer) in the row-major
// order of the source elements.
inline void scatter_into(ArrayValue& buf, const ArrayValue& src,
                         const Lambda& fn, const Env& env,
                         const std::string& where) {
  for (const auto& v : src.elems) {
    if (v.kind != Value::Kind::Tuple || v.tup.size() != 2)
      throw EvalError(EvalError::Kind::TypeMismatch,
                      where + ": scatter source element " + v.to_string() +
                          " is not an (index, value) pair");
    int64_t lin = flatten_index(buf, v.tup[0], where + " destination");
    std::map<std::string, Value> locals;
    if (fn.params.size() != 2)
      throw EvalError(EvalError::Kind::Generic,
                      where + ": scatter combiner must be binary");
    locals[fn.params[0]] = buf.elems[lin];
    locals[fn.params[1]] = v.tup[1];
    buf.elems[lin] = eval_expr(fn.body, locals, env);
  }
}

// Evaluate one binding given everything it references already in env.
// Scatter is handled by the callers (copy vs in-place).
inline ArrayValue eval_plain_binding(const Binding& b, const Env& env,
                                     const OpaqueRegistry& opaques) {
  const std::string where = "binding '" + b.name + "'";
  auto arg = [&](size_t i) -> const ArrayValue& {
    return lookup(env, b.args[i]);
  };
  switch (b.kind) {
    case CombKind::Map: {
      const ArrayValue& first = arg(0);
      for (size_t i = 1; i < b.args.size(); ++i)
        if (arg(i).shape != first.shape)
          throw EvalError(EvalError::Kind::ShapeMismatch,
                          where + ": map arguments have different shapes");
      ArrayValue out;
      out.shape = first.shape;
      out.elems.reserve(first.elems.size());
      for (size_t i = 0; i < first.elems.size(); ++i) {
        std::map<std::string, Value> locals;
        for (size_t k = 0; k < b.args.size(); ++k)
          locals[b.fn.params[k]] = arg(k).elems[i];
        out.elems.push_back(eval_expr(b.fn.body, locals, env));
      }
      return out;
    }
    case CombKind::Generate: {
      ArrayValue out;
      out.shape = eval_shape(b.shape, env);
      int64_t total = out.total();
      out.elems.reserve(total);
      for (int64_t i = 0; i < total; ++i) {
        std::map<std::string, Value> locals;
        locals[b.fn.params[0]] = unflatten_index(out.shape, i);
        out.elems.push_back(eval_expr(b.fn.body, locals, env));
      }
      return out;
    }
    case CombKind::Gather: {
      const ArrayValue& is = arg(0);
      const ArrayValue& src = arg(1);
      ArrayValue out;
      out.shape = is.shape;
      out.elems.reserve(is.elems.size());
      for (const auto& idx : is.elems)
        out.elems.push_back(src.elems[flatten_index(src, idx, b.args[1])]);
      return out;
    }
    case CombKind::Fold: {
      const ArrayValue& a = arg(0);
      if (a.rank() < 1)
        throw EvalError(EvalError::Kind::ShapeMismatch,
                        where + ": fold needs rank >= 1");
      int64_t n = a.shape.back();
      if (n == 0)
        throw EvalError(EvalError::Kind::EmptyFold,
                        where + ": fold over an empty dimension");
      ArrayValue out;
      out.shape.assign(a.shape.begin(), a.shape.end() - 1);
      int64_t outer = out.total();
      out.elems.reserve(outer);
      for (int64_t o = 0; o < outer; ++o) {
        Value acc = a.elems[o * n];
        for (int64_t k = 1; k < n; ++k) {
          std::map<std::string, Value> locals;
          locals[b.fn.params[0]] = acc;
          locals[b.fn.params[1]] = a.elems[o * n + k];
          acc = eval_expr(b.fn.body, locals, env);
        }
        out.elems.push_back(acc);
      }
      return out;
    }
    case CombKind::Scanl: {
      const ArrayValue& a = arg(0);
      if (a.rank() < 1)
        throw EvalError(EvalError::Kind::ShapeMismatch,
                        where + ": scanl needs rank >= 1");
      int64_t n = a.shape.back();
      ArrayValue out;
      out.shape = a.shape;
      out.elems.resize(a.elems.size());
      int64_t outer = n == 0 ? 0 : a.total() / n;
      for (int64_t o = 0; o < outer; ++o) {
        for (int64_t k = 0; k < n; ++k) {
          if (k == 0) {
            out.elems[o * n] = a.elems[o * n];
            continue;
          }
          std::map<std::string, Value> locals;
          locals[b.fn.params[0]] = out.elems[o * n + k - 1];
          locals[b.fn.params[1]] = a.elems[o * n + k];
          out.elems[o * n + k] = eval_expr(b.fn.body, locals, env);
        }
      }
      return out;
    }
    case CombKind::Scanr: {
      const ArrayValue& a = arg(0);
      if (a.rank() < 1)
        throw EvalError(EvalError::Kind::ShapeMismatch,
                        where + ": scanr needs rank >= 1");
      int64_t n = a.shape.back();
      ArrayValue out;
      out.shape = a.shape;
      out.elems.resize(a.elems.size());
      int64_t outer = n == 0 ? 0 : a.total() / n;
      for (int64_t o = 0; o < outer; ++o) {
        for (int64_t k = n; k-- > 0;) {
          if (k == n - 1) {
            out.elems[o * n + k] = a.elems[o * n + k];
            continue;
          }
          std::map<std::string, Value> locals;
          locals[b.fn.params[0]] = a.elems[o * n + k];
          locals[b.fn.params[1]] = out.elems[o * n + k + 1];
          out.elems[o * n + k] = eval_expr(b.fn.body, locals, env);
        }
      }
      return out;
    }
    case CombKind::Force:
      return arg(0);
    case CombKind::Opaque: {
      auto it = opaques.find(b.name);
      if (it == opaques.end())
        throw EvalError(EvalError::Kind::NoOpaque,
                        where + ": no implementation registered for opaque");
      std::vector<ArrayValue> args;
      args.reserve(b.args.size());
      for (size_t i = 0; i < b.args.size(); ++i) args.push_back(arg(i));
      return it->second(args);
    }
    case CombKind::Scatter:
      throw EvalError(EvalError::Kind::Generic,
                      where + ": scatter handled by caller");
  }
  throw EvalError(EvalError::Kind::Generic, "unreachable combinator kind");
}

}  // namespace detail

// Apply a lambda to one tuple of element arguments; env supplies arrays for
// indexing and size().
inline Value eval_elem(const Lambda& fn, const std::vector<Value>& args,
                       const Env& env) {
  if (fn.params.size() != args.size())
    throw EvalError(EvalError::Kind::Generic,
                    "lambda takes " + std::to_string(fn.params.size()) +
                        " arguments, got " + std::to_string(args.size()));
  std::map<std::string, Value> locals;
  for (size_t i = 0; i < args.size(); ++i) locals[fn.params[i]] = args[i];
  return detail::eval_expr(fn.body, locals, env);
}

// Reference semantics: bindings in program order; scatter updates a copy of
// its destination, so the destination stays visible unchanged. Returns the
// full environment (params and every binding).
inline Env eval_program(const Program& p, const Env& inputs,
                        const OpaqueRegistry& opaques = {}) {
  Env env;
  for (const auto& prm : p.params) {
    auto it = inputs.find(prm.name);
    if (it == inputs.end())
      throw EvalError(EvalError::Kind::MissingInput,
                      "missing input for parameter '" + prm.name + "'");
    env[prm.name] = it->second;
  }
  for (const auto& b : p.bindings) {
    if (b.kind == CombKind::Scatter) {
      ArrayValue buf = detail::lookup(env, b.args[0]);  // copy
      detail::scatter_into(buf, detail::lookup(env, b.args[1]), b.fn, env,
                           "binding '" + b.name + "'");
      env[b.name] = std::move(buf);
    } else {
      env[b.name] = detail::eval_plain_binding(b, env, opaques);
    }
  }
  return env;
}

// Names a binding reads element data from: combinator arguments plus arrays
// indexed inside its lambda or shape expression. size()-only uses read no
// element data.
inline std::set<std::string> binding_reads(const Binding& b) {
  std::set<std::string> reads(b.args.begin(), b.args.end());
  FreeArrays fa = free_arrays(b.fn);
  reads.insert(fa.indexed.begin(), fa.indexed.end());
  if (b.shape) {
    FreeArrays fs = free_arrays_of_expr(b.shape);
    reads.insert(fs.indexed.begin(), fs.indexed.end());
  }
  return reads;
}

// Scheduled semantics: clusters execute in the given order, bindings within
// a cluster in program order, and scatter mutates its destination buffer in
// place. Every non-param binding must appear in exactly one cluster, except
// force bindings: an unscheduled force is a pure alias and runs implicitly as
// soon as its argument is available. If any binding would read a scatter
// destination in the scatter's cluster or later, evaluation fails with
// ReadAfterScatter before running anything.
inline Env eval_scheduled(const Program& p, const Env& inputs,
                          const std::vector<std::vector<std::string>>& clusters,
                          const OpaqueRegistry& opaques = {}) {
  std::map<std::string, size_t> binding_index;
  for (size_t i = 0; i < p.bindings.size(); ++i)
    binding_index[p.bindings[i].name] = i;

  std::map<std::string, size_t> cluster_of;
  for (size_t c = 0; c < clusters.size(); ++c) {
    for (const auto& n : clusters[c]) {
      if (!binding_index.count(n))
        throw EvalError(EvalError::Kind::BadSchedule,
                        "schedule names '" + n + "', which is not a binding");
      if (cluster_of.count(n))
        throw EvalError(EvalError::Kind::BadSchedule,
                        "schedule lists '" + n + "' twice");
      cluster_of[n] = c;
    }
  }
  std::vector<const Binding*> implicit_forces;
  for (const auto& b : p.bindings) {
    if (cluster_of.count(b.name)) continue;
    if (b.kind == CombKind::Force)
      implicit_forces.push_back(&b);
    else
      throw EvalError(EvalError::Kind::BadSchedule,
                      "schedule misses binding '" + b.name + "'");
  }

  // A scatter retires its destination buffer; nothing may read it from the
  // scatter's cluster onward. An implicit force copies its argument right
  // after the cluster that produced it, which is always before any scatter
  // that consumes the copy's source, so only scheduled readers are checked.
  for (const auto& s : p.bindings) {
    if (s.kind != CombKind::Scatter) continue;
    const std::string& dest = s.args[0];
    size_t cs = cluster_of.at(s.name);
    for (const auto& r : p.bindings) {
      if (r.name == s.name) continue;
      auto rc = cluster_of.find(r.name);
      if (rc == cluster_of.end()) continue;
      if (!binding_reads(r).count(dest)) continue;
      if (rc->second >= cs)
        throw EvalError(EvalError::Kind::ReadAfterScatter,
                        "binding '" + r.name + "' reads scatter destination '" +
                            dest + "' at or after the scatter '" + s.name +
                            "'");
    }
  }

  Env env;
  for (const auto& prm : p.params) {
    auto it = inputs.find(prm.name);
    if (it == inputs.end())
      throw EvalError(EvalError::Kind::MissingInput,
                      "missing input for parameter '" + prm.name + "'");
    env[prm.name] = it->second;
  }

  // Alias any pending implicit force whose argument has materialized;
  // repeat so force-of-force chains resolve in one sweep.
  std::vector<bool> force_done(implicit_forces.size(), false);
  auto run_pending_forces = [&] {
    bool progress = true;
    while (progress) {
      progress = false;
      for (size_t i = 0; i < implicit_forces.size(); ++i) {
        if (force_done[i]) continue;
        auto it = env.find(implicit_forces[i]->args[0]);
        if (it == env.end()) continue;
        env[implicit_forces[i]->name] = it->second;
        force_done[i] = true;
        progress = true;
      }
    }
  };
  run_pending_forces();

  for (const auto& cluster : clusters) {
    std::vector<std::string> members = cluster;
    std::sort(members.begin(), members.end(),
              [&](const std::string& a, const std::string& b) {
                return binding_index[a] < binding_index[b];
              });
    for (const auto& name : members) {
      const Binding& b = p.bindings[binding_index[name]];
      if (b.kind == CombKind::Scatter) {
        auto it = env.find(b.args[0]);
        if (it == env.end())
          throw EvalError(EvalError::Kind::MissingInput,
                          "array '" + b.args[0] + "' is not available");
        ArrayValue buf = std::move(it->second);
        env.erase(it);  // the destination buffer is consumed
        detail::scatter_into(buf, detail::lookup(env, b.args[1]), b.fn, env,
                             "binding '" + b.name + "'");
        env[b.name] = std::move(buf);
      } else {
        env[b.name] = detail::eval_plain_binding(b, env, opaques);
      }
    }
    run_pending_forces();
  }
  return env;
}

}  // namespace fuseplan
