// fuseplan/value.hpp — runtime values, arrays, environments, JSON round-trip.
#pragma once

#include <cstdint>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fuseplan/ir.hpp"

namespace fuseplan {

// Runtime failure during evaluation or input loading.
class EvalError : public std::runtime_error {
 public:
  enum class Kind {
    Generic,
    MissingInput,
    TypeMismatch,
    ShapeMismatch,
    OutOfBounds,
    EmptyFold,
    DivideByZero,
    NoOpaque,
    BadSchedule,
    ReadAfterScatter
  };
  Kind kind;
  explicit EvalError(Kind k, const std::string& msg)
      : std::runtime_error(msg), kind(k) {}
};

// One element value: a scalar or a flat tuple of scalars.
struct Value {
  enum class Kind { Int, Float, Bool, Tuple };
  Kind kind = Kind::Int;
  int64_t i = 0;
  double f = 0.0;
  bool b = false;
  std::vector<Value> tup;

  static Value of_int(int64_t v) {
    Value x;
    x.kind = Kind::Int;
    x.i = v;
    return x;
  }
  static Value of_float(double v) {
    Value x;
    x.kind = Kind::Float;
    x.f = v;
    return x;
  }
  static Value of_bool(bool v) {
    Value x;
    x.kind = Kind::Bool;
    x.b = v;
    return x;
  }
  static Value of_tuple(std::vector<Value> vs) {
    Value x;
    x.kind = Kind::Tuple;
    x.tup = std::move(vs);
    return x;
  }

  friend bool operator==(const Value& a, const Value& b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
      case Kind::Int: return a.i == b.i;
      case Kind::Float: return a.f == b.f;
      case Kind::Bool: return a.b == b.b;
      case Kind::Tuple: return a.tup == b.tup;
    }
    return false;
  }
  friend bool operator!=(const Value& a, const Value& b) { return !(a == b); }

  std::string to_string() const {
    switch (kind) {
      case Kind::Int: return std::to_string(i);
      case Kind::Float: return std::to_string(f);
      case Kind::Bool: return b ? "true" : "false";
      case Kind::Tuple: {
        std::string s = "(";
        for (size_t k = 0; k < tup.size(); ++k) {
          if (k) s += ", ";
          s += tup[k].to_string();
        }
        return s + ")";
      }
    }
    return "?";
  }
};

// Largest absolute difference between two values of the same structure;
// +infinity when the structures differ. Ints and bools must match exactly.
inline double value_distance(const Value& a, const Value& b) {
  constexpr double kFar = 1e300;
  if (a.kind != b.kind) return kFar;
  switch (a.kind) {
    case Value::Kind::Int: return a.i == b.i ? 0.0 : kFar;
    case Value::Kind::Bool: return a.b == b.b ? 0.0 : kFar;
    case Value::Kind::Float: {
      double d = a.f - b.f;
      return d < 0 ? -d : d;
    }
    case Value::Kind::Tuple: {
      if (a.tup.size() != b.tup.size()) return kFar;
      double worst = 0.0;
      for (size_t i = 0; i < a.tup.size(); ++i) {
        double d = value_distance(a.tup[i], b.tup[i]);
        if (d > worst) worst = d;
      }
      return worst;
    }
  }
  return kFar;
}

// A materialized array: shape plus row-major elements.
struct ArrayValue {
  std::vector<int64_t> shape;
  std::vector<Value> elems;

  int64_t total() const {
    int64_t n = 1;
    for (int64_t d : shape) n *= d;
    return n;
  }
  int rank() const { return static_cast<int>(shape.size()); }

  friend bool operator==(const ArrayValue& a, const ArrayValue& b) {
    return a.shape == b.shape && a.elems == b.elems;
  }
};

inline double array_distance(const ArrayValue& a, const ArrayValue& b) {
  if (a.shape != b.shape || a.elems.size() != b.elems.size()) return 1e300;
  double worst = 0.0;
  for (size_t i = 0; i < a.elems.size(); ++i) {
    double d = value_distance(a.elems[i], b.elems[i]);
    if (d > worst) worst = d;
  }
  return worst;
}

using Env = std::map<std::string, ArrayValue>;

// ---------------------------------------------------------------------------
// JSON round-trip: {"name": {"shape": [...], "elems": [...]}, ...}
// Scalars are JSON numbers/bools; tuple elements are JSON arrays.
// ---------------------------------------------------------------------------

inline nlohmann::json value_to_json(const Value& v) {
  switch (v.kind) {
    case Value::Kind::Int: return v.i;
    case Value::Kind::Float: return v.f;
    case Value::Kind::Bool: return v.b;
    case Value::Kind::Tuple: {
      nlohmann::json a = nlohmann::json::array();
      for (const auto& t : v.tup) a.push_back(value_to_json(t));
      return a;
    }
  }
  return nullptr;
}

inline Value value_from_json(const nlohmann::json& j) {
  if (j.is_boolean()) return Value::of_bool(j.get<bool>());
  if (j.is_number_integer() || j.is_number_unsigned())
    return Value::of_int(j.get<int64_t>());
  if (j.is_number_float()) return Value::of_float(j.get<double>());
  if (j.is_array()) {
    std::vector<Value> vs;
    for (const auto& e : j) vs.push_back(value_from_json(e));
    return Value::of_tuple(std::move(vs));
  }
  throw EvalError(EvalError::Kind::TypeMismatch,
                  "cannot read value from JSON " + j.dump());
}

// Reshape a loaded value to a declared element type; JSON integers are
// accepted where floats are declared.
inline Value coerce_value(const Value& v, const ElemType& t) {
  switch (t.kind) {
    case ElemType::Kind::Unknown:
      return v;
    case ElemType::Kind::Int:
      if (v.kind == Value::Kind::Int) return v;
      break;
    case ElemType::Kind::Float:
      if (v.kind == Value::Kind::Float) return v;
      if (v.kind == Value::Kind::Int)
        return Value::of_float(static_cast<double>(v.i));
      break;
    case ElemType::Kind::Bool:
      if (v.kind == Value::Kind::Bool) return v;
      break;
    case ElemType::Kind::Tuple:
      if (v.kind == Value::Kind::Tuple && v.tup.size() == t.elems.size()) {
        std::vector<Value> vs;
        vs.reserve(v.tup.size());
        for (size_t i = 0; i < v.tup.size(); ++i)
          vs.push_back(coerce_value(v.tup[i], t.elems[i]));
        return Value::of_tuple(std::move(vs));
      }
      break;
  }
  throw EvalError(EvalError::Kind::TypeMismatch,
                  "value " + v.to_string() + " does not fit element type " +
                      t.to_string());
}

inline nlohmann::json array_to_json(const ArrayValue& a) {
  nlohmann::json j;
  j["shape"] = a.shape;
  nlohmann::json elems = nlohmann::json::array();
  for (const auto& v : a.elems) elems.push_back(value_to_json(v));
  j["elems"] = std::move(elems);
  return j;
}

inline ArrayValue array_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("shape") || !j.contains("elems"))
    throw EvalError(EvalError::Kind::TypeMismatch,
                    "array JSON needs \"shape\" and \"elems\"");
  ArrayValue a;
  for (const auto& d : j.at("shape")) a.shape.push_back(d.get<int64_t>());
  for (const auto& e : j.at("elems")) a.elems.push_back(value_from_json(e));
  if (a.total() != static_cast<int64_t>(a.elems.size()) ||
      [&] {
        for (int64_t d : a.shape)
          if (d < 0) return true;
        return false;
      }())
    throw EvalError(EvalError::Kind::ShapeMismatch,
                    "array has " + std::to_string(a.elems.size()) +
                        " elements but shape wants " +
                        std::to_string(a.total()));
  return a;
}

inline nlohmann::json env_to_json(const Env& env) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [name, a] : env) j[name] = array_to_json(a);
  return j;
}

inline Env env_from_json(const nlohmann::json& j) {
  if (!j.is_object())
    throw EvalError(EvalError::Kind::TypeMismatch,
                    "environment JSON must be an object");
  Env env;
  for (auto it = j.begin(); it != j.end(); ++it)
    env[it.key()] = array_from_json(it.value());
  return env;
}

// Load program inputs: every parameter must be present with the declared
// rank, and elements are coerced to the declared element type.
inline Env load_inputs(const nlohmann::json& j, const Program& p) {
  Env raw = env_from_json(j);
  Env env;
  for (const auto& prm : p.params) {
    auto it = raw.find(prm.name);
    if (it == raw.end())
      throw EvalError(EvalError::Kind::MissingInput,
                      "missing input for parameter '" + prm.name + "'");
    ArrayValue a = it->second;
    if (a.rank() != prm.type.rank)
      throw EvalError(EvalError::Kind::ShapeMismatch,
                      "input '" + prm.name + "' has rank " +
                          std::to_string(a.rank()) + ", declared " +
                          std::to_string(prm.type.rank));
    for (auto& v : a.elems) v = coerce_value(v, prm.type.elem);
    env[prm.name] = std::move(a);
  }
  return env;
}

}  // namespace fuseplan
