// fuseplan/ilp.hpp — integer linear programs: model, LP export, solution I/O.
#pragma once

#include <cctype>
#include <cstdint>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fuseplan {

// Linear expression over model variables, plus a constant term. Coefficients
// are integers; everything in this domain is integral.
struct LinExpr {
  std::map<int, int64_t> coeffs;  // variable index -> coefficient
  int64_t constant = 0;

  LinExpr() = default;
  /*implicit*/ LinExpr(int64_t c) : constant(c) {}

  LinExpr& add(int var, int64_t coeff) {
    if (coeff == 0) return *this;
    auto [it, fresh] = coeffs.emplace(var, coeff);
    if (!fresh) {
      it->second += coeff;
      if (it->second == 0) coeffs.erase(it);
    }
    return *this;
  }
  LinExpr& operator+=(const LinExpr& o) {
    for (const auto& [v, c] : o.coeffs) add(v, c);
    constant += o.constant;
    return *this;
  }
  LinExpr& operator-=(const LinExpr& o) {
    for (const auto& [v, c] : o.coeffs) add(v, -c);
    constant -= o.constant;
    return *this;
  }
  static LinExpr term(int var, int64_t coeff) {
    LinExpr e;
    e.add(var, coeff);
    return e;
  }
};

enum class Cmp { Le, Ge, Eq };

inline const char* cmp_string(Cmp c) {
  switch (c) {
    case Cmp::Le: return "<=";
    case Cmp::Ge: return ">=";
    case Cmp::Eq: return "=";
  }
  return "?";
}

struct IlpVar {
  std::string name;
  int64_t lo = 0, hi = 0;
};

struct IlpConstraint {
  LinExpr expr;
  Cmp cmp = Cmp::Le;
  int64_t rhs = 0;
  std::string name;
};

// An integer linear program: bounded integer variables, linear constraints,
// one linear objective. Variable declaration order is part of the model: the
// solver branches through variables in this order on ties.
class IlpModel {
 public:
  // Declares a variable; names must be unique, non-empty, LP-safe
  // ([A-Za-z_][A-Za-z0-9_]*), with lo <= hi.
  int add_var(const std::string& name, int64_t lo, int64_t hi) {
    if (name.empty() ||
        !(std::isalpha(static_cast<unsigned char>(name[0])) || name[0] == '_'))
      throw std::invalid_argument("bad variable name '" + name + "'");
    for (char c : name)
      if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_')
        throw std::invalid_argument("bad variable name '" + name + "'");
    if (lo > hi)
      throw std::invalid_argument("variable '" + name + "' has empty domain [" +
                                  std::to_string(lo) + ", " +
                                  std::to_string(hi) + "]");
    if (index_.count(name))
      throw std::invalid_argument("variable '" + name + "' declared twice");
    int id = static_cast<int>(vars_.size());
    index_[name] = id;
    vars_.push_back({name, lo, hi});
    return id;
  }

  int var(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end())
      throw std::invalid_argument("no variable named '" + name + "'");
    return it->second;
  }
  bool has_var(const std::string& name) const { return index_.count(name) > 0; }

  void add_constraint(LinExpr expr, Cmp cmp, int64_t rhs,
                      std::string name = "") {
    cons_.push_back({std::move(expr), cmp, rhs, std::move(name)});
  }

  void set_objective(LinExpr expr, bool minimize = true) {
    objective_ = std::move(expr);
    minimize_ = minimize;
  }

  const std::vector<IlpVar>& vars() const { return vars_; }
  const std::vector<IlpConstraint>& constraints() const { return cons_; }
  const LinExpr& objective() const { return objective_; }
  bool minimize() const { return minimize_; }

  int64_t eval(const LinExpr& e,
               const std::map<std::string, int64_t>& assign) const {
    int64_t v = e.constant;
    for (const auto& [var, coeff] : e.coeffs) {
      auto it = assign.find(vars_[var].name);
      if (it == assign.end())
        throw std::invalid_argument("assignment misses variable '" +
                                    vars_[var].name + "'");
      v += coeff * it->second;
    }
    return v;
  }

  int64_t objective_value(const std::map<std::string, int64_t>& assign) const {
    return eval(objective_, assign);
  }

  // Exact integer feasibility of a full assignment. On failure *why names
  // the first offending bound or constraint.
  bool check_feasible(const std::map<std::string, int64_t>& assign,
                      std::string* why = nullptr) const {
    auto fail = [&](const std::string& msg) {
      if (why) *why = msg;
      return false;
    };
    for (const auto& v : vars_) {
      auto it = assign.find(v.name);
      if (it == assign.end())
        return fail("assignment misses variable '" + v.name + "'");
      if (it->second < v.lo || it->second > v.hi)
        return fail("variable '" + v.name + "' = " +
                    std::to_string(it->second) + " outside [" +
                    std::to_string(v.lo) + ", " + std::to_string(v.hi) + "]");
    }
    for (size_t i = 0; i < cons_.size(); ++i) {
      const auto& c = cons_[i];
      int64_t lhs = eval(c.expr, assign);
      bool ok = c.cmp == Cmp::Le   ? lhs <= c.rhs
                : c.cmp == Cmp::Ge ? lhs >= c.rhs
                                   : lhs == c.rhs;
      if (!ok)
        return fail("constraint " +
                    (c.name.empty() ? "#" + std::to_string(i) : c.name) +
                    " violated: lhs = " + std::to_string(lhs) + ", wants " +
                    cmp_string(c.cmp) + " " + std::to_string(c.rhs));
    }
    return true;
  }

  // CPLEX-style LP text; deterministic for a given model. The objective's
  // constant term is written as a trailing constant.
  std::string write_lp() const {
    std::ostringstream os;
    os << (minimize_ ? "Minimize" : "Maximize") << "\n obj:";
    write_expr(os, objective_);
    if (objective_.constant != 0) {
      if (objective_.coeffs.empty())
        os << " " << objective_.constant;
      else if (objective_.constant > 0)
        os << " + " << objective_.constant;
      else
        os << " - " << -objective_.constant;
    } else if (objective_.coeffs.empty()) {
      os << " 0";
    }
    os << "\nSubject To\n";
    for (size_t i = 0; i < cons_.size(); ++i) {
      const auto& c = cons_[i];
      os << " " << (c.name.empty() ? "c" + std::to_string(i) : c.name) << ":";
      write_expr(os, c.expr);
      if (c.expr.coeffs.empty()) os << " 0";
      os << " " << cmp_string(c.cmp) << " " << (c.rhs - c.expr.constant)
         << "\n";
    }
    os << "Bounds\n";
    for (const auto& v : vars_)
      os << " " << v.lo << " <= " << v.name << " <= " << v.hi << "\n";
    os << "General\n";
    for (const auto& v : vars_) os << " " << v.name << "\n";
    os << "End\n";
    return os.str();
  }

 private:
  // Writes the variable terms of an expression (not the constant); terms in
  // variable declaration order.
  void write_expr(std::ostringstream& os, const LinExpr& e) const {
    bool first = true;
    for (const auto& [var, coeff] : e.coeffs) {
      int64_t c = coeff;
      if (first) {
        os << " ";
        if (c < 0) {
          os << "- ";
          c = -c;
        }
        first = false;
      } else {
        os << (c < 0 ? " - " : " + ");
        if (c < 0) c = -c;
      }
      if (c != 1) os << c << " ";
      os << vars_[var].name;
    }
  }

  std::vector<IlpVar> vars_;
  std::map<std::string, int> index_;
  std::vector<IlpConstraint> cons_;
  LinExpr objective_;
  bool minimize_ = true;
};

// Parse a solver solution file: one "<name> <value>" pair per line, blank
// lines and '#' comments ignored. Values may be written as floats; anything
// further than 1e-6 from an integer is rejected.
inline std::map<std::string, int64_t> parse_solution(std::string_view text) {
  std::map<std::string, int64_t> out;
  std::istringstream is{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string name;
    if (!(ls >> name)) continue;  // blank
    double value;
    if (!(ls >> value))
      throw std::runtime_error("solution line " + std::to_string(lineno) +
                               ": expected \"<name> <value>\"");
    std::string extra;
    if (ls >> extra)
      throw std::runtime_error("solution line " + std::to_string(lineno) +
                               ": trailing text '" + extra + "'");
    double rounded = value < 0 ? -static_cast<double>(
                                     static_cast<int64_t>(-value + 0.5))
                               : static_cast<double>(
                                     static_cast<int64_t>(value + 0.5));
    if (value - rounded > 1e-6 || rounded - value > 1e-6)
      throw std::runtime_error("solution line " + std::to_string(lineno) +
                               ": value " + std::to_string(value) +
                               " is not integral");
    if (out.count(name))
      throw std::runtime_error("solution line " + std::to_string(lineno) +
                               ": variable '" + name + "' assigned twice");
    out[name] = static_cast<int64_t>(rounded);
  }
  return out;
}

}  // namespace fuseplan
