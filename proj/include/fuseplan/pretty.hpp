// fuseplan/pretty.hpp — program printer; output reparses to the same AST.
#pragma once

#include <sstream>
#include <string>

#include "fuseplan/ir.hpp"

namespace fuseplan {

namespace detail {

// Precedence levels used for minimal parenthesization: 0 if/comparison,
// 1 additive, 2 multiplicative, 3 projection, 4 atom.
inline int expr_level(const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::If: return 0;
    case Expr::Kind::Bin:
      switch (e.op) {
        case BinOp::Eq:
        case BinOp::Lt:
        case BinOp::Le: return 0;
        case BinOp::Add:
        case BinOp::Sub: return 1;
        case BinOp::Mul:
        case BinOp::Div: return 2;
        case BinOp::Min:
        case BinOp::Max: return 4;  // printed as calls
      }
      return 0;
    case Expr::Kind::Proj: return 3;
    default: return 4;  // literals, vars, tuples, calls, indexing
  }
}

inline void print_expr(std::ostream& os, const ExprPtr& e, int required);

inline void print_expr_raw(std::ostream& os, const ExprPtr& e) {
  switch (e->kind) {
    case Expr::Kind::IntLit:
      os << e->int_val;
      break;
    case Expr::Kind::FloatLit: {
      std::ostringstream tmp;
      tmp << e->float_val;
      std::string s = tmp.str();
      os << s;
      if (s.find('.') == std::string::npos &&
          s.find('e') == std::string::npos &&
          s.find("inf") == std::string::npos &&
          s.find("nan") == std::string::npos)
        os << ".0";
      break;
    }
    case Expr::Kind::BoolLit:
      os << (e->bool_val ? "true" : "false");
      break;
    case Expr::Kind::Var:
      os << e->name;
      break;
    case Expr::Kind::Bin:
      if (e->op == BinOp::Min || e->op == BinOp::Max) {
        os << binop_name(e->op) << "(";
        print_expr(os, e->args[0], 0);
        os << ", ";
        print_expr(os, e->args[1], 0);
        os << ")";
      } else {
        int mine = expr_level(*e);
        // Comparisons are non-associative: both operands need to sit at
        // additive level or be parenthesized.
        int left = mine == 0 ? 1 : mine;
        print_expr(os, e->args[0], left);
        os << " " << binop_name(e->op) << " ";
        print_expr(os, e->args[1], mine + 1);
      }
      break;
    case Expr::Kind::If:
      os << "if ";
      print_expr(os, e->args[0], 0);
      os << " then ";
      print_expr(os, e->args[1], 0);
      os << " else ";
      print_expr(os, e->args[2], 0);
      break;
    case Expr::Kind::Tuple:
      os << "(";
      for (size_t i = 0; i < e->args.size(); ++i) {
        if (i) os << ", ";
        print_expr(os, e->args[i], 0);
      }
      os << ")";
      break;
    case Expr::Kind::Proj:
      print_expr(os, e->args[0], 3);
      os << "." << e->index;
      break;
    case Expr::Kind::Index:
      os << e->name << " ! ";
      print_expr(os, e->args[0], 4);
      break;
    case Expr::Kind::Size:
      os << "size(" << e->name << ")";
      break;
  }
}

inline void print_expr(std::ostream& os, const ExprPtr& e, int required) {
  // Comparisons are non-associative, so a comparison operand that is itself
  // a comparison needs parentheses even at the same level.
  bool parens = expr_level(*e) < required;
  if (parens) os << "(";
  print_expr_raw(os, e);
  if (parens) os << ")";
}

inline void print_type(std::ostream& os, const ArrayType& t) {
  os << "[" << t.elem.to_string() << t.rank << "]";
}

inline void print_lambda(std::ostream& os, const Lambda& fn) {
  os << "\\";
  for (const auto& p : fn.params) os << p << " ";
  os << "-> ";
  print_expr(os, fn.body, 0);
}

}  // namespace detail

inline std::string pretty_print(const Program& p) {
  std::ostringstream os;
  os << "def " << p.name << "(";
  for (size_t i = 0; i < p.params.size(); ++i) {
    if (i) os << ", ";
    os << p.params[i].name << ": ";
    detail::print_type(os, p.params[i].type);
  }
  os << ") {\n";
  for (const auto& b : p.bindings) {
    os << "  " << b.name << " = " << comb_name(b.kind) << "(";
    switch (b.kind) {
      case CombKind::Map:
        detail::print_lambda(os, b.fn);
        for (const auto& a : b.args) os << ", " << a;
        break;
      case CombKind::Generate:
        detail::print_expr(os, b.shape, 0);
        os << ", ";
        detail::print_lambda(os, b.fn);
        break;
      case CombKind::Gather:
        os << b.args[0] << ", " << b.args[1];
        break;
      case CombKind::Scatter:
        detail::print_lambda(os, b.fn);
        os << ", " << b.args[0] << ", " << b.args[1];
        break;
      case CombKind::Fold:
      case CombKind::Scanl:
      case CombKind::Scanr:
        detail::print_lambda(os, b.fn);
        os << ", " << b.args[0];
        break;
      case CombKind::Force:
        os << b.args[0];
        break;
      case CombKind::Opaque:
        for (size_t i = 0; i < b.args.size(); ++i) {
          if (i) os << ", ";
          os << b.args[i];
        }
        break;
    }
    os << ")\n";
  }
  os << "  return ";
  for (size_t i = 0; i < p.returns.size(); ++i) {
    if (i) os << ", ";
    os << p.returns[i];
  }
  os << "\n}\n";
  return os.str();
}

}  // namespace fuseplan
