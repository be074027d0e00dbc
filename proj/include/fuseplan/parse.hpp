// fuseplan/parse.hpp — lexer and recursive-descent parser for the IR.
#pragma once

#include <cctype>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fuseplan/ir.hpp"

namespace fuseplan {

// Parse failure with source position; what() is "line:col: message".
class ParseError : public std::runtime_error {
 public:
  int line, col;
  ParseError(int l, int c, const std::string& msg)
      : std::runtime_error(std::to_string(l) + ":" + std::to_string(c) + ": " +
                           msg),
        line(l),
        col(c) {}
};

namespace detail {

enum class Tok {
  Ident, Int, Float,
  LParen, RParen, LBrace, RBrace, LBracket, RBracket,
  Comma, Colon, Assign, Dot, Bang, Backslash, Arrow,
  Plus, Minus, Star, Slash, EqEq, Lt, Le,
  Eof
};

struct Token {
  Tok kind;
  std::string text;
  int64_t int_val = 0;
  double float_val = 0.0;
  int line = 1, col = 1;
};

inline std::vector<Token> lex(std::string_view src) {
  std::vector<Token> out;
  size_t i = 0;
  int line = 1, col = 1;
  auto advance = [&](size_t n) {
    for (size_t k = 0; k < n; ++k) {
      if (i + k < src.size() && src[i + k] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    i += n;
  };
  while (i < src.size()) {
    char c = src[i];
    if (c == '#') {  // comment to end of line
      while (i < src.size() && src[i] != '\n') advance(1);
      continue;
    }
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      advance(1);
      continue;
    }
    Token t;
    t.line = line;
    t.col = col;
    if (std::isdigit(static_cast<unsigned char>(c))) {
      size_t j = i;
      while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j])))
        ++j;
      if (j + 1 < src.size() && src[j] == '.' &&
          std::isdigit(static_cast<unsigned char>(src[j + 1]))) {
        ++j;
        while (j < src.size() &&
               std::isdigit(static_cast<unsigned char>(src[j])))
          ++j;
        t.kind = Tok::Float;
        t.text = std::string(src.substr(i, j - i));
        t.float_val = std::strtod(t.text.c_str(), nullptr);
      } else {
        t.kind = Tok::Int;
        t.text = std::string(src.substr(i, j - i));
        t.int_val = std::strtoll(t.text.c_str(), nullptr, 10);
      }
      advance(j - i);
      out.push_back(std::move(t));
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t j = i;
      while (j < src.size() &&
             (std::isalnum(static_cast<unsigned char>(src[j])) ||
              src[j] == '_'))
        ++j;
      t.kind = Tok::Ident;
      t.text = std::string(src.substr(i, j - i));
      advance(j - i);
      out.push_back(std::move(t));
      continue;
    }
    auto two = [&](char a, char b) {
      return c == a && i + 1 < src.size() && src[i + 1] == b;
    };
    if (two('-', '>')) {
      t.kind = Tok::Arrow;
      advance(2);
    } else if (two('=', '=')) {
      t.kind = Tok::EqEq;
      advance(2);
    } else if (two('<', '=')) {
      t.kind = Tok::Le;
      advance(2);
    } else {
      switch (c) {
        case '(': t.kind = Tok::LParen; break;
        case ')': t.kind = Tok::RParen; break;
        case '{': t.kind = Tok::LBrace; break;
        case '}': t.kind = Tok::RBrace; break;
        case '[': t.kind = Tok::LBracket; break;
        case ']': t.kind = Tok::RBracket; break;
        case ',': t.kind = Tok::Comma; break;
        case ':': t.kind = Tok::Colon; break;
        case '=': t.kind = Tok::Assign; break;
        case '.': t.kind = Tok::Dot; break;
        case '!': t.kind = Tok::Bang; break;
        case '\\': t.kind = Tok::Backslash; break;
        case '+': t.kind = Tok::Plus; break;
        case '-': t.kind = Tok::Minus; break;
        case '*': t.kind = Tok::Star; break;
        case '/': t.kind = Tok::Slash; break;
        case '<': t.kind = Tok::Lt; break;
        default:
          throw ParseError(line, col,
                           std::string("unexpected character '") + c + "'");
      }
      advance(1);
    }
    out.push_back(std::move(t));
  }
  Token eof;
  eof.kind = Tok::Eof;
  eof.line = line;
  eof.col = col;
  out.push_back(eof);
  return out;
}

inline const char* tok_name(Tok k) {
  switch (k) {
    case Tok::Ident: return "identifier";
    case Tok::Int: return "integer";
    case Tok::Float: return "float";
    case Tok::LParen: return "'('";
    case Tok::RParen: return "')'";
    case Tok::LBrace: return "'{'";
    case Tok::RBrace: return "'}'";
    case Tok::LBracket: return "'['";
    case Tok::RBracket: return "']'";
    case Tok::Comma: return "','";
    case Tok::Colon: return "':'";
    case Tok::Assign: return "'='";
    case Tok::Dot: return "'.'";
    case Tok::Bang: return "'!'";
    case Tok::Backslash: return "'\\'";
    case Tok::Arrow: return "'->'";
    case Tok::Plus: return "'+'";
    case Tok::Minus: return "'-'";
    case Tok::Star: return "'*'";
    case Tok::Slash: return "'/'";
    case Tok::EqEq: return "'=='";
    case Tok::Lt: return "'<'";
    case Tok::Le: return "'<='";
    case Tok::Eof: return "end of input";
  }
  return "?";
}

class Parser {
 public:
  explicit Parser(std::string_view src) : toks_(lex(src)) {}

  Program parse() {
    Program p;
    expect_word("def");
    p.name = expect_ident("program name");
    expect(Tok::LParen);
    if (!at(Tok::RParen)) {
      p.params.push_back(parse_param());
      while (accept(Tok::Comma)) p.params.push_back(parse_param());
    }
    expect(Tok::RParen);
    expect(Tok::LBrace);
    while (!(at(Tok::Ident) && peek().text == "return")) {
      if (at(Tok::Eof) || at(Tok::RBrace))
        throw err("expected a binding or 'return'");
      p.bindings.push_back(parse_binding());
    }
    expect_word("return");
    p.returns.push_back(expect_ident("return value"));
    while (accept(Tok::Comma)) p.returns.push_back(expect_ident("return value"));
    expect(Tok::RBrace);
    if (!at(Tok::Eof)) throw err("trailing input after program");
    return p;
  }

 private:
  std::vector<Token> toks_;
  size_t pos_ = 0;

  const Token& peek(size_t k = 0) const {
    size_t i = pos_ + k;
    return i < toks_.size() ? toks_[i] : toks_.back();
  }
  bool at(Tok k) const { return peek().kind == k; }
  const Token& next() { return toks_[pos_++]; }
  bool accept(Tok k) {
    if (at(k)) {
      ++pos_;
      return true;
    }
    return false;
  }
  ParseError err(const std::string& msg) const {
    return ParseError(peek().line, peek().col, msg);
  }
  const Token& expect(Tok k) {
    if (!at(k))
      throw err(std::string("expected ") + tok_name(k) + ", found " +
                describe(peek()));
    return next();
  }
  static std::string describe(const Token& t) {
    if (t.kind == Tok::Ident) return "'" + t.text + "'";
    if (t.kind == Tok::Int || t.kind == Tok::Float) return "'" + t.text + "'";
    return tok_name(t.kind);
  }
  std::string expect_ident(const std::string& what) {
    if (!at(Tok::Ident))
      throw err("expected " + what + ", found " + describe(peek()));
    return next().text;
  }
  void expect_word(const std::string& w) {
    if (!(at(Tok::Ident) && peek().text == w))
      throw err("expected '" + w + "', found " + describe(peek()));
    ++pos_;
  }

  Param parse_param() {
    Param prm;
    prm.name = expect_ident("parameter name");
    expect(Tok::Colon);
    prm.type = parse_type();
    return prm;
  }

  // type := "[" elem INT "]"; a scalar elem and its rank may lex as one
  // identifier ("f2"), so split that case by hand.
  ArrayType parse_type() {
    expect(Tok::LBracket);
    ArrayType t;
    if (at(Tok::LParen)) {
      next();
      std::vector<ElemType> elems;
      elems.push_back(parse_scalar_elem());
      while (accept(Tok::Comma)) elems.push_back(parse_scalar_elem());
      expect(Tok::RParen);
      t.elem = ElemType::tuple(std::move(elems));
      if (!at(Tok::Int)) throw err("expected rank after element type");
      t.rank = static_cast<int>(next().int_val);
    } else if (at(Tok::Ident)) {
      const Token& tk = next();
      const std::string& s = tk.text;
      t.elem = scalar_for(s[0], tk);
      if (s.size() == 1) {
        if (!at(Tok::Int)) throw err("expected rank after element type");
        t.rank = static_cast<int>(next().int_val);
      } else {
        for (size_t i = 1; i < s.size(); ++i)
          if (!std::isdigit(static_cast<unsigned char>(s[i])))
            throw ParseError(tk.line, tk.col, "bad array type '" + s + "'");
        t.rank = static_cast<int>(std::strtol(s.c_str() + 1, nullptr, 10));
      }
    } else {
      throw err("expected element type");
    }
    if (t.rank < 1) throw err("array rank must be at least 1");
    expect(Tok::RBracket);
    return t;
  }

  ElemType parse_scalar_elem() {
    if (!at(Tok::Ident)) throw err("expected element type");
    const Token& tk = next();
    if (tk.text.size() != 1)
      throw ParseError(tk.line, tk.col, "bad element type '" + tk.text + "'");
    return scalar_for(tk.text[0], tk);
  }

  ElemType scalar_for(char c, const Token& tk) {
    switch (c) {
      case 'f': return ElemType::floating();
      case 'i': return ElemType::integer();
      case 'b': return ElemType::boolean();
      default:
        throw ParseError(tk.line, tk.col,
                         std::string("bad element type '") + c + "'");
    }
  }

  Binding parse_binding() {
    Binding b;
    b.line = peek().line;
    b.col = peek().col;
    b.name = expect_ident("binding name");
    expect(Tok::Assign);
    const Token& head = peek();
    std::string comb = expect_ident("combinator");
    expect(Tok::LParen);
    if (comb == "map" || comb == "zipWith" || comb == "zipWith3") {
      b.kind = CombKind::Map;
      b.fn = parse_lambda();
      expect(Tok::Comma);
      b.args.push_back(expect_ident("array argument"));
      while (accept(Tok::Comma))
        b.args.push_back(expect_ident("array argument"));
      size_t want = comb == "map" ? b.args.size() : (comb == "zipWith" ? 2 : 3);
      if (b.args.size() != want)
        throw ParseError(head.line, head.col,
                         comb + " takes " + std::to_string(want) + " arrays");
    } else if (comb == "generate") {
      b.kind = CombKind::Generate;
      b.shape = parse_expr();
      expect(Tok::Comma);
      b.fn = parse_lambda();
    } else if (comb == "gather") {
      b.kind = CombKind::Gather;
      b.args.push_back(expect_ident("index array"));
      expect(Tok::Comma);
      b.args.push_back(expect_ident("source array"));
    } else if (comb == "scatter") {
      b.kind = CombKind::Scatter;
      b.fn = parse_lambda();
      expect(Tok::Comma);
      b.args.push_back(expect_ident("destination array"));
      expect(Tok::Comma);
      b.args.push_back(expect_ident("source array"));
    } else if (comb == "fold" || comb == "scanl" || comb == "scanr") {
      b.kind = comb == "fold" ? CombKind::Fold
               : comb == "scanl" ? CombKind::Scanl
                                 : CombKind::Scanr;
      b.fn = parse_lambda();
      expect(Tok::Comma);
      b.args.push_back(expect_ident("array argument"));
    } else if (comb == "force") {
      b.kind = CombKind::Force;
      b.args.push_back(expect_ident("array argument"));
    } else if (comb == "opaque") {
      b.kind = CombKind::Opaque;
      b.args.push_back(expect_ident("array argument"));
      while (accept(Tok::Comma))
        b.args.push_back(expect_ident("array argument"));
    } else {
      throw ParseError(head.line, head.col,
                       "unknown combinator '" + comb + "'");
    }
    expect(Tok::RParen);
    return b;
  }

  Lambda parse_lambda() {
    expect(Tok::Backslash);
    Lambda fn;
    fn.params.push_back(expect_ident("lambda parameter"));
    while (at(Tok::Ident)) fn.params.push_back(next().text);
    expect(Tok::Arrow);
    fn.body = parse_expr();
    return fn;
  }

  // expr := if-then-else | comparison; comparison is non-associative.
  ExprPtr parse_expr() {
    if (at(Tok::Ident) && peek().text == "if") {
      next();
      ExprPtr c = parse_expr();
      expect_word("then");
      ExprPtr t = parse_expr();
      expect_word("else");
      ExprPtr f = parse_expr();
      return locate(Expr::make_if(c, t, f));
    }
    ExprPtr lhs = parse_add();
    if (at(Tok::EqEq) || at(Tok::Lt) || at(Tok::Le)) {
      BinOp op = at(Tok::EqEq) ? BinOp::Eq : at(Tok::Lt) ? BinOp::Lt
                                                         : BinOp::Le;
      next();
      ExprPtr rhs = parse_add();
      return locate(Expr::make_bin(op, lhs, rhs));
    }
    return lhs;
  }

  ExprPtr parse_add() {
    ExprPtr e = parse_mul();
    while (at(Tok::Plus) || at(Tok::Minus)) {
      BinOp op = at(Tok::Plus) ? BinOp::Add : BinOp::Sub;
      next();
      e = locate(Expr::make_bin(op, e, parse_mul()));
    }
    return e;
  }

  ExprPtr parse_mul() {
    ExprPtr e = parse_postfix();
    while (at(Tok::Star) || at(Tok::Slash)) {
      BinOp op = at(Tok::Star) ? BinOp::Mul : BinOp::Div;
      next();
      e = locate(Expr::make_bin(op, e, parse_postfix()));
    }
    return e;
  }

  // Projections apply after indexing: xs ! i.0 is (xs!i).0.
  ExprPtr parse_postfix() {
    ExprPtr e = parse_atom();
    while (at(Tok::Dot)) {
      next();
      if (!at(Tok::Int)) throw err("expected component number after '.'");
      e = locate(Expr::make_proj(e, static_cast<int>(next().int_val)));
    }
    return e;
  }

  ExprPtr parse_atom() {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::Int:
        next();
        return locate(Expr::make_int(t.int_val), t);
      case Tok::Float:
        next();
        return locate(Expr::make_float(t.float_val), t);
      case Tok::Minus: {  // negative literal only
        next();
        const Token& n = peek();
        if (n.kind == Tok::Int) {
          next();
          return locate(Expr::make_int(-n.int_val), t);
        }
        if (n.kind == Tok::Float) {
          next();
          return locate(Expr::make_float(-n.float_val), t);
        }
        throw err("'-' must be followed by a number here");
      }
      case Tok::LParen: {
        next();
        ExprPtr first = parse_expr();
        if (accept(Tok::Comma)) {
          std::vector<ExprPtr> xs{first};
          xs.push_back(parse_expr());
          while (accept(Tok::Comma)) xs.push_back(parse_expr());
          expect(Tok::RParen);
          return locate(Expr::make_tuple(std::move(xs)), t);
        }
        expect(Tok::RParen);
        return first;
      }
      case Tok::Ident: {
        if (t.text == "true") {
          next();
          return locate(Expr::make_bool(true), t);
        }
        if (t.text == "false") {
          next();
          return locate(Expr::make_bool(false), t);
        }
        if ((t.text == "min" || t.text == "max") &&
            peek(1).kind == Tok::LParen) {
          BinOp op = t.text == "min" ? BinOp::Min : BinOp::Max;
          next();
          next();
          ExprPtr a = parse_expr();
          expect(Tok::Comma);
          ExprPtr b = parse_expr();
          expect(Tok::RParen);
          return locate(Expr::make_bin(op, a, b), t);
        }
        if (t.text == "size" && peek(1).kind == Tok::LParen) {
          next();
          next();
          std::string arr = expect_ident("array name");
          expect(Tok::RParen);
          return locate(Expr::make_size(arr), t);
        }
        next();
        if (at(Tok::Bang)) {
          next();
          // The index operand binds as tightly as possible; parenthesize
          // anything larger.
          ExprPtr idx = parse_atom();
          return locate(Expr::make_index(t.text, idx), t);
        }
        return locate(Expr::make_var(t.text), t);
      }
      default:
        throw err(std::string("expected an expression, found ") +
                  describe(t));
    }
  }

  ExprPtr locate(ExprPtr e) { return locate(std::move(e), peek()); }
  ExprPtr locate(ExprPtr e, const Token& t) {
    auto m = std::const_pointer_cast<Expr>(e);
    m->line = t.line;
    m->col = t.col;
    return e;
  }
};

}  // namespace detail

// Parse a full program; throws ParseError with line/column on failure.
inline Program parse_program(std::string_view src) {
  return detail::Parser(src).parse();
}

}  // namespace fuseplan
