#include "cpl/parser.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <optional>
#include <vector>

namespace cpl {

ParseError::ParseError(const std::string& message, std::size_t line, std::size_t column)
    : std::runtime_error(std::to_string(line) + ":" + std::to_string(column) + ": " + message),
      line_(line),
      column_(column) {}

namespace {

enum class Tok { ident, integer, string, lparen, rparen, lbracket, rbracket, comma, dot, bang, and_and, or_or, cmp, end };

struct Token {
  Tok kind;
  std::string text;  // identifier name, decoded string, or integer digits
  CompareOp cmp = CompareOp::eq;
  std::size_t line = 1;
  std::size_t column = 1;
};

std::vector<Token> lex(std::string_view src) {
  std::vector<Token> out;
  std::size_t i = 0, line = 1, col = 1;
  auto advance = [&](std::size_t n = 1) {
    for (std::size_t k = 0; k < n; ++k, ++i) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };
  auto is_ident_start = [](char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; };
  auto is_ident = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; };

  while (i < src.size()) {
    char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance();
      continue;
    }
    Token t{Tok::end, {}, CompareOp::eq, line, col};
    auto two = src.substr(i, 2);
    if (is_ident_start(c)) {
      std::size_t j = i;
      while (j < src.size() && is_ident(src[j])) ++j;
      t.kind = Tok::ident;
      t.text = std::string(src.substr(i, j - i));
      advance(j - i);
    } else if (std::isdigit(static_cast<unsigned char>(c)) ||
               (c == '-' && i + 1 < src.size() && std::isdigit(static_cast<unsigned char>(src[i + 1])))) {
      std::size_t j = i + 1;
      while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      t.kind = Tok::integer;
      t.text = std::string(src.substr(i, j - i));
      advance(j - i);
    } else if (c == '"') {
      std::string s;
      advance();
      bool closed = false;
      while (i < src.size()) {
        char d = src[i];
        if (d == '"') {
          advance();
          closed = true;
          break;
        }
        if (d == '\\') {
          if (i + 1 >= src.size()) break;
          char e = src[i + 1];
          switch (e) {
            case '"': s += '"'; break;
            case '\\': s += '\\'; break;
            case 'n': s += '\n'; break;
            case 't': s += '\t'; break;
            default: throw ParseError(std::string("unknown escape \\") + e, line, col);
          }
          advance(2);
          continue;
        }
        s += d;
        advance();
      }
      if (!closed) throw ParseError("unterminated string literal", t.line, t.column);
      t.kind = Tok::string;
      t.text = std::move(s);
    } else if (two == "&&") {
      t.kind = Tok::and_and;
      advance(2);
    } else if (two == "||") {
      t.kind = Tok::or_or;
      advance(2);
    } else if (two == "==" || two == "!=" || two == "<=" || two == ">=") {
      t.kind = Tok::cmp;
      t.cmp = two == "==" ? CompareOp::eq : two == "!=" ? CompareOp::ne : two == "<=" ? CompareOp::le : CompareOp::ge;
      advance(2);
    } else if (c == '<' || c == '>') {
      t.kind = Tok::cmp;
      t.cmp = c == '<' ? CompareOp::lt : CompareOp::gt;
      advance();
    } else {
      switch (c) {
        case '(': t.kind = Tok::lparen; break;
        case ')': t.kind = Tok::rparen; break;
        case '[': t.kind = Tok::lbracket; break;
        case ']': t.kind = Tok::rbracket; break;
        case ',': t.kind = Tok::comma; break;
        case '.': t.kind = Tok::dot; break;
        case '!': t.kind = Tok::bang; break;
        default: throw ParseError(std::string("unexpected character '") + c + "'", line, col);
      }
      advance();
    }
    out.push_back(std::move(t));
  }
  out.push_back(Token{Tok::end, {}, CompareOp::eq, line, col});
  return out;
}

class Parser {
 public:
  Parser(std::vector<Token> toks, std::span<const std::string> lifelines)
      : toks_(std::move(toks)), lifelines_(lifelines) {}

  Formula parse() {
    Formula f = disjunction();
    if (peek().kind != Tok::end) fail("unexpected trailing input", peek());
    return f;
  }

 private:
  const Token& peek(std::size_t ahead = 0) const {
    return toks_[std::min(pos_ + ahead, toks_.size() - 1)];
  }
  const Token& next() {
    const Token& t = peek();
    if (pos_ < toks_.size() - 1) ++pos_;
    return t;
  }
  bool peek_ident(std::string_view name, std::size_t ahead = 0) const {
    return peek(ahead).kind == Tok::ident && peek(ahead).text == name;
  }
  [[noreturn]] void fail(const std::string& msg, const Token& at) const {
    throw ParseError(msg, at.line, at.column);
  }
  const Token& expect(Tok kind, const char* what) {
    if (peek().kind != kind) fail(std::string("expected ") + what, peek());
    return next();
  }

  std::string lifeline() {
    const Token& t = expect(Tok::ident, "lifeline name");
    if (std::find(lifelines_.begin(), lifelines_.end(), t.text) == lifelines_.end())
      fail("unknown lifeline '" + t.text + "'", t);
    return t.text;
  }

  Formula disjunction() {
    Formula f = conjunction();
    while (peek().kind == Tok::or_or) {
      next();
      f = disj(f, conjunction());
    }
    return f;
  }

  Formula conjunction() {
    Formula f = since_chain();
    while (peek().kind == Tok::and_and) {
      next();
      f = conj(f, since_chain());
    }
    return f;
  }

  Formula since_chain() {
    Formula lhs = unary();
    if (peek_ident("S")) {
      next();
      return since(lhs, since_chain());
    }
    return lhs;
  }

  Formula unary() {
    if (peek().kind == Tok::bang) {
      next();
      return negation(unary());
    }
    return primary();
  }

  Formula primary() {
    const Token& t = peek();
    if (t.kind == Tok::lparen) {
      next();
      Formula f = disjunction();
      expect(Tok::rparen, "')'");
      return f;
    }
    if (t.kind == Tok::ident) {
      const bool call = peek(1).kind == Tok::lparen;
      if (t.text == "Y" && call) {
        next();
        next();
        Formula f = disjunction();
        expect(Tok::rparen, "')'");
        return yesterday(f);
      }
      if (t.text == "at" && call) {
        next();
        next();
        std::string b = lifeline();
        expect(Tok::comma, "','");
        Formula f = disjunction();
        expect(Tok::rparen, "')'");
        return at(std::move(b), f);
      }
      if (t.text == "P" && call) {
        next();
        next();
        Formula f = disjunction();
        expect(Tok::rparen, "')'");
        return past_any(f);
      }
      if (t.text == "P" && peek(1).kind == Tok::lbracket) {
        next();
        next();
        std::string b = lifeline();
        expect(Tok::rbracket, "']'");
        expect(Tok::lparen, "'('");
        Formula f = disjunction();
        expect(Tok::rparen, "')'");
        return past_at(std::move(b), f);
      }
      if (t.text == "seen" && call) {
        next();
        next();
        std::string b = lifeline();
        expect(Tok::rparen, "')'");
        return seen(std::move(b));
      }
      if ((t.text == "true" || t.text == "false") && peek(1).kind != Tok::cmp) {
        next();
        return t.text == "true" ? truth() : negation(truth());
      }
    }
    return atom();
  }

  Formula atom() {
    const Token& start = peek();
    Operand lhs = operand();
    if (peek().kind != Tok::cmp) fail("expected comparison operator", peek());
    CompareOp op = next().cmp;
    Operand rhs = operand();
    if (!is_term(lhs) && !is_term(rhs)) fail("comparison between two literals", start);
    return make_atom(op, std::move(lhs), std::move(rhs));
  }

  Operand operand() {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::integer: {
        next();
        std::int64_t v = 0;
        auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
        if (ec != std::errc{} || p != t.text.data() + t.text.size())
          fail("integer literal out of range", t);
        return int_value(v);
      }
      case Tok::string:
        next();
        return str_value(t.text);
      case Tok::ident:
        break;
      default:
        fail("expected a term or literal", t);
    }
    if (t.text == "true" || t.text == "false") {
      next();
      return bool_value(t.text == "true");
    }
    if (t.text == "Here" && peek(1).kind == Tok::dot) {
      next();
      next();
      return LocalVar{expect(Tok::ident, "variable name").text};
    }
    if (t.text == "At" && peek(1).kind == Tok::lbracket) {
      next();
      next();
      std::string b = lifeline();
      expect(Tok::rbracket, "']'");
      expect(Tok::dot, "'.'");
      return AtField{std::move(b), expect(Tok::ident, "variable name").text};
    }
    next();
    return LocalVar{t.text};
  }

  std::vector<Token> toks_;
  std::span<const std::string> lifelines_;
  std::size_t pos_ = 0;
};

}  // namespace

Formula parse_guard(std::string_view text, std::span<const std::string> lifelines) {
  return Parser(lex(text), lifelines).parse();
}

}  // namespace cpl
