#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

#include "cpl/formula.hpp"

namespace cpl {

/// Syntax error, or a reference to an undeclared lifeline. Positions are
/// 1-based.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& message, std::size_t line, std::size_t column);
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

/// Parses the guard language:
///
///   formula := disj
///   disj    := conj ("||" conj)*
///   conj    := since ("&&" since)*
///   since   := unary ("S" since)?             right-associative
///   unary   := "!" unary | primary
///   primary := "(" formula ")" | "Y" "(" formula ")" | "at" "(" B "," formula ")"
///            | "P" "(" formula ")" | "P" "[" B "]" "(" formula ")" | "seen" "(" B ")"
///            | "true" | "false" | operand cmp operand
///   operand := "Here" "." x | x | "At" "[" B "]" "." x | int | string | "true" | "false"
///   cmp     := "==" | "!=" | "<" | "<=" | ">" | ">="
///
/// Every lifeline B must be in `lifelines`. `false` is read as `!true`.
Formula parse_guard(std::string_view text, std::span<const std::string> lifelines);

}  // namespace cpl
