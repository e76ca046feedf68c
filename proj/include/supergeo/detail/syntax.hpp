#pragma once

// Untyped syntax tree shared by the scalar and superfunction parsers. The
// superfunction grammar extends the scalar one with generator monomials
// `e[a,b,...]`; lowering decides what each front end accepts.

#include <cstddef>
#include <memory>
#include <string_view>
#include <vector>

#include "supergeo/grassmann.hpp"
#include "supergeo/scalar_expr.hpp"

namespace supergeo::detail {

struct Syntax {
  enum class Kind { kNumber, kVar, kGenerator, kBinary, kPow, kNeg, kFunc };

  Kind kind;
  std::size_t position;
  double number = 0.0;
  int var = 0;
  MultiIndex generators;
  ExprKind op = ExprKind::kAdd;  // kBinary
  int exponent = 0;              // kPow
  Function function = Function::kSin;
  std::vector<std::unique_ptr<Syntax>> children;
};

/// Parses the full grammar. Generator atoms are rejected unless q > 0, in
/// which case their labels must lie in 1..q.
std::unique_ptr<Syntax> parse_syntax(std::string_view src, int n, int q);

}  // namespace supergeo::detail
