#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "gatelab/rng.hpp"

namespace gatelab {

// Prefix-expression language over two integer variables:
//
//   expr ::= INT | x | y
//          | NEG(expr) | ABS(expr)
//          | ADD(e,e) | SUB(e,e) | MUL(e,e) | DIV(e,e) | MOD(e,e)
//          | MAX(e,e) | MIN(e,e)
//          | ITE(cmp, expr, expr)
//   cmp  ::= GT(e,e) | LT(e,e) | EQ(e,e) | GEQ(e,e) | LEQ(e,e)
//
// Comparisons are only legal as the first child of ITE. DIV is floor
// division, MOD its remainder (sign follows the divisor); both are rejected
// (evaluate to nothing) when the divisor is zero. Arithmetic is exact —
// values never wrap.

using Value = boost::multiprecision::cpp_int;

// Empty optional is the rejection result: it arises only from DIV or MOD
// with a zero divisor on the evaluated path.
using EvalResult = std::optional<Value>;

enum class Op {
  Lit, Var,
  Neg, Abs,
  Add, Sub, Mul, Div, Mod, Max, Min,
  Ite,
  Gt, Lt, Eq, Geq, Leq,
};

constexpr bool is_comparison(Op op) { return op >= Op::Gt && op <= Op::Leq; }
constexpr bool is_unary(Op op) { return op == Op::Neg || op == Op::Abs; }
constexpr bool is_binary_arith(Op op) { return op >= Op::Add && op <= Op::Min; }
constexpr bool is_leaf(Op op) { return op == Op::Lit || op == Op::Var; }

std::string_view op_name(Op op);

struct Expr {
  Op op = Op::Lit;
  Value literal;   // Op::Lit only
  char var = 'x';  // Op::Var only: 'x' or 'y'
  std::vector<Expr> kids;

  static Expr lit(Value v);
  static Expr variable(char name);  // 'x' or 'y'
  static Expr unary(Op op, Expr a);
  static Expr binary(Op op, Expr a, Expr b);
  static Expr compare(Op op, Expr a, Expr b);
  // cond must be a comparison node.
  static Expr ite(Expr cond, Expr then_branch, Expr else_branch);

  bool operator==(const Expr& other) const;
};

struct ParseError {
  std::size_t pos = 0;
  std::string message;
};

// Returns the parsed tree, or nothing with *err filled in. Whitespace
// between tokens is ignored; the grammar above is enforced exactly.
std::optional<Expr> parse(std::string_view text, ParseError* err = nullptr);

// Canonical surface form; parse(render(e)) == e for every well-formed tree.
std::string render(const Expr& e);

EvalResult evaluate(const Expr& e, std::int64_t x, std::int64_t y);

// True iff e evaluates (no rejection) at every point of the 5x5 probe grid
// (x, y) in {-2..2}^2.
bool probe_validate(const Expr& e);

// Leaves have depth 0; an operator node is 1 + max over children. The ITE
// condition counts as an ordinary child.
int depth(const Expr& e);

int node_count(const Expr& e);

struct GenerationExhausted : std::runtime_error {
  GenerationExhausted() : std::runtime_error("expression generation exhausted its retry budget") {}
};

// Top-down sampler: draws a target depth uniformly from [depth_lo, depth_hi],
// then builds a tree whose every root-to-leaf path has exactly that length
// (operators above the target level, leaves at it). Rejects candidates that
// fail probe_validate; throws GenerationExhausted after 1000 rejections.
// Identical rng state yields an identical tree.
Expr generate(Rng& rng, int depth_lo, int depth_hi,
              std::int64_t literal_lo, std::int64_t literal_hi);

// Canonical form of a free-text answer. Integer answers normalize to their
// minimal decimal form ("007" -> "7", "-0" -> "0", leading '+' dropped);
// anything else keeps its whitespace-stripped text and can never equal an
// integer.
struct CanonicalAnswer {
  bool is_integer = false;
  std::string text;
  bool operator==(const CanonicalAnswer&) const = default;
};

CanonicalAnswer canonicalize_answer(std::string_view raw);

// Equality used for grounded scoring: both sides must canonicalize to the
// same integer.
bool answers_match_as_integers(const CanonicalAnswer& a, const CanonicalAnswer& b);

namespace detail {

// Shared evaluation walk. Tap is applied to every expression-valued node
// result in post-order (comparison nodes produce booleans and are not
// tapped); it may rewrite the value. Rejection short-circuits: nothing past
// the failing node is visited.
template <class Tap>
EvalResult eval_tapped(const Expr& e, const Value& x, const Value& y, Tap&& tap) {
  auto arith = [&](const Expr& node) -> EvalResult {
    return eval_tapped(node, x, y, tap);
  };
  switch (e.op) {
    case Op::Lit: return tap(e.literal);
    case Op::Var: return tap(e.var == 'x' ? x : y);
    case Op::Neg: {
      auto a = arith(e.kids[0]);
      if (!a) return std::nullopt;
      return tap(-*a);
    }
    case Op::Abs: {
      auto a = arith(e.kids[0]);
      if (!a) return std::nullopt;
      return tap(*a < 0 ? Value(-*a) : *a);
    }
    case Op::Add: case Op::Sub: case Op::Mul: case Op::Div:
    case Op::Mod: case Op::Max: case Op::Min: {
      auto a = arith(e.kids[0]);
      if (!a) return std::nullopt;
      auto b = arith(e.kids[1]);
      if (!b) return std::nullopt;
      switch (e.op) {
        case Op::Add: return tap(*a + *b);
        case Op::Sub: return tap(*a - *b);
        case Op::Mul: return tap(*a * *b);
        case Op::Max: return tap(*a < *b ? *b : *a);
        case Op::Min: return tap(*a < *b ? *a : *b);
        case Op::Div: case Op::Mod: {
          if (*b == 0) return std::nullopt;
          Value q = *a / *b;  // truncated; adjust to floor
          Value r = *a % *b;
          if (r != 0 && ((r < 0) != (*b < 0))) {
            q -= 1;
            r += *b;
          }
          return tap(e.op == Op::Div ? q : r);
        }
        default: break;
      }
      return std::nullopt;  // unreachable
    }
    case Op::Ite: {
      const Expr& cond = e.kids[0];
      auto a = arith(cond.kids[0]);
      if (!a) return std::nullopt;
      auto b = arith(cond.kids[1]);
      if (!b) return std::nullopt;
      bool taken = false;
      switch (cond.op) {
        case Op::Gt:  taken = *a > *b;  break;
        case Op::Lt:  taken = *a < *b;  break;
        case Op::Eq:  taken = *a == *b; break;
        case Op::Geq: taken = *a >= *b; break;
        case Op::Leq: taken = *a <= *b; break;
        default: return std::nullopt;  // malformed tree
      }
      auto v = arith(taken ? e.kids[1] : e.kids[2]);
      if (!v) return std::nullopt;
      return tap(*v);
    }
    default: return std::nullopt;  // bare comparison: malformed tree
  }
}

}  // namespace detail

}  // namespace gatelab
