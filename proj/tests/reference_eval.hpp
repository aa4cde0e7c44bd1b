#pragma once

// Brute-force reference interpreter, written independently of the library's
// evaluator so the two can check each other: plain recursion, no traversal
// sharing, and floor division derived from the remainder identity
// r = ((a % b) + b) % b, q = (a - r) / b instead of truncate-and-adjust.

#include <optional>

#include "gatelab/expr.hpp"

namespace refeval {

using gatelab::Expr;
using gatelab::Op;
using Value = gatelab::Value;

inline std::optional<Value> eval(const Expr& e, const Value& x, const Value& y);

inline std::optional<bool> eval_cmp(const Expr& c, const Value& x, const Value& y) {
  auto a = eval(c.kids[0], x, y);
  if (!a) return std::nullopt;
  auto b = eval(c.kids[1], x, y);
  if (!b) return std::nullopt;
  switch (c.op) {
    case Op::Gt: return *a > *b;
    case Op::Lt: return *a < *b;
    case Op::Eq: return *a == *b;
    case Op::Geq: return *a >= *b;
    case Op::Leq: return *a <= *b;
    default: return std::nullopt;
  }
}

inline std::optional<Value> eval(const Expr& e, const Value& x, const Value& y) {
  switch (e.op) {
    case Op::Lit: return e.literal;
    case Op::Var: return e.var == 'x' ? x : y;
    case Op::Neg: {
      auto a = eval(e.kids[0], x, y);
      if (!a) return std::nullopt;
      return Value(-*a);
    }
    case Op::Abs: {
      auto a = eval(e.kids[0], x, y);
      if (!a) return std::nullopt;
      return *a < 0 ? Value(-*a) : *a;
    }
    case Op::Ite: {
      auto taken = eval_cmp(e.kids[0], x, y);
      if (!taken) return std::nullopt;
      return eval(*taken ? e.kids[1] : e.kids[2], x, y);
    }
    default: break;
  }
  auto a = eval(e.kids[0], x, y);
  if (!a) return std::nullopt;
  auto b = eval(e.kids[1], x, y);
  if (!b) return std::nullopt;
  switch (e.op) {
    case Op::Add: return Value(*a + *b);
    case Op::Sub: return Value(*a - *b);
    case Op::Mul: return Value(*a * *b);
    case Op::Max: return *a > *b ? *a : *b;
    case Op::Min: return *a > *b ? *b : *a;
    case Op::Div:
    case Op::Mod: {
      if (*b == 0) return std::nullopt;
      Value r = (*a % *b + *b) % *b;  // remainder carrying the divisor's sign
      Value q = (*a - r) / *b;        // exact: a - r is a multiple of b
      return e.op == Op::Div ? q : r;
    }
    default: return std::nullopt;
  }
}

inline bool probe_ok(const Expr& e) {
  for (int x = -2; x <= 2; ++x)
    for (int y = -2; y <= 2; ++y)
      if (!eval(e, Value(x), Value(y))) return false;
  return true;
}

}  // namespace refeval
