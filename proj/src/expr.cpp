#include "gatelab/expr.hpp"

#include <array>
#include <cassert>
#include <cctype>
#include <map>
#include <sstream>

namespace gatelab {

namespace {

const std::map<std::string_view, Op, std::less<>> kOpByName = {
    {"NEG", Op::Neg}, {"ABS", Op::Abs}, {"ADD", Op::Add}, {"SUB", Op::Sub},
    {"MUL", Op::Mul}, {"DIV", Op::Div}, {"MOD", Op::Mod}, {"MAX", Op::Max},
    {"MIN", Op::Min}, {"ITE", Op::Ite}, {"GT", Op::Gt},   {"LT", Op::Lt},
    {"EQ", Op::Eq},   {"GEQ", Op::Geq}, {"LEQ", Op::Leq},
};

int op_arity(Op op) {
  if (is_leaf(op)) return 0;
  if (is_unary(op)) return 1;
  if (op == Op::Ite) return 3;
  return 2;
}

}  // namespace

std::string_view op_name(Op op) {
  switch (op) {
    case Op::Lit: return "<lit>";
    case Op::Var: return "<var>";
    case Op::Neg: return "NEG";
    case Op::Abs: return "ABS";
    case Op::Add: return "ADD";
    case Op::Sub: return "SUB";
    case Op::Mul: return "MUL";
    case Op::Div: return "DIV";
    case Op::Mod: return "MOD";
    case Op::Max: return "MAX";
    case Op::Min: return "MIN";
    case Op::Ite: return "ITE";
    case Op::Gt: return "GT";
    case Op::Lt: return "LT";
    case Op::Eq: return "EQ";
    case Op::Geq: return "GEQ";
    case Op::Leq: return "LEQ";
  }
  return "?";
}

Expr Expr::lit(Value v) {
  Expr e;
  e.op = Op::Lit;
  e.literal = std::move(v);
  return e;
}

Expr Expr::variable(char name) {
  assert(name == 'x' || name == 'y');
  Expr e;
  e.op = Op::Var;
  e.var = name;
  return e;
}

Expr Expr::unary(Op op, Expr a) {
  assert(is_unary(op));
  Expr e;
  e.op = op;
  e.kids.push_back(std::move(a));
  return e;
}

Expr Expr::binary(Op op, Expr a, Expr b) {
  assert(is_binary_arith(op));
  Expr e;
  e.op = op;
  e.kids.push_back(std::move(a));
  e.kids.push_back(std::move(b));
  return e;
}

Expr Expr::compare(Op op, Expr a, Expr b) {
  assert(is_comparison(op));
  Expr e;
  e.op = op;
  e.kids.push_back(std::move(a));
  e.kids.push_back(std::move(b));
  return e;
}

Expr Expr::ite(Expr cond, Expr then_branch, Expr else_branch) {
  assert(is_comparison(cond.op));
  Expr e;
  e.op = Op::Ite;
  e.kids.push_back(std::move(cond));
  e.kids.push_back(std::move(then_branch));
  e.kids.push_back(std::move(else_branch));
  return e;
}

bool Expr::operator==(const Expr& other) const {
  if (op != other.op) return false;
  switch (op) {
    case Op::Lit: return literal == other.literal;
    case Op::Var: return var == other.var;
    default: return kids == other.kids;
  }
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

enum class TokKind { Name, Number, LParen, RParen, Comma, End };

struct Token {
  TokKind kind;
  std::string_view text;
  std::size_t pos;
};

struct Lexer {
  std::string_view src;
  std::size_t i = 0;

  // Returns false (with *err set) on a bad character.
  bool next(Token& out, ParseError* err) {
    while (i < src.size() && std::isspace(static_cast<unsigned char>(src[i]))) ++i;
    out.pos = i;
    if (i >= src.size()) {
      out.kind = TokKind::End;
      out.text = {};
      return true;
    }
    const char c = src[i];
    if (c == '(') { out.kind = TokKind::LParen; out.text = src.substr(i, 1); ++i; return true; }
    if (c == ')') { out.kind = TokKind::RParen; out.text = src.substr(i, 1); ++i; return true; }
    if (c == ',') { out.kind = TokKind::Comma; out.text = src.substr(i, 1); ++i; return true; }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      while (j < src.size() && std::isalpha(static_cast<unsigned char>(src[j]))) ++j;
      out.kind = TokKind::Name;
      out.text = src.substr(i, j - i);
      i = j;
      return true;
    }
    const bool neg = c == '-';
    std::size_t j = i + (neg ? 1 : 0);
    if (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) {
      while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      out.kind = TokKind::Number;
      out.text = src.substr(i, j - i);
      i = j;
      return true;
    }
    if (err) *err = {i, std::string("unexpected character '") + c + "'"};
    return false;
  }
};

struct Parser {
  Lexer lex;
  Token tok;
  ParseError* err;
  bool failed = false;

  bool advance() {
    if (!lex.next(tok, err)) {
      failed = true;
      return false;
    }
    return true;
  }

  std::optional<Expr> fail(std::size_t pos, std::string message) {
    if (err && !failed) *err = {pos, std::move(message)};
    failed = true;
    return std::nullopt;
  }

  // in_condition_slot: a comparison is legal (and required) here.
  std::optional<Expr> expression(bool in_condition_slot) {
    switch (tok.kind) {
      case TokKind::Number: {
        if (in_condition_slot) return fail(tok.pos, "ITE condition must be a comparison");
        Value v(std::string(tok.text));
        if (!advance()) return std::nullopt;
        return Expr::lit(std::move(v));
      }
      case TokKind::Name: {
        const std::string_view name = tok.text;
        const std::size_t pos = tok.pos;
        if (name == "x" || name == "y") {
          if (in_condition_slot) return fail(pos, "ITE condition must be a comparison");
          if (!advance()) return std::nullopt;
          return Expr::variable(name[0]);
        }
        auto it = kOpByName.find(name);
        if (it == kOpByName.end()) return fail(pos, "unknown operator '" + std::string(name) + "'");
        const Op op = it->second;
        if (is_comparison(op) && !in_condition_slot)
          return fail(pos, "comparison outside an ITE condition");
        if (!is_comparison(op) && in_condition_slot)
          return fail(pos, "ITE condition must be a comparison");
        if (!advance()) return std::nullopt;
        if (tok.kind != TokKind::LParen) return fail(tok.pos, "expected '('");
        if (!advance()) return std::nullopt;
        std::vector<Expr> args;
        const int arity = op_arity(op);
        for (int k = 0; k < arity; ++k) {
          if (k > 0) {
            if (tok.kind != TokKind::Comma) return fail(tok.pos, "expected ','");
            if (!advance()) return std::nullopt;
          }
          const bool cond_slot = op == Op::Ite && k == 0;
          auto arg = expression(cond_slot);
          if (!arg) return std::nullopt;
          args.push_back(std::move(*arg));
        }
        if (tok.kind != TokKind::RParen) return fail(tok.pos, "expected ')'");
        if (!advance()) return std::nullopt;
        Expr e;
        e.op = op;
        e.kids = std::move(args);
        return e;
      }
      default:
        return fail(tok.pos, "expected an expression");
    }
  }
};

}  // namespace

std::optional<Expr> parse(std::string_view text, ParseError* err) {
  Parser p{Lexer{text}, {}, err};
  if (!p.advance()) return std::nullopt;
  auto e = p.expression(false);
  if (!e) return std::nullopt;
  if (p.tok.kind != TokKind::End) {
    if (err) *err = {p.tok.pos, "trailing input after expression"};
    return std::nullopt;
  }
  return e;
}

std::string render(const Expr& e) {
  switch (e.op) {
    case Op::Lit: return e.literal.str();
    case Op::Var: return std::string(1, e.var);
    default: {
      std::string out(op_name(e.op));
      out += '(';
      for (std::size_t k = 0; k < e.kids.size(); ++k) {
        if (k > 0) out += ", ";
        out += render(e.kids[k]);
      }
      out += ')';
      return out;
    }
  }
}

// ---------------------------------------------------------------------------
// Evaluation and structure

EvalResult evaluate(const Expr& e, std::int64_t x, std::int64_t y) {
  return detail::eval_tapped(e, Value(x), Value(y), [](Value v) { return v; });
}

bool probe_validate(const Expr& e) {
  for (std::int64_t x = -2; x <= 2; ++x)
    for (std::int64_t y = -2; y <= 2; ++y)
      if (!evaluate(e, x, y)) return false;
  return true;
}

int depth(const Expr& e) {
  int best = -1;
  for (const Expr& k : e.kids) best = std::max(best, depth(k));
  return best + 1;
}

int node_count(const Expr& e) {
  int n = 1;
  for (const Expr& k : e.kids) n += node_count(k);
  return n;
}

// ---------------------------------------------------------------------------
// Generation

namespace {

// Operators eligible at an internal node. ITE needs two levels below it
// (its condition is itself an operator node), so it is excluded when only
// one level remains.
const std::array<Op, 10> kDeepOps = {Op::Neg, Op::Add, Op::Sub, Op::Mul, Op::Div,
                                     Op::Mod, Op::Max, Op::Min, Op::Abs, Op::Ite};
const std::array<Op, 9> kShallowOps = {Op::Neg, Op::Add, Op::Sub, Op::Mul, Op::Div,
                                       Op::Mod, Op::Max, Op::Min, Op::Abs};
const std::array<Op, 5> kCmpOps = {Op::Gt, Op::Lt, Op::Eq, Op::Geq, Op::Leq};

Expr gen_node(Rng& rng, int level, int target, std::int64_t lit_lo, std::int64_t lit_hi) {
  if (level == target) {
    switch (rng.uniform_int(0, 2)) {
      case 0: return Expr::variable('x');
      case 1: return Expr::variable('y');
      default: return Expr::lit(Value(rng.uniform_int(lit_lo, lit_hi)));
    }
  }
  const int remaining = target - level;
  const Op op = remaining >= 2
                    ? kDeepOps[static_cast<std::size_t>(rng.uniform_int(0, 9))]
                    : kShallowOps[static_cast<std::size_t>(rng.uniform_int(0, 8))];
  if (is_unary(op)) return Expr::unary(op, gen_node(rng, level + 1, target, lit_lo, lit_hi));
  if (op == Op::Ite) {
    const Op cmp = kCmpOps[static_cast<std::size_t>(rng.uniform_int(0, 4))];
    Expr cond = Expr::compare(cmp, gen_node(rng, level + 2, target, lit_lo, lit_hi),
                              gen_node(rng, level + 2, target, lit_lo, lit_hi));
    Expr t = gen_node(rng, level + 1, target, lit_lo, lit_hi);
    Expr f = gen_node(rng, level + 1, target, lit_lo, lit_hi);
    return Expr::ite(std::move(cond), std::move(t), std::move(f));
  }
  Expr a = gen_node(rng, level + 1, target, lit_lo, lit_hi);
  Expr b = gen_node(rng, level + 1, target, lit_lo, lit_hi);
  return Expr::binary(op, std::move(a), std::move(b));
}

}  // namespace

Expr generate(Rng& rng, int depth_lo, int depth_hi,
              std::int64_t literal_lo, std::int64_t literal_hi) {
  assert(0 <= depth_lo && depth_lo <= depth_hi);
  assert(literal_lo <= literal_hi);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    const int target = static_cast<int>(rng.uniform_int(depth_lo, depth_hi));
    Expr e = gen_node(rng, 0, target, literal_lo, literal_hi);
    if (probe_validate(e)) return e;
  }
  throw GenerationExhausted();
}

// ---------------------------------------------------------------------------
// Answer canonicalization

CanonicalAnswer canonicalize_answer(std::string_view raw) {
  std::size_t b = 0, e = raw.size();
  while (b < e && std::isspace(static_cast<unsigned char>(raw[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(raw[e - 1]))) --e;
  const std::string_view s = raw.substr(b, e - b);

  std::size_t i = 0;
  bool neg = false;
  if (i < s.size() && (s[i] == '+' || s[i] == '-')) {
    neg = s[i] == '-';
    ++i;
  }
  const std::size_t digits_begin = i;
  while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
  if (i != s.size() || i == digits_begin)
    return {false, std::string(s)};  // not an optionally-signed integer

  std::size_t z = digits_begin;
  while (z + 1 < s.size() && s[z] == '0') ++z;  // keep the last digit
  std::string_view digits = s.substr(z);
  if (digits == "0") return {true, "0"};  // covers "-0", "+000", ...
  std::string text;
  if (neg) text += '-';
  text += digits;
  return {true, std::move(text)};
}

bool answers_match_as_integers(const CanonicalAnswer& a, const CanonicalAnswer& b) {
  return a.is_integer && b.is_integer && a.text == b.text;
}

}  // namespace gatelab
