#include "relnn/nra/predicate.hpp"

#include <cmath>

namespace relnn::nra {

ArithTermPtr ArithTerm::variable(std::string name) {
  auto t = std::make_shared<ArithTerm>();
  t->kind = Kind::Var;
  t->var = std::move(name);
  return t;
}

ArithTermPtr ArithTerm::constant(Value v) {
  auto t = std::make_shared<ArithTerm>();
  t->kind = Kind::Const;
  t->value = std::move(v);
  return t;
}

ArithTermPtr ArithTerm::binary(Kind k, ArithTermPtr a, ArithTermPtr b) {
  auto t = std::make_shared<ArithTerm>();
  t->kind = k;
  t->lhs = std::move(a);
  t->rhs = std::move(b);
  return t;
}

ArithTermPtr ArithTerm::negate(ArithTermPtr a) {
  auto t = std::make_shared<ArithTerm>();
  t->kind = Kind::Neg;
  t->lhs = std::move(a);
  return t;
}

const char* to_string(CmpOp op) {
  switch (op) {
    case CmpOp::Eq: return "=";
    case CmpOp::Ne: return "!=";
    case CmpOp::Lt: return "<";
    case CmpOp::Le: return "<=";
    case CmpOp::Gt: return ">";
    case CmpOp::Ge: return ">=";
  }
  return "?";
}

std::string to_string(const ArithTerm& t) {
  using K = ArithTerm::Kind;
  switch (t.kind) {
    case K::Var: return t.var;
    case K::Const:
      return rel::tag_of(t.value) == ValueTag::String ? "'" + rel::format_value(t.value) + "'"
                                                      : rel::format_value(t.value);
    case K::Neg: return "(-" + to_string(*t.lhs) + ")";
    case K::Add: return "(" + to_string(*t.lhs) + " + " + to_string(*t.rhs) + ")";
    case K::Sub: return "(" + to_string(*t.lhs) + " - " + to_string(*t.rhs) + ")";
    case K::Mul: return "(" + to_string(*t.lhs) + " * " + to_string(*t.rhs) + ")";
    case K::Div: return "(" + to_string(*t.lhs) + " / " + to_string(*t.rhs) + ")";
  }
  return "?";
}

std::string to_string(const Predicate& p) {
  return to_string(*p.lhs) + " " + to_string(p.op) + " " + to_string(*p.rhs);
}

void collect_vars(const ArithTerm& t, std::vector<std::string>& out) {
  if (t.kind == ArithTerm::Kind::Var) out.push_back(t.var);
  if (t.lhs) collect_vars(*t.lhs, out);
  if (t.rhs) collect_vars(*t.rhs, out);
}

namespace {

bool numeric(const Value& v) {
  return rel::tag_of(v) == ValueTag::Int || rel::tag_of(v) == ValueTag::Float;
}

Value arith(ArithTerm::Kind k, const Value& a, const Value& b) {
  using K = ArithTerm::Kind;
  if (!numeric(a) || !numeric(b)) {
    throw NraError("arithmetic on non-numeric values " + rel::format_value(a) + " and " +
                   rel::format_value(b));
  }
  const bool ints = rel::tag_of(a) == ValueTag::Int && rel::tag_of(b) == ValueTag::Int;
  if (ints && k != K::Div) {
    const auto x = std::get<std::int64_t>(a);
    const auto y = std::get<std::int64_t>(b);
    switch (k) {
      case K::Add: return x + y;
      case K::Sub: return x - y;
      case K::Mul: return x * y;
      default: break;
    }
  }
  const double x = rel::as_double(a);
  const double y = rel::as_double(b);
  switch (k) {
    case K::Add: return x + y;
    case K::Sub: return x - y;
    case K::Mul: return x * y;
    case K::Div: return x / y;
    default: break;
  }
  throw NraError("bad arithmetic operator");
}

}  // namespace

Value eval_term(const ArithTerm& t, const Content& c, const Tuple& row) {
  using K = ArithTerm::Kind;
  switch (t.kind) {
    case K::Var: return row[c.attr_index(t.var)];
    case K::Const: return t.value;
    case K::Neg: {
      Value v = eval_term(*t.lhs, c, row);
      if (rel::tag_of(v) == ValueTag::Int) return -std::get<std::int64_t>(v);
      if (rel::tag_of(v) == ValueTag::Float) return -std::get<double>(v);
      throw NraError("negation of non-numeric value " + rel::format_value(v));
    }
    default: return arith(t.kind, eval_term(*t.lhs, c, row), eval_term(*t.rhs, c, row));
  }
}

bool compare_values(CmpOp op, const Value& a, const Value& b) {
  int cmp = 0;
  if (numeric(a) && numeric(b)) {
    if (rel::tag_of(a) == ValueTag::Int && rel::tag_of(b) == ValueTag::Int) {
      const auto x = std::get<std::int64_t>(a);
      const auto y = std::get<std::int64_t>(b);
      cmp = x < y ? -1 : (x > y ? 1 : 0);
    } else {
      const double x = rel::as_double(a);
      const double y = rel::as_double(b);
      cmp = x < y ? -1 : (x > y ? 1 : 0);
    }
  } else if (rel::tag_of(a) == rel::tag_of(b)) {
    cmp = a < b ? -1 : (b < a ? 1 : 0);
  } else {
    throw NraError(std::string("cannot compare ") + rel::to_string(rel::tag_of(a)) + " with " +
                   rel::to_string(rel::tag_of(b)));
  }
  switch (op) {
    case CmpOp::Eq: return cmp == 0;
    case CmpOp::Ne: return cmp != 0;
    case CmpOp::Lt: return cmp < 0;
    case CmpOp::Le: return cmp <= 0;
    case CmpOp::Gt: return cmp > 0;
    case CmpOp::Ge: return cmp >= 0;
  }
  return false;
}

bool eval_predicate(const Predicate& p, const Content& c, const Tuple& row) {
  return compare_values(p.op, eval_term(*p.lhs, c, row), eval_term(*p.rhs, c, row));
}

std::vector<std::size_t> select_rows(const Content& c, const std::vector<Predicate>& preds) {
  for (const auto& p : preds) {
    std::vector<std::string> vars;
    collect_vars(*p.lhs, vars);
    collect_vars(*p.rhs, vars);
    for (const auto& v : vars) c.attr_index(v);
  }
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < c.rows.size(); ++i) {
    bool ok = true;
    for (const auto& p : preds) {
      if (!eval_predicate(p, c, c.rows[i])) {
        ok = false;
        break;
      }
    }
    if (ok) kept.push_back(i);
  }
  return kept;
}

}  // namespace relnn::nra
