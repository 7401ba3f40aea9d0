#pragma once

#include <memory>
#include <string>
#include <vector>

#include "relnn/nra/content.hpp"

namespace relnn::nra {

// Arithmetic over content variables and constants, as used in filters.
struct ArithTerm {
  enum class Kind { Var, Const, Add, Sub, Mul, Div, Neg };
  Kind kind = Kind::Const;
  std::string var;
  Value value;
  std::shared_ptr<const ArithTerm> lhs;
  std::shared_ptr<const ArithTerm> rhs;

  static std::shared_ptr<const ArithTerm> variable(std::string name);
  static std::shared_ptr<const ArithTerm> constant(Value v);
  static std::shared_ptr<const ArithTerm> binary(Kind k, std::shared_ptr<const ArithTerm> a,
                                                 std::shared_ptr<const ArithTerm> b);
  static std::shared_ptr<const ArithTerm> negate(std::shared_ptr<const ArithTerm> a);
};

using ArithTermPtr = std::shared_ptr<const ArithTerm>;

enum class CmpOp { Eq, Ne, Lt, Le, Gt, Ge };
const char* to_string(CmpOp op);

struct Predicate {
  CmpOp op = CmpOp::Eq;
  ArithTermPtr lhs;
  ArithTermPtr rhs;
};

std::string to_string(const ArithTerm& t);
std::string to_string(const Predicate& p);

// Variables mentioned by a predicate.
void collect_vars(const ArithTerm& t, std::vector<std::string>& out);

// Throws NraError on unknown attributes and on comparisons between
// incompatible value types (numbers compare with numbers, bools with bools,
// strings with strings).
Value eval_term(const ArithTerm& t, const Content& c, const Tuple& row);
bool eval_predicate(const Predicate& p, const Content& c, const Tuple& row);
bool compare_values(CmpOp op, const Value& a, const Value& b);

// Indices of rows satisfying every predicate (conjunction).
std::vector<std::size_t> select_rows(const Content& c, const std::vector<Predicate>& preds);

}  // namespace relnn::nra
