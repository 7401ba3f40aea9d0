#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "relnn/frontend/ast.hpp"
#include "relnn/relmodel/relation.hpp"

namespace relnn::frontend {

using ScalarEnv = std::map<std::string, Scalar>;

// Constant folding over numbers, scalar aliases, + - * /, unary minus and
// sqrt. nullopt when the expression is not a compile-time scalar.
std::optional<Scalar> try_eval_scalar(const Expr& e, const ScalarEnv& env);
Scalar eval_scalar(const Expr& e, const ScalarEnv& env);

// A scalar as a literal expression (integers print plainly).
Expr scalar_literal(const Scalar& s);

struct ExpandContext {
  // Rows of a relation available before compilation, for [Rel(...)] domains.
  std::function<std::optional<std::vector<rel::Tuple>>(const std::string&)> relation_rows;
};

// Removes statement templates and replicators. Template instances are
// materialized once per argument tuple, right before the first statement that
// needs them; instance statements keep their name with literal arguments.
Program expand_templates(const Program& program, const ExpandContext& ctx = {});

// Replaces calls to user functions by their bodies. Intermediate relations of
// the k-th call of F become F_k_Name; functions without parameters are
// expanded once and shared by every call. The output has only aliases, rules,
// fit and pred statements.
Program inline_functions(const Program& program);

// Head variables, decoded variables and encoded attributes must be bound by
// the body; union alternatives must agree on their variables.
void check_range_restriction(const Program& flat);

}  // namespace relnn::frontend
