#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "relnn/nra/content.hpp"
#include "relnn/tensor/parameter_store.hpp"

// Transformation expressions: the per-tuple maps of the Transform operator.
namespace relnn::nra {

using tensor::ParamKey;
using tensor::Tensor;

enum class TOp {
  Slice,         // columns [begin, end) of the input embedding
  Const,         // scalar constant
  Param,         // a stored parameter matrix, shared by all rows
  Linear,        // packed (in+1) x out layer applied to args[0]
  Relu,
  Sigmoid,
  Gelu,
  Neg,
  Add,
  Sub,
  Mul,
  Div,
  MatMul,
  Transpose,
  Concat,
  CrossEntropy,  // per-row -sum(b * log softmax(a)), width 1
  GroupSoftmax,  // root only: softmax over rows sharing all but the first attribute
};

const char* to_string(TOp op);

// Static shape class. Row(w): one w-vector per tuple. Shared(r, c): a single
// matrix used by every tuple. Scalar: a folded constant. RowT(w): a transposed
// row, legal only as the right operand of @.
struct TShape {
  enum class Kind { Row, Shared, Scalar, RowT };
  Kind kind = Kind::Scalar;
  std::size_t rows = 1;
  std::size_t cols = 1;

  static TShape row(std::size_t w) { return {Kind::Row, 1, w}; }
  static TShape row_t(std::size_t w) { return {Kind::RowT, w, 1}; }
  static TShape shared(std::size_t r, std::size_t c) { return {Kind::Shared, r, c}; }
  static TShape scalar() { return {Kind::Scalar, 1, 1}; }
  bool operator==(const TShape&) const = default;
  std::string str() const;
};

struct TExpr;
using TExprPtr = std::shared_ptr<const TExpr>;

struct TExpr {
  TOp op = TOp::Const;
  std::vector<TExprPtr> args;
  TShape shape;
  std::size_t begin = 0;  // Slice
  std::size_t end = 0;    // Slice
  double value = 0.0;     // Const
  ParamKey key;           // Param, Linear
  std::size_t in = 0;     // Linear
  std::size_t out = 0;    // Linear
};

class TExprError : public NraError {
 public:
  using NraError::NraError;
};

// Builders validate shapes, throw TExprError on mismatch and fold constants.
TExprPtr t_slice(std::size_t begin, std::size_t end);
TExprPtr t_const(double value);
TExprPtr t_param(ParamKey key, std::size_t rows, std::size_t cols);
TExprPtr t_linear(ParamKey key, std::size_t in, std::size_t out, TExprPtr x);
TExprPtr t_unary(TOp op, TExprPtr x);
TExprPtr t_binary(TOp op, TExprPtr a, TExprPtr b);
TExprPtr t_concat(std::vector<TExprPtr> parts);
TExprPtr t_cross_entropy(TExprPtr logits, TExprPtr targets);
TExprPtr t_group_softmax(TExprPtr x);

// Width of the per-row output of a root expression (Shared(1, w) and Scalar
// roots broadcast to every row). Throws for shapes that cannot be a root.
std::size_t output_width(const TExpr& root);

// Largest input column referenced, for width checks.
std::size_t max_input_column(const TExpr& e);

// True when the expression is exactly the identity on an input of width w.
bool is_identity(const TExpr& e, std::size_t w);

bool uses_group_softmax(const TExpr& e);
void collect_params(const TExpr& e, std::vector<ParamKey>& out);

std::string to_string(const TExpr& e);

// Row grouping for GroupSoftmax.
struct RowGroups {
  std::span<const std::size_t> group;
  std::size_t n_groups = 0;
};

// Evaluates on the tape. input is n x W; parameters are bound through binding
// (so each key is a single leaf per tape).
Tensor eval_texpr(const TExpr& root, const Tensor& input, tensor::ParameterBinding& binding,
                  const RowGroups* groups = nullptr);

}  // namespace relnn::nra
