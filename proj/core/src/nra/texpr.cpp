#include "relnn/nra/texpr.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "relnn/tensor/ops.hpp"

namespace relnn::nra {

namespace t = relnn::tensor;
using Kind = TShape::Kind;

const char* to_string(TOp op) {
  switch (op) {
    case TOp::Slice: return "slice";
    case TOp::Const: return "const";
    case TOp::Param: return "param";
    case TOp::Linear: return "Linear";
    case TOp::Relu: return "ReLU";
    case TOp::Sigmoid: return "Sigmoid";
    case TOp::Gelu: return "GELU";
    case TOp::Neg: return "neg";
    case TOp::Add: return "+";
    case TOp::Sub: return "-";
    case TOp::Mul: return "*";
    case TOp::Div: return "/";
    case TOp::MatMul: return "@";
    case TOp::Transpose: return ".T";
    case TOp::Concat: return "Concat";
    case TOp::CrossEntropy: return "CrossEntropyLoss";
    case TOp::GroupSoftmax: return "Softmax";
  }
  return "?";
}

std::string TShape::str() const {
  switch (kind) {
    case Kind::Row: return "row(" + std::to_string(cols) + ")";
    case Kind::RowT: return "row(" + std::to_string(rows) + ").T";
    case Kind::Shared: return "shared(" + std::to_string(rows) + "x" + std::to_string(cols) + ")";
    case Kind::Scalar: return "scalar";
  }
  return "?";
}

namespace {

std::shared_ptr<TExpr> node(TOp op, std::vector<TExprPtr> args, TShape shape) {
  auto e = std::make_shared<TExpr>();
  e->op = op;
  e->args = std::move(args);
  e->shape = shape;
  return e;
}

[[noreturn]] void fail(const std::string& what, const TExprPtr& a, const TExprPtr& b = nullptr) {
  std::string msg = what + ": " + a->shape.str();
  if (b) msg += " and " + b->shape.str();
  throw TExprError(msg);
}

double gelu_scalar(double x) { return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2)); }

// Result shape of an elementwise op between two non-scalar operands.
TShape broadcast_shape(const TExprPtr& a, const TExprPtr& b, const char* op) {
  const TShape& x = a->shape;
  const TShape& y = b->shape;
  if (x.kind == Kind::RowT || y.kind == Kind::RowT) {
    fail(std::string("transposed row used outside '@' in '") + op + "'", a, b);
  }
  if (x.kind == Kind::Row || y.kind == Kind::Row) {
    for (const TShape* s : {&x, &y}) {
      if (s->kind == Kind::Shared && s->rows != 1) {
        fail(std::string("cannot broadcast a multi-row parameter across tuples in '") + op + "'", a, b);
      }
    }
    const std::size_t w = std::max(x.cols, y.cols);
    if ((x.cols != w && x.cols != 1) || (y.cols != w && y.cols != 1)) {
      fail(std::string("width mismatch in '") + op + "'", a, b);
    }
    return TShape::row(w);
  }
  if (x == y) return x;
  if (x.rows == 1 && x.cols == 1) return y;
  if (y.rows == 1 && y.cols == 1) return x;
  fail(std::string("shape mismatch in '") + op + "'", a, b);
}

}  // namespace

TExprPtr t_slice(std::size_t begin, std::size_t end) {
  if (begin > end) throw TExprError("bad slice");
  auto e = node(TOp::Slice, {}, TShape::row(end - begin));
  e->begin = begin;
  e->end = end;
  return e;
}

TExprPtr t_const(double value) {
  auto e = node(TOp::Const, {}, TShape::scalar());
  e->value = value;
  return e;
}

TExprPtr t_param(ParamKey key, std::size_t rows, std::size_t cols) {
  auto e = node(TOp::Param, {}, TShape::shared(rows, cols));
  e->key = std::move(key);
  return e;
}

TExprPtr t_linear(ParamKey key, std::size_t in, std::size_t out, TExprPtr x) {
  const TShape& s = x->shape;
  TShape result;
  if (s.kind == Kind::Row && s.cols == in) {
    result = TShape::row(out);
  } else if (s.kind == Kind::Shared && s.rows == 1 && s.cols == in) {
    result = TShape::shared(1, out);
  } else if (s.kind == Kind::Scalar && in == 1) {
    result = TShape::shared(1, out);
  } else {
    throw TExprError("Linear(" + std::to_string(in) + ", " + std::to_string(out) +
                     ") applied to " + s.str());
  }
  auto e = node(TOp::Linear, {std::move(x)}, result);
  e->key = std::move(key);
  e->in = in;
  e->out = out;
  return e;
}

TExprPtr t_unary(TOp op, TExprPtr x) {
  if (op != TOp::Relu && op != TOp::Sigmoid && op != TOp::Gelu && op != TOp::Neg &&
      op != TOp::Transpose) {
    throw TExprError(std::string("not a unary operator: ") + to_string(op));
  }
  const TShape& s = x->shape;
  if (s.kind == Kind::Scalar) {
    const double v = x->value;
    switch (op) {
      case TOp::Relu: return t_const(v > 0 ? v : 0.0);
      case TOp::Sigmoid: return t_const(1.0 / (1.0 + std::exp(-v)));
      case TOp::Gelu: return t_const(gelu_scalar(v));
      case TOp::Neg: return t_const(-v);
      default: return x;
    }
  }
  if (op == TOp::Transpose) {
    if (s.kind == Kind::Row) return node(op, {std::move(x)}, TShape::row_t(s.cols));
    if (s.kind == Kind::RowT) return node(op, {std::move(x)}, TShape::row(s.rows));
    return node(op, {std::move(x)}, TShape::shared(s.cols, s.rows));
  }
  if (s.kind == Kind::RowT) fail(std::string("transposed row passed to ") + to_string(op), x);
  return node(op, {std::move(x)}, s);
}

TExprPtr t_binary(TOp op, TExprPtr a, TExprPtr b) {
  const bool sa = a->shape.kind == Kind::Scalar;
  const bool sb = b->shape.kind == Kind::Scalar;
  switch (op) {
    case TOp::Add:
    case TOp::Sub:
    case TOp::Mul: {
      if (sa && sb) {
        const double x = a->value;
        const double y = b->value;
        return t_const(op == TOp::Add ? x + y : op == TOp::Sub ? x - y : x * y);
      }
      if (sa || sb) {
        const TExprPtr& other = sa ? b : a;
        if (other->shape.kind == Kind::RowT) fail("transposed row used outside '@'", other);
        return node(op, {std::move(a), std::move(b)}, other->shape);
      }
      return node(op, {a, b}, broadcast_shape(a, b, to_string(op)));
    }
    case TOp::Div: {
      if (!sb) fail("division is only defined by a constant", a, b);
      if (b->value == 0.0) throw TExprError("division by zero");
      if (sa) return t_const(a->value / b->value);
      if (a->shape.kind == Kind::RowT) fail("transposed row used outside '@'", a);
      return node(op, {a, std::move(b)}, a->shape);
    }
    case TOp::MatMul: {
      const TShape& x = a->shape;
      const TShape& y = b->shape;
      if (sa || sb) fail("'@' needs matrix operands; use '*' to scale", a, b);
      if (x.kind == Kind::Row && y.kind == Kind::Shared && x.cols == y.rows) {
        return node(op, {a, b}, TShape::row(y.cols));
      }
      if (x.kind == Kind::Row && y.kind == Kind::RowT && x.cols == y.rows) {
        return node(op, {a, b}, TShape::row(1));
      }
      if (x.kind == Kind::Shared && x.rows == 1 && y.kind == Kind::RowT && x.cols == y.rows) {
        return node(op, {a, b}, TShape::row(1));
      }
      if (x.kind == Kind::Shared && y.kind == Kind::Shared && x.cols == y.rows) {
        return node(op, {a, b}, TShape::shared(x.rows, y.cols));
      }
      fail("'@' operands do not conform", a, b);
    }
    default: break;
  }
  throw TExprError(std::string("not a binary operator: ") + to_string(op));
}

TExprPtr t_concat(std::vector<TExprPtr> parts) {
  if (parts.empty()) throw TExprError("Concat needs at least one argument");
  bool any_row = false;
  std::size_t w = 0;
  for (const auto& p : parts) {
    const TShape& s = p->shape;
    if (s.kind == Kind::RowT) fail("transposed row passed to Concat", p);
    if (s.kind == Kind::Shared && s.rows != 1) fail("Concat of a multi-row parameter", p);
    any_row = any_row || s.kind == Kind::Row;
    w += s.cols;
  }
  return node(TOp::Concat, std::move(parts), any_row ? TShape::row(w) : TShape::shared(1, w));
}

TExprPtr t_cross_entropy(TExprPtr logits, TExprPtr targets) {
  const TShape& x = logits->shape;
  const TShape& y = targets->shape;
  const bool ok = x.kind == Kind::Row &&
                  (y.kind == Kind::Row || (y.kind == Kind::Shared && y.rows == 1)) &&
                  x.cols == y.cols;
  if (!ok) fail("CrossEntropyLoss needs per-row logits and targets of equal width", logits, targets);
  return node(TOp::CrossEntropy, {std::move(logits), std::move(targets)}, TShape::row(1));
}

TExprPtr t_group_softmax(TExprPtr x) {
  if (x->shape.kind != Kind::Row) fail("Softmax needs a per-row input", x);
  const TShape s = x->shape;
  return node(TOp::GroupSoftmax, {std::move(x)}, s);
}

std::size_t output_width(const TExpr& root) {
  switch (root.shape.kind) {
    case Kind::Row: return root.shape.cols;
    case Kind::Scalar: return 1;
    case Kind::Shared:
      if (root.shape.rows == 1) return root.shape.cols;
      break;
    case Kind::RowT: break;
  }
  throw TExprError("a transformation must yield one vector per tuple, got " + root.shape.str());
}

std::size_t max_input_column(const TExpr& e) {
  std::size_t m = e.op == TOp::Slice ? e.end : 0;
  for (const auto& a : e.args) m = std::max(m, max_input_column(*a));
  return m;
}

bool is_identity(const TExpr& e, std::size_t w) {
  return e.op == TOp::Slice && e.begin == 0 && e.end == w;
}

bool uses_group_softmax(const TExpr& e) {
  if (e.op == TOp::GroupSoftmax) return true;
  return std::any_of(e.args.begin(), e.args.end(), [](const auto& a) { return uses_group_softmax(*a); });
}

void collect_params(const TExpr& e, std::vector<ParamKey>& out) {
  if (e.op == TOp::Param || e.op == TOp::Linear) out.push_back(e.key);
  for (const auto& a : e.args) collect_params(*a, out);
}

std::string to_string(const TExpr& e) {
  switch (e.op) {
    case TOp::Slice: return "z[" + std::to_string(e.begin) + ":" + std::to_string(e.end) + "]";
    case TOp::Const: return rel::format_double(e.value);
    case TOp::Param: return e.key.str();
    case TOp::Linear:
      return "Linear[" + e.key.str() + "](" + to_string(*e.args[0]) + ")";
    case TOp::Transpose: return to_string(*e.args[0]) + ".T";
    case TOp::Neg: return "(-" + to_string(*e.args[0]) + ")";
    case TOp::Add:
    case TOp::Sub:
    case TOp::Mul:
    case TOp::Div:
    case TOp::MatMul:
      return "(" + to_string(*e.args[0]) + " " + to_string(e.op) + " " + to_string(*e.args[1]) + ")";
    default: {
      std::string s = std::string(to_string(e.op)) + "(";
      for (std::size_t i = 0; i < e.args.size(); ++i) {
        if (i > 0) s += ", ";
        s += to_string(*e.args[i]);
      }
      return s + ")";
    }
  }
}

namespace {

using tensor::Matrix;

struct Evaluator {
  const Tensor& input;
  tensor::ParameterBinding& binding;
  const RowGroups* groups;
  std::size_t n;

  Tensor ones(std::size_t r, std::size_t c) const { return Tensor(Matrix::ones(r, c)); }

  // Expands a value of shape s to per-row width w (Row) over n tuples.
  Tensor to_rows(const Tensor& v, const TShape& s, std::size_t w) const {
    Tensor out = v;
    if (s.kind == Kind::Shared || s.kind == Kind::Scalar) out = t::matmul(ones(n, 1), out);
    if (out.cols() == 1 && w != 1) out = t::matmul(out, ones(1, w));
    return out;
  }

  // Expands a Shared/Scalar value to a Shared target shape.
  Tensor to_shared(const Tensor& v, const TShape& target) const {
    if (v.rows() == target.rows && v.cols() == target.cols) return v;
    return t::matmul(t::matmul(ones(target.rows, 1), v), ones(1, target.cols));
  }

  Tensor fit(const Tensor& v, const TShape& s, const TShape& target) const {
    if (target.kind == Kind::Row) return to_rows(v, s, target.cols);
    return to_shared(v, target);
  }

  Tensor eval(const TExpr& e) {
    switch (e.op) {
      case TOp::Slice:
        if (e.begin == 0 && e.end == input.cols()) return input;
        return t::slice_cols(input, e.begin, e.end);
      case TOp::Const: return Tensor(Matrix(1, 1, e.value));
      case TOp::Param: {
        Tensor p = binding.get(e.key);
        if (p.rows() != e.shape.rows || p.cols() != e.shape.cols) {
          throw TExprError("parameter " + e.key.str() + " has shape " + p.value().shape_string() +
                           ", expected " + e.shape.str());
        }
        return p;
      }
      case TOp::Linear: {
        const TExpr& x = *e.args[0];
        Tensor v = eval(x);
        if (x.shape.kind == Kind::Scalar) v = Tensor(v.value());
        Tensor w = binding.get(e.key);
        if (w.rows() != e.in + 1 || w.cols() != e.out) {
          throw TExprError("layer " + e.key.str() + " has shape " + w.value().shape_string());
        }
        return t::matmul(t::concat_cols(v, ones(v.rows(), 1)), w);
      }
      case TOp::Relu: return t::relu(eval(*e.args[0]));
      case TOp::Sigmoid: return t::sigmoid(eval(*e.args[0]));
      case TOp::Gelu: return t::gelu(eval(*e.args[0]));
      case TOp::Neg: return t::scale(eval(*e.args[0]), -1.0);
      case TOp::Transpose: {
        const TExpr& x = *e.args[0];
        // Row <-> RowT keep the per-row tensor; '@' reads the shape class.
        if (x.shape.kind == Kind::Row || x.shape.kind == Kind::RowT) return eval(x);
        return t::transpose(eval(x));
      }
      case TOp::Add:
      case TOp::Sub:
      case TOp::Mul: {
        const TExpr& a = *e.args[0];
        const TExpr& b = *e.args[1];
        if (a.shape.kind == Kind::Scalar || b.shape.kind == Kind::Scalar) {
          const bool left_const = a.shape.kind == Kind::Scalar;
          const double c = left_const ? a.value : b.value;
          Tensor v = eval(left_const ? b : a);
          if (e.op == TOp::Mul) return t::scale(v, c);
          if (e.op == TOp::Add) return t::add_scalar(v, c);
          return left_const ? t::add_scalar(t::scale(v, -1.0), c) : t::add_scalar(v, -c);
        }
        Tensor x = fit(eval(a), a.shape, e.shape);
        Tensor y = fit(eval(b), b.shape, e.shape);
        if (e.op == TOp::Add) return t::add(x, y);
        if (e.op == TOp::Sub) return t::sub(x, y);
        return t::mul_elementwise(x, y);
      }
      case TOp::Div: return t::scale(eval(*e.args[0]), 1.0 / e.args[1]->value);
      case TOp::MatMul: {
        const TExpr& a = *e.args[0];
        const TExpr& b = *e.args[1];
        Tensor x = eval(a);
        Tensor y = eval(b);
        if (b.shape.kind == Kind::RowT) {
          if (a.shape.kind == Kind::Row) {
            return t::matmul(t::mul_elementwise(x, y), ones(y.cols(), 1));
          }
          return t::matmul(y, t::transpose(x));
        }
        return t::matmul(x, y);
      }
      case TOp::Concat: {
        std::vector<Tensor> parts;
        for (const auto& a : e.args) {
          Tensor v = eval(*a);
          if (e.shape.kind == Kind::Row) v = to_rows(v, a->shape, a->shape.cols);
          parts.push_back(v);
        }
        return t::concat_cols(parts);
      }
      case TOp::CrossEntropy: {
        const TExpr& b = *e.args[1];
        Tensor x = eval(*e.args[0]);
        Tensor y = to_rows(eval(b), b.shape, b.shape.cols);
        return t::cross_entropy_rows(x, y);
      }
      case TOp::GroupSoftmax: {
        if (groups == nullptr) throw TExprError("Softmax evaluated without row groups");
        return t::softmax_rows_grouped(eval(*e.args[0]), groups->group, groups->n_groups);
      }
    }
    throw TExprError("unknown transformation node");
  }
};

}  // namespace

Tensor eval_texpr(const TExpr& root, const Tensor& input, tensor::ParameterBinding& binding,
                  const RowGroups* groups) {
  const std::size_t need = max_input_column(root);
  if (need > input.cols()) {
    throw TExprError("transformation reads column " + std::to_string(need - 1) +
                     " of an embedding of width " + std::to_string(input.cols()));
  }
  Evaluator ev{input, binding, groups, input.rows()};
  Tensor out = ev.eval(root);
  const std::size_t w = output_width(root);
  if (root.shape.kind != Kind::Row) out = ev.to_rows(out, root.shape, w);
  return out;
}

}  // namespace relnn::nra
