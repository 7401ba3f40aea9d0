#include "relnn/tensor/tape.hpp"

namespace relnn::tensor {

std::string_view to_string(OpKind kind) {
  switch (kind) {
    case OpKind::Leaf: return "leaf";
    case OpKind::MatMul: return "matmul";
    case OpKind::Transpose: return "transpose";
    case OpKind::Add: return "add";
    case OpKind::Sub: return "sub";
    case OpKind::Mul: return "mul";
    case OpKind::Scale: return "scale";
    case OpKind::AddScalar: return "add_scalar";
    case OpKind::ConcatCols: return "concat_cols";
    case OpKind::SliceCols: return "slice_cols";
    case OpKind::StackRows: return "stack_rows";
    case OpKind::Relu: return "relu";
    case OpKind::Sigmoid: return "sigmoid";
    case OpKind::Gelu: return "gelu";
    case OpKind::IndexSelect: return "index_select";
    case OpKind::ScatterSum: return "scatter_sum";
    case OpKind::ScatterMean: return "scatter_mean";
    case OpKind::ScatterMax: return "scatter_max";
    case OpKind::GroupedSoftmax: return "softmax_rows_grouped";
    case OpKind::CrossEntropyRows: return "cross_entropy_rows";
    case OpKind::ReduceSum: return "reduce_sum";
    case OpKind::ReduceMean: return "reduce_mean";
  }
  return "?";
}

Tensor Tape::leaf(Matrix value) {
  return record(OpKind::Leaf, {}, std::move(value), nullptr);
}

Tensor Tape::record(OpKind kind, std::vector<NodeId> inputs, Matrix value, BackwardFn backward) {
  Node node;
  node.kind = kind;
  node.inputs = std::move(inputs);
  node.value = std::make_shared<const Matrix>(std::move(value));
  node.backward = std::move(backward);
  Tensor t;
  t.value_ = node.value;
  t.tape_ = this;
  t.node_ = static_cast<NodeId>(nodes_.size());
  nodes_.push_back(std::move(node));
  return t;
}

void Tape::accumulate(const Tensor& t, const Matrix& g) {
  if (!t.tracked()) return;
  if (t.tape() != this) throw std::logic_error("tensor recorded on another tape");
  accumulate(t.node(), g);
}

void Tape::accumulate(NodeId id, const Matrix& g) {
  Node& n = nodes_.at(static_cast<std::size_t>(id));
  if (!n.has_grad) {
    if (g.rows() != n.value->rows() || g.cols() != n.value->cols()) {
      throw ShapeError("gradient " + g.shape_string() + " for value " + n.value->shape_string());
    }
    n.grad = g;
    n.has_grad = true;
  } else {
    n.grad += g;
  }
}

void Tape::backward(const Tensor& loss) {
  if (!loss.tracked() || loss.tape() != this) {
    throw std::logic_error("loss is not recorded on this tape");
  }
  if (loss.rows() != 1 || loss.cols() != 1) {
    throw ShapeError("loss must be 1x1, got " + loss.value().shape_string());
  }
  accumulate(loss.node(), Matrix(1, 1, 1.0));
  for (auto i = static_cast<NodeId>(loss.node()); i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (!n.has_grad || !n.backward) continue;
    // Copy: the callback may accumulate into earlier slots, never this one.
    const Matrix g = n.grad;
    n.backward(g, *this);
  }
}

Matrix Tape::grad(const Tensor& t) const {
  if (!t.tracked()) return Matrix(t.rows(), t.cols());
  const Node& n = node(t.node());
  if (!n.has_grad) return Matrix(t.rows(), t.cols());
  return n.grad;
}

}  // namespace relnn::tensor
