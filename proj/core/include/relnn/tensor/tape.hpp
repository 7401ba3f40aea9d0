#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string_view>
#include <vector>

#include "relnn/tensor/matrix.hpp"

namespace relnn::tensor {

class Tape;
using NodeId = std::int32_t;

enum class OpKind {
  Leaf,
  MatMul,
  Transpose,
  Add,
  Sub,
  Mul,
  Scale,
  AddScalar,
  ConcatCols,
  SliceCols,
  StackRows,
  Relu,
  Sigmoid,
  Gelu,
  IndexSelect,
  ScatterSum,
  ScatterMean,
  ScatterMax,
  GroupedSoftmax,
  CrossEntropyRows,
  ReduceSum,
  ReduceMean,
};

std::string_view to_string(OpKind kind);

// A value, optionally recorded on a tape. Tensors without a tape are
// constants and never receive gradients.
class Tensor {
 public:
  Tensor() : value_(std::make_shared<const Matrix>()) {}
  explicit Tensor(Matrix value) : value_(std::make_shared<const Matrix>(std::move(value))) {}

  const Matrix& value() const { return *value_; }
  const std::shared_ptr<const Matrix>& shared_value() const { return value_; }
  std::size_t rows() const { return value_->rows(); }
  std::size_t cols() const { return value_->cols(); }

  Tape* tape() const { return tape_; }
  NodeId node() const { return node_; }
  bool tracked() const { return tape_ != nullptr; }

  // Same value, no tape.
  Tensor detached() const {
    Tensor t;
    t.value_ = value_;
    return t;
  }

 private:
  friend class Tape;
  std::shared_ptr<const Matrix> value_;
  Tape* tape_ = nullptr;
  NodeId node_ = -1;
};

// Dynamic reverse-mode tape. Nodes are appended in evaluation order, so append
// order is a topological order; backward walks it once in reverse.
class Tape {
 public:
  using BackwardFn = std::function<void(const Matrix& grad_out, Tape& tape)>;

  struct Node {
    OpKind kind;
    std::vector<NodeId> inputs;
    std::shared_ptr<const Matrix> value;
    Matrix grad;  // empty until some consumer contributes
    bool has_grad = false;
    BackwardFn backward;
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Tensor leaf(Matrix value);
  Tensor record(OpKind kind, std::vector<NodeId> inputs, Matrix value, BackwardFn backward);

  // Seeds d(loss)/d(loss) = 1 and propagates. loss must be 1x1 and on this tape.
  void backward(const Tensor& loss);

  // Adds g into the gradient slot of the tensor's node (no-op for constants).
  void accumulate(const Tensor& t, const Matrix& g);
  void accumulate(NodeId id, const Matrix& g);

  // Gradient of a tracked tensor; zeros when backward never reached it.
  Matrix grad(const Tensor& t) const;

  std::size_t size() const { return nodes_.size(); }
  const Node& node(NodeId id) const { return nodes_.at(static_cast<std::size_t>(id)); }

 private:
  std::vector<Node> nodes_;
};

}  // namespace relnn::tensor
