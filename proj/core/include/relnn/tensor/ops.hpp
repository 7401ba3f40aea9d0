#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "relnn/tensor/tape.hpp"

// Differentiable tensor operations. Every op records onto the tape of its
// tracked inputs (all tracked inputs must share one tape); if no input is
// tracked the result is a constant. Index vectors never carry gradient.
namespace relnn::tensor {

enum class ScatterKind { Sum, Mean, Max };
enum class ReduceKind { Sum, Mean };

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul_elementwise(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);
Tensor add_scalar(const Tensor& a, double c);

Tensor concat_cols(std::span<const Tensor> parts);
Tensor concat_cols(const Tensor& a, const Tensor& b);
Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t end);
// Vertical stacking; all parts need the same column count.
Tensor stack_rows(std::span<const Tensor> parts);

Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
// Exact form 0.5 x (1 + erf(x / sqrt 2)).
Tensor gelu(const Tensor& a);

// out[i] = a[idx[i]]; duplicate indices accumulate gradient.
Tensor index_select(const Tensor& a, std::span<const std::size_t> idx);

// out[g] = reduce over { a[i] : group[i] == g }. Empty groups yield zero rows.
// Max ties resolve to the lowest input row, which alone receives the gradient.
Tensor scatter_reduce(const Tensor& a, std::span<const std::size_t> group,
                      std::size_t n_groups, ScatterKind kind);

// Column-wise softmax over the rows of each group.
Tensor softmax_rows_grouped(const Tensor& a, std::span<const std::size_t> group,
                            std::size_t n_groups);

// Per-row -sum(target * log softmax(logits)); result is rows x 1.
Tensor cross_entropy_rows(const Tensor& logits, const Tensor& targets);
// Row average of cross_entropy_rows; result is 1 x 1.
Tensor cross_entropy(const Tensor& logits, const Tensor& targets);

// Reduces all entries to a 1 x 1 tensor.
Tensor reduce(const Tensor& a, ReduceKind kind);

}  // namespace relnn::tensor
