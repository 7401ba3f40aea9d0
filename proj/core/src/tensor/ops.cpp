#include "relnn/tensor/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace relnn::tensor {
namespace {

Tape* common_tape(std::span<const Tensor> inputs) {
  Tape* tape = nullptr;
  for (const auto& t : inputs) {
    if (!t.tracked()) continue;
    if (tape != nullptr && tape != t.tape()) {
      throw std::logic_error("operands recorded on different tapes");
    }
    tape = t.tape();
  }
  return tape;
}

Tensor finish(std::span<const Tensor> inputs, OpKind kind, Matrix value, Tape::BackwardFn fn) {
  Tape* tape = common_tape(inputs);
  if (tape == nullptr) return Tensor(std::move(value));
  std::vector<NodeId> ids;
  for (const auto& t : inputs) {
    if (t.tracked()) ids.push_back(t.node());
  }
  return tape->record(kind, std::move(ids), std::move(value), std::move(fn));
}

Tensor finish1(const Tensor& a, OpKind kind, Matrix value, Tape::BackwardFn fn) {
  return finish(std::span<const Tensor>(&a, 1), kind, std::move(value), std::move(fn));
}

Tensor finish2(const Tensor& a, const Tensor& b, OpKind kind, Matrix value, Tape::BackwardFn fn) {
  const Tensor both[] = {a, b};
  return finish(both, kind, std::move(value), std::move(fn));
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.value().same_shape(b.value())) {
    throw ShapeError(std::string(op) + ": shape mismatch " + a.value().shape_string() + " vs " +
                     b.value().shape_string());
  }
}

Matrix matmul_raw(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  }
  return out;
}

Matrix transpose_raw(const Matrix& a) {
  Matrix out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  return out;
}

template <class F>
Matrix map_raw(const Matrix& a, F f) {
  Matrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = f(a.data()[i]);
  return out;
}

void check_indices(std::span<const std::size_t> idx, std::size_t bound, const char* op) {
  for (auto i : idx) {
    if (i >= bound) {
      throw IndexError(std::string(op) + ": index " + std::to_string(i) + " out of range [0, " +
                       std::to_string(bound) + ")");
    }
  }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: " + a.value().shape_string() + " @ " + b.value().shape_string());
  }
  Matrix out = matmul_raw(a.value(), b.value());
  return finish2(a, b, OpKind::MatMul, std::move(out), [a, b](const Matrix& g, Tape& tape) {
    if (a.tracked()) tape.accumulate(a, matmul_raw(g, transpose_raw(b.value())));
    if (b.tracked()) tape.accumulate(b, matmul_raw(transpose_raw(a.value()), g));
  });
}

Tensor transpose(const Tensor& a) {
  return finish1(a, OpKind::Transpose, transpose_raw(a.value()),
                 [a](const Matrix& g, Tape& tape) { tape.accumulate(a, transpose_raw(g)); });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  Matrix out = a.value();
  out += b.value();
  return finish2(a, b, OpKind::Add, std::move(out), [a, b](const Matrix& g, Tape& tape) {
    tape.accumulate(a, g);
    tape.accumulate(b, g);
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  Matrix out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] -= b.value().data()[i];
  return finish2(a, b, OpKind::Sub, std::move(out), [a, b](const Matrix& g, Tape& tape) {
    tape.accumulate(a, g);
    if (b.tracked()) tape.accumulate(b, map_raw(g, [](double x) { return -x; }));
  });
}

Tensor mul_elementwise(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul_elementwise");
  Matrix out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] *= b.value().data()[i];
  return finish2(a, b, OpKind::Mul, std::move(out), [a, b](const Matrix& g, Tape& tape) {
    if (a.tracked()) {
      Matrix ga = g;
      for (std::size_t i = 0; i < ga.size(); ++i) ga.data()[i] *= b.value().data()[i];
      tape.accumulate(a, ga);
    }
    if (b.tracked()) {
      Matrix gb = g;
      for (std::size_t i = 0; i < gb.size(); ++i) gb.data()[i] *= a.value().data()[i];
      tape.accumulate(b, gb);
    }
  });
}

Tensor scale(const Tensor& a, double c) {
  return finish1(a, OpKind::Scale, map_raw(a.value(), [c](double x) { return c * x; }),
                 [a, c](const Matrix& g, Tape& tape) {
                   tape.accumulate(a, map_raw(g, [c](double x) { return c * x; }));
                 });
}

Tensor add_scalar(const Tensor& a, double c) {
  return finish1(a, OpKind::AddScalar, map_raw(a.value(), [c](double x) { return x + c; }),
                 [a](const Matrix& g, Tape& tape) { tape.accumulate(a, g); });
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  const Tensor parts[] = {a, b};
  return concat_cols(parts);
}

Tensor concat_cols(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no operands");
  const std::size_t n = parts.front().rows();
  std::size_t width = 0;
  for (const auto& p : parts) {
    if (p.rows() != n) {
      throw ShapeError("concat_cols: row mismatch " + std::to_string(p.rows()) + " vs " +
                       std::to_string(n));
    }
    width += p.cols();
  }
  Matrix out(n, width);
  std::size_t offset = 0;
  for (const auto& p : parts) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < p.cols(); ++j) out(i, offset + j) = p.value()(i, j);
    offset += p.cols();
  }
  std::vector<Tensor> saved(parts.begin(), parts.end());
  return finish(parts, OpKind::ConcatCols, std::move(out), [saved](const Matrix& g, Tape& tape) {
    std::size_t off = 0;
    for (const auto& p : saved) {
      if (p.tracked()) {
        Matrix gp(p.rows(), p.cols());
        for (std::size_t i = 0; i < gp.rows(); ++i)
          for (std::size_t j = 0; j < gp.cols(); ++j) gp(i, j) = g(i, off + j);
        tape.accumulate(p, gp);
      }
      off += p.cols();
    }
  });
}

Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t end) {
  if (begin > end || end > a.cols()) {
    throw IndexError("slice_cols: [" + std::to_string(begin) + ", " + std::to_string(end) +
                     ") out of range for width " + std::to_string(a.cols()));
  }
  Matrix out(a.rows(), end - begin);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = begin; j < end; ++j) out(i, j - begin) = a.value()(i, j);
  return finish1(a, OpKind::SliceCols, std::move(out), [a, begin](const Matrix& g, Tape& tape) {
    Matrix ga(a.rows(), a.cols());
    for (std::size_t i = 0; i < g.rows(); ++i)
      for (std::size_t j = 0; j < g.cols(); ++j) ga(i, begin + j) = g(i, j);
    tape.accumulate(a, ga);
  });
}

Tensor stack_rows(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("stack_rows: no operands");
  const std::size_t width = parts.front().cols();
  std::size_t n = 0;
  for (const auto& p : parts) {
    if (p.cols() != width) {
      throw ShapeError("stack_rows: width mismatch " + std::to_string(p.cols()) + " vs " +
                       std::to_string(width));
    }
    n += p.rows();
  }
  std::vector<double> data;
  data.reserve(n * width);
  for (const auto& p : parts) data.insert(data.end(), p.value().data().begin(), p.value().data().end());
  std::vector<Tensor> saved(parts.begin(), parts.end());
  return finish(parts, OpKind::StackRows, Matrix(n, width, std::move(data)),
                [saved](const Matrix& g, Tape& tape) {
                  std::size_t row = 0;
                  for (const auto& p : saved) {
                    if (p.tracked()) {
                      Matrix gp(p.rows(), p.cols());
                      std::copy_n(g.data().begin() + static_cast<std::ptrdiff_t>(row * g.cols()),
                                  gp.size(), gp.data().begin());
                      tape.accumulate(p, gp);
                    }
                    row += p.rows();
                  }
                });
}

Tensor relu(const Tensor& a) {
  return finish1(a, OpKind::Relu, map_raw(a.value(), [](double x) { return x > 0.0 ? x : 0.0; }),
                 [a](const Matrix& g, Tape& tape) {
                   Matrix ga = g;
                   for (std::size_t i = 0; i < ga.size(); ++i)
                     if (a.value().data()[i] <= 0.0) ga.data()[i] = 0.0;
                   tape.accumulate(a, ga);
                 });
}

Tensor sigmoid(const Tensor& a) {
  Matrix out = map_raw(a.value(), [](double x) { return 1.0 / (1.0 + std::exp(-x)); });
  auto y = std::make_shared<const Matrix>(out);
  return finish1(a, OpKind::Sigmoid, std::move(out), [a, y](const Matrix& g, Tape& tape) {
    Matrix ga = g;
    for (std::size_t i = 0; i < ga.size(); ++i) {
      const double s = y->data()[i];
      ga.data()[i] *= s * (1.0 - s);
    }
    tape.accumulate(a, ga);
  });
}

Tensor gelu(const Tensor& a) {
  constexpr double inv_sqrt2 = 1.0 / std::numbers::sqrt2;
  const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  Matrix out = map_raw(a.value(), [](double x) { return 0.5 * x * (1.0 + std::erf(x * inv_sqrt2)); });
  return finish1(a, OpKind::Gelu, std::move(out), [a, inv_sqrt_2pi](const Matrix& g, Tape& tape) {
    Matrix ga = g;
    for (std::size_t i = 0; i < ga.size(); ++i) {
      const double x = a.value().data()[i];
      const double cdf = 0.5 * (1.0 + std::erf(x * inv_sqrt2));
      const double pdf = inv_sqrt_2pi * std::exp(-0.5 * x * x);
      ga.data()[i] *= cdf + x * pdf;
    }
    tape.accumulate(a, ga);
  });
}

Tensor index_select(const Tensor& a, std::span<const std::size_t> idx) {
  check_indices(idx, a.rows(), "index_select");
  const std::size_t w = a.cols();
  Matrix out(idx.size(), w);
  for (std::size_t i = 0; i < idx.size(); ++i)
    for (std::size_t j = 0; j < w; ++j) out(i, j) = a.value()(idx[i], j);
  std::vector<std::size_t> saved(idx.begin(), idx.end());
  return finish1(a, OpKind::IndexSelect, std::move(out),
                 [a, saved = std::move(saved)](const Matrix& g, Tape& tape) {
                   Matrix ga(a.rows(), a.cols());
                   for (std::size_t i = 0; i < saved.size(); ++i)
                     for (std::size_t j = 0; j < ga.cols(); ++j) ga(saved[i], j) += g(i, j);
                   tape.accumulate(a, ga);
                 });
}

Tensor scatter_reduce(const Tensor& a, std::span<const std::size_t> group, std::size_t n_groups,
                      ScatterKind kind) {
  if (group.size() != a.rows()) {
    throw ShapeError("scatter_reduce: " + std::to_string(group.size()) + " group ids for " +
                     std::to_string(a.rows()) + " rows");
  }
  check_indices(group, n_groups, "scatter_reduce");
  const std::size_t w = a.cols();
  std::vector<std::size_t> saved(group.begin(), group.end());
  std::vector<double> counts(n_groups, 0.0);
  for (auto g : group) counts[g] += 1.0;

  if (kind == ScatterKind::Max) {
    // argmax[g * w + j] = winning input row, or npos for empty groups.
    constexpr auto npos = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> argmax(n_groups * w, npos);
    Matrix out(n_groups, w);
    for (std::size_t i = 0; i < a.rows(); ++i) {
      for (std::size_t j = 0; j < w; ++j) {
        std::size_t& best = argmax[group[i] * w + j];
        // strict > keeps the lowest row on ties
        if (best == npos || a.value()(i, j) > a.value()(best, j)) best = i;
      }
    }
    for (std::size_t g = 0; g < n_groups; ++g)
      for (std::size_t j = 0; j < w; ++j)
        if (argmax[g * w + j] != npos) out(g, j) = a.value()(argmax[g * w + j], j);
    return finish1(a, OpKind::ScatterMax, std::move(out),
                   [a, w, argmax = std::move(argmax)](const Matrix& g, Tape& tape) {
                     Matrix ga(a.rows(), a.cols());
                     for (std::size_t k = 0; k < argmax.size(); ++k) {
                       if (argmax[k] == std::numeric_limits<std::size_t>::max()) continue;
                       ga(argmax[k], k % w) += g(k / w, k % w);
                     }
                     tape.accumulate(a, ga);
                   });
  }

  const bool mean = kind == ScatterKind::Mean;
  Matrix out(n_groups, w);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < w; ++j) out(group[i], j) += a.value()(i, j);
  if (mean) {
    for (std::size_t g = 0; g < n_groups; ++g)
      if (counts[g] > 0)
        for (std::size_t j = 0; j < w; ++j) out(g, j) /= counts[g];
  }
  return finish1(a, mean ? OpKind::ScatterMean : OpKind::ScatterSum, std::move(out),
                 [a, mean, saved = std::move(saved), counts = std::move(counts)](const Matrix& g,
                                                                               Tape& tape) {
                   Matrix ga(a.rows(), a.cols());
                   for (std::size_t i = 0; i < saved.size(); ++i) {
                     const double f = mean ? 1.0 / counts[saved[i]] : 1.0;
                     for (std::size_t j = 0; j < ga.cols(); ++j) ga(i, j) = f * g(saved[i], j);
                   }
                   tape.accumulate(a, ga);
                 });
}

Tensor softmax_rows_grouped(const Tensor& a, std::span<const std::size_t> group,
                            std::size_t n_groups) {
  if (group.size() != a.rows()) {
    throw ShapeError("softmax_rows_grouped: " + std::to_string(group.size()) +
                     " group ids for " + std::to_string(a.rows()) + " rows");
  }
  check_indices(group, n_groups, "softmax_rows_grouped");
  const std::size_t w = a.cols();
  Matrix peak(n_groups, w, -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < w; ++j) peak(group[i], j) = std::max(peak(group[i], j), a.value()(i, j));
  Matrix out(a.rows(), w);
  Matrix denom(n_groups, w);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < w; ++j) {
      out(i, j) = std::exp(a.value()(i, j) - peak(group[i], j));
      denom(group[i], j) += out(i, j);
    }
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < w; ++j) out(i, j) /= denom(group[i], j);
  auto y = std::make_shared<const Matrix>(out);
  std::vector<std::size_t> saved(group.begin(), group.end());
  return finish1(a, OpKind::GroupedSoftmax, std::move(out),
                 [a, y, n_groups, saved = std::move(saved)](const Matrix& g, Tape& tape) {
                   const std::size_t w = y->cols();
                   // dL/dx_i = y_i (g_i - sum_{k in group} g_k y_k)
                   Matrix dot(n_groups, w);
                   for (std::size_t i = 0; i < saved.size(); ++i)
                     for (std::size_t j = 0; j < w; ++j) dot(saved[i], j) += g(i, j) * (*y)(i, j);
                   Matrix ga(y->rows(), w);
                   for (std::size_t i = 0; i < saved.size(); ++i)
                     for (std::size_t j = 0; j < w; ++j)
                       ga(i, j) = (*y)(i, j) * (g(i, j) - dot(saved[i], j));
                   tape.accumulate(a, ga);
                 });
}

Tensor cross_entropy_rows(const Tensor& logits, const Tensor& targets) {
  require_same_shape(logits, targets, "cross_entropy");
  const std::size_t n = logits.rows();
  const std::size_t c = logits.cols();
  Matrix probs(n, c);
  Matrix out(n, 1);
  for (std::size_t i = 0; i < n; ++i) {
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < c; ++j) peak = std::max(peak, logits.value()(i, j));
    double sum = 0.0;
    for (std::size_t j = 0; j < c; ++j) sum += std::exp(logits.value()(i, j) - peak);
    const double log_z = peak + std::log(sum);
    double loss = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      const double log_p = logits.value()(i, j) - log_z;
      probs(i, j) = std::exp(log_p);
      loss -= targets.value()(i, j) * log_p;
    }
    out(i, 0) = loss;
  }
  auto p = std::make_shared<const Matrix>(std::move(probs));
  return finish2(logits, targets, OpKind::CrossEntropyRows, std::move(out),
                 [logits, targets, p](const Matrix& g, Tape& tape) {
                   const std::size_t n = p->rows();
                   const std::size_t c = p->cols();
                   if (logits.tracked()) {
                     Matrix gl(n, c);
                     for (std::size_t i = 0; i < n; ++i) {
                       double tsum = 0.0;
                       for (std::size_t j = 0; j < c; ++j) tsum += targets.value()(i, j);
                       for (std::size_t j = 0; j < c; ++j)
                         gl(i, j) = g(i, 0) * ((*p)(i, j) * tsum - targets.value()(i, j));
                     }
                     tape.accumulate(logits, gl);
                   }
                   if (targets.tracked()) {
                     Matrix gt(n, c);
                     for (std::size_t i = 0; i < n; ++i)
                       for (std::size_t j = 0; j < c; ++j)
                         gt(i, j) = -g(i, 0) * std::log((*p)(i, j));
                     tape.accumulate(targets, gt);
                   }
                 });
}

Tensor cross_entropy(const Tensor& logits, const Tensor& targets) {
  return reduce(cross_entropy_rows(logits, targets), ReduceKind::Mean);
}

Tensor reduce(const Tensor& a, ReduceKind kind) {
  double total = 0.0;
  for (double x : a.value().data()) total += x;
  const bool mean = kind == ReduceKind::Mean;
  const double count = static_cast<double>(a.value().size());
  if (mean) {
    if (count == 0) throw ShapeError("reduce(mean) of an empty tensor");
    total /= count;
  }
  return finish1(a, mean ? OpKind::ReduceMean : OpKind::ReduceSum, Matrix(1, 1, total),
                 [a, mean, count](const Matrix& g, Tape& tape) {
                   tape.accumulate(a, Matrix(a.rows(), a.cols(), mean ? g(0, 0) / count : g(0, 0)));
                 });
}

}  // namespace relnn::tensor
