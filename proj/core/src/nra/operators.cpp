#include "relnn/nra/operators.hpp"

#include <algorithm>

#include "relnn/relmodel/loader.hpp"
#include "relnn/tensor/ops.hpp"

namespace relnn::nra {

using tensor::Matrix;

namespace {

ContentPtr share(Content c) { return std::make_shared<const Content>(std::move(c)); }

}  // namespace

TensorRelation from_relation(const rel::EmbeddedRelation& r) {
  return {share(Content{r.attrs(), r.rows()}), Tensor(r.emb())};
}

TensorRelation leaf_relation(const rel::Database& db, const std::string& name,
                             tensor::ParameterBinding* binding) {
  const auto& r = db.at(name);
  Content c{r.attrs(), r.rows()};
  if (!db.learnable(name) || binding == nullptr) return {share(std::move(c)), Tensor(r.emb())};
  if (r.empty()) return {share(std::move(c)), Tensor(Matrix(0, r.dim()))};
  std::vector<Tensor> rows;
  rows.reserve(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) rows.push_back(binding->get(rel::embedding_key(name, i)));
  return {share(std::move(c)), tensor::stack_rows(rows)};
}

TensorRelation join(const TensorRelation& left, const TensorRelation& right) {
  JoinResult j = hash_join(*left.content, *right.content);
  Tensor l = tensor::index_select(left.emb, j.left);
  Tensor r = tensor::index_select(right.emb, j.right);
  return {share(std::move(j.content)), tensor::concat_cols(l, r)};
}

tensor::ScatterKind scatter_kind(AggKind agg) {
  switch (agg) {
    case AggKind::Sum: return tensor::ScatterKind::Sum;
    case AggKind::Mean: return tensor::ScatterKind::Mean;
    case AggKind::Max: return tensor::ScatterKind::Max;
  }
  return tensor::ScatterKind::Mean;
}

TensorRelation projected_union(std::span<const TensorRelation> inputs,
                               const std::vector<std::string>& attrs, AggKind agg) {
  if (inputs.empty()) throw NraError("projected union needs at least one input");
  std::vector<const Content*> contents;
  std::vector<Tensor> embs;
  for (const auto& in : inputs) {
    if (in.dim() != inputs.front().dim()) throw NraError("projected union inputs differ in width");
    contents.push_back(in.content.get());
    embs.push_back(in.emb);
  }
  GroupResult g = group_by(contents, attrs);
  Tensor stacked = embs.size() == 1 ? embs.front() : tensor::stack_rows(embs);
  Tensor out = tensor::scatter_reduce(stacked, g.group, g.keys.size(), scatter_kind(agg));
  return {share(std::move(g.keys)), out};
}

GroupResult softmax_groups(const Content& c) {
  if (c.attrs.empty()) throw NraError("Softmax needs at least one attribute");
  std::vector<std::string> rest(c.attrs.begin() + 1, c.attrs.end());
  const Content* in[] = {&c};
  return group_by(in, rest);
}

TensorRelation transform(const TensorRelation& r, const TExpr& texpr,
                         tensor::ParameterBinding& binding) {
  if (uses_group_softmax(texpr)) {
    GroupResult g = softmax_groups(*r.content);
    RowGroups rg{g.group, g.keys.size()};
    return {r.content, eval_texpr(texpr, r.emb, binding, &rg)};
  }
  return {r.content, eval_texpr(texpr, r.emb, binding)};
}

TensorRelation select(const TensorRelation& r, const std::vector<Predicate>& preds) {
  auto kept = select_rows(*r.content, preds);
  return {share(take_rows(*r.content, kept)), tensor::index_select(r.emb, kept)};
}

TensorRelation difference(const TensorRelation& left, const TensorRelation& right) {
  auto kept = difference_rows(*left.content, *right.content);
  return {share(take_rows(*left.content, kept)), tensor::index_select(left.emb, kept)};
}

TensorRelation rename(const TensorRelation& r, const std::vector<std::string>& new_attrs) {
  if (new_attrs.size() != r.content->attrs.size()) throw NraError("rename arity mismatch");
  Content c{new_attrs, r.content->rows};
  return {share(std::move(c)), r.emb};
}

Matrix encode_matrix(const Content& c, const std::vector<EncodeItem>& items) {
  std::size_t width = 0;
  for (const auto& it : items) width += it.width();
  Matrix out(c.size(), width);
  std::size_t col = 0;
  for (const auto& it : items) {
    const std::size_t a = c.attr_index(it.attr);
    for (std::size_t i = 0; i < c.size(); ++i) {
      const Value& v = c.rows[i][a];
      if (it.vocab.empty()) {
        if (rel::tag_of(v) == ValueTag::String) {
          throw NraError("cannot encode string value '" + rel::format_value(v) + "' of attribute " + it.attr +
                         " without a vocabulary");
        }
        out(i, col) = rel::tag_of(v) == ValueTag::Bool ? (std::get<bool>(v) ? 1.0 : 0.0) : rel::as_double(v);
      } else {
        const std::string s = rel::format_value(v);
        auto pos = std::find(it.vocab.begin(), it.vocab.end(), s);
        if (pos == it.vocab.end()) {
          throw NraError("value '" + s + "' of attribute " + it.attr + " is not in its vocabulary");
        }
        out(i, col + static_cast<std::size_t>(pos - it.vocab.begin())) = 1.0;
      }
    }
    col += it.width();
  }
  return out;
}

TensorRelation encode(const TensorRelation& r, const std::vector<EncodeItem>& items) {
  Tensor block(encode_matrix(*r.content, items));
  return {r.content, tensor::concat_cols(r.emb, block)};
}

Content decode_content(const Content& c, const Matrix& emb, std::size_t begin, std::size_t end,
                       const std::vector<std::string>& names) {
  if (begin >= end || end > emb.cols() || names.size() != end - begin) {
    throw NraError("bad decode slice");
  }
  Content out{c.attrs, c.rows};
  for (const auto& n : names) {
    if (out.find_attr(n)) throw NraError("decoded attribute '" + n + "' already exists");
    out.attrs.push_back(n);
  }
  // Appending columns after a unique prefix keeps the order canonical.
  for (std::size_t i = 0; i < out.rows.size(); ++i) {
    for (std::size_t k = begin; k < end; ++k) out.rows[i].push_back(emb(i, k));
  }
  return out;
}

TensorRelation decode(const TensorRelation& r, std::size_t begin, std::size_t end,
                      const std::vector<std::string>& names) {
  return {share(decode_content(*r.content, r.emb.value(), begin, end, names)), r.emb};
}

rel::EmbeddedRelation to_relation(const TensorRelation& r) {
  return rel::EmbeddedRelation::from_sorted(r.content->attrs, r.content->rows, r.emb.value());
}

}  // namespace relnn::nra
