#pragma once

#include <span>
#include <string>
#include <vector>

#include "relnn/nra/term_graph.hpp"
#include "relnn/relmodel/relation.hpp"
#include "relnn/tensor/ops.hpp"

// Eager NRA operators over tensor relations. Each one runs a content kernel
// and replays its indices on the embedding tensor, so gradients flow through
// the embedding side only.
namespace relnn::nra {

struct TensorRelation {
  ContentPtr content;
  Tensor emb;  // content->size() x d

  std::size_t size() const { return content->size(); }
  std::size_t dim() const { return emb.cols(); }
};

// Constant tensor relation holding r's rows and embedding.
TensorRelation from_relation(const rel::EmbeddedRelation& r);

// Database relation as a tensor relation. Learnable relations bind one
// parameter per row through binding; others are constants.
TensorRelation leaf_relation(const rel::Database& db, const std::string& name,
                             tensor::ParameterBinding* binding);

TensorRelation join(const TensorRelation& left, const TensorRelation& right);
TensorRelation projected_union(std::span<const TensorRelation> inputs,
                               const std::vector<std::string>& attrs, AggKind agg);
TensorRelation transform(const TensorRelation& r, const TExpr& texpr,
                         tensor::ParameterBinding& binding);
TensorRelation select(const TensorRelation& r, const std::vector<Predicate>& preds);
TensorRelation difference(const TensorRelation& left, const TensorRelation& right);
TensorRelation rename(const TensorRelation& r, const std::vector<std::string>& new_attrs);
TensorRelation encode(const TensorRelation& r, const std::vector<EncodeItem>& items);
TensorRelation decode(const TensorRelation& r, std::size_t begin, std::size_t end,
                      const std::vector<std::string>& names);

// Shared kernels (also used by the executor).
tensor::ScatterKind scatter_kind(AggKind agg);
// Rows of the appended encode block.
tensor::Matrix encode_matrix(const Content& c, const std::vector<EncodeItem>& items);
// Content with emb columns [begin, end) appended as float attributes.
Content decode_content(const Content& c, const tensor::Matrix& emb, std::size_t begin,
                       std::size_t end, const std::vector<std::string>& names);
// Groups for Softmax: all attributes but the first.
GroupResult softmax_groups(const Content& c);

// Back to a plain relation (values detached).
rel::EmbeddedRelation to_relation(const TensorRelation& r);

}  // namespace relnn::nra
