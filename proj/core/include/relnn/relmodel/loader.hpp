#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "relnn/relmodel/relation.hpp"
#include "relnn/tensor/parameter_store.hpp"

namespace relnn::rel {

enum class ColumnRole { Content, Feature, Skip };

struct ColumnDecl {
  std::string name;
  ColumnRole role = ColumnRole::Content;
};

ColumnRole parse_role(const std::string& text);

// Reads a headed CSV. Content columns become attributes (tag inferred per
// column), feature columns are concatenated in declaration order into the
// embedding. With an empty decl every column is content.
EmbeddedRelation load_relation_csv(const std::filesystem::path& path, const std::string& name,
                                   const std::vector<ColumnDecl>& decl);

// Parameter key of row i of a learnable relation.
tensor::ParamKey embedding_key(const std::string& relation, std::size_t row);

// Registers one 1 x d parameter per row under embedding_key, N(0, 1/d) from
// rng_seed, and returns the relation carrying those initial values. Existing
// keys keep their current values.
EmbeddedRelation attach_learnable_embeddings(const EmbeddedRelation& rel, const std::string& name,
                                             std::size_t d, tensor::ParameterStore& store,
                                             std::uint64_t rng_seed);

}  // namespace relnn::rel
