#pragma once

#include <optional>
#include <string>

#include "relnn/nra/term_graph.hpp"
#include "relnn/relmodel/relation.hpp"
#include "relnn/tensor/parameter_store.hpp"

// Reference evaluator: nested-loop joins, explicit multiset aggregation and
// dense per-tuple algebra. Shares no kernels with the executor.
namespace relnn::exec {

rel::EmbeddedRelation naive_evaluate(const nra::TermGraph& graph, nra::NodeId root, const rel::Database& db,
                                     const tensor::ParameterStore& store);

// First difference beyond tol between two relations (schema, content or an
// embedding entry), or nullopt when they agree.
std::optional<std::string> diff_relations(const rel::EmbeddedRelation& a, const rel::EmbeddedRelation& b,
                                          double tol);

}  // namespace relnn::exec
