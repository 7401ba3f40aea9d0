#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "relnn/frontend/expand.hpp"
#include "relnn/nra/term_graph.hpp"
#include "relnn/relmodel/relation.hpp"
#include "relnn/tensor/parameter_store.hpp"

namespace relnn::lowering {

class LoweringError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A ?fit or ?pred statement bound to the node of its target relation.
struct Action {
  enum class Kind { Fit, Pred };
  Kind kind = Kind::Pred;
  std::string relation;
  nra::NodeId node = -1;
  std::vector<std::pair<std::string, frontend::Expr>> kwargs;
};

struct LoweredProgram {
  nra::TermGraph graph;
  // Database leaves that were referenced plus every rule head.
  std::map<std::string, nra::NodeId> relations;
  std::vector<std::string> heads;  // rule heads in definition order
  frontend::ScalarEnv scalars;
  std::vector<Action> actions;

  // Throws LoweringError for undefined names.
  nra::NodeId node_of(const std::string& relation) const;
};

// Rows of the database relations, for relation-tuple replicator domains.
frontend::ExpandContext expand_context(const rel::Database& db);

// parse -> expand_templates -> inline_functions -> range restriction.
frontend::Program flatten(const std::string& source, const rel::Database& db);

// Builds the term graph of a flat program. Layer parameters are registered
// in store (existing keys keep their values).
LoweredProgram lower(const frontend::Program& flat, const rel::Database& db, tensor::ParameterStore& store);

}  // namespace relnn::lowering
