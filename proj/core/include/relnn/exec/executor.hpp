#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "relnn/exec/plan.hpp"
#include "relnn/frontend/expand.hpp"
#include "relnn/nra/operators.hpp"
#include "relnn/relmodel/relation.hpp"
#include "relnn/tensor/optimizer.hpp"

namespace relnn::exec {

class ExecError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FitConfig {
  std::int64_t epochs = 100;
  double lr = 0.01;
  double weight_decay = 0.0;
  tensor::OptimizerKind optimizer = tensor::OptimizerKind::Adam;

  tensor::OptimizerConfig optimizer_config() const;
};

// Reads epochs, lr, weight_decay and optimizer ('adam' or 'sgd'); anything
// else is rejected. Scalar aliases may appear in the values.
FitConfig parse_fit_config(const std::vector<std::pair<std::string, frontend::Expr>>& kwargs,
                           const frontend::ScalarEnv& env);

// Runs physical plans over one database. Content work (joins, groupings,
// masks, encode blocks) is parameter independent and is computed once per
// node; only nodes downstream of a Decode redo it on every evaluation.
class Executor {
 public:
  Executor(const nra::TermGraph& graph, const rel::Database& db);

  // Forward pass on binding's tape.
  nra::TensorRelation run(const PhysicalPlan& plan, tensor::ParameterBinding& binding);

  // Forward pass on a scratch tape; values only.
  rel::EmbeddedRelation evaluate(const PhysicalPlan& plan, tensor::ParameterStore& store);

  // Per-epoch loss trace (loss before each update). The store is updated in
  // place; optimizer moments restart with every call.
  std::vector<double> fit(const PhysicalPlan& plan, const FitConfig& config, tensor::ParameterStore& store);

  const nra::TermGraph& graph() const { return graph_; }

 private:
  struct Cache {
    nra::ContentPtr content;
    std::vector<std::size_t> a;  // join left / select / difference rows / group ids
    std::vector<std::size_t> b;  // join right
    std::size_t n_groups = 0;
    tensor::Tensor constant;     // leaf embedding or encode block
    bool ready = false;
  };

  nra::TensorRelation node_value(NodeId id, const std::vector<const nra::TensorRelation*>& in,
                                 tensor::ParameterBinding& binding);
  bool dynamic(NodeId id);

  const nra::TermGraph& graph_;
  const rel::Database& db_;
  std::map<NodeId, Cache> cache_;
  std::map<NodeId, bool> dynamic_;
};

// CSV with header attr1,...,attrk,emb_0,...,emb_{d-1}; floats with 17
// significant digits.
void write_relation_csv(const rel::EmbeddedRelation& r, const std::filesystem::path& path);
std::string relation_csv(const rel::EmbeddedRelation& r);

// One loss value per line.
void write_loss_trace(const std::vector<double>& trace, const std::filesystem::path& path);

}  // namespace relnn::exec
