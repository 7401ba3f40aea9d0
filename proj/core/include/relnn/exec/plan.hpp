#pragma once

#include <string>
#include <vector>

#include "relnn/nra/term_graph.hpp"

namespace relnn::exec {

using nra::NodeId;

enum class InstrOp {
  Scan,          // database relation (constant or per-row parameters)
  Merge,         // hash join, emits left/right row-index vectors
  Gather,        // index_select on the embedding
  Concat,        // column concatenation
  Stack,         // row concatenation of union inputs
  GroupBy,       // emits a group-index vector and the key table
  Scatter,       // scatter_reduce with the aggregator
  LayerForward,  // transformation expression
  FilterMask,    // predicate mask over content rows
  AntiJoin,      // set difference rows
  Rename,
  Encode,
  Decode,
};

const char* to_string(InstrOp op);

struct Instruction {
  InstrOp op = InstrOp::Scan;
  NodeId node = -1;  // NRA node the instruction realizes
  std::string detail;
};

struct PhysicalPlan {
  NodeId root = -1;
  std::vector<NodeId> nodes;  // ascending ids, the logical plan
  std::vector<Instruction> instructions;

  std::string dump() const;
};

PhysicalPlan compile_physical(const nra::TermGraph& graph, NodeId root);

}  // namespace relnn::exec
