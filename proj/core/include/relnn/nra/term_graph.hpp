#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "relnn/nra/content.hpp"
#include "relnn/nra/predicate.hpp"
#include "relnn/nra/texpr.hpp"

namespace relnn::nra {

using NodeId = std::int32_t;

enum class NodeKind { Leaf, Join, ProjectedUnion, Transform, Select, Difference, Rename, Encode, Decode };
enum class AggKind { Sum, Mean, Max };

const char* to_string(NodeKind k);
const char* to_string(AggKind k);
AggKind parse_agg(const std::string& name);  // sum | mean | max

// One bracketed encode item. Numeric and boolean attributes tensorize to one
// column; categorical ones one-hot against a vocabulary.
struct EncodeItem {
  std::string attr;
  std::vector<std::string> vocab;  // empty: numeric/boolean
  std::size_t width() const { return vocab.empty() ? 1 : vocab.size(); }
  bool operator==(const EncodeItem&) const = default;
};

struct NodeSchema {
  std::vector<std::string> attrs;
  std::size_t dim = 0;
  bool operator==(const NodeSchema&) const = default;
  std::string str() const;
};

struct Node {
  NodeId id = -1;
  NodeKind kind = NodeKind::Leaf;
  std::vector<NodeId> children;
  NodeSchema schema;

  std::string relation;                  // Leaf
  AggKind agg = AggKind::Mean;           // ProjectedUnion
  std::vector<std::string> group_attrs;  // ProjectedUnion
  TExprPtr texpr;                        // Transform
  std::vector<Predicate> predicates;     // Select
  std::vector<std::string> renamed;      // Rename: new names, positional
  std::vector<EncodeItem> encode;        // Encode
  std::size_t dec_begin = 0;             // Decode
  std::size_t dec_end = 0;
  std::vector<std::string> dec_names;

  // Relation names defined by this node (a rule head, possibly aliased).
  std::vector<std::string> labels;
};

// The program-wide DAG of NRA operators. Children always have smaller ids
// than their parents, so id order is a topological order. Every builder
// derives and checks the output schema.
class TermGraph {
 public:
  // One leaf per database relation name.
  NodeId leaf(const std::string& relation, const NodeSchema& schema);
  NodeId join(NodeId left, NodeId right);
  NodeId projected_union(std::vector<NodeId> inputs, std::vector<std::string> attrs, AggKind agg);
  NodeId transform(NodeId child, TExprPtr texpr);
  NodeId select(NodeId child, std::vector<Predicate> predicates);
  NodeId difference(NodeId left, NodeId right);
  NodeId rename(NodeId child, std::vector<std::string> new_attrs);
  NodeId encode(NodeId child, std::vector<EncodeItem> items);
  NodeId decode(NodeId child, std::size_t begin, std::size_t end, std::vector<std::string> names);

  void add_label(NodeId id, const std::string& name);

  const Node& node(NodeId id) const;
  std::size_t size() const { return nodes_.size(); }

  // Ancestor-closed sub-DAG rooted at root, ascending ids (each node once).
  std::vector<NodeId> extract_plan(NodeId root) const;

  // Deterministic listing: one line per node of the plan.
  std::string dump(NodeId root) const;

 private:
  NodeId push(Node n);
  std::vector<Node> nodes_;
};

}  // namespace relnn::nra
