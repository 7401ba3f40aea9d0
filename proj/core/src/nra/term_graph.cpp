#include "relnn/nra/term_graph.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace relnn::nra {

const char* to_string(NodeKind k) {
  switch (k) {
    case NodeKind::Leaf: return "leaf";
    case NodeKind::Join: return "join";
    case NodeKind::ProjectedUnion: return "union";
    case NodeKind::Transform: return "transform";
    case NodeKind::Select: return "select";
    case NodeKind::Difference: return "difference";
    case NodeKind::Rename: return "rename";
    case NodeKind::Encode: return "encode";
    case NodeKind::Decode: return "decode";
  }
  return "?";
}

const char* to_string(AggKind k) {
  switch (k) {
    case AggKind::Sum: return "sum";
    case AggKind::Mean: return "mean";
    case AggKind::Max: return "max";
  }
  return "?";
}

AggKind parse_agg(const std::string& name) {
  if (name == "sum") return AggKind::Sum;
  if (name == "mean") return AggKind::Mean;
  if (name == "max") return AggKind::Max;
  throw NraError("unknown aggregator '" + name + "'");
}

std::string NodeSchema::str() const {
  std::string s = "(";
  for (std::size_t i = 0; i < attrs.size(); ++i) s += (i ? "," : "") + attrs[i];
  return s + "; d=" + std::to_string(dim) + ")";
}

namespace {

void require_distinct(const std::vector<std::string>& attrs, const char* what) {
  std::set<std::string> seen;
  for (const auto& a : attrs) {
    if (!seen.insert(a).second) throw NraError(std::string(what) + ": repeated attribute '" + a + "'");
  }
}

bool has_attr(const NodeSchema& s, const std::string& a) {
  return std::find(s.attrs.begin(), s.attrs.end(), a) != s.attrs.end();
}

}  // namespace

NodeId TermGraph::push(Node n) {
  n.id = static_cast<NodeId>(nodes_.size());
  nodes_.push_back(std::move(n));
  return nodes_.back().id;
}

const Node& TermGraph::node(NodeId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size()) {
    throw NraError("no term-graph node " + std::to_string(id));
  }
  return nodes_[static_cast<std::size_t>(id)];
}

NodeId TermGraph::leaf(const std::string& relation, const NodeSchema& schema) {
  for (const auto& n : nodes_) {
    if (n.kind == NodeKind::Leaf && n.relation == relation) {
      if (n.schema != schema) throw NraError("leaf " + relation + " re-registered with another schema");
      return n.id;
    }
  }
  require_distinct(schema.attrs, "leaf");
  Node n;
  n.kind = NodeKind::Leaf;
  n.relation = relation;
  n.schema = schema;
  return push(std::move(n));
}

NodeId TermGraph::join(NodeId left, NodeId right) {
  const NodeSchema& l = node(left).schema;
  const NodeSchema& r = node(right).schema;
  Node n;
  n.kind = NodeKind::Join;
  n.children = {left, right};
  n.schema.attrs = l.attrs;
  for (const auto& a : r.attrs)
    if (!has_attr(l, a)) n.schema.attrs.push_back(a);
  n.schema.dim = l.dim + r.dim;
  return push(std::move(n));
}

NodeId TermGraph::projected_union(std::vector<NodeId> inputs, std::vector<std::string> attrs,
                                  AggKind agg) {
  if (inputs.empty()) throw NraError("projected union needs at least one input");
  require_distinct(attrs, "projected union");
  const std::size_t d = node(inputs.front()).schema.dim;
  for (auto id : inputs) {
    const NodeSchema& s = node(id).schema;
    for (const auto& a : attrs) {
      if (!has_attr(s, a)) {
        throw NraError("projected union attribute '" + a + "' is not among input attributes " + s.str());
      }
    }
    if (s.dim != d) {
      throw NraError("projected union inputs have embedding widths " + std::to_string(d) + " and " +
                     std::to_string(s.dim));
    }
  }
  Node n;
  n.kind = NodeKind::ProjectedUnion;
  n.children = std::move(inputs);
  n.agg = agg;
  n.group_attrs = attrs;
  n.schema.attrs = std::move(attrs);
  n.schema.dim = d;
  return push(std::move(n));
}

NodeId TermGraph::transform(NodeId child, TExprPtr texpr) {
  const NodeSchema& c = node(child).schema;
  const std::size_t need = max_input_column(*texpr);
  if (need > c.dim) {
    throw TExprError("transformation reads " + std::to_string(need) + " embedding columns but the input has " +
                     std::to_string(c.dim));
  }
  if (uses_group_softmax(*texpr)) {
    if (texpr->op != TOp::GroupSoftmax) throw TExprError("Softmax must be the whole transformation");
    if (c.attrs.empty()) throw TExprError("Softmax needs at least one attribute to normalize over");
  }
  Node n;
  n.kind = NodeKind::Transform;
  n.children = {child};
  n.schema.attrs = c.attrs;
  n.schema.dim = output_width(*texpr);
  n.texpr = std::move(texpr);
  return push(std::move(n));
}

NodeId TermGraph::select(NodeId child, std::vector<Predicate> predicates) {
  const NodeSchema& c = node(child).schema;
  for (const auto& p : predicates) {
    std::vector<std::string> vars;
    collect_vars(*p.lhs, vars);
    collect_vars(*p.rhs, vars);
    for (const auto& v : vars) {
      if (!has_attr(c, v)) throw NraError("filter mentions unknown attribute '" + v + "'");
    }
  }
  Node n;
  n.kind = NodeKind::Select;
  n.children = {child};
  n.schema = c;
  n.predicates = std::move(predicates);
  return push(std::move(n));
}

NodeId TermGraph::difference(NodeId left, NodeId right) {
  const NodeSchema& l = node(left).schema;
  const NodeSchema& r = node(right).schema;
  if (l.attrs != r.attrs) throw NraError("difference of " + l.str() + " and " + r.str());
  Node n;
  n.kind = NodeKind::Difference;
  n.children = {left, right};
  n.schema = l;
  return push(std::move(n));
}

NodeId TermGraph::rename(NodeId child, std::vector<std::string> new_attrs) {
  const NodeSchema& c = node(child).schema;
  if (new_attrs.size() != c.attrs.size()) {
    throw NraError("rename of " + std::to_string(c.attrs.size()) + " attributes to " +
                   std::to_string(new_attrs.size()) + " names");
  }
  require_distinct(new_attrs, "rename");
  Node n;
  n.kind = NodeKind::Rename;
  n.children = {child};
  n.schema.attrs = new_attrs;
  n.schema.dim = c.dim;
  n.renamed = std::move(new_attrs);
  return push(std::move(n));
}

NodeId TermGraph::encode(NodeId child, std::vector<EncodeItem> items) {
  const NodeSchema& c = node(child).schema;
  Node n;
  n.kind = NodeKind::Encode;
  n.children = {child};
  n.schema = c;
  for (const auto& it : items) {
    if (!has_attr(c, it.attr)) throw NraError("encode of unknown attribute '" + it.attr + "'");
    n.schema.dim += it.width();
  }
  n.encode = std::move(items);
  return push(std::move(n));
}

NodeId TermGraph::decode(NodeId child, std::size_t begin, std::size_t end,
                         std::vector<std::string> names) {
  const NodeSchema& c = node(child).schema;
  if (begin >= end || end > c.dim) {
    throw NraError("decode slice [" + std::to_string(begin) + ", " + std::to_string(end) +
                   ") out of range for width " + std::to_string(c.dim));
  }
  if (names.size() != end - begin) throw NraError("decode needs one name per column");
  Node n;
  n.kind = NodeKind::Decode;
  n.children = {child};
  n.schema = c;
  for (const auto& a : names) n.schema.attrs.push_back(a);
  require_distinct(n.schema.attrs, "decode");
  n.dec_begin = begin;
  n.dec_end = end;
  n.dec_names = std::move(names);
  return push(std::move(n));
}

void TermGraph::add_label(NodeId id, const std::string& name) {
  node(id);
  nodes_[static_cast<std::size_t>(id)].labels.push_back(name);
}

std::vector<NodeId> TermGraph::extract_plan(NodeId root) const {
  node(root);
  std::vector<char> seen(nodes_.size(), 0);
  std::vector<NodeId> stack{root};
  while (!stack.empty()) {
    NodeId id = stack.back();
    stack.pop_back();
    if (seen[static_cast<std::size_t>(id)]) continue;
    seen[static_cast<std::size_t>(id)] = 1;
    for (auto c : node(id).children) stack.push_back(c);
  }
  std::vector<NodeId> out;
  for (std::size_t i = 0; i < seen.size(); ++i)
    if (seen[i]) out.push_back(static_cast<NodeId>(i));
  return out;
}

std::string TermGraph::dump(NodeId root) const {
  const auto plan = extract_plan(root);
  std::ostringstream os;
  os << "plan " << (node(root).labels.empty() ? "n" + std::to_string(root) : node(root).labels.front())
     << " nodes=" << plan.size() << "\n";
  for (auto id : plan) {
    const Node& n = node(id);
    os << "n" << id << " " << to_string(n.kind);
    switch (n.kind) {
      case NodeKind::Leaf: os << " " << n.relation; break;
      case NodeKind::ProjectedUnion: {
        os << " " << to_string(n.agg) << " by (";
        for (std::size_t i = 0; i < n.group_attrs.size(); ++i) os << (i ? "," : "") << n.group_attrs[i];
        os << ")";
        break;
      }
      case NodeKind::Transform: os << " " << to_string(*n.texpr); break;
      case NodeKind::Select: {
        for (std::size_t i = 0; i < n.predicates.size(); ++i) os << (i ? ", " : " ") << to_string(n.predicates[i]);
        break;
      }
      case NodeKind::Encode: {
        for (const auto& it : n.encode) os << " [" << it.attr << (it.vocab.empty() ? "" : ":onehot") << "]";
        break;
      }
      case NodeKind::Decode:
        os << " z[" << n.dec_begin << ":" << n.dec_end << "]";
        break;
      default: break;
    }
    os << " " << n.schema.str();
    if (!n.children.empty()) {
      os << " <-";
      for (auto c : n.children) os << " n" << c;
    }
    if (!n.labels.empty()) {
      os << " #";
      for (const auto& l : n.labels) os << " " << l;
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace relnn::nra
