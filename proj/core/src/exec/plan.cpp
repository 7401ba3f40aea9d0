#include "relnn/exec/plan.hpp"

#include <sstream>

namespace relnn::exec {

const char* to_string(InstrOp op) {
  switch (op) {
    case InstrOp::Scan: return "scan";
    case InstrOp::Merge: return "merge";
    case InstrOp::Gather: return "gather";
    case InstrOp::Concat: return "concat";
    case InstrOp::Stack: return "stack";
    case InstrOp::GroupBy: return "group-by";
    case InstrOp::Scatter: return "scatter";
    case InstrOp::LayerForward: return "layer-forward";
    case InstrOp::FilterMask: return "filter-mask";
    case InstrOp::AntiJoin: return "anti-join";
    case InstrOp::Rename: return "rename";
    case InstrOp::Encode: return "encode";
    case InstrOp::Decode: return "decode";
  }
  return "?";
}

namespace {

std::string join_attrs(const std::vector<std::string>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? "," : "") + xs[i];
  return s;
}

std::string ref(NodeId id) { return "n" + std::to_string(id); }

}  // namespace

PhysicalPlan compile_physical(const nra::TermGraph& graph, NodeId root) {
  PhysicalPlan plan;
  plan.root = root;
  plan.nodes = graph.extract_plan(root);
  auto emit = [&](InstrOp op, NodeId id, std::string detail) { plan.instructions.push_back({op, id, std::move(detail)}); };
  for (NodeId id : plan.nodes) {
    const nra::Node& n = graph.node(id);
    using K = nra::NodeKind;
    switch (n.kind) {
      case K::Leaf: emit(InstrOp::Scan, id, n.relation); break;
      case K::Join: {
        const NodeId l = n.children[0], r = n.children[1];
        emit(InstrOp::Merge, id, ref(l) + " " + ref(r));
        emit(InstrOp::Gather, id, ref(l));
        emit(InstrOp::Gather, id, ref(r));
        emit(InstrOp::Concat, id, "d=" + std::to_string(n.schema.dim));
        break;
      }
      case K::ProjectedUnion: {
        std::string ins;
        for (NodeId c : n.children) ins += (ins.empty() ? "" : " ") + ref(c);
        if (n.children.size() > 1) emit(InstrOp::Stack, id, ins);
        emit(InstrOp::GroupBy, id, "[" + join_attrs(n.group_attrs) + "]");
        emit(InstrOp::Scatter, id, std::string("scatter_") + (n.agg == nra::AggKind::Sum    ? "add"
                                                              : n.agg == nra::AggKind::Mean ? "mean"
                                                                                            : "max"));
        break;
      }
      case K::Transform:
        if (nra::uses_group_softmax(*n.texpr)) {
          emit(InstrOp::GroupBy, id, "softmax groups");
        }
        emit(InstrOp::LayerForward, id, nra::to_string(*n.texpr));
        break;
      case K::Select: {
        std::string s;
        for (const auto& p : n.predicates) s += (s.empty() ? "" : " and ") + nra::to_string(p);
        emit(InstrOp::FilterMask, id, s);
        emit(InstrOp::Gather, id, ref(n.children[0]));
        break;
      }
      case K::Difference:
        emit(InstrOp::AntiJoin, id, ref(n.children[0]) + " " + ref(n.children[1]));
        emit(InstrOp::Gather, id, ref(n.children[0]));
        break;
      case K::Rename: emit(InstrOp::Rename, id, "(" + join_attrs(n.renamed) + ")"); break;
      case K::Encode: {
        std::string s;
        for (const auto& it : n.encode) s += (s.empty() ? "" : ",") + it.attr;
        emit(InstrOp::Encode, id, "[" + s + "]");
        emit(InstrOp::Concat, id, "d=" + std::to_string(n.schema.dim));
        break;
      }
      case K::Decode:
        emit(InstrOp::Decode, id,
             "z[" + std::to_string(n.dec_begin) + ":" + std::to_string(n.dec_end) + "] -> " + join_attrs(n.dec_names));
        break;
    }
  }
  return plan;
}

std::string PhysicalPlan::dump() const {
  std::ostringstream os;
  os << "physical n" << root << " instructions=" << instructions.size() << "\n";
  for (std::size_t i = 0; i < instructions.size(); ++i) {
    const auto& in = instructions[i];
    os << i << ": " << to_string(in.op) << " n" << in.node;
    if (!in.detail.empty()) os << " " << in.detail;
    os << "\n";
  }
  return os.str();
}

}  // namespace relnn::exec
