#include "relnn/exec/executor.hpp"

#include <fstream>
#include <sstream>

#include "relnn/relmodel/loader.hpp"
#include "relnn/tensor/ops.hpp"

namespace relnn::exec {

using nra::Content;
using nra::ContentPtr;
using nra::NodeKind;
using nra::TensorRelation;
using tensor::Matrix;
using tensor::Tensor;

tensor::OptimizerConfig FitConfig::optimizer_config() const {
  tensor::OptimizerConfig c;
  c.lr = lr;
  c.weight_decay = weight_decay;
  c.kind = optimizer;
  return c;
}

FitConfig parse_fit_config(const std::vector<std::pair<std::string, frontend::Expr>>& kwargs,
                           const frontend::ScalarEnv& env) {
  FitConfig c;
  for (const auto& [k, v] : kwargs) {
    if (k == "optimizer") {
      std::string name = v.text;
      if (v.kind != frontend::Expr::Kind::Name && v.kind != frontend::Expr::Kind::String) {
        throw ExecError("optimizer must be adam or sgd");
      }
      if (name == "adam") {
        c.optimizer = tensor::OptimizerKind::Adam;
      } else if (name == "sgd") {
        c.optimizer = tensor::OptimizerKind::Sgd;
      } else {
        throw ExecError("unknown optimizer " + name);
      }
      continue;
    }
    auto s = frontend::try_eval_scalar(v, env);
    if (!s) throw ExecError("fit argument " + k + " must be a constant");
    if (k == "epochs") {
      c.epochs = s->as_integer("epochs");
      if (c.epochs < 0) throw ExecError("epochs must be nonnegative");
    } else if (k == "lr") {
      c.lr = s->value;
      if (!(c.lr > 0)) throw ExecError("lr must be positive");
    } else if (k == "weight_decay") {
      c.weight_decay = s->value;
      if (c.weight_decay < 0) throw ExecError("weight_decay must be nonnegative");
    } else {
      throw ExecError("unknown fit argument " + k);
    }
  }
  return c;
}

namespace {

ContentPtr share(Content c) { return std::make_shared<const Content>(std::move(c)); }

}  // namespace

Executor::Executor(const nra::TermGraph& graph, const rel::Database& db) : graph_(graph), db_(db) {}

bool Executor::dynamic(NodeId id) {
  auto it = dynamic_.find(id);
  if (it != dynamic_.end()) return it->second;
  const auto& n = graph_.node(id);
  bool d = n.kind == NodeKind::Decode;
  for (NodeId c : n.children) d = dynamic(c) || d;
  dynamic_[id] = d;
  return d;
}

TensorRelation Executor::node_value(NodeId id, const std::vector<const TensorRelation*>& in,
                                    tensor::ParameterBinding& binding) {
  const auto& n = graph_.node(id);
  const bool reuse = !dynamic(id);
  Cache scratch;
  Cache& c = reuse ? cache_[id] : scratch;
  const bool fresh = !c.ready;
  switch (n.kind) {
    case NodeKind::Leaf: {
      if (!db_.contains(n.relation)) throw ExecError("missing relation " + n.relation);
      const auto& r = db_.at(n.relation);
      if (r.attrs() != n.schema.attrs || r.dim() != n.schema.dim) {
        throw ExecError("relation " + n.relation + " does not match its compiled schema");
      }
      if (fresh) {
        c.content = share(Content{r.attrs(), r.rows()});
        c.constant = Tensor(r.emb());
      }
      c.ready = true;
      if (db_.learnable(n.relation)) return nra::leaf_relation(db_, n.relation, &binding);
      return {c.content, c.constant};
    }
    case NodeKind::Join: {
      const auto& l = *in[0];
      const auto& r = *in[1];
      if (fresh) {
        nra::JoinResult j = nra::hash_join(*l.content, *r.content);
        c.content = share(std::move(j.content));
        c.a = std::move(j.left);
        c.b = std::move(j.right);
        c.ready = true;
      }
      return {c.content, tensor::concat_cols(tensor::index_select(l.emb, c.a), tensor::index_select(r.emb, c.b))};
    }
    case NodeKind::ProjectedUnion: {
      if (fresh) {
        std::vector<const Content*> contents;
        for (const auto* x : in) contents.push_back(x->content.get());
        nra::GroupResult g = nra::group_by(contents, n.group_attrs);
        c.n_groups = g.keys.size();
        c.content = share(std::move(g.keys));
        c.a = std::move(g.group);
        c.ready = true;
      }
      std::vector<Tensor> embs;
      for (const auto* x : in) embs.push_back(x->emb);
      Tensor stacked = embs.size() == 1 ? embs.front() : tensor::stack_rows(embs);
      return {c.content, tensor::scatter_reduce(stacked, c.a, c.n_groups, nra::scatter_kind(n.agg))};
    }
    case NodeKind::Transform: {
      const auto& x = *in[0];
      if (!nra::uses_group_softmax(*n.texpr)) return {x.content, nra::eval_texpr(*n.texpr, x.emb, binding)};
      if (fresh) {
        nra::GroupResult g = nra::softmax_groups(*x.content);
        c.n_groups = g.keys.size();
        c.a = std::move(g.group);
        c.ready = true;
      }
      nra::RowGroups rg{c.a, c.n_groups};
      return {x.content, nra::eval_texpr(*n.texpr, x.emb, binding, &rg)};
    }
    case NodeKind::Select: {
      const auto& x = *in[0];
      if (fresh) {
        c.a = nra::select_rows(*x.content, n.predicates);
        c.content = share(nra::take_rows(*x.content, c.a));
        c.ready = true;
      }
      return {c.content, tensor::index_select(x.emb, c.a)};
    }
    case NodeKind::Difference: {
      const auto& l = *in[0];
      if (fresh) {
        c.a = nra::difference_rows(*l.content, *in[1]->content);
        c.content = share(nra::take_rows(*l.content, c.a));
        c.ready = true;
      }
      return {c.content, tensor::index_select(l.emb, c.a)};
    }
    case NodeKind::Rename: {
      const auto& x = *in[0];
      if (fresh) {
        c.content = share(Content{n.renamed, x.content->rows});
        c.ready = true;
      }
      return {c.content, x.emb};
    }
    case NodeKind::Encode: {
      const auto& x = *in[0];
      if (fresh) {
        c.constant = Tensor(nra::encode_matrix(*x.content, n.encode));
        c.ready = true;
      }
      return {x.content, tensor::concat_cols(x.emb, c.constant)};
    }
    case NodeKind::Decode: {
      const auto& x = *in[0];
      return {share(nra::decode_content(*x.content, x.emb.value(), n.dec_begin, n.dec_end, n.dec_names)), x.emb};
    }
  }
  throw ExecError("unknown node kind");
}

TensorRelation Executor::run(const PhysicalPlan& plan, tensor::ParameterBinding& binding) {
  std::map<NodeId, TensorRelation> values;
  for (NodeId id : plan.nodes) {
    const auto& n = graph_.node(id);
    std::vector<const TensorRelation*> in;
    for (NodeId ch : n.children) in.push_back(&values.at(ch));
    try {
      TensorRelation v = node_value(id, in, binding);
      if (v.dim() != n.schema.dim || v.content->attrs != n.schema.attrs || v.emb.rows() != v.size()) {
        throw ExecError("shape " + std::to_string(v.emb.rows()) + "x" + std::to_string(v.dim()) +
                        " does not match schema " + n.schema.str());
      }
      values.emplace(id, std::move(v));
    } catch (const ExecError& e) {
      throw ExecError("node n" + std::to_string(id) + ": " + e.what());
    } catch (const std::runtime_error& e) {
      throw ExecError("node n" + std::to_string(id) + ": " + e.what());
    }
  }
  return values.at(plan.root);
}

rel::EmbeddedRelation Executor::evaluate(const PhysicalPlan& plan, tensor::ParameterStore& store) {
  tensor::Tape tape;
  tensor::ParameterBinding binding(store, tape);
  return nra::to_relation(run(plan, binding));
}

std::vector<double> Executor::fit(const PhysicalPlan& plan, const FitConfig& config, tensor::ParameterStore& store) {
  const auto& schema = graph_.node(plan.root).schema;
  if (!schema.attrs.empty() || schema.dim != 1) {
    throw ExecError("the loss relation must have no content attributes and width 1, got " + schema.str());
  }
  store.reset_optimizer_state();
  std::vector<double> trace;
  const auto opt = config.optimizer_config();
  for (std::int64_t epoch = 0; epoch < config.epochs; ++epoch) {
    tensor::Tape tape;
    tensor::ParameterBinding binding(store, tape);
    TensorRelation loss = run(plan, binding);
    if (loss.size() == 0) throw ExecError("empty loss: the loss relation has no row");
    if (!loss.emb.tracked()) throw ExecError("the loss does not depend on any parameter");
    trace.push_back(loss.emb.value()(0, 0));
    tensor::GradientMap all = tensor::backward(tape, loss.emb, binding);
    tensor::GradientMap grads;
    for (const auto& [key, t] : binding.bound()) grads.emplace(key, std::move(all.at(key)));
    tensor::optimizer_step(store, grads, opt);
  }
  return trace;
}

std::string relation_csv(const rel::EmbeddedRelation& r) {
  std::ostringstream os;
  std::string header;
  for (const auto& a : r.attrs()) header += (header.empty() ? "" : ",") + a;
  for (std::size_t j = 0; j < r.dim(); ++j) header += (header.empty() ? "" : ",") + ("emb_" + std::to_string(j));
  os << header << "\n";
  for (std::size_t i = 0; i < r.size(); ++i) {
    std::string line;
    bool first = true;
    for (const auto& v : r.rows()[i]) {
      line += (first ? "" : ",") + rel::format_value(v);
      first = false;
    }
    for (std::size_t j = 0; j < r.dim(); ++j) {
      line += (first ? "" : ",") + rel::format_double(r.emb()(i, j));
      first = false;
    }
    os << line << "\n";
  }
  return os.str();
}

void write_relation_csv(const rel::EmbeddedRelation& r, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ExecError("cannot write " + path.string());
  out << relation_csv(r);
}

void write_loss_trace(const std::vector<double>& trace, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ExecError("cannot write " + path.string());
  for (double v : trace) out << rel::format_double(v) << "\n";
}

}  // namespace relnn::exec
