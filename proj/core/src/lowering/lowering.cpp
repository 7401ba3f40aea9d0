#include "relnn/lowering/lowering.hpp"

#include <functional>
#include <set>

#include "relnn/frontend/parser.hpp"

namespace relnn::lowering {

using frontend::Expr;
using nra::NodeId;
using nra::TExprPtr;
using nra::TOp;
using tensor::ParamKey;

NodeId LoweredProgram::node_of(const std::string& relation) const {
  auto it = relations.find(relation);
  if (it == relations.end()) throw LoweringError("undefined relation " + relation);
  return it->second;
}

frontend::ExpandContext expand_context(const rel::Database& db) {
  frontend::ExpandContext ctx;
  ctx.relation_rows = [&db](const std::string& name) -> std::optional<std::vector<rel::Tuple>> {
    if (!db.contains(name)) return std::nullopt;
    return db.at(name).rows();
  };
  return ctx;
}

frontend::Program flatten(const std::string& source, const rel::Database& db) {
  auto flat = frontend::inline_functions(frontend::expand_templates(frontend::parse(source), expand_context(db)));
  frontend::check_range_restriction(flat);
  return flat;
}

namespace {

// A lowered transformation value: a per-tuple/shared tensor or a layer.
struct LValue {
  bool is_layer = false;
  TExprPtr tensor;
  std::size_t arity = 1;
  std::function<TExprPtr(const std::vector<TExprPtr>&)> apply;
};

LValue tensor_value(TExprPtr t) {
  LValue v;
  v.tensor = std::move(t);
  return v;
}

LValue layer_value(std::size_t arity, std::function<TExprPtr(const std::vector<TExprPtr>&)> f) {
  LValue v;
  v.is_layer = true;
  v.arity = arity;
  v.apply = std::move(f);
  return v;
}

LValue unary_layer(TOp op) {
  return layer_value(1, [op](const std::vector<TExprPtr>& a) { return nra::t_unary(op, a[0]); });
}

std::vector<std::string> targ_strings(const std::vector<Expr>& targs) {
  std::vector<std::string> out;
  for (const auto& t : targs) out.push_back(frontend::literal_text(t));
  return out;
}

rel::Value literal_value(const Expr& e) {
  if (e.kind == Expr::Kind::String) return e.text;
  bool neg = e.kind == Expr::Kind::Neg;
  const Expr& n = neg ? e.args[0] : e;
  if (n.kind != Expr::Kind::Number) throw LoweringError("'" + frontend::print(e) + "' is not a constant");
  auto s = frontend::parse_number(n.text);
  if (neg) s = frontend::negate(s);
  if (s.is_integer()) return s.q.num;
  return s.value;
}

struct KeyAllocator {
  std::string base;
  std::vector<std::string> args;
  bool alias = false;
  std::map<std::string, int> counts;
  int total = 0;

  ParamKey next(const std::string& ctor) {
    if (alias) {
      int j = total++;
      return {j == 0 ? base : base + "#" + std::to_string(j), args};
    }
    int j = counts[ctor]++;
    return {base + "." + ctor + std::to_string(j), args};
  }
};

struct RuleCtx {
  std::map<std::string, TExprPtr> vars;
  std::function<TExprPtr(const Expr&)> encode;  // bracket items
  KeyAllocator keys;
};

class Lowerer {
 public:
  Lowerer(const rel::Database& db, tensor::ParameterStore& store) : db_(db), store_(store) {}

  LoweredProgram run(const frontend::Program& flat) {
    for (const auto& s : flat) {
      std::visit(
          [&](const auto& n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, frontend::AliasStmt>) {
              alias(n);
            } else if constexpr (std::is_same_v<T, frontend::RuleStmt>) {
              rule(n);
            } else if constexpr (std::is_same_v<T, frontend::FitStmt>) {
              action(Action::Kind::Fit, n.target, n.targs, n.kwargs);
            } else if constexpr (std::is_same_v<T, frontend::PredStmt>) {
              action(Action::Kind::Pred, n.target, n.targs, {});
            } else {
              throw LoweringError("function definition " + n.name + " was not inlined");
            }
          },
          s.node);
    }
    out_.scalars = env_;
    return std::move(out_);
  }

 private:
  const rel::Database& db_;
  tensor::ParameterStore& store_;
  LoweredProgram out_;
  frontend::ScalarEnv env_;
  std::map<std::string, LValue> aliases_;

  bool defined(const std::string& name) const {
    return env_.count(name) || aliases_.count(name) || out_.relations.count(name) || db_.contains(name);
  }

  // --- statements ---------------------------------------------------------

  void alias(const frontend::AliasStmt& a) {
    const std::string name = frontend::mangle(a.name, a.targs);
    if (env_.count(name) || aliases_.count(name)) throw LoweringError("alias " + name + " defined twice");
    if (out_.relations.count(name) || db_.contains(name)) throw LoweringError("alias " + name + " shadows a relation");
    if (a.targs.empty()) {
      if (auto v = frontend::try_eval_scalar(a.value, env_)) {
        env_[name] = *v;
        return;
      }
    }
    RuleCtx ctx;
    ctx.keys = KeyAllocator{name, targ_strings(a.targs), true, {}, 0};
    aliases_[name] = eval(a.value, ctx);
  }

  void action(Action::Kind kind, const std::string& target, const std::vector<Expr>& targs,
              const std::vector<std::pair<std::string, Expr>>& kwargs) {
    Action act;
    act.kind = kind;
    act.relation = frontend::mangle(target, targs);
    act.node = relation_node(act.relation);
    act.kwargs = kwargs;
    out_.actions.push_back(std::move(act));
  }

  NodeId relation_node(const std::string& name) {
    auto it = out_.relations.find(name);
    if (it != out_.relations.end()) return it->second;
    if (!db_.contains(name)) throw LoweringError("undefined relation " + name);
    const auto& r = db_.at(name);
    NodeId id = out_.graph.leaf(name, {r.attrs(), r.dim()});
    out_.relations[name] = id;
    return id;
  }

  // --- body atoms ---------------------------------------------------------

  struct AtomNode {
    NodeId node;
    std::size_t dim = 0;
    std::string emb;
    std::vector<std::string> vars;
    // var -> (database relation, column) for vocabulary lookup
    std::map<std::string, std::pair<std::string, std::string>> origin;
  };

  AtomNode atom(const frontend::Atom& a, std::size_t index) {
    auto& g = out_.graph;
    AtomNode r;
    NodeId base;
    std::string rel;
    if (a.is_call) {
      if (a.name != "Softmax" || a.call_args.size() != 1) {
        throw LoweringError("unknown relation function " + a.name);
      }
      rel = frontend::mangle(a.call_args[0].text, a.call_args[0].targs);
      NodeId src = relation_node(rel);
      std::size_t d = g.node(src).schema.dim;
      base = g.transform(src, nra::t_group_softmax(nra::t_slice(0, d)));
      rel.clear();
    } else {
      rel = frontend::mangle(a.name, a.targs);
      base = relation_node(rel);
      if (!db_.contains(rel)) rel.clear();
    }
    const auto& schema = g.node(base).schema;
    if (schema.attrs.size() != a.terms.size()) {
      throw LoweringError("atom " + frontend::print(a) + " has " + std::to_string(a.terms.size()) +
                          " terms but the relation has arity " + std::to_string(schema.attrs.size()));
    }
    std::vector<std::string> names;
    std::vector<nra::Predicate> preds;
    std::set<std::string> seen;
    for (std::size_t i = 0; i < a.terms.size(); ++i) {
      const Expr& t = a.terms[i];
      const std::string fresh = "_" + std::to_string(index) + "_" + std::to_string(i);
      if (t.kind == Expr::Kind::Name && t.targs.empty()) {
        if (t.text == "_") {
          names.push_back(fresh);
        } else if (seen.insert(t.text).second) {
          names.push_back(t.text);
          r.vars.push_back(t.text);
          if (!rel.empty()) r.origin[t.text] = {rel, schema.attrs[i]};
        } else {
          names.push_back(fresh);
          preds.push_back({nra::CmpOp::Eq, nra::ArithTerm::variable(fresh), nra::ArithTerm::variable(t.text)});
        }
      } else {
        names.push_back(fresh);
        preds.push_back({nra::CmpOp::Eq, nra::ArithTerm::variable(fresh), nra::ArithTerm::constant(literal_value(t))});
      }
    }
    NodeId n = base;
    if (names != schema.attrs) n = g.rename(n, names);
    if (!preds.empty()) n = g.select(n, preds);
    r.node = n;
    r.dim = g.node(n).schema.dim;
    r.emb = a.has_emb ? a.emb : std::string();
    return r;
  }

  // --- filters ------------------------------------------------------------

  nra::ArithTermPtr arith(const Expr& e, const std::set<std::string>& vars) {
    using K = nra::ArithTerm::Kind;
    switch (e.kind) {
      case Expr::Kind::Number:
      case Expr::Kind::String: return nra::ArithTerm::constant(literal_value(e));
      case Expr::Kind::Name: {
        if (e.targs.empty() && vars.count(e.text)) return nra::ArithTerm::variable(e.text);
        std::string name = frontend::mangle(e.text, e.targs);
        auto it = env_.find(name);
        if (it != env_.end()) {
          const auto& s = it->second;
          return nra::ArithTerm::constant(s.is_integer() ? rel::Value(s.q.num) : rel::Value(s.value));
        }
        throw LoweringError("filter refers to unknown variable " + name);
      }
      case Expr::Kind::Neg: return nra::ArithTerm::negate(arith(e.args[0], vars));
      case Expr::Kind::Binary: {
        K k;
        switch (e.text[0]) {
          case '+': k = K::Add; break;
          case '-': k = K::Sub; break;
          case '*': k = K::Mul; break;
          case '/': k = K::Div; break;
          default: throw LoweringError("operator " + e.text + " is not allowed in filters");
        }
        return nra::ArithTerm::binary(k, arith(e.args[0], vars), arith(e.args[1], vars));
      }
      default: throw LoweringError("'" + frontend::print(e) + "' is not allowed in filters");
    }
  }

  std::vector<nra::Predicate> filters(const std::vector<frontend::Filter>& fs, const std::set<std::string>& vars) {
    std::vector<nra::Predicate> out;
    for (const auto& f : fs) {
      nra::CmpOp op;
      switch (f.op) {
        case frontend::Cmp::Eq: op = nra::CmpOp::Eq; break;
        case frontend::Cmp::Ne: op = nra::CmpOp::Ne; break;
        case frontend::Cmp::Lt: op = nra::CmpOp::Lt; break;
        case frontend::Cmp::Le: op = nra::CmpOp::Le; break;
        case frontend::Cmp::Gt: op = nra::CmpOp::Gt; break;
        default: op = nra::CmpOp::Ge; break;
      }
      out.push_back({op, arith(f.lhs, vars), arith(f.rhs, vars)});
    }
    return out;
  }

  // --- transformations ----------------------------------------------------

  std::int64_t dim_arg(const Expr& e, const std::string& what) {
    auto v = frontend::eval_scalar(e, env_).as_integer(what);
    if (v < 1) throw LoweringError(what + " must be positive, got " + std::to_string(v));
    return v;
  }

  LValue construct(const std::string& name, const std::vector<Expr>& args, RuleCtx& ctx) {
    if (name == "Linear") {
      if (args.size() != 2) throw LoweringError("Linear takes (in, out)");
      auto in = static_cast<std::size_t>(dim_arg(args[0], "Linear input width"));
      auto out = static_cast<std::size_t>(dim_arg(args[1], "Linear output width"));
      ParamKey key = ctx.keys.next("Linear");
      store_.ensure(key, in + 1, out, {tensor::InitKind::Linear, in});
      return layer_value(1, [key, in, out](const std::vector<TExprPtr>& a) { return nra::t_linear(key, in, out, a[0]); });
    }
    if (name == "Parameter") {
      if (args.empty() || args.size() > 2) throw LoweringError("Parameter takes (n) or (rows, cols)");
      std::size_t rows = 1, cols;
      if (args.size() == 1) {
        cols = static_cast<std::size_t>(dim_arg(args[0], "Parameter width"));
      } else {
        rows = static_cast<std::size_t>(dim_arg(args[0], "Parameter rows"));
        cols = static_cast<std::size_t>(dim_arg(args[1], "Parameter columns"));
      }
      ParamKey key = ctx.keys.next("Parameter");
      store_.ensure(key, rows, cols, {tensor::InitKind::Normal, rows});
      return tensor_value(nra::t_param(key, rows, cols));
    }
    // CrossEntropyLoss
    if (!args.empty()) throw LoweringError("CrossEntropyLoss takes no constructor arguments");
    return layer_value(2, [](const std::vector<TExprPtr>& a) { return nra::t_cross_entropy(a[0], a[1]); });
  }

  LValue apply(const LValue& f, const std::vector<Expr>& args, RuleCtx& ctx, const std::string& what) {
    if (!f.is_layer) throw LoweringError(what + " is not a layer");
    std::vector<LValue> vs;
    for (const auto& a : args) vs.push_back(eval(a, ctx));
    if (vs.size() == 1 && vs[0].is_layer) {
      if (f.arity != 1 || vs[0].arity != 1) throw LoweringError("cannot compose " + what);
      auto outer = f.apply;
      auto inner = vs[0].apply;
      return layer_value(1, [outer, inner](const std::vector<TExprPtr>& a) { return outer({inner(a)}); });
    }
    if (vs.size() != f.arity) {
      throw LoweringError(what + " takes " + std::to_string(f.arity) + " arguments, got " + std::to_string(vs.size()));
    }
    std::vector<TExprPtr> ts;
    for (auto& v : vs) ts.push_back(as_tensor(v, what));
    return tensor_value(f.apply(ts));
  }

  static TExprPtr as_tensor(const LValue& v, const std::string& where) {
    if (v.is_layer) throw LoweringError("a layer is used as a value in " + where);
    return v.tensor;
  }

  LValue named(const std::string& name, RuleCtx& ctx) {
    if (auto it = ctx.vars.find(name); it != ctx.vars.end()) return tensor_value(it->second);
    if (auto it = env_.find(name); it != env_.end()) return tensor_value(nra::t_const(it->second.value));
    if (auto it = aliases_.find(name); it != aliases_.end()) return it->second;
    if (name == "Identity") return layer_value(1, [](const std::vector<TExprPtr>& a) { return a[0]; });
    if (name == "ReLU") return unary_layer(TOp::Relu);
    if (name == "Sigmoid") return unary_layer(TOp::Sigmoid);
    if (name == "GELU") return unary_layer(TOp::Gelu);
    if (name == "Softmax") {
      return layer_value(1, [](const std::vector<TExprPtr>& a) { return nra::t_group_softmax(a[0]); });
    }
    if (name == "Linear" || name == "Parameter" || name == "CrossEntropyLoss") {
      throw LoweringError(name + " needs constructor arguments");
    }
    throw LoweringError("unknown name " + name);
  }

  LValue eval(const Expr& e, RuleCtx& ctx) {
    using K = Expr::Kind;
    switch (e.kind) {
      case K::Number: return tensor_value(nra::t_const(frontend::parse_number(e.text).value));
      case K::String: throw LoweringError("string '" + e.text + "' in a transformation");
      case K::Splat: throw LoweringError("unexpanded *" + e.text);
      case K::Name: return named(frontend::mangle(e.text, e.targs), ctx);
      case K::Neg: return tensor_value(nra::t_unary(TOp::Neg, as_tensor(eval(e.args[0], ctx), "negation")));
      case K::Transpose: return tensor_value(nra::t_unary(TOp::Transpose, as_tensor(eval(e.args[0], ctx), ".T")));
      case K::Bracket: {
        if (!ctx.encode) throw LoweringError("encode brackets are only allowed in join rule heads");
        return tensor_value(ctx.encode(e));
      }
      case K::Binary: {
        TOp op;
        switch (e.text[0]) {
          case '+': op = TOp::Add; break;
          case '-': op = TOp::Sub; break;
          case '*': op = TOp::Mul; break;
          case '/': op = TOp::Div; break;
          default: op = TOp::MatMul; break;
        }
        auto a = as_tensor(eval(e.args[0], ctx), "'" + e.text + "'");
        auto b = as_tensor(eval(e.args[1], ctx), "'" + e.text + "'");
        return tensor_value(nra::t_binary(op, a, b));
      }
      case K::Call: {
        const std::string name = frontend::mangle(e.text, e.targs);
        if (name == "sqrt") {
          auto v = frontend::try_eval_scalar(e, env_);
          if (!v) throw LoweringError("sqrt is only defined on constants");
          return tensor_value(nra::t_const(v->value));
        }
        if (name == "Concat" || name == "Sum" || name == "Prod") {
          if (e.has_args2) throw LoweringError(name + " takes one argument list");
          std::vector<TExprPtr> parts;
          for (const auto& a : e.args) parts.push_back(as_tensor(eval(a, ctx), name));
          if (parts.empty()) throw LoweringError(name + " needs arguments");
          if (name == "Concat") return tensor_value(nra::t_concat(parts));
          TExprPtr acc = parts[0];
          for (std::size_t i = 1; i < parts.size(); ++i) {
            acc = nra::t_binary(name == "Sum" ? TOp::Add : TOp::Mul, acc, parts[i]);
          }
          return tensor_value(acc);
        }
        LValue f;
        bool ctor = name == "Linear" || name == "Parameter" || name == "CrossEntropyLoss";
        if (ctor && !ctx.vars.count(name) && !aliases_.count(name)) {
          f = construct(name, e.args, ctx);
          if (!e.has_args2) return f;
          return apply(f, e.args2, ctx, name);
        }
        f = named(name, ctx);
        LValue r = apply(f, e.args, ctx, name);
        if (e.has_args2) r = apply(r, e.args2, ctx, name + "(...)");
        return r;
      }
    }
    throw LoweringError("unsupported expression");
  }

  TExprPtr transform_of(const frontend::Head& h, RuleCtx& ctx) {
    if (!h.tau) return nra::t_slice(0, 0);
    auto v = eval(*h.tau, ctx);
    return as_tensor(v, "the head of " + h.name);
  }

  // --- rules --------------------------------------------------------------

  static void brackets(const Expr& e, std::vector<const Expr*>& out) {
    if (e.kind == Expr::Kind::Bracket) {
      out.push_back(&e);
      return;
    }
    for (const auto& a : e.args) brackets(a, out);
    for (const auto& a : e.args2) brackets(a, out);
  }

  void define(const std::string& name, NodeId node) {
    if (defined(name)) throw LoweringError("relation " + name + " is already defined");
    out_.graph.add_label(node, name);
    out_.relations[name] = node;
    out_.heads.push_back(name);
  }

  nra::AggKind agg_of(const frontend::Head& h) {
    if (!h.agg) return nra::AggKind::Mean;
    return nra::parse_agg(*h.agg);
  }

  void rule(const frontend::RuleStmt& r) {
    const std::string name = frontend::mangle(r.head.name, r.head.targs);
    if (defined(name)) throw LoweringError("relation " + name + " is already defined");
    try {
      NodeId n = r.is_union ? union_rule(r, name) : join_rule(r, name);
      define(name, n);
    } catch (const nra::NraError& e) {
      throw LoweringError("rule " + name + ": " + e.what());
    } catch (const tensor::ShapeError& e) {
      throw LoweringError("rule " + name + ": " + e.what());
    }
  }

  NodeId join_rule(const frontend::RuleStmt& r, const std::string& name) {
    auto& g = out_.graph;
    if (r.atoms.empty()) throw LoweringError("rule " + name + " has an empty body");
    RuleCtx ctx;
    ctx.keys = KeyAllocator{r.head.name, targ_strings(r.head.targs), false, {}, 0};
    std::map<std::string, std::pair<std::string, std::string>> origin;
    std::set<std::string> vars;
    std::map<std::string, std::pair<std::size_t, std::size_t>> emb_cols;
    NodeId cur = -1;
    std::size_t offset = 0;
    for (std::size_t k = 0; k < r.atoms.size(); ++k) {
      AtomNode a = atom(r.atoms[k], k);
      cur = cur < 0 ? a.node : g.join(cur, a.node);
      for (const auto& v : a.vars) vars.insert(v);
      for (const auto& [v, o] : a.origin) origin.emplace(v, o);
      if (!a.emb.empty()) {
        if (emb_cols.count(a.emb)) throw LoweringError("embedding variable " + a.emb + " bound twice in " + name);
        emb_cols[a.emb] = {offset, offset + a.dim};
      }
      offset += a.dim;
    }
    if (!r.filters.empty()) cur = g.select(cur, filters(r.filters, vars));

    // Encode brackets read content columns appended after the joined embedding.
    std::vector<const Expr*> items;
    if (r.head.tau) brackets(*r.head.tau, items);
    std::map<const Expr*, std::pair<std::size_t, std::size_t>> bracket_cols;
    if (!items.empty()) {
      std::vector<nra::EncodeItem> enc;
      std::size_t col = offset;
      for (const Expr* b : items) {
        std::size_t start = col;
        for (const auto& x : b->args) {
          if (x.kind != Expr::Kind::Name || !x.targs.empty() || !vars.count(x.text)) {
            throw LoweringError("encode item '" + frontend::print(x) + "' in " + name + " is not a content variable");
          }
          nra::EncodeItem item{x.text, {}};
          if (auto it = origin.find(x.text); it != origin.end()) {
            if (const auto* voc = db_.vocabulary(it->second.first, it->second.second)) item.vocab = *voc;
          }
          col += item.width();
          enc.push_back(std::move(item));
        }
        bracket_cols[b] = {start, col};
      }
      cur = g.encode(cur, enc);
    }
    ctx.encode = [&bracket_cols](const Expr& b) {
      auto [s, e] = bracket_cols.at(&b);
      return nra::t_slice(s, e);
    };

    std::vector<std::string> head_attrs;
    std::vector<std::pair<std::size_t, std::size_t>> decodes;
    for (const auto& t : r.head.terms) {
      if (!t.decode) {
        head_attrs.push_back(t.var);
        continue;
      }
      auto it = emb_cols.find(t.var);
      if (it == emb_cols.end()) throw LoweringError("decoded variable " + t.var + " is not bound in " + name);
      auto [s, e] = it->second;
      if (s == e) throw LoweringError("decoded variable " + t.var + " has width 0");
      std::vector<std::string> names;
      if (e - s == 1) {
        names.push_back(t.var);
      } else {
        for (std::size_t c = 0; c < e - s; ++c) names.push_back(t.var + "_" + std::to_string(c));
      }
      cur = g.decode(cur, s, e, names);
      for (const auto& n : names) head_attrs.push_back(n);
    }

    for (const auto& [v, cols] : emb_cols) ctx.vars[v] = nra::t_slice(cols.first, cols.second);
    TExprPtr tau = transform_of(r.head, ctx);
    const std::size_t width = g.node(cur).schema.dim;
    if (!nra::is_identity(*tau, width)) cur = g.transform(cur, tau);
    return g.projected_union({cur}, head_attrs, agg_of(r.head));
  }

  NodeId union_rule(const frontend::RuleStmt& r, const std::string& name) {
    auto& g = out_.graph;
    std::vector<NodeId> inputs;
    std::string emb;
    std::set<std::string> vars;
    for (std::size_t k = 0; k < r.atoms.size(); ++k) {
      AtomNode a = atom(r.atoms[k], k);
      inputs.push_back(a.node);
      if (k == 0) {
        emb = a.emb;
        vars.insert(a.vars.begin(), a.vars.end());
      }
    }
    std::vector<std::string> head_attrs;
    for (const auto& t : r.head.terms) {
      if (t.decode) throw LoweringError("decode brackets are not supported in union rule " + name);
      head_attrs.push_back(t.var);
    }
    NodeId cur = g.projected_union(inputs, head_attrs, agg_of(r.head));
    if (!r.filters.empty()) {
      std::set<std::string> head_vars(head_attrs.begin(), head_attrs.end());
      for (const auto& f : r.filters) {
        std::set<std::string> used;
        collect(f.lhs, used);
        collect(f.rhs, used);
        for (const auto& u : used) {
          if (vars.count(u) && !head_vars.count(u)) {
            throw LoweringError("filter of union rule " + name + " uses " + u + ", which the head projects away");
          }
        }
      }
      cur = g.select(cur, filters(r.filters, std::set<std::string>(head_attrs.begin(), head_attrs.end())));
    }
    RuleCtx ctx;
    ctx.keys = KeyAllocator{r.head.name, targ_strings(r.head.targs), false, {}, 0};
    const std::size_t width = g.node(cur).schema.dim;
    if (!emb.empty()) ctx.vars[emb] = nra::t_slice(0, width);
    TExprPtr tau = transform_of(r.head, ctx);
    if (!nra::is_identity(*tau, width)) cur = g.transform(cur, tau);
    return cur;
  }

  static void collect(const Expr& e, std::set<std::string>& out) {
    if (e.kind == Expr::Kind::Name && e.targs.empty()) out.insert(e.text);
    for (const auto& a : e.args) collect(a, out);
  }
};

}  // namespace

LoweredProgram lower(const frontend::Program& flat, const rel::Database& db, tensor::ParameterStore& store) {
  Lowerer l(db, store);
  return l.run(flat);
}

}  // namespace relnn::lowering
