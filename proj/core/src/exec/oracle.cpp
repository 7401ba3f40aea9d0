#include "relnn/exec/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "relnn/exec/executor.hpp"
#include "relnn/relmodel/loader.hpp"

namespace relnn::exec {

namespace {

using rel::Tuple;
using rel::Value;
using Row = std::vector<double>;

struct NRel {
  std::vector<std::string> attrs;
  std::vector<Tuple> rows;
  std::vector<Row> emb;
  std::size_t dim = 0;

  std::size_t col(const std::string& a) const {
    for (std::size_t i = 0; i < attrs.size(); ++i) {
      if (attrs[i] == a) return i;
    }
    throw ExecError("oracle: no attribute " + a);
  }

  void sort() {
    std::vector<std::size_t> p(rows.size());
    std::iota(p.begin(), p.end(), 0);
    std::sort(p.begin(), p.end(), [&](std::size_t x, std::size_t y) { return rows[x] < rows[y]; });
    std::vector<Tuple> r;
    std::vector<Row> e;
    for (auto i : p) {
      r.push_back(rows[i]);
      e.push_back(emb[i]);
    }
    rows = std::move(r);
    emb = std::move(e);
  }
};

// Dense value of a transformation subexpression for one tuple.
struct Dense {
  std::size_t r = 1, c = 1;
  std::vector<double> v;
  double at(std::size_t i, std::size_t j) const { return v[i * c + j]; }
};

Dense dense(std::size_t r, std::size_t c) { return {r, c, std::vector<double>(r * c, 0.0)}; }

Dense from_matrix(const tensor::Matrix& m) {
  Dense d = dense(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) d.v[i * d.c + j] = m(i, j);
  return d;
}

Dense elementwise(const Dense& a, const Dense& b, char op) {
  Dense o = dense(std::max(a.r, b.r), std::max(a.c, b.c));
  for (std::size_t i = 0; i < o.r; ++i)
    for (std::size_t j = 0; j < o.c; ++j) {
      double x = a.at(a.r == 1 ? 0 : i, a.c == 1 ? 0 : j);
      double y = b.at(b.r == 1 ? 0 : i, b.c == 1 ? 0 : j);
      o.v[i * o.c + j] = op == '+' ? x + y : op == '-' ? x - y : x * y;
    }
  return o;
}

Dense matmul(const Dense& a, const Dense& b) {
  if (a.c != b.r) throw ExecError("oracle: matmul shape mismatch");
  Dense o = dense(a.r, b.c);
  for (std::size_t i = 0; i < a.r; ++i)
    for (std::size_t k = 0; k < a.c; ++k)
      for (std::size_t j = 0; j < b.c; ++j) o.v[i * o.c + j] += a.at(i, k) * b.at(k, j);
  return o;
}

Dense transpose(const Dense& a) {
  Dense o = dense(a.c, a.r);
  for (std::size_t i = 0; i < a.r; ++i)
    for (std::size_t j = 0; j < a.c; ++j) o.v[j * o.c + i] = a.at(i, j);
  return o;
}

template <class F>
Dense map(Dense a, F f) {
  for (auto& x : a.v) x = f(x);
  return a;
}

struct TupleEval {
  const tensor::ParameterStore& store;

  Dense eval(const nra::TExpr& e, const Row& x) const {
    using nra::TOp;
    switch (e.op) {
      case TOp::Slice: {
        Dense o = dense(1, e.end - e.begin);
        for (std::size_t j = e.begin; j < e.end; ++j) o.v[j - e.begin] = x.at(j);
        return o;
      }
      case TOp::Const: return {1, 1, {e.value}};
      case TOp::Param: return from_matrix(store.value(e.key));
      case TOp::Linear: {
        Dense in = eval(*e.args[0], x);
        const auto& w = store.value(e.key);
        Dense o = dense(1, e.out);
        for (std::size_t j = 0; j < e.out; ++j) {
          double s = w(e.in, j);
          for (std::size_t k = 0; k < e.in; ++k) s += in.v[k] * w(k, j);
          o.v[j] = s;
        }
        return o;
      }
      case TOp::Relu: return map(eval(*e.args[0], x), [](double v) { return v > 0 ? v : 0.0; });
      case TOp::Sigmoid: return map(eval(*e.args[0], x), [](double v) { return 1.0 / (1.0 + std::exp(-v)); });
      case TOp::Gelu:
        return map(eval(*e.args[0], x), [](double v) { return 0.5 * v * (1.0 + std::erf(v / std::sqrt(2.0))); });
      case TOp::Neg: return map(eval(*e.args[0], x), [](double v) { return -v; });
      case TOp::Add: return elementwise(eval(*e.args[0], x), eval(*e.args[1], x), '+');
      case TOp::Sub: return elementwise(eval(*e.args[0], x), eval(*e.args[1], x), '-');
      case TOp::Mul: return elementwise(eval(*e.args[0], x), eval(*e.args[1], x), '*');
      case TOp::Div: {
        double d = e.args[1]->value;
        return map(eval(*e.args[0], x), [d](double v) { return v / d; });
      }
      case TOp::MatMul: return matmul(eval(*e.args[0], x), eval(*e.args[1], x));
      case TOp::Transpose: return transpose(eval(*e.args[0], x));
      case TOp::Concat: {
        Dense o = dense(1, 0);
        for (const auto& a : e.args) {
          Dense p = eval(*a, x);
          o.v.insert(o.v.end(), p.v.begin(), p.v.end());
          o.c += p.c;
        }
        return o;
      }
      case TOp::CrossEntropy: {
        Dense a = eval(*e.args[0], x);
        Dense b = eval(*e.args[1], x);
        double m = *std::max_element(a.v.begin(), a.v.end());
        double z = 0;
        for (double v : a.v) z += std::exp(v - m);
        double lse = m + std::log(z);
        double loss = 0;
        for (std::size_t j = 0; j < a.c; ++j) loss -= b.v[j] * (a.v[j] - lse);
        return {1, 1, {loss}};
      }
      case TOp::GroupSoftmax: throw ExecError("oracle: Softmax below the root");
    }
    throw ExecError("oracle: unknown transformation");
  }

  Row row(const nra::TExpr& e, const Row& x, std::size_t width) const {
    Dense d = eval(e, x);
    Row out(width);
    for (std::size_t j = 0; j < width; ++j) out[j] = d.v[d.c == 1 ? 0 : j];
    return out;
  }
};

bool numeric(const Value& v) { return v.index() == 0 || v.index() == 1; }
double num(const Value& v) { return v.index() == 0 ? static_cast<double>(std::get<std::int64_t>(v)) : std::get<double>(v); }

Value term(const nra::ArithTerm& t, const NRel& r, const Tuple& row) {
  using K = nra::ArithTerm::Kind;
  if (t.kind == K::Var) return row[r.col(t.var)];
  if (t.kind == K::Const) return t.value;
  if (t.kind == K::Neg) {
    Value v = term(*t.lhs, r, row);
    if (v.index() == 0) return -std::get<std::int64_t>(v);
    if (v.index() == 1) return -std::get<double>(v);
    throw ExecError("oracle: negating a non-number");
  }
  Value a = term(*t.lhs, r, row), b = term(*t.rhs, r, row);
  if (!numeric(a) || !numeric(b)) throw ExecError("oracle: arithmetic on non-numbers");
  if (a.index() == 0 && b.index() == 0 && t.kind != K::Div) {
    auto x = std::get<std::int64_t>(a), y = std::get<std::int64_t>(b);
    return t.kind == K::Add ? x + y : t.kind == K::Sub ? x - y : x * y;
  }
  double x = num(a), y = num(b);
  switch (t.kind) {
    case K::Add: return x + y;
    case K::Sub: return x - y;
    case K::Mul: return x * y;
    default: return x / y;
  }
}

bool holds(const nra::Predicate& p, const NRel& r, const Tuple& row) {
  Value a = term(*p.lhs, r, row), b = term(*p.rhs, r, row);
  int cmp;
  if (numeric(a) && numeric(b)) {
    if (a.index() == 0 && b.index() == 0) {
      cmp = (std::get<std::int64_t>(a) > std::get<std::int64_t>(b)) - (std::get<std::int64_t>(a) < std::get<std::int64_t>(b));
    } else {
      cmp = (num(a) > num(b)) - (num(a) < num(b));
    }
  } else if (a.index() == b.index()) {
    cmp = (b < a) - (a < b);
  } else {
    throw ExecError("oracle: comparing incompatible values");
  }
  switch (p.op) {
    case nra::CmpOp::Eq: return cmp == 0;
    case nra::CmpOp::Ne: return cmp != 0;
    case nra::CmpOp::Lt: return cmp < 0;
    case nra::CmpOp::Le: return cmp <= 0;
    case nra::CmpOp::Gt: return cmp > 0;
    case nra::CmpOp::Ge: return cmp >= 0;
  }
  return false;
}

class Oracle {
 public:
  Oracle(const nra::TermGraph& g, const rel::Database& db, const tensor::ParameterStore& store)
      : g_(g), db_(db), store_(store) {}

  NRel eval(nra::NodeId id) {
    auto it = memo_.find(id);
    if (it != memo_.end()) return it->second;
    NRel r = compute(g_.node(id));
    r.dim = g_.node(id).schema.dim;
    r.sort();
    memo_[id] = r;
    return r;
  }

 private:
  const nra::TermGraph& g_;
  const rel::Database& db_;
  const tensor::ParameterStore& store_;
  std::map<nra::NodeId, NRel> memo_;

  NRel compute(const nra::Node& n) {
    using K = nra::NodeKind;
    switch (n.kind) {
      case K::Leaf: {
        const auto& src = db_.at(n.relation);
        NRel r{src.attrs(), src.rows(), {}, src.dim()};
        for (std::size_t i = 0; i < src.size(); ++i) {
          Row e(src.dim());
          for (std::size_t j = 0; j < src.dim(); ++j) {
            e[j] = db_.learnable(n.relation) ? store_.value(rel::embedding_key(n.relation, i))(0, j) : src.emb()(i, j);
          }
          r.emb.push_back(std::move(e));
        }
        return r;
      }
      case K::Join: {
        NRel a = eval(n.children[0]), b = eval(n.children[1]);
        NRel r;
        r.attrs = a.attrs;
        std::vector<std::pair<std::size_t, std::size_t>> shared;
        std::vector<std::size_t> extra;
        for (std::size_t j = 0; j < b.attrs.size(); ++j) {
          auto pos = std::find(a.attrs.begin(), a.attrs.end(), b.attrs[j]);
          if (pos == a.attrs.end()) {
            extra.push_back(j);
            r.attrs.push_back(b.attrs[j]);
          } else {
            shared.push_back({static_cast<std::size_t>(pos - a.attrs.begin()), j});
          }
        }
        for (std::size_t x = 0; x < a.rows.size(); ++x)
          for (std::size_t y = 0; y < b.rows.size(); ++y) {
            bool ok = true;
            for (auto [i, j] : shared) ok = ok && a.rows[x][i] == b.rows[y][j];
            if (!ok) continue;
            Tuple t = a.rows[x];
            for (auto j : extra) t.push_back(b.rows[y][j]);
            Row e = a.emb[x];
            e.insert(e.end(), b.emb[y].begin(), b.emb[y].end());
            r.rows.push_back(std::move(t));
            r.emb.push_back(std::move(e));
          }
        return r;
      }
      case K::ProjectedUnion: {
        std::map<Tuple, std::vector<Row>> groups;
        std::size_t d = n.schema.dim;
        for (auto c : n.children) {
          NRel in = eval(c);
          std::vector<std::size_t> cols;
          for (const auto& a : n.group_attrs) cols.push_back(in.col(a));
          for (std::size_t i = 0; i < in.rows.size(); ++i) {
            Tuple key;
            for (auto k : cols) key.push_back(in.rows[i][k]);
            groups[key].push_back(in.emb[i]);
          }
        }
        NRel r;
        r.attrs = n.group_attrs;
        for (auto& [key, members] : groups) {
          Row out(d, 0.0);
          for (std::size_t j = 0; j < d; ++j) {
            if (n.agg == nra::AggKind::Max) {
              double m = -INFINITY;
              for (const auto& e : members) m = std::max(m, e[j]);
              out[j] = m;
            } else {
              double s = 0;
              for (const auto& e : members) s += e[j];
              out[j] = n.agg == nra::AggKind::Mean ? s / static_cast<double>(members.size()) : s;
            }
          }
          r.rows.push_back(key);
          r.emb.push_back(std::move(out));
        }
        return r;
      }
      case K::Transform: {
        NRel in = eval(n.children[0]);
        TupleEval te{store_};
        NRel r{in.attrs, in.rows, {}, n.schema.dim};
        const nra::TExpr& e = *n.texpr;
        if (e.op == nra::TOp::GroupSoftmax) {
          std::vector<Row> pre;
          for (const auto& x : in.emb) pre.push_back(te.row(*e.args[0], x, n.schema.dim));
          // normalize over the first attribute within groups of the rest
          for (std::size_t i = 0; i < in.rows.size(); ++i) {
            Row out(n.schema.dim);
            for (std::size_t j = 0; j < n.schema.dim; ++j) {
              double s = 0;
              for (std::size_t k = 0; k < in.rows.size(); ++k) {
                if (std::equal(in.rows[k].begin() + 1, in.rows[k].end(), in.rows[i].begin() + 1)) {
                  s += std::exp(pre[k][j]);
                }
              }
              out[j] = std::exp(pre[i][j]) / s;
            }
            r.emb.push_back(std::move(out));
          }
          return r;
        }
        for (const auto& x : in.emb) r.emb.push_back(te.row(e, x, n.schema.dim));
        return r;
      }
      case K::Select: {
        NRel in = eval(n.children[0]);
        NRel r{in.attrs, {}, {}, in.dim};
        for (std::size_t i = 0; i < in.rows.size(); ++i) {
          bool ok = true;
          for (const auto& p : n.predicates) ok = ok && holds(p, in, in.rows[i]);
          if (ok) {
            r.rows.push_back(in.rows[i]);
            r.emb.push_back(in.emb[i]);
          }
        }
        return r;
      }
      case K::Difference: {
        NRel a = eval(n.children[0]), b = eval(n.children[1]);
        NRel r{a.attrs, {}, {}, a.dim};
        for (std::size_t i = 0; i < a.rows.size(); ++i) {
          if (std::find(b.rows.begin(), b.rows.end(), a.rows[i]) == b.rows.end()) {
            r.rows.push_back(a.rows[i]);
            r.emb.push_back(a.emb[i]);
          }
        }
        return r;
      }
      case K::Rename: {
        NRel r = eval(n.children[0]);
        r.attrs = n.renamed;
        return r;
      }
      case K::Encode: {
        NRel r = eval(n.children[0]);
        for (std::size_t i = 0; i < r.rows.size(); ++i) {
          for (const auto& item : n.encode) {
            const Value& v = r.rows[i][r.col(item.attr)];
            if (item.vocab.empty()) {
              if (v.index() == 3) throw ExecError("oracle: string without vocabulary");
              r.emb[i].push_back(v.index() == 2 ? (std::get<bool>(v) ? 1.0 : 0.0) : num(v));
            } else {
              std::string s = rel::format_value(v);
              for (const auto& w : item.vocab) r.emb[i].push_back(w == s ? 1.0 : 0.0);
            }
          }
        }
        return r;
      }
      case K::Decode: {
        NRel r = eval(n.children[0]);
        for (const auto& name : n.dec_names) r.attrs.push_back(name);
        for (std::size_t i = 0; i < r.rows.size(); ++i)
          for (std::size_t j = n.dec_begin; j < n.dec_end; ++j) r.rows[i].push_back(r.emb[i][j]);
        return r;
      }
    }
    throw ExecError("oracle: unknown node");
  }
};

}  // namespace

rel::EmbeddedRelation naive_evaluate(const nra::TermGraph& graph, nra::NodeId root, const rel::Database& db,
                                     const tensor::ParameterStore& store) {
  Oracle o(graph, db, store);
  NRel r = o.eval(root);
  tensor::Matrix emb(r.rows.size(), r.dim);
  for (std::size_t i = 0; i < r.rows.size(); ++i)
    for (std::size_t j = 0; j < r.dim; ++j) emb(i, j) = r.emb[i][j];
  return rel::EmbeddedRelation::make(r.attrs, r.rows, std::move(emb));
}

std::optional<std::string> diff_relations(const rel::EmbeddedRelation& a, const rel::EmbeddedRelation& b, double tol) {
  if (a.attrs() != b.attrs()) return std::string("attributes differ");
  if (a.dim() != b.dim()) return "width " + std::to_string(a.dim()) + " vs " + std::to_string(b.dim());
  if (a.size() != b.size()) return "row count " + std::to_string(a.size()) + " vs " + std::to_string(b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& x = a.rows()[i];
    const auto& y = b.rows()[i];
    for (std::size_t k = 0; k < x.size(); ++k) {
      bool same = x[k] == y[k];
      if (!same && x[k].index() == 1 && y[k].index() == 1) {
        same = std::abs(std::get<double>(x[k]) - std::get<double>(y[k])) <= tol;
      }
      if (!same) return "row " + std::to_string(i) + " content differs";
    }
    for (std::size_t j = 0; j < a.dim(); ++j) {
      double d = std::abs(a.emb()(i, j) - b.emb()(i, j));
      if (!(d <= tol)) {
        return "row " + std::to_string(i) + " emb_" + std::to_string(j) + ": " + rel::format_double(a.emb()(i, j)) +
               " vs " + rel::format_double(b.emb()(i, j));
      }
    }
  }
  return std::nullopt;
}

}  // namespace relnn::exec
