// Acceptance gate: one PASS/FAIL line per criterion. Usage:
//   relnn_acceptance            all criteria
//   relnn_acceptance 3 5        a subset
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "fixtures.hpp"
#include "gradcheck.hpp"
#include "relnn/cli/manifest.hpp"
#include "relnn/cli/runner.hpp"
#include "relnn/frontend/parser.hpp"

namespace fs = std::filesystem;
using namespace relnn;
using rel::Tuple;
using rel::Value;
using tensor::Matrix;
using tensor::ParamKey;
using tensor::Tensor;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double x, int prec = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", prec, x);
  return buf;
}

fs::path program_dir(const std::string& name) { return fs::path(RELNN_SOURCE_DIR) / "programs" / name; }

std::string program_text(const std::string& name) {
  return relnn::testing::read_file("programs/" + name + "/" + name + ".relnn");
}

const std::vector<std::string> kShipped = {"driver", "quadratic", "classifier", "gcn_sbm",
                                           "dhn_c3", "hgt_toy",   "gated_history"};

// ---------------------------------------------------------------- criterion 1
// Random d=0 pipelines against a set-based relational algebra evaluator.

struct SetRel {
  std::vector<std::string> attrs;
  std::set<Tuple> rows;
};

struct Expr1 {
  enum Kind { Leaf, Join, Union, Select, Diff, Rename } kind;
  std::string relation;
  std::vector<std::shared_ptr<Expr1>> kids;
  std::vector<std::string> attrs;  // Union group attrs / Rename names
  nra::CmpOp op = nra::CmpOp::Eq;
  std::string lhs, rhs_attr;  // predicate: lhs op (rhs_attr or constant)
  std::int64_t constant = 0;
};
using E1 = std::shared_ptr<Expr1>;

std::size_t col_of(const SetRel& r, const std::string& a) {
  return static_cast<std::size_t>(std::find(r.attrs.begin(), r.attrs.end(), a) - r.attrs.begin());
}

bool cmp(nra::CmpOp op, std::int64_t a, std::int64_t b) {
  switch (op) {
    case nra::CmpOp::Eq: return a == b;
    case nra::CmpOp::Ne: return a != b;
    case nra::CmpOp::Lt: return a < b;
    case nra::CmpOp::Le: return a <= b;
    case nra::CmpOp::Gt: return a > b;
    case nra::CmpOp::Ge: return a >= b;
  }
  return false;
}

SetRel ra_eval(const E1& e, const std::map<std::string, SetRel>& db) {
  switch (e->kind) {
    case Expr1::Leaf: return db.at(e->relation);
    case Expr1::Join: {
      SetRel a = ra_eval(e->kids[0], db), b = ra_eval(e->kids[1], db);
      SetRel out{a.attrs, {}};
      for (const auto& x : b.attrs)
        if (col_of(a, x) == a.attrs.size()) out.attrs.push_back(x);
      for (const auto& s : a.rows)
        for (const auto& t : b.rows) {
          bool ok = true;
          for (std::size_t j = 0; j < b.attrs.size(); ++j) {
            auto i = col_of(a, b.attrs[j]);
            if (i < a.attrs.size() && s[i] != t[j]) ok = false;
          }
          if (!ok) continue;
          Tuple u = s;
          for (std::size_t j = 0; j < b.attrs.size(); ++j)
            if (col_of(a, b.attrs[j]) == a.attrs.size()) u.push_back(t[j]);
          out.rows.insert(u);
        }
      return out;
    }
    case Expr1::Union: {
      SetRel out{e->attrs, {}};
      for (const auto& k : e->kids) {
        SetRel in = ra_eval(k, db);
        for (const auto& s : in.rows) {
          Tuple u;
          for (const auto& a : e->attrs) u.push_back(s[col_of(in, a)]);
          out.rows.insert(u);
        }
      }
      return out;
    }
    case Expr1::Select: {
      SetRel in = ra_eval(e->kids[0], db);
      SetRel out{in.attrs, {}};
      for (const auto& s : in.rows) {
        auto a = std::get<std::int64_t>(s[col_of(in, e->lhs)]);
        auto b = e->rhs_attr.empty() ? e->constant : std::get<std::int64_t>(s[col_of(in, e->rhs_attr)]);
        if (cmp(e->op, a, b)) out.rows.insert(s);
      }
      return out;
    }
    case Expr1::Diff: {
      SetRel a = ra_eval(e->kids[0], db), b = ra_eval(e->kids[1], db);
      SetRel out{a.attrs, {}};
      for (const auto& s : a.rows)
        if (!b.rows.count(s)) out.rows.insert(s);
      return out;
    }
    case Expr1::Rename: {
      SetRel in = ra_eval(e->kids[0], db);
      in.attrs = e->attrs;
      return in;
    }
  }
  return {};
}

struct Generator {
  std::mt19937_64 rng;
  std::map<std::string, SetRel> db;
  const std::vector<std::string> pool{"a", "b", "c", "d", "e"};

  std::size_t pick(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); }

  void make_db() {
    db.clear();
    const std::size_t n_rel = 1 + pick(5);
    for (std::size_t r = 0; r < n_rel; ++r) {
      std::vector<std::string> names = pool;
      std::shuffle(names.begin(), names.end(), rng);
      names.resize(1 + pick(4));
      SetRel rel{names, {}};
      const std::size_t n_rows = pick(51);
      for (std::size_t i = 0; i < n_rows; ++i) {
        Tuple t;
        for (std::size_t k = 0; k < names.size(); ++k) t.push_back(static_cast<std::int64_t>(pick(4)));
        rel.rows.insert(t);
      }
      db["R" + std::to_string(r)] = rel;
    }
  }

  std::vector<std::string> attrs_of(const E1& e) { return ra_eval(e, db).attrs; }

  E1 leaf() {
    auto e = std::make_shared<Expr1>();
    e->kind = Expr1::Leaf;
    e->relation = "R" + std::to_string(pick(db.size()));
    return e;
  }

  E1 gen(int depth) {
    if (depth == 0 || pick(4) == 0) return leaf();
    auto e = std::make_shared<Expr1>();
    switch (pick(6)) {
      case 0:
        e->kind = Expr1::Join;
        e->kids = {gen(depth - 1), gen(depth - 1)};
        return e;
      case 1: {
        e->kind = Expr1::Union;
        E1 first = gen(depth - 1);
        auto attrs = attrs_of(first);
        e->kids = {first};
        if (pick(2)) {
          E1 second = gen(depth - 1);
          auto other = attrs_of(second);
          std::vector<std::string> common;
          for (const auto& a : attrs)
            if (std::find(other.begin(), other.end(), a) != other.end()) common.push_back(a);
          attrs = common;
          e->kids.push_back(second);
        }
        std::shuffle(attrs.begin(), attrs.end(), rng);
        attrs.resize(attrs.empty() ? 0 : pick(attrs.size() + 1));
        e->attrs = attrs;
        return e;
      }
      case 2: {
        e->kind = Expr1::Select;
        E1 in = gen(depth - 1);
        auto attrs = attrs_of(in);
        if (attrs.empty()) return in;
        e->kids = {in};
        e->op = static_cast<nra::CmpOp>(pick(6));
        e->lhs = attrs[pick(attrs.size())];
        if (pick(2) && attrs.size() > 1) {
          e->rhs_attr = attrs[pick(attrs.size())];
        } else {
          e->constant = static_cast<std::int64_t>(pick(4));
        }
        return e;
      }
      case 3: {
        e->kind = Expr1::Diff;
        E1 a = gen(depth - 1);
        auto attrs = attrs_of(a);
        E1 b = gen(depth - 1);
        auto battrs = attrs_of(b);
        bool covers = std::all_of(attrs.begin(), attrs.end(), [&](const std::string& x) {
          return std::find(battrs.begin(), battrs.end(), x) != battrs.end();
        });
        auto proj = std::make_shared<Expr1>();
        proj->kind = Expr1::Union;
        proj->attrs = attrs;
        if (covers) {
          proj->kids = {b};
        } else {
          auto sel = std::make_shared<Expr1>();
          sel->kind = Expr1::Select;
          sel->kids = {a};
          sel->op = static_cast<nra::CmpOp>(pick(6));
          sel->lhs = attrs[pick(attrs.size())];
          sel->constant = static_cast<std::int64_t>(pick(4));
          proj->kids = {sel};
        }
        e->kids = {a, proj};
        return e;
      }
      case 4: {
        e->kind = Expr1::Rename;
        E1 in = gen(depth - 1);
        auto attrs = attrs_of(in);
        std::vector<std::string> names = pool;
        std::shuffle(names.begin(), names.end(), rng);
        names.resize(attrs.size());
        e->kids = {in};
        e->attrs = names;
        return e;
      }
      default: return gen(depth - 1);
    }
  }
};

nra::NodeId build(const E1& e, nra::TermGraph& g, const rel::Database& db, std::map<std::string, nra::NodeId>& leaves) {
  switch (e->kind) {
    case Expr1::Leaf: {
      auto it = leaves.find(e->relation);
      if (it != leaves.end()) return it->second;
      const auto& r = db.at(e->relation);
      return leaves[e->relation] = g.leaf(e->relation, {r.attrs(), r.dim()});
    }
    case Expr1::Join: return g.join(build(e->kids[0], g, db, leaves), build(e->kids[1], g, db, leaves));
    case Expr1::Union: {
      std::vector<nra::NodeId> in;
      for (const auto& k : e->kids) in.push_back(build(k, g, db, leaves));
      return g.projected_union(in, e->attrs, nra::AggKind::Sum);
    }
    case Expr1::Select: {
      auto rhs = e->rhs_attr.empty() ? nra::ArithTerm::constant(Value(e->constant)) : nra::ArithTerm::variable(e->rhs_attr);
      return g.select(build(e->kids[0], g, db, leaves), {nra::Predicate{e->op, nra::ArithTerm::variable(e->lhs), rhs}});
    }
    case Expr1::Diff: return g.difference(build(e->kids[0], g, db, leaves), build(e->kids[1], g, db, leaves));
    case Expr1::Rename: return g.rename(build(e->kids[0], g, db, leaves), e->attrs);
  }
  return -1;
}

Outcome criterion1() {
  const auto start = std::chrono::steady_clock::now();
  Generator gen{std::mt19937_64(20240601), {}};
  std::size_t checked = 0, mismatches = 0, nonempty = 0;
  std::string first_bad;
  for (int trial = 0; trial < 1000; ++trial) {
    gen.make_db();
    rel::Database db;
    for (const auto& [name, r] : gen.db) {
      std::vector<Tuple> rows(r.rows.begin(), r.rows.end());
      db.add(name, rel::EmbeddedRelation::make(r.attrs, rows, Matrix(rows.size(), 0)));
    }
    E1 e = gen.gen(5);
    SetRel want = ra_eval(e, gen.db);
    nra::TermGraph g;
    std::map<std::string, nra::NodeId> leaves;
    nra::NodeId root = build(e, g, db, leaves);
    tensor::ParameterStore store;
    exec::Executor ex(g, db);
    auto got = ex.evaluate(exec::compile_physical(g, root), store);
    std::vector<Tuple> want_rows(want.rows.begin(), want.rows.end());
    ++checked;
    if (!want_rows.empty()) ++nonempty;
    if (got.attrs() != want.attrs || got.rows() != want_rows || got.dim() != 0) {
      if (mismatches++ == 0) first_bad = "trial " + std::to_string(trial) + ":\n" + g.dump(root);
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  Outcome o;
  o.pass = mismatches == 0 && secs < 60.0;
  o.detail = std::to_string(checked) + " random pipelines (" + std::to_string(nonempty) + " nonempty), " +
             std::to_string(mismatches) + " mismatches, " + fmt(secs) + " s (limit 60 s)";
  if (!first_bad.empty()) o.detail += "\n" + first_bad;
  return o;
}

// ---------------------------------------------------------------- criterion 2

Outcome criterion2() {
  using relnn::testing::grad_check;
  using relnn::testing::project;
  using relnn::testing::random_matrix;
  std::mt19937_64 rng(77);
  auto dim = [&](std::size_t lo = 1, std::size_t hi = 5) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
  };
  // keep values away from kinks
  auto away = [](Matrix m) {
    for (auto& x : m.data())
      if (std::abs(x) < 0.05) x = x < 0 ? -0.05 - std::abs(x) : 0.05 + x;
    return m;
  };
  using Case = std::function<std::pair<relnn::testing::Builder, std::vector<Matrix>>()>;
  std::vector<std::pair<std::string, Case>> ops;
  auto unary = [&](const std::string& name, std::function<Tensor(const Tensor&)> f, bool kink = false) {
    ops.push_back({name, [&, f, kink] {
                     Matrix a = random_matrix(rng, dim(), dim(), -2, 2);
                     if (kink) a = away(a);
                     return std::make_pair(relnn::testing::Builder([f](const std::vector<Tensor>& t) { return project(f(t[0])); }),
                                           std::vector<Matrix>{a});
                   }});
  };
  auto binary = [&](const std::string& name, std::function<Tensor(const Tensor&, const Tensor&)> f) {
    ops.push_back({name, [&, f] {
                     std::size_t r = dim(), c = dim();
                     return std::make_pair(
                         relnn::testing::Builder([f](const std::vector<Tensor>& t) { return project(f(t[0], t[1])); }),
                         std::vector<Matrix>{random_matrix(rng, r, c), random_matrix(rng, r, c)});
                   }});
  };
  ops.push_back({"matmul", [&] {
                   std::size_t n = dim(), k = dim(), m = dim();
                   return std::make_pair(relnn::testing::Builder([](const std::vector<Tensor>& t) {
                                           return project(tensor::matmul(t[0], t[1]));
                                         }),
                                         std::vector<Matrix>{random_matrix(rng, n, k), random_matrix(rng, k, m)});
                 }});
  unary("transpose", [](const Tensor& a) { return tensor::transpose(a); });
  binary("add", [](const Tensor& a, const Tensor& b) { return tensor::add(a, b); });
  binary("sub", [](const Tensor& a, const Tensor& b) { return tensor::sub(a, b); });
  binary("mul_elementwise", [](const Tensor& a, const Tensor& b) { return tensor::mul_elementwise(a, b); });
  unary("scale", [](const Tensor& a) { return tensor::scale(a, -1.7); });
  unary("add_scalar", [](const Tensor& a) { return tensor::add_scalar(a, 0.3); });
  binary("concat_cols", [](const Tensor& a, const Tensor& b) { return tensor::concat_cols(a, b); });
  ops.push_back({"slice_cols", [&] {
                   std::size_t c = dim(2, 6);
                   std::size_t b = dim(0, c - 1), e = dim(b + 1, c);
                   return std::make_pair(relnn::testing::Builder([b, e](const std::vector<Tensor>& t) {
                                           return project(tensor::slice_cols(t[0], b, e));
                                         }),
                                         std::vector<Matrix>{random_matrix(rng, dim(), c)});
                 }});
  ops.push_back({"stack_rows", [&] {
                   std::size_t c = dim();
                   return std::make_pair(relnn::testing::Builder([](const std::vector<Tensor>& t) {
                                           return project(tensor::stack_rows(t));
                                         }),
                                         std::vector<Matrix>{random_matrix(rng, dim(), c), random_matrix(rng, dim(), c),
                                                             random_matrix(rng, dim(), c)});
                 }});
  unary("relu", [](const Tensor& a) { return tensor::relu(a); }, true);
  unary("sigmoid", [](const Tensor& a) { return tensor::sigmoid(a); });
  unary("gelu", [](const Tensor& a) { return tensor::gelu(a); });
  ops.push_back({"index_select (duplicates)", [&] {
                   std::size_t n = dim(1, 4), m = dim(n + 1, 9);
                   std::vector<std::size_t> idx(m);
                   for (auto& i : idx) i = dim(0, n - 1);
                   idx[0] = idx[m - 1];  // at least one duplicate
                   return std::make_pair(relnn::testing::Builder([idx](const std::vector<Tensor>& t) {
                                           return project(tensor::index_select(t[0], idx));
                                         }),
                                         std::vector<Matrix>{random_matrix(rng, n, dim())});
                 }});
  for (auto [name, kind] : {std::pair{"scatter_sum", tensor::ScatterKind::Sum},
                            std::pair{"scatter_mean", tensor::ScatterKind::Mean},
                            std::pair{"scatter_max", tensor::ScatterKind::Max}}) {
    ops.push_back({name, [&, kind = kind] {
                     std::size_t n = dim(2, 9), g = dim(1, 4);
                     std::vector<std::size_t> group(n);
                     for (auto& x : group) x = dim(0, g - 1);
                     return std::make_pair(relnn::testing::Builder([group, g, kind](const std::vector<Tensor>& t) {
                                             return project(tensor::scatter_reduce(t[0], group, g, kind));
                                           }),
                                           std::vector<Matrix>{random_matrix(rng, n, dim())});
                   }});
  }
  ops.push_back({"softmax_rows_grouped", [&] {
                   std::size_t n = dim(2, 9), g = dim(1, 3);
                   std::vector<std::size_t> group(n);
                   for (auto& x : group) x = dim(0, g - 1);
                   return std::make_pair(relnn::testing::Builder([group, g](const std::vector<Tensor>& t) {
                                           return project(tensor::softmax_rows_grouped(t[0], group, g));
                                         }),
                                         std::vector<Matrix>{random_matrix(rng, n, dim(), -2, 2)});
                 }});
  auto targets = [&](std::size_t r, std::size_t c) {
    Matrix y = random_matrix(rng, r, c, 0, 1);
    for (std::size_t i = 0; i < r; ++i) {
      double s = 0;
      for (std::size_t j = 0; j < c; ++j) s += y(i, j);
      for (std::size_t j = 0; j < c; ++j) y(i, j) /= s;
    }
    return y;
  };
  ops.push_back({"cross_entropy_rows", [&] {
                   std::size_t r = dim(), c = dim(2, 5);
                   return std::make_pair(relnn::testing::Builder([](const std::vector<Tensor>& t) {
                                           return project(tensor::cross_entropy_rows(t[0], t[1]));
                                         }),
                                         std::vector<Matrix>{random_matrix(rng, r, c, -3, 3), targets(r, c)});
                 }});
  ops.push_back({"cross_entropy", [&] {
                   std::size_t r = dim(), c = dim(2, 5);
                   return std::make_pair(relnn::testing::Builder([](const std::vector<Tensor>& t) {
                                           return tensor::cross_entropy(t[0], t[1]);
                                         }),
                                         std::vector<Matrix>{random_matrix(rng, r, c, -3, 3), targets(r, c)});
                 }});
  unary("reduce_sum", [](const Tensor& a) { return tensor::reduce(a, tensor::ReduceKind::Sum); });
  unary("reduce_mean", [](const Tensor& a) { return tensor::reduce(a, tensor::ReduceKind::Mean); });

  const double eps = 1e-5, tol = 1e-4;
  double worst = 0;
  std::string worst_op;
  std::size_t failures = 0, instances = 0;
  std::string failed;
  for (auto& [name, make] : ops) {
    for (int i = 0; i < 20; ++i) {
      auto [f, inputs] = make();
      double err = grad_check(f, inputs, eps).worst;
      ++instances;
      if (err > worst) {
        worst = err;
        worst_op = name;
      }
      if (!(err <= tol)) {
        ++failures;
        if (failed.find(name) == std::string::npos) failed += " " + name;
      }
    }
  }
  Outcome o;
  o.pass = failures == 0;
  o.detail = std::to_string(ops.size()) + " ops x 20 instances, eps=1e-5, worst rel. error " + fmt(worst) + " (" +
             worst_op + "), tol 1e-4";
  if (failures) o.detail += ", failing:" + failed;
  return o;
}

// ---------------------------------------------------------------- criterion 3

Outcome criterion3() {
  const std::string src = program_text("dhn_c3");
  auto run_graph = [&](std::size_t n, const std::set<std::pair<std::size_t, std::size_t>>& edges) {
    rel::Database db;
    std::vector<Tuple> erows, nrows;
    for (auto [a, b] : edges) erows.push_back({std::int64_t{0}, std::int64_t(a), std::int64_t(b)});
    for (std::size_t v = 0; v < n; ++v) nrows.push_back({std::int64_t{0}, std::int64_t(v)});
    db.add("Edge", rel::EmbeddedRelation::make({"g", "n", "v"}, erows, Matrix(erows.size(), 0)));
    Matrix ones(n, 1);
    for (std::size_t v = 0; v < n; ++v) ones(v, 0) = 1.0;
    db.add("Node", rel::EmbeddedRelation::make({"g", "n"}, nrows, ones));
    tensor::ParameterStore store;
    auto c = relnn::testing::compile(src, db, store);
    exec::Executor ex(c.program.graph, db);
    auto r = ex.evaluate(c.plan("C3_Agg"), store);
    std::map<std::size_t, double> out;
    for (std::size_t i = 0; i < r.size(); ++i) out[std::get<std::int64_t>(r.rows()[i][1])] = r.emb()(i, 0);
    return out;
  };
  auto brute = [](std::size_t n, const std::set<std::pair<std::size_t, std::size_t>>& e) {
    std::map<std::size_t, double> out;
    for (std::size_t a = 0; a < n; ++a) {
      std::size_t count = 0;
      for (std::size_t v = 0; v < n; ++v)
        for (std::size_t w = 0; w < n; ++w)
          if (e.count({a, v}) && e.count({v, w}) && e.count({w, a})) ++count;
      if (count) out[a] = static_cast<double>(count);
    }
    return out;
  };
  std::set<std::pair<std::size_t, std::size_t>> k3;
  for (std::size_t a = 0; a < 3; ++a)
    for (std::size_t b = 0; b < 3; ++b)
      if (a != b) k3.insert({a, b});
  auto k3_out = run_graph(3, k3);
  bool k3_ok = k3_out == std::map<std::size_t, double>{{0, 2.0}, {1, 2.0}, {2, 2.0}};

  std::mt19937_64 rng(3);
  std::size_t bad = 0, nodes_with_cycles = 0;
  for (int g = 0; g < 50; ++g) {
    std::size_t n = std::uniform_int_distribution<std::size_t>(1, 12)(rng);
    double p = std::uniform_real_distribution<double>(0.1, 0.5)(rng);
    std::set<std::pair<std::size_t, std::size_t>> e;
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b)
        if (std::bernoulli_distribution(a == b ? 0.1 : p)(rng)) e.insert({a, b});
    auto want = brute(n, e);
    nodes_with_cycles += want.size();
    if (run_graph(n, e) != want) ++bad;
  }
  Outcome o;
  o.pass = k3_ok && bad == 0;
  o.detail = std::string("K3 -> ") + (k3_ok ? "2 per node" : "WRONG") + "; 50 random graphs (<=12 nodes), " +
             std::to_string(bad) + " mismatches, " + std::to_string(nodes_with_cycles) + " rooted nodes compared exactly";
  return o;
}

// ---------------------------------------------------------------- criterion 4

Outcome criterion4() {
  auto m = cli::load_manifest(program_dir("hgt_toy") / "manifest.txt");
  std::ifstream pin(*m.params);
  tensor::ParameterStore store = tensor::ParameterStore::load(pin, m.seed);
  auto db = cli::load_database(m, store);
  auto c = relnn::testing::compile(program_text("hgt_toy"), db, store);
  exec::Executor ex(c.program.graph, db);
  auto dot = ex.evaluate(c.plan("Dot"), store);
  auto att = ex.evaluate(c.plan("ATT"), store);

  // dense oracle
  const std::size_t d = 4, dh = 2;
  auto lin = [&](const std::string& key, const Matrix& x) {
    const Matrix& w = store.value(ParamKey{key, {}});
    Matrix out(x.rows(), dh);
    for (std::size_t i = 0; i < x.rows(); ++i)
      for (std::size_t j = 0; j < dh; ++j) {
        double s = w(d, j);
        for (std::size_t k = 0; k < d; ++k) s += x(i, k) * w(k, j);
        out(i, j) = s;
      }
    return out;
  };
  const auto& src = db.at("Src");
  const auto& tgt = db.at("Tgt");
  Matrix K = lin("KLin", src.emb()), Q = lin("QLin", tgt.emb());
  const Matrix& W = store.value(ParamKey{"W_ATT", {}});
  const double mu = store.value(ParamKey{"Mu", {}})(0, 0);
  std::map<std::pair<std::string, std::string>, double> score;
  for (const auto& e : db.at("Cites").rows()) {
    auto s = *src.find_row({e[0]});
    auto t = *tgt.find_row({e[1]});
    double v = 0;
    for (std::size_t a = 0; a < dh; ++a)
      for (std::size_t b = 0; b < dh; ++b) v += K(s, a) * W(a, b) * Q(t, b);
    score[{std::get<std::string>(e[0]), std::get<std::string>(e[1])}] = v * mu / std::sqrt(double(d) / double(dh));
  }
  std::map<std::string, double> denom;
  for (const auto& [st, v] : score) denom[st.second] += std::exp(v);

  double worst_dot = 0, worst_att = 0, worst_sum = 0;
  bool shape_ok = dot.size() == score.size() && att.size() == score.size() && dot.dim() == 1 && att.dim() == 1;
  std::map<std::string, double> sums;
  for (std::size_t i = 0; shape_ok && i < dot.size(); ++i) {
    std::pair<std::string, std::string> key{std::get<std::string>(dot.rows()[i][0]), std::get<std::string>(dot.rows()[i][1])};
    worst_dot = std::max(worst_dot, std::abs(dot.emb()(i, 0) - score.at(key)));
    worst_att = std::max(worst_att, std::abs(att.emb()(i, 0) - std::exp(score.at(key)) / denom.at(key.second)));
    sums[key.second] += att.emb()(i, 0);
  }
  for (const auto& [t, s] : sums) worst_sum = std::max(worst_sum, std::abs(s - 1.0));
  Outcome o;
  o.pass = shape_ok && worst_dot <= 1e-9 && worst_att <= 1e-9 && worst_sum <= 1e-9 && sums.size() == 2;
  o.detail = std::to_string(score.size()) + " edges; max |Dot - dense| " + fmt(worst_dot) + ", max |ATT - softmax| " +
             fmt(worst_att) + ", max |group sum - 1| " + fmt(worst_sum) + " (tol 1e-9)";
  return o;
}

// ---------------------------------------------------------------- criterion 5

struct Loaded {
  tensor::ParameterStore store;
  rel::Database db;
  relnn::testing::Compiled c;
};

Loaded load_shipped(const std::string& name, std::uint64_t seed) {
  auto m = cli::load_manifest(program_dir(name) / "manifest.txt");
  Loaded l{tensor::ParameterStore(seed), {}, {}};
  l.db = cli::load_database(m, l.store);
  l.c = relnn::testing::compile(program_text(name), l.db, l.store);
  return l;
}

double fit_first(Loaded& l, exec::Executor& ex) {
  const auto& a = l.c.program.actions.at(0);
  auto cfg = exec::parse_fit_config(a.kwargs, l.c.program.scalars);
  ex.fit(l.c.plan(a.relation), cfg, l.store);
  return ex.evaluate(l.c.plan(a.relation), l.store).emb()(0, 0);
}

double sbm_accuracy(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::size_t n = 20;
  std::vector<int> block(n);
  for (std::size_t v = 0; v < n; ++v) block[v] = v < 10 ? 0 : 1;
  std::set<std::pair<std::size_t, std::size_t>> adj;
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = u + 1; v < n; ++v)
      if (std::bernoulli_distribution(block[u] == block[v] ? 0.9 : 0.05)(rng)) {
        adj.insert({u, v});
        adj.insert({v, u});
      }
  for (std::size_t v = 0; v < n; ++v) adj.insert({v, v});
  std::vector<double> deg(n, 0);
  for (auto [u, v] : adj) deg[u] += 1;
  rel::Database db;
  std::vector<Tuple> erows, nrows, trows;
  Matrix w(adj.size(), 1), feat(n, n), lab(4, 2);
  std::size_t i = 0;
  for (auto [u, v] : adj) {
    erows.push_back({std::int64_t(u), std::int64_t(v)});
    w(i++, 0) = 1.0 / std::sqrt(deg[u] * deg[v]);
  }
  for (std::size_t v = 0; v < n; ++v) {
    nrows.push_back({std::int64_t(v)});
    feat(v, v) = 1.0;
  }
  const std::size_t train[] = {0, 1, 10, 11};
  for (std::size_t k = 0; k < 4; ++k) {
    trows.push_back({std::int64_t(train[k])});
    lab(k, block[train[k]]) = 1.0;
  }
  db.add("Edge", rel::EmbeddedRelation::make({"u", "v"}, erows, w));
  db.add("Node", rel::EmbeddedRelation::make({"v"}, nrows, feat));
  db.add("Train", rel::EmbeddedRelation::make({"v"}, trows, lab));
  tensor::ParameterStore store(seed);
  auto c = relnn::testing::compile(program_text("gcn_sbm"), db, store);
  exec::Executor ex(c.program.graph, db);
  const auto& a = c.program.actions.at(0);
  ex.fit(c.plan(a.relation), exec::parse_fit_config(a.kwargs, c.program.scalars), store);
  auto out = ex.evaluate(c.plan("Out"), store);
  std::size_t correct = 0, total = 0;
  for (std::size_t r = 0; r < out.size(); ++r) {
    auto v = static_cast<std::size_t>(std::get<std::int64_t>(out.rows()[r][0]));
    if (std::find(std::begin(train), std::end(train), v) != std::end(train)) continue;
    int pred = out.emb()(r, 1) > out.emb()(r, 0) ? 1 : 0;
    correct += pred == block[v];
    ++total;
  }
  return total ? double(correct) / double(total) : 0.0;
}

Outcome criterion5() {
  auto q = load_shipped("quadratic", 42);
  exec::Executor eq(q.c.program.graph, q.db);
  const auto qa = exec::parse_fit_config(q.c.program.actions.at(0).kwargs, q.c.program.scalars);
  fit_first(q, eq);
  const double p = q.store.value(ParamKey{"P", {}})(0, 0);
  const bool a_ok = std::abs(p - 3.0) < 1e-2 && qa.epochs <= 200 && qa.optimizer == tensor::OptimizerKind::Adam;

  auto cl = load_shipped("classifier", 42);
  exec::Executor ec(cl.c.program.graph, cl.db);
  const auto ca = exec::parse_fit_config(cl.c.program.actions.at(0).kwargs, cl.c.program.scalars);
  const double ce = fit_first(cl, ec);
  const bool b_ok = ce < 0.1 && ca.epochs <= 300 && cl.db.at("Points").size() == 20;

  std::vector<double> acc;
  for (std::uint64_t seed = 42; seed <= 46; ++seed) acc.push_back(sbm_accuracy(seed));
  std::vector<double> sorted = acc;
  std::sort(sorted.begin(), sorted.end());
  const double median = sorted[2];
  const bool c_ok = median >= 0.95;

  std::string accs;
  for (double x : acc) accs += (accs.empty() ? "" : ",") + fmt(x);
  Outcome o;
  o.pass = a_ok && b_ok && c_ok;
  o.detail = "(a) |p-3|=" + fmt(std::abs(p - 3.0)) + " after " + std::to_string(qa.epochs) + " adam epochs " +
             (a_ok ? "ok" : "FAIL") + "; (b) CE=" + fmt(ce) + " after " + std::to_string(ca.epochs) + " epochs " +
             (b_ok ? "ok" : "FAIL") + "; (c) SBM accuracy per seed 42-46 [" + accs + "], median " + fmt(median) +
             (c_ok ? " ok" : " FAIL");
  return o;
}

// ---------------------------------------------------------------- criterion 6

Outcome criterion6() {
  rel::Database db;
  const std::size_t d = 4;
  std::mt19937_64 rng(6);
  Matrix emb = relnn::testing::random_matrix(rng, 3, d);
  db.add("Input", rel::EmbeddedRelation::make({"k"}, {{std::int64_t{0}}, {std::int64_t{1}}, {std::int64_t{2}}}, emb));

  tensor::ParameterStore heads(1);
  relnn::testing::compile(
      "d = 4.\nAttHead<i>(k; Linear(d, d)(z)) :- Input(k; z) .\n"
      "MultiHead(k; Concat(*z)) :- AttHead<i>(k; z) ,... [i = 1 to 8] .\n",
      db, heads);
  std::size_t linear_keys = 0;
  for (const auto& k : heads.keys())
    if (k.name == "AttHead.Linear0") ++linear_keys;
  const bool eight = linear_keys == 8 && heads.size() == 8;

  tensor::ParameterStore twice(1);
  relnn::testing::compile(
      "d = 4.\nAttHead<i>(k; Linear(d, d)(z)) :- Input(k; z) .\n"
      "P(k; z) :- AttHead<3>(k; z) .\nQ(k; Sigmoid(z)) :- AttHead<3>(k; z) .\n",
      db, twice);
  const bool one = twice.size() == 1 && twice.contains(ParamKey{"AttHead.Linear0", {"3"}});

  // tied vs untied copies with identical values
  const std::string tied =
      "W = Linear(4, 4).\n"
      "A(k; W(z)) :- Input(k; z) .\n"
      "B(k; W(Sigmoid(z))) :- Input(k; z) .\n"
      "L(; sum(z1 @ z2.T)) :- A(k; z1), B(k; z2) .\n";
  const std::string untied =
      "Wa = Linear(4, 4). Wb = Linear(4, 4).\n"
      "A(k; Wa(z)) :- Input(k; z) .\n"
      "B(k; Wb(Sigmoid(z))) :- Input(k; z) .\n"
      "L(; sum(z1 @ z2.T)) :- A(k; z1), B(k; z2) .\n";
  auto grads = [&](const std::string& src, tensor::ParameterStore& store) {
    auto c = relnn::testing::compile(src, db, store);
    exec::Executor ex(c.program.graph, db);
    tensor::Tape tape;
    tensor::ParameterBinding binding(store, tape);
    auto loss = ex.run(c.plan("L"), binding);
    return tensor::backward(tape, loss.emb, binding);
  };
  tensor::ParameterStore st(2), su(2);
  relnn::testing::compile(tied, db, st);
  relnn::testing::compile(untied, db, su);
  su.set(ParamKey{"Wa", {}}, st.value(ParamKey{"W", {}}));
  su.set(ParamKey{"Wb", {}}, st.value(ParamKey{"W", {}}));
  auto gt = grads(tied, st);
  auto gu = grads(untied, su);
  const Matrix& g = gt.at(ParamKey{"W", {}});
  const Matrix& ga = gu.at(ParamKey{"Wa", {}});
  const Matrix& gb = gu.at(ParamKey{"Wb", {}});
  double worst = 0, mag = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    worst = std::max(worst, std::abs(g.data()[i] - (ga.data()[i] + gb.data()[i])));
    mag = std::max(mag, std::abs(g.data()[i]));
  }
  const bool sum_ok = worst <= 1e-9 && mag > 0;
  Outcome o;
  o.pass = eight && one && sum_ok;
  o.detail = "eight-head fixture: " + std::to_string(linear_keys) + " Linear keys; AttHead<3> from two rules: " +
             std::to_string(twice.size()) + " key; |g_shared - (g_use1 + g_use2)| max " + fmt(worst) + " (tol 1e-9)";
  return o;
}

// ---------------------------------------------------------------- criterion 7

Outcome criterion7() {
  const auto prog = frontend::parse(program_text("driver"));
  std::size_t aliases = 0, functions = 0, rules = 0, fits = 0, preds = 0;
  for (const auto& s : prog) {
    std::visit(
        [&](const auto& n) {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, frontend::AliasStmt>) ++aliases;
          if constexpr (std::is_same_v<T, frontend::FunctionDef>) ++functions;
          if constexpr (std::is_same_v<T, frontend::RuleStmt>) ++rules;
          if constexpr (std::is_same_v<T, frontend::FitStmt>) ++fits;
          if constexpr (std::is_same_v<T, frontend::PredStmt>) ++preds;
        },
        s.node);
  }
  const bool census = aliases == 4 && functions == 1 && rules == 2 && fits == 1 && preds == 1;

  // 3 leaves + Inter (2 joins, transform, union) + Out union + Profile union
  // + Label leaf, join, transform, union = 13
  auto l = load_shipped("driver", 42);
  const std::size_t nodes = l.c.program.graph.extract_plan(l.c.program.node_of("Loss")).size();

  const fs::path tmp = fs::temp_directory_path() / "relnn_acceptance_7";
  fs::remove_all(tmp);
  cli::RunOptions opt;
  opt.oracle = true;
  opt.out = tmp;
  auto res = cli::run(program_dir("driver") / "driver.relnn", program_dir("driver") / "manifest.txt", opt);
  fs::remove_all(tmp);

  Outcome o;
  o.pass = census && nodes == 13 && res.ok() && res.oracle_checks > 0;
  o.detail = "census aliases=" + std::to_string(aliases) + " functions=" + std::to_string(functions) +
             " rules=" + std::to_string(rules) + " fit=" + std::to_string(fits) + " pred=" + std::to_string(preds) +
             "; Loss plan " + std::to_string(nodes) + " nodes (hand count 13); --oracle " +
             (res.ok() ? std::to_string(res.oracle_checks) + " checks, empty diff" : res.diagnostic());
  return o;
}

// ---------------------------------------------------------------- criterion 8

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

Outcome criterion8() {
  std::size_t files = 0, differing = 0;
  std::string problems;
  for (const auto& name : kShipped) {
    std::vector<std::map<std::string, std::string>> runs;
    for (int k = 0; k < 2; ++k) {
      const fs::path tmp = fs::temp_directory_path() / ("relnn_acceptance_8_" + std::to_string(k));
      fs::remove_all(tmp);
      cli::RunOptions opt;
      opt.out = tmp;
      auto res = cli::run(program_dir(name) / (name + ".relnn"), program_dir(name) / "manifest.txt", opt);
      if (!res.ok()) problems += " " + name + ": " + res.diagnostic();
      std::map<std::string, std::string> contents;
      for (const auto& f : res.artifacts) contents[f.filename().string()] = slurp(f);
      runs.push_back(std::move(contents));
      fs::remove_all(tmp);
    }
    files += runs[0].size();
    if (runs[0] != runs[1] || runs[0].empty()) {
      ++differing;
      problems += " " + name;
    }
  }
  Outcome o;
  o.pass = differing == 0 && problems.empty();
  o.detail = std::to_string(kShipped.size()) + " shipped programs run twice, " + std::to_string(files) +
             " artifacts compared byte for byte" + (problems.empty() ? "" : ", differing:" + problems);
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"content-semantics oracle", criterion1}, {"gradient suite", criterion2},
      {"DHN triangle rule", criterion3},        {"HGT attention toy", criterion4},
      {"end-to-end learning", criterion5},      {"parameter-sharing census", criterion6},
      {"driver program fixture", criterion7},   {"determinism", criterion8},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::cout << (o.pass ? "PASS" : "FAIL") << " " << id << " " << criteria[i].first << ": " << o.detail << std::endl;
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
