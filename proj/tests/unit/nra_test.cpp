#include <gtest/gtest.h>

#include <map>
#include <random>
#include <set>

#include "gradcheck.hpp"
#include "relnn/nra/operators.hpp"
#include "relnn/tensor/ops.hpp"

namespace relnn::nra {
namespace {

using rel::EmbeddedRelation;
using tensor::Matrix;

Value s(const char* x) { return Value(std::string(x)); }
Value i64(std::int64_t x) { return Value(x); }

TensorRelation make(std::vector<std::string> attrs, std::vector<Tuple> rows, Matrix emb) {
  return from_relation(EmbeddedRelation::make(std::move(attrs), std::move(rows), std::move(emb)));
}

ArithTermPtr var(const char* v) { return ArithTerm::variable(v); }
ArithTermPtr lit(Value v) { return ArithTerm::constant(std::move(v)); }

TEST(Join, SpecExample) {
  auto r1 = make({"x", "y"}, {{s("a"), s("b")}, {s("a"), s("c")}}, Matrix::from_rows({{1, 2}, {3, 4}}));
  auto r2 = make({"y", "w"}, {{s("b"), s("d")}, {s("b"), s("e")}, {s("c"), s("d")}},
                 Matrix::from_rows({{5}, {6}, {7}}));
  auto out = join(r1, r2);
  EXPECT_EQ(out.content->attrs, (std::vector<std::string>{"x", "y", "w"}));
  std::vector<Tuple> rows{{s("a"), s("b"), s("d")}, {s("a"), s("b"), s("e")}, {s("a"), s("c"), s("d")}};
  EXPECT_EQ(out.content->rows, rows);
  EXPECT_EQ(out.emb.value(), Matrix::from_rows({{1, 2, 5}, {1, 2, 6}, {3, 4, 7}}));
}

TEST(Join, WithEmptyKeepsConcatenatedSchema) {
  auto r1 = make({"x", "y"}, {{s("a"), s("b")}}, Matrix::from_rows({{1, 2}}));
  auto r2 = from_relation(EmbeddedRelation({"y", "w"}, 3));
  auto out = join(r1, r2);
  EXPECT_EQ(out.size(), 0u);
  EXPECT_EQ(out.content->attrs, (std::vector<std::string>{"x", "y", "w"}));
  EXPECT_EQ(out.dim(), 5u);
}

TEST(Join, DisjointAttrsIsCrossProduct) {
  auto a = make({"x"}, {{i64(1)}, {i64(2)}}, Matrix(2, 0));
  auto b = make({"y"}, {{i64(3)}, {i64(4)}, {i64(5)}}, Matrix(3, 0));
  EXPECT_EQ(join(a, b).size(), 6u);
}

TEST(Join, IncompatibleTagsRejected) {
  auto a = make({"x"}, {{i64(1)}}, Matrix(1, 0));
  auto b = make({"x"}, {{s("1")}}, Matrix(1, 0));
  EXPECT_THROW(join(a, b), NraError);
}

TEST(ProjectedUnion, SpecSumExample) {
  auto r = make({"x", "y"}, {{s("a"), s("b")}, {s("a"), s("d")}, {s("b"), s("f")}},
                Matrix::from_rows({{1}, {2}, {3}}));
  auto out = projected_union(std::span(&r, 1), {"x"}, AggKind::Sum);
  EXPECT_EQ(out.content->rows, (std::vector<Tuple>{{s("a")}, {s("b")}}));
  EXPECT_EQ(out.emb.value(), Matrix::from_rows({{3}, {3}}));
}

TEST(ProjectedUnion, DisjointInputsPlainUnion) {
  for (auto agg : {AggKind::Sum, AggKind::Mean, AggKind::Max}) {
    std::vector<TensorRelation> in{make({"x"}, {{i64(1)}}, Matrix::from_rows({{1.5, -2}})),
                                   make({"x"}, {{i64(0)}}, Matrix::from_rows({{4, 5}}))};
    auto out = projected_union(in, {"x"}, agg);
    EXPECT_EQ(out.content->rows, (std::vector<Tuple>{{i64(0)}, {i64(1)}}));
    EXPECT_EQ(out.emb.value(), Matrix::from_rows({{4, 5}, {1.5, -2}}));
  }
}

TEST(ProjectedUnion, MeanIsOneShotOverMultiset) {
  // Group a: two rows from the first input, one from the second.
  std::vector<TensorRelation> in{
      make({"x", "y"}, {{s("a"), i64(1)}, {s("a"), i64(2)}}, Matrix::from_rows({{1}, {2}})),
      make({"x", "y"}, {{s("a"), i64(1)}}, Matrix::from_rows({{9}}))};
  auto out = projected_union(in, {"x"}, AggKind::Mean);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_DOUBLE_EQ(out.emb.value()(0, 0), 4.0);           // (1 + 2 + 9) / 3
  EXPECT_NE(out.emb.value()(0, 0), (1.5 + 9.0) / 2.0);  // two-stage mean
}

TEST(ProjectedUnion, Errors) {
  auto r = make({"x"}, {{i64(1)}}, Matrix(1, 1));
  EXPECT_THROW(projected_union(std::span(&r, 1), {"y"}, AggKind::Sum), NraError);
  std::vector<TensorRelation> in{r, make({"x"}, {{i64(2)}}, Matrix(1, 2))};
  EXPECT_THROW(projected_union(in, {"x"}, AggKind::Sum), NraError);
}

TEST(Transform, LinearSpecExample) {
  tensor::ParameterStore store;
  const ParamKey key{"L", {}};
  store.set(key, Matrix::from_rows({{1}, {1}, {0}}));
  tensor::Tape tape;
  tensor::ParameterBinding binding(store, tape);
  auto r = make({"x"}, {{i64(1)}, {i64(2)}}, Matrix::from_rows({{1, 2}, {3, 4}}));
  auto out = transform(r, *t_linear(key, 2, 1, t_slice(0, 2)), binding);
  EXPECT_EQ(out.emb.value(), Matrix::from_rows({{3}, {7}}));
  EXPECT_EQ(out.content, r.content);
}

TEST(Transform, IdentityUnchanged) {
  tensor::ParameterStore store;
  tensor::Tape tape;
  tensor::ParameterBinding binding(store, tape);
  auto r = make({"x"}, {{i64(1)}, {i64(2)}}, Matrix::from_rows({{1, 2}, {3, 4}}));
  auto out = transform(r, *t_slice(0, 2), binding);
  EXPECT_EQ(out.emb.value(), r.emb.value());
}

TEST(Transform, ReluLinearGradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(7);
  const std::size_t d = 3;
  const std::size_t h = 4;
  const ParamKey key{"W", {}};
  auto r = make({"x"}, {{i64(0)}, {i64(1)}, {i64(2)}, {i64(3)}, {i64(4)}}, testing::random_matrix(rng, 5, d));
  auto expr = t_unary(TOp::Relu, t_linear(key, d, h, t_slice(0, d)));
  const Matrix w0 = testing::random_matrix(rng, d + 1, h);

  auto loss_at = [&](const Matrix& w, Matrix* grad) {
    tensor::ParameterStore store;
    store.set(key, w);
    tensor::Tape tape;
    tensor::ParameterBinding binding(store, tape);
    auto out = transform(r, *expr, binding);
    Tensor loss = tensor::reduce(testing::project(out.emb, 3), tensor::ReduceKind::Sum);
    if (grad) *grad = tensor::backward(tape, loss, binding).at(key);
    return loss.value()(0, 0);
  };

  Matrix analytic;
  loss_at(w0, &analytic);
  const double eps = 1e-5;
  for (std::size_t i = 0; i < w0.size(); ++i) {
    Matrix up = w0, down = w0;
    up.data()[i] += eps;
    down.data()[i] -= eps;
    const double numeric = (loss_at(up, nullptr) - loss_at(down, nullptr)) / (2 * eps);
    EXPECT_NEAR(analytic.data()[i], numeric, 1e-4 * std::max(1.0, std::abs(numeric)));
  }
}

TEST(Transform, WidthMismatchRejected) {
  TermGraph g;
  auto leaf = g.leaf("R", {{"x"}, 2});
  EXPECT_THROW(g.transform(leaf, t_linear({"L", {}}, 3, 1, t_slice(0, 3))), TExprError);
}

TEST(Select, SpecExampleAndConjunction) {
  auto r = make({"x", "y", "z"},
                {{i64(1), i64(5), i64(5)}, {i64(2), i64(5), i64(6)}, {i64(3), i64(1), i64(1)}, {i64(4), i64(0), i64(0)}},
                Matrix::from_rows({{1}, {2}, {3}, {4}}));
  Predicate lt{CmpOp::Lt, var("x"), lit(i64(3))};
  Predicate eq{CmpOp::Eq, var("y"), var("z")};
  auto a = select(r, {lt});
  EXPECT_EQ(a.emb.value(), Matrix::from_rows({{1}, {2}}));
  auto both = select(r, {lt, eq});
  auto seq = select(select(r, {lt}), {eq});
  EXPECT_EQ(both.content->rows, seq.content->rows);
  EXPECT_EQ(both.emb.value(), seq.emb.value());
  EXPECT_EQ(select(r, {}).content->rows, r.content->rows);
}

TEST(Select, TypeMismatchRejected) {
  auto r = make({"x"}, {{i64(1)}}, Matrix(1, 0));
  EXPECT_THROW(select(r, {Predicate{CmpOp::Lt, var("x"), lit(s("a"))}}), NraError);
}

TEST(Difference, SelfAndEmpty) {
  auto r = make({"x"}, {{i64(1)}, {i64(2)}}, Matrix::from_rows({{1, 2}, {3, 4}}));
  EXPECT_EQ(difference(r, r).size(), 0u);
  auto e = from_relation(EmbeddedRelation({"x"}, 5));
  auto out = difference(r, e);
  EXPECT_EQ(out.content->rows, r.content->rows);
  EXPECT_EQ(out.emb.value(), r.emb.value());
}

TEST(Difference, ContentOnlyMembershipKeepsLeftEmbedding) {
  auto l = make({"x"}, {{i64(1)}, {i64(2)}}, Matrix::from_rows({{1}, {2}}));
  auto r = make({"x"}, {{i64(1)}}, Matrix::from_rows({{100}}));
  auto out = difference(l, r);
  EXPECT_EQ(out.content->rows, (std::vector<Tuple>{{i64(2)}}));
  EXPECT_EQ(out.emb.value(), Matrix::from_rows({{2}}));
}

TEST(Difference, SchemaMismatch) {
  auto l = make({"x"}, {{i64(1)}}, Matrix(1, 0));
  auto r = make({"y"}, {{i64(1)}}, Matrix(1, 0));
  EXPECT_THROW(difference(l, r), NraError);
}

TEST(Rename, AttrsOnly) {
  auto r = make({"x", "y"}, {{i64(1), i64(2)}}, Matrix::from_rows({{3}}));
  auto out = rename(r, {"a", "b"});
  EXPECT_EQ(out.content->attrs, (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(out.content->rows, r.content->rows);
  TermGraph g;
  auto leaf = g.leaf("R", {{"x", "y"}, 1});
  EXPECT_THROW(g.rename(leaf, {"a", "a"}), NraError);
}

TEST(Encode, SpecExamples) {
  auto ages = make({"age"}, {{i64(30)}, {i64(40)}}, Matrix(2, 0));
  EXPECT_EQ(encode(ages, {{"age", {}}}).emb.value(), Matrix::from_rows({{30}, {40}}));
  auto flags = make({"flag"}, {{Value(false)}, {Value(true)}}, Matrix(2, 0));
  EXPECT_EQ(encode(flags, {{"flag", {}}}).emb.value(), Matrix::from_rows({{0}, {1}}));
  auto colors = make({"color"}, {{s("green")}}, Matrix(1, 0));
  EXPECT_EQ(encode(colors, {{"color", {"red", "green", "blue"}}}).emb.value(),
            Matrix::from_rows({{0, 1, 0}}));
}

TEST(Encode, ConcatenatesAfterExistingEmbedding) {
  auto r = make({"a", "b"}, {{i64(1), Value(2.5)}}, Matrix::from_rows({{7}}));
  auto out = encode(r, {{"b", {}}, {"a", {}}});
  EXPECT_EQ(out.emb.value(), Matrix::from_rows({{7, 2.5, 1}}));
}

TEST(Encode, StringWithoutVocabularyRejected) {
  auto r = make({"c"}, {{s("red")}}, Matrix(1, 0));
  EXPECT_THROW(encode(r, {{"c", {}}}), NraError);
  EXPECT_THROW(encode(r, {{"c", {"blue"}}}), NraError);
}

TEST(Decode, AppendsFloatColumn) {
  auto r = make({"x"}, {{i64(1)}, {i64(2)}}, Matrix::from_rows({{0.25}, {-3}}));
  auto out = decode(r, 0, 1, {"c"});
  EXPECT_EQ(out.content->attrs, (std::vector<std::string>{"x", "c"}));
  EXPECT_EQ(out.content->rows, (std::vector<Tuple>{{i64(1), Value(0.25)}, {i64(2), Value(-3.0)}}));
  EXPECT_EQ(out.emb.value(), r.emb.value());
}

TEST(Decode, RoundTripWithEncode) {
  auto r = make({"x"}, {{i64(1)}, {i64(2)}}, Matrix::from_rows({{0.1, 9}, {0.7, 8}}));
  auto dec = decode(r, 0, 2, {"c_0", "c_1"});
  auto enc = encode(dec, {{"c_0", {}}, {"c_1", {}}});
  EXPECT_EQ(tensor::slice_cols(enc.emb, 2, 4).value(), r.emb.value());
}

TEST(Decode, EmptyAndOutOfRange) {
  auto e = from_relation(EmbeddedRelation({"x"}, 2));
  auto out = decode(e, 0, 2, {"c_0", "c_1"});
  EXPECT_EQ(out.size(), 0u);
  EXPECT_EQ(out.content->attrs.size(), 3u);
  TermGraph g;
  auto leaf = g.leaf("R", {{"x"}, 2});
  EXPECT_THROW(g.decode(leaf, 1, 3, {"a", "b"}), NraError);
}

TEST(GroupSoftmax, NormalizesOverFirstAttribute) {
  // Groups are keyed by t: each t's scores over s sum to one.
  auto r = make({"s", "t"},
                {{i64(0), i64(0)}, {i64(1), i64(0)}, {i64(2), i64(0)}, {i64(0), i64(1)}},
                Matrix::from_rows({{1}, {2}, {3}, {5}}));
  tensor::ParameterStore store;
  tensor::Tape tape;
  tensor::ParameterBinding binding(store, tape);
  auto out = transform(r, *t_group_softmax(t_slice(0, 1)), binding);
  // Canonical order: (0,0) (0,1) (1,0) (2,0).
  const Matrix& m = out.emb.value();
  EXPECT_NEAR(m(0, 0) + m(2, 0) + m(3, 0), 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(m(1, 0), 1.0);
  EXPECT_GT(m(3, 0), m(2, 0));
}

TEST(TermGraph, LeavesMemoizedAndPlanClosed) {
  TermGraph g;
  auto a = g.leaf("A", {{"x"}, 1});
  EXPECT_EQ(g.leaf("A", {{"x"}, 1}), a);
  EXPECT_THROW(g.leaf("A", {{"x"}, 2}), NraError);
  auto b = g.leaf("B", {{"x", "y"}, 1});
  auto j = g.join(a, b);
  EXPECT_EQ(g.node(j).schema, (NodeSchema{{"x", "y"}, 2}));
  auto t = g.transform(j, t_slice(0, 1));
  auto u1 = g.projected_union({t}, {"x"}, AggKind::Sum);
  auto u2 = g.projected_union({t}, {"y"}, AggKind::Max);
  auto top = g.join(u1, u2);
  // The shared intermediate appears once.
  EXPECT_EQ(g.extract_plan(top), (std::vector<NodeId>{a, b, j, t, u1, u2, top}));
  EXPECT_EQ(g.extract_plan(a), std::vector<NodeId>{a});
  EXPECT_EQ(g.dump(top), g.dump(top));
}

// The attribute-only relational algebra on random instances, against
// straightforward set-based definitions.
TEST(Property, ContentMatchesSetOracle) {
  std::mt19937_64 rng(11);
  auto random_rel = [&](std::vector<std::string> attrs) {
    std::uniform_int_distribution<int> n(0, 8), v(0, 3);
    std::set<Tuple> rows;
    const int count = n(rng);
    for (int i = 0; i < count; ++i) {
      Tuple t;
      for (std::size_t k = 0; k < attrs.size(); ++k) t.push_back(i64(v(rng)));
      rows.insert(t);
    }
    std::vector<Tuple> rv(rows.begin(), rows.end());
    return make(std::move(attrs), rv, Matrix(rv.size(), 0));
  };
  for (int trial = 0; trial < 200; ++trial) {
    auto a = random_rel({"x", "y"});
    auto b = random_rel({"y", "z"});
    std::set<Tuple> expect;
    for (const auto& l : a.content->rows)
      for (const auto& r : b.content->rows)
        if (l[1] == r[0]) expect.insert({l[0], l[1], r[1]});
    auto j = join(a, b);
    EXPECT_EQ(std::set<Tuple>(j.content->rows.begin(), j.content->rows.end()), expect);
    EXPECT_TRUE(std::is_sorted(j.content->rows.begin(), j.content->rows.end()));

    auto c = random_rel({"x", "y"});
    std::set<Tuple> diff;
    for (const auto& t : a.content->rows)
      if (!std::count(c.content->rows.begin(), c.content->rows.end(), t)) diff.insert(t);
    auto d = difference(a, c);
    EXPECT_EQ(std::set<Tuple>(d.content->rows.begin(), d.content->rows.end()), diff);
  }
}

}  // namespace
}  // namespace relnn::nra
