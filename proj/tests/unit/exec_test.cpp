#include <gtest/gtest.h>

#include <cmath>

#include "fixtures.hpp"
#include "relnn/cli/manifest.hpp"
#include "relnn/frontend/parser.hpp"
#include "relnn/tensor/ops.hpp"

namespace relnn::exec {
namespace {

using relnn::testing::compile;
using relnn::testing::driver_db;
using relnn::testing::read_file;
using tensor::Matrix;
using tensor::ParamKey;

struct Loaded {
  tensor::ParameterStore store;
  rel::Database db;
  relnn::testing::Compiled c;
};

Loaded load_program(const std::string& name, std::uint64_t seed = 42) {
  const std::string dir = std::string(RELNN_SOURCE_DIR) + "/programs/" + name;
  auto m = cli::load_manifest(dir + "/manifest.txt");
  Loaded l{tensor::ParameterStore(seed), {}, {}};
  if (m.params) {
    std::ifstream in(*m.params);
    l.store = tensor::ParameterStore::load(in, seed);
  }
  l.db = cli::load_database(m, l.store);
  l.c = compile(read_file("programs/" + name + "/" + name + ".relnn"), l.db, l.store);
  return l;
}

FitConfig config_of(const Loaded& l, std::size_t action) {
  return parse_fit_config(l.c.program.actions.at(action).kwargs, l.c.program.scalars);
}

TEST(Evaluate, LeafIsTheRelationItself) {
  tensor::ParameterStore store;
  rel::Database db;
  db.add("A", rel::EmbeddedRelation::make({"x"}, {{std::int64_t{2}}, {std::int64_t{1}}}, Matrix::from_rows({{5}, {4}})));
  auto c = compile("B(x; z) :- A(x; z) .", db, store);
  Executor ex(c.program.graph, db);
  auto a = ex.evaluate(compile_physical(c.program.graph, c.program.node_of("A")), store);
  EXPECT_EQ(a.rows(), db.at("A").rows());
  EXPECT_EQ(a.emb(), db.at("A").emb());
}

TEST(Evaluate, DriverProfileMatchesOracle) {
  tensor::ParameterStore store(9);
  auto db = driver_db(store, 3, 2);
  auto c = compile(read_file("programs/driver/driver.relnn"), db, store);
  Executor ex(c.program.graph, db);
  for (const char* rel : {"Profile", "Loss", "DriverProfile_1_Inter"}) {
    auto plan = c.plan(rel);
    auto got = ex.evaluate(plan, store);
    auto want = naive_evaluate(c.program.graph, plan.root, db, store);
    EXPECT_EQ(diff_relations(got, want, 1e-9), std::nullopt) << rel;
  }
  EXPECT_EQ(ex.evaluate(c.plan("Profile"), store).size(), 3u);
}

TEST(Evaluate, PureAcrossCalls) {
  auto l = load_program("driver");
  Executor ex(l.c.program.graph, l.db);
  auto plan = l.c.plan("Profile");
  auto a = ex.evaluate(plan, l.store);
  auto b = ex.evaluate(plan, l.store);
  EXPECT_EQ(relation_csv(a), relation_csv(b));
}

TEST(Evaluate, SelectUnderJoinMatchesOracle) {
  rel::Database db;
  db.add("E", rel::EmbeddedRelation::make({"a", "b"},
                                          {{std::int64_t{1}, std::int64_t{2}},
                                           {std::int64_t{2}, std::int64_t{3}},
                                           {std::int64_t{3}, std::int64_t{1}},
                                           {std::int64_t{3}, std::int64_t{4}}},
                                          Matrix::from_rows({{1, 0}, {0, 1}, {1, 1}, {2, -1}})));
  tensor::ParameterStore store(4);
  auto c = compile("P(a, c; Linear(4, 3)(Concat(z1, z2))) :- E(a, b; z1), E(b, c; z2), a < c, c != 4 .", db, store);
  Executor ex(c.program.graph, db);
  auto plan = c.plan("P");
  auto got = ex.evaluate(plan, store);
  EXPECT_EQ(got.size(), 1u);  // only 1 -> 2 -> 3 survives
  EXPECT_EQ(diff_relations(got, naive_evaluate(c.program.graph, plan.root, db, store), 1e-9), std::nullopt);
}

TEST(Evaluate, MissingRelationReportsNode) {
  tensor::ParameterStore store;
  rel::Database db;
  db.add("A", rel::EmbeddedRelation::make({"x"}, {{std::int64_t{1}}}, Matrix::from_rows({{1}})));
  auto c = compile("B(x; z) :- A(x; z) .", db, store);
  rel::Database other;
  Executor ex(c.program.graph, other);
  try {
    ex.evaluate(c.plan("B"), store);
    FAIL();
  } catch (const ExecError& e) {
    EXPECT_NE(std::string(e.what()).find("node n"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("missing relation A"), std::string::npos);
  }
}

TEST(Fit, QuadraticConverges) {
  auto l = load_program("quadratic");
  Executor ex(l.c.program.graph, l.db);
  auto cfg = config_of(l, 0);
  EXPECT_EQ(cfg.epochs, 200);
  EXPECT_EQ(cfg.optimizer, tensor::OptimizerKind::Adam);
  auto trace = ex.fit(l.c.plan("Loss"), cfg, l.store);
  ASSERT_EQ(trace.size(), 200u);
  EXPECT_LT(std::abs(l.store.value(ParamKey{"P", {}})(0, 0) - 3.0), 1e-2);
}

TEST(Fit, ZeroEpochsLeavesStoreUnchanged) {
  auto l = load_program("driver");
  Executor ex(l.c.program.graph, l.db);
  std::ostringstream before, after;
  l.store.save(before);
  FitConfig cfg;
  cfg.epochs = 0;
  EXPECT_TRUE(ex.fit(l.c.plan("Loss"), cfg, l.store).empty());
  l.store.save(after);
  EXPECT_EQ(before.str(), after.str());
}

TEST(Fit, SeparableClassifier) {
  auto l = load_program("classifier");
  Executor ex(l.c.program.graph, l.db);
  auto cfg = config_of(l, 0);
  EXPECT_EQ(cfg.epochs, 300);
  EXPECT_DOUBLE_EQ(cfg.lr, 0.05);
  auto trace = ex.fit(l.c.plan("Loss"), cfg, l.store);
  // trace holds the loss before each update; check the final parameters too
  auto final_loss = ex.evaluate(l.c.plan("Loss"), l.store).emb()(0, 0);
  EXPECT_LT(final_loss, 0.1);
  EXPECT_LT(trace.back(), 0.1);
}

// For a quadratic with curvature 2, sgd is monotone for lr < 1.
TEST(Fit, SgdDescentIsMonotoneOnConvexFixtures) {
  for (double lr : {0.05, 0.3, 0.9}) {
    auto l = load_program("quadratic");
    Executor ex(l.c.program.graph, l.db);
    FitConfig cfg;
    cfg.epochs = 60;
    cfg.lr = lr;
    cfg.optimizer = tensor::OptimizerKind::Sgd;
    auto trace = ex.fit(l.c.plan("Loss"), cfg, l.store);
    for (std::size_t i = 1; i < trace.size(); ++i) EXPECT_LE(trace[i], trace[i - 1] + 1e-15) << lr << " " << i;
  }
  auto l = load_program("classifier");
  Executor ex(l.c.program.graph, l.db);
  FitConfig cfg;
  cfg.epochs = 100;
  cfg.lr = 0.1;
  cfg.optimizer = tensor::OptimizerKind::Sgd;
  auto trace = ex.fit(l.c.plan("Loss"), cfg, l.store);
  for (std::size_t i = 1; i < trace.size(); ++i) EXPECT_LE(trace[i], trace[i - 1] + 1e-15) << i;
}

TEST(Fit, SuccessiveFitsResumeFromCurrentParameters) {
  auto a = load_program("quadratic");
  auto b = load_program("quadratic");
  FitConfig cfg;
  cfg.optimizer = tensor::OptimizerKind::Sgd;
  cfg.lr = 0.1;
  cfg.epochs = 20;
  Executor ea(a.c.program.graph, a.db), eb(b.c.program.graph, b.db);
  ea.fit(a.c.plan("Loss"), cfg, a.store);
  ea.fit(a.c.plan("Loss"), cfg, a.store);
  cfg.epochs = 40;
  eb.fit(b.c.plan("Loss"), cfg, b.store);
  EXPECT_DOUBLE_EQ(a.store.value(ParamKey{"P", {}})(0, 0), b.store.value(ParamKey{"P", {}})(0, 0));
}

TEST(Fit, Errors) {
  auto l = load_program("driver");
  Executor ex(l.c.program.graph, l.db);
  FitConfig cfg;
  cfg.epochs = 1;
  EXPECT_THROW(ex.fit(l.c.plan("Profile"), cfg, l.store), ExecError);

  rel::Database db;
  db.add("A", rel::EmbeddedRelation::make({"x"}, {{std::int64_t{1}}}, Matrix::from_rows({{1}})));
  tensor::ParameterStore store;
  auto c = compile("W = Linear(1, 1).\nL(; W(z)) :- A(x; z), x > 5 .\nC(; z) :- A(x; z) .", db, store);
  Executor e2(c.program.graph, db);
  try {
    e2.fit(c.plan("L"), cfg, store);
    FAIL();
  } catch (const ExecError& e) {
    EXPECT_NE(std::string(e.what()).find("empty loss"), std::string::npos);
  }
  EXPECT_THROW(e2.fit(c.plan("C"), cfg, store), ExecError);
}

frontend::Expr kw(const std::string& src) {
  auto p = frontend::parse("?fit <" + src + "> L .");
  return std::get<frontend::FitStmt>(p[0].node).kwargs[0].second;
}

TEST(FitConfigParse, DefaultsAndValidation) {
  FitConfig d = parse_fit_config({}, {});
  EXPECT_EQ(d.epochs, 100);
  EXPECT_DOUBLE_EQ(d.lr, 0.01);
  EXPECT_DOUBLE_EQ(d.weight_decay, 0.0);
  frontend::ScalarEnv env{{"n", frontend::parse_number("7")}};
  auto c = parse_fit_config({{"epochs", kw("epochs=n*2")}, {"optimizer", kw("optimizer=sgd")}}, env);
  EXPECT_EQ(c.epochs, 14);
  EXPECT_EQ(c.optimizer, tensor::OptimizerKind::Sgd);
  EXPECT_THROW(parse_fit_config({{"momentum", kw("momentum=1")}}, {}), ExecError);
  EXPECT_THROW(parse_fit_config({{"lr", kw("lr=0")}}, {}), ExecError);
  EXPECT_THROW(parse_fit_config({{"epochs", kw("epochs=1.5")}}, {}), std::runtime_error);
  EXPECT_THROW(parse_fit_config({{"optimizer", kw("optimizer=lbfgs")}}, {}), ExecError);
}

TEST(Gradient, ReachesEveryDriverParameter) {
  tensor::ParameterStore store(21);
  auto db = driver_db(store, 4, 3);
  auto c = compile(read_file("programs/driver/driver.relnn"), db, store);
  Executor ex(c.program.graph, db);
  tensor::Tape tape;
  tensor::ParameterBinding binding(store, tape);
  auto loss = ex.run(c.plan("Loss"), binding);
  auto grads = tensor::backward(tape, loss.emb, binding);
  for (const auto& key : store.keys()) {
    ASSERT_TRUE(grads.contains(key)) << key.str();
    double norm = 0;
    for (std::size_t i = 0; i < grads.at(key).size(); ++i) norm += std::abs(grads.at(key).data()[i]);
    EXPECT_GT(norm, 0.0) << key.str();
  }
}

TEST(Predict, ZeroWidthRelationExportsContentOnly) {
  rel::Database db;
  db.add("E", rel::EmbeddedRelation::make({"a", "b"}, {{std::int64_t{1}, rel::Value(std::string("p"))}}, Matrix(1, 0)));
  tensor::ParameterStore store;
  auto c = compile("F(b, a) :- E(a, b) .", db, store);
  auto r = Executor(c.program.graph, db).evaluate(c.plan("F"), store);
  EXPECT_EQ(relation_csv(r), "b,a\np,1\n");
}

TEST(Predict, CsvHeaderAndPrecision) {
  rel::Database db;
  db.add("A", rel::EmbeddedRelation::make({"x"}, {{std::int64_t{1}}}, Matrix::from_rows({{0.1, 1.0 / 3.0}})));
  EXPECT_EQ(relation_csv(db.at("A")), "x,emb_0,emb_1\n1,0.10000000000000001,0.33333333333333331\n");
}

TEST(Properties, PermutingParametersKeepsContent) {
  auto a = load_program("gated_history", 1);
  auto b = load_program("gated_history", 2);
  Executor ea(a.c.program.graph, a.db), eb(b.c.program.graph, b.db);
  for (const char* rel : {"Score", "ResultGate", "History"}) {
    auto x = ea.evaluate(a.c.plan(rel), a.store);
    auto y = eb.evaluate(b.c.plan(rel), b.store);
    EXPECT_EQ(x.rows(), y.rows()) << rel;
    EXPECT_NE(x.emb(), y.emb()) << rel;
  }
}

TEST(Properties, ShippedProgramsMatchOracle) {
  for (const char* name : {"driver", "quadratic", "classifier", "gcn_sbm", "dhn_c3", "hgt_toy", "gated_history"}) {
    auto l = load_program(name);
    Executor ex(l.c.program.graph, l.db);
    for (const auto& [rel, node] : l.c.program.relations) {
      auto plan = compile_physical(l.c.program.graph, node);
      auto got = ex.evaluate(plan, l.store);
      EXPECT_EQ(diff_relations(got, naive_evaluate(l.c.program.graph, node, l.db, l.store), 1e-9), std::nullopt)
          << name << " " << rel;
    }
  }
}

}  // namespace
}  // namespace relnn::exec
