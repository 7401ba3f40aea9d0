#include <benchmark/benchmark.h>

#include <random>

#include "fixtures.hpp"
#include "relnn/frontend/parser.hpp"

namespace {

using namespace relnn;
using tensor::Matrix;

rel::Database pair_db(std::size_t n, std::size_t d) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<std::int64_t> key(0, static_cast<std::int64_t>(n / 4));
  std::vector<rel::Tuple> a, b;
  for (std::size_t i = 0; i < n; ++i) {
    a.push_back({std::int64_t(i), key(rng)});
    b.push_back({key(rng), std::int64_t(i)});
  }
  rel::Database db;
  db.add("A", rel::EmbeddedRelation::make({"x", "k"}, a, Matrix(n, d, 0.5)));
  db.add("B", rel::EmbeddedRelation::make({"k", "y"}, b, Matrix(n, d, 0.25)));
  return db;
}

void BM_Join(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  auto db = pair_db(n, 8);
  nra::TermGraph g;
  auto a = g.leaf("A", {{"x", "k"}, 8});
  auto b = g.leaf("B", {{"k", "y"}, 8});
  auto root = g.join(a, b);
  auto plan = exec::compile_physical(g, root);
  exec::Executor ex(g, db);
  tensor::ParameterStore store;
  std::size_t rows = 0;
  for (auto _ : state) {
    auto r = ex.evaluate(plan, store);
    rows = r.size();
    benchmark::DoNotOptimize(rows);
  }
  state.counters["out_rows"] = static_cast<double>(rows);
}
BENCHMARK(BM_Join)->Arg(256)->Arg(1024)->Arg(4096);

void BM_ProjectedUnion(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  auto db = pair_db(n, 8);
  nra::TermGraph g;
  auto a = g.leaf("A", {{"x", "k"}, 8});
  auto root = g.projected_union({a}, {"k"}, nra::AggKind::Sum);
  auto plan = exec::compile_physical(g, root);
  exec::Executor ex(g, db);
  tensor::ParameterStore store;
  for (auto _ : state) benchmark::DoNotOptimize(ex.evaluate(plan, store).size());
}
BENCHMARK(BM_ProjectedUnion)->Arg(1024)->Arg(16384);

void BM_DriverFitEpoch(benchmark::State& state) {
  tensor::ParameterStore store(42);
  auto db = relnn::testing::driver_db(store, 20, 10, 16, 4);
  auto c = relnn::testing::compile(relnn::testing::read_file("programs/driver/driver.relnn"), db, store);
  exec::Executor ex(c.program.graph, db);
  exec::FitConfig cfg;
  cfg.epochs = 1;
  auto plan = c.plan("Loss");
  for (auto _ : state) ex.fit(plan, cfg, store);
}
BENCHMARK(BM_DriverFitEpoch);

void BM_ParseDriver(benchmark::State& state) {
  const auto src = relnn::testing::read_file("programs/driver/driver.relnn");
  for (auto _ : state) benchmark::DoNotOptimize(frontend::parse(src).size());
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * src.size()));
}
BENCHMARK(BM_ParseDriver);

}  // namespace

BENCHMARK_MAIN();
