#include "relnn/cli/runner.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "relnn/cli/manifest.hpp"
#include "relnn/exec/executor.hpp"
#include "relnn/exec/oracle.hpp"
#include "relnn/frontend/parser.hpp"
#include "relnn/lowering/lowering.hpp"

namespace relnn::cli {

std::string RunResult::diagnostic() const { return ok() ? "" : stage + ": " + message; }

namespace {

struct StageError {
  std::string stage;
  std::string message;
  int code;
};

template <class F>
auto staged(const std::string& stage, int code, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError{stage, e.what(), code};
  }
}

std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

class Run {
 public:
  Run(const RunOptions& o, RunResult& r) : opt_(o), res_(r) {}

  void execute(const std::filesystem::path& program_path, const std::filesystem::path& manifest_path) {
    Manifest manifest = staged("load", kCompileError, [&] { return load_manifest(manifest_path); });
    const std::uint64_t seed = opt_.seed.value_or(manifest.seed);
    tensor::ParameterStore store(seed);
    if (manifest.params) {
      staged("load", kCompileError, [&] {
        std::istringstream in(read_text(*manifest.params));
        store = tensor::ParameterStore::load(in, seed);
      });
    }
    rel::Database db = staged("load", kCompileError, [&] { return load_database(manifest, store); });
    const std::string source = staged("load", kCompileError, [&] { return read_text(program_path); });

    frontend::Program parsed = staged("parse", kCompileError, [&] { return frontend::parse(source); });
    frontend::Program flat = staged("expand", kCompileError, [&] {
      auto p = frontend::inline_functions(frontend::expand_templates(parsed, lowering::expand_context(db)));
      frontend::check_range_restriction(p);
      return p;
    });
    lowering::LoweredProgram lp = staged("lower", kCompileError, [&] { return lowering::lower(flat, db, store); });

    std::vector<exec::PhysicalPlan> plans;
    staged("compile", kCompileError, [&] {
      for (const auto& a : lp.actions) plans.push_back(exec::compile_physical(lp.graph, a.node));
      if (opt_.dump_plan) {
        const nra::NodeId root = lp.node_of(*opt_.dump_plan);
        log() << lp.graph.dump(root) << exec::compile_physical(lp.graph, root).dump();
      }
    });
    if (opt_.dry_run) {
      log() << "compiled " << lp.actions.size() << " statement(s); dry run, nothing executed\n";
      return;
    }

    const std::filesystem::path out_dir = opt_.out.value_or(manifest.output);
    staged("load", kRuntimeError, [&] { std::filesystem::create_directories(out_dir); });
    exec::Executor ex(lp.graph, db);
    std::map<std::string, int> fits_per_relation;
    for (std::size_t i = 0; i < lp.actions.size(); ++i) {
      const auto& a = lp.actions[i];
      const auto& plan = plans[i];
      if (a.kind == lowering::Action::Kind::Fit) {
        staged("fit", kRuntimeError, [&] {
          auto config = exec::parse_fit_config(a.kwargs, lp.scalars);
          check_oracle(ex, lp, db, store, plan, a.relation);
          auto trace = ex.fit(plan, config, store);
          check_oracle(ex, lp, db, store, plan, a.relation);
          const int n = ++fits_per_relation[a.relation];
          auto path = out_dir / (a.relation + (n > 1 ? "." + std::to_string(n) : "") + ".loss");
          exec::write_loss_trace(trace, path);
          res_.artifacts.push_back(path);
          log() << "fit " << a.relation << ": " << trace.size() << " epochs";
          if (!trace.empty()) log() << ", loss " << rel::format_double(trace.front()) << " -> " << rel::format_double(trace.back());
          log() << "\n";
          res_.traces.emplace_back(a.relation, std::move(trace));
        });
      } else {
        staged("pred", kRuntimeError, [&] {
          auto r = ex.evaluate(plan, store);
          check_oracle(ex, lp, db, store, plan, a.relation, &r);
          auto path = out_dir / (a.relation + ".csv");
          exec::write_relation_csv(r, path);
          res_.artifacts.push_back(path);
          log() << "pred " << a.relation << ": " << r.size() << " rows, width " << r.dim() << "\n";
          res_.predictions.insert_or_assign(a.relation, std::move(r));
        });
      }
    }
  }

 private:
  const RunOptions& opt_;
  RunResult& res_;
  std::ostringstream sink_;

  std::ostream& log() { return opt_.log ? *opt_.log : sink_; }

  void check_oracle(exec::Executor& ex, const lowering::LoweredProgram& lp, const rel::Database& db,
                    tensor::ParameterStore& store, const exec::PhysicalPlan& plan, const std::string& relation,
                    const rel::EmbeddedRelation* computed = nullptr) {
    if (!opt_.oracle) return;
    rel::EmbeddedRelation mine = computed ? *computed : ex.evaluate(plan, store);
    rel::EmbeddedRelation ref = staged("oracle", kRuntimeError, [&] { return exec::naive_evaluate(lp.graph, plan.root, db, store); });
    ++res_.oracle_checks;
    if (auto d = exec::diff_relations(mine, ref, opt_.oracle_tol)) {
      throw StageError{"oracle", relation + ": " + *d, kOracleMismatch};
    }
  }
};

}  // namespace

RunResult run(const std::filesystem::path& program, const std::filesystem::path& manifest, const RunOptions& options) {
  RunResult res;
  try {
    Run(options, res).execute(program, manifest);
  } catch (const StageError& e) {
    res.exit_code = e.code;
    res.stage = e.stage;
    res.message = e.message;
  } catch (const std::exception& e) {
    res.exit_code = kRuntimeError;
    res.stage = "run";
    res.message = e.what();
  }
  return res;
}

}  // namespace relnn::cli
