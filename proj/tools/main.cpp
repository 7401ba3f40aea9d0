#include <CLI11.hpp>

#include <iostream>

#include "relnn/cli/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"relnn: compile and run a neuro-relational program over CSV relations"};
  std::string program;
  std::string manifest;
  relnn::cli::RunOptions opt;
  std::uint64_t seed = 0;
  std::string dump_plan;
  std::string out;
  app.add_option("program", program, "program file")->required()->check(CLI::ExistingFile);
  app.add_option("manifest", manifest, "manifest file")->required()->check(CLI::ExistingFile);
  auto* seed_opt = app.add_option("--seed", seed, "parameter initialization seed (overrides the manifest)");
  auto* dump_opt = app.add_option("--dump-plan", dump_plan, "print the logical and physical plan of a relation");
  auto* out_opt = app.add_option("--out", out, "output directory (overrides the manifest)");
  app.add_flag("--dry-run", opt.dry_run, "compile only; write nothing");
  app.add_flag("--oracle", opt.oracle, "check every fit/pred result against the naive evaluator");
  CLI11_PARSE(app, argc, argv);

  if (*seed_opt) opt.seed = seed;
  if (*dump_opt) opt.dump_plan = dump_plan;
  if (*out_opt) opt.out = out;
  opt.log = &std::cout;

  auto res = relnn::cli::run(program, manifest, opt);
  if (!res.ok()) {
    std::cerr << "relnn: " << res.diagnostic() << "\n";
    return res.exit_code;
  }
  if (opt.oracle) std::cout << "oracle: " << res.oracle_checks << " check(s), no difference\n";
  return 0;
}
