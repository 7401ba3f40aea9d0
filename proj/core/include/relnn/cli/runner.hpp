#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "relnn/relmodel/relation.hpp"

namespace relnn::cli {

enum ExitCode : int { kOk = 0, kCompileError = 2, kRuntimeError = 3, kOracleMismatch = 4 };

struct RunOptions {
  std::optional<std::uint64_t> seed;          // overrides the manifest seed
  std::optional<std::string> dump_plan;       // relation whose plans are printed
  std::optional<std::filesystem::path> out;   // overrides the manifest output
  bool dry_run = false;                       // stop after compiling; no writes
  bool oracle = false;                        // cross-check with the naive evaluator
  double oracle_tol = 1e-9;
  std::ostream* log = nullptr;                // plan dumps and per-statement lines
};

struct RunResult {
  int exit_code = kOk;
  // load | parse | expand | lower | compile | fit | pred | oracle
  std::string stage;
  std::string message;
  std::vector<std::filesystem::path> artifacts;
  std::vector<std::pair<std::string, std::vector<double>>> traces;
  std::map<std::string, rel::EmbeddedRelation> predictions;  // last pred per relation
  std::size_t oracle_checks = 0;

  bool ok() const { return exit_code == kOk; }
  // "<stage>: <message>" or empty
  std::string diagnostic() const;
};

// Loads the manifest and data, compiles the program and executes its
// statements in file order. Never throws for program or data errors.
RunResult run(const std::filesystem::path& program, const std::filesystem::path& manifest, const RunOptions& options);

}  // namespace relnn::cli
