#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "relnn/relmodel/loader.hpp"

namespace relnn::cli {

class ManifestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RelationSpec {
  std::string name;
  std::filesystem::path path;
  std::vector<rel::ColumnDecl> columns;  // empty: every column is content
  std::optional<std::size_t> learnable;  // per-tuple embedding width
  std::map<std::string, rel::Vocabulary> vocabularies;
};

// Line-oriented key = value file:
//   seed = 42
//   output = out
//   params = weights.txt            initial parameter checkpoint
//   R.path = r.csv
//   R.columns = a, b, f1:feature, junk:skip
//   R.learnable = 16
//   R.vocab.col = red, green, blue
// '#' starts a comment line. Relative paths resolve against the manifest's
// directory; output resolves against the working directory.
struct Manifest {
  std::filesystem::path dir;
  std::uint64_t seed = 0;
  std::filesystem::path output = "out";
  std::optional<std::filesystem::path> params;
  std::vector<RelationSpec> relations;  // in order of first mention

  const RelationSpec* find(const std::string& name) const;
};

Manifest parse_manifest(const std::string& text, const std::filesystem::path& dir);
Manifest load_manifest(const std::filesystem::path& path);

// Reads every relation; learnable ones get per-tuple parameters in store
// seeded from store.seed().
rel::Database load_database(const Manifest& m, tensor::ParameterStore& store);

}  // namespace relnn::cli
