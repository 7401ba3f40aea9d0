#pragma once

#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "relnn/exec/executor.hpp"
#include "relnn/exec/oracle.hpp"
#include "relnn/lowering/lowering.hpp"
#include "relnn/relmodel/loader.hpp"

namespace relnn::testing {

inline std::string read_file(const std::string& rel_path) {
  std::ifstream in(std::string(RELNN_SOURCE_DIR) + "/" + rel_path);
  if (!in) throw std::runtime_error("missing " + rel_path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline rel::Value str(const std::string& s) { return rel::Value(s); }

// Learnable unary/binary relations plus a one-hot Label, all small.
inline rel::Database driver_db(tensor::ParameterStore& store, std::size_t drivers = 3, std::size_t races = 2,
                               std::size_t d = 16, std::size_t k = 4) {
  rel::Database db;
  std::vector<rel::Tuple> dr, ra, re, lab;
  for (std::size_t i = 0; i < drivers; ++i) dr.push_back({str("d" + std::to_string(i))});
  for (std::size_t j = 0; j < races; ++j) ra.push_back({str("r" + std::to_string(j))});
  for (std::size_t i = 0; i < drivers; ++i)
    for (std::size_t j = 0; j < races; ++j)
      if ((i + j) % 3 != 2) re.push_back({dr[i][0], ra[j][0]});
  tensor::Matrix label(drivers, k);
  for (std::size_t i = 0; i < drivers; ++i) label(i, i % k) = 1.0;
  auto plain = [](std::vector<std::string> attrs, std::vector<rel::Tuple> rows) {
    return rel::EmbeddedRelation::make(std::move(attrs), rows, tensor::Matrix(rows.size(), 0));
  };
  db.add("Drivers", rel::attach_learnable_embeddings(plain({"x"}, dr), "Drivers", d, store, store.seed()), true);
  db.add("Races", rel::attach_learnable_embeddings(plain({"y"}, ra), "Races", d, store, store.seed()), true);
  db.add("Results", rel::attach_learnable_embeddings(plain({"x", "y"}, re), "Results", d, store, store.seed()), true);
  db.add("Label", rel::EmbeddedRelation::make({"x"}, dr, label));
  return db;
}

struct Compiled {
  lowering::LoweredProgram program;
  exec::PhysicalPlan plan(const std::string& relation) const {
    return exec::compile_physical(program.graph, program.node_of(relation));
  }
};

inline Compiled compile(const std::string& source, const rel::Database& db, tensor::ParameterStore& store) {
  return {lowering::lower(lowering::flatten(source, db), db, store)};
}

}  // namespace relnn::testing
