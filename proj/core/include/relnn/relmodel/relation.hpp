#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "relnn/tensor/matrix.hpp"

namespace relnn::rel {

using tensor::Matrix;

class RelationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Variant order doubles as the canonical tag rank: int < float < bool < string.
using Value = std::variant<std::int64_t, double, bool, std::string>;
using Tuple = std::vector<Value>;

enum class ValueTag { Int = 0, Float = 1, Bool = 2, String = 3 };

inline ValueTag tag_of(const Value& v) { return static_cast<ValueTag>(v.index()); }
const char* to_string(ValueTag tag);

// CSV form: integers plainly, floats with 17 significant digits, bools as
// true/false, strings verbatim.
std::string format_value(const Value& v);
std::string format_double(double x);

// Parses one CSV cell: int64, then double, then true/false, else string.
Value parse_value(const std::string& text);

bool is_numeric(const Value& v);
double as_double(const Value& v);

// A set of content tuples row-aligned with an n x d embedding. Rows are kept
// in canonical (lexicographic) order, so construction sorts and permutes.
class EmbeddedRelation {
 public:
  EmbeddedRelation() = default;
  // Empty relation over attrs with width d.
  EmbeddedRelation(std::vector<std::string> attrs, std::size_t d);

  // Sorts rows canonically, permutes emb identically, rejects duplicates,
  // mixed-tag columns, arity mismatches and repeated attribute names.
  static EmbeddedRelation make(std::vector<std::string> attrs, std::vector<Tuple> rows,
                               Matrix emb);
  // Same as make but the caller guarantees canonical order and uniqueness.
  static EmbeddedRelation from_sorted(std::vector<std::string> attrs, std::vector<Tuple> rows,
                                      Matrix emb);

  const std::vector<std::string>& attrs() const { return attrs_; }
  const std::vector<Tuple>& rows() const { return rows_; }
  const Matrix& emb() const { return emb_; }
  std::size_t arity() const { return attrs_.size(); }
  std::size_t dim() const { return emb_.cols(); }
  std::size_t size() const { return rows_.size(); }
  bool empty() const { return rows_.empty(); }

  std::optional<std::size_t> find_attr(const std::string& name) const;
  std::size_t attr_index(const std::string& name) const;
  // Tag of a column, or nullopt for an empty relation.
  std::optional<ValueTag> column_tag(std::size_t col) const;
  // Row index of a content tuple, if present.
  std::optional<std::size_t> find_row(const Tuple& t) const;

  void set_emb(Matrix emb);

 private:
  std::vector<std::string> attrs_;
  std::vector<Tuple> rows_;
  Matrix emb_;
};

struct RelationSchema {
  std::vector<std::string> attrs;
  std::size_t dim = 0;
  bool operator==(const RelationSchema&) const = default;
};

class Schema {
 public:
  void add(const std::string& name, RelationSchema entry);
  bool contains(const std::string& name) const { return entries_.contains(name); }
  const RelationSchema& at(const std::string& name) const;
  const std::map<std::string, RelationSchema>& entries() const { return entries_; }

 private:
  std::map<std::string, RelationSchema> entries_;
};

using Vocabulary = std::vector<std::string>;

class Database {
 public:
  // learnable marks relations whose embedding rows are parameters keyed
  // (name, row index) rather than constants.
  void add(const std::string& name, EmbeddedRelation rel, bool learnable = false);
  bool contains(const std::string& name) const { return relations_.contains(name); }
  const EmbeddedRelation& at(const std::string& name) const;
  const Schema& schema() const { return schema_; }
  bool learnable(const std::string& name) const { return learnable_.contains(name); }
  const std::map<std::string, EmbeddedRelation>& relations() const { return relations_; }

  void set_vocabulary(const std::string& relation, const std::string& column, Vocabulary v);
  const Vocabulary* vocabulary(const std::string& relation, const std::string& column) const;

 private:
  Schema schema_;
  std::map<std::string, EmbeddedRelation> relations_;
  std::set<std::string> learnable_;
  std::map<std::pair<std::string, std::string>, Vocabulary> vocabularies_;
};

}  // namespace relnn::rel
