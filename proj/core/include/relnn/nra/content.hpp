#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "relnn/relmodel/relation.hpp"

// Content-side kernels. They look only at tuples and emit index vectors; the
// embedding side replays those indices with gather/scatter.
namespace relnn::nra {

using rel::Tuple;
using rel::Value;
using rel::ValueTag;

class NraError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Attribute names plus canonically ordered, duplicate-free tuples.
struct Content {
  std::vector<std::string> attrs;
  std::vector<Tuple> rows;

  std::size_t size() const { return rows.size(); }
  std::optional<std::size_t> find_attr(const std::string& name) const;
  std::size_t attr_index(const std::string& name) const;
  bool operator==(const Content&) const = default;
};

using ContentPtr = std::shared_ptr<const Content>;

struct JoinResult {
  Content content;  // left attrs, then right-only attrs
  std::vector<std::size_t> left;
  std::vector<std::size_t> right;
};

// Natural join on shared attribute names (cross product when none).
JoinResult hash_join(const Content& left, const Content& right);

struct GroupResult {
  Content keys;                     // distinct projections, canonical order
  std::vector<std::size_t> group;   // one entry per input row, inputs concatenated in order
};

// Projects every input onto attrs and groups the concatenated rows.
GroupResult group_by(std::span<const Content* const> inputs, const std::vector<std::string>& attrs);

// Rows of left whose tuple is absent from right. Schemas must match.
std::vector<std::size_t> difference_rows(const Content& left, const Content& right);

// Subset of rows, in the given (ascending) order.
Content take_rows(const Content& c, std::span<const std::size_t> idx);

// Canonical order permutation: rows[perm[i]] is the i-th smallest.
std::vector<std::size_t> canonical_order(const std::vector<Tuple>& rows);

}  // namespace relnn::nra
