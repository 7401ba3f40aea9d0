#include "relnn/relmodel/relation.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <numeric>

namespace relnn::rel {

const char* to_string(ValueTag tag) {
  switch (tag) {
    case ValueTag::Int: return "int";
    case ValueTag::Float: return "float";
    case ValueTag::Bool: return "bool";
    case ValueTag::String: return "string";
  }
  return "?";
}

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string format_value(const Value& v) {
  switch (tag_of(v)) {
    case ValueTag::Int: return std::to_string(std::get<std::int64_t>(v));
    case ValueTag::Float: return format_double(std::get<double>(v));
    case ValueTag::Bool: return std::get<bool>(v) ? "true" : "false";
    case ValueTag::String: return std::get<std::string>(v);
  }
  return {};
}

Value parse_value(const std::string& text) {
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (!text.empty()) {
    std::int64_t i = 0;
    auto [p, ec] = std::from_chars(first, last, i);
    if (ec == std::errc() && p == last) return i;
    const char c = text.front();
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+' || c == '.') {
      double d = 0.0;
      const char* start = c == '+' ? first + 1 : first;
      auto [q, ec2] = std::from_chars(start, last, d);
      if (ec2 == std::errc() && q == last) return d;
    }
  }
  if (text == "true") return true;
  if (text == "false") return false;
  return text;
}

bool is_numeric(const Value& v) {
  return tag_of(v) == ValueTag::Int || tag_of(v) == ValueTag::Float || tag_of(v) == ValueTag::Bool;
}

double as_double(const Value& v) {
  switch (tag_of(v)) {
    case ValueTag::Int: return static_cast<double>(std::get<std::int64_t>(v));
    case ValueTag::Float: return std::get<double>(v);
    case ValueTag::Bool: return std::get<bool>(v) ? 1.0 : 0.0;
    case ValueTag::String: break;
  }
  throw RelationError("value '" + std::get<std::string>(v) + "' is not numeric");
}

EmbeddedRelation::EmbeddedRelation(std::vector<std::string> attrs, std::size_t d)
    : attrs_(std::move(attrs)), emb_(0, d) {}

namespace {

void check_attrs(const std::vector<std::string>& attrs) {
  std::vector<std::string> sorted = attrs;
  std::sort(sorted.begin(), sorted.end());
  auto dup = std::adjacent_find(sorted.begin(), sorted.end());
  if (dup != sorted.end()) throw RelationError("repeated attribute name '" + *dup + "'");
}

void check_rows(const std::vector<std::string>& attrs, const std::vector<Tuple>& rows,
                const Matrix& emb) {
  if (emb.rows() != rows.size()) {
    throw RelationError("embedding has " + std::to_string(emb.rows()) + " rows for " +
                        std::to_string(rows.size()) + " tuples");
  }
  if (attrs.empty() && rows.size() > 1) {
    throw RelationError("a relation with no attributes holds at most one row");
  }
  for (const auto& r : rows) {
    if (r.size() != attrs.size()) {
      throw RelationError("tuple of arity " + std::to_string(r.size()) + " in relation of arity " +
                          std::to_string(attrs.size()));
    }
  }
  if (rows.empty()) return;
  for (std::size_t c = 0; c < attrs.size(); ++c) {
    const ValueTag t = tag_of(rows.front()[c]);
    for (const auto& r : rows) {
      if (tag_of(r[c]) != t) {
        throw RelationError("column '" + attrs[c] + "' mixes " + to_string(t) + " and " +
                            to_string(tag_of(r[c])) + " values");
      }
    }
  }
}

}  // namespace

EmbeddedRelation EmbeddedRelation::make(std::vector<std::string> attrs, std::vector<Tuple> rows,
                                        Matrix emb) {
  check_attrs(attrs);
  check_rows(attrs, rows, emb);
  std::vector<std::size_t> order(rows.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return rows[a] < rows[b]; });
  for (std::size_t i = 1; i < order.size(); ++i) {
    if (rows[order[i - 1]] == rows[order[i]]) {
      std::string shown;
      for (const auto& v : rows[order[i]]) shown += (shown.empty() ? "" : ",") + format_value(v);
      throw RelationError("duplicate content tuple (" + shown + ")");
    }
  }
  std::vector<Tuple> sorted;
  sorted.reserve(rows.size());
  Matrix permuted(emb.rows(), emb.cols());
  for (std::size_t i = 0; i < order.size(); ++i) {
    sorted.push_back(std::move(rows[order[i]]));
    for (std::size_t j = 0; j < emb.cols(); ++j) permuted(i, j) = emb(order[i], j);
  }
  return from_sorted(std::move(attrs), std::move(sorted), std::move(permuted));
}

EmbeddedRelation EmbeddedRelation::from_sorted(std::vector<std::string> attrs,
                                               std::vector<Tuple> rows, Matrix emb) {
  EmbeddedRelation r;
  r.attrs_ = std::move(attrs);
  r.rows_ = std::move(rows);
  r.emb_ = std::move(emb);
  if (r.emb_.rows() != r.rows_.size()) {
    throw RelationError("embedding row count does not match tuple count");
  }
  return r;
}

std::optional<std::size_t> EmbeddedRelation::find_attr(const std::string& name) const {
  auto it = std::find(attrs_.begin(), attrs_.end(), name);
  if (it == attrs_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - attrs_.begin());
}

std::size_t EmbeddedRelation::attr_index(const std::string& name) const {
  auto i = find_attr(name);
  if (!i) throw RelationError("no attribute '" + name + "'");
  return *i;
}

std::optional<ValueTag> EmbeddedRelation::column_tag(std::size_t col) const {
  if (rows_.empty()) return std::nullopt;
  return tag_of(rows_.front().at(col));
}

std::optional<std::size_t> EmbeddedRelation::find_row(const Tuple& t) const {
  auto it = std::lower_bound(rows_.begin(), rows_.end(), t);
  if (it == rows_.end() || *it != t) return std::nullopt;
  return static_cast<std::size_t>(it - rows_.begin());
}

void EmbeddedRelation::set_emb(Matrix emb) {
  if (emb.rows() != rows_.size()) {
    throw RelationError("embedding row count does not match tuple count");
  }
  emb_ = std::move(emb);
}

void Schema::add(const std::string& name, RelationSchema entry) {
  if (entries_.contains(name)) throw RelationError("relation '" + name + "' declared twice");
  check_attrs(entry.attrs);
  entries_.emplace(name, std::move(entry));
}

const RelationSchema& Schema::at(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw RelationError("unknown relation '" + name + "'");
  return it->second;
}

void Database::add(const std::string& name, EmbeddedRelation rel, bool learnable) {
  schema_.add(name, RelationSchema{rel.attrs(), rel.dim()});
  relations_.emplace(name, std::move(rel));
  if (learnable) learnable_.insert(name);
}

const EmbeddedRelation& Database::at(const std::string& name) const {
  auto it = relations_.find(name);
  if (it == relations_.end()) throw RelationError("unknown relation '" + name + "'");
  return it->second;
}

void Database::set_vocabulary(const std::string& relation, const std::string& column,
                              Vocabulary v) {
  std::vector<std::string> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw RelationError("vocabulary for " + relation + "." + column + " repeats a value");
  }
  vocabularies_[{relation, column}] = std::move(v);
}

const Vocabulary* Database::vocabulary(const std::string& relation,
                                       const std::string& column) const {
  auto it = vocabularies_.find({relation, column});
  return it == vocabularies_.end() ? nullptr : &it->second;
}

}  // namespace relnn::rel
