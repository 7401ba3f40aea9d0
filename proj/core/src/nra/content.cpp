#include "relnn/nra/content.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <unordered_map>

namespace relnn::nra {

std::optional<std::size_t> Content::find_attr(const std::string& name) const {
  auto it = std::find(attrs.begin(), attrs.end(), name);
  if (it == attrs.end()) return std::nullopt;
  return static_cast<std::size_t>(it - attrs.begin());
}

std::size_t Content::attr_index(const std::string& name) const {
  auto i = find_attr(name);
  if (!i) throw NraError("no attribute '" + name + "'");
  return *i;
}

namespace {

struct TupleHash {
  std::size_t operator()(const Tuple& t) const {
    std::size_t h = 0x9e3779b97f4a7c15ULL;
    for (const auto& v : t) {
      h ^= std::hash<Value>{}(v) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    }
    return h;
  }
};

Tuple project(const Tuple& t, const std::vector<std::size_t>& cols) {
  Tuple out;
  out.reserve(cols.size());
  for (auto c : cols) out.push_back(t[c]);
  return out;
}

std::optional<ValueTag> column_tag(const Content& c, std::size_t col) {
  if (c.rows.empty()) return std::nullopt;
  return rel::tag_of(c.rows.front()[col]);
}

}  // namespace

std::vector<std::size_t> canonical_order(const std::vector<Tuple>& rows) {
  std::vector<std::size_t> perm(rows.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) { return rows[a] < rows[b]; });
  return perm;
}

JoinResult hash_join(const Content& left, const Content& right) {
  std::vector<std::size_t> lkey;
  std::vector<std::size_t> rkey;
  std::vector<std::size_t> ronly;
  for (std::size_t j = 0; j < right.attrs.size(); ++j) {
    auto i = left.find_attr(right.attrs[j]);
    if (i) {
      lkey.push_back(*i);
      rkey.push_back(j);
      auto lt = column_tag(left, *i);
      auto rt = column_tag(right, j);
      if (lt && rt && *lt != *rt) {
        throw NraError("join attribute '" + right.attrs[j] + "' compares " + rel::to_string(*lt) +
                       " with " + rel::to_string(*rt));
      }
    } else {
      ronly.push_back(j);
    }
  }

  JoinResult out;
  out.content.attrs = left.attrs;
  for (auto j : ronly) out.content.attrs.push_back(right.attrs[j]);

  std::unordered_map<Tuple, std::vector<std::size_t>, TupleHash> index;
  for (std::size_t j = 0; j < right.rows.size(); ++j) index[project(right.rows[j], rkey)].push_back(j);

  std::vector<Tuple> rows;
  for (std::size_t i = 0; i < left.rows.size(); ++i) {
    auto it = index.find(project(left.rows[i], lkey));
    if (it == index.end()) continue;
    for (auto j : it->second) {
      Tuple t = left.rows[i];
      for (auto c : ronly) t.push_back(right.rows[j][c]);
      rows.push_back(std::move(t));
      out.left.push_back(i);
      out.right.push_back(j);
    }
  }
  if (!std::is_sorted(rows.begin(), rows.end())) {
    auto perm = canonical_order(rows);
    std::vector<Tuple> sorted;
    std::vector<std::size_t> l, r;
    for (auto p : perm) {
      sorted.push_back(std::move(rows[p]));
      l.push_back(out.left[p]);
      r.push_back(out.right[p]);
    }
    rows = std::move(sorted);
    out.left = std::move(l);
    out.right = std::move(r);
  }
  out.content.rows = std::move(rows);
  return out;
}

GroupResult group_by(std::span<const Content* const> inputs, const std::vector<std::string>& attrs) {
  GroupResult out;
  out.keys.attrs = attrs;
  std::map<Tuple, std::size_t> ids;
  std::vector<Tuple> projected;
  for (const Content* in : inputs) {
    std::vector<std::size_t> cols;
    for (const auto& a : attrs) {
      auto i = in->find_attr(a);
      if (!i) throw NraError("projected union attribute '" + a + "' missing from an input");
      cols.push_back(*i);
    }
    for (const auto& row : in->rows) {
      projected.push_back(project(row, cols));
      ids.emplace(projected.back(), 0);
    }
  }
  std::size_t next = 0;
  for (auto& [key, id] : ids) {
    id = next++;
    out.keys.rows.push_back(key);
  }
  out.group.reserve(projected.size());
  for (const auto& p : projected) out.group.push_back(ids.at(p));
  // Tag consistency across inputs.
  for (std::size_t c = 0; c < attrs.size() && !out.keys.rows.empty(); ++c) {
    const auto t = rel::tag_of(out.keys.rows.front()[c]);
    for (const auto& r : out.keys.rows) {
      if (rel::tag_of(r[c]) != t) {
        throw NraError("projected union attribute '" + attrs[c] + "' mixes value types");
      }
    }
  }
  return out;
}

std::vector<std::size_t> difference_rows(const Content& left, const Content& right) {
  if (left.attrs != right.attrs) throw NraError("difference needs identical content schemas");
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < left.rows.size(); ++i) {
    if (!std::binary_search(right.rows.begin(), right.rows.end(), left.rows[i])) kept.push_back(i);
  }
  return kept;
}

Content take_rows(const Content& c, std::span<const std::size_t> idx) {
  Content out;
  out.attrs = c.attrs;
  out.rows.reserve(idx.size());
  for (auto i : idx) out.rows.push_back(c.rows.at(i));
  return out;
}

}  // namespace relnn::nra
