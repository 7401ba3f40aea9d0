#include "relnn/relmodel/loader.hpp"

#include <fstream>
#include <set>

namespace relnn::rel {
namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  for (auto& cell : out) {
    const auto b = cell.find_first_not_of(' ');
    const auto e = cell.find_last_not_of(' ');
    cell = b == std::string::npos ? std::string() : cell.substr(b, e - b + 1);
  }
  return out;
}

}  // namespace

ColumnRole parse_role(const std::string& text) {
  if (text == "content") return ColumnRole::Content;
  if (text == "feature" || text == "numeric-feature") return ColumnRole::Feature;
  if (text == "skip") return ColumnRole::Skip;
  throw RelationError("unknown column role '" + text + "'");
}

EmbeddedRelation load_relation_csv(const std::filesystem::path& path, const std::string& name,
                                   const std::vector<ColumnDecl>& decl) {
  std::ifstream in(path);
  if (!in) throw RelationError(name + ": cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw RelationError(name + ": " + path.string() + " has no header");
  const std::vector<std::string> header = split_csv_line(line);

  std::vector<ColumnDecl> cols = decl;
  if (cols.empty()) {
    for (const auto& h : header) cols.push_back({h, ColumnRole::Content});
  }
  if (cols.size() != header.size()) {
    throw RelationError(name + ": header has " + std::to_string(header.size()) +
                        " columns but " + std::to_string(cols.size()) + " are declared");
  }
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (cols[i].name != header[i]) {
      throw RelationError(name + ": header column " + std::to_string(i + 1) + " is '" + header[i] +
                          "' but the declaration names '" + cols[i].name + "'");
    }
  }

  std::vector<std::string> attrs;
  std::vector<std::size_t> content_cols;
  std::vector<std::size_t> feature_cols;
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (cols[i].role == ColumnRole::Content) {
      attrs.push_back(cols[i].name);
      content_cols.push_back(i);
    } else if (cols[i].role == ColumnRole::Feature) {
      feature_cols.push_back(i);
    }
  }

  std::vector<std::vector<std::string>> raw;
  std::vector<double> features;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw RelationError(name + ": line " + std::to_string(line_no) + " has " +
                          std::to_string(cells.size()) + " cells, expected " +
                          std::to_string(header.size()));
    }
    std::vector<std::string> content;
    for (auto c : content_cols) content.push_back(cells[c]);
    raw.push_back(std::move(content));
    for (auto c : feature_cols) {
      Value v = parse_value(cells[c]);
      if (tag_of(v) != ValueTag::Int && tag_of(v) != ValueTag::Float) {
        throw RelationError(name + ": line " + std::to_string(line_no) + ": feature column '" +
                            cols[c].name + "' holds non-numeric value '" + cells[c] + "'");
      }
      features.push_back(as_double(v));
    }
  }

  // Per-column tag: ints and floats mixed promote to float; any other mix
  // keeps the raw text.
  std::vector<Tuple> rows(raw.size());
  for (std::size_t c = 0; c < content_cols.size(); ++c) {
    std::set<ValueTag> tags;
    std::vector<Value> parsed;
    parsed.reserve(raw.size());
    for (const auto& r : raw) {
      parsed.push_back(parse_value(r[c]));
      tags.insert(tag_of(parsed.back()));
    }
    const bool promote = tags == std::set<ValueTag>{ValueTag::Int, ValueTag::Float};
    const bool as_text = tags.size() > 1 && !promote;
    for (std::size_t i = 0; i < raw.size(); ++i) {
      if (as_text) {
        rows[i].push_back(raw[i][c]);
      } else if (promote) {
        rows[i].push_back(as_double(parsed[i]));
      } else {
        rows[i].push_back(std::move(parsed[i]));
      }
    }
  }

  try {
    return EmbeddedRelation::make(std::move(attrs), std::move(rows),
                                  Matrix(raw.size(), feature_cols.size(), std::move(features)));
  } catch (const RelationError& e) {
    throw RelationError(name + ": " + e.what());
  }
}

tensor::ParamKey embedding_key(const std::string& relation, std::size_t row) {
  return {relation, {std::to_string(row)}};
}

EmbeddedRelation attach_learnable_embeddings(const EmbeddedRelation& rel, const std::string& name,
                                             std::size_t d, tensor::ParameterStore& store,
                                             std::uint64_t rng_seed) {
  if (d == 0) throw RelationError(name + ": learnable embedding width must be positive");
  Matrix emb(rel.size(), d);
  for (std::size_t i = 0; i < rel.size(); ++i) {
    const auto key = embedding_key(name, i);
    if (!store.contains(key)) {
      store.set(key, tensor::initial_value(rng_seed, key, 1, d, {tensor::InitKind::Normal, d}));
    } else if (store.value(key).rows() != 1 || store.value(key).cols() != d) {
      throw tensor::ShapeError("parameter " + key.str() + " already has shape " +
                               store.value(key).shape_string());
    }
    const Matrix& v = store.value(key);
    for (std::size_t j = 0; j < d; ++j) emb(i, j) = v(0, j);
  }
  return EmbeddedRelation::from_sorted(rel.attrs(), rel.rows(), std::move(emb));
}

}  // namespace relnn::rel
