#include "relnn/cli/manifest.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace relnn::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::uint64_t parse_unsigned(const std::string& v, const std::string& what) {
  std::size_t used = 0;
  unsigned long long x = 0;
  try {
    if (v.empty() || v[0] == '-') throw std::invalid_argument(v);
    x = std::stoull(v, &used);
  } catch (const std::exception&) {
    throw ManifestError(what + " must be a nonnegative integer, got '" + v + "'");
  }
  if (used != v.size()) throw ManifestError(what + " must be a nonnegative integer, got '" + v + "'");
  return x;
}

}  // namespace

const RelationSpec* Manifest::find(const std::string& name) const {
  for (const auto& r : relations) {
    if (r.name == name) return &r;
  }
  return nullptr;
}

Manifest parse_manifest(const std::string& text, const std::filesystem::path& dir) {
  Manifest m;
  m.dir = dir;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  auto spec = [&](const std::string& name) -> RelationSpec& {
    for (auto& r : m.relations) {
      if (r.name == name) return r;
    }
    m.relations.push_back({});
    m.relations.back().name = name;
    return m.relations.back();
  };
  while (std::getline(in, line)) {
    ++line_no;
    const std::string where = "manifest line " + std::to_string(line_no) + ": ";
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ManifestError(where + "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ManifestError(where + "empty key");
    if (!seen.insert(key).second) throw ManifestError(where + "duplicate key " + key);
    try {
      if (key == "seed") {
        m.seed = parse_unsigned(value, "seed");
        continue;
      }
      if (key == "output") {
        if (value.empty()) throw ManifestError("output must not be empty");
        m.output = value;
        continue;
      }
      if (key == "params") {
        m.params = dir / value;
        continue;
      }
      const auto dot = key.find('.');
      if (dot == std::string::npos || dot == 0) throw ManifestError("unknown key " + key);
      const std::string rel = key.substr(0, dot);
      const std::string field = key.substr(dot + 1);
      RelationSpec& r = spec(rel);
      if (field == "path") {
        if (value.empty()) throw ManifestError("empty path for " + rel);
        r.path = dir / value;
      } else if (field == "columns") {
        for (const auto& item : split_list(value)) {
          const auto colon = item.find(':');
          rel::ColumnDecl decl;
          decl.name = trim(item.substr(0, colon));
          if (colon != std::string::npos) decl.role = rel::parse_role(trim(item.substr(colon + 1)));
          r.columns.push_back(decl);
        }
        if (r.columns.empty()) throw ManifestError("empty column list for " + rel);
      } else if (field == "learnable") {
        auto d = parse_unsigned(value, key);
        if (d == 0) throw ManifestError(key + " must be positive");
        r.learnable = d;
      } else if (field.rfind("vocab.", 0) == 0 && field.size() > 6) {
        auto words = split_list(value);
        if (words.empty()) throw ManifestError("empty vocabulary " + key);
        if (std::set<std::string>(words.begin(), words.end()).size() != words.size()) {
          throw ManifestError("repeated word in vocabulary " + key);
        }
        r.vocabularies[field.substr(6)] = std::move(words);
      } else {
        throw ManifestError("unknown key " + key);
      }
    } catch (const ManifestError& e) {
      throw ManifestError(where + e.what());
    } catch (const std::runtime_error& e) {
      throw ManifestError(where + e.what());
    }
  }
  for (const auto& r : m.relations) {
    if (r.path.empty()) throw ManifestError("relation " + r.name + " has no path");
  }
  return m;
}

Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ManifestError("cannot read manifest " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return parse_manifest(os.str(), path.parent_path());
}

rel::Database load_database(const Manifest& m, tensor::ParameterStore& store) {
  rel::Database db;
  for (const auto& spec : m.relations) {
    rel::EmbeddedRelation r = rel::load_relation_csv(spec.path, spec.name, spec.columns);
    const bool learnable = spec.learnable.has_value();
    if (learnable) {
      if (r.dim() != 0) throw ManifestError(spec.name + ": learnable relations cannot also have feature columns");
      r = rel::attach_learnable_embeddings(r, spec.name, *spec.learnable, store, store.seed());
    }
    db.add(spec.name, std::move(r), learnable);
    for (const auto& [col, vocab] : spec.vocabularies) {
      const auto& rr = db.at(spec.name);
      if (!rr.find_attr(col)) throw ManifestError(spec.name + ": vocabulary for unknown column " + col);
      db.set_vocabulary(spec.name, col, vocab);
    }
  }
  return db;
}

}  // namespace relnn::cli
