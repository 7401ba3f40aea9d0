#include "relnn/tensor/parameter_store.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

namespace relnn::tensor {

std::string ParamKey::str() const {
  if (args.empty()) return name;
  std::string out = name + "<";
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (i > 0) out += ",";
    out += args[i];
  }
  return out + ">";
}

ParamKey ParamKey::parse(const std::string& text) {
  ParamKey key;
  const auto lt = text.find('<');
  if (lt == std::string::npos) {
    key.name = text;
    return key;
  }
  if (text.back() != '>') throw std::invalid_argument("malformed parameter key: " + text);
  key.name = text.substr(0, lt);
  const std::string inner = text.substr(lt + 1, text.size() - lt - 2);
  std::size_t start = 0;
  while (true) {
    const auto comma = inner.find(',', start);
    key.args.push_back(inner.substr(start, comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return key;
}

namespace {

std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 1469598103934665603ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

Matrix initial_value(std::uint64_t seed, const ParamKey& key, std::size_t rows, std::size_t cols,
                     InitSpec init) {
  Matrix m(rows, cols);
  if (init.kind == InitKind::Zeros) return m;
  std::mt19937_64 rng(seed ^ fnv1a(key.str()));
  const double fan = static_cast<double>(std::max<std::size_t>(init.fan_in, 1));
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(fan));
  const std::size_t weight_rows = init.kind == InitKind::Linear && rows > 0 ? rows - 1 : rows;
  for (std::size_t i = 0; i < weight_rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = normal(rng);
  return m;
}

bool ParameterStore::ensure(const ParamKey& key, std::size_t rows, std::size_t cols,
                            InitSpec init) {
  auto it = values_.find(key);
  if (it != values_.end()) {
    if (it->second.rows() != rows || it->second.cols() != cols) {
      throw ShapeError("parameter " + key.str() + " already has shape " +
                       it->second.shape_string() + ", requested (" + std::to_string(rows) + "x" +
                       std::to_string(cols) + ")");
    }
    return false;
  }
  values_.emplace(key, initial_value(seed_, key, rows, cols, init));
  return true;
}

void ParameterStore::set(const ParamKey& key, Matrix value) {
  values_[key] = std::move(value);
  adam_.erase(key);
}

const Matrix& ParameterStore::value(const ParamKey& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw std::out_of_range("unknown parameter " + key.str());
  return it->second;
}

Matrix& ParameterStore::mutable_value(const ParamKey& key) {
  auto it = values_.find(key);
  if (it == values_.end()) throw std::out_of_range("unknown parameter " + key.str());
  return it->second;
}

std::vector<ParamKey> ParameterStore::keys() const {
  std::vector<ParamKey> out;
  out.reserve(values_.size());
  for (const auto& [k, _] : values_) out.push_back(k);
  return out;
}

AdamState& ParameterStore::adam_state(const ParamKey& key) {
  auto it = adam_.find(key);
  if (it != adam_.end()) return it->second;
  const Matrix& v = value(key);
  return adam_.emplace(key, AdamState{Matrix(v.rows(), v.cols()), Matrix(v.rows(), v.cols())})
      .first->second;
}

void ParameterStore::reset_optimizer_state() {
  adam_.clear();
  adam_step_ = 0;
}

void ParameterStore::save(std::ostream& out) const {
  for (const auto& [key, m] : values_) {
    out << key.str() << '\t' << m.rows() << ' ' << m.cols() << '\t';
    for (std::size_t i = 0; i < m.size(); ++i) {
      if (i > 0) out << ' ';
      out << format_double(m.data()[i]);
    }
    out << '\n';
  }
}

ParameterStore ParameterStore::load(std::istream& in, std::uint64_t seed) {
  ParameterStore store(seed);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab1 = line.find('\t');
    const auto tab2 = tab1 == std::string::npos ? tab1 : line.find('\t', tab1 + 1);
    if (tab2 == std::string::npos) {
      throw std::runtime_error("checkpoint line " + std::to_string(line_no) + ": malformed");
    }
    std::istringstream shape(line.substr(tab1 + 1, tab2 - tab1 - 1));
    std::size_t rows = 0;
    std::size_t cols = 0;
    if (!(shape >> rows >> cols)) {
      throw std::runtime_error("checkpoint line " + std::to_string(line_no) + ": bad shape");
    }
    std::istringstream vals(line.substr(tab2 + 1));
    std::vector<double> data;
    std::string tok;
    while (vals >> tok) data.push_back(std::stod(tok));
    if (data.size() != rows * cols) {
      throw std::runtime_error("checkpoint line " + std::to_string(line_no) +
                               ": value count does not match shape");
    }
    store.set(ParamKey::parse(line.substr(0, tab1)), Matrix(rows, cols, std::move(data)));
  }
  return store;
}

Tensor ParameterBinding::get(const ParamKey& key) {
  auto it = bound_.find(key);
  if (it != bound_.end()) return it->second;
  Tensor t = tape_.leaf(store_.value(key));
  bound_.emplace(key, t);
  return t;
}

Tensor ParameterBinding::get(const ParamKey& key, std::size_t rows, std::size_t cols,
                             InitSpec init) {
  store_.ensure(key, rows, cols, init);
  return get(key);
}

GradientMap backward(Tape& tape, const Tensor& loss, const ParameterBinding& binding) {
  tape.backward(loss);
  GradientMap grads;
  const ParameterStore& store = binding.store();
  for (const auto& key : store.keys()) {
    auto it = binding.bound().find(key);
    if (it == binding.bound().end()) {
      const Matrix& v = store.value(key);
      grads.emplace(key, Matrix(v.rows(), v.cols()));
    } else {
      grads.emplace(key, tape.grad(it->second));
    }
  }
  return grads;
}

}  // namespace relnn::tensor
