#pragma once

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "relnn/tensor/tape.hpp"

namespace relnn::tensor {

// (name, template-argument tuple). Identical keys alias one parameter.
struct ParamKey {
  std::string name;
  std::vector<std::string> args;

  auto operator<=>(const ParamKey&) const = default;
  bool operator==(const ParamKey&) const = default;

  // name or name<a,b,...>
  std::string str() const;
  static ParamKey parse(const std::string& text);
};

enum class InitKind {
  Zeros,
  // N(0, 1/fan_in) on all entries.
  Normal,
  // Linear layer packed as (in + 1) x out: N(0, 1/in) weights, zero bias row.
  Linear,
};

struct InitSpec {
  InitKind kind = InitKind::Normal;
  std::size_t fan_in = 1;
};

struct AdamState {
  Matrix m;
  Matrix v;
};

using GradientMap = std::map<ParamKey, Matrix>;

// Named parameter tensors (the current assignment) plus optimizer state.
class ParameterStore {
 public:
  explicit ParameterStore(std::uint64_t seed = 0) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }

  // Registers key with a seeded initial value unless present. Returns true if
  // the key was created. Throws ShapeError when present with another shape.
  bool ensure(const ParamKey& key, std::size_t rows, std::size_t cols, InitSpec init);

  void set(const ParamKey& key, Matrix value);
  bool contains(const ParamKey& key) const { return values_.contains(key); }
  const Matrix& value(const ParamKey& key) const;
  Matrix& mutable_value(const ParamKey& key);

  std::vector<ParamKey> keys() const;
  std::size_t size() const { return values_.size(); }

  AdamState& adam_state(const ParamKey& key);
  std::int64_t& adam_step() { return adam_step_; }
  void reset_optimizer_state();

  // Text checkpoint: one line per key, "key<TAB>rows cols<TAB>v0 v1 ...",
  // values in %.17g so the round trip is exact.
  void save(std::ostream& out) const;
  static ParameterStore load(std::istream& in, std::uint64_t seed = 0);

 private:
  std::uint64_t seed_;
  std::map<ParamKey, Matrix> values_;
  std::map<ParamKey, AdamState> adam_;
  std::int64_t adam_step_ = 0;
};

// Deterministic initial value for a key, independent of registration order.
Matrix initial_value(std::uint64_t seed, const ParamKey& key, std::size_t rows,
                     std::size_t cols, InitSpec init);

// Leaves of one store on one tape; each key is bound at most once per tape so
// every use accumulates into the same gradient slot.
class ParameterBinding {
 public:
  ParameterBinding(ParameterStore& store, Tape& tape) : store_(store), tape_(tape) {}

  Tensor get(const ParamKey& key);
  // Registers the key first if the store lacks it.
  Tensor get(const ParamKey& key, std::size_t rows, std::size_t cols, InitSpec init);

  ParameterStore& store() { return store_; }
  const ParameterStore& store() const { return store_; }
  Tape& tape() { return tape_; }
  const std::map<ParamKey, Tensor>& bound() const { return bound_; }

 private:
  ParameterStore& store_;
  Tape& tape_;
  std::map<ParamKey, Tensor> bound_;
};

// Runs the tape backward from loss and reports a gradient for every key in
// the store (zeros for keys not bound on this tape).
GradientMap backward(Tape& tape, const Tensor& loss, const ParameterBinding& binding);

}  // namespace relnn::tensor
