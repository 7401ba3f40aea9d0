#include "relnn/tensor/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace relnn::tensor {

void optimizer_step(ParameterStore& store, const GradientMap& grads,
                    const OptimizerConfig& config) {
  if (!(config.lr > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (config.weight_decay < 0.0) throw std::invalid_argument("weight decay must be nonnegative");
  for (const auto& [key, _] : grads) {
    if (!store.contains(key)) throw std::out_of_range("gradient for unknown parameter " + key.str());
  }

  if (config.kind == OptimizerKind::Sgd) {
    for (const auto& [key, g] : grads) {
      Matrix& theta = store.mutable_value(key);
      if (!theta.same_shape(g)) throw ShapeError("gradient shape mismatch for " + key.str());
      for (std::size_t i = 0; i < theta.size(); ++i) {
        const double gi = g.data()[i] + config.weight_decay * theta.data()[i];
        theta.data()[i] -= config.lr * gi;
      }
    }
    return;
  }

  const std::int64_t t = ++store.adam_step();
  const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(t));
  for (const auto& [key, g] : grads) {
    AdamState& st = store.adam_state(key);
    Matrix& theta = store.mutable_value(key);
    if (!theta.same_shape(g)) throw ShapeError("gradient shape mismatch for " + key.str());
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double gi = g.data()[i] + config.weight_decay * theta.data()[i];
      double& m = st.m.data()[i];
      double& v = st.v.data()[i];
      m = config.beta1 * m + (1.0 - config.beta1) * gi;
      v = config.beta2 * v + (1.0 - config.beta2) * gi * gi;
      theta.data()[i] -= config.lr * (m / c1) / (std::sqrt(v / c2) + config.eps);
    }
  }
}

}  // namespace relnn::tensor
