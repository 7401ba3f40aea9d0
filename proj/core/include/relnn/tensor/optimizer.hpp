#pragma once

#include "relnn/tensor/parameter_store.hpp"

namespace relnn::tensor {

enum class OptimizerKind { Sgd, Adam };

struct OptimizerConfig {
  double lr = 0.01;
  double weight_decay = 0.0;
  OptimizerKind kind = OptimizerKind::Adam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// One update of every key in grads. Weight decay enters as g + wd * theta for
// both kinds. Adam uses bias-corrected moments kept in the store.
void optimizer_step(ParameterStore& store, const GradientMap& grads,
                    const OptimizerConfig& config);

}  // namespace relnn::tensor
