#pragma once

#include <cstdint>

#include "keyspoof/network.hpp"

namespace keyspoof {

struct AdamConfig {
  double lr = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::int64_t step = 0;
  ParamGradients first_moment;
  ParamGradients second_moment;
};

AdamState make_adam_state(const NetworkParams& params, const AdamConfig& config = {});

/// One bias-corrected Adam update. Throws NumericError naming the layer when
/// a gradient entry is not finite; params and state are untouched then.
void adam_step(NetworkParams& params, const ParamGradients& gradients, AdamState& state);

}  // namespace keyspoof
