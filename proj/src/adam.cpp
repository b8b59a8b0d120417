#include "keyspoof/adam.hpp"

#include <cmath>

#include "keyspoof/errors.hpp"

namespace keyspoof {

AdamState make_adam_state(const NetworkParams& params, const AdamConfig& config) {
  AdamState state;
  state.config = config;
  state.first_moment = zero_gradients(params);
  state.second_moment = zero_gradients(params);
  return state;
}

void adam_step(NetworkParams& params, const ParamGradients& gradients, AdamState& state) {
  if (gradients.size() != params.layers.size() ||
      state.first_moment.size() != params.layers.size())
    throw ShapeError("adam_step: gradient layer count mismatch");
  for (std::size_t k = 0; k < gradients.size(); ++k) {
    const auto& g = gradients[k];
    const auto& p = params.layers[k];
    if (g.weights.rows() != p.weights.rows() || g.weights.cols() != p.weights.cols() ||
        g.biases.size() != p.biases.size())
      throw ShapeError("adam_step: gradient shape mismatch in layer " + std::to_string(k));
    if (!g.weights.allFinite() || !g.biases.allFinite())
      throw NumericError("adam_step: non-finite gradient in layer " + std::to_string(k));
  }

  const auto& c = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);
  const double step_size = c.lr * std::sqrt(correction2) / correction1;
  const double eps_hat = c.epsilon * std::sqrt(correction2);

  auto update = [&](auto& param, const auto& grad, auto& m, auto& v) {
    m = c.beta1 * m + (1.0 - c.beta1) * grad;
    v = c.beta2 * v + (1.0 - c.beta2) * grad.cwiseProduct(grad);
    param.array() -= step_size * m.array() / (v.array().sqrt() + eps_hat);
  };
  for (std::size_t k = 0; k < gradients.size(); ++k) {
    update(params.layers[k].weights, gradients[k].weights, state.first_moment[k].weights,
           state.second_moment[k].weights);
    update(params.layers[k].biases, gradients[k].biases, state.first_moment[k].biases,
           state.second_moment[k].biases);
  }
}

}  // namespace keyspoof
