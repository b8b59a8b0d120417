#pragma once

// Fixed dense-layer stack shared by the generator, discriminator and the
// verifier's embedding network. Batches are column-major: one sample per
// column.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace keyspoof {

enum class Activation { relu, leaky_relu, sigmoid, tanh, identity };

inline constexpr double kLeakySlope = 0.2;

std::string_view to_string(Activation a) noexcept;
/// Throws ConfigError for unknown names.
Activation activation_from_string(std::string_view name);

struct LayerSpec {
  int in_dim = 0;
  int out_dim = 0;
  Activation activation = Activation::identity;

  bool operator==(const LayerSpec&) const = default;
};

struct DenseLayer {
  Eigen::MatrixXd weights;  // out_dim x in_dim
  Eigen::VectorXd biases;   // out_dim
};

struct NetworkParams {
  std::vector<LayerSpec> specs;
  std::vector<DenseLayer> layers;

  int input_dim() const { return specs.front().in_dim; }
  int output_dim() const { return specs.back().out_dim; }
  std::size_t parameter_count() const;
};

/// Same shape as NetworkParams::layers.
using ParamGradients = std::vector<DenseLayer>;

/// Activations cached by a forward pass; `values[0]` is the input batch and
/// `values[k + 1]` is the output of layer k.
struct Tape {
  std::vector<Eigen::MatrixXd> values;
};

struct BackwardResult {
  ParamGradients params;
  Eigen::MatrixXd input_gradient;
};

/// Builds the spec list for a chain of widths with one hidden activation and
/// one output activation.
std::vector<LayerSpec> chain_specs(std::span<const int> widths, Activation hidden,
                                   Activation output);

/// Glorot-uniform weights, zero biases. Throws ShapeError on broken chains.
NetworkParams init_network(std::span<const LayerSpec> specs, std::uint64_t seed);

void validate_shapes(const NetworkParams& params);

/// Forward pass over a batch (in_dim x n). Records the tape when non-null.
Eigen::MatrixXd forward(const NetworkParams& params, const Eigen::MatrixXd& batch,
                        Tape* tape = nullptr);
Eigen::VectorXd forward(const NetworkParams& params, const Eigen::VectorXd& input,
                        Tape* tape = nullptr);

/// Reverse-mode gradients of sum_j <output_gradient_j, output_j>, summed
/// over the batch columns.
BackwardResult backward(const NetworkParams& params, const Tape& tape,
                        const Eigen::MatrixXd& output_gradient);

ParamGradients zero_gradients(const NetworkParams& params);

}  // namespace keyspoof
