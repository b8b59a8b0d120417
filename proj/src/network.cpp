#include "keyspoof/network.hpp"

#include <cmath>
#include <random>

#include "keyspoof/errors.hpp"
#include "keyspoof/random.hpp"

namespace keyspoof {

namespace {

void apply_activation(Activation a, Eigen::MatrixXd& z) {
  switch (a) {
    case Activation::relu:
      z = z.cwiseMax(0.0);
      break;
    case Activation::leaky_relu:
      z = z.unaryExpr([](double v) { return v > 0.0 ? v : kLeakySlope * v; });
      break;
    case Activation::sigmoid:
      z = z.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
      break;
    case Activation::tanh:
      z = z.array().tanh().matrix();
      break;
    case Activation::identity:
      break;
  }
}

// Derivative in terms of the activation output y. For the rectifiers,
// y > 0 iff z > 0.
Eigen::MatrixXd activation_derivative(Activation a, const Eigen::MatrixXd& y) {
  switch (a) {
    case Activation::relu:
      return y.unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; });
    case Activation::leaky_relu:
      return y.unaryExpr([](double v) { return v > 0.0 ? 1.0 : kLeakySlope; });
    case Activation::sigmoid:
      return (y.array() * (1.0 - y.array())).matrix();
    case Activation::tanh:
      return (1.0 - y.array().square()).matrix();
    case Activation::identity:
      return Eigen::MatrixXd::Ones(y.rows(), y.cols());
  }
  return Eigen::MatrixXd::Ones(y.rows(), y.cols());
}

}  // namespace

std::string_view to_string(Activation a) noexcept {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::leaky_relu: return "leaky_relu";
    case Activation::sigmoid: return "sigmoid";
    case Activation::tanh: return "tanh";
    case Activation::identity: return "identity";
  }
  return "identity";
}

Activation activation_from_string(std::string_view name) {
  for (auto a : {Activation::relu, Activation::leaky_relu, Activation::sigmoid,
                 Activation::tanh, Activation::identity}) {
    if (to_string(a) == name) return a;
  }
  throw ConfigError("unknown activation '" + std::string(name) + "'");
}

std::size_t NetworkParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weights.size() + l.biases.size();
  return n;
}

std::vector<LayerSpec> chain_specs(std::span<const int> widths, Activation hidden,
                                   Activation output) {
  if (widths.size() < 2) throw ShapeError("chain_specs: need at least input and output width");
  std::vector<LayerSpec> specs;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    const bool last = i + 2 == widths.size();
    specs.push_back(LayerSpec{widths[i], widths[i + 1], last ? output : hidden});
  }
  return specs;
}

NetworkParams init_network(std::span<const LayerSpec> specs, std::uint64_t seed) {
  if (specs.empty()) throw ShapeError("init_network: no layers");
  for (std::size_t k = 0; k < specs.size(); ++k) {
    if (specs[k].in_dim < 1 || specs[k].out_dim < 1)
      throw ShapeError("layer " + std::to_string(k) + ": dimensions must be >= 1");
    if (k > 0 && specs[k - 1].out_dim != specs[k].in_dim) {
      throw ShapeError("layer " + std::to_string(k) + ": in_dim " +
                       std::to_string(specs[k].in_dim) + " does not match previous out_dim " +
                       std::to_string(specs[k - 1].out_dim));
    }
  }
  NetworkParams params;
  params.specs.assign(specs.begin(), specs.end());
  Rng rng = make_rng(seed);
  for (const auto& spec : specs) {
    const double s = std::sqrt(6.0 / (spec.in_dim + spec.out_dim));
    std::uniform_real_distribution<double> dist(-s, s);
    DenseLayer layer;
    layer.weights.resize(spec.out_dim, spec.in_dim);
    // Row-major fill order so the stream maps to the serialized layout.
    for (int r = 0; r < spec.out_dim; ++r)
      for (int c = 0; c < spec.in_dim; ++c) layer.weights(r, c) = dist(rng);
    layer.biases = Eigen::VectorXd::Zero(spec.out_dim);
    params.layers.push_back(std::move(layer));
  }
  return params;
}

void validate_shapes(const NetworkParams& params) {
  if (params.specs.empty() || params.specs.size() != params.layers.size())
    throw ShapeError("network: layer count does not match spec count");
  for (std::size_t k = 0; k < params.specs.size(); ++k) {
    const auto& s = params.specs[k];
    const auto& l = params.layers[k];
    if (k > 0 && params.specs[k - 1].out_dim != s.in_dim)
      throw ShapeError("layer " + std::to_string(k) + ": broken dimension chain");
    if (l.weights.rows() != s.out_dim || l.weights.cols() != s.in_dim ||
        l.biases.size() != s.out_dim)
      throw ShapeError("layer " + std::to_string(k) + ": parameter shape mismatch");
  }
}

Eigen::MatrixXd forward(const NetworkParams& params, const Eigen::MatrixXd& batch, Tape* tape) {
  if (batch.rows() != params.input_dim()) {
    throw ShapeError("forward: input length " + std::to_string(batch.rows()) +
                     " does not match network input " + std::to_string(params.input_dim()));
  }
  if (tape) {
    tape->values.clear();
    tape->values.reserve(params.layers.size() + 1);
    tape->values.push_back(batch);
  }
  Eigen::MatrixXd x = batch;
  for (std::size_t k = 0; k < params.layers.size(); ++k) {
    const auto& layer = params.layers[k];
    Eigen::MatrixXd z = layer.weights * x;
    z.colwise() += layer.biases;
    apply_activation(params.specs[k].activation, z);
    x = std::move(z);
    if (tape) tape->values.push_back(x);
  }
  return x;
}

Eigen::VectorXd forward(const NetworkParams& params, const Eigen::VectorXd& input, Tape* tape) {
  const Eigen::MatrixXd batch = input;
  return forward(params, batch, tape).col(0);
}

BackwardResult backward(const NetworkParams& params, const Tape& tape,
                        const Eigen::MatrixXd& output_gradient) {
  const auto n_layers = params.layers.size();
  if (tape.values.size() != n_layers + 1)
    throw ShapeError("backward: tape does not match network depth");
  const auto& out = tape.values.back();
  if (output_gradient.rows() != out.rows() || output_gradient.cols() != out.cols())
    throw ShapeError("backward: output gradient shape does not match forward output");

  BackwardResult result;
  result.params.resize(n_layers);
  Eigen::MatrixXd grad = output_gradient;
  for (std::size_t k = n_layers; k-- > 0;) {
    const auto& y = tape.values[k + 1];
    const auto& x = tape.values[k];
    const Eigen::MatrixXd delta =
        (grad.array() * activation_derivative(params.specs[k].activation, y).array()).matrix();
    result.params[k].weights.noalias() = delta * x.transpose();
    result.params[k].biases = delta.rowwise().sum();
    grad.noalias() = params.layers[k].weights.transpose() * delta;
  }
  result.input_gradient = std::move(grad);
  return result;
}

ParamGradients zero_gradients(const NetworkParams& params) {
  ParamGradients g(params.layers.size());
  for (std::size_t k = 0; k < g.size(); ++k) {
    g[k].weights = Eigen::MatrixXd::Zero(params.layers[k].weights.rows(),
                                         params.layers[k].weights.cols());
    g[k].biases = Eigen::VectorXd::Zero(params.layers[k].biases.size());
  }
  return g;
}

}  // namespace keyspoof
