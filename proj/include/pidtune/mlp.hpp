#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pidtune/rng.hpp"

namespace pidtune {

enum class OutputActivation { Identity, Tanh };

/// Fully connected net with rectifier hidden layers and an identity or tanh
/// output layer. Plain value type; copying copies all parameters.
struct Mlp {
  std::vector<int> layer_dims;               // input, hidden..., output
  std::vector<std::vector<double>> weights;  // per layer, row-major out x in
  std::vector<std::vector<double>> biases;   // per layer
  OutputActivation output_activation = OutputActivation::Identity;

  int input_dim() const { return layer_dims.front(); }
  int output_dim() const { return layer_dims.back(); }
  std::size_t layer_count() const { return weights.size(); }
};

/// Parameter-shaped gradient accumulator plus the gradient w.r.t. the input.
struct Gradients {
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;
  std::vector<double> input;

  void scale(double factor);
};

/// Weights and biases drawn uniformly in +-1/sqrt(fan_in), seeded.
Mlp make_mlp(const std::vector<int>& dims, OutputActivation output_activation, Rng& rng);

std::vector<double> forward(const Mlp& net, const std::vector<double>& x);

Gradients make_gradients(const Mlp& net);

/// Accumulates into grads the exact reverse-mode gradients of
/// upstream . forward(net, x) with respect to every parameter and to x.
void backward_into(const Mlp& net, const std::vector<double>& x,
                   const std::vector<double>& upstream, Gradients& grads);

Gradients backward(const Mlp& net, const std::vector<double>& x,
                   const std::vector<double>& upstream);

/// Adaptive-moment descent state. One instance per trained network.
struct OptimizerState {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  long step_count = 0;
  std::vector<std::vector<double>> m_weights, v_weights;
  std::vector<std::vector<double>> m_biases, v_biases;
};

OptimizerState make_optimizer(const Mlp& net, double learning_rate);

/// One bias-corrected adaptive-moment descent step. Throws std::domain_error
/// on non-finite gradients and if any parameter is non-finite afterwards.
void optimize_step(OptimizerState& opt, Mlp& net, const Gradients& grads);

/// target <- (1 - rho_new) * target + rho_new * online, parameterwise.
/// Throws std::invalid_argument on an architecture mismatch.
void polyak_blend(Mlp& target, const Mlp& online, double rho_new);

/// FNV-1a over the raw parameter bytes; equal iff parameters are bit-equal.
std::uint64_t params_checksum(const Mlp& net);

/// Text checkpoint: layer dims followed by row-major parameters, written
/// with round-trip precision. load_checkpoint restores bit-exactly.
void save_checkpoint(const Mlp& net, const std::string& path);
Mlp load_checkpoint(const std::string& path);

}  // namespace pidtune
