#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace touchpred {

// Fully-connected sigmoid network: 31 -> 10 -> 10 -> 10 -> 1 at defaults.
struct Architecture {
  int input_dim = 31;
  std::vector<int> hidden = {10, 10, 10};
  int output_dim = 1;

  // Layer l maps layer_dims()[l] -> layer_dims()[l+1].
  std::vector<int> layer_dims() const;
  bool operator==(const Architecture&) const = default;
};

// Weight matrices are stored fan_in x fan_out, so a batch X (n x fan_in)
// propagates as sigmoid(X * W + b^T).
struct NetworkParams {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;

  Architecture architecture() const;
  bool same_shape(const NetworkParams& other) const;
};

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  NetworkParams first_moment;
  NetworkParams second_moment;
  std::int64_t step = 0;
  AdamConfig config;
};

// BCE probability clamp: p is limited to [kProbClamp, 1 - kProbClamp] so the
// loss stays finite; gradients are exact derivatives of the clamped loss.
inline constexpr double kProbClamp = 1e-12;

std::int64_t param_count(const Architecture& arch);

// Glorot-uniform weights on +-sqrt(6/(fan_in+fan_out)), zero biases.
NetworkParams init_params(const Architecture& arch, std::uint64_t seed);

NetworkParams zeros_like(const NetworkParams& params);

double forward(const NetworkParams& params, const Eigen::VectorXd& x);

// Scores for a batch, one row per sample.
Eigen::VectorXd forward_batch(const NetworkParams& params, const Eigen::MatrixXd& X);

struct LossGrad {
  double loss = 0.0;
  NetworkParams gradients;
};

// Mean binary cross-entropy over the batch and its exact gradients via
// reverse-mode accumulation.
LossGrad loss_and_grad(const NetworkParams& params, const Eigen::MatrixXd& X,
                       const Eigen::VectorXd& y);

AdamState make_adam_state(const NetworkParams& params, const AdamConfig& config);

// Bias-corrected Adam update in place. Throws on non-finite gradients.
void adam_step(AdamState& state, NetworkParams& params, const NetworkParams& gradients);

// Lossless JSON round-trip (shortest round-trip decimal encoding).
std::string params_to_json_string(const NetworkParams& params, std::uint64_t init_seed);
NetworkParams params_from_json_string(const std::string& text, std::uint64_t* init_seed = nullptr);

}  // namespace touchpred
