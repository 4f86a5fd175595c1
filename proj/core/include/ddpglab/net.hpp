#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ddpglab/rng.hpp"

namespace ddpglab {

/// Raised when a non-finite value shows up in gradients, losses or targets.
/// The harness catches it and marks the run as diverged.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Activation { relu, tanh };

struct OutputTransform {
  enum class Kind { identity, scaled_tanh };
  Kind kind = Kind::identity;
  double limit = 1.0;

  static OutputTransform identity() { return {}; }
  static OutputTransform scaled_tanh(double limit) {
    return {Kind::scaled_tanh, limit};
  }
};

/// Dense feed-forward network. Inputs and outputs are column-major batches:
/// one column per sample, `layer_sizes.front()` rows in, `layer_sizes.back()`
/// rows out. Layer k maps `layer_sizes[k]` to `layer_sizes[k + 1]` units.
struct MlpParams {
  std::vector<int> layer_sizes;
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
  Activation hidden_activation = Activation::relu;
  OutputTransform output_transform;
  // Bumped by every in-library mutation; forward caches remember it.
  std::uint64_t revision = 0;

  int input_dim() const { return layer_sizes.front(); }
  int output_dim() const { return layer_sizes.back(); }
  std::size_t num_layers() const { return weights.size(); }
  std::size_t parameter_count() const;
  bool all_finite() const;
};

/// Zero-valued network with the given topology.
MlpParams make_mlp(std::span<const int> layer_sizes, Activation hidden,
                   OutputTransform output);

/// Xavier-uniform weights in ±sqrt(6 / (fan_in + fan_out)), zero biases.
MlpParams init_mlp(std::span<const int> layer_sizes, Activation hidden,
                   OutputTransform output, Rng& rng);

struct ForwardCache {
  std::vector<Eigen::MatrixXd> layer_inputs;  // a_0 .. a_{L-1}
  std::vector<Eigen::MatrixXd> pre_activations;  // z_1 .. z_L
  Eigen::MatrixXd output;
  const MlpParams* source = nullptr;
  std::uint64_t revision = 0;

  Eigen::Index batch() const { return output.cols(); }
};

struct MlpGradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;

  static MlpGradients zeros_like(const MlpParams& params);
  void set_zero();
  double max_abs() const;
  bool all_finite() const;
};

/// Evaluates the network on a batch, filling `cache` for a later backward().
void forward(const MlpParams& params, const Eigen::Ref<const Eigen::MatrixXd>& input,
             ForwardCache& cache);

/// Forward pass without keeping intermediates.
Eigen::MatrixXd evaluate(const MlpParams& params,
                         const Eigen::Ref<const Eigen::MatrixXd>& input);

/// Single-sample convenience overload.
Eigen::VectorXd evaluate(const MlpParams& params, std::span<const double> input);

/// Backpropagates `output_grad` (dL/d output, same shape as the output).
/// Either destination may be null to skip that part of the work. Parameter
/// gradients are summed over the batch.
void backward(const MlpParams& params, const ForwardCache& cache,
              const Eigen::Ref<const Eigen::MatrixXd>& output_grad,
              MlpGradients* param_grads, Eigen::MatrixXd* input_grad);

struct AdamState {
  std::vector<Eigen::MatrixXd> weight_m, weight_v;
  std::vector<Eigen::VectorXd> bias_m, bias_v;
  std::uint64_t step_count = 0;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState for_params(const MlpParams& params, double learning_rate,
                              double beta1 = 0.9, double beta2 = 0.999,
                              double epsilon = 1e-8);
};

/// One bias-corrected Adam step. Throws DivergenceError on non-finite grads.
void adam_step(AdamState& state, MlpParams& params, const MlpGradients& grads);

/// target <- rho * target + (1 - rho) * source, entrywise.
void polyak_update(MlpParams& target, const MlpParams& source, double rho);

struct GradientCheckResult {
  double max_relative_error = 0.0;
  std::size_t compared = 0;
  // Pairs whose +-step evaluations put some relu pre-activation on opposite
  // sides of zero; the central difference is meaningless there.
  std::size_t kink_skipped = 0;
};

/// Relative error between analytic and central-difference derivatives of
/// L = probe . f(input), over every parameter and every input coordinate.
/// Pairs whose absolute difference is at most 1e-8 count as matching;
/// otherwise the error is |g - n| / max(|g|, |n|).
GradientCheckResult gradient_check_detailed(const MlpParams& params, std::span<const double> input,
                                            std::span<const double> probe, double step = 1e-5);

/// Worst relative error of gradient_check_detailed.
double gradient_check(const MlpParams& params, std::span<const double> input,
                      std::span<const double> probe, double step = 1e-5);

struct GradientCheckSummary {
  int nets = 0;
  double max_relative_error = 0.0;
  int worst_net = -1;
  std::size_t compared = 0;
  std::size_t kink_skipped = 0;
};

/// gradient_check over `count` random networks drawn from `rng`: critics
/// (2 -> 64 -> 64 -> 1, relu), actors (1 -> 64 -> 64 -> 1, relu, 0.1 tanh)
/// and small tanh nets, with perturbed biases and inputs drawn from S x A.
GradientCheckSummary random_gradient_checks(int count, Rng& rng);

}  // namespace ddpglab
