#include "ddpglab/net.hpp"

#include <algorithm>
#include <cmath>

namespace ddpglab {
namespace {

void validate_sizes(std::span<const int> layer_sizes) {
  if (layer_sizes.size() < 2) {
    throw std::invalid_argument("an MLP needs at least an input and an output size");
  }
  for (int n : layer_sizes) {
    if (n < 1) throw std::invalid_argument("layer sizes must be positive");
  }
}

void apply_hidden(Activation act, const Eigen::MatrixXd& z, Eigen::MatrixXd& out) {
  switch (act) {
    case Activation::relu:
      out = z.cwiseMax(0.0);
      break;
    case Activation::tanh:
      out = z.array().tanh().matrix();
      break;
  }
}

// Multiplies `grad` in place by the hidden activation derivative, using the
// post-activation values `a` (relu: a > 0, tanh: 1 - a^2).
void scale_by_hidden_derivative(Activation act, const Eigen::MatrixXd& a,
                                Eigen::MatrixXd& grad) {
  switch (act) {
    case Activation::relu:
      grad = (a.array() > 0.0).select(grad, 0.0);
      break;
    case Activation::tanh:
      grad.array() *= 1.0 - a.array().square();
      break;
  }
}

void apply_output(const OutputTransform& t, const Eigen::MatrixXd& z, Eigen::MatrixXd& out) {
  if (t.kind == OutputTransform::Kind::identity) {
    out = z;
    return;
  }
  // tanh rounds to exactly +-1 for |z| > ~19; keep the bound strict.
  const double cap = std::nextafter(t.limit, 0.0);
  out = (t.limit * z.array().tanh()).cwiseMax(-cap).cwiseMin(cap).matrix();
}

void check_cache(const MlpParams& params, const ForwardCache& cache) {
  if (cache.source != &params || cache.revision != params.revision ||
      cache.layer_inputs.size() != params.num_layers() ||
      cache.pre_activations.size() != params.num_layers()) {
    throw std::invalid_argument("stale or mismatched forward cache");
  }
}

}  // namespace

std::size_t MlpParams::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    n += static_cast<std::size_t>(weights[k].size() + biases[k].size());
  }
  return n;
}

bool MlpParams::all_finite() const {
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (!weights[k].allFinite() || !biases[k].allFinite()) return false;
  }
  return true;
}

MlpParams make_mlp(std::span<const int> layer_sizes, Activation hidden,
                   OutputTransform output) {
  validate_sizes(layer_sizes);
  MlpParams p;
  p.layer_sizes.assign(layer_sizes.begin(), layer_sizes.end());
  p.hidden_activation = hidden;
  p.output_transform = output;
  for (std::size_t k = 0; k + 1 < layer_sizes.size(); ++k) {
    p.weights.push_back(Eigen::MatrixXd::Zero(layer_sizes[k + 1], layer_sizes[k]));
    p.biases.push_back(Eigen::VectorXd::Zero(layer_sizes[k + 1]));
  }
  return p;
}

MlpParams init_mlp(std::span<const int> layer_sizes, Activation hidden,
                   OutputTransform output, Rng& rng) {
  MlpParams p = make_mlp(layer_sizes, hidden, output);
  for (auto& w : p.weights) {
    const double bound = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    // Column-major fill order is part of the reproducibility contract.
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = rng.uniform(-bound, bound);
  }
  return p;
}

MlpGradients MlpGradients::zeros_like(const MlpParams& params) {
  MlpGradients g;
  for (std::size_t k = 0; k < params.num_layers(); ++k) {
    g.weights.push_back(Eigen::MatrixXd::Zero(params.weights[k].rows(), params.weights[k].cols()));
    g.biases.push_back(Eigen::VectorXd::Zero(params.biases[k].size()));
  }
  return g;
}

void MlpGradients::set_zero() {
  for (auto& w : weights) w.setZero();
  for (auto& b : biases) b.setZero();
}

double MlpGradients::max_abs() const {
  double m = 0.0;
  for (const auto& w : weights) m = std::max(m, w.cwiseAbs().maxCoeff());
  for (const auto& b : biases) m = std::max(m, b.cwiseAbs().maxCoeff());
  return m;
}

bool MlpGradients::all_finite() const {
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (!weights[k].allFinite() || !biases[k].allFinite()) return false;
  }
  return true;
}

void forward(const MlpParams& params, const Eigen::Ref<const Eigen::MatrixXd>& input,
             ForwardCache& cache) {
  if (input.rows() != params.input_dim()) {
    throw std::invalid_argument("input dimension does not match the network");
  }
  const std::size_t layers = params.num_layers();
  cache.layer_inputs.resize(layers);
  cache.pre_activations.resize(layers);
  cache.layer_inputs[0] = input;
  for (std::size_t k = 0; k < layers; ++k) {
    Eigen::MatrixXd& z = cache.pre_activations[k];
    z.noalias() = params.weights[k] * cache.layer_inputs[k];
    z.colwise() += params.biases[k];
    if (k + 1 < layers) {
      apply_hidden(params.hidden_activation, z, cache.layer_inputs[k + 1]);
    } else {
      apply_output(params.output_transform, z, cache.output);
    }
  }
  cache.source = &params;
  cache.revision = params.revision;
}

Eigen::MatrixXd evaluate(const MlpParams& params,
                         const Eigen::Ref<const Eigen::MatrixXd>& input) {
  thread_local ForwardCache cache;
  forward(params, input, cache);
  cache.source = nullptr;
  return cache.output;
}

Eigen::VectorXd evaluate(const MlpParams& params, std::span<const double> input) {
  const Eigen::Map<const Eigen::MatrixXd> x(input.data(), static_cast<Eigen::Index>(input.size()), 1);
  return evaluate(params, x).col(0);
}

void backward(const MlpParams& params, const ForwardCache& cache,
              const Eigen::Ref<const Eigen::MatrixXd>& output_grad,
              MlpGradients* param_grads, Eigen::MatrixXd* input_grad) {
  check_cache(params, cache);
  if (output_grad.rows() != cache.output.rows() || output_grad.cols() != cache.output.cols()) {
    throw std::invalid_argument("output gradient shape does not match the cached forward pass");
  }
  if (param_grads != nullptr && param_grads->weights.size() != params.num_layers()) {
    *param_grads = MlpGradients::zeros_like(params);
  }

  thread_local Eigen::MatrixXd delta;
  thread_local Eigen::MatrixXd upstream;

  const std::size_t layers = params.num_layers();
  const auto& out_t = params.output_transform;
  if (out_t.kind == OutputTransform::Kind::identity) {
    delta = output_grad;
  } else {
    // d/dz [L tanh z] = L (1 - tanh^2 z); recompute tanh from z for accuracy.
    delta = (output_grad.array() * out_t.limit *
             (1.0 - cache.pre_activations.back().array().tanh().square()))
                .matrix();
  }

  for (std::size_t k = layers; k-- > 0;) {
    if (param_grads != nullptr) {
      param_grads->weights[k].noalias() = delta * cache.layer_inputs[k].transpose();
      param_grads->biases[k] = delta.rowwise().sum();
    }
    if (k == 0) {
      if (input_grad != nullptr) input_grad->noalias() = params.weights[0].transpose() * delta;
      break;
    }
    upstream.noalias() = params.weights[k].transpose() * delta;
    scale_by_hidden_derivative(params.hidden_activation, cache.layer_inputs[k], upstream);
    delta.swap(upstream);
  }
}

AdamState AdamState::for_params(const MlpParams& params, double learning_rate,
                                double beta1, double beta2, double epsilon) {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
  AdamState s;
  s.learning_rate = learning_rate;
  s.beta1 = beta1;
  s.beta2 = beta2;
  s.epsilon = epsilon;
  for (std::size_t k = 0; k < params.num_layers(); ++k) {
    const auto& w = params.weights[k];
    s.weight_m.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
    s.weight_v.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
    s.bias_m.push_back(Eigen::VectorXd::Zero(params.biases[k].size()));
    s.bias_v.push_back(Eigen::VectorXd::Zero(params.biases[k].size()));
  }
  return s;
}

namespace {

template <typename Param, typename Grad>
void adam_update(Param& p, Param& m, Param& v, const Grad& g, double b1, double b2,
                 double step_size, double inv_sqrt_bc2, double eps) {
  m = b1 * m + (1.0 - b1) * g;
  v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
  p.array() -= step_size * m.array() / (v.array().sqrt() * inv_sqrt_bc2 + eps);
}

}  // namespace

void adam_step(AdamState& state, MlpParams& params, const MlpGradients& grads) {
  if (grads.weights.size() != params.num_layers() || state.weight_m.size() != params.num_layers()) {
    throw std::invalid_argument("Adam state, gradients and parameters disagree in shape");
  }
  if (!grads.all_finite()) {
    throw DivergenceError("non-finite gradient reached the optimizer");
  }
  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  const double bc1 = 1.0 - std::pow(state.beta1, t);
  const double bc2 = 1.0 - std::pow(state.beta2, t);
  const double step_size = state.learning_rate / bc1;
  const double inv_sqrt_bc2 = 1.0 / std::sqrt(bc2);
  for (std::size_t k = 0; k < params.num_layers(); ++k) {
    adam_update(params.weights[k], state.weight_m[k], state.weight_v[k], grads.weights[k],
                state.beta1, state.beta2, step_size, inv_sqrt_bc2, state.epsilon);
    adam_update(params.biases[k], state.bias_m[k], state.bias_v[k], grads.biases[k],
                state.beta1, state.beta2, step_size, inv_sqrt_bc2, state.epsilon);
  }
  params.revision += 1;
}

void polyak_update(MlpParams& target, const MlpParams& source, double rho) {
  if (!(rho >= 0.0 && rho <= 1.0)) throw std::invalid_argument("polyak coefficient must lie in [0, 1]");
  if (target.layer_sizes != source.layer_sizes) {
    throw std::invalid_argument("polyak update between networks of different shapes");
  }
  for (std::size_t k = 0; k < target.num_layers(); ++k) {
    target.weights[k] = rho * target.weights[k] + (1.0 - rho) * source.weights[k];
    target.biases[k] = rho * target.biases[k] + (1.0 - rho) * source.biases[k];
  }
  target.revision += 1;
}

namespace {

bool crosses_kink(const MlpParams& params, const ForwardCache& base, const ForwardCache& other) {
  if (params.hidden_activation != Activation::relu) return false;
  for (std::size_t k = 0; k + 1 < base.pre_activations.size(); ++k) {
    const auto& z0 = base.pre_activations[k];
    const auto& z1 = other.pre_activations[k];
    for (Eigen::Index i = 0; i < z0.size(); ++i) {
      if ((z0.data()[i] > 0.0) != (z1.data()[i] > 0.0)) return true;
    }
  }
  return false;
}

}  // namespace

GradientCheckResult gradient_check_detailed(const MlpParams& params, std::span<const double> input,
                                            std::span<const double> probe, double step) {
  if (static_cast<int>(input.size()) != params.input_dim() ||
      static_cast<int>(probe.size()) != params.output_dim()) {
    throw std::invalid_argument("gradient_check: input or probe has the wrong length");
  }
  const Eigen::Map<const Eigen::VectorXd> x(input.data(), static_cast<Eigen::Index>(input.size()));
  const Eigen::Map<const Eigen::VectorXd> w(probe.data(), static_cast<Eigen::Index>(probe.size()));

  ForwardCache base;
  forward(params, x, base);
  MlpGradients analytic = MlpGradients::zeros_like(params);
  Eigen::MatrixXd input_grad;
  backward(params, base, w, &analytic, &input_grad);

  GradientCheckResult result;
  ForwardCache up_cache, down_cache;
  // Central difference of L at the perturbed (params, input); skipped pairs
  // are counted and left out of the error.
  auto check = [&](const MlpParams& p_up, const Eigen::VectorXd& x_up, const MlpParams& p_down,
                   const Eigen::VectorXd& x_down, double g) {
    forward(p_up, x_up, up_cache);
    const double up = w.dot(up_cache.output.col(0));
    const bool kink_up = crosses_kink(params, base, up_cache);
    forward(p_down, x_down, down_cache);
    const double down = w.dot(down_cache.output.col(0));
    if (kink_up || crosses_kink(params, base, down_cache)) {
      ++result.kink_skipped;
      return;
    }
    ++result.compared;
    const double numeric = (up - down) / (2.0 * step);
    const double diff = std::abs(g - numeric);
    if (diff <= 1e-8) return;
    result.max_relative_error =
        std::max(result.max_relative_error, diff / std::max(std::abs(g), std::abs(numeric)));
  };

  MlpParams up = params;
  MlpParams down = params;
  const Eigen::VectorXd x0 = x;
  for (std::size_t k = 0; k < params.num_layers(); ++k) {
    auto perturb = [&](double* up_slot, double* down_slot, double g) {
      const double saved = *up_slot;
      *up_slot = saved + step;
      *down_slot = saved - step;
      check(up, x0, down, x0, g);
      *up_slot = saved;
      *down_slot = saved;
    };
    for (Eigen::Index i = 0; i < params.weights[k].size(); ++i) {
      perturb(up.weights[k].data() + i, down.weights[k].data() + i, analytic.weights[k].data()[i]);
    }
    for (Eigen::Index i = 0; i < params.biases[k].size(); ++i) {
      perturb(up.biases[k].data() + i, down.biases[k].data() + i, analytic.biases[k].data()[i]);
    }
  }
  Eigen::VectorXd xu = x0, xd = x0;
  for (Eigen::Index i = 0; i < x0.size(); ++i) {
    xu[i] = x0[i] + step;
    xd[i] = x0[i] - step;
    check(params, xu, params, xd, input_grad(i, 0));
    xu[i] = x0[i];
    xd[i] = x0[i];
  }
  return result;
}

double gradient_check(const MlpParams& params, std::span<const double> input,
                      std::span<const double> probe, double step) {
  return gradient_check_detailed(params, input, probe, step).max_relative_error;
}

GradientCheckSummary random_gradient_checks(int count, Rng& rng) {
  GradientCheckSummary out;
  for (int n = 0; n < count; ++n) {
    std::vector<int> sizes;
    Activation act = Activation::relu;
    OutputTransform head = OutputTransform::identity();
    switch (n % 3) {
      case 0:
        sizes = {2, 64, 64, 1};
        break;
      case 1:
        sizes = {1, 64, 64, 1};
        head = OutputTransform::scaled_tanh(0.1);
        break;
      default:
        sizes = {2, 1 + static_cast<int>(rng.below(8)), 1 + static_cast<int>(rng.below(8)), 1};
        act = Activation::tanh;
        break;
    }
    MlpParams p = init_mlp(sizes, act, head, rng);
    for (auto& b : p.biases) {
      for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = rng.uniform(-0.1, 0.1);
    }
    std::vector<double> input{rng.uniform01()};
    if (sizes.front() == 2) input.push_back(rng.uniform(-0.1, 0.1));
    const std::vector<double> probe{rng.uniform01() < 0.5 ? -1.0 : 1.0};
    const GradientCheckResult r = gradient_check_detailed(p, input, probe);
    const double err = r.max_relative_error;
    out.compared += r.compared;
    out.kink_skipped += r.kink_skipped;
    ++out.nets;
    if (err > out.max_relative_error || out.worst_net < 0) {
      out.max_relative_error = std::max(out.max_relative_error, err);
      out.worst_net = n;
    }
  }
  return out;
}

}  // namespace ddpglab
