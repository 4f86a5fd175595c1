#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "ddpglab/net.hpp"

using namespace ddpglab;

namespace {

MlpParams critic_net(std::uint64_t seed) {
  Rng rng(seed);
  const std::vector<int> sizes{2, 64, 64, 1};
  return init_mlp(sizes, Activation::relu, OutputTransform::identity(), rng);
}

MlpParams actor_net(std::uint64_t seed) {
  Rng rng(seed);
  const std::vector<int> sizes{1, 64, 64, 1};
  return init_mlp(sizes, Activation::relu, OutputTransform::scaled_tanh(0.1), rng);
}

bool same_params(const MlpParams& a, const MlpParams& b) {
  if (a.num_layers() != b.num_layers()) return false;
  for (std::size_t k = 0; k < a.num_layers(); ++k) {
    if (a.weights[k] != b.weights[k] || a.biases[k] != b.biases[k]) return false;
  }
  return true;
}

}  // namespace

TEST_SUITE("net") {

TEST_CASE("Xavier bounds for the default actor shape") {
  const MlpParams p = actor_net(0);
  for (std::size_t k = 0; k < p.num_layers(); ++k) {
    const auto& w = p.weights[k];
    const double bound = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    CHECK(w.cwiseAbs().maxCoeff() <= bound);
    CHECK(w.cwiseAbs().maxCoeff() <= std::sqrt(6.0 / 65.0));
    CHECK(p.biases[k].isZero(0.0));
  }
  CHECK(p.weights[0].rows() == 64);
  CHECK(p.weights[0].cols() == 1);
  CHECK(p.weights[1].rows() == 64);
  CHECK(p.weights[2].cols() == 64);
}

TEST_CASE("Xavier bound for a 2 -> 1 layer is sqrt(2)") {
  Rng rng(3);
  const std::vector<int> sizes{2, 1};
  double largest = 0.0;
  for (int i = 0; i < 2000; ++i) {
    const MlpParams p = init_mlp(sizes, Activation::relu, OutputTransform::identity(), rng);
    largest = std::max(largest, p.weights[0].cwiseAbs().maxCoeff());
  }
  CHECK(largest <= std::sqrt(2.0));
  CHECK(largest > 0.99 * std::sqrt(2.0));
}

TEST_CASE("init is deterministic and rejects bad sizes") {
  CHECK(same_params(critic_net(5), critic_net(5)));
  CHECK_FALSE(same_params(critic_net(5), critic_net(6)));
  Rng rng(0);
  const std::vector<int> empty;
  const std::vector<int> one{3};
  const std::vector<int> zero{2, 0, 1};
  CHECK_THROWS_AS(init_mlp(empty, Activation::relu, {}, rng), std::invalid_argument);
  CHECK_THROWS_AS(init_mlp(one, Activation::relu, {}, rng), std::invalid_argument);
  CHECK_THROWS_AS(init_mlp(zero, Activation::relu, {}, rng), std::invalid_argument);
}

TEST_CASE("zero network outputs zero") {
  const std::vector<int> sizes{2, 8, 1};
  const MlpParams p = make_mlp(sizes, Activation::tanh, OutputTransform::identity());
  const double x[2] = {0.7, -0.05};
  CHECK(evaluate(p, x)[0] == 0.0);
}

TEST_CASE("identity-like 1 -> 1 net") {
  const std::vector<int> sizes{1, 1};
  MlpParams p = make_mlp(sizes, Activation::relu, OutputTransform::identity());
  p.weights[0](0, 0) = 1.0;
  const double x[1] = {0.3};
  CHECK(evaluate(p, x)[0] == 0.3);
}

TEST_CASE("scaled tanh output stays strictly inside the action bound") {
  MlpParams p = actor_net(1);
  for (auto& w : p.weights) w *= 1e3;
  Eigen::RowVectorXd inputs(5);
  inputs << -1e6, -1.0, 0.0, 1.0, 1e6;
  const Eigen::MatrixXd out = evaluate(p, inputs);
  for (Eigen::Index i = 0; i < out.cols(); ++i) {
    CHECK(std::abs(out(0, i)) < 0.1);
  }
  CHECK(out.cwiseAbs().maxCoeff() > 0.0999);
}

TEST_CASE("forward rejects a wrong input dimension") {
  const MlpParams p = critic_net(0);
  const Eigen::MatrixXd bad = Eigen::MatrixXd::Zero(3, 4);
  ForwardCache cache;
  CHECK_THROWS_AS(forward(p, bad, cache), std::invalid_argument);
}

TEST_CASE("backward: zero output gradient gives zero gradients") {
  const MlpParams p = critic_net(2);
  const Eigen::Vector2d x(0.4, 0.05);
  ForwardCache cache;
  forward(p, x, cache);
  MlpGradients g = MlpGradients::zeros_like(p);
  Eigen::MatrixXd dx;
  backward(p, cache, Eigen::MatrixXd::Zero(1, 1), &g, &dx);
  CHECK(g.max_abs() == 0.0);
  CHECK(dx.isZero(0.0));
  CHECK(dx.rows() == 2);
}

TEST_CASE("backward: chain rule by hand on a 1 -> 1 linear net") {
  const std::vector<int> sizes{1, 1};
  MlpParams p = make_mlp(sizes, Activation::relu, OutputTransform::identity());
  p.weights[0](0, 0) = 2.0;
  ForwardCache cache;
  forward(p, Eigen::MatrixXd::Constant(1, 1, 0.5), cache);
  MlpGradients g = MlpGradients::zeros_like(p);
  Eigen::MatrixXd dx;
  backward(p, cache, Eigen::MatrixXd::Ones(1, 1), &g, &dx);
  CHECK(g.weights[0](0, 0) == 0.5);
  CHECK(g.biases[0][0] == 1.0);
  CHECK(dx(0, 0) == 2.0);
}

TEST_CASE("backward rejects stale and mismatched caches") {
  MlpParams p = critic_net(3);
  const MlpParams other = critic_net(4);
  const Eigen::Vector2d x(0.2, 0.0);
  ForwardCache cache;
  forward(p, x, cache);
  MlpGradients g = MlpGradients::zeros_like(p);
  const Eigen::MatrixXd one = Eigen::MatrixXd::Ones(1, 1);
  CHECK_NOTHROW(backward(p, cache, one, &g, nullptr));
  CHECK_THROWS_AS(backward(other, cache, one, &g, nullptr), std::invalid_argument);

  AdamState opt = AdamState::for_params(p, 1e-3);
  adam_step(opt, p, g);
  CHECK_THROWS_AS(backward(p, cache, one, &g, nullptr), std::invalid_argument);

  forward(p, x, cache);
  MlpParams target = p;
  polyak_update(p, target, 0.5);
  CHECK_THROWS_AS(backward(p, cache, one, &g, nullptr), std::invalid_argument);
}

TEST_CASE("gradient check on fresh networks") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const double sa[2] = {0.3 + 0.1 * static_cast<double>(seed), -0.02};
    const double s[1] = {0.1 * static_cast<double>(seed)};
    const double probe[1] = {1.0};
    CHECK(gradient_check(critic_net(seed), sa, probe) <= 1e-4);
    CHECK(gradient_check(actor_net(seed), s, probe) <= 1e-4);
  }
}

TEST_CASE("gradient check of the zero network is exactly 0") {
  const std::vector<int> sizes{2, 16, 16, 1};
  const MlpParams p = make_mlp(sizes, Activation::relu, OutputTransform::identity());
  const double x[2] = {0.5, 0.01};
  const double probe[1] = {1.0};
  const GradientCheckResult r = gradient_check_detailed(p, x, probe);
  CHECK(r.max_relative_error == 0.0);
  CHECK(r.compared > 0);
}

TEST_CASE("100 random nets pass the gradient check") {
  Rng rng(2024);
  const GradientCheckSummary s = random_gradient_checks(100, rng);
  CHECK(s.nets == 100);
  CHECK(s.max_relative_error <= 1e-4);
  CHECK(s.kink_skipped * 100 <= s.compared);
}

TEST_CASE("Adam: zero gradients at step 0 leave parameters unchanged") {
  MlpParams p = critic_net(1);
  const MlpParams before = p;
  AdamState opt = AdamState::for_params(p, 1e-3);
  MlpGradients g = MlpGradients::zeros_like(p);
  adam_step(opt, p, g);
  CHECK(same_params(p, before));
  CHECK(opt.step_count == 1);
}

TEST_CASE("Adam: first step on a scalar moves by about the learning rate") {
  const std::vector<int> sizes{1, 1};
  MlpParams p = make_mlp(sizes, Activation::relu, OutputTransform::identity());
  AdamState opt = AdamState::for_params(p, 1e-3, 0.9, 0.999, 1e-8);
  MlpGradients g = MlpGradients::zeros_like(p);
  g.weights[0](0, 0) = 1.0;
  adam_step(opt, p, g);
  // m = 0.1, v = 0.001; m_hat = 1, v_hat = 1; step = a * 1 / (1 + eps).
  const double expected = -1e-3 / (1.0 + 1e-8);
  CHECK(p.weights[0](0, 0) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(p.biases[0][0] == 0.0);
}

TEST_CASE("Adam: constant gradient moves against its sign") {
  const std::vector<int> sizes{1, 1};
  MlpParams p = make_mlp(sizes, Activation::relu, OutputTransform::identity());
  AdamState opt = AdamState::for_params(p, 1e-3);
  MlpGradients g = MlpGradients::zeros_like(p);
  g.weights[0](0, 0) = -0.3;
  g.biases[0][0] = 2.0;
  for (int i = 0; i < 50; ++i) adam_step(opt, p, g);
  CHECK(p.weights[0](0, 0) > 0.0);
  CHECK(p.biases[0][0] < 0.0);
  CHECK(opt.step_count == 50);
}

TEST_CASE("Adam: non-finite gradients raise DivergenceError") {
  MlpParams p = critic_net(1);
  AdamState opt = AdamState::for_params(p, 1e-3);
  MlpGradients g = MlpGradients::zeros_like(p);
  g.weights[1](3, 4) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(adam_step(opt, p, g), DivergenceError);
}

TEST_CASE("Polyak update") {
  const std::vector<int> sizes{2, 3, 1};
  MlpParams source = make_mlp(sizes, Activation::relu, {});
  for (auto& w : source.weights) w.setOnes();
  for (auto& b : source.biases) b.setOnes();

  SUBCASE("rho = 0 copies") {
    MlpParams target = make_mlp(sizes, Activation::relu, {});
    target.weights[0].setConstant(7.0);
    polyak_update(target, source, 0.0);
    CHECK(same_params(target, source));
  }
  SUBCASE("rho = 1 keeps the target") {
    MlpParams target = make_mlp(sizes, Activation::relu, {});
    polyak_update(target, source, 1.0);
    CHECK(target.weights[0].isZero(0.0));
  }
  SUBCASE("0 towards 1 with rho = 0.995") {
    MlpParams target = make_mlp(sizes, Activation::relu, {});
    polyak_update(target, source, 0.995);
    CHECK(target.weights[0](0, 0) == doctest::Approx(0.005).epsilon(1e-12));
  }
  SUBCASE("geometric convergence to a fixed source") {
    MlpParams target = make_mlp(sizes, Activation::relu, {});
    for (int k = 1; k <= 200; ++k) {
      polyak_update(target, source, 0.9);
      CHECK(1.0 - target.biases[1][0] == doctest::Approx(std::pow(0.9, k)).epsilon(1e-9));
    }
  }
  SUBCASE("shape mismatch is rejected") {
    const std::vector<int> other{2, 4, 1};
    MlpParams target = make_mlp(other, Activation::relu, {});
    CHECK_THROWS_AS(polyak_update(target, source, 0.5), std::invalid_argument);
  }
}

}
