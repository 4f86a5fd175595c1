#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "ddpglab/env.hpp"

using namespace ddpglab;

TEST_SUITE("env") {

TEST_CASE("reset starts at s = 0") {
  CHECK(reset(EnvSpec{EnvKind::one_d_toy, 50}).s == 0.0);
  CHECK(reset(EnvSpec{EnvKind::drift, 50}).s == 0.0);
  EnvSpec spec;
  Episode ep = reset(spec);
  for (int i = 0; i < 5; ++i) advance(spec, ep, 0.1);
  ep = reset(spec);
  CHECK(ep.s == 0.0);
  CHECK(ep.steps == 0);
}

TEST_CASE("step examples") {
  const EnvSpec toy;
  const Transition a = step(toy, 0.0, -0.05);
  CHECK(a.s_next == 0.0);
  CHECK(a.r == 1.0);
  CHECK(a.terminal == 1.0);

  const Transition b = step(toy, 0.5, 0.1);
  CHECK(b.s_next == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(b.r == 0.0);
  CHECK(b.terminal == 0.0);

  const Transition c = step(toy, 0.95, 0.1);
  CHECK(c.s_next == 1.0);
  CHECK(c.r == 0.0);
  CHECK(c.terminal == 0.0);
}

TEST_CASE("s + a = 0 exactly is not rewarded") {
  const Transition t = step(EnvSpec{}, 0.1, -0.1);
  CHECK(t.r == 0.0);
  CHECK(t.s_next == 0.0);
}

TEST_CASE("out-of-range inputs are rejected") {
  const EnvSpec toy;
  CHECK_THROWS_AS(step(toy, -0.01, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(step(toy, 1.01, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(step(toy, 0.5, 0.11), std::invalid_argument);
  CHECK_THROWS_AS(step(toy, 0.5, -0.11), std::invalid_argument);
}

TEST_CASE("drift never rewards") {
  const EnvSpec drift{EnvKind::drift, 50};
  const Transition t = step(drift, 0.02, -0.1);
  CHECK(t.s_next == 0.0);
  CHECK(t.r == 0.0);
  CHECK(t.terminal == 0.0);

  Rng rng(11);
  double sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const Transition d = drift_sample(rng);
    REQUIRE(d.r == 0.0);
    REQUIRE(d.terminal == 0.0);
    REQUIRE(d.a >= -0.1);
    REQUIRE(d.a <= 0.1);
    REQUIRE(d.s_next == std::min(1.0, std::max(0.0, d.s + d.a)));
    sum += d.s;
  }
  CHECK(std::abs(sum / n - 0.5) < 0.01);
}

TEST_CASE("optimal action") {
  CHECK(optimal_action(0.0) == -0.1);
  CHECK(optimal_action(1.0) == -0.1);
  const EnvSpec toy;
  Episode ep = reset(toy);
  const StepOutcome out = advance(toy, ep, optimal_action(ep.s));
  CHECK(out.episode_over);
  CHECK(out.transition.r == 1.0);
  CHECK(out.transition.terminal == 1.0);
  CHECK(ep.steps == 1);
}

TEST_CASE("constant +0.1 runs into the length cap without reward") {
  const EnvSpec toy{EnvKind::one_d_toy, 50};
  Episode ep = reset(toy);
  double total = 0.0;
  StepOutcome out;
  int steps = 0;
  do {
    out = advance(toy, ep, 0.1);
    total += out.transition.r;
    ++steps;
  } while (!out.episode_over);
  CHECK(steps == 50);
  CHECK(total == 0.0);
  // A time-limit cut is not a termination.
  CHECK(out.transition.terminal == 0.0);
  CHECK(out.transition.s_next == 1.0);
}

TEST_CASE("r = t and r in {0, 1} on a 1000 x 1000 grid") {
  const EnvSpec toy;
  for (int i = 0; i < 1000; ++i) {
    const double s = static_cast<double>(i) / 999.0;
    for (int j = 0; j < 1000; ++j) {
      const double a = -0.1 + 0.2 * static_cast<double>(j) / 999.0;
      const Transition t = step(toy, s, a);
      REQUIRE(t.r == t.terminal);
      REQUIRE((t.r == 0.0 || t.r == 1.0));
      REQUIRE(t.r == (s + a < 0.0 ? 1.0 : 0.0));
    }
  }
}

}
