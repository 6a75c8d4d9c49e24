#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "amis/error.hpp"
#include "helpers.hpp"

using namespace amis;
using amis::testing::constant_control;

namespace {

DiffusionProblem brownian(int dim, int steps, double horizon = 1.0) {
  DiffusionProblem p;
  p.state_dim = p.noise_dim = dim;
  p.horizon = horizon;
  p.num_steps = steps;
  p.x0 = Eigen::VectorXd::Zero(dim);
  p.functional = CostFunctional{{}, [](std::span<const double>) { return 0.0; }};
  return p;
}

}  // namespace

TEST_CASE("zero noise and zero control leave the state at x0") {
  auto p = brownian(2, 10);
  p.x0 = Eigen::Vector2d(0.5, -1.5);
  const auto path = integrate_path(p, FeedbackControl::zero(2), std::vector<double>(20, 0.0));
  for (int i = 0; i <= 10; ++i) {
    CHECK(path.state(i)[0] == 0.5);
    CHECK(path.state(i)[1] == -1.5);
  }
}

TEST_CASE("constant control with zero noise integrates to x0 + A T") {
  auto p = brownian(3, 100, 2.0);
  const auto path = integrate_path(p, constant_control({1.0, -0.5, 0.25}), std::vector<double>(300, 0.0));
  CHECK(path.terminal_state()[0] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(path.terminal_state()[1] == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(path.terminal_state()[2] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("terminal variance of Brownian motion is T") {
  const auto p = brownian(1, 100);
  const int n = 100000;
  double m = 0.0, m2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = simulate_path(p, FeedbackControl::zero(1), 3, 0, i).terminal_state()[0];
    m += x;
    m2 += x * x;
  }
  m /= n;
  const double var = (m2 - n * m * m) / (n - 1);
  CHECK(var == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("paths replay bit-identically from their stream key and stored noise") {
  auto p = problems::gaussian_target();
  const auto u = FeedbackControl(Basis::affine(3), Eigen::MatrixXd::Random(3, 4));
  const auto a = simulate_path(p, u, 42, 3, 7);
  const auto b = simulate_path(p, u, 42, 3, 7);
  CHECK(a.states == b.states);
  CHECK(a.noise == b.noise);
  const auto c = integrate_path(p, u, a.noise, 3, 7);
  CHECK(c.states == a.states);
  CHECK(simulate_path(p, u, 42, 3, 8).noise != a.noise);
}

TEST_CASE("girsanov log-weight") {
  SUBCASE("zero control gives zero") {
    const auto p = problems::gaussian_target();
    const auto path = simulate_path(p, FeedbackControl::zero(3), 1, 0, 0);
    CHECK(girsanov_log_weight(p, path, FeedbackControl::zero(3)) == 0.0);
  }
  SUBCASE("constant control on a three-step path matches the hand sum") {
    const auto p = brownian(2, 3, 1.5);
    const auto u = constant_control({0.7, -1.1});
    const std::vector<double> dw = {0.1, -0.2, 0.3, 0.05, -0.4, 0.25};
    const auto path = integrate_path(p, u, dw);
    const double sum0 = 0.1 + 0.3 - 0.4, sum1 = -0.2 + 0.05 + 0.25;
    const double expected = -(0.7 * sum0 - 1.1 * sum1) - 0.5 * (0.49 + 1.21) * 1.5;
    CHECK(girsanov_log_weight(p, path, u) == doctest::Approx(expected).epsilon(1e-14));
  }
  SUBCASE("equals the cross ratio against the zero control") {
    const auto p = problems::gaussian_target();
    const auto u = FeedbackControl(Basis::affine(3), Eigen::MatrixXd::Random(3, 4));
    for (int n = 0; n < 20; ++n) {
      const auto path = simulate_path(p, u, 9, 0, n);
      CHECK(girsanov_log_weight(p, path, u) == cross_log_ratio(p, path, u, FeedbackControl::zero(3)));
    }
  }
  SUBCASE("likelihood ratio has unit mean under the proposal") {
    const auto p = brownian(2, 20);
    const auto u = FeedbackControl(Basis::affine(2), (Eigen::MatrixXd(2, 3) << 0.5, -0.3, 0.1, -0.2, 0.0, 0.4).finished(),
                                   1.0);
    for (int n : {1000, 10000, 100000}) {
      std::vector<double> ratios;
      for (int i = 0; i < n; ++i) ratios.push_back(std::exp(girsanov_log_weight(p, simulate_path(p, u, 5, n, i), u)));
      const auto ms = amis::testing::mean_se(ratios);
      CHECK(std::abs(ms.mean - 1.0) < 3.0 * ms.se);
    }
  }
}

TEST_CASE("cross log ratio") {
  const auto p = problems::gaussian_target();
  const auto a = FeedbackControl(Basis::affine(3), Eigen::MatrixXd::Random(3, 4));
  const auto b = constant_control(3, 0.8);
  const auto path = simulate_path(p, a, 2, 0, 0);
  CHECK(cross_log_ratio(p, path, a, a) == 0.0);
  const auto as_b = rebase_increments(p, path, a, b);
  const double forward = cross_log_ratio(p, path, a, b);
  CHECK(std::abs(forward + cross_log_ratio(p, as_b, b, a)) <= 1e-12 * std::max(1.0, std::abs(forward)));
  CHECK(as_b.states == path.states);

  SUBCASE("one-step problem reproduces the Gaussian density ratio") {
    const auto q = problems::one_step_gaussian();
    const auto u1 = constant_control({1.0}), u3 = constant_control({3.0});
    const auto step = simulate_path(q, u1, 4, 0, 0);
    const double x = step.terminal_state()[0];
    const double ratio = std::exp(-0.5 * (x - 3.0) * (x - 3.0)) / std::exp(-0.5 * (x - 1.0) * (x - 1.0));
    CHECK(std::exp(cross_log_ratio(q, step, u1, u3)) == doctest::Approx(ratio).epsilon(1e-10));
  }
}

TEST_CASE("path cost") {
  const auto p = problems::gaussian_target();
  SUBCASE("zero control reduces to the terminal cost") {
    const auto path = simulate_path(p, FeedbackControl::zero(3), 1, 0, 0);
    const auto x = path.terminal_state();
    double qc = 0.0;
    for (int i = 0; i < 3; ++i) qc += 0.5 * (x[i] - 2.0) * (x[i] - 2.0);
    CHECK(path_cost(p, path, FeedbackControl::zero(3)) == doctest::Approx(qc).epsilon(1e-14));
  }
  SUBCASE("exp(-S) = h dQ/dP") {
    for (int n = 0; n < 50; ++n) {
      const auto u = FeedbackControl(Basis::affine(3), Eigen::MatrixXd::Random(3, 4));
      const auto path = simulate_path(p, u, 17, 1, n);
      const double lhs = -path_cost(p, path, u);
      const double rhs = p.log_h(path) + girsanov_log_weight(p, path, u);
      CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(rhs)));
    }
  }
  SUBCASE("mean of exp(-S) under the target dynamics") {
    const auto samples = kernels::generate_batch_parallel(p, FeedbackControl::zero(3), 2024, 0, 1000000);
    std::vector<double> v;
    v.reserve(samples.size());
    for (const auto& s : samples) v.push_back(std::exp(-s.cost));
    const auto ms = amis::testing::mean_se(v);
    const double truth = std::pow(2.0, -1.5) * std::exp(-3.0);
    CHECK(truth == doctest::Approx(0.017603).epsilon(1e-4));
    CHECK(std::abs(ms.mean - truth) < 3.0 * ms.se);
  }
  SUBCASE("generic functionals have no cost form") {
    DiffusionProblem q = p;
    q.functional = PathFunctional{[](const SamplePath&) { return 1.0; }};
    const auto path = simulate_path(q, FeedbackControl::zero(3), 1, 0, 0);
    CHECK_THROWS_AS(path_cost(q, path, FeedbackControl::zero(3)), ConfigError);
  }
}

TEST_CASE("errors") {
  const auto p = problems::gaussian_target();
  SUBCASE("grid mismatch is structural") {
    const auto other = problems::gaussian_target(3, 2.0, 50);
    const auto path = simulate_path(other, FeedbackControl::zero(3), 1, 0, 0);
    CHECK_THROWS_AS(girsanov_log_weight(p, path, FeedbackControl::zero(3)), StructuralError);
    CHECK_THROWS_AS(cross_log_ratio(p, path, FeedbackControl::zero(3), FeedbackControl::zero(3)), StructuralError);
  }
  SUBCASE("non-finite states report the step") {
    auto q = brownian(1, 50);
    q.x0 = Eigen::VectorXd::Constant(1, 1.0);
    q.drift = [](double, std::span<const double> x, std::span<double> out) { out[0] = 1e200 * x[0]; };
    try {
      simulate_path(q, FeedbackControl::zero(1), 1, 0, 0);
      FAIL("expected a simulation error");
    } catch (const SimulationError& e) {
      CHECK(e.step() >= 0);
      CHECK(e.step() < 50);
    }
  }
  SUBCASE("negative h is rejected by the unsigned estimator") {
    DiffusionProblem q = p;
    q.functional = PathFunctional{[](const SamplePath&) { return -1.0; }};
    const auto path = simulate_path(q, FeedbackControl::zero(3), 1, 0, 0);
    CHECK_THROWS_AS(q.log_h(path), ConfigError);
  }
}

TEST_CASE("clamped controls stay within the bound") {
  const auto u = FeedbackControl(Basis::affine(2), Eigen::MatrixXd::Constant(2, 3, 10.0), 1.5);
  const std::vector<double> x = {3.0, -7.0};
  const auto v = u(0.3, x);
  CHECK(v.cwiseAbs().maxCoeff() <= 1.5);
  CHECK(v[0] == -1.5);
}

TEST_CASE("bases") {
  const std::vector<double> x = {0.5, -2.0};
  std::vector<double> g(3);
  Basis::affine(2).evaluate(0.1, x, g);
  CHECK(g == std::vector<double>{1.0, 0.5, -2.0});

  const auto pw = Basis::piecewise_constant_time(Basis::affine(2), 4, 1.0);
  CHECK(pw.size() == 12);
  std::vector<double> h(12);
  for (double t : {0.0, 0.3, 0.6, 0.99}) {
    pw.evaluate(t, x, h);
    int nonzero_blocks = 0;
    for (int b = 0; b < 4; ++b) {
      bool any = false;
      for (int i = 0; i < 3; ++i) any = any || h[static_cast<std::size_t>(3 * b + i)] != 0.0;
      nonzero_blocks += any;
    }
    CHECK(nonzero_blocks == 1);
    CHECK(pw.active_block(t) == static_cast<int>(t * 4));
  }
  CHECK_THROWS_AS(Basis::piecewise_constant_time(pw, 2, 1.0), ConfigError);
}
