#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "amis/engine.hpp"
#include "amis/error.hpp"
#include "helpers.hpp"

using namespace amis;
using amis::testing::constant_control;

namespace {

AmisConfig fixed_config(ReweightScheme scheme, std::vector<int> schedule, std::uint64_t seed, int dim = 3) {
  AmisConfig c;
  c.scheme = scheme;
  c.adaptation = FixedControl{FeedbackControl::zero(dim)};
  c.schedule = std::move(schedule);
  c.seed = seed;
  c.retention = PathRetention::Full;
  return c;
}

AmisConfig pi_config(ReweightScheme scheme, Basis basis, std::vector<int> schedule, std::uint64_t seed) {
  AmisConfig c;
  c.scheme = scheme;
  c.adaptation = PathIntegralAdaptation{
      std::move(basis),
      scheme.kind == ReweightScheme::Kind::Balance ? AdaptationMode::FullRecompute : AdaptationMode::Incremental,
      std::nullopt,
      {}};
  c.schedule = std::move(schedule);
  c.seed = seed;
  return c;
}

const std::vector<ReweightScheme> kSchemes = {ReweightScheme::flat(), ReweightScheme::balance(),
                                              ReweightScheme::discard_fixed(), ReweightScheme::discard_optimized(),
                                              ReweightScheme::nonmixing()};

}  // namespace

TEST_CASE("plain Monte Carlo on the Gaussian target") {
  const auto p = problems::gaussian_target();
  AmisConfig c = fixed_config(ReweightScheme::flat(), {1000000}, 77);
  c.retention = PathRetention::None;
  c.execution = Execution::Parallel;
  AmisSampler sampler(p, c);
  const auto out = sampler.step();

  std::vector<double> v;
  for (const auto& s : sampler.store().batch(0).samples) v.push_back(std::exp(s.log_value()));
  const auto ms = amis::testing::mean_se(v);
  const double truth = problems::gaussian_target_truth(Eigen::Vector3d::Constant(2.0));
  CHECK(out.psi_hat == doctest::Approx(ms.mean).epsilon(1e-12));
  CHECK(std::abs(out.psi_hat - truth) < 3.0 * ms.se);
  CHECK(-std::log(truth) == doctest::Approx(4.0396).epsilon(1e-4));
  CHECK(std::abs(out.j_hat + std::log(truth)) < 3.0 * ms.se / truth);
}

TEST_CASE("identical proposals collapse to the pooled estimate") {
  const auto p = problems::gaussian_target();
  for (const auto& scheme : kSchemes) {
    if (scheme.kind == ReweightScheme::Kind::NonMixingLastBatch || scheme.kind == ReweightScheme::Kind::DiscardFixed) {
      continue;  // these drop batches by construction
    }
    const auto r = run_amis(p, fixed_config(scheme, {20, 20}, 5));
    const auto pooled = run_amis(p, fixed_config(ReweightScheme::flat(), {20, 20}, 5));
    CHECK(std::abs(std::log(r.iterations.back().psi_hat) - std::log(pooled.iterations.back().psi_hat)) <= 1e-12);
  }
}

TEST_CASE("all schemes agree at K = 1") {
  const auto p = problems::gaussian_target();
  const double flat = run_amis(p, pi_config(ReweightScheme::flat(), Basis::constant(), {50}, 3)).iterations[0].psi_hat;
  for (const auto& scheme : kSchemes) {
    const auto r = run_amis(p, pi_config(scheme, Basis::constant(), {50}, 3));
    CHECK(std::abs(std::log(r.iterations[0].psi_hat) - std::log(flat)) <= 1e-12);
  }
}

TEST_CASE("iteration outputs") {
  const auto p = problems::gaussian_target();
  for (const auto& scheme : kSchemes) {
    const auto r = run_amis(p, pi_config(scheme, Basis::constant(), {3, 1, 4, 1, 5}, 9));
    std::int64_t previous = 0;
    for (std::size_t i = 0; i < r.iterations.size(); ++i) {
      const auto& o = r.iterations[i];
      CHECK(o.k == static_cast<int>(i) + 1);
      CHECK(o.total_samples > previous);
      previous = o.total_samples;
      CHECK(o.ess.ess_hat >= 1.0);
      CHECK(o.ess.ess_hat <= static_cast<double>(o.ess.retained_samples));
      CHECK(o.ess.retained_samples <= o.total_samples);
      CHECK(std::isfinite(o.psi_hat));
      CHECK(std::isfinite(o.j_hat));
    }
    CHECK(previous == 14);
  }
}

TEST_CASE("determinism and execution independence") {
  const auto p = problems::gaussian_target();
  for (const auto& scheme : kSchemes) {
    auto c = pi_config(scheme, Basis::affine(3), AmisConfig::constant_schedule(6, 4), 21);
    const auto a = run_amis(p, c);
    const auto b = run_amis(p, c);
    c.execution = Execution::Parallel;
    const auto par = run_amis(p, c);
    for (std::size_t i = 0; i < a.iterations.size(); ++i) {
      CHECK(a.iterations[i].psi_hat == b.iterations[i].psi_hat);
      CHECK(a.iterations[i].ess.ess_hat == b.iterations[i].ess.ess_hat);
      CHECK(a.iterations[i].psi_hat == par.iterations[i].psi_hat);
      CHECK(a.iterations[i].params_A == par.iterations[i].params_A);
    }
  }
}

TEST_CASE("replayed paths reproduce stored paths") {
  const auto p = problems::gaussian_target();
  auto c = pi_config(ReweightScheme::balance(), Basis::constant(), AmisConfig::constant_schedule(5, 3), 4);
  const auto full = run_amis(p, c);
  c.retention = PathRetention::Replay;
  const auto replay = run_amis(p, c);
  for (std::size_t i = 0; i < full.iterations.size(); ++i) {
    CHECK(full.iterations[i].psi_hat == replay.iterations[i].psi_hat);
    CHECK(full.iterations[i].params_A == replay.iterations[i].params_A);
  }
}

TEST_CASE("stored log-weights are immutable") {
  const auto p = problems::gaussian_target();
  AmisSampler s(p, pi_config(ReweightScheme::balance(), Basis::affine(3), AmisConfig::constant_schedule(4, 3), 8));
  while (!s.done()) s.step();
  for (int k = 0; k < 4; ++k) {
    for (const auto& x : s.store().batch(k).samples) {
      CHECK(girsanov_log_weight(p, *x.path, s.store().control(k)) == x.log_dqdp);
      CHECK(p.log_h(*x.path) == x.log_h);
    }
  }
}

TEST_CASE("forced proposals drifting away underestimate") {
  const auto q = problems::one_step_gaussian();
  int below = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    AmisConfig c;
    c.scheme = ReweightScheme::flat();
    c.adaptation = ForcedControls{[](int k) { return constant_control({static_cast<double>(k)}); }};
    c.schedule = AmisConfig::constant_schedule(100, 1);
    c.seed = seed;
    if (run_amis(q, c).iterations.back().psi_hat < 0.1 * problems::kOneStepGaussianTruth) ++below;
  }
  CHECK(below >= 17);
}

TEST_CASE("free energy") {
  const auto p = problems::gaussian_target();
  SUBCASE("single sample") {
    AmisSampler s(p, fixed_config(ReweightScheme::flat(), {1}, 2));
    const auto o = s.step();
    CHECK(o.j_hat == s.store().batch(0).samples[0].cost);
  }
  SUBCASE("constant shift of the terminal cost") {
    auto shifted = p;
    auto base = std::get<CostFunctional>(p.functional);
    shifted.functional = CostFunctional{{}, [base](std::span<const double> x) { return base.terminal_cost(x) + 2.5; }};
    const auto c = pi_config(ReweightScheme::flat(), Basis::constant(), {10, 10}, 6);
    const auto a = run_amis(p, c).iterations.back();
    const auto b = run_amis(shifted, c).iterations.back();
    CHECK(std::abs(b.j_hat - a.j_hat - 2.5) <= 1e-12);
  }
}

TEST_CASE("signed estimation") {
  SUBCASE("nonnegative h matches the direct estimate") {
    const auto p = problems::gaussian_target();
    const auto c = fixed_config(ReweightScheme::flat(), {20000}, 3);
    const auto signed_est = estimate_signed(p, c);
    const double direct = run_amis(p, c).iterations.back().psi_hat;
    CHECK(signed_est.negative_part == 1.0);
    CHECK(std::abs(signed_est.estimate - direct) < 0.003);
  }
  SUBCASE("negative constant") {
    auto p = problems::gaussian_target();
    p.functional = PathFunctional{[](const SamplePath&) { return -1.25; }};
    const auto r = estimate_signed(p, fixed_config(ReweightScheme::flat(), {100}, 3));
    CHECK(r.estimate == doctest::Approx(-1.25).epsilon(1e-12));
  }
  SUBCASE("terminal value of Brownian motion has mean zero") {
    DiffusionProblem p;
    p.state_dim = p.noise_dim = 1;
    p.num_steps = 50;
    p.x0 = Eigen::VectorXd::Zero(1);
    p.functional = PathFunctional{[](const SamplePath& s) { return s.terminal_state()[0]; }};
    const int n = 40000;
    const auto r = estimate_signed(p, fixed_config(ReweightScheme::flat(), {n}, 12, 1));
    // Each part has variance 1/2 - 1/(2 pi) per sample.
    const double se = std::sqrt(2.0 * (0.5 - 0.5 / std::numbers::pi) / n);
    CHECK(std::abs(r.estimate) < 3.0 * se);
  }
}

TEST_CASE("configuration errors") {
  const auto p = problems::gaussian_target();
  CHECK_THROWS_AS(AmisSampler(p, fixed_config(ReweightScheme::flat(), {}, 1)), ConfigError);
  CHECK_THROWS_AS(AmisSampler(p, fixed_config(ReweightScheme::flat(), {3, 0}, 1)), ConfigError);
  auto c = pi_config(ReweightScheme::balance(), Basis::constant(), {2, 2}, 1);
  c.retention = PathRetention::None;
  CHECK_THROWS_AS(AmisSampler(p, c), ConfigError);
  CHECK_THROWS_AS(AmisSampler(p, pi_config(ReweightScheme::flat(), Basis::affine(2), {2}, 1)), ConfigError);
  AmisSampler done(p, fixed_config(ReweightScheme::flat(), {1}, 1));
  done.step();
  CHECK_THROWS_AS(done.step(), ConfigError);
}
