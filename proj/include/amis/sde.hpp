#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "amis/basis.hpp"
#include "amis/rng.hpp"

namespace amis {

struct SamplePath;

// out has length d for drift fields and d*m (row-major) for diffusion fields.
using VectorField = std::function<void(double t, std::span<const double> x, std::span<double> out)>;

/// h = exp(-sum_i R(t_i, X_i) dt - Qc(X_T)).
struct CostFunctional {
  std::function<double(double t, std::span<const double> x)> running_cost;  // empty means R = 0
  std::function<double(std::span<const double> x)> terminal_cost;
};

/// Arbitrary path functional h(X). May be signed; the unsigned estimator rejects h < 0.
struct PathFunctional {
  std::function<double(const SamplePath&)> value;
};

/// Target diffusion dX = mu dt + sigma dW on [0, T] together with the functional h.
struct DiffusionProblem {
  int state_dim = 1;
  int noise_dim = 1;
  double horizon = 1.0;
  int num_steps = 100;
  Eigen::VectorXd x0;
  VectorField drift;      // empty means mu = 0
  VectorField diffusion;  // empty means sigma = I (requires state_dim == noise_dim)
  std::variant<CostFunctional, PathFunctional> functional;

  double dt() const noexcept { return horizon / num_steps; }
  double time(int step) const noexcept { return step * dt(); }
  bool has_cost_form() const noexcept { return std::holds_alternative<CostFunctional>(functional); }

  // h(path), possibly negative for a PathFunctional.
  double h(const SamplePath& path) const;

  // log h(path); -inf when h = 0. Throws ConfigError when h < 0.
  double log_h(const SamplePath& path) const;

  void validate() const;
};

/// u(t, x) = A g(t, x), optionally clamped componentwise to [-C, C].
class FeedbackControl {
 public:
  FeedbackControl(Basis basis, Eigen::MatrixXd params, std::optional<double> clamp_bound = std::nullopt);

  static FeedbackControl zero(int noise_dim);
  static FeedbackControl constant(const Eigen::VectorXd& value);

  const Basis& basis() const noexcept { return basis_; }
  const Eigen::MatrixXd& params() const noexcept { return params_; }
  std::optional<double> clamp_bound() const noexcept { return clamp_; }
  int noise_dim() const noexcept { return static_cast<int>(params_.rows()); }

  // g_scratch must hold basis().size() values, u_out noise_dim() values.
  void evaluate(double t, std::span<const double> x, std::span<double> g_scratch,
                std::span<double> u_out) const;

  Eigen::VectorXd operator()(double t, std::span<const double> x) const;

 private:
  Basis basis_;
  Eigen::MatrixXd params_;
  std::optional<double> clamp_;
};

/// One Euler-Maruyama trajectory on the uniform grid t_i = i * dt.
struct SamplePath {
  int iteration = 0;
  int sample = 0;
  int state_dim = 0;
  int noise_dim = 0;
  int num_steps = 0;
  double dt = 0.0;
  std::vector<double> states;  // (num_steps + 1) x state_dim, row-major
  std::vector<double> noise;   // num_steps x noise_dim, the Brownian increments dW_i

  double time(int step) const noexcept { return step * dt; }
  std::span<const double> state(int step) const {
    return {states.data() + static_cast<std::size_t>(step) * state_dim, static_cast<std::size_t>(state_dim)};
  }
  std::span<const double> increment(int step) const {
    return {noise.data() + static_cast<std::size_t>(step) * noise_dim, static_cast<std::size_t>(noise_dim)};
  }
  std::span<const double> terminal_state() const { return state(num_steps); }
  bool has_increments() const noexcept {
    return noise.size() == static_cast<std::size_t>(num_steps) * noise_dim && num_steps > 0;
  }
};

// Draws dW_i ~ N(0, dt I) from the stream and integrates the controlled SDE.
SamplePath simulate_path(const DiffusionProblem& problem, const FeedbackControl& control, PathStream& stream,
                         int iteration = 0, int sample = 0);

SamplePath simulate_path(const DiffusionProblem& problem, const FeedbackControl& control, std::uint64_t seed,
                         int iteration, int sample);

// Integrates X_{i+1} = X_i + mu dt + sigma (u dt + dW_i) with the given increments.
SamplePath integrate_path(const DiffusionProblem& problem, const FeedbackControl& control,
                          std::vector<double> increments, int iteration = 0, int sample = 0);

// log dQ/dP^u = -sum_i u_i . dW_i - 1/2 sum_i |u_i|^2 dt.
double girsanov_log_weight(const DiffusionProblem& problem, const SamplePath& path, const FeedbackControl& control);

// log dP^{other}/dP^{sampled} along a path drawn under `sampled`.
double cross_log_ratio(const DiffusionProblem& problem, const SamplePath& path, const FeedbackControl& sampled,
                       const FeedbackControl& other);

// The same states seen as a path of `other`: dW'_i = dW_i + (u_sampled,i - u_other,i) dt.
SamplePath rebase_increments(const DiffusionProblem& problem, const SamplePath& path, const FeedbackControl& sampled,
                             const FeedbackControl& other);

// S = Qc(X_T) + sum_i [R(t_i, X_i) + 1/2 |u_i|^2] dt + sum_i u_i . dW_i, so exp(-S) = h dQ/dP^u.
double path_cost(const DiffusionProblem& problem, const SamplePath& path, const FeedbackControl& control);

}  // namespace amis
