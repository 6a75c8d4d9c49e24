#include "amis/sde.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "amis/error.hpp"

namespace amis {

namespace {

void check_grid(const DiffusionProblem& problem, const SamplePath& path) {
  if (path.num_steps != problem.num_steps || path.state_dim != problem.state_dim ||
      path.noise_dim != problem.noise_dim || path.dt != problem.dt()) {
    throw StructuralError("sample path grid does not match the diffusion problem");
  }
  if (!path.has_increments()) throw StructuralError("sample path has no stored noise increments");
}

void check_control(const DiffusionProblem& problem, const FeedbackControl& control) {
  if (control.noise_dim() != problem.noise_dim) {
    throw StructuralError("control dimension " + std::to_string(control.noise_dim()) +
                          " does not match noise dimension " + std::to_string(problem.noise_dim));
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

double DiffusionProblem::h(const SamplePath& path) const {
  if (const auto* cost = std::get_if<CostFunctional>(&functional)) {
    double running = 0.0;
    if (cost->running_cost) {
      for (int i = 0; i < path.num_steps; ++i) running += cost->running_cost(path.time(i), path.state(i));
    }
    const double terminal = cost->terminal_cost ? cost->terminal_cost(path.terminal_state()) : 0.0;
    return std::exp(-running * path.dt - terminal);
  }
  return std::get<PathFunctional>(functional).value(path);
}

double DiffusionProblem::log_h(const SamplePath& path) const {
  if (const auto* cost = std::get_if<CostFunctional>(&functional)) {
    double running = 0.0;
    if (cost->running_cost) {
      for (int i = 0; i < path.num_steps; ++i) running += cost->running_cost(path.time(i), path.state(i));
    }
    const double terminal = cost->terminal_cost ? cost->terminal_cost(path.terminal_state()) : 0.0;
    return -running * path.dt - terminal;
  }
  const double value = std::get<PathFunctional>(functional).value(path);
  if (value < 0.0) throw ConfigError("path functional returned a negative value; use the signed estimator");
  return std::log(value);
}

void DiffusionProblem::validate() const {
  if (state_dim <= 0 || noise_dim <= 0) throw ConfigError("problem dimensions must be positive");
  if (!(horizon > 0.0)) throw ConfigError("problem horizon must be positive");
  if (num_steps <= 0) throw ConfigError("problem needs at least one time step");
  if (x0.size() != state_dim) throw ConfigError("initial state has the wrong dimension");
  if (!diffusion && state_dim != noise_dim) {
    throw ConfigError("identity diffusion requires state_dim == noise_dim");
  }
  if (const auto* f = std::get_if<PathFunctional>(&functional); f && !f->value) {
    throw ConfigError("path functional is empty");
  }
}

FeedbackControl::FeedbackControl(Basis basis, Eigen::MatrixXd params, std::optional<double> clamp_bound)
    : basis_(std::move(basis)), params_(std::move(params)), clamp_(clamp_bound) {
  if (params_.cols() != basis_.size()) {
    throw StructuralError("control parameter matrix has " + std::to_string(params_.cols()) +
                          " columns but the basis has size " + std::to_string(basis_.size()));
  }
  if (params_.rows() <= 0) throw StructuralError("control must have at least one output");
  if (clamp_ && !(*clamp_ > 0.0)) throw ConfigError("clamp bound must be positive");
}

FeedbackControl FeedbackControl::zero(int noise_dim) {
  return FeedbackControl(Basis::constant(), Eigen::MatrixXd::Zero(noise_dim, 1));
}

FeedbackControl FeedbackControl::constant(const Eigen::VectorXd& value) {
  return FeedbackControl(Basis::constant(), Eigen::MatrixXd(value));
}

void FeedbackControl::evaluate(double t, std::span<const double> x, std::span<double> g_scratch,
                               std::span<double> u_out) const {
  basis_.evaluate(t, x, g_scratch);
  const auto rows = params_.rows();
  const auto cols = params_.cols();
  for (Eigen::Index r = 0; r < rows; ++r) {
    double s = 0.0;
    for (Eigen::Index c = 0; c < cols; ++c) s += params_(r, c) * g_scratch[c];
    if (clamp_) s = std::clamp(s, -*clamp_, *clamp_);
    u_out[r] = s;
  }
}

Eigen::VectorXd FeedbackControl::operator()(double t, std::span<const double> x) const {
  std::vector<double> g(static_cast<std::size_t>(basis_.size()));
  Eigen::VectorXd u(params_.rows());
  evaluate(t, x, g, {u.data(), static_cast<std::size_t>(u.size())});
  return u;
}

SamplePath integrate_path(const DiffusionProblem& problem, const FeedbackControl& control,
                          std::vector<double> increments, int iteration, int sample) {
  check_control(problem, control);
  const int d = problem.state_dim;
  const int m = problem.noise_dim;
  const int n = problem.num_steps;
  if (increments.size() != static_cast<std::size_t>(n) * m) {
    throw StructuralError("noise increment count does not match the time grid");
  }

  SamplePath path;
  path.iteration = iteration;
  path.sample = sample;
  path.state_dim = d;
  path.noise_dim = m;
  path.num_steps = n;
  path.dt = problem.dt();
  path.noise = std::move(increments);
  path.states.resize(static_cast<std::size_t>(n + 1) * d);
  std::copy(problem.x0.data(), problem.x0.data() + d, path.states.begin());

  const double dt = path.dt;
  std::vector<double> g(static_cast<std::size_t>(control.basis().size()));
  std::vector<double> u(static_cast<std::size_t>(m));
  std::vector<double> kick(static_cast<std::size_t>(m));
  std::vector<double> mu(static_cast<std::size_t>(d), 0.0);
  std::vector<double> sigma(problem.diffusion ? static_cast<std::size_t>(d) * m : 0);

  for (int i = 0; i < n; ++i) {
    const double t = i * dt;
    const double* xi = path.states.data() + static_cast<std::size_t>(i) * d;
    double* next = path.states.data() + static_cast<std::size_t>(i + 1) * d;
    const std::span<const double> x(xi, static_cast<std::size_t>(d));
    const double* dw = path.noise.data() + static_cast<std::size_t>(i) * m;

    control.evaluate(t, x, g, u);
    for (int j = 0; j < m; ++j) kick[j] = u[j] * dt + dw[j];
    if (problem.drift) problem.drift(t, x, mu);

    if (problem.diffusion) {
      problem.diffusion(t, x, sigma);
      for (int r = 0; r < d; ++r) {
        double s = 0.0;
        for (int c = 0; c < m; ++c) s += sigma[static_cast<std::size_t>(r) * m + c] * kick[c];
        next[r] = xi[r] + mu[r] * dt + s;
      }
    } else {
      for (int r = 0; r < d; ++r) next[r] = xi[r] + mu[r] * dt + kick[r];
    }
    for (int r = 0; r < d; ++r) {
      if (!std::isfinite(next[r])) {
        throw SimulationError("non-finite state at step " + std::to_string(i + 1), i + 1);
      }
    }
  }
  return path;
}

SamplePath simulate_path(const DiffusionProblem& problem, const FeedbackControl& control, PathStream& stream,
                         int iteration, int sample) {
  const std::size_t count = static_cast<std::size_t>(problem.num_steps) * problem.noise_dim;
  const double scale = std::sqrt(problem.dt());
  std::vector<double> increments(count);
  for (auto& w : increments) w = scale * stream.standard_normal();
  return integrate_path(problem, control, std::move(increments), iteration, sample);
}

SamplePath simulate_path(const DiffusionProblem& problem, const FeedbackControl& control, std::uint64_t seed,
                         int iteration, int sample) {
  PathStream stream(seed, static_cast<std::uint64_t>(iteration), static_cast<std::uint64_t>(sample));
  return simulate_path(problem, control, stream, iteration, sample);
}

double cross_log_ratio(const DiffusionProblem& problem, const SamplePath& path, const FeedbackControl& sampled,
                       const FeedbackControl& other) {
  check_grid(problem, path);
  check_control(problem, sampled);
  check_control(problem, other);
  const int m = path.noise_dim;
  std::vector<double> g_a(static_cast<std::size_t>(sampled.basis().size()));
  std::vector<double> g_b(static_cast<std::size_t>(other.basis().size()));
  std::vector<double> u_a(static_cast<std::size_t>(m));
  std::vector<double> u_b(static_cast<std::size_t>(m));

  double stochastic = 0.0;
  double quadratic = 0.0;
  for (int i = 0; i < path.num_steps; ++i) {
    const double t = path.time(i);
    const auto x = path.state(i);
    const auto dw = path.increment(i);
    sampled.evaluate(t, x, g_a, u_a);
    other.evaluate(t, x, g_b, u_b);
    for (int j = 0; j < m; ++j) {
      const double diff = u_b[j] - u_a[j];
      stochastic += diff * dw[j];
      quadratic += diff * diff;
    }
  }
  return stochastic - 0.5 * quadratic * path.dt;
}

SamplePath rebase_increments(const DiffusionProblem& problem, const SamplePath& path, const FeedbackControl& sampled,
                             const FeedbackControl& other) {
  check_grid(problem, path);
  check_control(problem, sampled);
  check_control(problem, other);
  const int m = path.noise_dim;
  std::vector<double> g_a(static_cast<std::size_t>(sampled.basis().size()));
  std::vector<double> g_b(static_cast<std::size_t>(other.basis().size()));
  std::vector<double> u_a(static_cast<std::size_t>(m));
  std::vector<double> u_b(static_cast<std::size_t>(m));

  SamplePath out = path;
  for (int i = 0; i < path.num_steps; ++i) {
    const double t = path.time(i);
    const auto x = path.state(i);
    sampled.evaluate(t, x, g_a, u_a);
    other.evaluate(t, x, g_b, u_b);
    for (int j = 0; j < m; ++j) {
      out.noise[static_cast<std::size_t>(i * m + j)] += (u_a[j] - u_b[j]) * path.dt;
    }
  }
  return out;
}

double girsanov_log_weight(const DiffusionProblem& problem, const SamplePath& path, const FeedbackControl& control) {
  check_grid(problem, path);
  check_control(problem, control);
  const int m = path.noise_dim;
  std::vector<double> g(static_cast<std::size_t>(control.basis().size()));
  std::vector<double> u(static_cast<std::size_t>(m));

  double stochastic = 0.0;
  double quadratic = 0.0;
  for (int i = 0; i < path.num_steps; ++i) {
    control.evaluate(path.time(i), path.state(i), g, u);
    const auto dw = path.increment(i);
    for (int j = 0; j < m; ++j) {
      stochastic += (-u[j]) * dw[j];
      quadratic += u[j] * u[j];
    }
  }
  return stochastic - 0.5 * quadratic * path.dt;
}

double path_cost(const DiffusionProblem& problem, const SamplePath& path, const FeedbackControl& control) {
  const auto* cost = std::get_if<CostFunctional>(&problem.functional);
  if (cost == nullptr) throw ConfigError("path cost requires a problem in running/terminal cost form");
  check_grid(problem, path);
  check_control(problem, control);
  const int m = path.noise_dim;
  std::vector<double> g(static_cast<std::size_t>(control.basis().size()));
  std::vector<double> u(static_cast<std::size_t>(m));

  double running = 0.0;
  double stochastic = 0.0;
  double quadratic = 0.0;
  for (int i = 0; i < path.num_steps; ++i) {
    const double t = path.time(i);
    const auto x = path.state(i);
    if (cost->running_cost) running += cost->running_cost(t, x);
    control.evaluate(t, x, g, u);
    const auto dw = path.increment(i);
    stochastic += dot(u, dw);
    quadratic += dot(u, u);
  }
  const double terminal = cost->terminal_cost ? cost->terminal_cost(path.terminal_state()) : 0.0;
  return terminal + running * path.dt + 0.5 * quadratic * path.dt + stochastic;
}

}  // namespace amis
