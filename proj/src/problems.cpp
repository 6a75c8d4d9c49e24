#include "amis/problems.hpp"

#include <cmath>

#include "amis/error.hpp"

namespace amis::problems {

DiffusionProblem gaussian_target(const Eigen::VectorXd& z, int num_steps) {
  DiffusionProblem p;
  p.state_dim = static_cast<int>(z.size());
  p.noise_dim = p.state_dim;
  p.horizon = 1.0;
  p.num_steps = num_steps;
  p.x0 = Eigen::VectorXd::Zero(z.size());
  p.functional = CostFunctional{{}, [z](std::span<const double> x) {
                                  double s = 0.0;
                                  for (Eigen::Index i = 0; i < z.size(); ++i) {
                                    const double r = x[static_cast<std::size_t>(i)] - z[i];
                                    s += r * r;
                                  }
                                  return 0.5 * s;
                                }};
  return p;
}

DiffusionProblem gaussian_target(int dim, double target, int num_steps) {
  return gaussian_target(Eigen::VectorXd::Constant(dim, target), num_steps);
}

double gaussian_target_truth(const Eigen::VectorXd& z) {
  double v = 1.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) v *= std::exp(-0.25 * z[i] * z[i]) / std::sqrt(2.0);
  return v;
}

DiffusionProblem one_step_gaussian() {
  DiffusionProblem p;
  p.state_dim = 1;
  p.noise_dim = 1;
  p.horizon = 1.0;
  p.num_steps = 1;
  p.x0 = Eigen::VectorXd::Zero(1);
  p.functional = CostFunctional{{}, [](std::span<const double> x) { return 0.5 * x[0] * x[0]; }};
  return p;
}

DiffusionProblem linear_quadratic(const LinearQuadraticSpec& spec) {
  const int d = spec.state_dim;
  const int m = spec.noise_dim;
  if (d <= 0 || m <= 0) throw ConfigError("dimensions must be positive");
  if (spec.x0.size() != d || spec.drift_matrix.rows() != d || spec.drift_matrix.cols() != d ||
      spec.drift_offset.size() != d || spec.diffusion.rows() != d || spec.diffusion.cols() != m ||
      spec.target.size() != d) {
    throw ConfigError("linear-quadratic problem has inconsistent dimensions");
  }
  DiffusionProblem p;
  p.state_dim = d;
  p.noise_dim = m;
  p.horizon = spec.horizon;
  p.num_steps = spec.num_steps;
  p.x0 = spec.x0;

  const Eigen::MatrixXd B = spec.drift_matrix;
  const Eigen::VectorXd b = spec.drift_offset;
  p.drift = [B, b](double, std::span<const double> x, std::span<double> out) {
    for (Eigen::Index r = 0; r < B.rows(); ++r) {
      double s = b[r];
      for (Eigen::Index c = 0; c < B.cols(); ++c) s += B(r, c) * x[static_cast<std::size_t>(c)];
      out[static_cast<std::size_t>(r)] = s;
    }
  };
  const Eigen::MatrixXd S = spec.diffusion;
  p.diffusion = [S](double, std::span<const double>, std::span<double> out) {
    for (Eigen::Index r = 0; r < S.rows(); ++r) {
      for (Eigen::Index c = 0; c < S.cols(); ++c) out[static_cast<std::size_t>(r * S.cols() + c)] = S(r, c);
    }
  };

  CostFunctional cost;
  if (spec.running_weight != 0.0) {
    const double r = spec.running_weight;
    cost.running_cost = [r](double, std::span<const double> x) {
      double s = 0.0;
      for (double v : x) s += v * v;
      return 0.5 * r * s;
    };
  }
  const Eigen::VectorXd z = spec.target;
  const double q = spec.terminal_weight;
  cost.terminal_cost = [z, q](std::span<const double> x) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      const double r = x[static_cast<std::size_t>(i)] - z[i];
      s += r * r;
    }
    return 0.5 * q * s;
  };
  p.functional = cost;
  p.validate();
  return p;
}

}  // namespace amis::problems
