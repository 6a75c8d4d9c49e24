#pragma once

#include <Eigen/Dense>

#include "amis/sde.hpp"

namespace amis::problems {

/// Standard Brownian motion in R^d on [0, 1] from the origin, with
/// h = exp(-|X_1 - z|^2 / 2) written in cost form (R = 0, Qc = |x - z|^2 / 2).
DiffusionProblem gaussian_target(const Eigen::VectorXd& z, int num_steps = 100);
DiffusionProblem gaussian_target(int dim = 3, double target = 2.0, int num_steps = 100);

/// E_Q[h] for gaussian_target: prod_i 2^{-1/2} exp(-z_i^2 / 4).
double gaussian_target_truth(const Eigen::VectorXd& z);

/// One Euler step of a 1-D Brownian motion: X_1 ~ N(u, 1) under the constant
/// control u, h(x) = exp(-x^2 / 2). E_Q[h] = 1/sqrt(2) whatever the proposal.
DiffusionProblem one_step_gaussian();
inline constexpr double kOneStepGaussianTruth = 0.70710678118654752440;

/// dX = (B x + b) dt + S dW with h = exp(-r/2 int |X|^2 dt - q/2 |X_T - z|^2).
struct LinearQuadraticSpec {
  int state_dim = 1;
  int noise_dim = 1;
  double horizon = 1.0;
  int num_steps = 100;
  Eigen::VectorXd x0;
  Eigen::MatrixXd drift_matrix;   // B, d x d
  Eigen::VectorXd drift_offset;   // b
  Eigen::MatrixXd diffusion;      // S, d x m
  Eigen::VectorXd target;         // z
  double terminal_weight = 1.0;   // q
  double running_weight = 0.0;    // r
};

DiffusionProblem linear_quadratic(const LinearQuadraticSpec& spec);

}  // namespace amis::problems
