#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "amis/engine.hpp"
#include "amis/problems.hpp"

namespace amis::experiments {

struct ProblemConfig {
  enum class Kind { GaussianTarget, OneStepGaussian, LinearQuadratic };
  Kind kind = Kind::GaussianTarget;
  Eigen::VectorXd target = Eigen::VectorXd::Constant(3, 2.0);  // GaussianTarget
  int num_steps = 100;                                          // GaussianTarget
  problems::LinearQuadraticSpec custom;                         // LinearQuadratic
};

struct BasisConfig {
  enum class Kind { Constant, Affine, Piecewise };
  Kind kind = Kind::Constant;
  Kind inner = Kind::Constant;  // Piecewise only
  int intervals = 1;            // Piecewise only
};

struct AdaptationConfig {
  enum class Kind { PathIntegral, None, ForcedLinear };
  Kind kind = Kind::PathIntegral;
  std::optional<AdaptationMode> mode;  // unset: FullRecompute for balance, Incremental otherwise
  std::optional<double> clamp;
  double forced_slope = 1.0;  // ForcedLinear: u_k = slope * k in every coordinate
};

/// One experiment: problem, scheme, basis, schedule and the seeds of its runs.
struct ExperimentConfig {
  std::string experiment = "run";
  ProblemConfig problem;
  ReweightScheme scheme;
  BasisConfig basis;
  AdaptationConfig adaptation;
  int batch = 1;
  int iterations = 1;
  std::vector<std::uint64_t> seeds;
  std::string output = "results.csv";
};

/// Parses a JSON config document. Unknown keys and malformed values throw ConfigError.
ExperimentConfig parse_config(std::string_view json_text);
ExperimentConfig load_config(const std::filesystem::path& path);

DiffusionProblem build_problem(const ProblemConfig& config);
Basis build_basis(const BasisConfig& config, const DiffusionProblem& problem);
AmisConfig build_amis_config(const ExperimentConfig& config, const DiffusionProblem& problem, std::uint64_t seed);

std::vector<std::uint64_t> seed_range(std::uint64_t base, int count);

// AMIS_SEED from the environment, or 1.
std::uint64_t default_seed_base();

}  // namespace amis::experiments
