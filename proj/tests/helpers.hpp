#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "amis/kernels.hpp"
#include "amis/problems.hpp"
#include "amis/sde.hpp"
#include "amis/store.hpp"

namespace amis::testing {

inline FeedbackControl constant_control(std::initializer_list<double> v) {
  Eigen::VectorXd u(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) u[i++] = x;
  return FeedbackControl::constant(u);
}

inline FeedbackControl constant_control(int dim, double value) {
  return FeedbackControl::constant(Eigen::VectorXd::Constant(dim, value));
}

// Appends one batch per control with `per_batch` samples each.
inline SampleStore make_store(const DiffusionProblem& problem, const std::vector<FeedbackControl>& controls,
                              int per_batch, std::uint64_t seed = 11) {
  SampleStore store(PathRetention::Full);
  for (std::size_t k = 0; k < controls.size(); ++k) {
    store.append_batch(controls[k],
                       kernels::generate_batch_serial(problem, controls[k], seed, static_cast<int>(k), per_batch));
  }
  return store;
}

// Plain IS estimate (1/N) sum h dQ/dP over the whole store.
inline double plain_estimate(const SampleStore& store) {
  double sum = 0.0;
  for (const auto& b : store.batches()) {
    for (const auto& s : b.samples) sum += std::exp(s.log_value());
  }
  return sum / static_cast<double>(store.total_samples());
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

inline MeanSe mean_se(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return {m, std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()))};
}

}  // namespace amis::testing
