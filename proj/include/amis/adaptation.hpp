#pragma once

#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "amis/basis.hpp"
#include "amis/execution.hpp"
#include "amis/sde.hpp"
#include "amis/store.hpp"

namespace amis {

/// Unweighted per-path moments of the path integral update:
///   G = sum_i g_i g_i^T dt,   F = sum_i (u_i dt + dW_i) g_i^T,
/// with g_i = g(t_i, X_i) and u_i the generating control.
struct PathMoments {
  Eigen::MatrixXd F;  // m x l
  Eigen::MatrixXd G;  // l x l
};

PathMoments path_moments(const DiffusionProblem& problem, const SamplePath& path, const FeedbackControl& control,
                         const Basis& basis);

/// exp(log_weight) * (F, G) is the sample's contribution, with weight h dQ/dP w.
struct Contribution {
  Eigen::MatrixXd F;
  Eigen::MatrixXd G;
  double log_weight = 0.0;
};

Contribution accumulate(const DiffusionProblem& problem, const WeightedSample& sample,
                        const FeedbackControl& control_of_its_iteration, const Basis& basis);

/// Running F, G sums kept as exp(log_scale) * (F, G) so that weights spanning
/// many orders of magnitude do not overflow.
class AdaptationState {
 public:
  AdaptationState(int noise_dim, int basis_size);

  void add(const Eigen::MatrixXd& F, const Eigen::MatrixXd& G, double log_weight);
  void add(const Contribution& c) { add(c.F, c.G, c.log_weight); }
  void add(const AdaptationState& other);
  void reset();

  const Eigen::MatrixXd& scaled_F() const noexcept { return F_; }
  const Eigen::MatrixXd& scaled_G() const noexcept { return G_; }
  double log_scale() const noexcept { return log_scale_; }
  void shift_log_scale(double delta) noexcept { log_scale_ += delta; }
  bool empty() const noexcept { return empty_; }

  // Unscaled sums; may overflow for extreme weights.
  Eigen::MatrixXd F() const;
  Eigen::MatrixXd G() const;

  Eigen::MatrixXd A;  // current solution, m x l

  // (batch, index) of the last sample folded in by incremental adaptation.
  std::pair<int, int> watermark{-1, -1};

 private:
  Eigen::MatrixXd F_;
  Eigen::MatrixXd G_;
  double log_scale_;
  bool empty_ = true;
};

struct SolvePolicy {
  double max_condition = 1e12;
  double ridge = 1e-8;
};

/// A = F (G + lambda I)^{-1}, block by block for piecewise bases.
/// lambda = 0 while cond(G) < max_condition, else ridge * trace(G) / l.
/// Blocks whose G is numerically zero keep their previous A.
Eigen::MatrixXd solve_params(const AdaptationState& state, const Basis& basis, const SolvePolicy& policy = {});

enum class AdaptationMode { FullRecompute, Incremental };

/// Proposes the next control from the weighted samples of the store.
class PathIntegralAdapter {
 public:
  PathIntegralAdapter(Basis basis, int noise_dim, AdaptationMode mode,
                      std::optional<double> clamp_bound = std::nullopt, SolvePolicy policy = {},
                      Execution execution = Execution::Serial);

  // Caches batch moments while its paths are still available. Needed by
  // Incremental mode before paths are released; a no-op otherwise.
  void observe(const DiffusionProblem& problem, const SampleStore& store, int batch);

  FeedbackControl adapt(const DiffusionProblem& problem, const SampleStore& store);

  const AdaptationState& state() const noexcept { return state_; }
  AdaptationMode mode() const noexcept { return mode_; }
  const Basis& basis() const noexcept { return basis_; }

 private:
  FeedbackControl adapt_full(const DiffusionProblem& problem, const SampleStore& store);
  FeedbackControl adapt_incremental(const DiffusionProblem& problem, const SampleStore& store);
  FeedbackControl make_control() const;

  Basis basis_;
  int noise_dim_;
  AdaptationMode mode_;
  std::optional<double> clamp_;
  SolvePolicy policy_;
  Execution execution_;
  AdaptationState state_;

  // Incremental mode: per-batch sums of h dQ/dP-weighted moments (w excluded),
  // and the running sum over batches [acc_first_, acc_end_).
  std::vector<AdaptationState> batch_sums_;
  AdaptationState acc_;
  int acc_first_ = 0;
  int acc_end_ = 0;
};

}  // namespace amis
