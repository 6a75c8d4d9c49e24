#include "amis/adaptation.hpp"

#include <cmath>
#include <limits>

#include "amis/error.hpp"
#include "amis/kernels.hpp"

namespace amis {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

PathMoments path_moments(const DiffusionProblem& problem, const SamplePath& path, const FeedbackControl& control,
                         const Basis& basis) {
  if (!path.has_increments()) throw StructuralError("sample path has no stored noise increments");
  if (path.num_steps != problem.num_steps || path.noise_dim != problem.noise_dim ||
      path.state_dim != problem.state_dim) {
    throw StructuralError("sample path grid does not match the diffusion problem");
  }
  if (control.noise_dim() != problem.noise_dim) throw StructuralError("control dimension mismatch");

  const int l = basis.size();
  const int m = problem.noise_dim;
  const double dt = path.dt;
  PathMoments out{Eigen::MatrixXd::Zero(m, l), Eigen::MatrixXd::Zero(l, l)};
  std::vector<double> g(static_cast<std::size_t>(l));
  std::vector<double> g_control(static_cast<std::size_t>(control.basis().size()));
  std::vector<double> u(static_cast<std::size_t>(m));

  for (int i = 0; i < path.num_steps; ++i) {
    const double t = path.time(i);
    const auto x = path.state(i);
    const auto dw = path.increment(i);
    basis.evaluate(t, x, g);
    control.evaluate(t, x, g_control, u);
    for (int c = 0; c < l; ++c) {
      const double gc = g[c];
      if (gc == 0.0) continue;
      for (int r = 0; r < l; ++r) out.G(r, c) += g[r] * gc * dt;
      for (int r = 0; r < m; ++r) out.F(r, c) += (u[r] * dt + dw[r]) * gc;
    }
  }
  return out;
}

Contribution accumulate(const DiffusionProblem& problem, const WeightedSample& sample,
                        const FeedbackControl& control_of_its_iteration, const Basis& basis) {
  if (!sample.path) throw StructuralError("sample path was not retained; noise increments are unavailable");
  auto moments = path_moments(problem, *sample.path, control_of_its_iteration, basis);
  const double log_w = sample.weight > 0.0 ? sample.log_value() + std::log(sample.weight) : kNegInf;
  return {std::move(moments.F), std::move(moments.G), log_w};
}

AdaptationState::AdaptationState(int noise_dim, int basis_size)
    : A(Eigen::MatrixXd::Zero(noise_dim, basis_size)),
      F_(Eigen::MatrixXd::Zero(noise_dim, basis_size)),
      G_(Eigen::MatrixXd::Zero(basis_size, basis_size)),
      log_scale_(kNegInf) {}

void AdaptationState::add(const Eigen::MatrixXd& F, const Eigen::MatrixXd& G, double log_weight) {
  if (!(log_weight > kNegInf)) return;
  if (empty_) {
    F_ = F;
    G_ = G;
    log_scale_ = log_weight;
    empty_ = false;
    return;
  }
  if (log_weight > log_scale_) {
    const double shrink = std::exp(log_scale_ - log_weight);
    F_ *= shrink;
    G_ *= shrink;
    log_scale_ = log_weight;
  }
  const double factor = std::exp(log_weight - log_scale_);
  F_ += factor * F;
  G_ += factor * G;
}

void AdaptationState::add(const AdaptationState& other) {
  if (!other.empty_) add(other.F_, other.G_, other.log_scale_);
}

void AdaptationState::reset() {
  F_.setZero();
  G_.setZero();
  log_scale_ = kNegInf;
  empty_ = true;
  watermark = {-1, -1};
}

Eigen::MatrixXd AdaptationState::F() const { return empty_ ? F_ : Eigen::MatrixXd(std::exp(log_scale_) * F_); }
Eigen::MatrixXd AdaptationState::G() const { return empty_ ? G_ : Eigen::MatrixXd(std::exp(log_scale_) * G_); }

Eigen::MatrixXd solve_params(const AdaptationState& state, const Basis& basis, const SolvePolicy& policy) {
  Eigen::MatrixXd A = state.A;
  if (state.empty()) return A;
  const auto& F = state.scaled_F();
  const auto& G = state.scaled_G();
  const int blocks = basis.num_blocks();
  const int size = basis.block_size();

  for (int j = 0; j < blocks; ++j) {
    const int off = j * size;
    const Eigen::MatrixXd Gb = G.block(off, off, size, size);
    const Eigen::MatrixXd Fb = F.middleCols(off, size);
    if (!Gb.allFinite() || !Fb.allFinite()) continue;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Gb, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    if (!(hi > 0.0)) continue;  // numerically zero: keep previous A block

    const double condition = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
    double lambda = 0.0;
    if (!(condition < policy.max_condition)) lambda = policy.ridge * Gb.trace() / size;

    const Eigen::MatrixXd lhs = Gb + lambda * Eigen::MatrixXd::Identity(size, size);
    const Eigen::MatrixXd solved = lhs.ldlt().solve(Fb.transpose()).transpose();
    if (solved.allFinite()) A.middleCols(off, size) = solved;
  }
  return A;
}

PathIntegralAdapter::PathIntegralAdapter(Basis basis, int noise_dim, AdaptationMode mode,
                                         std::optional<double> clamp_bound, SolvePolicy policy,
                                         Execution execution)
    : basis_(std::move(basis)),
      noise_dim_(noise_dim),
      mode_(mode),
      clamp_(clamp_bound),
      policy_(policy),
      execution_(execution),
      state_(noise_dim, basis_.size()),
      acc_(noise_dim, basis_.size()) {}

FeedbackControl PathIntegralAdapter::make_control() const { return FeedbackControl(basis_, state_.A, clamp_); }

void PathIntegralAdapter::observe(const DiffusionProblem& problem, const SampleStore& store, int batch) {
  if (mode_ != AdaptationMode::Incremental) return;
  if (batch != static_cast<int>(batch_sums_.size())) {
    throw StructuralError("incremental adaptation must observe batches in order");
  }
  const auto& samples = store.batch(batch).samples;
  std::vector<const WeightedSample*> ptrs;
  ptrs.reserve(samples.size());
  for (const auto& s : samples) ptrs.push_back(&s);
  const auto moments = kernels::moments(problem, store, ptrs, basis_, execution_);

  AdaptationState sum(noise_dim_, basis_.size());
  for (std::size_t i = 0; i < samples.size(); ++i) sum.add(moments[i].F, moments[i].G, samples[i].log_value());
  batch_sums_.push_back(std::move(sum));
}

FeedbackControl PathIntegralAdapter::adapt(const DiffusionProblem& problem, const SampleStore& store) {
  if (store.empty()) {
    state_.reset();
    state_.A.setZero();
    return make_control();
  }
  return mode_ == AdaptationMode::FullRecompute ? adapt_full(problem, store) : adapt_incremental(problem, store);
}

FeedbackControl PathIntegralAdapter::adapt_full(const DiffusionProblem& problem, const SampleStore& store) {
  std::vector<const WeightedSample*> ptrs;
  for (const auto& batch : store.batches()) {
    for (const auto& s : batch.samples) {
      if (s.weight > 0.0 && s.log_value() > kNegInf) ptrs.push_back(&s);
    }
  }
  const auto moments = kernels::moments(problem, store, ptrs, basis_, execution_);

  state_.reset();
  for (std::size_t i = 0; i < ptrs.size(); ++i) {
    state_.add(moments[i].F, moments[i].G, ptrs[i]->log_value() + std::log(ptrs[i]->weight));
  }
  const auto& last = store.batch(store.num_iterations() - 1);
  state_.watermark = {store.num_iterations() - 1, static_cast<int>(last.samples.size()) - 1};
  state_.A = solve_params(state_, basis_, policy_);
  return make_control();
}

FeedbackControl PathIntegralAdapter::adapt_incremental(const DiffusionProblem& problem, const SampleStore& store) {
  const int k = store.num_iterations();
  while (static_cast<int>(batch_sums_.size()) < k) observe(problem, store, static_cast<int>(batch_sums_.size()));

  std::vector<double> batch_w(static_cast<std::size_t>(k), 0.0);
  for (int b = 0; b < k; ++b) {
    const auto& samples = store.batch(b).samples;
    const double w = samples.empty() ? 0.0 : samples.front().weight;
    for (const auto& s : samples) {
      if (s.weight != w) {
        throw ConfigError("incremental adaptation requires batch-uniform weights (flat or discarding schemes)");
      }
    }
    batch_w[static_cast<std::size_t>(b)] = w;
  }

  int first = 0;
  while (first < k && batch_w[static_cast<std::size_t>(first)] == 0.0) ++first;
  bool common = first < k;
  for (int b = first; b < k && common; ++b) common = batch_w[static_cast<std::size_t>(b)] == batch_w[first];

  const Eigen::MatrixXd previous = state_.A;
  if (common) {
    if (first != acc_first_ || acc_end_ < first) {
      acc_.reset();
      acc_first_ = first;
      acc_end_ = first;
    }
    for (int b = acc_end_; b < k; ++b) acc_.add(batch_sums_[static_cast<std::size_t>(b)]);
    acc_end_ = k;
    state_ = acc_;
    state_.shift_log_scale(std::log(batch_w[static_cast<std::size_t>(first)]));
  } else {
    state_.reset();
    for (int b = 0; b < k; ++b) {
      const double w = batch_w[static_cast<std::size_t>(b)];
      if (w <= 0.0) continue;
      AdaptationState scaled = batch_sums_[static_cast<std::size_t>(b)];
      scaled.shift_log_scale(std::log(w));
      state_.add(scaled);
    }
  }
  state_.A = previous;
  state_.watermark = {k - 1, static_cast<int>(store.batch(k - 1).samples.size()) - 1};
  state_.A = solve_params(state_, basis_, policy_);
  return make_control();
}

}  // namespace amis
