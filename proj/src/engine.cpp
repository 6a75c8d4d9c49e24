#include "amis/engine.hpp"

#include <cmath>
#include <limits>

#include "amis/error.hpp"
#include "amis/kernels.hpp"

namespace amis {

namespace {

using Clock = std::chrono::steady_clock;

std::int64_t elapsed_ns(Clock::time_point since) {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - since).count();
}

bool needs_paths(const AmisConfig& config) {
  if (config.scheme.kind == ReweightScheme::Kind::Balance) return true;
  const auto* pi = std::get_if<PathIntegralAdaptation>(&config.adaptation);
  return pi != nullptr && pi->mode == AdaptationMode::FullRecompute;
}

PathRetention choose_retention(const AmisConfig& config) {
  if (config.retention) return *config.retention;
  return needs_paths(config) ? PathRetention::Full : PathRetention::None;
}

void validate(const DiffusionProblem& problem, const AmisConfig& config) {
  problem.validate();
  config.scheme.validate();
  if (config.schedule.empty()) throw ConfigError("schedule needs at least one iteration");
  for (int n : config.schedule) {
    if (n < 1) throw ConfigError("every batch size must be at least 1");
  }
  if (const auto* pi = std::get_if<PathIntegralAdaptation>(&config.adaptation)) {
    if (pi->mode == AdaptationMode::Incremental && config.scheme.kind == ReweightScheme::Kind::Balance) {
      throw ConfigError("incremental adaptation cannot be combined with balance re-weighting");
    }
    const int input = pi->basis.input_dim();
    if (input != 0 && input != problem.state_dim) {
      throw ConfigError("adaptation basis expects state dimension " + std::to_string(input));
    }
  }
  if (needs_paths(config) && choose_retention(config) == PathRetention::None) {
    throw ConfigError("scheme/adaptation needs noise increments but path retention is disabled");
  }
  if (const auto* fixed = std::get_if<FixedControl>(&config.adaptation)) {
    if (fixed->control.noise_dim() != problem.noise_dim) throw ConfigError("fixed control has wrong dimension");
  }
  if (const auto* forced = std::get_if<ForcedControls>(&config.adaptation); forced && !forced->control_for) {
    throw ConfigError("forced control schedule is empty");
  }
}

SampleStore make_store(const DiffusionProblem& problem, const AmisConfig& config) {
  const auto retention = choose_retention(config);
  if (retention == PathRetention::Replay) return SampleStore(retention, problem, config.seed);
  return SampleStore(retention);
}

}  // namespace

AmisSampler::AmisSampler(DiffusionProblem problem, AmisConfig config)
    : problem_(std::move(problem)),
      config_(std::move(config)),
      store_((validate(problem_, config_), make_store(problem_, config_))),
      balance_(config_.execution) {
  if (const auto* pi = std::get_if<PathIntegralAdaptation>(&config_.adaptation)) {
    adapter_.emplace(pi->basis, problem_.noise_dim, pi->mode, pi->clamp_bound, pi->policy, config_.execution);
  }
}

FeedbackControl AmisSampler::propose(int k) {
  if (adapter_) return adapter_->adapt(problem_, store_);
  if (const auto* fixed = std::get_if<FixedControl>(&config_.adaptation)) return fixed->control;
  auto control = std::get<ForcedControls>(config_.adaptation).control_for(k);
  if (control.noise_dim() != problem_.noise_dim) throw ConfigError("forced control has wrong dimension");
  return control;
}

FeedbackControl AmisSampler::final_control() { return propose(store_.num_iterations() + 1); }

EssReport AmisSampler::reweight() {
  using Kind = ReweightScheme::Kind;
  const int k = store_.num_iterations();
  switch (config_.scheme.kind) {
    case Kind::Flat:
      weights_ = flat_weights(store_);
      break;
    case Kind::Balance:
      balance_.update(problem_, store_);
      weights_ = balance_.weights(store_);
      break;
    case Kind::DiscardFixed:
      weights_ = discard_weights(store_, choose_fixed_discard(k));
      break;
    case Kind::DiscardOptimized: {
      if (store_.total_samples() < config_.scheme.min_retained) {
        weights_ = discard_weights(store_, 0);
        break;
      }
      const auto choice = choose_optimized_discard(store_, config_.scheme);
      weights_ = discard_weights(store_, choice.discard_time);
      store_.apply(weights_);
      return choice.report;
    }
    case Kind::NonMixingLastBatch:
      weights_ = nonmixing_weights(store_);
      break;
  }
  store_.apply(weights_);
  return ess_report(store_, weights_);
}

IterationOutput AmisSampler::step() {
  if (done()) throw ConfigError("sampler has already run every scheduled iteration");
  const auto start = Clock::now();
  const int batch = store_.num_iterations();
  IterationOutput out;
  out.k = batch + 1;

  auto t0 = Clock::now();
  FeedbackControl control = propose(out.k);
  out.phases.adapt_ns = elapsed_ns(t0);
  out.params_A = control.params();

  t0 = Clock::now();
  auto samples = kernels::generate_batch(problem_, control, config_.seed, batch,
                                         config_.schedule[static_cast<std::size_t>(batch)], config_.execution);
  store_.append_batch(std::move(control), std::move(samples));
  out.phases.generate_ns = elapsed_ns(t0);

  if (adapter_) {
    t0 = Clock::now();
    adapter_->observe(problem_, store_, batch);
    out.phases.adapt_ns += elapsed_ns(t0);
  }
  store_.release_paths(batch);

  t0 = Clock::now();
  out.ess = reweight();
  out.phases.reweight_ns = elapsed_ns(t0);

  out.total_samples = store_.total_samples();
  out.psi_hat = std::exp(log_estimate(store_, weights_));
  out.j_hat = problem_.has_cost_form() ? free_energy(store_, weights_) : std::nan("");
  out.wall_time = std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - start);
  return out;
}

AmisResult run_amis(const DiffusionProblem& problem, const AmisConfig& config) {
  AmisSampler sampler(problem, config);
  std::vector<IterationOutput> outputs;
  outputs.reserve(config.schedule.size());
  while (!sampler.done()) outputs.push_back(sampler.step());
  return {std::move(outputs), sampler.final_control()};
}

double free_energy(const SampleStore& store, const WeightAssignment& weights) {
  kernels::LogSum total;
  for (const auto& batch : store.batches()) {
    for (const auto& s : batch.samples) {
      const double w = weights.weight(s.iteration, s.index);
      if (w <= 0.0) continue;
      if (std::isnan(s.cost)) throw ConfigError("free energy needs path costs (cost-form problem)");
      total.add(-s.cost + std::log(w));
    }
  }
  if (total.sum == 0.0) throw UndefinedEstimateError("free energy is undefined when every weighted term is zero");
  return -(total.value() - std::log(weights.normalizer));
}

SignedEstimate estimate_signed(const DiffusionProblem& problem, const AmisConfig& config) {
  std::function<double(const SamplePath&)> value;
  if (const auto* f = std::get_if<PathFunctional>(&problem.functional)) {
    value = f->value;
  } else {
    value = [problem](const SamplePath& p) { return problem.h(p); };
  }
  if (!value) throw ConfigError("signed estimation needs a path functional");

  DiffusionProblem positive = problem;
  positive.functional = PathFunctional{[value](const SamplePath& p) { return std::max(value(p), 0.0) + 1.0; }};
  DiffusionProblem negative = problem;
  negative.functional = PathFunctional{[value](const SamplePath& p) { return std::max(-value(p), 0.0) + 1.0; }};

  AmisConfig negative_config = config;
  negative_config.seed = splitmix64(config.seed ^ 0x5EEDULL);

  SignedEstimate out;
  out.positive_part = run_amis(positive, config).iterations.back().psi_hat;
  out.negative_part = run_amis(negative, negative_config).iterations.back().psi_hat;
  out.estimate = out.positive_part - out.negative_part;
  return out;
}

}  // namespace amis
