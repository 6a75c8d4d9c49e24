#include "amis/experiments/config.hpp"

#include <cstdlib>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include <json.hpp>

#include "amis/error.hpp"

namespace amis::experiments {

namespace {

using nlohmann::json;

void only_keys(const json& obj, std::string_view where, std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) throw ConfigError(std::string(where) + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError("unknown key '" + key + "' in " + std::string(where));
  }
}

template <typename T>
T get(const json& obj, const char* key, std::string_view where) {
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("invalid or missing '" + std::string(key) + "' in " + std::string(where) + ": " + e.what());
  }
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback, std::string_view where) {
  if (!obj.contains(key)) return fallback;
  return get<T>(obj, key, where);
}

Eigen::VectorXd vector_of(const json& v, std::string_view where) {
  if (!v.is_array()) throw ConfigError(std::string(where) + " must be an array of numbers");
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) throw ConfigError(std::string(where) + " must contain numbers");
    out[static_cast<Eigen::Index>(i)] = v[i].get<double>();
  }
  return out;
}

Eigen::MatrixXd matrix_of(const json& v, std::string_view where) {
  if (!v.is_array() || v.empty() || !v[0].is_array()) {
    throw ConfigError(std::string(where) + " must be an array of rows");
  }
  const auto rows = static_cast<Eigen::Index>(v.size());
  const auto cols = static_cast<Eigen::Index>(v[0].size());
  Eigen::MatrixXd out(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto row = vector_of(v[static_cast<std::size_t>(r)], where);
    if (row.size() != cols) throw ConfigError(std::string(where) + " rows must have equal length");
    out.row(r) = row.transpose();
  }
  return out;
}

ProblemConfig parse_problem(const json& j) {
  ProblemConfig p;
  const auto kind = get<std::string>(j, "kind", "problem");
  if (kind == "example71" || kind == "gaussian_target") {
    only_keys(j, "problem", {"kind", "dim", "target", "num_steps"});
    p.kind = ProblemConfig::Kind::GaussianTarget;
    const int dim = get_or<int>(j, "dim", 3, "problem");
    if (dim <= 0) throw ConfigError("problem.dim must be positive");
    if (!j.contains("target")) {
      p.target = Eigen::VectorXd::Constant(dim, 2.0);
    } else if (j.at("target").is_number()) {
      p.target = Eigen::VectorXd::Constant(dim, j.at("target").get<double>());
    } else {
      p.target = vector_of(j.at("target"), "problem.target");
      if (j.contains("dim") && p.target.size() != dim) throw ConfigError("problem.target length must equal dim");
    }
    p.num_steps = get_or<int>(j, "num_steps", 100, "problem");
    if (p.num_steps <= 0) throw ConfigError("problem.num_steps must be positive");
  } else if (kind == "counterexample32" || kind == "one_step_gaussian") {
    only_keys(j, "problem", {"kind"});
    p.kind = ProblemConfig::Kind::OneStepGaussian;
  } else if (kind == "custom") {
    only_keys(j, "problem",
              {"kind", "state_dim", "noise_dim", "horizon", "num_steps", "x0", "drift_matrix", "drift_offset",
               "diffusion", "target", "terminal_weight", "running_weight"});
    p.kind = ProblemConfig::Kind::LinearQuadratic;
    auto& c = p.custom;
    c.state_dim = get<int>(j, "state_dim", "problem");
    c.noise_dim = get_or<int>(j, "noise_dim", c.state_dim, "problem");
    c.horizon = get_or<double>(j, "horizon", 1.0, "problem");
    c.num_steps = get_or<int>(j, "num_steps", 100, "problem");
    if (c.state_dim <= 0 || c.noise_dim <= 0 || c.num_steps <= 0 || !(c.horizon > 0.0)) {
      throw ConfigError("custom problem needs positive dimensions, steps and horizon");
    }
    const auto d = c.state_dim;
    c.x0 = j.contains("x0") ? vector_of(j.at("x0"), "problem.x0") : Eigen::VectorXd::Zero(d);
    c.drift_matrix =
        j.contains("drift_matrix") ? matrix_of(j.at("drift_matrix"), "problem.drift_matrix") : Eigen::MatrixXd::Zero(d, d);
    c.drift_offset =
        j.contains("drift_offset") ? vector_of(j.at("drift_offset"), "problem.drift_offset") : Eigen::VectorXd::Zero(d);
    c.diffusion = j.contains("diffusion") ? matrix_of(j.at("diffusion"), "problem.diffusion")
                                          : Eigen::MatrixXd::Identity(d, c.noise_dim);
    c.target = j.contains("target") ? vector_of(j.at("target"), "problem.target") : Eigen::VectorXd::Zero(d);
    c.terminal_weight = get_or<double>(j, "terminal_weight", 1.0, "problem");
    c.running_weight = get_or<double>(j, "running_weight", 0.0, "problem");
    problems::linear_quadratic(c);  // dimension checks
  } else {
    throw ConfigError("unknown problem kind '" + kind + "'");
  }
  return p;
}

ReweightScheme parse_scheme(const json& j) {
  ReweightScheme s;
  if (j.is_string()) {
    s.kind = parse_scheme_kind(j.get<std::string>());
    return s;
  }
  only_keys(j, "scheme", {"kind", "candidates", "min_retained"});
  s.kind = parse_scheme_kind(get<std::string>(j, "kind", "scheme"));
  const auto candidates = get_or<std::string>(j, "candidates", "all", "scheme");
  if (candidates == "all") {
    s.candidates = ReweightScheme::Candidates::All;
  } else if (candidates == "powers_of_two") {
    s.candidates = ReweightScheme::Candidates::PowersOfTwo;
  } else {
    throw ConfigError("scheme.candidates must be 'all' or 'powers_of_two'");
  }
  s.min_retained = get_or<int>(j, "min_retained", 2, "scheme");
  s.validate();
  return s;
}

BasisConfig::Kind parse_basis_kind(const std::string& name) {
  if (name == "constant") return BasisConfig::Kind::Constant;
  if (name == "affine") return BasisConfig::Kind::Affine;
  if (name == "piecewise") return BasisConfig::Kind::Piecewise;
  throw ConfigError("unknown basis kind '" + name + "'");
}

BasisConfig parse_basis(const json& j) {
  BasisConfig b;
  if (j.is_string()) {
    b.kind = parse_basis_kind(j.get<std::string>());
    if (b.kind == BasisConfig::Kind::Piecewise) throw ConfigError("piecewise basis needs 'inner' and 'intervals'");
    return b;
  }
  only_keys(j, "basis", {"kind", "inner", "intervals"});
  b.kind = parse_basis_kind(get<std::string>(j, "kind", "basis"));
  if (b.kind == BasisConfig::Kind::Piecewise) {
    b.inner = parse_basis_kind(get<std::string>(j, "inner", "basis"));
    if (b.inner == BasisConfig::Kind::Piecewise) throw ConfigError("piecewise basis cannot nest");
    b.intervals = get<int>(j, "intervals", "basis");
    if (b.intervals <= 0) throw ConfigError("basis.intervals must be positive");
  } else if (j.contains("inner") || j.contains("intervals")) {
    throw ConfigError("'inner' and 'intervals' apply to the piecewise basis only");
  }
  return b;
}

AdaptationConfig parse_adaptation(const json& j) {
  only_keys(j, "adaptation", {"kind", "mode", "clamp", "slope"});
  AdaptationConfig a;
  const auto kind = get_or<std::string>(j, "kind", "path_integral", "adaptation");
  if (kind == "path_integral") {
    a.kind = AdaptationConfig::Kind::PathIntegral;
  } else if (kind == "none") {
    a.kind = AdaptationConfig::Kind::None;
  } else if (kind == "forced_linear") {
    a.kind = AdaptationConfig::Kind::ForcedLinear;
    a.forced_slope = get_or<double>(j, "slope", 1.0, "adaptation");
  } else {
    throw ConfigError("unknown adaptation kind '" + kind + "'");
  }
  if (j.contains("slope") && a.kind != AdaptationConfig::Kind::ForcedLinear) {
    throw ConfigError("'slope' applies to forced_linear adaptation only");
  }
  const auto mode = get_or<std::string>(j, "mode", "auto", "adaptation");
  if (mode == "full") {
    a.mode = AdaptationMode::FullRecompute;
  } else if (mode == "incremental") {
    a.mode = AdaptationMode::Incremental;
  } else if (mode != "auto") {
    throw ConfigError("adaptation.mode must be 'auto', 'full' or 'incremental'");
  }
  if (j.contains("clamp") && !j.at("clamp").is_null()) {
    a.clamp = get<double>(j, "clamp", "adaptation");
    if (!(*a.clamp > 0.0)) throw ConfigError("adaptation.clamp must be positive");
  }
  return a;
}

}  // namespace

ExperimentConfig parse_config(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  only_keys(j, "config",
            {"experiment", "problem", "scheme", "basis", "adaptation", "schedule", "seeds", "num_runs", "output"});

  ExperimentConfig c;
  c.experiment = get_or<std::string>(j, "experiment", "run", "config");
  if (j.contains("problem")) c.problem = parse_problem(j.at("problem"));
  if (j.contains("scheme")) c.scheme = parse_scheme(j.at("scheme"));
  if (j.contains("basis")) c.basis = parse_basis(j.at("basis"));
  if (j.contains("adaptation")) c.adaptation = parse_adaptation(j.at("adaptation"));
  if (j.contains("schedule")) {
    const auto& s = j.at("schedule");
    only_keys(s, "schedule", {"batch", "iterations"});
    c.batch = get_or<int>(s, "batch", 1, "schedule");
    c.iterations = get_or<int>(s, "iterations", 1, "schedule");
  }
  if (c.batch < 1 || c.iterations < 1) throw ConfigError("schedule batch and iterations must be at least 1");

  const bool has_seeds = j.contains("seeds");
  const bool has_runs = j.contains("num_runs");
  if (has_seeds) c.seeds = get<std::vector<std::uint64_t>>(j, "seeds", "config");
  if (has_runs) {
    const int runs = get<int>(j, "num_runs", "config");
    if (runs < 1) throw ConfigError("num_runs must be at least 1");
    if (has_seeds && static_cast<int>(c.seeds.size()) != runs) {
      throw ConfigError("num_runs must equal the number of seeds");
    }
    if (!has_seeds) c.seeds = seed_range(default_seed_base(), runs);
  }
  if (!has_seeds && !has_runs) c.seeds = {default_seed_base()};
  if (c.seeds.empty()) throw ConfigError("at least one seed is required");
  c.output = get_or<std::string>(j, "output", "results.csv", "config");
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

DiffusionProblem build_problem(const ProblemConfig& config) {
  switch (config.kind) {
    case ProblemConfig::Kind::GaussianTarget:
      return problems::gaussian_target(config.target, config.num_steps);
    case ProblemConfig::Kind::OneStepGaussian:
      return problems::one_step_gaussian();
    case ProblemConfig::Kind::LinearQuadratic:
      return problems::linear_quadratic(config.custom);
  }
  throw ConfigError("unknown problem kind");
}

namespace {
Basis simple_basis(BasisConfig::Kind kind, const DiffusionProblem& problem) {
  return kind == BasisConfig::Kind::Affine ? Basis::affine(problem.state_dim) : Basis::constant();
}
}  // namespace

Basis build_basis(const BasisConfig& config, const DiffusionProblem& problem) {
  if (config.kind == BasisConfig::Kind::Piecewise) {
    return Basis::piecewise_constant_time(simple_basis(config.inner, problem), config.intervals, problem.horizon);
  }
  return simple_basis(config.kind, problem);
}

AmisConfig build_amis_config(const ExperimentConfig& config, const DiffusionProblem& problem, std::uint64_t seed) {
  AmisConfig a;
  a.scheme = config.scheme;
  a.schedule = AmisConfig::constant_schedule(config.iterations, config.batch);
  a.seed = seed;
  switch (config.adaptation.kind) {
    case AdaptationConfig::Kind::PathIntegral: {
      PathIntegralAdaptation pi;
      pi.basis = build_basis(config.basis, problem);
      pi.mode = config.adaptation.mode.value_or(config.scheme.kind == ReweightScheme::Kind::Balance
                                                    ? AdaptationMode::FullRecompute
                                                    : AdaptationMode::Incremental);
      pi.clamp_bound = config.adaptation.clamp;
      a.adaptation = pi;
      break;
    }
    case AdaptationConfig::Kind::None:
      a.adaptation = FixedControl{FeedbackControl::zero(problem.noise_dim)};
      break;
    case AdaptationConfig::Kind::ForcedLinear: {
      const int m = problem.noise_dim;
      const double slope = config.adaptation.forced_slope;
      a.adaptation = ForcedControls{[m, slope](int k) {
        return FeedbackControl::constant(Eigen::VectorXd::Constant(m, slope * k));
      }};
      break;
    }
  }
  return a;
}

std::vector<std::uint64_t> seed_range(std::uint64_t base, int count) {
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < count; ++i) seeds.push_back(base + static_cast<std::uint64_t>(i));
  return seeds;
}

std::uint64_t default_seed_base() {
  if (const char* env = std::getenv("AMIS_SEED"); env != nullptr && *env != '\0') {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw ConfigError("AMIS_SEED must be a nonnegative integer");
    }
  }
  return 1;
}

}  // namespace amis::experiments
