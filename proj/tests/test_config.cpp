#include <doctest.h>

#include <cstdlib>
#include <sstream>

#include "amis/error.hpp"
#include "amis/experiments/commands.hpp"

using namespace amis;
using namespace amis::experiments;

TEST_CASE("config parsing") {
  SUBCASE("defaults") {
    const auto c = parse_config(R"({"seeds": [4]})");
    CHECK(c.problem.kind == ProblemConfig::Kind::GaussianTarget);
    CHECK(c.problem.target.size() == 3);
    CHECK(c.problem.target[0] == 2.0);
    CHECK(c.problem.num_steps == 100);
    CHECK(c.seeds == std::vector<std::uint64_t>{4});
  }
  SUBCASE("full document") {
    const auto c = parse_config(R"({
      "experiment": "demo",
      "problem": {"kind": "example71", "dim": 2, "target": 1.5, "num_steps": 20},
      "scheme": {"kind": "discard_optimized", "candidates": "powers_of_two", "min_retained": 3},
      "basis": {"kind": "piecewise", "inner": "affine", "intervals": 4},
      "adaptation": {"kind": "path_integral", "mode": "incremental", "clamp": 3.0},
      "schedule": {"batch": 5, "iterations": 7},
      "seeds": [1, 2, 3],
      "num_runs": 3,
      "output": "out.csv"
    })");
    CHECK(c.experiment == "demo");
    CHECK(c.problem.target.size() == 2);
    CHECK(c.scheme.kind == ReweightScheme::Kind::DiscardOptimized);
    CHECK(c.scheme.candidates == ReweightScheme::Candidates::PowersOfTwo);
    CHECK(c.scheme.min_retained == 3);
    CHECK(c.basis.kind == BasisConfig::Kind::Piecewise);
    CHECK(c.basis.intervals == 4);
    CHECK(c.adaptation.mode == AdaptationMode::Incremental);
    CHECK(c.adaptation.clamp == 3.0);
    CHECK(c.batch == 5);
    CHECK(c.iterations == 7);
    const auto problem = build_problem(c.problem);
    CHECK(build_basis(c.basis, problem).size() == 12);
    const auto amis = build_amis_config(c, problem, 2);
    CHECK(amis.schedule == std::vector<int>(7, 5));
    CHECK(amis.seed == 2);
  }
  SUBCASE("custom problem") {
    const auto c = parse_config(R"({"problem": {"kind": "custom", "state_dim": 2, "noise_dim": 1,
      "diffusion": [[1.0], [0.5]], "drift_matrix": [[-1, 0], [0, -1]], "target": [1, 1]}, "seeds": [1]})");
    const auto p = build_problem(c.problem);
    CHECK(p.state_dim == 2);
    CHECK(p.noise_dim == 1);
  }
  SUBCASE("counterexample problem with forced proposals") {
    const auto c = parse_config(R"({"problem": {"kind": "counterexample32"}, "scheme": "flat",
      "adaptation": {"kind": "forced_linear", "slope": 1.0}, "seeds": [1]})");
    CHECK(c.problem.kind == ProblemConfig::Kind::OneStepGaussian);
    const auto p = build_problem(c.problem);
    const auto amis = build_amis_config(c, p, 1);
    CHECK(std::get<ForcedControls>(amis.adaptation).control_for(3).params()(0, 0) == 3.0);
  }
  SUBCASE("scheme-dependent adaptation mode") {
    const auto b = parse_config(R"({"scheme": "balance", "seeds": [1]})");
    const auto p = build_problem(b.problem);
    CHECK(std::get<PathIntegralAdaptation>(build_amis_config(b, p, 1).adaptation).mode == AdaptationMode::FullRecompute);
    const auto f = parse_config(R"({"scheme": "flat", "seeds": [1]})");
    CHECK(std::get<PathIntegralAdaptation>(build_amis_config(f, p, 1).adaptation).mode == AdaptationMode::Incremental);
  }
}

TEST_CASE("config rejections") {
  const char* bad[] = {
      R"({"sceme": "flat"})",
      R"({"problem": {"kind": "example71", "dimension": 3}})",
      R"({"scheme": {"kind": "flat", "extra": 1}})",
      R"({"scheme": "power"})",
      R"({"schedule": {"batch": 0, "iterations": 3}})",
      R"({"seeds": [1, 2], "num_runs": 3})",
      R"({"basis": {"kind": "piecewise", "inner": "piecewise", "intervals": 2}})",
      R"({"adaptation": {"kind": "path_integral", "mode": "lazy"}})",
      R"({"scheme": {"kind": "discard_optimized", "min_retained": 1}})",
      R"({"problem": {"kind": "nope"}})",
      R"(not json)",
      R"({"seeds": "1"})",
  };
  for (const char* text : bad) {
    CAPTURE(text);
    CHECK_THROWS_AS(parse_config(text), ConfigError);
  }
}

TEST_CASE("seeds") {
  CHECK(seed_range(10, 3) == std::vector<std::uint64_t>{10, 11, 12});
  setenv("AMIS_SEED", "500", 1);
  CHECK(default_seed_base() == 500);
  const auto c = parse_config(R"({"num_runs": 2})");
  CHECK(c.seeds == std::vector<std::uint64_t>{500, 501});
  setenv("AMIS_SEED", "abc", 1);
  CHECK_THROWS_AS(default_seed_base(), ConfigError);
  unsetenv("AMIS_SEED");
  CHECK(default_seed_base() == 1);
}

TEST_CASE("CSV round trip and summaries") {
  std::vector<ResultRow> rows;
  for (int run = 0; run < 3; ++run) {
    for (int k = 1; k <= 10; ++k) {
      ResultRow r;
      r.experiment = "t";
      r.scheme = run == 2 ? "other" : "s";
      r.run = run;
      r.iteration = k;
      r.total_samples = k;
      r.psi_hat = 0.1 * k + 1e-17 * run;
      r.ess_hat = 0.5 * k + run;
      r.j_hat = std::nan("");
      rows.push_back(r);
    }
  }
  std::stringstream ss;
  write_csv(ss, rows);
  const std::string text = ss.str();
  CHECK(text.substr(0, text.find('\n')) == kCsvHeader);
  std::istringstream in(text);
  const auto back = read_csv(in);
  REQUIRE(back.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(back[i].psi_hat == rows[i].psi_hat);
    CHECK(back[i].ess_hat == rows[i].ess_hat);
    CHECK(std::isnan(back[i].j_hat));
  }

  const auto curve = mean_ess_curve(rows, "s");
  CHECK(curve.mean.size() == 10);
  CHECK(curve.mean[0] == doctest::Approx(1.0));
  CHECK(late_window_slope(curve) == doctest::Approx(0.5).epsilon(1e-12));
  const auto summary = summarize(rows);
  REQUIRE(summary.size() == 2);
  CHECK(summary[0].first == "s");
  CHECK(summary[0].second.final_ess_mean == doctest::Approx(5.5));
  CHECK(summary[0].second.final_ess_stderr == doctest::Approx(0.5));

  std::istringstream bad_header("experiment,scheme\n");
  CHECK_THROWS_AS(read_csv(bad_header), StructuralError);
  std::istringstream bad_row(std::string(kCsvHeader) + "\nx,y,1,2\n");
  CHECK_THROWS_AS(read_csv(bad_row), StructuralError);
}
