#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "amis/engine.hpp"

namespace amis::experiments {

inline constexpr std::string_view kCsvHeader =
    "experiment,scheme,run,iteration,total_samples,psi_hat,ess_hat,j_hat,adapt_ns,generate_ns,reweight_ns";

struct ResultRow {
  std::string experiment;
  std::string scheme;
  int run = 0;
  int iteration = 0;
  std::int64_t total_samples = 0;
  double psi_hat = 0.0;
  double ess_hat = 0.0;
  double j_hat = 0.0;
  std::int64_t adapt_ns = 0;
  std::int64_t generate_ns = 0;
  std::int64_t reweight_ns = 0;
};

ResultRow make_row(std::string experiment, std::string scheme, int run, const IterationOutput& out);

std::string format_row(const ResultRow& row);
void write_csv(std::ostream& out, std::span<const ResultRow> rows);
void write_csv(const std::filesystem::path& path, std::span<const ResultRow> rows);

/// Throws StructuralError when the header or a row does not match the schema.
std::vector<ResultRow> read_csv(std::istream& in);
std::vector<ResultRow> read_csv(const std::filesystem::path& path);

/// Mean over runs of ess_hat at each iteration of one scheme.
struct EssCurve {
  std::vector<double> total_samples;
  std::vector<double> mean;
  std::vector<double> stderr_of_mean;
};

EssCurve mean_ess_curve(std::span<const ResultRow> rows, std::string_view scheme);

/// Least-squares slope of the mean curve over its final `fraction` of iterations.
double late_window_slope(const EssCurve& curve, double fraction = 0.5);

struct SchemeSummary {
  double slope = 0.0;
  double final_ess_mean = 0.0;
  double final_ess_stderr = 0.0;
};

/// One summary per scheme, in order of first appearance.
std::vector<std::pair<std::string, SchemeSummary>> summarize(std::span<const ResultRow> rows);

/// {scheme: {slope, final_ess_mean, final_ess_stderr}}, plus "upper_bound"
/// with its slope when one is given (upper_bound_slope > 0).
void write_summary_json(const std::filesystem::path& path,
                        const std::vector<std::pair<std::string, SchemeSummary>>& summaries,
                        double upper_bound_slope = 0.0);

}  // namespace amis::experiments
