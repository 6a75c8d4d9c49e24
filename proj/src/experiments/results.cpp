#include "amis/experiments/results.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "amis/error.hpp"

namespace amis::experiments {

namespace {

std::string number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(line.substr(start, comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return fields;
}

template <typename T>
T parse_int(const std::string& s, int line) {
  T value{};
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || end != s.data() + s.size()) {
    throw StructuralError("line " + std::to_string(line) + ": bad integer '" + s + "'");
  }
  return value;
}

double parse_double(const std::string& s, int line) {
  if (s.empty()) throw StructuralError("line " + std::to_string(line) + ": empty number");
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) {
    throw StructuralError("line " + std::to_string(line) + ": bad number '" + s + "'");
  }
  return v;
}

}  // namespace

ResultRow make_row(std::string experiment, std::string scheme, int run, const IterationOutput& out) {
  ResultRow row;
  row.experiment = std::move(experiment);
  row.scheme = std::move(scheme);
  row.run = run;
  row.iteration = out.k;
  row.total_samples = out.total_samples;
  row.psi_hat = out.psi_hat;
  row.ess_hat = out.ess.ess_hat;
  row.j_hat = out.j_hat;
  row.adapt_ns = out.phases.adapt_ns;
  row.generate_ns = out.phases.generate_ns;
  row.reweight_ns = out.phases.reweight_ns;
  return row;
}

std::string format_row(const ResultRow& r) {
  std::string s;
  s += r.experiment + ',' + r.scheme + ',' + std::to_string(r.run) + ',' + std::to_string(r.iteration) + ',';
  s += std::to_string(r.total_samples) + ',' + number(r.psi_hat) + ',' + number(r.ess_hat) + ',' + number(r.j_hat);
  s += ',' + std::to_string(r.adapt_ns) + ',' + std::to_string(r.generate_ns) + ',' + std::to_string(r.reweight_ns);
  return s;
}

void write_csv(std::ostream& out, std::span<const ResultRow> rows) {
  out << kCsvHeader << '\n';
  for (const auto& r : rows) out << format_row(r) << '\n';
}

void write_csv(const std::filesystem::path& path, std::span<const ResultRow> rows) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  write_csv(out, rows);
  if (!out) throw Error("failed writing " + path.string());
}

std::vector<ResultRow> read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw StructuralError("CSV header does not match the schema");
  std::vector<ResultRow> rows;
  int n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != 11) throw StructuralError("line " + std::to_string(n) + ": expected 11 fields");
    ResultRow r;
    r.experiment = f[0];
    r.scheme = f[1];
    r.run = parse_int<int>(f[2], n);
    r.iteration = parse_int<int>(f[3], n);
    r.total_samples = parse_int<std::int64_t>(f[4], n);
    r.psi_hat = parse_double(f[5], n);
    r.ess_hat = parse_double(f[6], n);
    r.j_hat = parse_double(f[7], n);
    r.adapt_ns = parse_int<std::int64_t>(f[8], n);
    r.generate_ns = parse_int<std::int64_t>(f[9], n);
    r.reweight_ns = parse_int<std::int64_t>(f[10], n);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<ResultRow> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return read_csv(in);
}

EssCurve mean_ess_curve(std::span<const ResultRow> rows, std::string_view scheme) {
  std::vector<double> sum, sum_sq, count, samples;
  for (const auto& r : rows) {
    if (r.scheme != scheme) continue;
    if (r.iteration < 1) throw StructuralError("iteration index must be 1-based");
    const auto i = static_cast<std::size_t>(r.iteration - 1);
    if (i >= sum.size()) {
      sum.resize(i + 1, 0.0);
      sum_sq.resize(i + 1, 0.0);
      count.resize(i + 1, 0.0);
      samples.resize(i + 1, 0.0);
    }
    sum[i] += r.ess_hat;
    sum_sq[i] += r.ess_hat * r.ess_hat;
    count[i] += 1.0;
    samples[i] = static_cast<double>(r.total_samples);
  }
  EssCurve curve;
  for (std::size_t i = 0; i < sum.size(); ++i) {
    if (count[i] == 0.0) continue;
    const double mean = sum[i] / count[i];
    double se = 0.0;
    if (count[i] > 1.0) {
      const double var = std::max(0.0, (sum_sq[i] - count[i] * mean * mean) / (count[i] - 1.0));
      se = std::sqrt(var / count[i]);
    }
    curve.total_samples.push_back(samples[i]);
    curve.mean.push_back(mean);
    curve.stderr_of_mean.push_back(se);
  }
  return curve;
}

double late_window_slope(const EssCurve& curve, double fraction) {
  const auto n = curve.mean.size();
  if (n < 2) return 0.0;
  auto window = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n)));
  window = std::clamp<std::size_t>(window, 2, n);
  const std::size_t first = n - window;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = first; i < n; ++i) {
    mx += curve.total_samples[i];
    my += curve.mean[i];
  }
  mx /= static_cast<double>(window);
  my /= static_cast<double>(window);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = first; i < n; ++i) {
    const double dx = curve.total_samples[i] - mx;
    sxy += dx * (curve.mean[i] - my);
    sxx += dx * dx;
  }
  return sxx > 0.0 ? sxy / sxx : 0.0;
}

std::vector<std::pair<std::string, SchemeSummary>> summarize(std::span<const ResultRow> rows) {
  std::vector<std::string> schemes;
  for (const auto& r : rows) {
    if (std::find(schemes.begin(), schemes.end(), r.scheme) == schemes.end()) schemes.push_back(r.scheme);
  }
  std::vector<std::pair<std::string, SchemeSummary>> out;
  for (const auto& s : schemes) {
    const auto curve = mean_ess_curve(rows, s);
    SchemeSummary summary;
    summary.slope = late_window_slope(curve);
    if (!curve.mean.empty()) {
      summary.final_ess_mean = curve.mean.back();
      summary.final_ess_stderr = curve.stderr_of_mean.back();
    }
    out.emplace_back(s, summary);
  }
  return out;
}

void write_summary_json(const std::filesystem::path& path,
                        const std::vector<std::pair<std::string, SchemeSummary>>& summaries,
                        double upper_bound_slope) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [scheme, s] : summaries) {
    j[scheme] = {{"slope", s.slope}, {"final_ess_mean", s.final_ess_mean}, {"final_ess_stderr", s.final_ess_stderr}};
  }
  if (upper_bound_slope > 0.0) j["upper_bound"] = {{"slope", upper_bound_slope}};
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace amis::experiments
