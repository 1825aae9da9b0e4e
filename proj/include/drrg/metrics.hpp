#pragma once
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "drrg/transport.hpp"

namespace drrg {

struct RunMetrics {
    std::uint64_t run_id = 0;
    std::string protocol;
    std::string topology;
    std::size_t n = 0;
    double delta = 0.0;
    std::uint64_t seed = 0;
    MeterSnapshot phases;
    // Unknown when read back from CSV, which carries only the meters.
    std::optional<bool> correct;
    std::optional<double> max_relative_error;

    PhaseMeter totals() const { return phases.total(); }
};

// CSV: one row per run and phase, all phases listed.
void write_metrics_csv_header(std::ostream& out);
void write_metrics_csv(std::ostream& out, const RunMetrics& run);

// JSON-lines: a header record, then one "run" record per run with nested
// phases and totals. The timestamp is the only non-deterministic field and is
// left out when empty.
void write_metrics_jsonl_header(std::ostream& out, std::string_view timestamp = {});
void write_metrics_jsonl(std::ostream& out, const RunMetrics& run);

// Reads either format (detected from the first line). Throws
// std::runtime_error naming the file when it cannot be read or parsed.
std::vector<RunMetrics> read_metrics(const std::filesystem::path& path);
std::vector<RunMetrics> read_metrics(std::istream& in, const std::string& name);

struct Stat {
    double mean = 0.0;
    double std = 0.0;  // population standard deviation
    double min = 0.0;
    double q05 = 0.0;
    double q25 = 0.0;
    double median = 0.0;
    double q75 = 0.0;
    double q95 = 0.0;
    double max = 0.0;

    bool operator==(const Stat&) const = default;
};

// Linear-interpolation quantiles (R type 7).
Stat describe(std::span<const double> xs);

struct SummaryRow {
    std::string protocol;
    std::size_t n = 0;
    std::size_t trials = 0;
    Stat rounds;    // total rounds per run
    Stat messages;  // total messages sent per run
    std::optional<double> correct_rate;
    double msgs_per_n_loglog_n = 0.0;
    double msgs_per_n_log_n = 0.0;
    double rounds_per_log_n = 0.0;
    double rounds_per_log2_n = 0.0;

    bool operator==(const SummaryRow&) const = default;
};

// Rows ordered by (protocol, n).
struct SweepSummary {
    std::vector<SummaryRow> rows;

    bool operator==(const SweepSummary&) const = default;
};

// Groups runs by (protocol, n). Throws std::invalid_argument on empty input.
SweepSummary summarize(std::span<const RunMetrics> runs);
void write_summary_csv(std::ostream& out, const SweepSummary& s);

enum class Regressor { LogN, LogLogN, LogNSquared, N, NLogN, NLogLogN };

inline constexpr Regressor kAllRegressors[] = {Regressor::LogN, Regressor::LogLogN, Regressor::LogNSquared,
                                               Regressor::N,    Regressor::NLogN,   Regressor::NLogLogN};

std::string_view to_string(Regressor r);
double regressor_value(Regressor r, double n);

struct FitResult {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};

// Least squares of y against g(n). Needs at least 3 distinct n and finite,
// non-constant g(n); throws std::invalid_argument otherwise.
FitResult fit_growth(std::span<const std::pair<double, double>> points, Regressor r);

// Exponent e of y ~ a (log2 n)^e, fitted on log y against log log2 n.
FitResult fit_log_power(std::span<const std::pair<double, double>> points);

struct ComparisonRow {
    std::string protocol;
    std::size_t n = 0;
    double rounds_mean = 0.0;
    double messages_mean = 0.0;
    // reference / this protocol at the same n; absent without a reference row.
    std::optional<double> rounds_ratio;
    std::optional<double> messages_ratio;
};

std::vector<ComparisonRow> comparison_table(const SweepSummary& s, std::string_view reference = "uniform-push-sum");
void write_comparison_csv(std::ostream& out, std::span<const ComparisonRow> rows);
void print_comparison(std::ostream& out, std::span<const ComparisonRow> rows);

}  // namespace drrg
