#pragma once

#include <span>
#include <string>
#include <vector>

namespace gencarve::stats {

enum class Metric { ChiSquare, Cosine, Jsd, Ssim };

std::string_view metric_name(Metric m);
inline constexpr Metric kAllMetrics[] = {Metric::ChiSquare, Metric::Cosine, Metric::Jsd, Metric::Ssim};

inline constexpr double kZ95 = 1.96;

struct MetricSummary {
  Metric metric = Metric::ChiSquare;
  std::string set_id;
  std::size_t n = 0;
  double mean = 0;
  double median = 0;
  double min = 0;
  double max = 0;
  double std_dev = 0;      // sample (n - 1)
  double ci95_margin = 0;  // 1.96 * std_dev / sqrt(n)
};

/// Throws TooFewSamples for n < 2 and NonFiniteValue for NaN/inf.
MetricSummary summarize(std::span<const double> values, Metric metric, std::string set_id);

/// Linear-interpolation quantile (R type 7) of already sorted values.
double quantile_sorted(std::span<const double> sorted, double q);

struct BoxStats {
  std::size_t n = 0;
  double q1 = 0;
  double median = 0;
  double q3 = 0;
  double lower_whisker = 0;  // smallest value >= q1 - 1.5 IQR
  double upper_whisker = 0;  // largest value <= q3 + 1.5 IQR
  std::vector<double> outliers;
};

BoxStats box_stats(std::span<const double> values);

/// "set_id,metric,value" rows.
std::string distribution_csv(std::span<const double> values, Metric metric, const std::string& set_id);
std::string box_stats_csv(const BoxStats& box, Metric metric, const std::string& set_id);

/// Writes <dir>/<set_id>_<metric>.csv and the .quartiles.csv sidecar.
void export_distribution(const std::string& dir, std::span<const double> values, Metric metric,
                         const std::string& set_id);

std::string summary_csv(std::span<const MetricSummary> rows);
/// Plain-text table: one row per metric, Mean / Std Dev / 95% CI blocks with
/// one column per set, followed by a Median / Min / Max block.
std::string summary_table(std::span<const MetricSummary> rows, std::span<const std::string> set_ids);

}  // namespace gencarve::stats
