#include "gencarve/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>

#include "gencarve/error.hpp"
#include "gencarve/io.hpp"

namespace gencarve::stats {

std::string_view metric_name(Metric m) {
  switch (m) {
    case Metric::ChiSquare: return "chi_square";
    case Metric::Cosine: return "cosine";
    case Metric::Jsd: return "jsd";
    case Metric::Ssim: return "ssim";
  }
  return "?";
}

namespace {

// Neumaier compensated sum.
double accurate_sum(std::span<const double> values) {
  double sum = 0, comp = 0;
  for (double v : values) {
    const double t = sum + v;
    comp += std::fabs(sum) >= std::fabs(v) ? (sum - t) + v : (v - t) + sum;
    sum = t;
  }
  return sum + comp;
}

}  // namespace

MetricSummary summarize(std::span<const double> values, Metric metric, std::string set_id) {
  if (values.size() < 2) throw Error(Errc::TooFewSamples, "need at least 2 values, got " + std::to_string(values.size()));
  for (double v : values)
    if (!std::isfinite(v)) throw Error(Errc::NonFiniteValue, "non-finite value in " + set_id);

  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());

  MetricSummary s;
  s.metric = metric;
  s.set_id = std::move(set_id);
  s.n = values.size();
  const double n = static_cast<double>(s.n);
  s.mean = accurate_sum(values) / n;
  s.median = quantile_sorted(sorted, 0.5);
  s.min = sorted.front();
  s.max = sorted.back();
  std::vector<double> sq;
  sq.reserve(values.size());
  for (double v : values) sq.push_back((v - s.mean) * (v - s.mean));
  s.std_dev = std::sqrt(accurate_sum(sq) / (n - 1));
  s.ci95_margin = kZ95 * s.std_dev / std::sqrt(n);
  return s;
}

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw Error(Errc::TooFewSamples, "quantile of empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = h - static_cast<double>(lo);
  if (frac == 0) return sorted[lo];
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

BoxStats box_stats(std::span<const double> values) {
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  BoxStats b;
  b.n = sorted.size();
  b.q1 = quantile_sorted(sorted, 0.25);
  b.median = quantile_sorted(sorted, 0.5);
  b.q3 = quantile_sorted(sorted, 0.75);
  const double iqr = b.q3 - b.q1;
  const double lo_fence = b.q1 - 1.5 * iqr;
  const double hi_fence = b.q3 + 1.5 * iqr;
  b.lower_whisker = b.q1;
  b.upper_whisker = b.q3;
  for (double v : sorted) {
    if (v < lo_fence || v > hi_fence) {
      b.outliers.push_back(v);
    } else {
      b.lower_whisker = std::min(b.lower_whisker, v);
      b.upper_whisker = std::max(b.upper_whisker, v);
    }
  }
  return b;
}

std::string distribution_csv(std::span<const double> values, Metric metric, const std::string& set_id) {
  std::string out = "set_id,metric,value\n";
  for (double v : values) out += set_id + "," + std::string(metric_name(metric)) + "," + format_double(v) + "\n";
  return out;
}

std::string box_stats_csv(const BoxStats& box, Metric metric, const std::string& set_id) {
  std::string outliers;
  for (std::size_t i = 0; i < box.outliers.size(); ++i) outliers += (i ? ";" : "") + format_double(box.outliers[i]);
  return "set_id,metric,n,q1,median,q3,lower_whisker,upper_whisker,outliers\n" + set_id + "," +
         std::string(metric_name(metric)) + "," + std::to_string(box.n) + "," + format_double(box.q1) + "," +
         format_double(box.median) + "," + format_double(box.q3) + "," + format_double(box.lower_whisker) + "," +
         format_double(box.upper_whisker) + "," + outliers + "\n";
}

void export_distribution(const std::string& dir, std::span<const double> values, Metric metric,
                         const std::string& set_id) {
  if (values.empty()) throw Error(Errc::TooFewSamples, "cannot export an empty distribution");
  const std::filesystem::path base = std::filesystem::path(dir) / (set_id + "_" + std::string(metric_name(metric)));
  write_text(base.string() + ".csv", distribution_csv(values, metric, set_id));
  write_text(base.string() + ".quartiles.csv", box_stats_csv(box_stats(values), metric, set_id));
}

std::string summary_csv(std::span<const MetricSummary> rows) {
  std::string out = "metric,set_id,n,mean,median,min,max,std_dev,ci95_margin\n";
  for (const auto& s : rows) {
    out += std::string(metric_name(s.metric)) + "," + s.set_id + "," + std::to_string(s.n) + "," +
           format_double(s.mean) + "," + format_double(s.median) + "," + format_double(s.min) + "," +
           format_double(s.max) + "," + format_double(s.std_dev) + "," + format_double(s.ci95_margin) + "\n";
  }
  return out;
}

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

}  // namespace

std::string summary_table(std::span<const MetricSummary> rows, std::span<const std::string> set_ids) {
  std::map<std::pair<Metric, std::string>, const MetricSummary*> index;
  for (const auto& s : rows) index[{s.metric, s.set_id}] = &s;

  auto block = [&](const std::vector<std::pair<std::string, double MetricSummary::*>>& columns) {
    constexpr std::size_t kWidth = 10;
    std::string out = pad("Metric", 12);
    for (const auto& [label, field] : columns)
      for (const auto& id : set_ids) out += " " + pad(label + " " + id, kWidth + 4);
    out += "\n";
    for (Metric m : kAllMetrics) {
      const int digits = m == Metric::ChiSquare ? 2 : 4;
      std::string line = pad(std::string(metric_name(m)), 12);
      bool any = false;
      for (const auto& [label, field] : columns) {
        for (const auto& id : set_ids) {
          auto it = index.find({m, id});
          std::string cell = "-";
          if (it != index.end()) {
            cell = fixed(it->second->*field, digits);
            any = true;
          }
          line += " " + pad(cell, kWidth + 4);
        }
      }
      if (any) out += line + "\n";
    }
    return out;
  };

  return block({{"Mean", &MetricSummary::mean}, {"Std", &MetricSummary::std_dev}, {"CI95", &MetricSummary::ci95_margin}}) +
         "\n" +
         block({{"Median", &MetricSummary::median}, {"Min", &MetricSummary::min}, {"Max", &MetricSummary::max}});
}

}  // namespace gencarve::stats
