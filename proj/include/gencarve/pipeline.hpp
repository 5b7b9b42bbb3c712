#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gencarve/fragmenter.hpp"
#include "gencarve/matcher.hpp"
#include "gencarve/predictor.hpp"
#include "gencarve/stats.hpp"

namespace gencarve::pipeline {

enum class PredictorKind { Builtin, External };

struct PredictorSpec {
  PredictorKind kind = PredictorKind::Builtin;
  std::uint32_t order = 3;
  double smoothing = 0.1;
  SamplingPolicy policy;                      // policy.seed unused; see decode_seed
  std::optional<std::uint64_t> decode_seed;   // default: derived from the root seed
  std::vector<std::string> command;           // external only
  std::chrono::milliseconds timeout{30000};
};

struct PoolSpec {
  std::size_t size = 100;
  std::filesystem::path decoy_dir;            // formats inferred from extensions
  std::vector<DecoySource> decoys;
  std::map<SourceFormat, double> format_mix;  // empty: uniform over non-BMP formats
};

struct RunConfig {
  std::filesystem::path corpus_dir;
  std::filesystem::path output_dir = "gencarve-out";
  std::filesystem::path train_dir;            // empty: corpus images not used by the dataset
  std::vector<Ratio> ratios{{2, 5}, {3, 5}, {4, 5}};
  std::size_t per_ratio_count = 750;
  std::uint64_t seed = 0;
  unsigned jobs = 1;
  PredictorSpec predictor;
  PoolSpec pool;
  matcher::MatchWeights weights;
  std::size_t sample_per_ratio = 10;
  std::size_t top_k = 5;

  /// Strict JSON reader: unknown keys are a ConfigError.
  static RunConfig from_json(const std::string& text, const std::filesystem::path& base_dir = {});
  static RunConfig load(const std::filesystem::path& path);
  std::string to_json() const;
};

/// Output locations under config.output_dir.
struct Layout {
  std::filesystem::path root;
  std::filesystem::path dataset() const { return root / "dataset"; }
  std::filesystem::path manifest() const { return dataset() / "manifest.json"; }
  std::filesystem::path model() const { return root / "model.bin"; }
  std::filesystem::path predictions() const { return root / "predictions"; }
  std::filesystem::path prediction_index() const { return predictions() / "predictions.json"; }
  std::filesystem::path analysis() const { return root / "analysis"; }
  std::filesystem::path match() const { return root / "match"; }
  std::filesystem::path log() const { return root / "run.log"; }
};

/// "P1", "P2", ... by position in the ratio list.
std::string set_id(std::size_t ratio_index);

struct CommandStatus {
  std::size_t succeeded = 0;
  std::size_t failed = 0;
  std::vector<std::string> errors;
  bool partial() const { return failed > 0; }
};

DatasetManifest cmd_prepare(const RunConfig& config);

ByteModel cmd_train(const RunConfig& config);

CommandStatus cmd_predict(const RunConfig& config);

struct PredictionEntry {
  std::string set_tag;
  std::string source_id;
  std::string predictor_id;
  SamplingPolicy policy;
  std::size_t length = 0;
  std::string sha256;
  std::string error;  // empty on success
};

std::vector<PredictionEntry> load_prediction_index(const RunConfig& config);

struct AnalyzeOptions {
  std::vector<std::string> heatmaps;     // "source_id" or "ratio_tag/source_id"
  std::vector<std::string> reconstruct;
};

struct AnalyzeResult {
  std::vector<stats::MetricSummary> summaries;
  CommandStatus status;
};

AnalyzeResult cmd_analyze(const RunConfig& config, const AnalyzeOptions& options = {});

struct MatchOptions {
  bool perfect = false;  // score real fragments instead of predictions
};

struct MatchResult {
  std::vector<matcher::PoolRanking> rankings;
  matcher::MatchReport report;
  CommandStatus status;
};

MatchResult cmd_match(const RunConfig& config, const MatchOptions& options = {});

CommandStatus cmd_report(const RunConfig& config, const std::vector<std::string>& reconstruct = {});

/// Appends a timestamped line to <output>/run.log and echoes it to stderr.
void log_line(const RunConfig& config, const std::string& message);

}  // namespace gencarve::pipeline
