// gencarve: dataset slicing, byte-level prediction, similarity analysis and
// fragment matching for generative multimedia carving.

#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "gencarve/error.hpp"
#include "gencarve/external_predictor.hpp"
#include "gencarve/io.hpp"
#include "gencarve/pipeline.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitPartial = 1;
constexpr int kExitFailure = 2;

int report_status(const gencarve::pipeline::CommandStatus& status) {
  for (const auto& e : status.errors) std::cerr << "  " << e << "\n";
  return status.partial() ? kExitPartial : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace gencarve;
  using namespace gencarve::pipeline;

  CLI::App app{"Generative multimedia carving toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> jobs;
  std::string out_dir;
  app.add_option("--config", config_path, "Run configuration (JSON)")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "Root seed for every random stream");
  app.add_option("--jobs", jobs, "Worker threads / predictor processes");
  app.add_option("--out", out_dir, "Output directory");

  // prepare
  auto* prepare = app.add_subcommand("prepare", "Slice corpus images into input/real fragment sets");
  std::string corpus_dir;
  std::vector<std::string> ratios;
  std::optional<std::size_t> per_ratio;
  prepare->add_option("--corpus", corpus_dir, "Directory of BMP images");
  prepare->add_option("--ratios", ratios, "Retained fractions, e.g. 2/5,3/5,4/5")->delimiter(',');
  prepare->add_option("--per-ratio", per_ratio, "Images per ratio set");

  // train
  auto* train_cmd = app.add_subcommand("train", "Train the built-in byte context model");
  std::string train_dir;
  std::optional<std::uint32_t> order;
  std::optional<double> smoothing;
  train_cmd->add_option("--train-dir", train_dir, "Training images (default: corpus images not in the dataset)");
  train_cmd->add_option("--corpus", corpus_dir, "Directory of BMP images");
  train_cmd->add_option("--order", order, "Context length in bytes");
  train_cmd->add_option("--smoothing", smoothing, "Additive smoothing constant");

  // predict
  auto* predict_cmd = app.add_subcommand("predict", "Generate a continuation for every input fragment");
  std::string kind, command, mode;
  std::optional<std::int64_t> timeout_ms;
  std::optional<double> temperature;
  std::optional<std::uint32_t> top_k_decode;
  predict_cmd->add_option("--predictor", kind, "builtin or external")->check(CLI::IsMember({"builtin", "external"}));
  predict_cmd->add_option("--command", command, "External predictor command line");
  predict_cmd->add_option("--timeout-ms", timeout_ms, "External predictor timeout per request");
  predict_cmd->add_option("--mode", mode, "greedy, temperature or top_k")->check(CLI::IsMember({"greedy", "temperature", "top_k"}));
  predict_cmd->add_option("--temperature", temperature);
  predict_cmd->add_option("--top-k", top_k_decode);
  predict_cmd->add_option("--order", order, "Context length (when training on demand)");
  predict_cmd->add_option("--smoothing", smoothing);

  // analyze
  auto* analyze_cmd = app.add_subcommand("analyze", "Similarity metrics and summary statistics");
  AnalyzeOptions analyze_opts;
  analyze_cmd->add_option("--heatmap", analyze_opts.heatmaps, "Record id (or ratio_tag/id) for an SSIM heatmap");
  analyze_cmd->add_option("--reconstruct", analyze_opts.reconstruct, "Record id for the five reconstruction panels");

  // match
  auto* match_cmd = app.add_subcommand("match", "Rank each sampled prediction against a decoy pool");
  std::optional<std::size_t> sample, pool_size, top_k;
  std::string decoy_dir;
  MatchOptions match_opts;
  match_cmd->add_option("--sample", sample, "Predictions sampled per ratio set");
  match_cmd->add_option("--pool-size", pool_size, "Candidates per pool");
  match_cmd->add_option("--top-k", top_k, "Rank threshold for the tally");
  match_cmd->add_option("--decoy-dir", decoy_dir, "Directory of WAV/JPEG/PNG/MP4 decoy files");
  match_cmd->add_flag("--perfect", match_opts.perfect, "Score real fragments instead of predictions");

  // report
  auto* report_cmd = app.add_subcommand("report", "Collect tables and reconstructions into report.md");
  std::vector<std::string> report_reconstruct;
  report_cmd->add_option("--reconstruct", report_reconstruct, "Record ids to render as panels");

  CLI11_PARSE(app, argc, argv);

  try {
    RunConfig config = config_path.empty() ? RunConfig{} : RunConfig::load(config_path);
    if (seed) config.seed = *seed;
    if (jobs) config.jobs = std::max(1u, *jobs);
    if (!out_dir.empty()) config.output_dir = out_dir;
    if (!corpus_dir.empty()) config.corpus_dir = corpus_dir;
    if (!ratios.empty()) {
      config.ratios.clear();
      for (const auto& r : ratios) config.ratios.push_back(Ratio::parse(r));
    }
    if (per_ratio) config.per_ratio_count = *per_ratio;
    if (!train_dir.empty()) config.train_dir = train_dir;
    if (order) config.predictor.order = *order;
    if (smoothing) config.predictor.smoothing = *smoothing;
    if (!kind.empty()) config.predictor.kind = kind == "external" ? PredictorKind::External : PredictorKind::Builtin;
    if (!command.empty()) config.predictor.command = split_command(command);
    if (timeout_ms) config.predictor.timeout = std::chrono::milliseconds(*timeout_ms);
    if (!mode.empty()) config.predictor.policy.mode = parse_decode_mode(mode);
    if (temperature) config.predictor.policy.temperature = *temperature;
    if (top_k_decode) config.predictor.policy.top_k = *top_k_decode;
    if (sample) config.sample_per_ratio = *sample;
    if (pool_size) config.pool.size = *pool_size;
    if (top_k) config.top_k = *top_k;
    if (!decoy_dir.empty()) config.pool.decoy_dir = decoy_dir;
    if (config.pool.size < 2) throw Error(Errc::ConfigError, "pool size must be >= 2");

    if (*prepare) {
      cmd_prepare(config);
      return kExitOk;
    }
    if (*train_cmd) {
      cmd_train(config);
      return kExitOk;
    }
    if (*predict_cmd) return report_status(cmd_predict(config));
    if (*analyze_cmd) {
      auto result = cmd_analyze(config, analyze_opts);
      std::cout << gencarve::read_text(Layout{config.output_dir}.analysis() / "summary.txt");
      return report_status(result.status);
    }
    if (*match_cmd) {
      auto result = cmd_match(config, match_opts);
      if (result.report.total > 0) std::cout << matcher::tally_table(result.report);
      return report_status(result.status);
    }
    if (*report_cmd) return report_status(cmd_report(config, report_reconstruct));
  } catch (const Error& e) {
    std::cerr << "gencarve: " << e.what() << "\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    std::cerr << "gencarve: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitOk;
}
