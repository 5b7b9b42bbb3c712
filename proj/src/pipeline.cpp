#include "gencarve/pipeline.hpp"

#include <atomic>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <mutex>
#include <set>
#include <thread>

#include <json.hpp>

#include "gencarve/digest.hpp"
#include "gencarve/error.hpp"
#include "gencarve/external_predictor.hpp"
#include "gencarve/metrics.hpp"
#include "gencarve/parallel.hpp"
#include "gencarve/reconstruct.hpp"
#include "gencarve/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace gencarve::pipeline {

std::string set_id(std::size_t ratio_index) { return "P" + std::to_string(ratio_index + 1); }

// ---------------------------------------------------------------------------
// Config

namespace {

void check_keys(const json& j, std::initializer_list<std::string_view> allowed, std::string_view where) {
  if (!j.is_object()) throw Error(Errc::ConfigError, std::string(where) + " must be an object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) throw Error(Errc::ConfigError, "unknown key '" + key + "' in " + std::string(where));
  }
}

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_relative() && !base.empty() ? base / path : path;
}

std::string policy_seed_note(const PredictorSpec& p) {
  return p.decode_seed ? std::to_string(*p.decode_seed) : "derived";
}

}  // namespace

RunConfig RunConfig::from_json(const std::string& text, const fs::path& base_dir) {
  RunConfig c;
  try {
    const json j = json::parse(text);
    check_keys(j, {"corpus_dir", "output_dir", "train_dir", "ratios", "per_ratio_count", "seed", "jobs", "predictor",
                   "pool", "weights", "match"},
               "config");
    if (j.contains("corpus_dir")) c.corpus_dir = resolve(base_dir, j["corpus_dir"].get<std::string>());
    if (j.contains("output_dir")) c.output_dir = resolve(base_dir, j["output_dir"].get<std::string>());
    if (j.contains("train_dir")) c.train_dir = resolve(base_dir, j["train_dir"].get<std::string>());
    if (j.contains("ratios")) {
      c.ratios.clear();
      for (const auto& r : j["ratios"]) c.ratios.push_back(Ratio::parse(r.get<std::string>()));
    }
    if (j.contains("per_ratio_count")) c.per_ratio_count = j["per_ratio_count"].get<std::size_t>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("jobs")) c.jobs = j["jobs"].get<unsigned>();
    if (j.contains("predictor")) {
      const json& p = j["predictor"];
      check_keys(p, {"kind", "order", "smoothing", "decode", "command", "timeout_ms"}, "predictor");
      if (p.contains("kind")) {
        const auto kind = p["kind"].get<std::string>();
        if (kind == "builtin") c.predictor.kind = PredictorKind::Builtin;
        else if (kind == "external") c.predictor.kind = PredictorKind::External;
        else throw Error(Errc::ConfigError, "predictor.kind must be builtin or external");
      }
      if (p.contains("order")) c.predictor.order = p["order"].get<std::uint32_t>();
      if (p.contains("smoothing")) c.predictor.smoothing = p["smoothing"].get<double>();
      if (p.contains("decode")) {
        const json& d = p["decode"];
        check_keys(d, {"mode", "temperature", "top_k", "seed"}, "predictor.decode");
        if (d.contains("mode")) c.predictor.policy.mode = parse_decode_mode(d["mode"].get<std::string>());
        if (d.contains("temperature")) c.predictor.policy.temperature = d["temperature"].get<double>();
        if (d.contains("top_k")) c.predictor.policy.top_k = d["top_k"].get<std::uint32_t>();
        if (d.contains("seed")) c.predictor.decode_seed = d["seed"].get<std::uint64_t>();
      }
      if (p.contains("command")) {
        if (p["command"].is_string()) c.predictor.command = split_command(p["command"].get<std::string>());
        else c.predictor.command = p["command"].get<std::vector<std::string>>();
      }
      if (p.contains("timeout_ms")) c.predictor.timeout = std::chrono::milliseconds(p["timeout_ms"].get<std::int64_t>());
    }
    if (j.contains("pool")) {
      const json& p = j["pool"];
      check_keys(p, {"size", "decoy_dir", "decoys", "format_mix"}, "pool");
      if (p.contains("size")) c.pool.size = p["size"].get<std::size_t>();
      if (p.contains("decoy_dir")) c.pool.decoy_dir = resolve(base_dir, p["decoy_dir"].get<std::string>());
      if (p.contains("decoys")) {
        for (const auto& d : p["decoys"]) {
          check_keys(d, {"format", "path"}, "pool.decoys[]");
          c.pool.decoys.push_back({parse_format(d.at("format").get<std::string>()),
                                   resolve(base_dir, d.at("path").get<std::string>())});
        }
      }
      if (p.contains("format_mix")) {
        for (const auto& [k, v] : p["format_mix"].items()) c.pool.format_mix[parse_format(k)] = v.get<double>();
      }
    }
    if (j.contains("weights")) {
      const json& w = j["weights"];
      check_keys(w, {"alpha", "beta", "gamma"}, "weights");
      if (w.contains("alpha")) c.weights.alpha = w["alpha"].get<double>();
      if (w.contains("beta")) c.weights.beta = w["beta"].get<double>();
      if (w.contains("gamma")) c.weights.gamma = w["gamma"].get<double>();
    }
    if (j.contains("match")) {
      const json& m = j["match"];
      check_keys(m, {"sample_per_ratio", "top_k"}, "match");
      if (m.contains("sample_per_ratio")) c.sample_per_ratio = m["sample_per_ratio"].get<std::size_t>();
      if (m.contains("top_k")) c.top_k = m["top_k"].get<std::size_t>();
    }
  } catch (const json::exception& e) {
    throw Error(Errc::ConfigError, e.what());
  }
  if (c.pool.size < 2) throw Error(Errc::ConfigError, "pool.size must be >= 2");
  if (c.jobs == 0) c.jobs = 1;
  return c;
}

RunConfig RunConfig::load(const fs::path& path) {
  return from_json(read_text(path), path.parent_path());
}

std::string RunConfig::to_json() const {
  json j;
  j["corpus_dir"] = corpus_dir.string();
  j["output_dir"] = output_dir.string();
  if (!train_dir.empty()) j["train_dir"] = train_dir.string();
  j["ratios"] = json::array();
  for (const auto& r : ratios) j["ratios"].push_back(r.str());
  j["per_ratio_count"] = per_ratio_count;
  j["seed"] = seed;
  j["jobs"] = jobs;
  json p;
  p["kind"] = predictor.kind == PredictorKind::Builtin ? "builtin" : "external";
  p["order"] = predictor.order;
  p["smoothing"] = predictor.smoothing;
  p["decode"] = {{"mode", decode_mode_name(predictor.policy.mode)},
                 {"temperature", predictor.policy.temperature},
                 {"top_k", predictor.policy.top_k}};
  if (predictor.decode_seed) p["decode"]["seed"] = *predictor.decode_seed;
  if (!predictor.command.empty()) p["command"] = predictor.command;
  p["timeout_ms"] = predictor.timeout.count();
  j["predictor"] = p;
  json pool_j;
  pool_j["size"] = pool.size;
  if (!pool.decoy_dir.empty()) pool_j["decoy_dir"] = pool.decoy_dir.string();
  for (const auto& d : pool.decoys) pool_j["decoys"].push_back({{"format", format_name(d.format)}, {"path", d.path.string()}});
  for (const auto& [f, w] : pool.format_mix) pool_j["format_mix"][std::string(format_name(f))] = w;
  j["pool"] = pool_j;
  j["weights"] = {{"alpha", weights.alpha}, {"beta", weights.beta}, {"gamma", weights.gamma}};
  j["match"] = {{"sample_per_ratio", sample_per_ratio}, {"top_k", top_k}};
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Logging

void log_line(const RunConfig& config, const std::string& message) {
  static std::mutex mutex;
  std::lock_guard lock(mutex);
  std::cerr << "gencarve: " << message << "\n";
  std::error_code ec;
  fs::create_directories(config.output_dir, ec);
  std::ofstream log(Layout{config.output_dir}.log(), std::ios::app);
  const std::time_t now = std::time(nullptr);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  log << stamp << " " << message << "\n";
}

// ---------------------------------------------------------------------------
// prepare / train

DatasetManifest cmd_prepare(const RunConfig& config) {
  if (config.corpus_dir.empty()) throw Error(Errc::ConfigError, "corpus_dir is not set");
  DatasetOptions opts;
  opts.ratios = config.ratios;
  opts.per_ratio_count = config.per_ratio_count;
  opts.seed = config.seed;
  opts.jobs = config.jobs;
  const Layout layout{config.output_dir};
  auto manifest = build_dataset(config.corpus_dir, layout.dataset(), opts);
  log_line(config, "prepare: " + std::to_string(config.per_ratio_count * config.ratios.size()) + " records in " +
                       layout.dataset().string());
  return manifest;
}

namespace {

DatasetManifest load_manifest(const RunConfig& config) {
  const Layout layout{config.output_dir};
  std::error_code ec;
  if (!fs::exists(layout.manifest(), ec)) throw Error(Errc::IoError, "no dataset manifest; run 'prepare' first");
  return DatasetManifest::from_json(read_text(layout.manifest()));
}

}  // namespace

ByteModel cmd_train(const RunConfig& config) {
  std::vector<Bytes> corpus;
  std::string origin;
  if (!config.train_dir.empty()) {
    for (const auto& rel : list_corpus(config.train_dir)) {
      auto img = normalize_image(read_file(config.train_dir / rel), 32, 32);
      if (img) corpus.push_back(std::move(*img));
    }
    origin = config.train_dir.string();
  } else {
    // Hold out every image the dataset uses.
    const DatasetManifest manifest = load_manifest(config);
    if (config.corpus_dir.empty()) throw Error(Errc::ConfigError, "corpus_dir is not set");
    std::set<std::string> used;
    for (const auto& set : manifest.ratio_sets)
      for (const auto& r : set.records) used.insert(r.source_file);
    for (const auto& rel : list_corpus(config.corpus_dir)) {
      if (used.count(rel.generic_string())) continue;
      auto img = normalize_image(read_file(config.corpus_dir / rel), manifest.width, manifest.height);
      if (img) corpus.push_back(std::move(*img));
    }
    origin = "held-out images of " + config.corpus_dir.string();
  }
  if (corpus.empty()) throw Error(Errc::EmptyCorpus, "no training images in " + origin);
  ByteModel model = train(corpus, config.predictor.order, config.predictor.smoothing);
  write_file(Layout{config.output_dir}.model(), model.save());
  log_line(config, "train: " + model.id() + " on " + std::to_string(corpus.size()) + " images (" + origin + ")");
  return model;
}

// ---------------------------------------------------------------------------
// predict

namespace {

struct Job {
  const RatioSet* set;
  const ManifestRecord* record;
};

std::vector<Job> all_jobs(const DatasetManifest& manifest) {
  std::vector<Job> jobs;
  for (const auto& set : manifest.ratio_sets)
    for (const auto& r : set.records) jobs.push_back({&set, &r});
  return jobs;
}

json policy_json(const SamplingPolicy& p) {
  return {{"mode", decode_mode_name(p.mode)}, {"temperature", p.temperature}, {"top_k", p.top_k}, {"seed", p.seed}};
}

fs::path prediction_path(const Layout& layout, const Ratio& ratio, const std::string& id) {
  return layout.predictions() / ratio.tag() / (id + ".bin");
}

}  // namespace

CommandStatus cmd_predict(const RunConfig& config) {
  const Layout layout{config.output_dir};
  const DatasetManifest manifest = load_manifest(config);
  const std::vector<Job> jobs = all_jobs(manifest);
  std::vector<PredictionEntry> entries(jobs.size());
  const std::uint64_t decode_root = config.predictor.decode_seed.value_or(derive_seed(config.seed, "decode"));

  auto policy_for = [&](const Job& job) {
    SamplingPolicy p = config.predictor.policy;
    p.seed = derive_seed(decode_root, fnv1a64(job.set->ratio.tag() + "/" + job.record->source_id));
    return p;
  };

  auto finish = [&](std::size_t i, const Job& job, const SamplingPolicy& policy, const std::string& predictor_id,
                    const Bytes* predicted, const std::string& error) {
    PredictionEntry& e = entries[i];
    e.set_tag = job.set->ratio.tag();
    e.source_id = job.record->source_id;
    e.predictor_id = predictor_id;
    e.policy = policy;
    e.length = job.record->full_length - job.record->cut;
    e.error = error;
    if (predicted) {
      write_file(prediction_path(layout, job.set->ratio, e.source_id), *predicted);
      e.sha256 = sha256_hex(*predicted);
    }
  };

  if (config.predictor.kind == PredictorKind::Builtin) {
    std::error_code ec;
    const ByteModel model = fs::exists(layout.model(), ec) ? ByteModel::load(read_file(layout.model())) : cmd_train(config);
    if (model.order() != config.predictor.order || model.smoothing() != config.predictor.smoothing)
      log_line(config, "predict: model.bin was trained with order " + std::to_string(model.order()) +
                           ", smoothing " + format_double(model.smoothing()) + "; using it as is");
    parallel_for(jobs.size(), config.jobs, [&](std::size_t i) {
      const Job& job = jobs[i];
      const SamplingPolicy policy = policy_for(job);
      try {
        const FragmentRecord rec = load_record(layout.dataset(), *job.set, *job.record);
        // The continuation length always comes from the record, never from the BMP header.
        const Bytes predicted = predict(model, rec.input_fragment(), rec.real_fragment().size(), policy);
        finish(i, job, policy, model.id(), &predicted, {});
      } catch (const Error& e) {
        finish(i, job, policy, model.id(), nullptr, e.what());
      }
    });
  } else {
    ExternalPredictorConfig ext{config.predictor.command, config.predictor.timeout};
    const unsigned workers = std::max(1u, std::min<unsigned>(config.jobs, static_cast<unsigned>(jobs.size())));
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> threads;
    for (unsigned w = 0; w < workers; ++w) {
      threads.emplace_back([&] {
        std::unique_ptr<ExternalPredictor> predictor;
        std::string startup_error;
        std::string predictor_id = "external:" + (ext.argv.empty() ? std::string() : ext.argv[0]);
        for (std::size_t i; (i = next.fetch_add(1)) < jobs.size();) {
          const Job& job = jobs[i];
          const SamplingPolicy policy = policy_for(job);
          try {
            if (!predictor) {
              predictor = std::make_unique<ExternalPredictor>(ext);
              predictor_id = predictor->id();
            } else if (!predictor->alive()) {
              predictor->restart();
            }
            const FragmentRecord rec = load_record(layout.dataset(), *job.set, *job.record);
            const Bytes predicted =
                predictor->predict(rec.input_fragment(), static_cast<std::uint32_t>(rec.real_fragment().size()));
            finish(i, job, policy, predictor_id, &predicted, {});
          } catch (const Error& e) {
            finish(i, job, policy, predictor_id, nullptr, e.what());
          }
        }
      });
    }
    for (auto& t : threads) t.join();
  }

  CommandStatus status;
  json index = json::array();
  for (const auto& e : entries) {
    json row = {{"set", e.set_tag},       {"source_id", e.source_id}, {"predictor_id", e.predictor_id},
                {"policy", policy_json(e.policy)}, {"length", e.length}};
    if (e.error.empty()) {
      row["sha256"] = e.sha256;
      ++status.succeeded;
    } else {
      row["error"] = e.error;
      ++status.failed;
      status.errors.push_back(e.set_tag + "/" + e.source_id + ": " + e.error);
    }
    index.push_back(std::move(row));
  }
  json doc = {{"format", "gencarve-predictions"}, {"version", 1}, {"records", std::move(index)}};
  write_text(layout.prediction_index(), doc.dump(2) + "\n");
  log_line(config, "predict: " + std::to_string(status.succeeded) + " ok, " + std::to_string(status.failed) +
                       " failed (decode seed " + policy_seed_note(config.predictor) + ")");
  for (const auto& err : status.errors) log_line(config, "predict error: " + err);
  return status;
}

std::vector<PredictionEntry> load_prediction_index(const RunConfig& config) {
  const Layout layout{config.output_dir};
  std::error_code ec;
  if (!fs::exists(layout.prediction_index(), ec)) throw Error(Errc::IoError, "no predictions; run 'predict' first");
  std::vector<PredictionEntry> out;
  try {
    const json doc = json::parse(read_text(layout.prediction_index()));
    for (const auto& r : doc.at("records")) {
      PredictionEntry e;
      e.set_tag = r.at("set").get<std::string>();
      e.source_id = r.at("source_id").get<std::string>();
      e.predictor_id = r.at("predictor_id").get<std::string>();
      const auto& p = r.at("policy");
      e.policy.mode = parse_decode_mode(p.at("mode").get<std::string>());
      e.policy.temperature = p.at("temperature").get<double>();
      e.policy.top_k = p.at("top_k").get<std::uint32_t>();
      e.policy.seed = p.at("seed").get<std::uint64_t>();
      e.length = r.at("length").get<std::size_t>();
      if (r.contains("sha256")) e.sha256 = r["sha256"].get<std::string>();
      if (r.contains("error")) e.error = r["error"].get<std::string>();
      out.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    throw Error(Errc::IoError, std::string("malformed prediction index: ") + e.what());
  }
  return out;
}

// ---------------------------------------------------------------------------
// analyze

namespace {

struct Sample {
  std::size_t set_index;
  const RatioSet* set;
  const ManifestRecord* record;
};

std::map<std::string, const PredictionEntry*> index_predictions(const std::vector<PredictionEntry>& entries) {
  std::map<std::string, const PredictionEntry*> out;
  for (const auto& e : entries) out[e.set_tag + "/" + e.source_id] = &e;
  return out;
}

Bytes load_prediction(const Layout& layout, const RatioSet& set, const PredictionEntry& entry) {
  Bytes data = read_file(prediction_path(layout, set.ratio, entry.source_id));
  if (sha256_hex(data) != entry.sha256) throw Error(Errc::IoError, "prediction digest mismatch for " + entry.source_id);
  return data;
}

// Resolves "id" or "ratio_tag/id" against the manifest.
std::vector<Sample> find_samples(const DatasetManifest& manifest, const std::string& query) {
  std::vector<Sample> out;
  const auto slash = query.find('/');
  const std::string tag = slash == std::string::npos ? "" : query.substr(0, slash);
  const std::string id = slash == std::string::npos ? query : query.substr(slash + 1);
  for (std::size_t s = 0; s < manifest.ratio_sets.size(); ++s) {
    const auto& set = manifest.ratio_sets[s];
    if (!tag.empty() && set.ratio.tag() != tag) continue;
    for (const auto& r : set.records)
      if (r.source_id == id) out.push_back({s, &set, &r});
  }
  if (out.empty()) throw Error(Errc::ConfigError, "no record matches '" + query + "'");
  return out;
}

void write_reconstruction(const fs::path& dir, const FragmentRecord& rec, ByteView predicted) {
  const auto panels = reconstruction_panels(rec, predicted);
  write_file(dir / "a_input.bmp", panels.input);
  write_file(dir / "b_predicted.bmp", panels.predicted);
  write_file(dir / "c_real.bmp", panels.real);
  write_file(dir / "d_reconstructed.bmp", panels.reconstructed);
  write_file(dir / "e_original.bmp", panels.original);
}

}  // namespace

AnalyzeResult cmd_analyze(const RunConfig& config, const AnalyzeOptions& options) {
  const Layout layout{config.output_dir};
  const DatasetManifest manifest = load_manifest(config);
  const auto predictions = load_prediction_index(config);
  const auto by_key = index_predictions(predictions);

  std::vector<Sample> samples;
  for (std::size_t s = 0; s < manifest.ratio_sets.size(); ++s)
    for (const auto& r : manifest.ratio_sets[s].records) samples.push_back({s, &manifest.ratio_sets[s], &r});

  struct Row {
    bool have_bytes = false;
    double chi = 0, cos = 0, jsd = 0, ssim = 0;
    bool have_ssim = false;
    std::string error;
  };
  std::vector<Row> rows(samples.size());
  parallel_for(samples.size(), config.jobs, [&](std::size_t i) {
    const Sample& smp = samples[i];
    Row& row = rows[i];
    auto it = by_key.find(smp.set->ratio.tag() + "/" + smp.record->source_id);
    if (it == by_key.end()) {
      row.error = "no prediction";
      return;
    }
    if (!it->second->error.empty()) {
      row.error = "prediction failed: " + it->second->error;
      return;
    }
    try {
      const FragmentRecord rec = load_record(layout.dataset(), *smp.set, *smp.record);
      const Bytes predicted = load_prediction(layout, *smp.set, *it->second);
      const auto scores = metrics::byte_scores(predicted, rec.real_fragment());
      row.chi = scores.chi;
      row.cos = scores.cos;
      row.jsd = scores.jsd;
      row.have_bytes = true;
      row.ssim = metrics::fragment_ssim(rec, predicted).global;
      row.have_ssim = true;
    } catch (const Error& e) {
      row.error = e.what();
    }
  });

  AnalyzeResult result;
  std::string per_record = "set_id,ratio,source_id,chi_square,cosine,jsd,ssim,error\n";
  std::map<std::pair<std::size_t, stats::Metric>, std::vector<double>> values;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Sample& smp = samples[i];
    const Row& row = rows[i];
    per_record += set_id(smp.set_index) + "," + smp.set->ratio.str() + "," + smp.record->source_id + ",";
    if (row.have_bytes) {
      per_record += format_double(row.chi) + "," + format_double(row.cos) + "," + format_double(row.jsd) + ",";
      values[{smp.set_index, stats::Metric::ChiSquare}].push_back(row.chi);
      values[{smp.set_index, stats::Metric::Cosine}].push_back(row.cos);
      values[{smp.set_index, stats::Metric::Jsd}].push_back(row.jsd);
    } else {
      per_record += ",,,";
    }
    if (row.have_ssim) {
      per_record += format_double(row.ssim);
      values[{smp.set_index, stats::Metric::Ssim}].push_back(row.ssim);
    }
    per_record += "," + row.error + "\n";
    if (row.error.empty()) {
      ++result.status.succeeded;
    } else {
      ++result.status.failed;
      result.status.errors.push_back(smp.set->ratio.tag() + "/" + smp.record->source_id + ": " + row.error);
    }
  }
  write_text(layout.analysis() / "per_record.csv", per_record);

  std::vector<std::string> set_ids;
  for (std::size_t s = 0; s < manifest.ratio_sets.size(); ++s) set_ids.push_back(set_id(s));
  for (stats::Metric m : stats::kAllMetrics) {
    for (std::size_t s = 0; s < manifest.ratio_sets.size(); ++s) {
      auto it = values.find({s, m});
      if (it == values.end()) continue;
      stats::export_distribution((layout.analysis() / "distributions").string(), it->second, m, set_ids[s]);
      if (it->second.size() >= 2) {
        result.summaries.push_back(stats::summarize(it->second, m, set_ids[s]));
      } else {
        log_line(config, "analyze: " + set_ids[s] + "/" + std::string(stats::metric_name(m)) +
                             " has fewer than 2 values; no summary row");
      }
    }
  }
  write_text(layout.analysis() / "summary.csv", stats::summary_csv(result.summaries));
  std::string table;
  for (std::size_t s = 0; s < manifest.ratio_sets.size(); ++s)
    table += set_ids[s] + ": input ratio " + manifest.ratio_sets[s].ratio.str() + "\n";
  table += "\n" + stats::summary_table(result.summaries, set_ids);
  write_text(layout.analysis() / "summary.txt", table);

  for (const auto& query : options.heatmaps) {
    for (const Sample& smp : find_samples(manifest, query)) {
      auto it = by_key.find(smp.set->ratio.tag() + "/" + smp.record->source_id);
      if (it == by_key.end() || !it->second->error.empty()) throw Error(Errc::ConfigError, "no prediction for " + query);
      const FragmentRecord rec = load_record(layout.dataset(), *smp.set, *smp.record);
      const auto res = metrics::fragment_ssim(rec, load_prediction(layout, *smp.set, *it->second));
      const fs::path base = layout.analysis() / "heatmaps" / (smp.set->ratio.tag() + "__" + smp.record->source_id);
      write_file(base.string() + ".pgm", metrics::heatmap_pgm(res.local_map));
      write_text(base.string() + ".csv", metrics::heatmap_csv(res.local_map));
    }
  }
  for (const auto& query : options.reconstruct) {
    for (const Sample& smp : find_samples(manifest, query)) {
      auto it = by_key.find(smp.set->ratio.tag() + "/" + smp.record->source_id);
      if (it == by_key.end() || !it->second->error.empty()) throw Error(Errc::ConfigError, "no prediction for " + query);
      const FragmentRecord rec = load_record(layout.dataset(), *smp.set, *smp.record);
      write_reconstruction(layout.analysis() / "reconstruct" / (smp.set->ratio.tag() + "__" + smp.record->source_id),
                           rec, load_prediction(layout, *smp.set, *it->second));
    }
  }

  log_line(config, "analyze: " + std::to_string(result.status.succeeded) + " records scored, " +
                       std::to_string(result.status.failed) + " skipped");
  return result;
}

// ---------------------------------------------------------------------------
// match

namespace {

std::vector<DecoySource> collect_decoys(const PoolSpec& spec) {
  std::vector<DecoySource> sources = spec.decoys;
  if (!spec.decoy_dir.empty()) {
    for (const auto& rel : list_corpus(spec.decoy_dir)) {
      if (auto f = format_from_extension(rel)) sources.push_back({*f, spec.decoy_dir / rel});
    }
  }
  if (sources.empty()) throw Error(Errc::InsufficientSources, "no decoy sources configured (pool.decoy_dir or pool.decoys)");
  return sources;
}

}  // namespace

MatchResult cmd_match(const RunConfig& config, const MatchOptions& options) {
  const Layout layout{config.output_dir};
  const DatasetManifest manifest = load_manifest(config);
  std::vector<PredictionEntry> predictions;
  if (!options.perfect) predictions = load_prediction_index(config);
  const auto by_key = index_predictions(predictions);
  const auto decoys = load_decoys(collect_decoys(config.pool));

  const std::uint64_t sample_root = derive_seed(config.seed, "sample");
  const std::uint64_t pool_root = derive_seed(config.seed, "pool");

  std::vector<Sample> chosen;
  for (std::size_t s = 0; s < manifest.ratio_sets.size(); ++s) {
    const RatioSet& set = manifest.ratio_sets[s];
    std::vector<const ManifestRecord*> eligible;
    for (const auto& r : set.records) {
      if (options.perfect) {
        eligible.push_back(&r);
        continue;
      }
      auto it = by_key.find(set.ratio.tag() + "/" + r.source_id);
      if (it != by_key.end() && it->second->error.empty()) eligible.push_back(&r);
    }
    Rng rng(derive_seed(sample_root, s));
    for (std::size_t i = eligible.size(); i > 1; --i) std::swap(eligible[i - 1], eligible[rng.below(i)]);
    if (eligible.size() < config.sample_per_ratio)
      log_line(config, "match: " + set.ratio.tag() + " has only " + std::to_string(eligible.size()) +
                           " eligible predictions");
    const std::size_t take = std::min(config.sample_per_ratio, eligible.size());
    for (std::size_t i = 0; i < take; ++i) chosen.push_back({s, &set, eligible[i]});
  }
  if (chosen.empty()) throw Error(Errc::InsufficientCorpus, "no predictions available to match");

  MatchResult result;
  result.rankings.resize(chosen.size());
  std::vector<std::string> errors(chosen.size());
  std::vector<std::size_t> true_index(chosen.size());
  parallel_for(chosen.size(), config.jobs, [&](std::size_t i) {
    const Sample& smp = chosen[i];
    const std::string key = smp.set->ratio.tag() + "/" + smp.record->source_id;
    try {
      const FragmentRecord rec = load_record(layout.dataset(), *smp.set, *smp.record);
      const Bytes predicted = options.perfect ? Bytes(rec.real_fragment().begin(), rec.real_fragment().end())
                                              : load_prediction(layout, *smp.set, *by_key.at(key));
      PoolOptions popts;
      popts.pool_size = config.pool.size;
      popts.seed = derive_seed(pool_root, fnv1a64(key));
      popts.format_mix = config.pool.format_mix;
      const FragmentPool pool = build_pool(rec.real_fragment(), decoys, popts);
      true_index[i] = pool.true_index;
      result.rankings[i] = matcher::rank_pool(predicted, pool, config.weights, key);
    } catch (const Error& e) {
      errors[i] = e.what();
    }
  });

  std::vector<matcher::PoolRanking> ok;
  std::string sample_csv = "set_id,ratio,source_id,true_pool_index,true_rank,error\n";
  for (std::size_t i = 0; i < chosen.size(); ++i) {
    const Sample& smp = chosen[i];
    sample_csv += set_id(smp.set_index) + "," + smp.set->ratio.str() + "," + smp.record->source_id + ",";
    if (errors[i].empty()) {
      sample_csv += std::to_string(true_index[i]) + "," + std::to_string(result.rankings[i].true_rank) + ",\n";
      write_text(layout.match() / "rankings" / (smp.set->ratio.tag() + "__" + smp.record->source_id + ".csv"),
                 matcher::ranking_csv(result.rankings[i]));
      ok.push_back(result.rankings[i]);
      ++result.status.succeeded;
    } else {
      sample_csv += ",," + errors[i] + "\n";
      ++result.status.failed;
      result.status.errors.push_back(smp.set->ratio.tag() + "/" + smp.record->source_id + ": " + errors[i]);
    }
  }
  result.rankings = ok;
  write_text(layout.match() / "sample.csv", sample_csv);
  if (!ok.empty()) {
    result.report = matcher::tally(ok, config.top_k);
    write_text(layout.match() / "tally.csv", matcher::tally_csv(result.report));
    write_text(layout.match() / "tally.txt", matcher::tally_table(result.report));
  }
  log_line(config, std::string("match") + (options.perfect ? " (perfect predictor)" : "") + ": " +
                       std::to_string(result.report.rank1_count) + "/" + std::to_string(result.report.total) +
                       " ranked first");
  return result;
}

// ---------------------------------------------------------------------------
// report

CommandStatus cmd_report(const RunConfig& config, const std::vector<std::string>& reconstruct) {
  const Layout layout{config.output_dir};
  CommandStatus status;
  std::string md = "# gencarve run report\n\n";
  md += "Seed: " + std::to_string(config.seed) + "\n\n";
  std::error_code ec;
  if (fs::exists(layout.manifest(), ec)) {
    const auto manifest = load_manifest(config);
    md += "## Dataset\n\n";
    for (std::size_t s = 0; s < manifest.ratio_sets.size(); ++s) {
      const auto& set = manifest.ratio_sets[s];
      md += "- " + set_id(s) + ": ratio " + set.ratio.str() + ", " + std::to_string(set.records.size()) + " records";
      if (!set.records.empty())
        md += ", predicted length " + std::to_string(set.records.front().full_length - set.records.front().cut) +
              " bytes";
      md += "\n";
    }
    md += "\n";
  }
  if (fs::exists(layout.analysis() / "summary.txt", ec))
    md += "## Similarity analysis\n\n```\n" + read_text(layout.analysis() / "summary.txt") + "```\n\n";
  if (fs::exists(layout.match() / "tally.txt", ec))
    md += "## Fragment matching\n\n```\n" + read_text(layout.match() / "tally.txt") + "```\n\n";

  if (!reconstruct.empty()) {
    const DatasetManifest manifest = load_manifest(config);
    const auto predictions = load_prediction_index(config);
    const auto by_key = index_predictions(predictions);
    md += "## Reconstructions\n\n";
    for (const auto& query : reconstruct) {
      for (const Sample& smp : find_samples(manifest, query)) {
        const std::string key = smp.set->ratio.tag() + "/" + smp.record->source_id;
        auto it = by_key.find(key);
        if (it == by_key.end() || !it->second->error.empty()) {
          ++status.failed;
          status.errors.push_back(key + ": no prediction");
          continue;
        }
        const fs::path dir = layout.root / "report" / (smp.set->ratio.tag() + "__" + smp.record->source_id);
        write_reconstruction(dir, load_record(layout.dataset(), *smp.set, *smp.record),
                             load_prediction(layout, *smp.set, *it->second));
        md += "- " + key + ": " + fs::relative(dir, layout.root).generic_string() +
              "/{a_input,b_predicted,c_real,d_reconstructed,e_original}.bmp\n";
        ++status.succeeded;
      }
    }
    md += "\n";
  }
  write_text(layout.root / "report.md", md);
  log_line(config, "report: " + (layout.root / "report.md").string());
  return status;
}

}  // namespace gencarve::pipeline
