#include <doctest.h>

#include "gencarve/bmp.hpp"
#include "gencarve/error.hpp"
#include "gencarve/pipeline.hpp"
#include "gencarve/reconstruct.hpp"
#include "gencarve/synthetic.hpp"
#include "support.hpp"

using namespace gencarve;
using namespace gencarve::pipeline;
namespace fs = std::filesystem;

namespace {

RunConfig small_config(const fs::path& root, const std::string& out) {
  RunConfig c;
  c.corpus_dir = root / "corpus";
  c.output_dir = root / out;
  c.per_ratio_count = 4;
  c.seed = 1234;
  c.jobs = 2;
  c.pool.size = 20;
  c.pool.decoy_dir = root / "decoys";
  c.sample_per_ratio = 3;
  return c;
}

struct Fixture {
  test::TempDir dir{"pipeline"};
  Fixture() {
    synth::write_corpus(dir.path() / "corpus", 30, 77);
    synth::write_decoys(dir.path() / "decoys", 2, 78, 8192);
  }
};

std::string slurp(const fs::path& p) { return read_text(p); }

}  // namespace

TEST_CASE("config parsing") {
  auto c = RunConfig::from_json(R"({
    "corpus_dir": "imgs", "output_dir": "/abs/out", "ratios": ["1/2", "3/4"], "per_ratio_count": 8,
    "seed": 5, "jobs": 3,
    "predictor": {"kind": "external", "command": "python3 bridge.py", "timeout_ms": 1500,
                  "decode": {"mode": "top_k", "top_k": 4, "temperature": 0.7, "seed": 9}},
    "pool": {"size": 50, "format_mix": {"wav": 2, "png": 1}},
    "weights": {"alpha": 1, "beta": 2, "gamma": 3},
    "match": {"sample_per_ratio": 7, "top_k": 3}
  })",
                                "/base");
  CHECK(c.corpus_dir == fs::path("/base/imgs"));
  CHECK(c.output_dir == fs::path("/abs/out"));
  CHECK(c.ratios == std::vector<Ratio>{{1, 2}, {3, 4}});
  CHECK(c.predictor.kind == PredictorKind::External);
  CHECK(c.predictor.command == std::vector<std::string>{"python3", "bridge.py"});
  CHECK(c.predictor.timeout.count() == 1500);
  CHECK(c.predictor.policy.mode == DecodeMode::TopK);
  CHECK(*c.predictor.decode_seed == 9);
  CHECK(c.pool.format_mix.at(SourceFormat::Wav) == 2.0);
  CHECK(c.weights.gamma == 3.0);
  CHECK(c.sample_per_ratio == 7);

  auto again = RunConfig::from_json(c.to_json());
  CHECK(again.to_json() == c.to_json());

  auto code = [](const std::string& text) {
    try {
      RunConfig::from_json(text);
    } catch (const Error& e) {
      return e.code();
    }
    return Errc::IoError;
  };
  CHECK(code(R"({"sede": 1})") == Errc::ConfigError);
  CHECK(code(R"({"predictor": {"kind": "magic"}})") == Errc::ConfigError);
  CHECK(code(R"({"ratios": ["6/5"]})") == Errc::ConfigError);
  CHECK(code(R"({"pool": {"size": 1}})") == Errc::ConfigError);
  CHECK(code("not json") == Errc::ConfigError);
  CHECK(set_id(0) == "P1");
  CHECK(set_id(2) == "P3");
}

TEST_CASE("full builtin run produces every artifact") {
  Fixture fx;
  auto cfg = small_config(fx.dir.path(), "run");
  auto manifest = cmd_prepare(cfg);
  CHECK(manifest.ratio_sets.size() == 3);
  auto model = cmd_train(cfg);
  CHECK(model.order() == 3);
  auto pst = cmd_predict(cfg);
  CHECK(pst.succeeded == 12);
  CHECK_FALSE(pst.partial());
  auto index = load_prediction_index(cfg);
  CHECK(index.size() == 12);
  for (const auto& e : index) {
    CHECK(e.error.empty());
    CHECK(e.predictor_id == model.id());
  }

  const std::string first = manifest.ratio_sets[0].records[0].source_id;
  AnalyzeOptions aopts;
  aopts.heatmaps = {first};
  aopts.reconstruct = {first};
  auto analysis = cmd_analyze(cfg, aopts);
  CHECK(analysis.summaries.size() == 12);
  CHECK_FALSE(analysis.status.partial());
  const Layout layout{cfg.output_dir};
  CHECK(fs::exists(layout.analysis() / "per_record.csv"));
  CHECK(fs::exists(layout.analysis() / "summary.txt"));
  CHECK(fs::exists(layout.analysis() / "distributions" / "P1_ssim.csv"));
  CHECK(fs::exists(layout.analysis() / "heatmaps" / ("ratio_2_5__" + first + ".pgm")));
  auto panel = layout.analysis() / "reconstruct" / ("ratio_2_5__" + first);
  REQUIRE(fs::is_directory(panel));
  for (const auto& entry : fs::directory_iterator(panel)) CHECK_NOTHROW(bmp::parse(read_file(entry.path())));

  auto match = cmd_match(cfg);
  CHECK(match.report.total == 9);
  CHECK(match.report.rank1_count + match.report.top_k_not1_count + match.report.missed_count == 9);
  CHECK(fs::exists(layout.match() / "tally.csv"));

  auto perfect = cmd_match(cfg, {true});
  CHECK(perfect.report.rank1_count == 9);

  auto rst = cmd_report(cfg, {first});
  CHECK_FALSE(rst.partial());
  auto md = slurp(layout.root / "report.md");
  CHECK(md.find("Fragment matching") != std::string::npos);
  CHECK(fs::exists(layout.log()));
}

TEST_CASE("runs are deterministic regardless of job count") {
  Fixture fx;
  auto a = small_config(fx.dir.path(), "a");
  auto b = small_config(fx.dir.path(), "b");
  a.jobs = 1;
  b.jobs = 4;
  for (auto* c : {&a, &b}) {
    c->predictor.policy.mode = DecodeMode::Temperature;
    cmd_prepare(*c);
    cmd_predict(*c);
    cmd_analyze(*c);
    cmd_match(*c);
  }
  for (const char* rel : {"dataset/manifest.json", "predictions/predictions.json", "analysis/per_record.csv",
                          "analysis/summary.csv", "match/tally.csv", "match/sample.csv"})
    CHECK_MESSAGE(slurp(a.output_dir / rel) == slurp(b.output_dir / rel), rel);
  for (const auto& e : fs::recursive_directory_iterator(a.output_dir / "predictions")) {
    if (!e.is_regular_file()) continue;
    auto rel = fs::relative(e.path(), a.output_dir);
    CHECK(read_file(e.path()) == read_file(b.output_dir / rel));
  }
}

TEST_CASE("external predictor runs and failures") {
  Fixture fx;
  auto cfg = small_config(fx.dir.path(), "ext");
  cfg.predictor.kind = PredictorKind::External;
  cfg.predictor.command = {GENCARVE_MOCK_PREDICTOR};
  cmd_prepare(cfg);
  auto ok = cmd_predict(cfg);
  CHECK(ok.succeeded == 12);
  for (const auto& e : load_prediction_index(cfg)) CHECK(e.predictor_id.find("external:") == 0);

  cfg.predictor.command = {GENCARVE_MOCK_PREDICTOR, "--mode", "short"};
  auto bad = cmd_predict(cfg);
  CHECK(bad.failed == 12);
  CHECK(bad.partial());
  for (const auto& e : load_prediction_index(cfg)) CHECK(e.error.find("ShortResponse") != std::string::npos);
  CHECK_THROWS_AS(cmd_match(cfg), Error);
}

TEST_CASE("reconstruction panels") {
  auto img = synth::natural_image(5);
  auto bytes = bmp::encode(img);
  auto rec = slice_fragment(bytes, {3, 5}, "x");
  Bytes predicted(rec.real_fragment().size(), 0x7F);
  auto panels = reconstruction_panels(rec, predicted);
  CHECK(panels.original == bytes);
  CHECK(std::equal(panels.real.begin() + rec.cut, panels.real.end(), rec.real_fragment().begin()));
  CHECK(panels.input[rec.cut] == 0);
  for (const auto* b : {&panels.input, &panels.predicted, &panels.real, &panels.reconstructed}) {
    CHECK(b->size() == bytes.size());
    CHECK_NOTHROW(bmp::parse(*b));
  }
  CHECK(std::equal(panels.reconstructed.begin() + rec.cut, panels.reconstructed.end(), predicted.begin()));
}
