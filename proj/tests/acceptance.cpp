// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <fcntl.h>
#include <unistd.h>

#include <chrono>
#include <csignal>
#include <cstdio>
#include <functional>
#include <sstream>

#include "fuzz_frames.hpp"
#include "gencarve/bmp.hpp"
#include "gencarve/error.hpp"
#include "gencarve/external_predictor.hpp"
#include "gencarve/matcher.hpp"
#include "gencarve/metrics.hpp"
#include "gencarve/pipeline.hpp"
#include "gencarve/protocol.hpp"
#include "gencarve/stats.hpp"
#include "gencarve/synthetic.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace gencarve;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail << what << "; ";
    pass = pass && ok;
  }
};

int failures = 0;

void criterion(const std::string& name, double budget_s, const std::function<void(Outcome&)>& body) {
  Outcome out;
  const auto start = Clock::now();
  try {
    body(out);
  } catch (const std::exception& e) {
    out.pass = false;
    out.detail << "exception: " << e.what() << "; ";
  }
  const double secs = std::chrono::duration<double>(Clock::now() - start).count();
  if (budget_s > 0 && secs > budget_s) {
    out.pass = false;
    out.detail << "took " << secs << " s, budget " << budget_s << " s; ";
  }
  std::printf("[%s] %-32s %6.2fs  %s\n", out.pass ? "PASS" : "FAIL", name.c_str(), secs, out.detail.str().c_str());
  std::fflush(stdout);
  if (!out.pass) ++failures;
}

bool rel_ok(double got, long double want, double tol) { return test::rel_close(got, double(want), tol); }

bmp::GrayImage random_gray(Rng& rng, std::uint32_t w, std::uint32_t h) {
  bmp::GrayImage g{w, h, std::vector<std::uint8_t>(std::size_t{w} * h)};
  for (auto& v : g.values) v = static_cast<std::uint8_t>(rng.below(256));
  return g;
}

oracle::Gray to_oracle(const bmp::GrayImage& g) {
  oracle::Gray o{g.width, g.height, {}};
  o.v.assign(g.values.begin(), g.values.end());
  return o;
}

std::vector<oracle::Real> real_hist(const metrics::ByteHistogram& h) { return {h.bins.begin(), h.bins.end()}; }

pipeline::RunConfig base_config(const fs::path& root, const std::string& out) {
  pipeline::RunConfig c;
  c.corpus_dir = root / "corpus";
  c.output_dir = root / out;
  c.pool.decoy_dir = root / "decoys";
  c.seed = 20240611;
  c.jobs = 4;
  return c;
}

// -----------------------------------------------------------------------------

void metric_oracle_equivalence(Outcome& out) {
  Rng rng(1001);
  constexpr int kTrials = 1000;
  constexpr double kTol = 1e-9;
  double worst = 0;
  auto track = [&](double got, long double want) {
    if (got != want) worst = std::max(worst, double(std::fabs(got - want) / std::fabs(want)));
    return rel_ok(got, want, kTol);
  };
  for (int t = 0; t < kTrials; ++t) {
    const unsigned alpha_a = 1 + unsigned(rng.below(256)), alpha_b = 1 + unsigned(rng.below(256));
    auto a = test::random_bytes(rng, 64 + rng.below(4096 - 64 + 1), alpha_a);
    auto b = test::random_bytes(rng, 64 + rng.below(4096 - 64 + 1), alpha_b);
    auto ha = metrics::byte_histogram(a), hb = metrics::byte_histogram(b);
    auto ra = oracle::histogram(a), rb = oracle::histogram(b);
    out.require(track(metrics::cosine_similarity(ha, hb), oracle::cosine(ra, rb)), "cosine");
    out.require(track(metrics::chi_square(ha, hb), oracle::chi_square(ra, rb)), "chi-square");
    out.require(track(metrics::jsd(metrics::normalize(ha), metrics::normalize(hb)),
                      oracle::jsd(oracle::normalized(ra), oracle::normalized(rb))),
                "jsd");
  }
  for (int t = 0; t < kTrials; ++t) {
    const auto w = static_cast<std::uint32_t>(16 + rng.below(17));
    const auto h = static_cast<std::uint32_t>(16 + rng.below(17));
    auto x = random_gray(rng, w, h);
    bmp::GrayImage y = x;
    if (t % 2 == 0) {
      for (auto& v : y.values) v = static_cast<std::uint8_t>((v + rng.below(64)) % 256);
    } else {
      y = random_gray(rng, w, h);
    }
    out.require(track(metrics::ssim(x, y).global, oracle::ssim_global(to_oracle(x), to_oracle(y), 7)), "ssim");
  }
  out.detail << "4 x " << kTrials << " cases, worst relative error " << worst;
}

void metric_boundaries(Outcome& out) {
  Rng rng(1002);
  constexpr double kTol = 1e-12;
  for (int t = 0; t < 200; ++t) {
    auto a = test::random_bytes(rng, 64 + rng.below(4000), 1 + unsigned(rng.below(256)));
    auto h = metrics::byte_histogram(a);
    auto p = metrics::normalize(h);
    out.require(std::fabs(metrics::cosine_similarity(h, h) - 1.0) <= kTol, "cosine(a,a)");
    out.require(std::fabs(metrics::chi_square(h, h)) <= kTol, "chi(a,a)");
    out.require(std::fabs(metrics::jsd(p, p)) <= kTol, "jsd(p,p)");
    auto x = random_gray(rng, 16 + unsigned(rng.below(17)), 16 + unsigned(rng.below(17)));
    out.require(std::fabs(metrics::ssim(x, x).global - 1.0) <= kTol, "ssim(x,x)");

    // Disjoint supports: low half against high half of the byte range.
    Bytes lo = test::random_bytes(rng, 100, 128), hi = test::random_bytes(rng, 100, 128);
    for (auto& v : hi) v = static_cast<std::uint8_t>(v + 128);
    out.require(std::fabs(metrics::cosine_similarity(metrics::byte_histogram(lo), metrics::byte_histogram(hi))) <= kTol,
                "disjoint cosine");
    const auto u = static_cast<std::uint8_t>(rng.below(256));
    const auto v = static_cast<std::uint8_t>((u + 1 + rng.below(255)) % 256);
    auto pu = metrics::normalize(metrics::byte_histogram(Bytes(10, u)));
    auto pv = metrics::normalize(metrics::byte_histogram(Bytes(7, v)));
    out.require(std::fabs(metrics::jsd(pu, pv) - 1.0) <= kTol, "point-mass jsd");
  }
  out.detail << "200 random cases per identity";
}

void round_trip_and_slicing(Outcome& out) {
  test::TempDir dir("accept_rt");
  synth::write_corpus(dir.path(), 50, 1003);
  std::size_t files = 0;
  for (const auto& rel : list_corpus(dir.path())) {
    const Bytes bytes = read_file(dir.path() / rel);
    ++files;
    out.require(bmp::encode(bmp::parse(bytes)) == bytes, "encode(parse(f)) != f for " + rel.string());
    out.require(bytes.size() == 3126, "unexpected size");
    const std::pair<Ratio, std::size_t> cuts[] = {{{2, 5}, 1876}, {{3, 5}, 1251}, {{4, 5}, 626}};
    for (auto [ratio, len] : cuts)
      out.require(slice_fragment(bytes, ratio).real_fragment().size() == len, "real length for " + ratio.str());
  }
  out.require(files == 50, "corpus size");
  out.detail << files << " files, real lengths 1876/1251/626";
}

void perfect_predictor(Outcome& out) {
  test::TempDir dir("accept_perfect");
  synth::write_corpus(dir.path() / "corpus", 40, 1004);
  synth::write_decoys(dir.path() / "decoys", 3, 1005, 16384);
  auto cfg = base_config(dir.path(), "out");
  cfg.per_ratio_count = 10;
  cfg.pool.size = 100;
  cfg.sample_per_ratio = 10;
  pipeline::cmd_prepare(cfg);
  auto res = pipeline::cmd_match(cfg, {true});
  for (const auto& r : res.rankings) out.require(r.entries.size() == 100, "pool size");
  const auto& t = res.report;
  out.require(t.rank1_count == 30 && t.top_k_not1_count == 0 && t.missed_count == 0, "tally");
  out.detail << "tally (" << t.rank1_count << ", " << t.top_k_not1_count << ", " << t.missed_count << ")";
}

void directional_trend(Outcome& out) {
  test::TempDir dir("accept_trend");
  constexpr std::size_t kPerRatio = 100;
  constexpr std::size_t kTrain = 200;
  synth::write_corpus(dir.path() / "corpus", 3 * kPerRatio + kTrain, 1006);
  auto cfg = base_config(dir.path(), "out");
  cfg.per_ratio_count = kPerRatio;
  pipeline::cmd_prepare(cfg);
  auto model = pipeline::cmd_train(cfg);
  out.require(model.order() == 3, "model order");
  auto st = pipeline::cmd_predict(cfg);
  out.require(!st.partial(), "prediction failures");
  auto res = pipeline::cmd_analyze(cfg);
  auto mean_of = [&](stats::Metric m, const std::string& set) {
    for (const auto& s : res.summaries)
      if (s.metric == m && s.set_id == set) return s.mean;
    throw Error(Errc::InvalidArgument, "missing summary");
  };
  const double chi1 = mean_of(stats::Metric::ChiSquare, "P1"), chi3 = mean_of(stats::Metric::ChiSquare, "P3");
  const double cos1 = mean_of(stats::Metric::Cosine, "P1"), cos3 = mean_of(stats::Metric::Cosine, "P3");
  out.require(chi3 < chi1, "chi-square did not fall from P1 to P3");
  out.require(cos3 > cos1, "cosine did not rise from P1 to P3");
  out.detail << "train " << kTrain << ", held-out " << kPerRatio << "/ratio; chi P1 " << chi1 << " -> P3 " << chi3
             << ", cos P1 " << cos1 << " -> P3 " << cos3;
}

void stats_correctness(Outcome& out) {
  Rng rng(1007);
  double worst = 0;
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 2 + rng.below(1000);
    const double scale = std::pow(10.0, double(rng.below(7)) - 3.0);
    std::vector<double> v(n);
    std::vector<oracle::Real> lv(n);
    for (std::size_t i = 0; i < n; ++i) lv[i] = v[i] = scale * (1.0 + rng.unit());
    auto s = stats::summarize(v, stats::Metric::ChiSquare, "P1");
    auto o = oracle::summarize(lv);
    auto check = [&](double got, long double want, const char* what) {
      if (got != want) worst = std::max(worst, double(std::fabs(got - want) / std::fabs(want)));
      out.require(rel_ok(got, want, 1e-12), what);
    };
    check(s.mean, o.mean, "mean");
    check(s.std_dev, o.std_dev, "std");
    check(s.median, o.median, "median");
    check(s.min, o.min, "min");
    check(s.max, o.max, "max");
    out.require(s.ci95_margin == 1.96 * s.std_dev / std::sqrt(double(n)), "ci95 formula");
  }
  out.detail << "1000 samples, worst relative error " << worst << ", ci95 = 1.96*s/sqrt(n) exact";
}

void score_spot_checks(Outcome& out) {
  out.require(matcher::score(0, 0, 1) == -10.0, "score(0,0,1) != -10");
  const double p1 = matcher::score(409.58, 0.1864, 0.6690);
  out.require(std::fabs(p1 - (-0.7302)) <= 1e-12, "P1 means score");
  Rng rng(1008);
  for (int t = 0; t < 100; ++t) {
    FragmentPool pool;
    pool.target_length = 626;
    pool.true_index = rng.below(100);
    for (std::size_t i = 0; i < 100; ++i)
      pool.entries.push_back({i, SourceFormat::Wav, test::random_bytes(rng, 626, 1 + unsigned(rng.below(256))),
                              i == pool.true_index, ""});
    auto predicted = test::random_bytes(rng, 626, 1 + unsigned(rng.below(256)));
    const double k = std::exp(rng.unit() * 8 - 4);
    matcher::MatchWeights w;
    auto a = matcher::rank_pool(predicted, pool, w);
    auto b = matcher::rank_pool(predicted, pool, {w.alpha * k, w.beta * k, w.gamma * k});
    for (std::size_t i = 0; i < 100; ++i)
      out.require(a.entries[i].pool_index == b.entries[i].pool_index, "order changed under weight scaling");
  }
  out.detail << "score(0,0,1) = -10, P1 score = " << p1 << ", 100 pools scale-invariant";
}

void protocol_robustness(Outcome& out) {
  std::signal(SIGPIPE, SIG_IGN);
  // Full predict run through the echo double.
  test::TempDir dir("accept_proto");
  synth::write_corpus(dir.path() / "corpus", 30, 1009);
  auto cfg = base_config(dir.path(), "out");
  cfg.per_ratio_count = 5;
  cfg.predictor.kind = pipeline::PredictorKind::External;
  cfg.predictor.command = {GENCARVE_MOCK_PREDICTOR};
  cfg.predictor.timeout = std::chrono::milliseconds(5000);
  pipeline::cmd_prepare(cfg);
  auto st = pipeline::cmd_predict(cfg);
  out.require(st.succeeded == 15 && !st.partial(), "echo run incomplete");

  // 10,000 malformed frames through real pipes.
  Rng rng(1010);
  std::size_t rejected = 0;
  constexpr int kFrames = 10000;
  for (int i = 0; i < kFrames; ++i) {
    const auto req = static_cast<std::uint32_t>(1 + rng.below(4096));
    const Bytes frame = fuzz::malformed_response(rng, req);
    int fds[2];
    if (::pipe2(fds, O_CLOEXEC) != 0) throw Error(Errc::IoError, "pipe");
    const bool wrote = ::write(fds[1], frame.data(), frame.size()) == static_cast<ssize_t>(frame.size());
    ::close(fds[1]);
    protocol::FdChannel ch(fds[0], -1);
    try {
      protocol::read_response(ch, req, std::chrono::milliseconds(2000));
    } catch (const Error& e) {
      if (is_protocol_error(e.code())) ++rejected;
    }
    ::close(fds[0]);
    out.require(wrote, "pipe write");
  }
  out.require(rejected == kFrames, "a malformed frame was not rejected as a protocol error");

  // Misbehaving subprocesses, each bounded by the host timeout.
  std::size_t proc_rejected = 0;
  constexpr int kProcs = 200;
  for (int i = 0; i < kProcs; ++i) {
    ExternalPredictor p({{GENCARVE_MOCK_PREDICTOR, "--mode", "fuzz", "--seed", std::to_string(i)},
                         std::chrono::milliseconds(2000)});
    try {
      p.predict(as_bytes("prefix"), 1 + static_cast<std::uint32_t>(i * 37 % 3000));
    } catch (const Error& e) {
      if (is_protocol_error(e.code())) ++proc_rejected;
    }
  }
  out.require(proc_rejected == kProcs, "fuzzing subprocess not rejected");

  const auto start = Clock::now();
  bool timed_out = false;
  try {
    ExternalPredictor hang({{GENCARVE_MOCK_PREDICTOR, "--mode", "hang"}, std::chrono::milliseconds(500)});
    hang.predict(as_bytes("x"), 10);
  } catch (const Error& e) {
    timed_out = e.code() == Errc::Timeout;
  }
  const double waited = std::chrono::duration<double>(Clock::now() - start).count();
  out.require(timed_out && waited < 5.0, "hang not stopped by timeout");

  out.detail << "echo run " << st.succeeded << "/15; " << rejected << "/" << kFrames << " pipe frames and "
             << proc_rejected << "/" << kProcs << " subprocess frames rejected; hang timed out in " << waited << " s";
}

void determinism(Outcome& out) {
  test::TempDir dir("accept_det");
  synth::write_corpus(dir.path() / "corpus", 60, 1011);
  synth::write_decoys(dir.path() / "decoys", 2, 1012, 8192);
  std::size_t compared = 0;
  std::vector<fs::path> outs;
  for (const char* name : {"run1", "run2"}) {
    auto cfg = base_config(dir.path(), name);
    cfg.per_ratio_count = 10;
    cfg.pool.size = 50;
    cfg.sample_per_ratio = 5;
    cfg.jobs = std::string(name) == "run1" ? 1 : 4;
    pipeline::cmd_prepare(cfg);
    pipeline::cmd_train(cfg);
    pipeline::cmd_predict(cfg);
    pipeline::cmd_analyze(cfg);
    pipeline::cmd_match(cfg);
    outs.push_back(cfg.output_dir);
  }
  for (const auto& e : fs::recursive_directory_iterator(outs[0])) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), outs[0]);
    if (rel == "run.log") continue;
    ++compared;
    const fs::path other = outs[1] / rel;
    out.require(fs::exists(other) && read_file(e.path()) == read_file(other), "differs: " + rel.string());
  }
  std::size_t second = 0;
  for (const auto& e : fs::recursive_directory_iterator(outs[1])) second += e.is_regular_file();
  out.require(second == compared + 1, "file sets differ");
  for (const char* must : {"dataset/manifest.json", "predictions/predictions.json", "analysis/summary.csv",
                           "match/tally.csv"})
    out.require(fs::exists(outs[0] / must), std::string("missing ") + must);
  out.detail << compared << " files byte-identical across two runs (jobs 1 vs 4)";
}

}  // namespace

int main() {
  criterion("metric-oracle-equivalence", 60, metric_oracle_equivalence);
  criterion("metric-boundaries", 0, metric_boundaries);
  criterion("bmp-round-trip-and-slicing", 0, round_trip_and_slicing);
  criterion("perfect-predictor-matching", 60, perfect_predictor);
  criterion("directional-similarity-trend", 600, directional_trend);
  criterion("statistics-correctness", 0, stats_correctness);
  criterion("score-spot-checks", 0, score_spot_checks);
  criterion("protocol-robustness", 0, protocol_robustness);
  criterion("determinism", 0, determinism);
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
