#include <doctest.h>

#include <set>

#include "gencarve/bmp.hpp"
#include "gencarve/digest.hpp"
#include "gencarve/error.hpp"
#include "gencarve/fragmenter.hpp"
#include "gencarve/synthetic.hpp"
#include "support.hpp"

using namespace gencarve;

namespace {

Errc error_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return Errc::IoError;
}

std::vector<LoadedDecoy> make_decoys(std::size_t per_format, std::size_t size) {
  std::vector<LoadedDecoy> out;
  std::uint64_t seed = 1;
  for (auto f : {SourceFormat::Wav, SourceFormat::Jpeg, SourceFormat::Png, SourceFormat::Mp4})
    for (std::size_t i = 0; i < per_format; ++i)
      out.push_back({f, std::string(format_name(f)) + std::to_string(i), synth::decoy_file(f, seed++, size)});
  return out;
}

}  // namespace

TEST_CASE("ratio parsing and cut arithmetic") {
  auto r = Ratio::parse("3/5");
  CHECK(r == Ratio{3, 5});
  CHECK(r.str() == "3/5");
  CHECK(r.tag() == "ratio_3_5");
  CHECK(r.cut_for(3126) == 1875);
  CHECK(Ratio{2, 5}.cut_for(3126) == 1250);
  CHECK(Ratio{4, 5}.cut_for(3126) == 2500);
  CHECK(error_of([] { Ratio::parse("5/5"); }) == Errc::ConfigError);
  CHECK(error_of([] { Ratio::parse("abc"); }) == Errc::ConfigError);
  CHECK(error_of([] { Ratio::parse("1/0"); }) == Errc::ConfigError);
}

TEST_CASE("slicing a 32x32 BMP") {
  auto bytes = bmp::encode(synth::natural_image(1));
  REQUIRE(bytes.size() == 3126);
  const std::pair<Ratio, std::size_t> cases[] = {{{2, 5}, 1876}, {{3, 5}, 1251}, {{4, 5}, 626}};
  for (auto [ratio, real_len] : cases) {
    auto rec = slice_fragment(bytes, ratio, "img");
    CHECK(rec.real_fragment().size() == real_len);
    CHECK(rec.input_fragment().size() + rec.real_fragment().size() == bytes.size());
    Bytes joined(rec.input_fragment().begin(), rec.input_fragment().end());
    joined.insert(joined.end(), rec.real_fragment().begin(), rec.real_fragment().end());
    CHECK(joined == bytes);
  }
}

TEST_CASE("degenerate slices") {
  CHECK(error_of([] { slice_fragment(Bytes{1, 2}, {1, 2}); }) == Errc::DegenerateSlice);
  CHECK(error_of([] { slice_fragment(Bytes{1, 2, 3}, {1, 5}); }) == Errc::DegenerateSlice);
  CHECK(slice_fragment(Bytes{1, 2, 3}, {19, 20}).real_fragment().size() == 1);
  CHECK(slice_fragment(Bytes{1, 2, 3}, {1, 2}).cut == 1);
}

TEST_CASE("normalize_image") {
  auto big = synth::natural_image(3, 64, 48);
  auto norm = normalize_image(bmp::encode(big), 32, 32);
  REQUIRE(norm);
  CHECK(norm->size() == 3126);
  CHECK_FALSE(normalize_image(Bytes{'n', 'o', 't'}, 32, 32).has_value());
  auto exact = bmp::encode(synth::natural_image(4));
  CHECK(*normalize_image(exact, 32, 32) == exact);
}

TEST_CASE("dataset build, manifest round trip and reload") {
  test::TempDir dir("dataset");
  synth::write_corpus(dir.path() / "corpus", 12, 5);
  write_text(dir.path() / "corpus" / "notes.txt", "not an image");
  DatasetOptions opts;
  opts.per_ratio_count = 3;
  opts.seed = 42;
  auto manifest = build_dataset(dir.path() / "corpus", dir.path() / "out", opts);
  REQUIRE(manifest.ratio_sets.size() == 3);

  std::set<std::string> used;
  for (const auto& set : manifest.ratio_sets) {
    CHECK(set.records.size() == 3);
    for (const auto& rec : set.records) {
      used.insert(rec.source_file);
      CHECK(rec.full_length == 3126);
      CHECK(rec.cut == set.ratio.cut_for(3126));
      auto loaded = load_record(dir.path() / "out", set, rec);
      CHECK(sha256_hex(loaded.full_bytes) == rec.full_sha256);
      CHECK(sha256_hex(loaded.real_fragment()) == rec.real_sha256);
    }
  }
  CHECK(used.size() == 9);  // no image is reused across ratios

  auto text = read_text(dir.path() / "out" / "manifest.json");
  CHECK(text.find("xoshiro256starstar") != std::string::npos);
  auto again = DatasetManifest::from_json(text);
  CHECK(again.to_json() == manifest.to_json());

  // Same seed, same dataset.
  auto second = build_dataset(dir.path() / "corpus", dir.path() / "out2", opts);
  CHECK(second.to_json() == manifest.to_json());
  opts.seed = 43;
  auto other = build_dataset(dir.path() / "corpus", dir.path() / "out3", opts);
  CHECK(other.to_json() != manifest.to_json());

  // Tampered fragment is detected.
  const auto& set = manifest.ratio_sets[0];
  auto path = record_path(dir.path() / "out", set.ratio, "real", set.records[0].source_id);
  auto bytes = read_file(path);
  bytes[0] ^= 1;
  write_file(path, bytes);
  CHECK(error_of([&] { load_record(dir.path() / "out", set, set.records[0]); }) == Errc::IoError);

  opts.per_ratio_count = 5;
  CHECK(error_of([&] { build_dataset(dir.path() / "corpus", dir.path() / "out4", opts); }) ==
        Errc::InsufficientCorpus);
}

TEST_CASE("pool construction") {
  Rng rng(50);
  auto truth = test::random_bytes(rng, 1251);
  auto decoys = make_decoys(3, 8192);
  PoolOptions opts;
  opts.seed = 9;
  auto pool = build_pool(truth, decoys, opts);
  CHECK(pool.entries.size() == 100);
  CHECK(pool.target_length == 1251);
  std::size_t trues = 0;
  std::map<SourceFormat, std::size_t> per_format;
  for (std::size_t i = 0; i < pool.entries.size(); ++i) {
    const auto& e = pool.entries[i];
    CHECK(e.pool_index == i);
    CHECK(e.bytes.size() == 1251);
    if (e.is_true) {
      ++trues;
      CHECK(i == pool.true_index);
      CHECK(e.bytes == truth);
      CHECK(e.format == SourceFormat::Bmp);
    } else {
      CHECK(e.bytes != truth);
      ++per_format[e.format];
    }
  }
  CHECK(trues == 1);
  // 99 decoy slots spread uniformly over four formats.
  for (auto& [f, n] : per_format) CHECK((n == 24 || n == 25));

  auto again = build_pool(truth, decoys, opts);
  CHECK(again.true_index == pool.true_index);
  for (std::size_t i = 0; i < 100; ++i) CHECK(again.entries[i].bytes == pool.entries[i].bytes);

  opts.format_mix = {{SourceFormat::Wav, 1.0}, {SourceFormat::Png, 3.0}};
  auto mixed = build_pool(truth, decoys, opts);
  std::size_t wav = 0, png = 0;
  for (const auto& e : mixed.entries) {
    if (e.is_true) continue;
    wav += e.format == SourceFormat::Wav;
    png += e.format == SourceFormat::Png;
  }
  CHECK(wav + png == 99);
  CHECK(png > 2 * wav);
}

TEST_CASE("pool errors") {
  Rng rng(51);
  auto truth = test::random_bytes(rng, 1000);
  PoolOptions opts;
  CHECK(error_of([&] { build_pool(truth, std::vector<LoadedDecoy>{}, opts); }) == Errc::InsufficientSources);
  CHECK(error_of([&] { build_pool(truth, make_decoys(1, 500), opts); }) == Errc::SourceTooSmall);

  // Every possible decoy slice equals the true fragment.
  Bytes zeros(1000, 0);
  std::vector<LoadedDecoy> constant = {{SourceFormat::Wav, "silence", Bytes(5000, 0)}};
  CHECK(error_of([&] { build_pool(zeros, constant, opts); }) == Errc::DuplicateTrueFragment);

  opts.format_mix = {{SourceFormat::Mp4, 1.0}};
  std::vector<LoadedDecoy> wav_only = {{SourceFormat::Wav, "w", test::random_bytes(rng, 4000)}};
  CHECK(error_of([&] { build_pool(truth, wav_only, opts); }) == Errc::InsufficientSources);
}

TEST_CASE("format names and extensions") {
  CHECK(format_name(SourceFormat::Jpeg) == "jpeg");
  CHECK(parse_format("mp4") == SourceFormat::Mp4);
  CHECK(format_from_extension("a/b.WAV") == SourceFormat::Wav);
  CHECK(format_from_extension("x.jpg") == SourceFormat::Jpeg);
  CHECK_FALSE(format_from_extension("x.txt").has_value());
}
