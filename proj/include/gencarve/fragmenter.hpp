#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gencarve/io.hpp"

namespace gencarve {

/// Retained fraction of a file, kept as an exact rational so cut offsets are
/// computed with integer arithmetic.
struct Ratio {
  std::uint32_t num = 2;
  std::uint32_t den = 5;

  static Ratio parse(const std::string& text);  // "2/5"
  std::string str() const;                       // "2/5"
  std::string tag() const;                       // "ratio_2_5"
  std::size_t cut_for(std::size_t length) const { return std::size_t(std::uint64_t{num} * length / den); }
  friend bool operator==(const Ratio&, const Ratio&) = default;
};

struct FragmentRecord {
  std::string source_id;
  Bytes full_bytes;
  std::size_t cut = 0;
  Ratio ratio;

  ByteView input_fragment() const { return ByteView(full_bytes).first(cut); }
  ByteView real_fragment() const { return ByteView(full_bytes).subspan(cut); }
};

FragmentRecord slice_fragment(ByteView full_bytes, Ratio ratio, std::string source_id = {});

// ---------------------------------------------------------------------------
// Dataset

struct ManifestRecord {
  std::string source_id;
  std::string source_file;  // path relative to the corpus directory
  std::size_t full_length = 0;
  std::size_t cut = 0;
  std::string full_sha256;
  std::string input_sha256;
  std::string real_sha256;
};

struct RatioSet {
  Ratio ratio;
  std::vector<ManifestRecord> records;
};

struct DatasetManifest {
  std::uint64_t seed = 0;
  std::uint32_t width = 32;
  std::uint32_t height = 32;
  std::vector<RatioSet> ratio_sets;

  std::string to_json() const;
  static DatasetManifest from_json(const std::string& text);
};

struct DatasetOptions {
  std::vector<Ratio> ratios{{2, 5}, {3, 5}, {4, 5}};
  std::size_t per_ratio_count = 750;
  std::uint64_t seed = 0;
  std::uint32_t width = 32;
  std::uint32_t height = 32;
  unsigned jobs = 1;
};

/// One corpus image normalised to the dataset's BMP profile.
struct CorpusImage {
  std::string relative_path;
  Bytes bmp_bytes;
};

/// Files under corpus_dir (recursively), sorted by relative path.
std::vector<std::filesystem::path> list_corpus(const std::filesystem::path& corpus_dir);

/// Parses a 24-bit BMP and, if it is not already the requested size and
/// canonical bottom-up layout, converts it. nullopt for unusable files.
std::optional<Bytes> normalize_image(ByteView file_bytes, std::uint32_t width, std::uint32_t height);

DatasetManifest build_dataset(const std::filesystem::path& corpus_dir, const std::filesystem::path& out_dir,
                              const DatasetOptions& options);

/// Reads a record's fragments back from a dataset directory and checks digests.
FragmentRecord load_record(const std::filesystem::path& dataset_dir, const RatioSet& set,
                           const ManifestRecord& rec);

std::filesystem::path record_path(const std::filesystem::path& dataset_dir, const Ratio& ratio,
                                  std::string_view subset, std::string_view source_id);

// ---------------------------------------------------------------------------
// Decoy pools

enum class SourceFormat { Bmp, Wav, Jpeg, Png, Mp4 };

std::string_view format_name(SourceFormat f);
SourceFormat parse_format(std::string_view name);
/// Guess a format tag from a file extension; nullopt if unrecognised.
std::optional<SourceFormat> format_from_extension(const std::filesystem::path& path);

struct DecoySource {
  SourceFormat format;
  std::filesystem::path path;
};

struct LoadedDecoy {
  SourceFormat format;
  std::string name;
  Bytes bytes;
};

std::vector<LoadedDecoy> load_decoys(const std::vector<DecoySource>& sources);

struct PoolEntry {
  std::size_t pool_index = 0;
  SourceFormat format = SourceFormat::Bmp;
  Bytes bytes;
  bool is_true = false;
  std::string origin;  // "true" or "<decoy name>@<offset>"
};

struct FragmentPool {
  std::size_t target_length = 0;
  std::vector<PoolEntry> entries;
  std::size_t true_index = 0;
};

struct PoolOptions {
  std::size_t pool_size = 100;
  std::uint64_t seed = 0;
  // Relative weights per format. Empty: uniform over the non-BMP formats
  // present in the sources (BMP decoys only if nothing else is available).
  std::map<SourceFormat, double> format_mix;
  int max_redraws = 32;
};

FragmentPool build_pool(ByteView true_fragment, const std::vector<LoadedDecoy>& decoys, const PoolOptions& options);
FragmentPool build_pool(ByteView true_fragment, const std::vector<DecoySource>& sources, const PoolOptions& options);

}  // namespace gencarve
