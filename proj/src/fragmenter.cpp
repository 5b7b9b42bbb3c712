#include "gencarve/fragmenter.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numeric>
#include <set>

#include <json.hpp>

#include "gencarve/bmp.hpp"
#include "gencarve/digest.hpp"
#include "gencarve/error.hpp"
#include "gencarve/parallel.hpp"
#include "gencarve/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace gencarve {

Ratio Ratio::parse(const std::string& text) {
  const auto slash = text.find('/');
  Ratio r;
  auto parse_part = [&](std::string_view part, std::uint32_t& out) {
    auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), out);
    if (ec != std::errc{} || ptr != part.data() + part.size())
      throw Error(Errc::ConfigError, "bad ratio '" + text + "'");
  };
  if (slash == std::string::npos) throw Error(Errc::ConfigError, "ratio must look like 2/5, got '" + text + "'");
  parse_part(std::string_view(text).substr(0, slash), r.num);
  parse_part(std::string_view(text).substr(slash + 1), r.den);
  if (r.den == 0 || r.num == 0 || r.num >= r.den) throw Error(Errc::ConfigError, "ratio must lie in (0,1): " + text);
  return r;
}

std::string Ratio::str() const { return std::to_string(num) + "/" + std::to_string(den); }
std::string Ratio::tag() const { return "ratio_" + std::to_string(num) + "_" + std::to_string(den); }

FragmentRecord slice_fragment(ByteView full_bytes, Ratio ratio, std::string source_id) {
  if (ratio.den == 0 || ratio.num == 0 || ratio.num >= ratio.den)
    throw Error(Errc::InvalidArgument, "ratio must lie in (0,1)");
  if (full_bytes.size() < 3) throw Error(Errc::DegenerateSlice, "need at least 3 bytes");
  const std::size_t cut = ratio.cut_for(full_bytes.size());
  if (cut == 0 || cut >= full_bytes.size())
    throw Error(Errc::DegenerateSlice, "cut " + std::to_string(cut) + " of " + std::to_string(full_bytes.size()));
  FragmentRecord rec;
  rec.source_id = std::move(source_id);
  rec.full_bytes.assign(full_bytes.begin(), full_bytes.end());
  rec.cut = cut;
  rec.ratio = ratio;
  return rec;
}

// ---------------------------------------------------------------------------
// Manifest

std::string DatasetManifest::to_json() const {
  json j;
  j["format"] = "gencarve-dataset-manifest";
  j["version"] = 1;
  j["seed"] = seed;
  j["prng"] = {{"name", Rng::kName}, {"version", Rng::kVersion}, {"stream", "dataset"}};
  j["image"] = {{"width", width}, {"height", height}, {"bits_per_pixel", 24}};
  json sets = json::array();
  for (const auto& set : ratio_sets) {
    json recs = json::array();
    for (const auto& r : set.records) {
      recs.push_back({{"source_id", r.source_id},
                      {"source_file", r.source_file},
                      {"full_length", r.full_length},
                      {"cut", r.cut},
                      {"full_sha256", r.full_sha256},
                      {"input_sha256", r.input_sha256},
                      {"real_sha256", r.real_sha256}});
    }
    sets.push_back({{"ratio", set.ratio.str()}, {"tag", set.ratio.tag()}, {"records", std::move(recs)}});
  }
  j["ratio_sets"] = std::move(sets);
  return j.dump(2) + "\n";
}

DatasetManifest DatasetManifest::from_json(const std::string& text) {
  DatasetManifest m;
  try {
    const json j = json::parse(text);
    if (j.at("format") != "gencarve-dataset-manifest") throw Error(Errc::ConfigError, "not a dataset manifest");
    if (j.at("version") != 1) throw Error(Errc::VersionMismatch, "unsupported manifest version");
    if (j.at("prng").at("name") != Rng::kName || j.at("prng").at("version") != Rng::kVersion)
      throw Error(Errc::VersionMismatch, "manifest was produced with a different PRNG");
    m.seed = j.at("seed").get<std::uint64_t>();
    m.width = j.at("image").at("width").get<std::uint32_t>();
    m.height = j.at("image").at("height").get<std::uint32_t>();
    for (const auto& s : j.at("ratio_sets")) {
      RatioSet set;
      set.ratio = Ratio::parse(s.at("ratio").get<std::string>());
      for (const auto& r : s.at("records")) {
        ManifestRecord rec;
        rec.source_id = r.at("source_id").get<std::string>();
        rec.source_file = r.at("source_file").get<std::string>();
        rec.full_length = r.at("full_length").get<std::size_t>();
        rec.cut = r.at("cut").get<std::size_t>();
        rec.full_sha256 = r.at("full_sha256").get<std::string>();
        rec.input_sha256 = r.at("input_sha256").get<std::string>();
        rec.real_sha256 = r.at("real_sha256").get<std::string>();
        set.records.push_back(std::move(rec));
      }
      m.ratio_sets.push_back(std::move(set));
    }
  } catch (const json::exception& e) {
    throw Error(Errc::ConfigError, std::string("malformed manifest: ") + e.what());
  }
  return m;
}

// ---------------------------------------------------------------------------
// Dataset construction

std::vector<fs::path> list_corpus(const fs::path& corpus_dir) {
  std::error_code ec;
  if (!fs::is_directory(corpus_dir, ec)) throw Error(Errc::IoError, "corpus directory not found: " + corpus_dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(corpus_dir)) {
    if (entry.is_regular_file()) files.push_back(fs::relative(entry.path(), corpus_dir));
  }
  std::sort(files.begin(), files.end(), [](const fs::path& a, const fs::path& b) {
    return a.generic_string() < b.generic_string();
  });
  return files;
}

std::optional<Bytes> normalize_image(ByteView file_bytes, std::uint32_t width, std::uint32_t height) {
  bmp::BmpImage img;
  try {
    img = bmp::parse(file_bytes);
  } catch (const Error&) {
    return std::nullopt;
  }
  if (img.width == width && img.height == height && img.row_order == bmp::RowOrder::BottomUp)
    return Bytes(file_bytes.begin(), file_bytes.end());
  if (img.width == width && img.height == height) return bmp::encode(img);
  return bmp::encode(bmp::resize_nearest(img, width, height));
}

namespace {

std::string sanitize_id(const fs::path& rel) {
  std::string id = rel.parent_path().empty() ? rel.stem().string()
                                             : (rel.parent_path() / rel.stem()).generic_string();
  for (char& c : id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' || c == '_' || c == '.';
    if (!ok) c = '_';
  }
  return id.empty() ? "item" : id;
}

}  // namespace

fs::path record_path(const fs::path& dataset_dir, const Ratio& ratio, std::string_view subset,
                     std::string_view source_id) {
  return dataset_dir / ratio.tag() / subset / (std::string(source_id) + ".bin");
}

DatasetManifest build_dataset(const fs::path& corpus_dir, const fs::path& out_dir, const DatasetOptions& options) {
  if (options.ratios.empty()) throw Error(Errc::ConfigError, "no ratios configured");
  const std::size_t needed = options.per_ratio_count * options.ratios.size();
  if (options.per_ratio_count == 0) throw Error(Errc::ConfigError, "per_ratio_count must be positive");

  auto files = list_corpus(corpus_dir);
  Rng rng(derive_seed(options.seed, "dataset"));
  for (std::size_t i = files.size(); i > 1; --i) std::swap(files[i - 1], files[rng.below(i)]);

  // Walk the shuffled list and keep the first `needed` usable images.
  std::vector<CorpusImage> chosen;
  for (const auto& rel : files) {
    if (chosen.size() == needed) break;
    auto normalized = normalize_image(read_file(corpus_dir / rel), options.width, options.height);
    if (!normalized) continue;
    chosen.push_back({rel.generic_string(), std::move(*normalized)});
  }
  if (chosen.size() < needed)
    throw Error(Errc::InsufficientCorpus, "need " + std::to_string(needed) + " usable BMPs, found " +
                                              std::to_string(chosen.size()));

  std::set<std::string> used_ids;
  std::vector<std::string> ids;
  for (const auto& img : chosen) {
    std::string base = sanitize_id(img.relative_path);
    std::string id = base;
    for (int n = 2; used_ids.count(id); ++n) id = base + "_" + std::to_string(n);
    used_ids.insert(id);
    ids.push_back(id);
  }

  DatasetManifest manifest;
  manifest.seed = options.seed;
  manifest.width = options.width;
  manifest.height = options.height;
  manifest.ratio_sets.resize(options.ratios.size());
  for (std::size_t s = 0; s < options.ratios.size(); ++s) {
    manifest.ratio_sets[s].ratio = options.ratios[s];
    manifest.ratio_sets[s].records.resize(options.per_ratio_count);
  }

  parallel_for(needed, options.jobs, [&](std::size_t i) {
    const std::size_t s = i / options.per_ratio_count;
    const Ratio ratio = options.ratios[s];
    const FragmentRecord rec = slice_fragment(chosen[i].bmp_bytes, ratio, ids[i]);
    write_file(record_path(out_dir, ratio, "full", rec.source_id), rec.full_bytes);
    write_file(record_path(out_dir, ratio, "input", rec.source_id), rec.input_fragment());
    write_file(record_path(out_dir, ratio, "real", rec.source_id), rec.real_fragment());
    ManifestRecord& m = manifest.ratio_sets[s].records[i % options.per_ratio_count];
    m.source_id = rec.source_id;
    m.source_file = chosen[i].relative_path;
    m.full_length = rec.full_bytes.size();
    m.cut = rec.cut;
    m.full_sha256 = sha256_hex(rec.full_bytes);
    m.input_sha256 = sha256_hex(rec.input_fragment());
    m.real_sha256 = sha256_hex(rec.real_fragment());
  });

  write_text(out_dir / "manifest.json", manifest.to_json());
  return manifest;
}

FragmentRecord load_record(const fs::path& dataset_dir, const RatioSet& set, const ManifestRecord& rec) {
  const Bytes full = read_file(record_path(dataset_dir, set.ratio, "full", rec.source_id));
  if (sha256_hex(full) != rec.full_sha256)
    throw Error(Errc::IoError, "digest mismatch for " + rec.source_id + " (full)");
  FragmentRecord out = slice_fragment(full, set.ratio, rec.source_id);
  if (out.cut != rec.cut) throw Error(Errc::IoError, "cut mismatch for " + rec.source_id);
  const Bytes input = read_file(record_path(dataset_dir, set.ratio, "input", rec.source_id));
  const Bytes real = read_file(record_path(dataset_dir, set.ratio, "real", rec.source_id));
  if (sha256_hex(input) != rec.input_sha256 || sha256_hex(real) != rec.real_sha256)
    throw Error(Errc::IoError, "digest mismatch for " + rec.source_id + " fragments");
  return out;
}

// ---------------------------------------------------------------------------
// Pools

std::string_view format_name(SourceFormat f) {
  switch (f) {
    case SourceFormat::Bmp: return "bmp";
    case SourceFormat::Wav: return "wav";
    case SourceFormat::Jpeg: return "jpeg";
    case SourceFormat::Png: return "png";
    case SourceFormat::Mp4: return "mp4";
  }
  return "?";
}

SourceFormat parse_format(std::string_view name) {
  if (name == "bmp") return SourceFormat::Bmp;
  if (name == "wav") return SourceFormat::Wav;
  if (name == "jpeg" || name == "jpg") return SourceFormat::Jpeg;
  if (name == "png") return SourceFormat::Png;
  if (name == "mp4") return SourceFormat::Mp4;
  throw Error(Errc::ConfigError, "unknown format tag '" + std::string(name) + "'");
}

std::optional<SourceFormat> format_from_extension(const fs::path& path) {
  std::string ext = path.extension().string();
  if (ext.empty()) return std::nullopt;
  ext.erase(0, 1);
  for (char& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  try {
    return parse_format(ext);
  } catch (const Error&) {
    return std::nullopt;
  }
}

std::vector<LoadedDecoy> load_decoys(const std::vector<DecoySource>& sources) {
  std::vector<LoadedDecoy> out;
  out.reserve(sources.size());
  for (const auto& s : sources) out.push_back({s.format, s.path.filename().string(), read_file(s.path)});
  return out;
}

namespace {

// Largest-remainder apportionment of `total` slots over the weighted formats.
std::vector<SourceFormat> apportion(const std::map<SourceFormat, double>& weights, std::size_t total) {
  double sum = 0;
  for (const auto& [f, w] : weights) sum += w;
  struct Share { SourceFormat f; std::size_t whole; double rem; };
  std::vector<Share> shares;
  std::size_t assigned = 0;
  for (const auto& [f, w] : weights) {
    const double exact = static_cast<double>(total) * w / sum;
    const auto whole = static_cast<std::size_t>(std::floor(exact));
    shares.push_back({f, whole, exact - static_cast<double>(whole)});
    assigned += whole;
  }
  std::vector<std::size_t> order(shares.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return shares[a].rem > shares[b].rem; });
  for (std::size_t k = 0; assigned < total; ++k, ++assigned) ++shares[order[k % order.size()]].whole;
  std::vector<SourceFormat> slots;
  for (const auto& s : shares) slots.insert(slots.end(), s.whole, s.f);
  return slots;
}

}  // namespace

FragmentPool build_pool(ByteView true_fragment, const std::vector<LoadedDecoy>& decoys, const PoolOptions& options) {
  const std::size_t length = true_fragment.size();
  if (length == 0) throw Error(Errc::InvalidArgument, "empty true fragment");
  if (options.pool_size < 2) throw Error(Errc::InvalidArgument, "pool size must be >= 2");
  if (decoys.empty()) throw Error(Errc::InsufficientSources, "no decoy sources");
  for (const auto& d : decoys) {
    if (d.bytes.size() < length)
      throw Error(Errc::SourceTooSmall, d.name + " has " + std::to_string(d.bytes.size()) + " bytes, need " +
                                            std::to_string(length));
  }

  std::map<SourceFormat, std::vector<const LoadedDecoy*>> by_format;
  for (const auto& d : decoys) by_format[d.format].push_back(&d);

  std::map<SourceFormat, double> weights;
  if (options.format_mix.empty()) {
    for (const auto& [f, list] : by_format)
      if (f != SourceFormat::Bmp) weights[f] = 1.0;
    if (weights.empty()) weights[SourceFormat::Bmp] = 1.0;
  } else {
    for (const auto& [f, w] : options.format_mix) {
      if (!std::isfinite(w) || w < 0) throw Error(Errc::InvalidArgument, "format weights must be finite and >= 0");
      if (w == 0) continue;
      if (!by_format.count(f))
        throw Error(Errc::InsufficientSources, "no decoy sources for format " + std::string(format_name(f)));
      weights[f] = w;
    }
    if (weights.empty()) throw Error(Errc::InsufficientSources, "format mix selects no formats");
  }

  Rng rng(options.seed);
  FragmentPool pool;
  pool.target_length = length;
  pool.true_index = rng.below(options.pool_size);

  std::vector<SourceFormat> slots = apportion(weights, options.pool_size - 1);
  for (std::size_t i = slots.size(); i > 1; --i) std::swap(slots[i - 1], slots[rng.below(i)]);

  pool.entries.reserve(options.pool_size);
  std::size_t next_slot = 0;
  for (std::size_t idx = 0; idx < options.pool_size; ++idx) {
    PoolEntry entry;
    entry.pool_index = idx;
    if (idx == pool.true_index) {
      entry.format = SourceFormat::Bmp;
      entry.bytes.assign(true_fragment.begin(), true_fragment.end());
      entry.is_true = true;
      entry.origin = "true";
    } else {
      const SourceFormat f = slots[next_slot++];
      const auto& candidates = by_format.at(f);
      bool placed = false;
      for (int attempt = 0; attempt <= options.max_redraws && !placed; ++attempt) {
        const LoadedDecoy& src = *candidates[rng.below(candidates.size())];
        const std::size_t offset = rng.below(src.bytes.size() - length + 1);
        ByteView slice = ByteView(src.bytes).subspan(offset, length);
        if (std::equal(slice.begin(), slice.end(), true_fragment.begin())) continue;
        entry.format = f;
        entry.bytes.assign(slice.begin(), slice.end());
        entry.origin = src.name + "@" + std::to_string(offset);
        placed = true;
      }
      if (!placed)
        throw Error(Errc::DuplicateTrueFragment, "decoy draws kept reproducing the true fragment");
    }
    pool.entries.push_back(std::move(entry));
  }
  return pool;
}

FragmentPool build_pool(ByteView true_fragment, const std::vector<DecoySource>& sources, const PoolOptions& options) {
  return build_pool(true_fragment, load_decoys(sources), options);
}

}  // namespace gencarve
