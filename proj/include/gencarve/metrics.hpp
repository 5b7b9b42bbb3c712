#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gencarve/bmp.hpp"
#include "gencarve/fragmenter.hpp"
#include "gencarve/io.hpp"

namespace gencarve::metrics {

struct ByteHistogram {
  std::array<std::uint64_t, 256> bins{};
  std::uint64_t total = 0;
};

struct ProbDistribution {
  std::array<double, 256> p{};
};

ByteHistogram byte_histogram(ByteView bytes);
ProbDistribution normalize(const ByteHistogram& h);

/// A.B / (|A| |B|) over raw counts; in [0, 1].
double cosine_similarity(const ByteHistogram& a, const ByteHistogram& b);

/// Pearson chi-square of observed (predicted fragment) against expected
/// (real fragment) raw counts. Bins with E=0 and O>0 use E=0.5.
double chi_square(const ByteHistogram& observed, const ByteHistogram& expected);
inline constexpr double kChiSquareEmptyBinExpectation = 0.5;

/// Jensen-Shannon divergence in bits; in [0, 1].
double jsd(const ProbDistribution& p, const ProbDistribution& q);

// ---------------------------------------------------------------------------
// SSIM

inline constexpr double kDynamicRange = 255.0;
inline constexpr double kC1 = (0.01 * kDynamicRange) * (0.01 * kDynamicRange);
inline constexpr double kC2 = (0.03 * kDynamicRange) * (0.03 * kDynamicRange);
inline constexpr std::uint32_t kDefaultWindow = 7;

/// Per-placement SSIM values. Placement (r, c) covers rows r..r+window-1 and
/// columns c..c+window-1 and is centred on pixel (r + window/2, c + window/2).
struct LocalMap {
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  std::vector<double> values;

  double at(std::uint32_t r, std::uint32_t c) const { return values[r * cols + c]; }
};

struct SsimResult {
  double global = 0;
  LocalMap local_map;
  std::uint32_t window = kDefaultWindow;
  double c1 = kC1;
  double c2 = kC2;
  std::vector<bool> region_mask;  // per pixel, row-major; all true when no mask was given
  std::size_t windows_averaged = 0;
};

/// Windowed SSIM with uniform window statistics (population variance and
/// covariance). `global` averages the placements whose centre lies inside
/// the mask. Throws DimensionMismatch, WindowTooLarge, EmptyMask.
SsimResult ssim(const bmp::GrayImage& x, const bmp::GrayImage& y, std::uint32_t window = kDefaultWindow,
                const std::optional<std::vector<bool>>& mask = std::nullopt);

/// Pixels that own at least one byte at file offset >= cut.
std::vector<bool> predicted_region_mask(const bmp::BmpImage& layout, std::size_t cut);

/// SSIM between the original image and input_fragment ++ predicted,
/// restricted to the predicted region.
SsimResult fragment_ssim(const FragmentRecord& record, ByteView predicted,
                         std::uint32_t window = kDefaultWindow);

/// Local map as binary PGM, values mapped linearly from [-1, 1] to [0, 255].
Bytes heatmap_pgm(const LocalMap& map);
/// Local map as CSV, one row per placement row.
std::string heatmap_csv(const LocalMap& map);

// ---------------------------------------------------------------------------

/// The three byte-level scores between a predicted fragment and a candidate.
struct ByteScores {
  double chi = 0;
  double jsd = 0;
  double cos = 0;
};

ByteScores byte_scores(ByteView predicted, ByteView candidate);
ByteScores byte_scores(const ByteHistogram& predicted, const ByteHistogram& candidate);

}  // namespace gencarve::metrics
