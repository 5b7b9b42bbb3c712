#include "gencarve/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "gencarve/error.hpp"

namespace gencarve::metrics {

ByteHistogram byte_histogram(ByteView bytes) {
  if (bytes.empty()) throw Error(Errc::EmptyInput, "histogram of empty byte sequence");
  ByteHistogram h;
  for (std::uint8_t b : bytes) ++h.bins[b];
  h.total = bytes.size();
  return h;
}

ProbDistribution normalize(const ByteHistogram& h) {
  if (h.total == 0) throw Error(Errc::EmptyInput, "cannot normalise an empty histogram");
  ProbDistribution d;
  const double total = static_cast<double>(h.total);
  for (std::size_t i = 0; i < 256; ++i) d.p[i] = static_cast<double>(h.bins[i]) / total;
  return d;
}

double cosine_similarity(const ByteHistogram& a, const ByteHistogram& b) {
  // Integer accumulation keeps a.a == the norm product exact for self-similarity.
  // Sums of squares stay below 2^64 while totals are below 2^32.
  if (a.total >= (std::uint64_t{1} << 32) || b.total >= (std::uint64_t{1} << 32))
    throw Error(Errc::InvalidArgument, "histogram too large for cosine similarity");
  std::uint64_t dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < 256; ++i) {
    dot += a.bins[i] * b.bins[i];
    na += a.bins[i] * a.bins[i];
    nb += b.bins[i] * b.bins[i];
  }
  if (na == 0 || nb == 0) throw Error(Errc::ZeroVector, "cosine similarity of a zero histogram");
  double c;
  if (na == nb) {
    c = static_cast<double>(dot) / static_cast<double>(na);
  } else {
    c = static_cast<double>(dot) / (std::sqrt(static_cast<double>(na)) * std::sqrt(static_cast<double>(nb)));
  }
  return std::clamp(c, 0.0, 1.0);
}

double chi_square(const ByteHistogram& observed, const ByteHistogram& expected) {
  if (observed.total == 0 || expected.total == 0) throw Error(Errc::EmptyInput, "chi-square of an empty histogram");
  double sum = 0;
  for (std::size_t i = 0; i < 256; ++i) {
    const double o = static_cast<double>(observed.bins[i]);
    double e = static_cast<double>(expected.bins[i]);
    if (e == 0) {
      if (o == 0) continue;
      e = kChiSquareEmptyBinExpectation;
    }
    const double d = o - e;
    sum += d * d / e;
  }
  return sum;
}

double jsd(const ProbDistribution& p, const ProbDistribution& q) {
  double kl_p = 0, kl_q = 0;
  for (std::size_t i = 0; i < 256; ++i) {
    const double m = 0.5 * (p.p[i] + q.p[i]);
    if (p.p[i] > 0) kl_p += p.p[i] * std::log2(p.p[i] / m);
    if (q.p[i] > 0) kl_q += q.p[i] * std::log2(q.p[i] / m);
  }
  return std::clamp(0.5 * kl_p + 0.5 * kl_q, 0.0, 1.0);
}

// ---------------------------------------------------------------------------

namespace {

// Summed-area table with a zero first row/column.
class Integral {
 public:
  template <typename F>
  Integral(std::uint32_t w, std::uint32_t h, F&& value) : w_(w + 1), sums_(std::size_t(w + 1) * (h + 1), 0) {
    for (std::uint32_t r = 0; r < h; ++r) {
      std::int64_t row = 0;
      for (std::uint32_t c = 0; c < w; ++c) {
        row += value(r, c);
        sums_[(r + 1) * w_ + c + 1] = sums_[r * w_ + c + 1] + row;
      }
    }
  }

  std::int64_t box(std::uint32_t r, std::uint32_t c, std::uint32_t n) const {
    return sums_[(r + n) * w_ + c + n] - sums_[r * w_ + c + n] - sums_[(r + n) * w_ + c] + sums_[r * w_ + c];
  }

 private:
  std::size_t w_;
  std::vector<std::int64_t> sums_;
};

}  // namespace

SsimResult ssim(const bmp::GrayImage& x, const bmp::GrayImage& y, std::uint32_t window,
                const std::optional<std::vector<bool>>& mask) {
  if (x.width != y.width || x.height != y.height) throw Error(Errc::DimensionMismatch, "images differ in size");
  if (window == 0 || window % 2 == 0) throw Error(Errc::InvalidArgument, "window must be odd");
  if (window > std::min(x.width, x.height)) throw Error(Errc::WindowTooLarge, "window exceeds image");
  const std::size_t pixels = std::size_t{x.width} * x.height;
  if (mask && mask->size() != pixels) throw Error(Errc::DimensionMismatch, "mask size differs from image");

  auto px = [&](std::uint32_t r, std::uint32_t c) -> std::int64_t { return x.at(r, c); };
  auto py = [&](std::uint32_t r, std::uint32_t c) -> std::int64_t { return y.at(r, c); };
  const Integral sx(x.width, x.height, px);
  const Integral sy(x.width, x.height, py);
  const Integral sxx(x.width, x.height, [&](auto r, auto c) { return px(r, c) * px(r, c); });
  const Integral syy(x.width, x.height, [&](auto r, auto c) { return py(r, c) * py(r, c); });
  const Integral sxy(x.width, x.height, [&](auto r, auto c) { return px(r, c) * py(r, c); });

  SsimResult res;
  res.window = window;
  res.region_mask = mask ? *mask : std::vector<bool>(pixels, true);
  LocalMap& map = res.local_map;
  map.rows = x.height - window + 1;
  map.cols = x.width - window + 1;
  map.values.resize(std::size_t{map.rows} * map.cols);

  const std::int64_t n = std::int64_t{window} * window;
  const double n2 = static_cast<double>(n * n);
  const std::uint32_t half = window / 2;
  double masked_sum = 0;
  for (std::uint32_t r = 0; r < map.rows; ++r) {
    for (std::uint32_t c = 0; c < map.cols; ++c) {
      const std::int64_t a = sx.box(r, c, window);
      const std::int64_t b = sy.box(r, c, window);
      // N^2 * (co)variance is an exact integer.
      const double var_x = static_cast<double>(n * sxx.box(r, c, window) - a * a) / n2;
      const double var_y = static_cast<double>(n * syy.box(r, c, window) - b * b) / n2;
      const double cov = static_cast<double>(n * sxy.box(r, c, window) - a * b) / n2;
      const double mx = static_cast<double>(a) / static_cast<double>(n);
      const double my = static_cast<double>(b) / static_cast<double>(n);
      const double value = ((2.0 * (mx * my) + kC1) * (2.0 * cov + kC2)) /
                           ((mx * mx + my * my + kC1) * (var_x + var_y + kC2));
      map.values[std::size_t{r} * map.cols + c] = value;
      if (res.region_mask[std::size_t{r + half} * x.width + c + half]) {
        masked_sum += value;
        ++res.windows_averaged;
      }
    }
  }
  if (res.windows_averaged == 0) throw Error(Errc::EmptyMask, "no window centre lies inside the mask");
  res.global = masked_sum / static_cast<double>(res.windows_averaged);
  return res;
}

std::vector<bool> predicted_region_mask(const bmp::BmpImage& layout, std::size_t cut) {
  std::vector<bool> mask(std::size_t{layout.width} * layout.height, false);
  for (std::size_t off = std::max<std::size_t>(cut, layout.pixel_data_offset); off < layout.file_size; ++off) {
    if (auto p = bmp::byte_offset_to_pixel(layout, off)) mask[std::size_t{p->row} * layout.width + p->col] = true;
  }
  return mask;
}

SsimResult fragment_ssim(const FragmentRecord& record, ByteView predicted, std::uint32_t window) {
  if (predicted.size() != record.full_bytes.size() - record.cut)
    throw Error(Errc::LengthMismatch, "predicted fragment has " + std::to_string(predicted.size()) +
                                          " bytes, real fragment " +
                                          std::to_string(record.full_bytes.size() - record.cut));
  const bmp::BmpImage original = bmp::parse(record.full_bytes);
  Bytes rebuilt(record.input_fragment().begin(), record.input_fragment().end());
  rebuilt.insert(rebuilt.end(), predicted.begin(), predicted.end());
  bmp::BmpImage reconstructed;
  try {
    reconstructed = bmp::parse(rebuilt);
  } catch (const Error& e) {
    throw Error(Errc::ReconstructionUnparseable, e.what());
  }
  if (reconstructed.width != original.width || reconstructed.height != original.height)
    throw Error(Errc::ReconstructionUnparseable, "reconstructed header changed the image geometry");
  return ssim(bmp::to_grayscale(reconstructed), bmp::to_grayscale(original), window,
              predicted_region_mask(original, record.cut));
}

Bytes heatmap_pgm(const LocalMap& map) {
  const std::string header = "P5\n" + std::to_string(map.cols) + " " + std::to_string(map.rows) + "\n255\n";
  Bytes out(header.begin(), header.end());
  for (double v : map.values) {
    const double scaled = std::round((std::clamp(v, -1.0, 1.0) + 1.0) * 0.5 * 255.0);
    out.push_back(static_cast<std::uint8_t>(scaled));
  }
  return out;
}

std::string heatmap_csv(const LocalMap& map) {
  std::string out;
  for (std::uint32_t r = 0; r < map.rows; ++r) {
    for (std::uint32_t c = 0; c < map.cols; ++c) {
      if (c) out += ',';
      out += format_double(map.at(r, c));
    }
    out += '\n';
  }
  return out;
}

ByteScores byte_scores(const ByteHistogram& predicted, const ByteHistogram& candidate) {
  return {chi_square(predicted, candidate), jsd(normalize(predicted), normalize(candidate)),
          cosine_similarity(predicted, candidate)};
}

ByteScores byte_scores(ByteView predicted, ByteView candidate) {
  return byte_scores(byte_histogram(predicted), byte_histogram(candidate));
}

}  // namespace gencarve::metrics
