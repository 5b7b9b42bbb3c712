#pragma once

// Direct-from-formula reference implementations, written independently of
// the library: long double, two-pass statistics, per-window loops, no shared
// helpers with src/.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

namespace oracle {

using Real = long double;

inline std::vector<Real> histogram(const std::vector<std::uint8_t>& bytes) {
  std::vector<Real> h(256, 0);
  for (auto b : bytes) h[b] += 1;
  return h;
}

inline Real cosine(const std::vector<Real>& a, const std::vector<Real>& b) {
  Real dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

inline Real chi_square(const std::vector<Real>& observed, const std::vector<Real>& expected) {
  Real sum = 0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    Real e = expected[i];
    const Real o = observed[i];
    if (e == 0 && o == 0) continue;
    if (e == 0) e = 0.5L;
    sum += (o - e) * (o - e) / e;
  }
  return sum;
}

inline std::vector<Real> normalized(const std::vector<Real>& h) {
  Real total = 0;
  for (Real v : h) total += v;
  std::vector<Real> p(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) p[i] = h[i] / total;
  return p;
}

inline Real kl_bits(const std::vector<Real>& p, const std::vector<Real>& m) {
  Real sum = 0;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[i] > 0) sum += p[i] * std::log(p[i] / m[i]);
  return sum / std::log(2.0L);
}

inline Real jsd(const std::vector<Real>& p, const std::vector<Real>& q) {
  std::vector<Real> m(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) m[i] = (p[i] + q[i]) / 2;
  return kl_bits(p, m) / 2 + kl_bits(q, m) / 2;
}

struct Gray {
  std::uint32_t w = 0, h = 0;
  std::vector<int> v;
  int at(std::uint32_t r, std::uint32_t c) const { return v[r * w + c]; }
};

/// SSIM of one window: means, population variances, covariance by two passes.
inline Real ssim_window(const Gray& x, const Gray& y, std::uint32_t r0, std::uint32_t c0, std::uint32_t win) {
  const Real c1 = (0.01L * 255) * (0.01L * 255);
  const Real c2 = (0.03L * 255) * (0.03L * 255);
  const Real n = static_cast<Real>(win) * win;
  Real mx = 0, my = 0;
  for (std::uint32_t r = r0; r < r0 + win; ++r)
    for (std::uint32_t c = c0; c < c0 + win; ++c) {
      mx += x.at(r, c);
      my += y.at(r, c);
    }
  mx /= n;
  my /= n;
  Real vx = 0, vy = 0, cxy = 0;
  for (std::uint32_t r = r0; r < r0 + win; ++r)
    for (std::uint32_t c = c0; c < c0 + win; ++c) {
      vx += (x.at(r, c) - mx) * (x.at(r, c) - mx);
      vy += (y.at(r, c) - my) * (y.at(r, c) - my);
      cxy += (x.at(r, c) - mx) * (y.at(r, c) - my);
    }
  vx /= n;
  vy /= n;
  cxy /= n;
  return ((2 * mx * my + c1) * (2 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
}

/// Mean SSIM over windows whose centre pixel is set in mask (empty: all).
inline Real ssim_global(const Gray& x, const Gray& y, std::uint32_t win, const std::vector<bool>& mask = {}) {
  Real sum = 0;
  std::size_t count = 0;
  for (std::uint32_t r = 0; r + win <= x.h; ++r)
    for (std::uint32_t c = 0; c + win <= x.w; ++c) {
      if (!mask.empty() && !mask[(r + win / 2) * x.w + c + win / 2]) continue;
      sum += ssim_window(x, y, r, c, win);
      ++count;
    }
  return sum / count;
}

/// Grayscale straight from 24-bit BMP file bytes (54-byte header).
inline Gray gray_from_bmp_bytes(const std::vector<std::uint8_t>& file) {
  auto u32 = [&](std::size_t at) {
    return std::uint32_t(file[at]) | std::uint32_t(file[at + 1]) << 8 | std::uint32_t(file[at + 2]) << 16 |
           std::uint32_t(file[at + 3]) << 24;
  };
  Gray g;
  g.w = u32(18);
  g.h = u32(22);
  const std::size_t stride = (g.w * 3 + 3) / 4 * 4;
  g.v.resize(g.w * g.h);
  for (std::uint32_t stored = 0; stored < g.h; ++stored) {
    for (std::uint32_t c = 0; c < g.w; ++c) {
      const std::size_t p = 54 + stored * stride + c * 3;
      const Real luma = (299.0L * file[p + 2] + 587.0L * file[p + 1] + 114.0L * file[p]) / 1000.0L;
      g.v[(g.h - 1 - stored) * g.w + c] = static_cast<int>(std::floor(luma + 0.5L));
    }
  }
  return g;
}

struct Summary {
  Real mean, median, min, max, std_dev;
};

inline Summary summarize(std::vector<Real> v) {
  Summary s{};
  Real sum = 0;
  for (Real x : v) sum += x;
  s.mean = sum / v.size();
  Real ss = 0;
  for (Real x : v) ss += (x - s.mean) * (x - s.mean);
  s.std_dev = std::sqrt(ss / (v.size() - 1));
  std::sort(v.begin(), v.end());
  s.min = v.front();
  s.max = v.back();
  s.median = v.size() % 2 ? v[v.size() / 2] : (v[v.size() / 2 - 1] + v[v.size() / 2]) / 2;
  return s;
}

}  // namespace oracle
