#include "gencarve/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "gencarve/rng.hpp"

namespace gencarve::synth {

namespace {

struct Color {
  double b, g, r;
};

Color random_color(Rng& rng) { return {rng.unit() * 255, rng.unit() * 255, rng.unit() * 255}; }

Color mix(const Color& a, const Color& b, double t) {
  return {a.b + (b.b - a.b) * t, a.g + (b.g - a.g) * t, a.r + (b.r - a.r) * t};
}

std::uint8_t clamp_byte(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

void put_le(Bytes& out, std::uint64_t v, int n) {
  for (int i = 0; i < n; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_be(Bytes& out, std::uint64_t v, int n) {
  for (int i = n - 1; i >= 0; --i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void append(Bytes& out, std::string_view s) { out.insert(out.end(), s.begin(), s.end()); }

}  // namespace

bmp::BmpImage natural_image(std::uint64_t seed, std::uint32_t width, std::uint32_t height) {
  Rng rng(seed);
  bmp::BmpImage img = bmp::make_image(width, height);
  const Color top = random_color(rng);
  const Color bottom = random_color(rng);
  const double tilt = rng.unit() * 0.6 - 0.3;

  struct Blob {
    double cy, cx, ry, rx, softness;
    Color color;
  };
  std::vector<Blob> blobs(1 + rng.below(4));
  for (auto& b : blobs) {
    b = {rng.unit() * height, rng.unit() * width, 3 + rng.unit() * height / 2.5, 3 + rng.unit() * width / 2.5,
         0.5 + rng.unit() * 3, random_color(rng)};
  }
  const double tex_amp = rng.unit() * 18;
  const double fy = 0.1 + rng.unit() * 0.5, fx = 0.1 + rng.unit() * 0.5, phase = rng.unit() * 2 * std::numbers::pi;
  const double noise = rng.unit() * 6;

  for (std::uint32_t r = 0; r < height; ++r) {
    for (std::uint32_t c = 0; c < width; ++c) {
      const double t = std::clamp((r + tilt * c) / static_cast<double>(height), 0.0, 1.0);
      Color px = mix(top, bottom, t);
      for (const auto& b : blobs) {
        const double dy = (r - b.cy) / b.ry, dx = (c - b.cx) / b.rx;
        const double d = std::sqrt(dy * dy + dx * dx);
        const double w = 1.0 / (1.0 + std::exp((d - 1.0) * 4.0 * b.softness));
        px = mix(px, b.color, w);
      }
      const double tex = tex_amp * std::sin(fy * r + fx * c + phase);
      img.at(r, c) = {clamp_byte(px.b + tex + (rng.unit() - 0.5) * 2 * noise),
                      clamp_byte(px.g + tex + (rng.unit() - 0.5) * 2 * noise),
                      clamp_byte(px.r + tex + (rng.unit() - 0.5) * 2 * noise)};
    }
  }
  return img;
}

Bytes decoy_file(SourceFormat format, std::uint64_t seed, std::size_t size) {
  Rng rng(seed);
  Bytes out;
  out.reserve(size);
  switch (format) {
    case SourceFormat::Wav: {
      append(out, "RIFF");
      put_le(out, size - 8, 4);
      append(out, "WAVEfmt ");
      put_le(out, 16, 4);
      put_le(out, 1, 2);      // PCM
      put_le(out, 1, 2);      // mono
      put_le(out, 22050, 4);
      put_le(out, 44100, 4);
      put_le(out, 2, 2);
      put_le(out, 16, 2);
      append(out, "data");
      put_le(out, size > 44 ? size - 44 : 0, 4);
      const double f1 = 110 + rng.unit() * 800, f2 = 50 + rng.unit() * 3000, amp = 2000 + rng.unit() * 12000;
      for (std::size_t i = 0; out.size() + 1 < size; ++i) {
        const double t = static_cast<double>(i) / 22050.0;
        const double v = amp * (0.7 * std::sin(2 * std::numbers::pi * f1 * t) + 0.3 * std::sin(2 * std::numbers::pi * f2 * t)) +
                         (rng.unit() - 0.5) * 400;
        put_le(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(std::clamp(v, -32768.0, 32767.0))), 2);
      }
      break;
    }
    case SourceFormat::Jpeg: {
      const std::uint8_t head[] = {0xFF, 0xD8, 0xFF, 0xE0, 0x00, 0x10, 'J', 'F', 'I', 'F', 0x00, 0x01, 0x01, 0x00,
                                   0x00, 0x48, 0x00, 0x48, 0x00, 0x00, 0xFF, 0xDB, 0x00, 0x43, 0x00};
      out.insert(out.end(), std::begin(head), std::end(head));
      for (int i = 0; i < 64; ++i) out.push_back(static_cast<std::uint8_t>(2 + rng.below(40)));
      const std::uint8_t sos[] = {0xFF, 0xDA, 0x00, 0x08, 0x01, 0x01, 0x00, 0x00, 0x3F, 0x00};
      out.insert(out.end(), std::begin(sos), std::end(sos));
      while (out.size() + 2 < size) {
        const auto b = static_cast<std::uint8_t>(rng.next() >> 56);
        out.push_back(b);
        if (b == 0xFF) out.push_back(0x00);  // byte stuffing
      }
      out.resize(size - 2);
      out.push_back(0xFF);
      out.push_back(0xD9);
      break;
    }
    case SourceFormat::Png: {
      const std::uint8_t sig[] = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
      out.insert(out.end(), std::begin(sig), std::end(sig));
      put_be(out, 13, 4);
      append(out, "IHDR");
      put_be(out, 64 + rng.below(512), 4);
      put_be(out, 64 + rng.below(512), 4);
      out.insert(out.end(), {8, 2, 0, 0, 0});
      put_be(out, rng.next() & 0xFFFFFFFF, 4);
      const std::size_t idat = size > 8 + 25 + 12 + 12 ? size - (8 + 25 + 12 + 12) : 0;
      put_be(out, idat, 4);
      append(out, "IDAT");
      out.insert(out.end(), {0x78, 0x9C});
      while (out.size() < 8 + 25 + 8 + idat) out.push_back(static_cast<std::uint8_t>(rng.next() >> 56));
      put_be(out, rng.next() & 0xFFFFFFFF, 4);
      put_be(out, 0, 4);
      append(out, "IEND");
      put_be(out, 0xAE426082, 4);
      break;
    }
    case SourceFormat::Mp4: {
      put_be(out, 24, 4);
      append(out, "ftypisom");
      put_be(out, 0x200, 4);
      append(out, "isomiso2");
      put_be(out, size > 32 ? size - 24 : 8, 4);
      append(out, "mdat");
      // NAL-ish units: start code, header byte, high-entropy slice payload.
      while (out.size() < size) {
        out.insert(out.end(), {0x00, 0x00, 0x00, 0x01, static_cast<std::uint8_t>(0x41 + rng.below(4))});
        const std::size_t len = 200 + rng.below(1500);
        for (std::size_t i = 0; i < len && out.size() < size; ++i) out.push_back(static_cast<std::uint8_t>(rng.next() >> 56));
      }
      break;
    }
    case SourceFormat::Bmp: {
      const std::uint32_t side = std::max<std::uint32_t>(8, static_cast<std::uint32_t>(std::sqrt(size / 3.0)));
      out = bmp::encode(natural_image(seed, side, side));
      break;
    }
  }
  out.resize(std::max(out.size(), size), 0);
  out.resize(size);
  return out;
}

void write_corpus(const std::filesystem::path& dir, std::size_t count, std::uint64_t seed, std::uint32_t width,
                  std::uint32_t height) {
  for (std::size_t i = 0; i < count; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "img_%05zu.bmp", i);
    write_file(dir / name, bmp::encode(natural_image(derive_seed(seed, i), width, height)));
  }
}

void write_decoys(const std::filesystem::path& dir, std::size_t per_format, std::uint64_t seed, std::size_t size) {
  const SourceFormat formats[] = {SourceFormat::Wav, SourceFormat::Jpeg, SourceFormat::Png, SourceFormat::Mp4};
  std::uint64_t k = 0;
  for (SourceFormat f : formats) {
    for (std::size_t i = 0; i < per_format; ++i, ++k) {
      char name[48];
      const std::string_view ext = f == SourceFormat::Jpeg ? "jpg" : format_name(f);
      std::snprintf(name, sizeof name, "%s_%03zu.%.*s", std::string(format_name(f)).c_str(), i,
                    static_cast<int>(ext.size()), ext.data());
      write_file(dir / name, decoy_file(f, derive_seed(seed, k), size));
    }
  }
}

}  // namespace gencarve::synth
