#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "gencarve/io.hpp"

namespace gencarve::bmp {

inline constexpr std::size_t kHeaderSize = 54;  // 14-byte file header + BITMAPINFOHEADER

enum class RowOrder { BottomUp, TopDown };
enum class Channel : std::uint8_t { Blue = 0, Green = 1, Red = 2 };

struct Bgr {
  std::uint8_t b = 0, g = 0, r = 0;
  friend bool operator==(const Bgr&, const Bgr&) = default;
};

// Header fields that carry no pixel meaning but are kept so parse/encode
// reproduces the original bytes.
struct HeaderExtras {
  std::uint32_t reserved = 0;          // bfReserved1/2
  std::uint32_t image_size_field = 0;  // biSizeImage as declared (0 or stride*height)
  std::int32_t x_pixels_per_meter = 0;
  std::int32_t y_pixels_per_meter = 0;
  std::uint32_t colors_used = 0;
  std::uint32_t colors_important = 0;
  friend bool operator==(const HeaderExtras&, const HeaderExtras&) = default;
};

/// Uncompressed 24-bit image. Pixels are always stored top-down, row-major,
/// regardless of how the source file laid out its rows.
struct BmpImage {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  RowOrder row_order = RowOrder::BottomUp;
  std::vector<Bgr> pixels;
  std::uint32_t pixel_data_offset = static_cast<std::uint32_t>(kHeaderSize);
  std::uint32_t file_size = 0;
  HeaderExtras extras;

  const Bgr& at(std::uint32_t row, std::uint32_t col) const { return pixels[row * width + col]; }
  Bgr& at(std::uint32_t row, std::uint32_t col) { return pixels[row * width + col]; }
};

/// A blank bottom-up image with a consistent file_size.
BmpImage make_image(std::uint32_t width, std::uint32_t height);

struct GrayImage {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<std::uint8_t> values;

  std::uint8_t at(std::uint32_t row, std::uint32_t col) const { return values[row * width + col]; }
};

struct PixelCoord {
  std::uint32_t row;  // visual, top-down
  std::uint32_t col;
  Channel channel;
  friend bool operator==(const PixelCoord&, const PixelCoord&) = default;
};

constexpr std::size_t row_stride(std::uint32_t width) { return (std::size_t{width} * 3 + 3) / 4 * 4; }

constexpr std::size_t encoded_size(std::uint32_t width, std::uint32_t height) {
  return kHeaderSize + row_stride(width) * height;
}

BmpImage parse(ByteView bytes);
Bytes encode(const BmpImage& img);
GrayImage to_grayscale(const BmpImage& img);

/// Maps a file offset to the visual pixel it encodes; nullopt for header and
/// row-padding bytes. Throws OffsetOutOfRange past the end of the file.
std::optional<PixelCoord> byte_offset_to_pixel(const BmpImage& img, std::size_t offset);

/// Nearest-neighbour resample; the result is bottom-up with default extras.
BmpImage resize_nearest(const BmpImage& img, std::uint32_t width, std::uint32_t height);

}  // namespace gencarve::bmp
