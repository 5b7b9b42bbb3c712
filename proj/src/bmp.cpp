#include "gencarve/bmp.hpp"

#include <cmath>
#include <cstring>
#include <limits>
#include <string>

#include "gencarve/error.hpp"

namespace gencarve::bmp {

namespace {

constexpr std::uint32_t kInfoHeaderSize = 40;

std::uint16_t get_u16(ByteView b, std::size_t at) {
  return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

std::uint32_t get_u32(ByteView b, std::size_t at) {
  return static_cast<std::uint32_t>(b[at]) | (static_cast<std::uint32_t>(b[at + 1]) << 8) |
         (static_cast<std::uint32_t>(b[at + 2]) << 16) | (static_cast<std::uint32_t>(b[at + 3]) << 24);
}

std::int32_t get_i32(ByteView b, std::size_t at) { return static_cast<std::int32_t>(get_u32(b, at)); }

void put_u16(Bytes& out, std::size_t at, std::uint16_t v) {
  out[at] = static_cast<std::uint8_t>(v);
  out[at + 1] = static_cast<std::uint8_t>(v >> 8);
}

void put_u32(Bytes& out, std::size_t at, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out[at + i] = static_cast<std::uint8_t>(v >> (8 * i));
}

// Row in file storage order -> visual row.
std::uint32_t visual_row(RowOrder order, std::uint32_t height, std::uint32_t stored_row) {
  return order == RowOrder::BottomUp ? height - 1 - stored_row : stored_row;
}

}  // namespace

BmpImage make_image(std::uint32_t width, std::uint32_t height) {
  if (width == 0 || height == 0) throw Error(Errc::InvalidArgument, "image dimensions must be positive");
  BmpImage img;
  img.width = width;
  img.height = height;
  img.pixels.assign(std::size_t{width} * height, Bgr{});
  img.file_size = static_cast<std::uint32_t>(encoded_size(width, height));
  img.extras.image_size_field = static_cast<std::uint32_t>(row_stride(width) * height);
  return img;
}

BmpImage parse(ByteView bytes) {
  if (bytes.size() < 2 || bytes[0] != 'B' || bytes[1] != 'M')
    throw Error(Errc::MalformedHeader, "missing BM magic");
  if (bytes.size() < kHeaderSize) throw Error(Errc::Truncated, "file shorter than BMP header");

  const std::uint32_t declared_size = get_u32(bytes, 2);
  const std::uint32_t offset = get_u32(bytes, 10);
  const std::uint32_t info_size = get_u32(bytes, 14);
  const std::int32_t raw_width = get_i32(bytes, 18);
  const std::int32_t raw_height = get_i32(bytes, 22);
  const std::uint16_t planes = get_u16(bytes, 26);
  const std::uint16_t bpp = get_u16(bytes, 28);
  const std::uint32_t compression = get_u32(bytes, 30);

  if (info_size != kInfoHeaderSize)
    throw Error(Errc::UnsupportedVariant, "info header size " + std::to_string(info_size));
  if (planes != 1) throw Error(Errc::MalformedHeader, "planes must be 1");
  if (bpp != 24) throw Error(Errc::UnsupportedVariant, std::to_string(bpp) + "-bit pixels");
  if (compression != 0) throw Error(Errc::UnsupportedVariant, "compressed pixel data");
  if (offset != kHeaderSize)
    throw Error(Errc::UnsupportedVariant, "pixel data offset " + std::to_string(offset));
  if (raw_width <= 0 || raw_height == 0 || raw_height == std::numeric_limits<std::int32_t>::min())
    throw Error(Errc::MalformedHeader, "bad dimensions");

  BmpImage img;
  img.width = static_cast<std::uint32_t>(raw_width);
  img.height = static_cast<std::uint32_t>(raw_height < 0 ? -raw_height : raw_height);
  img.row_order = raw_height < 0 ? RowOrder::TopDown : RowOrder::BottomUp;
  img.pixel_data_offset = offset;

  const std::size_t stride = row_stride(img.width);
  const std::size_t expected = kHeaderSize + stride * img.height;
  if (img.width > (1u << 16) || img.height > (1u << 16))
    throw Error(Errc::UnsupportedVariant, "image too large");
  if (declared_size != expected)
    throw Error(Errc::MalformedHeader, "declared size " + std::to_string(declared_size) +
                                           " != " + std::to_string(expected));
  if (bytes.size() < declared_size) throw Error(Errc::Truncated, "pixel array truncated");
  if (bytes.size() > declared_size) throw Error(Errc::MalformedHeader, "trailing bytes after pixel array");
  img.file_size = declared_size;

  img.extras.reserved = get_u32(bytes, 6);
  img.extras.image_size_field = get_u32(bytes, 34);
  img.extras.x_pixels_per_meter = get_i32(bytes, 38);
  img.extras.y_pixels_per_meter = get_i32(bytes, 42);
  img.extras.colors_used = get_u32(bytes, 46);
  img.extras.colors_important = get_u32(bytes, 50);

  img.pixels.resize(std::size_t{img.width} * img.height);
  for (std::uint32_t stored = 0; stored < img.height; ++stored) {
    const std::size_t base = kHeaderSize + stored * stride;
    const std::uint32_t row = visual_row(img.row_order, img.height, stored);
    for (std::uint32_t col = 0; col < img.width; ++col) {
      const std::size_t p = base + col * 3;
      img.at(row, col) = Bgr{bytes[p], bytes[p + 1], bytes[p + 2]};
    }
  }
  return img;
}

Bytes encode(const BmpImage& img) {
  const std::size_t stride = row_stride(img.width);
  const std::size_t total = encoded_size(img.width, img.height);
  Bytes out(total, 0);
  out[0] = 'B';
  out[1] = 'M';
  put_u32(out, 2, static_cast<std::uint32_t>(total));
  put_u32(out, 6, img.extras.reserved);
  put_u32(out, 10, static_cast<std::uint32_t>(kHeaderSize));
  put_u32(out, 14, kInfoHeaderSize);
  put_u32(out, 18, img.width);
  put_u32(out, 22, img.height);
  put_u16(out, 26, 1);
  put_u16(out, 28, 24);
  put_u32(out, 30, 0);
  put_u32(out, 34, img.extras.image_size_field);
  put_u32(out, 38, static_cast<std::uint32_t>(img.extras.x_pixels_per_meter));
  put_u32(out, 42, static_cast<std::uint32_t>(img.extras.y_pixels_per_meter));
  put_u32(out, 46, img.extras.colors_used);
  put_u32(out, 50, img.extras.colors_important);

  for (std::uint32_t stored = 0; stored < img.height; ++stored) {
    const std::size_t base = kHeaderSize + stored * stride;
    const std::uint32_t row = img.height - 1 - stored;
    for (std::uint32_t col = 0; col < img.width; ++col) {
      const Bgr& px = img.at(row, col);
      out[base + col * 3] = px.b;
      out[base + col * 3 + 1] = px.g;
      out[base + col * 3 + 2] = px.r;
    }
  }
  return out;
}

GrayImage to_grayscale(const BmpImage& img) {
  GrayImage gray;
  gray.width = img.width;
  gray.height = img.height;
  gray.values.reserve(img.pixels.size());
  for (const Bgr& px : img.pixels) {
    // BT.601 with round-half-up on the scaled integer sum (weights x1000).
    const unsigned scaled = 299u * px.r + 587u * px.g + 114u * px.b;
    const unsigned luma = (scaled + 500u) / 1000u;
    gray.values.push_back(static_cast<std::uint8_t>(luma > 255 ? 255 : luma));
  }
  return gray;
}

std::optional<PixelCoord> byte_offset_to_pixel(const BmpImage& img, std::size_t offset) {
  if (offset >= img.file_size)
    throw Error(Errc::OffsetOutOfRange, "offset " + std::to_string(offset) + " >= file size " +
                                            std::to_string(img.file_size));
  if (offset < img.pixel_data_offset) return std::nullopt;
  const std::size_t stride = row_stride(img.width);
  const std::size_t rel = offset - img.pixel_data_offset;
  const std::size_t stored = rel / stride;
  const std::size_t within = rel % stride;
  if (stored >= img.height || within >= std::size_t{img.width} * 3) return std::nullopt;
  return PixelCoord{visual_row(img.row_order, img.height, static_cast<std::uint32_t>(stored)),
                    static_cast<std::uint32_t>(within / 3), static_cast<Channel>(within % 3)};
}

BmpImage resize_nearest(const BmpImage& img, std::uint32_t width, std::uint32_t height) {
  BmpImage out = make_image(width, height);
  for (std::uint32_t r = 0; r < height; ++r) {
    const std::uint32_t src_r = static_cast<std::uint32_t>(std::uint64_t{r} * img.height / height);
    for (std::uint32_t c = 0; c < width; ++c) {
      const std::uint32_t src_c = static_cast<std::uint32_t>(std::uint64_t{c} * img.width / width);
      out.at(r, c) = img.at(src_r, src_c);
    }
  }
  return out;
}

}  // namespace gencarve::bmp
