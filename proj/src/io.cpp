#include "gencarve/io.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <iterator>

#include "gencarve/error.hpp"

namespace gencarve {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::MalformedHeader: return "MalformedHeader";
    case Errc::UnsupportedVariant: return "UnsupportedVariant";
    case Errc::Truncated: return "Truncated";
    case Errc::OffsetOutOfRange: return "OffsetOutOfRange";
    case Errc::DegenerateSlice: return "DegenerateSlice";
    case Errc::InsufficientCorpus: return "InsufficientCorpus";
    case Errc::SourceTooSmall: return "SourceTooSmall";
    case Errc::InsufficientSources: return "InsufficientSources";
    case Errc::DuplicateTrueFragment: return "DuplicateTrueFragment";
    case Errc::EmptyCorpus: return "EmptyCorpus";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::CorruptModel: return "CorruptModel";
    case Errc::VersionMismatch: return "VersionMismatch";
    case Errc::ProtocolError: return "ProtocolError";
    case Errc::ShortResponse: return "ShortResponse";
    case Errc::Timeout: return "Timeout";
    case Errc::PredictorCrashed: return "PredictorCrashed";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::ZeroVector: return "ZeroVector";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::WindowTooLarge: return "WindowTooLarge";
    case Errc::EmptyMask: return "EmptyMask";
    case Errc::ReconstructionUnparseable: return "ReconstructionUnparseable";
    case Errc::TooFewSamples: return "TooFewSamples";
    case Errc::NonFiniteValue: return "NonFiniteValue";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::IoError: return "IoError";
    case Errc::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
  Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(Errc::IoError, "read failed: " + path.string());
  return data;
}

void write_file(const std::filesystem::path& path, ByteView data) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw Error(Errc::IoError, "cannot create " + path.parent_path().string());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoError, "cannot create " + path.string());
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
  if (!out) throw Error(Errc::IoError, "write failed: " + path.string());
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  write_file(path, as_bytes(text));
}

std::string read_text(const std::filesystem::path& path) {
  auto data = read_file(path);
  return {data.begin(), data.end()};
}

std::string format_double(double v) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc{}) return "nan";
  return {buf.data(), end};
}

}  // namespace gencarve
