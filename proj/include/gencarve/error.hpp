#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gencarve {

enum class Errc {
  // bmp
  MalformedHeader,
  UnsupportedVariant,
  Truncated,
  OffsetOutOfRange,
  // fragmenter
  DegenerateSlice,
  InsufficientCorpus,
  SourceTooSmall,
  InsufficientSources,
  DuplicateTrueFragment,
  // predictor
  EmptyCorpus,
  InvalidArgument,
  CorruptModel,
  VersionMismatch,
  ProtocolError,
  ShortResponse,
  Timeout,
  PredictorCrashed,
  // metrics
  EmptyInput,
  ZeroVector,
  DimensionMismatch,
  WindowTooLarge,
  EmptyMask,
  ReconstructionUnparseable,
  // stats
  TooFewSamples,
  NonFiniteValue,
  // matcher
  LengthMismatch,
  // plumbing
  IoError,
  ConfigError,
};

std::string_view errc_name(Errc code) noexcept;

// ShortResponse is a framing violation too; callers that only care about
// "the predictor spoke the protocol wrong" should use this.
constexpr bool is_protocol_error(Errc code) noexcept {
  return code == Errc::ProtocolError || code == Errc::ShortResponse;
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace gencarve
