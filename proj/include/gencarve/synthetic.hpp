#pragma once

#include <cstdint>
#include <filesystem>

#include "gencarve/bmp.hpp"
#include "gencarve/fragmenter.hpp"
#include "gencarve/io.hpp"

// Deterministic stand-ins for an image corpus and multimedia decoy files, for
// demos and tests when no real corpus is at hand.
namespace gencarve::synth {

/// Smooth photo-like scene: graded background, soft blobs, low-frequency
/// texture and sensor noise.
bmp::BmpImage natural_image(std::uint64_t seed, std::uint32_t width = 32, std::uint32_t height = 32);

/// Plausible bytes for a file of the given format: a real header followed by
/// a body with the format's rough statistics (PCM audio for WAV,
/// high-entropy payload for the compressed formats).
Bytes decoy_file(SourceFormat format, std::uint64_t seed, std::size_t size);

/// Writes img_00000.bmp ... into dir.
void write_corpus(const std::filesystem::path& dir, std::size_t count, std::uint64_t seed,
                  std::uint32_t width = 32, std::uint32_t height = 32);

/// Writes per_format files for each of wav/jpeg/png/mp4 into dir.
void write_decoys(const std::filesystem::path& dir, std::size_t per_format, std::uint64_t seed,
                  std::size_t size = 16384);

}  // namespace gencarve::synth
