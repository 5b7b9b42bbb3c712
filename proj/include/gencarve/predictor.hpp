#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "gencarve/io.hpp"

namespace gencarve {

enum class DecodeMode { Greedy, Temperature, TopK };

std::string_view decode_mode_name(DecodeMode m);
DecodeMode parse_decode_mode(std::string_view name);

struct SamplingPolicy {
  DecodeMode mode = DecodeMode::Greedy;
  double temperature = 1.0;
  std::uint32_t top_k = 8;
  std::uint64_t seed = 0;  // ignored by greedy decoding
};

/// Successor counts observed after one context.
struct SuccessorTable {
  std::uint64_t total = 0;
  std::vector<std::pair<std::uint8_t, std::uint32_t>> counts;  // sorted by byte value

  std::uint32_t count_of(std::uint8_t byte) const;
};

/// Order-k byte context model with additive smoothing and longest-match
/// backoff. Contexts of every length 0..k are tabulated; prediction uses the
/// longest context that was seen during training.
class ByteModel {
 public:
  static constexpr std::uint32_t kMaxOrder = 7;
  static constexpr std::uint8_t kFormatVersion = 1;

  ByteModel() = default;
  ByteModel(std::uint32_t order, double smoothing);

  std::uint32_t order() const { return order_; }
  double smoothing() const { return smoothing_; }
  const std::string& training_digest() const { return training_digest_; }
  std::size_t context_count() const { return tables_.size(); }

  /// Successor table for an exact context (length <= order); nullptr if unseen.
  const SuccessorTable* find(ByteView context) const;

  /// Table for the longest suffix of history seen in training.
  const SuccessorTable& longest_match(ByteView history) const;

  /// Smoothed P(next | longest seen suffix of history).
  std::array<double, 256> distribution(ByteView history) const;

  /// Short identifier: "bytemodel-k<order>-a<smoothing>@<digest prefix>".
  std::string id() const;

  Bytes save() const;
  static ByteModel load(ByteView data);

  friend ByteModel train(const std::vector<Bytes>& corpus, std::uint32_t order, double smoothing);

 private:
  static std::uint64_t key(ByteView context);

  std::uint32_t order_ = 3;
  double smoothing_ = 0.1;
  std::string training_digest_;
  std::unordered_map<std::uint64_t, SuccessorTable> tables_;
};

ByteModel train(const std::vector<Bytes>& corpus, std::uint32_t order = 3, double smoothing = 0.1);

Bytes predict(const ByteModel& model, ByteView prefix, std::size_t length, const SamplingPolicy& policy);

struct PredictionRecord {
  std::string source_id;
  Bytes predicted_fragment;
  std::string predictor_id;
  SamplingPolicy policy;
};

}  // namespace gencarve
