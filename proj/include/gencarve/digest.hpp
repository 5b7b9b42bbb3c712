#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "gencarve/io.hpp"

namespace gencarve {

using Sha256 = std::array<std::uint8_t, 32>;

Sha256 sha256(ByteView data);
std::string to_hex(ByteView data);
std::string sha256_hex(ByteView data);

// Incremental hasher for multi-part inputs.
class Sha256Builder {
 public:
  Sha256Builder();
  ~Sha256Builder();
  Sha256Builder(const Sha256Builder&) = delete;
  Sha256Builder& operator=(const Sha256Builder&) = delete;

  void update(ByteView data);
  void update_u64(std::uint64_t v);
  Sha256 finish();

 private:
  void* ctx_;
};

}  // namespace gencarve
