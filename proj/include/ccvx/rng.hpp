#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

namespace ccvx {

/// 128-bit master seed, written as up to 32 hex digits (hi word first).
struct Seed128 {
  std::uint64_t hi = 0;
  std::uint64_t lo = 0;

  static Seed128 from_hex(std::string_view hex);
  std::string to_hex() const;
  friend bool operator==(const Seed128&, const Seed128&) = default;
};

/// One Philox4x64-10 block: four 64-bit outputs for a 256-bit counter under a 128-bit key.
std::array<std::uint64_t, 4> philox4x64(std::array<std::uint64_t, 4> counter,
                                        std::array<std::uint64_t, 2> key);

/// SplitMix64 finalizer, used to turn structured ids into well-mixed stream indices.
std::uint64_t mix64(std::uint64_t x);

/// Counter-based random stream. The output at position k depends only on
/// (seed, stream, k), so streams can be handed to workers in any order.
class RngStream {
 public:
  RngStream() = default;
  RngStream(Seed128 seed, std::uint64_t stream, std::uint64_t counter = 0)
      : seed_(seed), stream_(stream), block_(counter) {}

  std::uint64_t next_u64();
  /// Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform();
  /// Standard normal via Box-Muller.
  double normal();

  /// Independent child stream; children of distinct ids never share blocks.
  RngStream derive(std::uint64_t id) const;

  const Seed128& seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }
  std::uint64_t counter() const { return block_; }

 private:
  Seed128 seed_{};
  std::uint64_t stream_ = 0;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 4> buf_{};
  int used_ = 4;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace ccvx
