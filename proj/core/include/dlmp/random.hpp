#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace dlmp {

using Rng = std::mt19937_64;

// Stream purposes, so that e.g. evaluation rollout k and training iteration k
// never share a stream.
enum class StreamTag : std::uint64_t {
  Train = 0x7472,
  Eval = 0x6576,
  Demo = 0x646d,
  Verify = 0x7666,
};

// Deterministic substream for (seed, tag, keys...). Independent of call order.
Rng substream(std::uint64_t seed, StreamTag tag, std::initializer_list<std::uint64_t> keys = {});

// FNV-1a over the raw bytes of a double sequence; used to fingerprint noise
// streams for common-random-number checks.
class Fingerprint {
 public:
  void add(double value) noexcept;
  std::uint64_t value() const noexcept { return hash_; }

 private:
  std::uint64_t hash_ = 0xcbf29ce484222325ULL;
};

}  // namespace dlmp
