#include "dlmp/random.hpp"

#include <bit>
#include <vector>

namespace dlmp {

Rng substream(std::uint64_t seed, StreamTag tag, std::initializer_list<std::uint64_t> keys) {
  std::vector<std::uint32_t> words;
  auto push64 = [&words](std::uint64_t v) {
    words.push_back(static_cast<std::uint32_t>(v & 0xffffffffU));
    words.push_back(static_cast<std::uint32_t>(v >> 32));
  };
  push64(seed);
  push64(static_cast<std::uint64_t>(tag));
  push64(keys.size());
  for (auto k : keys) push64(k);
  std::seed_seq seq(words.begin(), words.end());
  return Rng(seq);
}

void Fingerprint::add(double value) noexcept {
  auto bits = std::bit_cast<std::uint64_t>(value);
  for (int i = 0; i < 8; ++i) {
    hash_ ^= (bits >> (8 * i)) & 0xffU;
    hash_ *= 0x100000001b3ULL;
  }
}

}  // namespace dlmp
