#include "covkern/random.hpp"

#include <array>

namespace covkern {

std::uint64_t mix64(std::uint64_t x) noexcept
{
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Rng substream(std::uint64_t seed, std::initializer_list<std::uint64_t> keys)
{
  std::uint64_t h = mix64(seed);
  for (std::uint64_t k : keys)
    h = mix64(h ^ mix64(k + 0x632be59bd9b4e019ULL));
  std::array<std::uint32_t, 8> words{};
  std::uint64_t s = h;
  for (std::size_t i = 0; i < words.size(); i += 2) {
    s = mix64(s);
    words[i] = static_cast<std::uint32_t>(s);
    words[i + 1] = static_cast<std::uint32_t>(s >> 32);
  }
  std::seed_seq seq(words.begin(), words.end());
  return Rng(seq);
}

} // namespace covkern
