#pragma once

// Counter-based random streams. Every draw site derives its own stream from
// (seed, episode, epoch, arm), so sampling order never depends on scheduling.

#include <cstdint>

namespace armab {

namespace detail {

inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

} // namespace detail

struct RandomStream {
  std::uint64_t state;

  std::uint64_t next_u64() {
    state += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // uniform in [0, 1)
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // index in [0, k)
  int next_index(int k) {
    return static_cast<int>(next_u64() % static_cast<std::uint64_t>(k));
  }

  // inverse-CDF draw from a probability row of length k
  int next_categorical(const double* p, int k) {
    double u = next_double();
    double acc = 0.0;
    for (int i = 0; i < k; ++i) {
      acc += p[i];
      if (u < acc) return i;
    }
    return k - 1;
  }
};

inline RandomStream stream_for(std::uint64_t seed, std::uint64_t episode,
                               std::uint64_t epoch, std::uint64_t arm) {
  std::uint64_t s = detail::mix64(seed);
  s = detail::mix64(s ^ (episode * 0x9e3779b97f4a7c15ull + 1));
  s = detail::mix64(s ^ (epoch * 0xbf58476d1ce4e5b9ull + 2));
  s = detail::mix64(s ^ (arm * 0x94d049bb133111ebull + 3));
  return RandomStream{s};
}

// salts keep environment, policy, and builder streams disjoint
inline constexpr std::uint64_t kEnvSalt = 0x454e56ull;
inline constexpr std::uint64_t kPolicySalt = 0x504f4cull;
inline constexpr std::uint64_t kBuilderSalt = 0x424c44ull;

} // namespace armab
