#pragma once

#include <cstdint>

namespace nivtest {

namespace detail {

inline void philox_mulhilo(std::uint64_t a, std::uint64_t b,
                           std::uint64_t& hi, std::uint64_t& lo) {
  unsigned __int128 p = static_cast<unsigned __int128>(a) * b;
  hi = static_cast<std::uint64_t>(p >> 64);
  lo = static_cast<std::uint64_t>(p);
}

}  // namespace detail

/// Philox-2x64-10 counter-based generator.
///
/// The output stream depends only on (seed, stream, counter), never on how
/// many generators exist or which thread owns them, so replication r of a
/// Monte Carlo run can draw from stream r independently of scheduling.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
      : key_(seed), ctr_hi_(stream), ctr_lo_(0) {}

  std::uint64_t next_u64() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    std::uint64_t x0 = ctr_lo_++;
    std::uint64_t x1 = ctr_hi_;
    std::uint64_t k = key_;
    for (int round = 0; round < 10; ++round) {
      std::uint64_t hi, lo;
      detail::philox_mulhilo(x0, 0xD2B74407B1CE6E93ULL, hi, lo);
      x0 = hi ^ k ^ x1;
      x1 = lo;
      k += 0x9E3779B97F4A7C15ULL;
    }
    spare_ = x1;
    have_spare_ = true;
    return x0;
  }

  /// Uniform draw in the open interval (0, 1).
  double next_uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal draw by inverse-CDF transform of a single uniform.
  double next_normal();

 private:
  std::uint64_t key_;
  std::uint64_t ctr_hi_;
  std::uint64_t ctr_lo_;
  std::uint64_t spare_ = 0;
  bool have_spare_ = false;
};

/// Stateless 64-bit mix (SplitMix64 finalizer), used to derive per-stream
/// seeds so that mix_seed(base, r) and mix_seed(base, r') are unrelated.
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t x = base + (stream + 1) * 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace nivtest
