#ifndef UDSSM_COMMON_HPP
#define UDSSM_COMMON_HPP

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace udssm {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shape-incompatible tensor operands.
struct DimensionError : Error {
  using Error::Error;
};

// Index or range outside a tensor/sequence.
struct BoundsError : Error {
  using Error::Error;
};

// Malformed input file (reports the offending line).
struct ParseError : Error {
  using Error::Error;
};

// Invalid configuration value or option combination.
struct ConfigError : Error {
  using Error::Error;
};

// A record violates its invariants (reports the source id).
struct DataError : Error {
  using Error::Error;
};

// Checkpoint magic/version/kind problems.
struct FormatError : Error {
  using Error::Error;
};

// API misuse, e.g. backward on a non-scalar root.
struct UsageError : Error {
  using Error::Error;
};

// A question the model cannot score (reports the question id).
struct UnsupportedQuestion : Error {
  using Error::Error;
};

// Seeded generator with stable output across platforms. All randomized
// code paths draw from this instead of std distributions, whose results
// are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform01() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform01();
  }

  // Uniform integer in [0, n). Rejection sampling keeps it unbiased.
  std::size_t below(std::size_t n) {
    if (n == 0) throw UsageError("Rng::below: n must be positive");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = gen_();
    } while (x >= limit);
    return static_cast<std::size_t>(x % n);
  }

  // Fisher-Yates; deterministic for a given seed.
  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace udssm

#endif  // UDSSM_COMMON_HPP
