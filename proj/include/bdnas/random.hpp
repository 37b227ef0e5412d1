#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <string_view>

namespace bdnas {

/// Counter-based random stream: draw k is a pure function of
/// (seed, label, k), so two streams with equal seed and label replay the same
/// sequence on any platform. Streams split by label are independent.
class RandomStream {
 public:
  using result_type = std::uint64_t;

  RandomStream(std::uint64_t seed, std::string label);

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal (Box-Muller, two uniforms per draw).
  double normal();
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  RandomStream split(std::string_view sublabel) const;

  std::uint64_t seed() const { return seed_; }
  const std::string& label() const { return label_; }
  std::uint64_t counter() const { return counter_; }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()() { return next_u64(); }

 private:
  std::uint64_t seed_;
  std::string label_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Fisher-Yates shuffle driven by a RandomStream (portable across standard
/// libraries, unlike std::shuffle).
template <typename Container>
void shuffle_in_place(Container& c, RandomStream& rng) {
  for (std::size_t i = c.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    using std::swap;
    swap(c[i - 1], c[j]);
  }
}

std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace bdnas
