#pragma once

#include <cstdint>

namespace gsvr::num {

// Fixed tags for independently seeded sub-streams.
enum class Stream : std::uint64_t { Data = 1, Init = 2, McNoise = 3, Eval = 4 };

std::uint64_t splitmix64(std::uint64_t& state);

// Mixes a base seed with a stream tag and an optional sub-index (epoch,
// job number) into a new seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag, std::uint64_t index = 0);

// xoshiro256** with portable uniform/normal sampling. The output sequence is
// a pure function of the seed on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);
  static Rng stream(std::uint64_t seed, Stream tag, std::uint64_t index = 0) {
    return Rng(mix_seed(seed, static_cast<std::uint64_t>(tag), index));
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t next_u64();
  double uniform();                       // [0, 1)
  double uniform(double lo, double hi);   // [lo, hi)
  std::uint64_t below(std::uint64_t n);   // [0, n)
  double normal();                        // N(0, 1), polar method
  double logistic();                      // standard logistic

 private:
  std::uint64_t seed_;
  std::uint64_t s_[4];
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace gsvr::num
