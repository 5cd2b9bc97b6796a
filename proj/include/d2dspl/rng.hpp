#ifndef D2DSPL_RNG_HPP
#define D2DSPL_RNG_HPP

#include <cstdint>
#include <random>
#include <string_view>

namespace d2dspl {

// Mixes a base seed with a tag and an index into an independent seed.
// Used to carve disjoint streams (training, evaluation, init) out of one trial seed.
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag, std::uint64_t index = 0);

// Explicit seeded randomness. Environments and learners draw only from a
// SeedStream handed to them; nothing reads ambient entropy.
//
// The conversion to doubles is done here instead of through
// std::uniform_real_distribution so that streams are identical across
// standard library implementations.
class SeedStream {
 public:
  explicit SeedStream(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n);

  bool coin() { return (engine_() >> 63) != 0; }

  std::uint64_t next_u64() { return engine_(); }

  // A child stream whose seed is drawn from this one.
  SeedStream split() { return SeedStream(engine_()); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace d2dspl

#endif  // D2DSPL_RNG_HPP
