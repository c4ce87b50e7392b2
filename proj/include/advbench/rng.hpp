#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace advbench {

std::uint64_t splitmix64(std::uint64_t x);

/// FNV-1a, used to fold string ids (model ids, phase tags) into seeds.
std::uint64_t hash_string(std::string_view s);

/// Deterministic random stream keyed by (seed, sample, restart, purpose).
/// Streams never share state, so per-sample work is order independent.
class Rng {
 public:
  Rng(std::uint64_t seed, std::uint64_t sample, std::uint64_t restart, std::uint64_t purpose);
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  /// Uniform in [0,1) from the top 53 bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  double normal();

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

/// Stream purposes. Distinct tags keep e.g. the ODI direction independent
/// of the uniform start even for the same (sample, restart).
namespace stream {
inline constexpr std::uint64_t uniform_start = 1;
inline constexpr std::uint64_t odi_direction = 2;
inline constexpr std::uint64_t rrt_target = 3;
inline constexpr std::uint64_t loss_choice = 4;
inline constexpr std::uint64_t training = 5;
inline constexpr std::uint64_t synthetic = 6;
}  // namespace stream

}  // namespace advbench
