#pragma once

#include <cmath>
#include <cstdint>

namespace mstar {

// Counter-based pseudo-random generator with independent streams.
// Output i of a stream depends only on (seed, stream_id, i), so Monte-Carlo
// samples keyed by stream index give identical results for any worker count.
// Instances are cheap to construct and single-owner: never share one across
// threads, hand each task its own stream.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed, std::uint64_t stream_id = 0)
      : state_(init_state(seed, stream_id)), seed_(seed), stream_(stream_id) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_; }

  std::uint64_t next_u64() {
    // splitmix64: a fixed-increment counter passed through an avalanche mix.
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // Uniform on [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller; pairs are cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
    double u2 = uniform();
    double radius = std::sqrt(-2.0 * std::log(u1));
    double angle = 6.283185307179586476925286766559 * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  static std::uint64_t init_state(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    z ^= (z >> 31);
    // decorrelate streams with a second odd multiplier
    return z ^ (0xD2B74407B1CE6E93ull * (stream + 1));
  }

  std::uint64_t state_;
  std::uint64_t seed_;
  std::uint64_t stream_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Stream-id blocks reserved by the library so unrelated draws never collide.
// Monte-Carlo sample i of an estimate uses stream (base + i).
namespace streams {
inline constexpr std::uint64_t kMstarSampleBase = 0;
inline constexpr std::uint64_t kPerturbationMatrix = 0x4000000000000000ull;
inline constexpr std::uint64_t kDictionaryInit = 0x4000000000000001ull;
inline constexpr std::uint64_t kPatchSampler = 0x4000000000000002ull;
inline constexpr std::uint64_t kMaskSampler = 0x4000000000000003ull;
inline constexpr std::uint64_t kStiefelSgdBase = 0x5000000000000000ull;
inline constexpr std::uint64_t kTraceMstarBase = 0x6000000000000000ull;
}  // namespace streams

}  // namespace mstar
