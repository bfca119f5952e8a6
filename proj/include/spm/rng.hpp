#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace spm {

/// Deterministic random source. Wraps mt19937_64 but maps bits to doubles
/// itself so that streams are reproducible across standard libraries; the
/// std:: distribution classes are implementation-defined and would break
/// byte-identical replays when rebuilt elsewhere.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1), 53-bit resolution.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Uniform integer on [lo, hi] inclusive.
  int uniform_int(int lo, int hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(engine_() % span);
  }

  /// Standard normal via Box-Muller; generates pairs, caches the second.
  double normal();

 private:
  std::mt19937_64 engine_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

/// splitmix64 finalizer; the standard 64-bit mixing function.
std::uint64_t mix64(std::uint64_t x);

/// Derives an independent child seed from a root seed and a path of
/// indices (replicate number, sequence index, ...). Used everywhere a
/// run spawns subordinate random streams, so that parallel work items
/// stay reproducible: child = mix(root, i0, i1, ...).
std::uint64_t derive_seed(std::uint64_t root,
                          std::initializer_list<std::uint64_t> path);

}  // namespace spm
