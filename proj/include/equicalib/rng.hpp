#pragma once

// Seed derivation. Every random stream in the toolkit is a pure function of
// the master seed and the key of the thing being simulated, so results do
// not depend on execution order, thread count, or which part of a grid is run.

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace equicalib::rng {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline constexpr std::uint64_t mix(std::initializer_list<std::uint64_t> words) {
  std::uint64_t h = 0x243f6a8885a308d3ULL;
  for (std::uint64_t w : words) h = splitmix64(h ^ splitmix64(w));
  return h;
}

/// Real parameters enter seeds at 1e-9 resolution so 0.1 and 0.1000000000001 coincide.
inline std::uint64_t quantize(double v) { return static_cast<std::uint64_t>(std::llround(v * 1e9)); }

inline constexpr std::uint64_t kCalibrationTag = 0x63616c6962726174ULL;  // "calibrat"
inline constexpr std::uint64_t kDensityTag = 0x64656e7369747921ULL;      // "density!"

/// Seed of a simulation cell. The prior scale is deliberately not part of
/// the key: all r values of a cell see the same datasets.
inline std::uint64_t scenario_seed(std::uint64_t master, double delta, int n, double m) {
  return mix({master, quantize(delta), static_cast<std::uint64_t>(n), quantize(m)});
}

/// Seed of the boundary datasets used to calibrate thresholds for (n, m).
inline std::uint64_t calibration_seed(std::uint64_t master, int n, double m) {
  return mix({master, kCalibrationTag, static_cast<std::uint64_t>(n), quantize(m)});
}

inline std::uint64_t density_seed(std::uint64_t master, int n, double delta) {
  return mix({master, kDensityTag, static_cast<std::uint64_t>(n), quantize(delta)});
}

/// Independent engine for replication `index` of the stream `seed`.
inline std::mt19937_64 replication_engine(std::uint64_t seed, std::uint64_t index) {
  return std::mt19937_64(mix({seed, index}));
}

}  // namespace equicalib::rng
