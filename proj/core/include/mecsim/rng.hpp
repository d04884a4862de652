#pragma once

#include <cstdint>
#include <random>

namespace mecsim {

using Rng = std::mt19937_64;

/// Independent random streams split from one master seed.
enum class Stream : std::uint64_t {
  kDistance = 1,
  kChannel = 2,
  kArrivals = 3,
  kPolicy = 4,
  kBaseline = 5,
  kTraining = 6,
  kInit = 7,
  kProfiles = 8,
};

/// splitmix64 finalizer.
std::uint64_t mix_seed(std::uint64_t x);

/// Seed for `stream` in episode/index `index` under `master`.
std::uint64_t derive_seed(std::uint64_t master, Stream stream, std::uint64_t index = 0);

Rng make_rng(std::uint64_t master, Stream stream, std::uint64_t index = 0);

/// Smallest n with P(X <= n) >= q for X ~ Poisson(lambda).
int poisson_quantile(double lambda, double q);

}  // namespace mecsim
