#include "mecsim/rng.hpp"

#include <cmath>

#include "mecsim/errors.hpp"

namespace mecsim {

std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, Stream stream, std::uint64_t index) {
  return mix_seed(mix_seed(mix_seed(master) ^ static_cast<std::uint64_t>(stream)) + index);
}

Rng make_rng(std::uint64_t master, Stream stream, std::uint64_t index) {
  return Rng(derive_seed(master, stream, index));
}

int poisson_quantile(double lambda, double q) {
  if (!(lambda >= 0.0) || !(q > 0.0 && q < 1.0)) {
    throw ContractError("poisson_quantile: need lambda >= 0 and 0 < q < 1");
  }
  if (lambda == 0.0) return 0;
  double term = std::exp(-lambda);
  double cdf = term;
  int n = 0;
  while (cdf < q && n < 100000) {
    ++n;
    term *= lambda / n;
    cdf += term;
  }
  return n;
}

}  // namespace mecsim
