#include "gex/rng.hpp"

#include <boost/random/binomial_distribution.hpp>
#include <boost/random/poisson_distribution.hpp>

namespace gex {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index) {
  return splitmix64(splitmix64(master ^ splitmix64(stream)) + index * 0x9E3779B97F4A7C15ULL);
}

std::uint64_t Rng::poisson(double mean) {
  if (!(mean > 0.0)) return 0;
  boost::random::poisson_distribution<std::uint64_t, double> dist(mean);
  return dist(*this);
}

std::uint64_t Rng::binomial(std::uint64_t n, double p) {
  if (n == 0 || p <= 0.0) return 0;
  if (p >= 1.0) return n;
  boost::random::binomial_distribution<std::int64_t, double> dist(static_cast<std::int64_t>(n), p);
  return static_cast<std::uint64_t>(dist(*this));
}

std::size_t Rng::categorical(const double* weights, std::size_t count, double total) {
  double r = uniform() * total;
  for (std::size_t i = 0; i + 1 < count; ++i) {
    if (r < weights[i]) return i;
    r -= weights[i];
  }
  return count - 1;
}

}  // namespace gex
