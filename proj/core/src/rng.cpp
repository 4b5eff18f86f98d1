#include "sslv/rng.hpp"

#include <cmath>

namespace sslv {

double Rng::next_gaussian(double mean, double sigma) {
  // u1 in (0, 1] keeps the log finite.
  double u1 = 1.0 - next_unit();
  double u2 = next_unit();
  double r = std::sqrt(-2.0 * std::log(u1));
  return mean + sigma * r * std::cos(2.0 * M_PI * u2);
}

uint64_t Rng::next_below(uint64_t n) {
  // Rejection sampling to avoid modulo bias.
  uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  uint64_t v = next_u64();
  while (v >= limit) v = next_u64();
  return v % n;
}

std::vector<Rng> Rng::split(int k) {
  std::vector<Rng> out;
  out.reserve(static_cast<size_t>(k));
  for (int i = 0; i < k; ++i) out.push_back(Rng(next_u64()));
  return out;
}

}  // namespace sslv
