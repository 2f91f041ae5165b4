#include "collusim/rng.hpp"

#include <algorithm>
#include <cmath>

namespace collusim {

std::uint64_t Rng::next_binomial(std::uint64_t n, double p) {
  if (n == 0 || p <= 0.0) return 0;
  if (p >= 1.0) return n;
  const double u = next_double();
  // pmf(0) = (1-p)^n, pmf(k+1) = pmf(k) * (n-k)/(k+1) * p/(1-p)
  const double ratio = p / (1.0 - p);
  double pmf = std::pow(1.0 - p, static_cast<double>(n));
  double cdf = pmf;
  std::uint64_t k = 0;
  while (u >= cdf && k < n) {
    pmf *= static_cast<double>(n - k) / static_cast<double>(k + 1) * ratio;
    cdf += pmf;
    ++k;
    // Guard against lost mass from rounding in extreme tails.
    if (pmf < 1e-300) break;
  }
  return k;
}

std::vector<std::uint64_t> Rng::sample_without_replacement(std::uint64_t n, std::uint64_t m) {
  std::vector<std::uint64_t> out;
  out.reserve(m);
  // m is tiny relative to n in practice; rejection on duplicates is cheap.
  while (out.size() < m) {
    std::uint64_t v;
    if (n <= 0xffffffffULL) {
      v = next_below(static_cast<std::uint32_t>(n));
    } else {
      do {
        v = next_u64() & 0x7fffffffffffffffULL;
      } while (v >= n);
    }
    if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace collusim
