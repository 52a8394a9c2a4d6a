#include "scdp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace scdp {

double wasserstein1(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) {
    throw std::invalid_argument("wasserstein1: empty sample set");
  }
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  // Integrate |F_a^{-1}(u) - F_b^{-1}(u)| over u in [0,1]. The quantile
  // functions are step functions with breakpoints at i/|a| and j/|b|.
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double u = 0.0;
  double acc = 0.0;
  while (i < a.size() && j < b.size()) {
    const double ua = static_cast<double>(i + 1) / na;
    const double ub = static_cast<double>(j + 1) / nb;
    const double next = std::min(ua, ub);
    acc += (next - u) * std::abs(a[i] - b[j]);
    u = next;
    if (ua <= next) ++i;
    if (ub <= next) ++j;
  }
  return acc;
}

}  // namespace scdp
