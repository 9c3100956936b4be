#pragma once

#include <cmath>
#include <cstdint>

namespace swa {

/// log Γ(x + n) − log Γ(x) through std::lgamma.
inline double log_rising_lgamma(double x, std::int64_t n) {
  return std::lgamma(x + static_cast<double>(n)) - std::lgamma(x);
}

/// log Γ(x + n) − log Γ(x) as Σ_{i<n} log(x + i). Exact up to round-off of
/// the sum, which beats the lgamma difference when x is large.
inline double log_rising_product(double x, std::int64_t n) {
  double s = 0.0;
  for (std::int64_t i = 0; i < n; ++i) s += std::log(x + static_cast<double>(i));
  return s;
}

inline constexpr std::int64_t kRisingProductLimit = 16;

/// log of the rising factorial x^(n) = Γ(x + n) / Γ(x), n ≥ 0.
inline double log_rising(double x, std::int64_t n) {
  if (n == 0) return 0.0;
  if (n == 1) return std::log(x);
  return n <= kRisingProductLimit ? log_rising_product(x, n) : log_rising_lgamma(x, n);
}

} // namespace swa
