#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "splitstat/error.hpp"

namespace splitstat {

// Replicate conventions:
//   "sqrt-N"        replicates = sqrt(N) (T*_b - center)
//   "K-sqrt"        PDB, replicates = sqrt(K) (scaled-mean*_b - N^{1/2} K^{-1/2} T_{N,K})
//   "N-over-sqrtK"  PDB degenerate, replicates = sqrt(K) (scaled-mean*_b - N K^{-1} T_{N,K})
// In every case replicates[b] == scale * (raw_statistics[b] - center) up to
// rounding, with raw_statistics on the scale of the statistic itself.
struct BootstrapResult {
  std::vector<double> replicates;
  std::vector<double> raw_statistics;
  double center = 0.0;
  double scale = 1.0;
  std::string scale_convention;
  std::size_t requested = 0;
  bool budgeted = false;  // iteration count depended on the wall clock
  double elapsed_seconds = 0.0;

  std::size_t size() const noexcept { return replicates.size(); }
  std::size_t completed() const noexcept { return replicates.size(); }
};

// Type-7 quantile of an already sorted sample: linear interpolation between
// order statistics at position (B - 1) q.
inline double sorted_quantile(const std::vector<double>& sorted, double q) {
  detail::require(sorted.size() >= 2, Errc::insufficient_replicates,
                  "quantile needs at least 2 replicates, have " + std::to_string(sorted.size()));
  detail::require(q >= 0.0 && q <= 1.0, Errc::invalid_argument, "quantile level outside [0, 1]");
  const double h = static_cast<double>(sorted.size() - 1) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

inline double quantile(std::vector<double> values, double q) {
  std::sort(values.begin(), values.end());
  return sorted_quantile(values, q);
}

inline double replicate_quantile(const BootstrapResult& r, double q) { return quantile(r.replicates, q); }

}  // namespace splitstat
