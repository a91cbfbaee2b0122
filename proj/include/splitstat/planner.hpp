#pragma once

// Choosing the number of blocks K under a computing budget.

#include <cmath>
#include <cstddef>
#include <string>

#include "splitstat/error.hpp"

namespace splitstat {

// Steps to compute the full-sample statistic ~ c N^a; memory ~ N^b.
struct CostModel {
  double a = 2.0;
  double c = 1.0;
  double b = 2.0;

  CostModel() = default;
  CostModel(double a_, double c_, double b_ = 2.0) : a(a_), c(c_), b(b_) {
    detail::require(a > 1.0, Errc::invalid_argument, "cost exponent a must exceed 1");
    detail::require(b >= 1.0, Errc::invalid_argument, "memory exponent b must be >= 1");
    detail::require(c > 0.0, Errc::invalid_argument, "cost constant c must be positive");
  }
};

// K blocks of size N/K: c K (N/K)^a = c K^{1-a} N^a.
inline double predicted_cost(const CostModel& model, double n, double k) {
  detail::require(k >= 1.0 && k <= n, Errc::invalid_argument, "K must lie in [1, N]");
  return model.c * k * std::pow(n / k, model.a);
}

inline double predicted_memory(const CostModel& model, double n, double k) {
  detail::require(k >= 1.0 && k <= n, Errc::invalid_argument, "K must lie in [1, N]");
  return std::pow(n / k, model.b);
}

// max(K0, K0') with K0' the smallest K whose predicted cost fits the budget.
// Cost is strictly decreasing in K, so K0' is found by bisection.
inline std::size_t select_k(std::size_t k0, const CostModel& model, std::size_t n, double budget) {
  detail::require(n >= 1, Errc::invalid_argument, "N must be positive");
  detail::require(k0 >= 1 && k0 <= n, Errc::invalid_argument, "K0 must lie in [1, N]");
  const double nn = static_cast<double>(n);
  const auto cost = [&](std::size_t k) { return predicted_cost(model, nn, static_cast<double>(k)); };
  if (cost(n) > budget) {
    detail::fail(Errc::infeasible, "budget " + std::to_string(budget) + " is below the cost at K = N (" +
                                       std::to_string(cost(n)) + ")");
  }
  std::size_t lo = 1;
  std::size_t hi = n;
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (cost(mid) <= budget) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  return std::max(k0, lo);
}

// Advisory ceiling floor(N^{1 - 1/(2 tau1) - eps}) on K for the distributed
// statistic to keep the full-sample leading MSE term. A rate, not a bound.
inline std::size_t max_k_same_leading_mse(double n, double tau1, double eps = 0.1) {
  detail::require(tau1 >= 1.0, Errc::invalid_argument, "tau1 must be >= 1");
  const double exponent = 1.0 - 1.0 / (2.0 * tau1);
  detail::require(eps > 0.0 && eps < exponent, Errc::invalid_argument, "eps must lie in (0, 1 - 1/(2 tau1))");
  return static_cast<std::size_t>(std::floor(std::pow(n, exponent - eps)));
}

}  // namespace splitstat
