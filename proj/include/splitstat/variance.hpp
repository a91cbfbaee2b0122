#pragma once

#include <algorithm>
#include <span>
#include <string>
#include <vector>

#include "splitstat/bootstrap_result.hpp"
#include "splitstat/core.hpp"
#include "splitstat/symstat.hpp"

namespace splitstat {

struct VarianceEstimate {
  double value = 0.0;
  std::string method;
  std::vector<double> components;
};

struct JackknifeResult {
  double s2 = 0.0;       // S^2, the O(1) scaled quantity
  double var_hat = 0.0;  // S^2 / N, estimate of Var(U_N)
};

// Jackknife for Gini's mean difference:
//   S^2 = 4 (N-1) (N-2)^{-2} sum_i (q_i - U_N)^2,  q_i = (N-1)^{-1} sum_{j != i} |x_i - x_j|.
// The q_i come from prefix sums over the sorted sample, O(N log N).
inline JackknifeResult jackknife_gini_variance(std::span<const double> sample) {
  const std::size_t n = sample.size();
  detail::require(n >= 3, Errc::insufficient_sample,
                  "jackknife needs N >= 3, got " + std::to_string(n));
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return sample[a] < sample[b]; });

  // q[r] belongs to the r-th order statistic; U_N and S^2 do not depend on order.
  std::vector<double> sorted(n);
  for (std::size_t r = 0; r < n; ++r) sorted[r] = sample[order[r]];
  CompensatedSum total_acc;
  for (double v : sorted) total_acc.add(v);
  const double total = total_acc.value();
  // Row sums a_r = (N-1) q_r. With A = sum_r a_r,
  //   sum_r (q_r - U_N)^2 = sum_r (N a_r - A)^2 / (N^2 (N-1)^2),
  // which keeps integer data exact up to the final division.
  std::vector<double> a(n);
  CompensatedSum prefix_acc;
  for (std::size_t r = 0; r < n; ++r) {
    const double prefix = prefix_acc.value();
    const double v = sorted[r];
    const double below = static_cast<double>(r) * v - prefix;
    const double above = (total - prefix - v) - static_cast<double>(n - 1 - r) * v;
    a[r] = below + above;
    prefix_acc.add(v);
  }
  CompensatedSum a_acc;
  for (double v : a) a_acc.add(v);
  const double big_a = a_acc.value();
  const double nn = static_cast<double>(n);
  CompensatedSum ss;
  for (double v : a) ss.add((nn * v - big_a) * (nn * v - big_a));
  const double nm1 = nn - 1.0;
  const double nm2 = nn - 2.0;
  const double denom = nm2 * nm2 * nn * nn * nm1;
  return {4.0 * ss.value() / denom, 4.0 * ss.value() / (denom * nn)};
}

// N^{-1} S^2_{N,K} with S^2_{N,K} = N^{-1} sum_k n_k S^2_k, the size-weighted
// mean of block jackknife values. Components hold the block S^2_k.
inline VarianceEstimate distributed_jackknife_variance(std::span<const DataTable> blocks) {
  std::vector<double> s2(blocks.size());
  std::vector<std::size_t> sizes(blocks.size());
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    detail::require(blocks[k].dim() == 1, Errc::invalid_argument, "jackknife needs 1-D data");
    sizes[k] = blocks[k].rows();
    if (sizes[k] < 3) {
      detail::fail(Errc::insufficient_sample,
                   "block " + std::to_string(k) + " has " + std::to_string(sizes[k]) + " rows, jackknife needs 3");
    }
    s2[k] = jackknife_gini_variance(blocks[k].values()).s2;
  }
  const double pooled = size_weighted_mean(s2, sizes);
  std::size_t n = 0;
  for (auto s : sizes) n += s;
  return {pooled / static_cast<double>(n), "distributed-jackknife", std::move(s2)};
}

inline VarianceEstimate distributed_jackknife_variance(const DataTable& table, const BlockPartition& partition) {
  const auto blocks = split_blocks(table, partition);
  return distributed_jackknife_variance(std::span<const DataTable>(blocks));
}

// sigma^2_{alpha,N,K} = N^{-1} sum_k n_k [n_k^{-1} sum_i a_i^2], the
// linear-term variance estimate behind the distributed bootstrap.
template <class K>
double sigma_alpha_hat(std::span<const DataTable> blocks, const K& kernel) {
  std::vector<double> per_block(blocks.size());
  std::vector<std::size_t> sizes(blocks.size());
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    sizes[k] = blocks[k].rows();
    if (sizes[k] < 2) {
      detail::fail(Errc::insufficient_sample, "block " + std::to_string(k) + " has fewer than 2 rows");
    }
    const auto alpha = hoeffding_alpha_hat(blocks[k].view(), kernel);
    CompensatedSum ss;
    for (double a : alpha) ss.add(a * a);
    per_block[k] = ss.value() / static_cast<double>(sizes[k]);
  }
  return size_weighted_mean(per_block, sizes);
}

template <class K>
double sigma_alpha_hat(const DataTable& table, const BlockPartition& partition, const K& kernel) {
  const auto blocks = split_blocks(table, partition);
  return sigma_alpha_hat(std::span<const DataTable>(blocks), kernel);
}

// Sample variance of the uncentered bootstrap statistics with divisor B;
// estimates N^{-1} sigma_alpha^2, i.e. Var(T_{N,K}).
inline double bootstrap_sample_variance(const BootstrapResult& result) {
  const auto& t = result.raw_statistics;
  detail::require(t.size() >= 2, Errc::insufficient_replicates,
                  "bootstrap variance needs B >= 2, have " + std::to_string(t.size()));
  CompensatedSum sum;
  for (double v : t) sum.add(v);
  const double mean = sum.value() / static_cast<double>(t.size());
  CompensatedSum ss;
  for (double v : t) ss.add((v - mean) * (v - mean));
  return ss.value() / static_cast<double>(t.size());
}

}  // namespace splitstat
