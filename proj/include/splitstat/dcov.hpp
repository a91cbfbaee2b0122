#pragma once

// Unbiased distance covariance (a degree-4 U-statistic), its block-wise
// distributed version and the independence tests built on it.

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "splitstat/core.hpp"
#include "splitstat/symstat.hpp"

namespace splitstat {

struct PairSample {
  DataTable y;
  DataTable z;

  PairSample(DataTable y_, DataTable z_) : y(std::move(y_)), z(std::move(z_)) {
    detail::require(y.rows() == z.rows(), Errc::invalid_argument,
                    "Y has " + std::to_string(y.rows()) + " rows, Z has " + std::to_string(z.rows()));
  }
  std::size_t rows() const noexcept { return y.rows(); }
};

namespace detail {

inline double euclidean(Row a, Row b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

// From the pairwise sums of a single O(n^2) pass:
//   {n(n-3)}^{-1} [ sum_{i!=j} A_ij B_ij - 2 (n-2)^{-1} sum_i a_i b_i + a b {(n-1)(n-2)}^{-1} ]
// where a_i, b_i are row sums and a, b grand sums of the distance matrices.
inline double u_centered_inner(double cross, std::span<const double> ra, std::span<const double> rb) {
  const double n = static_cast<double>(ra.size());
  CompensatedSum rowdot;
  CompensatedSum ga;
  CompensatedSum gb;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    rowdot.add(ra[i] * rb[i]);
    ga.add(ra[i]);
    gb.add(rb[i]);
  }
  const double t = cross - 2.0 / (n - 2.0) * rowdot.value() + ga.value() * gb.value() / ((n - 1.0) * (n - 2.0));
  return t / (n * (n - 3.0));
}

}  // namespace detail

// dcov^2_N(Y,Z), dcov^2_N(Y,Y) and dcov^2_N(Z,Z) of one sample.
struct DcovTriple {
  double yz = 0.0;
  double yy = 0.0;
  double zz = 0.0;
};

// One pass over i < j, O(n) memory: the distance matrices are never stored.
inline DcovTriple dcov_triple(SampleView y, SampleView z) {
  const std::size_t n = y.size();
  detail::require(z.size() == n, Errc::invalid_argument, "Y and Z row counts differ");
  detail::require(n >= 4, Errc::insufficient_sample,
                  "distance covariance needs N >= 4, got " + std::to_string(n));
  std::vector<double> ra(n, 0.0);
  std::vector<double> rb(n, 0.0);
  CompensatedSum sab;
  CompensatedSum saa;
  CompensatedSum sbb;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const Row yi = y[i];
    const Row zi = z[i];
    double ab = 0.0;
    double aa = 0.0;
    double bb = 0.0;
    double rai = 0.0;
    double rbi = 0.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double a = detail::euclidean(yi, y[j]);
      const double b = detail::euclidean(zi, z[j]);
      rai += a;
      rbi += b;
      ra[j] += a;
      rb[j] += b;
      ab += a * b;
      aa += a * a;
      bb += b * b;
    }
    ra[i] += rai;
    rb[i] += rbi;
    sab.add(ab);
    saa.add(aa);
    sbb.add(bb);
  }
  return {detail::u_centered_inner(2.0 * sab.value(), ra, rb), detail::u_centered_inner(2.0 * saa.value(), ra, ra),
          detail::u_centered_inner(2.0 * sbb.value(), rb, rb)};
}

inline double dcov_unbiased(SampleView y, SampleView z) {
  const std::size_t n = y.size();
  detail::require(z.size() == n, Errc::invalid_argument, "Y and Z row counts differ");
  detail::require(n >= 4, Errc::insufficient_sample,
                  "distance covariance needs N >= 4, got " + std::to_string(n));
  std::vector<double> ra(n, 0.0);
  std::vector<double> rb(n, 0.0);
  CompensatedSum sab;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    double ab = 0.0;
    double rai = 0.0;
    double rbi = 0.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double a = detail::euclidean(y[i], y[j]);
      const double b = detail::euclidean(z[i], z[j]);
      rai += a;
      rbi += b;
      ra[j] += a;
      rb[j] += b;
      ab += a * b;
    }
    ra[i] += rai;
    rb[i] += rbi;
    sab.add(ab);
  }
  return detail::u_centered_inner(2.0 * sab.value(), ra, rb);
}

inline double dcov_unbiased(const PairSample& pair) { return dcov_unbiased(pair.y.view(), pair.z.view()); }

struct DcovBlockSummary {
  std::vector<double> yz;
  std::vector<double> yy;
  std::vector<double> zz;
  std::vector<std::size_t> sizes;
  double aggregate_yz = 0.0;
  double aggregate_yy = 0.0;
  double aggregate_zz = 0.0;

  std::size_t blocks() const noexcept { return sizes.size(); }
  std::size_t total() const noexcept {
    std::size_t n = 0;
    for (auto s : sizes) n += s;
    return n;
  }
};

inline DcovBlockSummary summarize_blocks(std::vector<DcovTriple> per_block, std::vector<std::size_t> sizes) {
  DcovBlockSummary s;
  for (const auto& t : per_block) {
    s.yz.push_back(t.yz);
    s.yy.push_back(t.yy);
    s.zz.push_back(t.zz);
  }
  s.sizes = std::move(sizes);
  s.aggregate_yz = size_weighted_mean(s.yz, s.sizes);
  s.aggregate_yy = size_weighted_mean(s.yy, s.sizes);
  s.aggregate_zz = size_weighted_mean(s.zz, s.sizes);
  return s;
}

inline DcovBlockSummary dcov_distributed(const PairSample& pair, const BlockPartition& partition,
                                         std::size_t threads = 1) {
  const auto yb = split_blocks(pair.y, partition);
  const auto zb = split_blocks(pair.z, partition);
  std::vector<std::size_t> sizes(partition.sizes());
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    if (sizes[k] < 4) {
      detail::fail(Errc::insufficient_sample,
                   "block " + std::to_string(k) + " has " + std::to_string(sizes[k]) + " rows, distance covariance needs 4");
    }
  }
  std::vector<DcovTriple> triples(sizes.size());
  parallel_for(sizes.size(), threads, [&](std::size_t k) { triples[k] = dcov_triple(yb[k].view(), zb[k].view()); });
  return summarize_blocks(std::move(triples), std::move(sizes));
}

// 4 * (N^{-1} sum_k n_k dcov_k(Y,Y)) * (N^{-1} sum_k n_k dcov_k(Z,Z)); may be
// nonpositive in finite samples and is returned unclamped.
inline double sigma_beta_hat(const DcovBlockSummary& s) { return 4.0 * s.aggregate_yy * s.aggregate_zz; }

// K^{-2} sum_k (dcov_k(Y,Z) - dcov_{N,K}(Y,Z))^2, for equal block sizes.
inline double block_variance(const DcovBlockSummary& s) {
  const auto [lo, hi] = std::minmax_element(s.yz.begin(), s.yz.end());
  if (*lo == *hi) return 0.0;
  const double k = static_cast<double>(s.blocks());
  CompensatedSum ss;
  for (double v : s.yz) ss.add((v - s.aggregate_yz) * (v - s.aggregate_yz));
  return ss.value() / (k * k);
}

struct TestReport {
  double statistic = 0.0;
  double critical_value = 0.0;  // z_tau
  double p_value = 1.0;
  bool reject = false;
  bool valid = true;  // false when the variance estimate is not positive
  double variance = 0.0;
  std::string variance_method;
  std::string message;
};

inline double normal_upper_quantile(double tau) {
  detail::require(tau > 0.0 && tau < 1.0, Errc::invalid_argument, "level must be in (0, 1)");
  return boost::math::quantile(boost::math::complement(boost::math::normal_distribution<double>(), tau));
}

inline double normal_upper_tail(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

namespace detail {

inline TestReport z_test(double statistic_numerator, double variance, double scale, double tau, std::string method) {
  TestReport r;
  r.critical_value = normal_upper_quantile(tau);
  r.variance = variance;
  r.variance_method = std::move(method);
  if (!(variance > 0.0) || !std::isfinite(variance)) {
    r.valid = false;
    r.statistic = std::nan("");
    r.p_value = std::nan("");
    r.message = "variance estimate is not positive; statistic undefined";
    return r;
  }
  r.statistic = scale * statistic_numerator / std::sqrt(variance);
  r.p_value = normal_upper_tail(r.statistic);
  r.reject = r.statistic > r.critical_value;
  return r;
}

// Block sizes may differ by one row (the even split of N not divisible by K).
inline void require_even_split(const DcovBlockSummary& s) {
  const auto [lo, hi] = std::minmax_element(s.sizes.begin(), s.sizes.end());
  require(*hi - *lo <= 1, Errc::invalid_argument, "block-variance statistics need equal block sizes");
}

}  // namespace detail

// One-sided test: 2^{1/2} K^{-1/2} N sigma_beta^{-1} dcov_{N,K} > z_tau.
inline TestReport test_var(const DcovBlockSummary& s, double tau) {
  const double k = static_cast<double>(s.blocks());
  const double n = static_cast<double>(s.total());
  return detail::z_test(s.aggregate_yz, sigma_beta_hat(s), std::sqrt(2.0 / k) * n, tau, "sigma-beta");
}

// One-sided test: sigma_{N,K}^{-1} dcov_{N,K} > z_tau, blocks of (near) equal size.
inline TestReport test_block_var(const DcovBlockSummary& s, double tau) {
  detail::require(s.blocks() >= 2, Errc::invalid_argument, "block-variance test needs K >= 2");
  detail::require_even_split(s);
  return detail::z_test(s.aggregate_yz, block_variance(s), 1.0, tau, "block-variance");
}

// DM(Y,Z) = sigma_{N,K}^{-1} dcov_{N,K}(Y,Z), on the N(0,1) scale.
inline double dependence_measure(const DcovBlockSummary& s) {
  detail::require(s.blocks() >= 2, Errc::invalid_argument, "dependence measure needs K >= 2");
  detail::require_even_split(s);
  const double v = block_variance(s);
  detail::require(v > 0.0, Errc::invalid_variance, "all block distance covariances are equal");
  return s.aggregate_yz / std::sqrt(v);
}

}  // namespace splitstat
