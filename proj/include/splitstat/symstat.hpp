#pragma once

// U-statistics with pluggable symmetric kernels: exact full-sample
// evaluation, multiset-weighted evaluation, block-wise aggregation and the
// empirical first-order Hoeffding projection.

#include <algorithm>
#include <array>
#include <concepts>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "splitstat/core.hpp"

namespace splitstat {

inline constexpr std::size_t kMaxKernelDegree = 4;

// Kernels with a compile-time degree are called as k(row_1, ..., row_m).
template <class K>
concept StaticKernel = requires(const K& k) {
  { K::degree } -> std::convertible_to<std::size_t>;
  { k.name() } -> std::convertible_to<std::string>;
};

// h(x, y) = |x - y| on scalar rows.
class GiniKernel {
 public:
  static constexpr std::size_t degree = 2;
  std::string name() const { return "gini"; }
  void check_dim(std::size_t d) const {
    detail::require(d == 1, Errc::invalid_argument,
                    "gini kernel needs 1-D rows, got dimension " + std::to_string(d));
  }
  double operator()(Row x, Row y) const {
    if (x.size() != 1 || y.size() != 1) check_dim(x.size() != 1 ? x.size() : y.size());
    return std::abs(x[0] - y[0]);
  }
};

// h(x, y) = (x - c)(y - c); degenerate when c = E X.
class ProductKernel {
 public:
  static constexpr std::size_t degree = 2;
  explicit ProductKernel(double c = 0.0) : c_(c) {}
  std::string name() const { return "product"; }
  double center() const noexcept { return c_; }
  void check_dim(std::size_t d) const {
    detail::require(d == 1, Errc::invalid_argument,
                    "product kernel needs 1-D rows, got dimension " + std::to_string(d));
  }
  double operator()(Row x, Row y) const { return (x[0] - c_) * (y[0] - c_); }

 private:
  double c_;
};

inline GiniKernel gini_kernel() { return {}; }
inline ProductKernel product_kernel(double c) { return ProductKernel(c); }

// Type-erased symmetric kernel of runtime degree 1..4.
class Kernel {
 public:
  using Eval = std::function<double(std::span<const Row>)>;

  Kernel(std::size_t degree, Eval eval, std::string name)
      : degree_(degree), eval_(std::move(eval)), name_(std::move(name)) {
    detail::require(degree_ >= 1 && degree_ <= kMaxKernelDegree, Errc::invalid_argument,
                    "kernel degree must be in 1..4, got " + std::to_string(degree_));
    detail::require(static_cast<bool>(eval_), Errc::invalid_argument, "kernel has no evaluator");
  }

  template <StaticKernel K>
  Kernel(K k)  // NOLINT(google-explicit-constructor)
      : degree_(K::degree), name_(k.name()) {
    static_assert(K::degree >= 1 && K::degree <= kMaxKernelDegree);
    check_dim_ = [k](std::size_t d) {
      if constexpr (requires { k.check_dim(d); }) k.check_dim(d);
    };
    eval_ = [k](std::span<const Row> rows) {
      return [&]<std::size_t... I>(std::index_sequence<I...>) {
        return k(rows[I]...);
      }(std::make_index_sequence<K::degree>{});
    };
  }

  std::size_t degree() const noexcept { return degree_; }
  const std::string& name() const noexcept { return name_; }
  double operator()(std::span<const Row> rows) const { return eval_(rows); }
  void check_dim(std::size_t d) const {
    if (check_dim_) check_dim_(d);
  }

 private:
  std::size_t degree_;
  Eval eval_;
  std::string name_;
  std::function<void(std::size_t)> check_dim_;
};

template <class K>
std::size_t kernel_degree(const K& k) {
  if constexpr (StaticKernel<K>) {
    return K::degree;
  } else {
    return k.degree();
  }
}

namespace detail {

template <class K>
void check_kernel_dim(const K& k, std::size_t d) {
  if constexpr (requires { k.check_dim(d); }) k.check_dim(d);
}

template <std::size_t M, class K>
inline double call_kernel(const K& k, const std::array<Row, M>& rows) {
  if constexpr (StaticKernel<K>) {
    return std::apply(k, rows);
  } else {
    return k(std::span<const Row>(rows));
  }
}

// Calls f.template operator()<M>() for the kernel's degree.
template <class K, class F>
decltype(auto) dispatch_degree(const K& k, F&& f) {
  if constexpr (StaticKernel<K>) {
    return f.template operator()<K::degree>();
  } else {
    switch (k.degree()) {
      case 1: return f.template operator()<1>();
      case 2: return f.template operator()<2>();
      case 3: return f.template operator()<3>();
      case 4: return f.template operator()<4>();
      default: fail(Errc::invalid_argument, "unsupported kernel degree");
    }
  }
}

inline double binomial(double n, std::size_t m) {
  double r = 1.0;
  for (std::size_t i = 0; i < m; ++i) r = r * (n - static_cast<double>(i)) / static_cast<double>(i + 1);
  return r;
}

// Sum of h over all index subsets i_1 < ... < i_M, lexicographic order.
template <std::size_t M, class K>
double subset_sum(SampleView x, const K& k) {
  const std::size_t n = x.size();
  CompensatedSum acc;
  if constexpr (M == 1) {
    for (std::size_t i = 0; i < n; ++i) acc.add(call_kernel<1>(k, {x[i]}));
  } else if constexpr (M == 2) {
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const Row xi = x[i];
      double inner = 0.0;
      for (std::size_t j = i + 1; j < n; ++j) inner += call_kernel<2>(k, {xi, x[j]});
      acc.add(inner);
    }
  } else if constexpr (M == 3) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        double inner = 0.0;
        for (std::size_t l = j + 1; l < n; ++l) inner += call_kernel<3>(k, {x[i], x[j], x[l]});
        acc.add(inner);
      }
    }
  } else {
    static_assert(M == 4);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        for (std::size_t l = j + 1; l < n; ++l) {
          double inner = 0.0;
          for (std::size_t r = l + 1; r < n; ++r) {
            inner += call_kernel<4>(k, {x[i], x[j], x[l], x[r]});
          }
          acc.add(inner);
        }
      }
    }
  }
  return acc.value();
}

// Product of C(w_i, c_i) over the distinct indices of a nondecreasing tuple.
template <std::size_t M>
double multiset_coefficient(const std::array<std::size_t, M>& idx, std::span<const std::uint32_t> w) {
  double coef = 1.0;
  std::size_t start = 0;
  while (start < M) {
    std::size_t end = start + 1;
    while (end < M && idx[end] == idx[start]) ++end;
    coef *= binomial(static_cast<double>(w[idx[start]]), end - start);
    if (coef == 0.0) return 0.0;
    start = end;
  }
  return coef;
}

// Sum over all size-M sub-multisets of the weighted sample, i.e. the subset
// sum of the expanded multiset, computed over the distinct rows only.
template <std::size_t M, class K>
double weighted_subset_sum(SampleView x, std::span<const std::uint32_t> w, const K& k) {
  std::vector<std::size_t> act;
  std::vector<std::uint32_t> cw;  // compressed weights
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] > 0) {
      act.push_back(i);
      cw.push_back(w[i]);
    }
  }
  const std::size_t a = act.size();
  CompensatedSum acc;
  if constexpr (M == 1) {
    for (std::size_t p = 0; p < a; ++p) acc.add(cw[p] * call_kernel<1>(k, {x[act[p]]}));
  } else if constexpr (M == 2) {
    for (std::size_t p = 0; p < a; ++p) {
      const Row xi = x[act[p]];
      double inner = 0.0;
      for (std::size_t q = p + 1; q < a; ++q) inner += cw[q] * call_kernel<2>(k, {xi, x[act[q]]});
      acc.add(cw[p] * inner);
      if (cw[p] >= 2) acc.add(binomial(cw[p], 2) * call_kernel<2>(k, {xi, xi}));
    }
  } else if constexpr (M == 3) {
    std::array<std::size_t, 3> t{};
    for (t[0] = 0; t[0] < a; ++t[0]) {
      for (t[1] = t[0]; t[1] < a; ++t[1]) {
        for (t[2] = t[1]; t[2] < a; ++t[2]) {
          const double c = multiset_coefficient<3>(t, cw);
          if (c != 0.0) acc.add(c * call_kernel<3>(k, {x[act[t[0]]], x[act[t[1]]], x[act[t[2]]]}));
        }
      }
    }
  } else {
    static_assert(M == 4);
    std::array<std::size_t, 4> t{};
    for (t[0] = 0; t[0] < a; ++t[0]) {
      for (t[1] = t[0]; t[1] < a; ++t[1]) {
        for (t[2] = t[1]; t[2] < a; ++t[2]) {
          for (t[3] = t[2]; t[3] < a; ++t[3]) {
            const double c = multiset_coefficient<4>(t, cw);
            if (c != 0.0) {
              acc.add(c * call_kernel<4>(k, {x[act[t[0]]], x[act[t[1]]], x[act[t[2]]], x[act[t[3]]]}));
            }
          }
        }
      }
    }
  }
  return acc.value();
}

}  // namespace detail

// (N choose m)^{-1} times the kernel sum over all size-m index subsets.
template <class K>
double u_stat(SampleView x, const K& kernel) {
  const std::size_t m = kernel_degree(kernel);
  detail::check_kernel_dim(kernel, x.dim());
  detail::require(x.size() >= m, Errc::insufficient_sample,
                  "U-statistic of degree " + std::to_string(m) + " needs N >= m, got N = " +
                      std::to_string(x.size()));
  const double total = detail::dispatch_degree(kernel, [&]<std::size_t M>() {
    return detail::subset_sum<M>(x, kernel);
  });
  return total / detail::binomial(static_cast<double>(x.size()), m);
}

// U-statistic of the multiset in which row i appears weights[i] times,
// evaluated in O(n^m) over distinct rows.
template <class K>
double u_stat_weighted(SampleView x, std::span<const std::uint32_t> weights, const K& kernel) {
  const std::size_t m = kernel_degree(kernel);
  detail::check_kernel_dim(kernel, x.dim());
  detail::require(weights.size() == x.size(), Errc::invalid_argument,
                  "weight vector length " + std::to_string(weights.size()) + " != sample size " +
                      std::to_string(x.size()));
  std::uint64_t total_weight = 0;
  for (auto w : weights) total_weight += w;
  detail::require(total_weight >= m, Errc::insufficient_sample,
                  "weights sum to " + std::to_string(total_weight) + ", below kernel degree " +
                      std::to_string(m));
  const double total = detail::dispatch_degree(kernel, [&]<std::size_t M>() {
    return detail::weighted_subset_sum<M>(x, weights, kernel);
  });
  return total / detail::binomial(static_cast<double>(total_weight), m);
}

// Plug-in V-statistic n^{-2} sum_i sum_j h(x_i, x_j) of a degree-2 kernel.
template <class K>
double v_stat(SampleView x, const K& kernel) {
  detail::require(kernel_degree(kernel) == 2, Errc::invalid_argument,
                  "plug-in V-statistic is implemented for degree-2 kernels");
  detail::check_kernel_dim(kernel, x.dim());
  const std::size_t n = x.size();
  detail::require(n >= 1, Errc::insufficient_sample, "empty sample");
  const double off = detail::subset_sum<2>(x, kernel);
  CompensatedSum diag;
  for (std::size_t i = 0; i < n; ++i) diag.add(detail::call_kernel<2>(kernel, {x[i], x[i]}));
  const double nn = static_cast<double>(n);
  return (2.0 * off + diag.value()) / (nn * nn);
}

// Empirical first projection: a_i = 2[n^{-1} sum_j h(x_i, x_j) - theta_hat]
// with theta_hat the plug-in V-statistic. The values sum to zero.
template <class K>
std::vector<double> hoeffding_alpha_hat(SampleView x, const K& kernel) {
  detail::require(kernel_degree(kernel) == 2, Errc::invalid_argument,
                  "first projection estimate needs a degree-2 kernel");
  detail::check_kernel_dim(kernel, x.dim());
  const std::size_t n = x.size();
  detail::require(n >= 2, Errc::insufficient_sample,
                  "first projection estimate needs n >= 2, got " + std::to_string(n));
  std::vector<double> row_sum(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    row_sum[i] += detail::call_kernel<2>(kernel, {x[i], x[i]});
    for (std::size_t j = i + 1; j < n; ++j) {
      const double h = detail::call_kernel<2>(kernel, {x[i], x[j]});
      row_sum[i] += h;
      row_sum[j] += h;
    }
  }
  const double nn = static_cast<double>(n);
  CompensatedSum grand;
  for (double r : row_sum) grand.add(r);
  const double theta = grand.value() / (nn * nn);
  std::vector<double> alpha(n);
  for (std::size_t i = 0; i < n; ++i) alpha[i] = 2.0 * (row_sum[i] / nn - theta);
  return alpha;
}

// ---------------------------------------------------------------------------
// Block statistics: what the distributed estimators and bootstrap engines
// evaluate on each block, resample or inflated resample.

template <class S>
concept BlockStatistic = requires(const S& s, SampleView v, std::span<const std::uint32_t> w) {
  { s.degree() } -> std::convertible_to<std::size_t>;
  { s.value(v) } -> std::convertible_to<double>;
  { s.weighted(v, w) } -> std::convertible_to<double>;
  { s.plugin(v) } -> std::convertible_to<double>;
};

// Exhaustive-enumeration U-statistic for any kernel.
template <class K>
class UStatistic {
 public:
  explicit UStatistic(K kernel) : kernel_(std::move(kernel)) {}
  std::size_t degree() const { return kernel_degree(kernel_); }
  const K& kernel() const noexcept { return kernel_; }
  double value(SampleView x) const { return u_stat(x, kernel_); }
  double weighted(SampleView x, std::span<const std::uint32_t> w) const {
    return u_stat_weighted(x, w, kernel_);
  }
  double plugin(SampleView x) const { return v_stat(x, kernel_); }

 private:
  K kernel_;
};

// Gini mean difference through order statistics, O(n log n). Agrees with
// UStatistic<GiniKernel> up to rounding.
class SortedGini {
 public:
  std::size_t degree() const { return 2; }

  double value(SampleView x) const {
    check(x);
    detail::require(x.size() >= 2, Errc::insufficient_sample, "gini needs n >= 2");
    const double n = static_cast<double>(x.size());
    return 2.0 * pair_sum(x) / (n * (n - 1.0));
  }

  double weighted(SampleView x, std::span<const std::uint32_t> w) const {
    check(x);
    detail::require(w.size() == x.size(), Errc::invalid_argument, "weight length mismatch");
    std::vector<std::pair<double, std::uint32_t>> pts;
    pts.reserve(w.size());
    std::uint64_t total = 0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (w[i] > 0) {
        pts.emplace_back(x[i][0], w[i]);
        total += w[i];
      }
    }
    detail::require(total >= 2, Errc::insufficient_sample, "weights sum below 2");
    std::sort(pts.begin(), pts.end());
    // Point with weight c occupying expanded sorted slots [c0, c0 + c) adds
    // x * c * (2 c0 + c - total).
    CompensatedSum acc;
    double before = 0.0;
    const double tot = static_cast<double>(total);
    for (const auto& [v, c] : pts) {
      const double cw = static_cast<double>(c);
      acc.add(v * cw * (2.0 * before + cw - tot));
      before += cw;
    }
    return 2.0 * acc.value() / (tot * (tot - 1.0));
  }

  double plugin(SampleView x) const {
    check(x);
    const double n = static_cast<double>(x.size());
    return 2.0 * pair_sum(x) / (n * n);
  }

 private:
  static void check(SampleView x) { GiniKernel{}.check_dim(x.dim()); }

  // sum_{i<j} |x_i - x_j| = sum_i x_(i) (2i - n + 1) over sorted values.
  static double pair_sum(SampleView x) {
    std::vector<double> s(x.values().begin(), x.values().end());
    std::sort(s.begin(), s.end());
    const double n = static_cast<double>(s.size());
    CompensatedSum acc;
    for (std::size_t i = 0; i < s.size(); ++i) acc.add(s[i] * (2.0 * static_cast<double>(i) - n + 1.0));
    return acc.value();
  }
};

// U-statistic of the product kernel (x - c)(y - c) from power sums, O(n):
// [(sum y)^2 - sum y^2] / (n(n-1)) with y = x - c.
class ProductMoment {
 public:
  explicit ProductMoment(double c = 0.0) : c_(c) {}
  std::size_t degree() const { return 2; }

  double value(SampleView x) const {
    ProductKernel{}.check_dim(x.dim());
    detail::require(x.size() >= 2, Errc::insufficient_sample, "product kernel needs n >= 2");
    CompensatedSum s1;
    CompensatedSum s2;
    for (double v : x.values()) {
      s1.add(v - c_);
      s2.add((v - c_) * (v - c_));
    }
    const double n = static_cast<double>(x.size());
    return (s1.value() * s1.value() - s2.value()) / (n * (n - 1.0));
  }

  double weighted(SampleView x, std::span<const std::uint32_t> w) const {
    ProductKernel{}.check_dim(x.dim());
    detail::require(w.size() == x.size(), Errc::invalid_argument, "weight length mismatch");
    CompensatedSum s1;
    CompensatedSum s2;
    double total = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (w[i] == 0) continue;
      const double y = x[i][0] - c_;
      const double c = static_cast<double>(w[i]);
      s1.add(c * y);
      s2.add(c * y * y);
      total += c;
    }
    detail::require(total >= 2.0, Errc::insufficient_sample, "weights sum below 2");
    return (s1.value() * s1.value() - s2.value()) / (total * (total - 1.0));
  }

  double plugin(SampleView x) const {
    ProductKernel{}.check_dim(x.dim());
    CompensatedSum s1;
    for (double v : x.values()) s1.add(v - c_);
    const double m = s1.value() / static_cast<double>(x.size());
    return m * m;
  }

 private:
  double c_;
};

// ---------------------------------------------------------------------------

struct DistributedEstimate {
  std::vector<double> per_block;
  std::vector<std::size_t> sizes;
  double aggregate = 0.0;

  std::size_t blocks() const noexcept { return per_block.size(); }
  std::size_t total() const noexcept {
    std::size_t n = 0;
    for (auto s : sizes) n += s;
    return n;
  }
};

// N^{-1} sum_k n_k T_k, summed in block order.
inline double size_weighted_mean(std::span<const double> values, std::span<const std::size_t> sizes) {
  detail::require(values.size() == sizes.size() && !values.empty(), Errc::invalid_argument,
                  "block value and size counts differ");
  if (values.size() == 1) return values[0];
  CompensatedSum acc;
  std::size_t n = 0;
  for (std::size_t k = 0; k < values.size(); ++k) {
    acc.add(static_cast<double>(sizes[k]) * values[k]);
    n += sizes[k];
  }
  return acc.value() / static_cast<double>(n);
}

inline DistributedEstimate make_estimate(std::vector<double> per_block, std::vector<std::size_t> sizes) {
  DistributedEstimate e{std::move(per_block), std::move(sizes), 0.0};
  e.aggregate = size_weighted_mean(e.per_block, e.sizes);
  return e;
}

template <BlockStatistic S>
DistributedEstimate distributed_statistic(std::span<const DataTable> blocks, const S& stat,
                                          std::size_t threads = 1) {
  const std::size_t m = stat.degree();
  std::vector<std::size_t> sizes(blocks.size());
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    sizes[k] = blocks[k].rows();
    if (sizes[k] < m) {
      detail::fail(Errc::insufficient_sample, "block " + std::to_string(k) + " has " +
                                                  std::to_string(sizes[k]) + " rows, kernel degree is " +
                                                  std::to_string(m));
    }
  }
  std::vector<double> values(blocks.size());
  parallel_for(blocks.size(), threads, [&](std::size_t k) { values[k] = stat.value(blocks[k].view()); });
  return make_estimate(std::move(values), std::move(sizes));
}

template <class K>
DistributedEstimate distributed_u_stat(const DataTable& table, const BlockPartition& partition,
                                       const K& kernel, std::size_t threads = 1) {
  const auto blocks = split_blocks(table, partition);
  return distributed_statistic(std::span<const DataTable>(blocks), UStatistic<K>(kernel), threads);
}

}  // namespace splitstat
