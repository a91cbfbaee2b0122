#pragma once

// Bootstrap engines for distributed statistics:
//   DB   resampling within each block, aggregated like the statistic itself
//   PDB  resampling of the K scaled block statistics, O(K) per replicate
//   BLB  bag of little bootstraps, B inflated resamples per subset
//   SDB  subsampled double bootstrap, one inflated resample per subset
// plus equal-tail intervals and wall-clock budgets.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "splitstat/bootstrap_result.hpp"
#include "splitstat/core.hpp"
#include "splitstat/symstat.hpp"

namespace splitstat {

struct TimeBudget {
  double seconds = 0.0;
};

class Deadline {
 public:
  using Clock = std::chrono::steady_clock;

  Deadline() = default;
  explicit Deadline(std::optional<TimeBudget> budget) : start_(Clock::now()) {
    if (budget) {
      detail::require(budget->seconds > 0.0, Errc::invalid_argument, "time budget must be positive");
      end_ = start_ + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(budget->seconds));
    }
  }

  bool bounded() const noexcept { return end_.has_value(); }
  bool expired() const { return end_ && Clock::now() >= *end_; }
  double elapsed() const { return std::chrono::duration<double>(Clock::now() - start_).count(); }

 private:
  Clock::time_point start_ = Clock::now();
  std::optional<Clock::time_point> end_;
};

// Called after each completed iteration with the elapsed time and the values
// gathered so far (replicates, or per-subset estimates for BLB).
using ProgressObserver = std::function<void(double elapsed_seconds, std::span<const double> values)>;

struct RunOptions {
  std::optional<TimeBudget> budget;
  ProgressObserver observer;
};

struct RunStats {
  std::size_t completed = 0;
  double elapsed_seconds = 0.0;
  bool budget_exhausted = false;
};

// Runs step(i, deadline) for i = 0.. until `iterations` are done or the
// budget runs out. No iteration starts after the deadline, and an iteration
// counts only if it finishes within the budget; a step may return false to
// report that it stopped early at one of its own deadline checks.
template <class Step>
RunStats run_with_budget(std::size_t iterations, std::optional<TimeBudget> budget, Step&& step) {
  const Deadline deadline(budget);
  RunStats stats;
  for (std::size_t i = 0; i < iterations; ++i) {
    if (deadline.expired()) {
      stats.budget_exhausted = true;
      break;
    }
    const bool finished = step(i, deadline);
    if (!finished || deadline.expired()) {
      stats.budget_exhausted = true;
      break;
    }
    ++stats.completed;
  }
  stats.elapsed_seconds = deadline.elapsed();
  if (stats.completed == 0 && iterations > 0) {
    throw EmptyResultError("no iteration completed within the time budget", 0);
  }
  return stats;
}

namespace detail {

inline std::vector<std::size_t> block_sizes(std::span<const DataTable> blocks) {
  std::vector<std::size_t> sizes(blocks.size());
  for (std::size_t k = 0; k < blocks.size(); ++k) sizes[k] = blocks[k].rows();
  return sizes;
}

inline std::size_t sum_sizes(std::span<const std::size_t> sizes) {
  return std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
}

// Even split of `total` into k parts, the first total mod k parts one larger.
inline std::vector<std::size_t> even_sizes(std::size_t total, std::size_t k) {
  std::vector<std::size_t> sizes(k, total / k);
  for (std::size_t i = 0; i < total % k; ++i) ++sizes[i];
  return sizes;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Distributed bootstrap

// For replicate b and block k, n_k rows are drawn with replacement from block
// k using derive_stream(seed, k, b). T*_b = N^{-1} sum_k n_k T*_bk and the
// replicates are sqrt(N) (T*_b - theta_hat) with theta_hat the size-weighted
// plug-in (V-statistic) value of the blocks.
template <BlockStatistic S>
BootstrapResult db_run(std::span<const DataTable> blocks, const S& stat, std::size_t replicates, SeedSpec seed,
                       const RunOptions& options = {}) {
  detail::require(replicates >= 1, Errc::invalid_argument, "B must be at least 1");
  detail::require(!blocks.empty(), Errc::invalid_argument, "no blocks");
  const auto sizes = detail::block_sizes(blocks);
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    if (sizes[k] < stat.degree()) {
      detail::fail(Errc::insufficient_sample, "block " + std::to_string(k) + " is smaller than the kernel degree");
    }
  }
  const double n_total = static_cast<double>(detail::sum_sizes(sizes));
  std::vector<double> plug(blocks.size());
  for (std::size_t k = 0; k < blocks.size(); ++k) plug[k] = stat.plugin(blocks[k].view());

  BootstrapResult out;
  out.center = size_weighted_mean(plug, sizes);
  out.scale = std::sqrt(n_total);
  out.scale_convention = "sqrt-N";
  out.requested = replicates;
  out.budgeted = options.budget.has_value();
  out.replicates.reserve(replicates);
  out.raw_statistics.reserve(replicates);

  std::vector<double> block_stats(blocks.size());
  std::vector<std::uint32_t> counts;
  const auto stats = run_with_budget(replicates, options.budget, [&](std::size_t b, const Deadline& deadline) {
    for (std::size_t k = 0; k < blocks.size(); ++k) {
      if (deadline.bounded() && deadline.expired()) return false;
      counts.resize(sizes[k]);
      Rng rng = derive_stream(seed, k, b);
      resample_counts(rng, sizes[k], counts);
      block_stats[k] = stat.weighted(blocks[k].view(), counts);
    }
    const double t = size_weighted_mean(block_stats, sizes);
    out.raw_statistics.push_back(t);
    out.replicates.push_back(out.scale * (t - out.center));
    if (options.observer) options.observer(deadline.elapsed(), out.replicates);
    return true;
  });
  // A replicate that finished past the deadline is not counted.
  out.raw_statistics.resize(stats.completed);
  out.replicates.resize(stats.completed);
  out.elapsed_seconds = stats.elapsed_seconds;
  return out;
}

template <class K>
BootstrapResult db_run(const DataTable& table, const BlockPartition& partition, const K& kernel,
                       std::size_t replicates, SeedSpec seed, const RunOptions& options = {}) {
  const auto blocks = split_blocks(table, partition);
  return db_run(std::span<const DataTable>(blocks), UStatistic<K>(kernel), replicates, seed, options);
}

// ---------------------------------------------------------------------------
// Pseudo-distributed bootstrap

enum class PdbMode { nondegenerate, degenerate };

// Scaled block statistics are resampled i.i.d.:
//   nondegenerate  s_k = N^{-1/2} K^{1/2} n_k T_k,  c = N^{1/2} K^{-1/2} T_{N,K}
//   degenerate     s_k = n_k T_k,                   c = N K^{-1} T_{N,K}
// replicate b = sqrt(K) (mean of K draws - c), draws from derive_stream(seed, kPseudoLane, b).
inline BootstrapResult pdb_run(const DistributedEstimate& est, PdbMode mode, std::size_t replicates,
                               SeedSpec seed, const RunOptions& options = {}) {
  const std::size_t k = est.blocks();
  detail::require(k >= 2, Errc::invalid_argument, "pseudo-distributed bootstrap needs K >= 2");
  detail::require(replicates >= 1, Errc::invalid_argument, "B must be at least 1");
  const double n = static_cast<double>(est.total());
  const double kk = static_cast<double>(k);
  std::vector<double> scaled(k);
  double c = 0.0;
  double to_stat = 1.0;  // scaled mean -> statistic scale
  if (mode == PdbMode::nondegenerate) {
    const double f = std::sqrt(kk / n);
    for (std::size_t i = 0; i < k; ++i) scaled[i] = f * static_cast<double>(est.sizes[i]) * est.per_block[i];
    c = std::sqrt(n / kk) * est.aggregate;
    to_stat = std::sqrt(kk / n);
  } else {
    for (std::size_t i = 0; i < k; ++i) scaled[i] = static_cast<double>(est.sizes[i]) * est.per_block[i];
    c = n / kk * est.aggregate;
    to_stat = kk / n;
  }

  BootstrapResult out;
  out.center = est.aggregate;
  out.scale = std::sqrt(kk) / to_stat;
  out.scale_convention = mode == PdbMode::nondegenerate ? "K-sqrt" : "N-over-sqrtK";
  out.requested = replicates;
  out.budgeted = options.budget.has_value();
  out.replicates.reserve(replicates);
  out.raw_statistics.reserve(replicates);
  const double root_k = std::sqrt(kk);
  const auto stats = run_with_budget(replicates, options.budget, [&](std::size_t b, const Deadline& deadline) {
    Rng rng = derive_stream(seed, kPseudoLane, b);
    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) sum += scaled[rng.index(k)];
    const double mean = sum / kk;
    out.replicates.push_back(root_k * (mean - c));
    out.raw_statistics.push_back(mean * to_stat);
    if (options.observer) options.observer(deadline.elapsed(), out.replicates);
    return true;
  });
  out.raw_statistics.resize(stats.completed);
  out.replicates.resize(stats.completed);
  out.elapsed_seconds = stats.elapsed_seconds;
  return out;
}

// ---------------------------------------------------------------------------
// Inflated resamples shared by BLB and SDB.

// How the statistic of a size-N resample inflated from an n-row subset is
// evaluated.
//   distributed  split into K blocks of sizes n_1..n_K (even split of N); each
//                block is a Multinomial(n_k, 1/n) weight vector on the subset
//                and the block values are aggregated like T_{N,K}. Cost per
//                resample is K evaluations of size n.
//   pooled       a single Multinomial(N, 1/n) weight vector evaluated as one
//                U-statistic of size N. Cost per resample is one evaluation.
enum class Inflation { distributed, pooled };

struct InflationPlan {
  Inflation mode = Inflation::distributed;
  std::size_t total = 0;                 // N
  std::vector<std::size_t> block_sizes;  // distributed mode only
};

inline InflationPlan make_inflation_plan(Inflation mode, std::size_t total, std::size_t blocks) {
  InflationPlan plan{mode, total, {}};
  if (mode == Inflation::distributed) {
    detail::require(blocks >= 1 && blocks <= total, Errc::invalid_argument, "inflation block count out of range");
    plan.block_sizes = detail::even_sizes(total, blocks);
  }
  return plan;
}

// Multinomial(total, uniform over counts.size()). Direct index draws when the
// total is small relative to the cell count, binomial decomposition otherwise.
inline void inflate_counts(Rng& rng, std::size_t total, std::span<std::uint32_t> counts) {
  if (total <= 2 * counts.size()) {
    resample_counts(rng, total, counts);
  } else {
    multinomial_uniform(rng, total, counts);
  }
}

template <BlockStatistic S>
std::optional<double> inflated_statistic(SampleView subset, const S& stat, const InflationPlan& plan, Rng& rng,
                                         const Deadline& deadline) {
  std::vector<std::uint32_t> counts(subset.size());
  if (plan.mode == Inflation::pooled) {
    inflate_counts(rng, plan.total, counts);
    return stat.weighted(subset, counts);
  }
  std::vector<double> values(plan.block_sizes.size());
  for (std::size_t k = 0; k < plan.block_sizes.size(); ++k) {
    if (deadline.bounded() && deadline.expired()) return std::nullopt;
    inflate_counts(rng, plan.block_sizes[k], counts);
    values[k] = stat.weighted(subset, counts);
  }
  return size_weighted_mean(values, plan.block_sizes);
}

// ---------------------------------------------------------------------------
// Bag of little bootstraps

enum class SubsetMode { random_without_replacement, disjoint_blocks };

enum class BlbEstimand { ci_width, variance, quantile };

struct BlbOptions {
  std::size_t subset_size = 0;  // n; ignored for disjoint blocks
  std::size_t subsets = 1;      // S; for disjoint blocks at most K
  std::size_t resamples = 100;  // B
  SubsetMode subset_mode = SubsetMode::random_without_replacement;
  std::optional<BlockPartition> partition;  // required for disjoint blocks
  Inflation inflation = Inflation::distributed;
  std::size_t inflation_blocks = 0;  // K for distributed inflation; 0 means N / n
  BlbEstimand estimand = BlbEstimand::ci_width;
  double level = 0.95;     // for ci_width
  double quantile = 0.5;   // for quantile
  RunOptions run;
};

struct BlbResult {
  double estimate = 0.0;               // S^{-1} sum_s xi_s over completed subsets
  std::vector<double> per_subset;      // xi_s
  double lower_quantile = 0.0;         // mean over subsets of u*_{tau/2}
  double upper_quantile = 0.0;         // mean over subsets of u*_{1 - tau/2}
  std::size_t completed = 0;
  std::size_t requested = 0;
  double elapsed_seconds = 0.0;
};

// For each subset s: theta_hat_{s,n} is the plug-in value of the subset;
// each of B inflated resamples gives u = sqrt(N) (theta*_{s,N} - theta_hat_{s,n});
// xi_s is extracted from the B values and averaged over subsets.
template <BlockStatistic S>
BlbResult blb_run(const DataTable& table, const S& stat, SeedSpec seed, const BlbOptions& opt) {
  const std::size_t n_total = table.rows();
  detail::require(opt.subsets >= 1, Errc::invalid_argument, "S must be at least 1");
  detail::require(opt.resamples >= 1, Errc::invalid_argument, "B must be at least 1");
  detail::require(opt.level > 0.0 && opt.level < 1.0, Errc::invalid_argument, "level must be in (0, 1)");

  std::vector<DataTable> disjoint;
  if (opt.subset_mode == SubsetMode::disjoint_blocks) {
    detail::require(opt.partition.has_value(), Errc::invalid_argument, "disjoint subsets need a partition");
    disjoint = split_blocks(table, *opt.partition);
    detail::require(opt.subsets <= disjoint.size(), Errc::invalid_argument, "S exceeds the number of blocks");
  } else {
    detail::require(opt.subset_size >= stat.degree() && opt.subset_size <= n_total, Errc::invalid_argument,
                    "subset size must lie in [m, N]");
  }

  const double root_n = std::sqrt(static_cast<double>(n_total));
  const double tau = 1.0 - opt.level;
  BlbResult out;
  out.requested = opt.subsets;
  std::vector<double> lows;
  std::vector<double> highs;
  std::vector<double> u;

  const auto stats = run_with_budget(opt.subsets, opt.run.budget, [&](std::size_t s, const Deadline& deadline) {
    std::optional<DataTable> drawn;
    if (opt.subset_mode == SubsetMode::random_without_replacement) {
      Rng pick = derive_stream(seed, kSubsetLane, s);
      std::vector<std::size_t> idx(n_total);
      std::iota(idx.begin(), idx.end(), std::size_t{0});
      for (std::size_t i = 0; i < opt.subset_size; ++i) {
        const auto j = i + static_cast<std::size_t>(pick.index(n_total - i));
        std::swap(idx[i], idx[j]);
      }
      std::vector<double> vals;
      vals.reserve(opt.subset_size * table.dim());
      for (std::size_t i = 0; i < opt.subset_size; ++i) {
        const Row r = table.row(idx[i]);
        vals.insert(vals.end(), r.begin(), r.end());
      }
      drawn.emplace(std::move(vals), table.dim());
    }
    const DataTable& subset = drawn ? *drawn : disjoint[s];
    detail::require(subset.rows() >= stat.degree(), Errc::insufficient_sample, "subset smaller than kernel degree");
    const std::size_t k_infl = opt.inflation_blocks > 0 ? opt.inflation_blocks
                                                        : std::max<std::size_t>(1, n_total / subset.rows());
    const auto plan = make_inflation_plan(opt.inflation, n_total, k_infl);
    const double center = stat.plugin(subset.view());
    u.clear();
    for (std::size_t b = 0; b < opt.resamples; ++b) {
      if (deadline.bounded() && deadline.expired()) return false;
      Rng rng = derive_stream(seed, s, b);
      const auto t = inflated_statistic(subset.view(), stat, plan, rng, deadline);
      if (!t) return false;
      u.push_back(root_n * (*t - center));
    }
    double xi = 0.0;
    std::vector<double> sorted = u;
    std::sort(sorted.begin(), sorted.end());
    const double lo = sorted.size() >= 2 ? sorted_quantile(sorted, tau / 2.0) : sorted.front();
    const double hi = sorted.size() >= 2 ? sorted_quantile(sorted, 1.0 - tau / 2.0) : sorted.front();
    switch (opt.estimand) {
      case BlbEstimand::ci_width:
        xi = (hi - lo) / root_n;
        break;
      case BlbEstimand::variance: {
        CompensatedSum sum;
        for (double v : u) sum.add(v);
        const double mean = sum.value() / static_cast<double>(u.size());
        CompensatedSum ss;
        for (double v : u) ss.add((v - mean) * (v - mean));
        xi = ss.value() / static_cast<double>(u.size()) / static_cast<double>(n_total);
        break;
      }
      case BlbEstimand::quantile:
        xi = sorted.size() >= 2 ? sorted_quantile(sorted, opt.quantile) : sorted.front();
        break;
    }
    out.per_subset.push_back(xi);
    lows.push_back(lo);
    highs.push_back(hi);
    if (opt.run.observer) opt.run.observer(deadline.elapsed(), out.per_subset);
    return true;
  });
  out.per_subset.resize(stats.completed);
  lows.resize(stats.completed);
  highs.resize(stats.completed);
  out.completed = stats.completed;
  out.elapsed_seconds = stats.elapsed_seconds;
  const auto mean_of = [](const std::vector<double>& v) {
    CompensatedSum acc;
    for (double x : v) acc.add(x);
    return acc.value() / static_cast<double>(v.size());
  };
  out.estimate = mean_of(out.per_subset);
  out.lower_quantile = mean_of(lows);
  out.upper_quantile = mean_of(highs);
  return out;
}

// ---------------------------------------------------------------------------
// Subsampled double bootstrap

struct SdbOptions {
  std::size_t subset_size = 0;  // n
  std::size_t subsets = 1;      // S
  Inflation inflation = Inflation::distributed;
  std::size_t inflation_blocks = 0;  // 0 means N / n
  RunOptions run;
};

// For each subset s: n rows drawn with replacement from the whole table,
// theta*_{s,n} its plug-in value, one inflated resample theta*_{s,N};
// replicate s is sqrt(N) (theta*_{s,N} - theta*_{s,n}). `center` holds the
// mean of the per-subset centers.
template <BlockStatistic S>
BootstrapResult sdb_run(const DataTable& table, const S& stat, SeedSpec seed, const SdbOptions& opt) {
  const std::size_t n_total = table.rows();
  detail::require(opt.subsets >= 1, Errc::invalid_argument, "S must be at least 1");
  detail::require(opt.subset_size >= stat.degree(), Errc::invalid_argument, "subset size below kernel degree");
  const std::size_t k_infl = opt.inflation_blocks > 0 ? opt.inflation_blocks
                                                      : std::max<std::size_t>(1, n_total / opt.subset_size);
  const auto plan = make_inflation_plan(opt.inflation, n_total, k_infl);
  const double root_n = std::sqrt(static_cast<double>(n_total));

  BootstrapResult out;
  out.scale = root_n;
  out.scale_convention = "sqrt-N";
  out.requested = opt.subsets;
  out.budgeted = opt.run.budget.has_value();
  CompensatedSum centers;
  std::vector<double> vals;
  const auto stats = run_with_budget(opt.subsets, opt.run.budget, [&](std::size_t s, const Deadline& deadline) {
    Rng pick = derive_stream(seed, kSubsetLane, s);
    vals.clear();
    for (std::size_t i = 0; i < opt.subset_size; ++i) {
      const Row r = table.row(static_cast<std::size_t>(pick.index(n_total)));
      vals.insert(vals.end(), r.begin(), r.end());
    }
    const SampleView subset(vals, table.dim());
    const double center = stat.plugin(subset);
    Rng rng = derive_stream(seed, s, 0);
    const auto t = inflated_statistic(subset, stat, plan, rng, deadline);
    if (!t) return false;
    out.raw_statistics.push_back(*t);
    out.replicates.push_back(root_n * (*t - center));
    centers.add(center);
    if (opt.run.observer) opt.run.observer(deadline.elapsed(), out.replicates);
    return true;
  });
  out.raw_statistics.resize(stats.completed);
  out.replicates.resize(stats.completed);
  out.center = centers.value() / static_cast<double>(std::max<std::size_t>(1, stats.completed));
  out.elapsed_seconds = stats.elapsed_seconds;
  return out;
}

// ---------------------------------------------------------------------------

struct ConfidenceInterval {
  double lower = 0.0;
  double upper = 0.0;
  double level = 0.0;

  double width() const noexcept { return upper - lower; }
  bool contains(double v) const noexcept { return lower <= v && v <= upper; }
};

// (point - u*_{1-tau/2} / s, point - u*_{tau/2} / s) with tau = 1 - level and
// s = sqrt(N) for sqrt-N replicates (the result's own scale otherwise).
inline ConfidenceInterval ci_equal_tail(const BootstrapResult& result, double point, double level, std::size_t n) {
  detail::require(level > 0.0 && level < 1.0, Errc::invalid_argument, "level must be in (0, 1)");
  detail::require(result.size() >= 2, Errc::insufficient_replicates,
                  "confidence interval needs at least 2 replicates, have " + std::to_string(result.size()));
  const double s = result.scale_convention == "N-over-sqrtK" ? result.scale : std::sqrt(static_cast<double>(n));
  std::vector<double> sorted = result.replicates;
  std::sort(sorted.begin(), sorted.end());
  const double tau = 1.0 - level;
  const double hi = sorted_quantile(sorted, 1.0 - tau / 2.0);
  const double lo = sorted_quantile(sorted, tau / 2.0);
  return {point - hi / s, point - lo / s, level};
}

// Interval from BLB's subset-averaged quantiles.
inline ConfidenceInterval ci_from_blb(const BlbResult& r, double point, double level, std::size_t n) {
  const double s = std::sqrt(static_cast<double>(n));
  return {point - r.upper_quantile / s, point - r.lower_quantile / s, level};
}

}  // namespace splitstat
