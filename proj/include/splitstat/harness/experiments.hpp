#pragma once

// Monte Carlo experiment suites: interval coverage, MSE ratios, degenerate
// variance inflation, time evolution of interval-width errors, independence
// test size/power, timing and budgeted throughput.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "splitstat/dcov.hpp"
#include "splitstat/harness/distributions.hpp"
#include "splitstat/harness/report.hpp"
#include "splitstat/resample.hpp"
#include "splitstat/symstat.hpp"
#include "splitstat/variance.hpp"

namespace splitstat::harness {

enum class Method { db, pdb, blb, sdb };

inline std::string to_string(Method m) {
  switch (m) {
    case Method::db: return "DB";
    case Method::pdb: return "PDB";
    case Method::blb: return "BLB";
    case Method::sdb: return "SDB";
  }
  return "?";
}

inline Method method_by_name(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (s == "db") return Method::db;
  if (s == "pdb") return Method::pdb;
  if (s == "blb") return Method::blb;
  if (s == "sdb") return Method::sdb;
  detail::fail(Errc::invalid_argument, "unknown method '" + s + "' (db, pdb, blb, sdb)");
}

// Which Gini evaluator runs inside the engines: pairwise enumeration (the
// O(n^2) cost the timing experiments are about) or the sorted O(n log n) form.
enum class GiniImpl { exact, sorted };

inline GiniImpl gini_impl_by_name(const std::string& s) {
  if (s == "exact") return GiniImpl::exact;
  if (s == "sorted") return GiniImpl::sorted;
  detail::fail(Errc::invalid_argument, "unknown gini implementation '" + s + "' (exact, sorted)");
}

template <class F>
decltype(auto) with_gini(GiniImpl impl, F&& f) {
  if (impl == GiniImpl::sorted) return f(SortedGini{});
  return f(UStatistic<GiniKernel>(GiniKernel{}));
}

struct EngineSettings {
  std::size_t b = 200;              // DB / PDB replicates, SDB subsets
  std::size_t blb_resamples = 100;  // B inside each BLB subset
  std::size_t blb_subsets = 0;      // 0 means K disjoint blocks
  Inflation inflation = Inflation::distributed;
  std::optional<TimeBudget> budget;
  double level = 0.95;
};

struct MethodRun {
  bool ok = false;
  ConfidenceInterval ci;
  std::size_t completed = 0;
  double elapsed_seconds = 0.0;
  std::string note;
};

// Runs one engine on a partitioned sample and builds its interval around
// T_{N,K}. Empty or single-replicate results come back with ok = false.
template <BlockStatistic S>
MethodRun run_method(Method method, const DataTable& data, const BlockPartition& partition,
                     std::span<const DataTable> blocks, const DistributedEstimate& est, const S& stat, SeedSpec seed,
                     const EngineSettings& cfg, const ProgressObserver& observer = {}) {
  const std::size_t n = data.rows();
  const std::size_t k = partition.blocks();
  const RunOptions run{cfg.budget, observer};
  MethodRun out;
  try {
    switch (method) {
      case Method::db: {
        const auto r = db_run(blocks, stat, cfg.b, seed, run);
        out.completed = r.completed();
        out.elapsed_seconds = r.elapsed_seconds;
        out.ci = ci_equal_tail(r, est.aggregate, cfg.level, n);
        break;
      }
      case Method::pdb: {
        const auto r = pdb_run(est, PdbMode::nondegenerate, cfg.b, seed, run);
        out.completed = r.completed();
        out.elapsed_seconds = r.elapsed_seconds;
        out.ci = ci_equal_tail(r, est.aggregate, cfg.level, n);
        break;
      }
      case Method::blb: {
        BlbOptions o;
        o.subset_mode = SubsetMode::disjoint_blocks;
        o.partition = partition;
        o.subsets = cfg.blb_subsets == 0 ? k : std::min(cfg.blb_subsets, k);
        o.resamples = cfg.blb_resamples;
        o.inflation = cfg.inflation;
        o.inflation_blocks = k;
        o.level = cfg.level;
        o.run = run;
        const auto r = blb_run(data, stat, seed, o);
        out.completed = r.completed;
        out.elapsed_seconds = r.elapsed_seconds;
        out.ci = ci_from_blb(r, est.aggregate, cfg.level, n);
        break;
      }
      case Method::sdb: {
        SdbOptions o;
        o.subset_size = n / k;
        o.subsets = cfg.b;
        o.inflation = cfg.inflation;
        o.inflation_blocks = k;
        o.run = run;
        const auto r = sdb_run(data, stat, seed, o);
        out.completed = r.completed();
        out.elapsed_seconds = r.elapsed_seconds;
        out.ci = ci_equal_tail(r, est.aggregate, cfg.level, n);
        break;
      }
    }
    out.ok = true;
  } catch (const EmptyResultError& e) {
    out.completed = e.completed();
    out.note = "empty";
  } catch (const Error& e) {
    if (e.code() != Errc::insufficient_replicates) throw;
    out.completed = 1;
    out.note = "insufficient-replicates";
  }
  return out;
}

// Seeds of one replication: the data, the partition of each K and the engine
// of each (method, K) are independent children of the master seed.
struct ReplicationSeeds {
  SeedSpec rep;
  SeedSpec data() const { return rep.child(0, 0); }
  SeedSpec partition(std::size_t k) const { return rep.child(1, k); }
  SeedSpec engine(Method m, std::size_t k) const { return rep.child(2 + static_cast<std::uint64_t>(m), k); }
};

inline ReplicationSeeds replication_seeds(std::uint64_t master, std::size_t r) {
  return {SeedSpec{master}.child(kDataLane, r)};
}

namespace internal {

inline double mean_of(std::span<const double> v) {
  CompensatedSum s;
  for (double x : v) s.add(x);
  return v.empty() ? std::nan("") : s.value() / static_cast<double>(v.size());
}

inline double variance_of(std::span<const double> v) {
  const double m = mean_of(v);
  CompensatedSum s;
  for (double x : v) s.add((x - m) * (x - m));
  return v.size() < 2 ? std::nan("") : s.value() / static_cast<double>(v.size() - 1);
}

inline std::string join_sizes(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + std::to_string(v[i]);
  return s;
}

inline void check_grid(const std::vector<std::size_t>& k_grid, std::size_t n) {
  detail::require(!k_grid.empty(), Errc::invalid_argument, "K grid is empty");
  for (auto k : k_grid) {
    detail::require(k >= 1 && k <= n, Errc::invalid_argument, "K = " + std::to_string(k) + " outside [1, N]");
  }
}

}  // namespace internal

// ---------------------------------------------------------------------------
// Coverage of equal-tail intervals

struct CoverageConfig {
  Univariate dist = Univariate::normal();
  std::size_t n = 10000;
  std::vector<std::size_t> k_grid{100};
  std::vector<Method> methods{Method::db, Method::pdb};
  std::size_t replications = 500;
  EngineSettings engine;
  GiniImpl impl = GiniImpl::sorted;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
};

struct CoverageCell {
  Method method = Method::db;
  std::size_t k = 0;
  std::size_t replications = 0;
  std::size_t valid = 0;
  std::size_t na = 0;
  double coverage = 0.0;
  double mean_width = 0.0;
  double mean_completed = 0.0;
};

struct CoverageResult {
  double theta = 0.0;
  std::vector<CoverageCell> cells;

  const CoverageCell& cell(Method m, std::size_t k) const {
    for (const auto& c : cells) {
      if (c.method == m && c.k == k) return c;
    }
    detail::fail(Errc::invalid_argument, "no coverage cell for " + to_string(m) + ", K = " + std::to_string(k));
  }
};

inline CoverageResult simulate_coverage(const CoverageConfig& cfg) {
  internal::check_grid(cfg.k_grid, cfg.n);
  detail::require(cfg.replications >= 1, Errc::invalid_argument, "replications must be positive");
  const double theta = true_gini(cfg.dist);
  const std::size_t nk = cfg.k_grid.size();
  const std::size_t nm = cfg.methods.size();
  std::vector<MethodRun> runs(cfg.replications * nk * nm);
  // Budgeted runs share one worker so iteration counts stay comparable.
  const std::size_t threads = cfg.engine.budget ? 1 : cfg.threads;

  with_gini(cfg.impl, [&](const auto& stat) {
    parallel_for(cfg.replications, threads, [&](std::size_t r) {
      const auto seeds = replication_seeds(cfg.seed, r);
      const DataTable data = draw_table(cfg.dist, cfg.n, seeds.data());
      for (std::size_t ki = 0; ki < nk; ++ki) {
        const std::size_t k = cfg.k_grid[ki];
        const auto partition = partition_random(data, k, seeds.partition(k));
        const auto blocks = split_blocks(data, partition);
        const auto est = distributed_statistic(std::span<const DataTable>(blocks), SortedGini{});
        for (std::size_t mi = 0; mi < nm; ++mi) {
          const Method m = cfg.methods[mi];
          runs[(r * nk + ki) * nm + mi] =
              run_method(m, data, partition, blocks, est, stat, seeds.engine(m, k), cfg.engine);
        }
      }
    });
    return 0;
  });

  CoverageResult out;
  out.theta = theta;
  for (std::size_t ki = 0; ki < nk; ++ki) {
    for (std::size_t mi = 0; mi < nm; ++mi) {
      CoverageCell c;
      c.method = cfg.methods[mi];
      c.k = cfg.k_grid[ki];
      c.replications = cfg.replications;
      double hits = 0.0;
      CompensatedSum width;
      CompensatedSum completed;
      for (std::size_t r = 0; r < cfg.replications; ++r) {
        const auto& run = runs[(r * nk + ki) * nm + mi];
        completed.add(static_cast<double>(run.completed));
        if (!run.ok) {
          ++c.na;
          continue;
        }
        ++c.valid;
        hits += run.ci.contains(theta) ? 1.0 : 0.0;
        width.add(run.ci.width());
      }
      c.coverage = c.valid ? hits / static_cast<double>(c.valid) : std::nan("");
      c.mean_width = c.valid ? width.value() / static_cast<double>(c.valid) : std::nan("");
      c.mean_completed = completed.value() / static_cast<double>(cfg.replications);
      out.cells.push_back(c);
    }
  }
  return out;
}

inline Report coverage_report(const CoverageConfig& cfg, const CoverageResult& res) {
  Report rep;
  rep.experiment = "coverage";
  rep.columns = {"scenario", "method", "K", "N", "B",         "level",          "replications",
                 "valid",    "na",     "coverage", "mean_width", "mean_completed", "theta"};
  for (const auto& c : res.cells) {
    rep.add({cfg.dist.name(), to_string(c.method), count(c.k), count(cfg.n), count(cfg.engine.b), cfg.engine.level,
             count(c.replications), count(c.valid), count(c.na), real_or_na(c.coverage), real_or_na(c.mean_width),
             c.mean_completed, res.theta});
  }
  rep.meta["seed"] = cfg.seed;
  rep.meta["budget_seconds"] = cfg.engine.budget ? nlohmann::json(cfg.engine.budget->seconds) : nlohmann::json();
  rep.meta["inflation"] = cfg.engine.inflation == Inflation::distributed ? "distributed" : "pooled";
  rep.meta["gini"] = cfg.impl == GiniImpl::exact ? "exact" : "sorted";
  return rep;
}

// ---------------------------------------------------------------------------
// Relative MSE of U_{N,K} and of the jackknife variance estimate

struct MseConfig {
  Univariate dist = Univariate::normal();
  std::size_t n = 10000;
  std::vector<std::size_t> k_grid{1, 10, 50, 100};
  std::size_t replications = 1000;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
};

struct MseCell {
  std::size_t k = 0;
  double mse_u = 0.0;         // MSE(U_{N,K}) about theta
  double mse_u_full = 0.0;    // MSE(U_N)
  double ratio_u = 0.0;
  double var_target = 0.0;    // Var(U_{N,K})
  double mse_var = 0.0;       // MSE(N^{-1} S^2_{U_{N,K}}) about Var(U_{N,K})
  double mse_var_full = 0.0;  // MSE(N^{-1} S^2_{U_N}) about Var(U_N)
  double ratio_var = 0.0;
  double bias_var = 0.0;      // |mean estimate - target|
  double variance_var = 0.0;  // variance of the estimate over replications
};

struct MseResult {
  double theta = 0.0;
  double var_full = 0.0;
  std::vector<MseCell> cells;

  const MseCell& cell(std::size_t k) const {
    for (const auto& c : cells) {
      if (c.k == k) return c;
    }
    detail::fail(Errc::invalid_argument, "no MSE cell for K = " + std::to_string(k));
  }
};

inline MseResult simulate_mse_ratio(const MseConfig& cfg) {
  internal::check_grid(cfg.k_grid, cfg.n);
  const std::size_t reps = cfg.replications;
  const std::size_t nk = cfg.k_grid.size();
  std::vector<double> u_full(reps);
  std::vector<double> v_full(reps);
  std::vector<double> u_k(reps * nk);
  std::vector<double> v_k(reps * nk);
  std::vector<std::vector<std::size_t>> sizes(nk);
  for (std::size_t ki = 0; ki < nk; ++ki) sizes[ki] = detail::even_sizes(cfg.n, cfg.k_grid[ki]);

  parallel_for(reps, cfg.threads, [&](std::size_t r) {
    const auto seeds = replication_seeds(cfg.seed, r);
    const DataTable data = draw_table(cfg.dist, cfg.n, seeds.data());
    u_full[r] = SortedGini{}.value(data.view());
    v_full[r] = jackknife_gini_variance(data.values()).var_hat;
    for (std::size_t ki = 0; ki < nk; ++ki) {
      const std::size_t k = cfg.k_grid[ki];
      if (k == 1) {
        u_k[r * nk + ki] = u_full[r];
        v_k[r * nk + ki] = v_full[r];
        continue;
      }
      const auto partition = partition_random(data, k, seeds.partition(k));
      const auto blocks = split_blocks(data, partition);
      u_k[r * nk + ki] = distributed_statistic(std::span<const DataTable>(blocks), SortedGini{}).aggregate;
      v_k[r * nk + ki] = distributed_jackknife_variance(std::span<const DataTable>(blocks)).value;
    }
  });

  MseResult out;
  out.theta = true_gini(cfg.dist);
  out.var_full = gini_u_variance(cfg.dist, cfg.n);
  const auto mse = [](std::span<const double> v, double target) {
    CompensatedSum s;
    for (double x : v) s.add((x - target) * (x - target));
    return s.value() / static_cast<double>(v.size());
  };
  const double mse_u_full = mse(u_full, out.theta);
  const double mse_v_full = mse(v_full, out.var_full);
  for (std::size_t ki = 0; ki < nk; ++ki) {
    std::vector<double> uk(reps);
    std::vector<double> vk(reps);
    for (std::size_t r = 0; r < reps; ++r) {
      uk[r] = u_k[r * nk + ki];
      vk[r] = v_k[r * nk + ki];
    }
    MseCell c;
    c.k = cfg.k_grid[ki];
    c.var_target = gini_distributed_variance(cfg.dist, sizes[ki]);
    c.mse_u = mse(uk, out.theta);
    c.mse_u_full = mse_u_full;
    c.ratio_u = c.mse_u / mse_u_full;
    c.mse_var = mse(vk, c.var_target);
    c.mse_var_full = mse_v_full;
    c.ratio_var = c.mse_var / mse_v_full;
    c.bias_var = std::abs(internal::mean_of(vk) - c.var_target);
    c.variance_var = internal::variance_of(vk);
    out.cells.push_back(c);
  }
  return out;
}

inline Report mse_report(const MseConfig& cfg, const MseResult& res) {
  Report rep;
  rep.experiment = "mse";
  rep.columns = {"scenario", "K",       "N",         "replications", "mse_u",    "mse_u_full", "ratio_u",
                 "var_target", "mse_var", "mse_var_full", "ratio_var", "bias_var", "variance_var"};
  for (const auto& c : res.cells) {
    rep.add({cfg.dist.name(), count(c.k), count(cfg.n), count(cfg.replications), c.mse_u, c.mse_u_full, c.ratio_u,
             c.var_target, c.mse_var, c.mse_var_full, c.ratio_var, c.bias_var, c.variance_var});
  }
  rep.meta["seed"] = cfg.seed;
  rep.meta["theta"] = res.theta;
  rep.meta["var_full"] = res.var_full;
  return rep;
}

// ---------------------------------------------------------------------------
// Degenerate kernel: Var(T_{N,K}) against K Var(T_N)

struct DegenerateConfig {
  std::size_t n = 4000;
  std::vector<std::size_t> k_grid{10, 40};
  std::size_t replications = 1000;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
};

struct DegenerateCell {
  std::size_t k = 0;
  double var_k = 0.0;
  double var_full = 0.0;
  double ratio_over_k = 0.0;  // Var(T_{N,K}) / (K Var(T_N))
};

inline std::vector<DegenerateCell> simulate_degenerate_variance(const DegenerateConfig& cfg) {
  internal::check_grid(cfg.k_grid, cfg.n);
  const std::size_t reps = cfg.replications;
  const std::size_t nk = cfg.k_grid.size();
  std::vector<double> full(reps);
  std::vector<double> dist(reps * nk);
  const ProductMoment stat(0.0);
  const Univariate law = Univariate::normal(0.0, 1.0);
  parallel_for(reps, cfg.threads, [&](std::size_t r) {
    const auto seeds = replication_seeds(cfg.seed, r);
    const DataTable data = draw_table(law, cfg.n, seeds.data());
    full[r] = stat.value(data.view());
    for (std::size_t ki = 0; ki < nk; ++ki) {
      const auto partition = partition_random(data, cfg.k_grid[ki], seeds.partition(cfg.k_grid[ki]));
      const auto blocks = split_blocks(data, partition);
      dist[r * nk + ki] = distributed_statistic(std::span<const DataTable>(blocks), stat).aggregate;
    }
  });
  const double var_full = internal::variance_of(full);
  std::vector<DegenerateCell> out;
  for (std::size_t ki = 0; ki < nk; ++ki) {
    std::vector<double> v(reps);
    for (std::size_t r = 0; r < reps; ++r) v[r] = dist[r * nk + ki];
    DegenerateCell c;
    c.k = cfg.k_grid[ki];
    c.var_k = internal::variance_of(v);
    c.var_full = var_full;
    c.ratio_over_k = c.var_k / (static_cast<double>(c.k) * var_full);
    out.push_back(c);
  }
  return out;
}

inline Report degenerate_report(const DegenerateConfig& cfg, const std::vector<DegenerateCell>& cells) {
  Report rep;
  rep.experiment = "degenerate";
  rep.columns = {"K", "N", "replications", "var_k", "var_full", "ratio_over_k"};
  for (const auto& c : cells) {
    rep.add({count(c.k), count(cfg.n), count(cfg.replications), c.var_k, c.var_full, c.ratio_over_k});
  }
  rep.meta["seed"] = cfg.seed;
  return rep;
}

// ---------------------------------------------------------------------------
// Time evolution of |d_hat - d| / d for the interval width d

struct TimeEvolutionConfig {
  Univariate dist = Univariate::normal();
  std::size_t n = 10000;
  std::vector<std::size_t> k_grid{20, 100};
  std::vector<Method> methods{Method::db, Method::pdb, Method::blb, Method::sdb};
  double budget_seconds = 2.0;
  std::size_t ticks = 20;
  std::size_t replications = 3;
  std::size_t oracle_replications = 500;
  std::size_t max_iterations = 100000;
  std::size_t blb_resamples = 100;
  Inflation inflation = Inflation::distributed;
  double level = 0.95;
  GiniImpl impl = GiniImpl::exact;
  std::uint64_t seed = 1;
};

struct TimePoint {
  Method method = Method::db;
  std::size_t k = 0;
  double time = 0.0;
  double relative_error = 1.0;  // mean over replications
  double true_width = 0.0;
};

// Width of the central `level` interval of T_{N,K} over fresh samples.
inline double oracle_width(const Univariate& dist, std::size_t n, std::size_t k, std::size_t reps, double level,
                           std::uint64_t seed) {
  std::vector<double> t(reps);
  for (std::size_t r = 0; r < reps; ++r) {
    const auto seeds = replication_seeds(seed ^ 0x6f7261636c65ULL, r);
    const DataTable data = draw_table(dist, n, seeds.data());
    const auto blocks = split_blocks(data, partition_random(data, k, seeds.partition(k)));
    t[r] = distributed_statistic(std::span<const DataTable>(blocks), SortedGini{}).aggregate;
  }
  std::sort(t.begin(), t.end());
  const double tau = 1.0 - level;
  return sorted_quantile(t, 1.0 - tau / 2.0) - sorted_quantile(t, tau / 2.0);
}

// Width estimate from the values an engine has produced so far; nullopt
// until two replicates (or one BLB subset) exist.
inline std::optional<double> running_width(Method m, std::span<const double> values, double level, std::size_t n) {
  if (m == Method::blb) {
    if (values.empty()) return std::nullopt;
    return internal::mean_of(values);
  }
  if (values.size() < 2) return std::nullopt;
  std::vector<double> s(values.begin(), values.end());
  std::sort(s.begin(), s.end());
  const double tau = 1.0 - level;
  return (sorted_quantile(s, 1.0 - tau / 2.0) - sorted_quantile(s, tau / 2.0)) / std::sqrt(static_cast<double>(n));
}

inline std::vector<TimePoint> simulate_time_evolution(const TimeEvolutionConfig& cfg,
                                                      std::vector<double>* true_widths = nullptr) {
  internal::check_grid(cfg.k_grid, cfg.n);
  detail::require(cfg.ticks >= 1 && cfg.budget_seconds > 0.0, Errc::invalid_argument, "need ticks and a budget");
  std::vector<double> grid(cfg.ticks);
  for (std::size_t i = 0; i < cfg.ticks; ++i) {
    grid[i] = cfg.budget_seconds * static_cast<double>(i + 1) / static_cast<double>(cfg.ticks);
  }
  std::vector<TimePoint> out;
  for (std::size_t k : cfg.k_grid) {
    const double d = oracle_width(cfg.dist, cfg.n, k, cfg.oracle_replications, cfg.level, cfg.seed);
    if (true_widths) true_widths->push_back(d);
    for (Method m : cfg.methods) {
      std::vector<CompensatedSum> err(cfg.ticks);
      for (std::size_t r = 0; r < cfg.replications; ++r) {
        const auto seeds = replication_seeds(cfg.seed, r);
        const DataTable data = draw_table(cfg.dist, cfg.n, seeds.data());
        const auto partition = partition_random(data, k, seeds.partition(k));
        const auto blocks = split_blocks(data, partition);
        const auto est = distributed_statistic(std::span<const DataTable>(blocks), SortedGini{});
        // Relative error in force at each tick; 1 until the first estimate.
        std::vector<double> at_tick(cfg.ticks, 1.0);
        std::size_t next = 0;
        double current = 1.0;
        const ProgressObserver observer = [&](double elapsed, std::span<const double> values) {
          while (next < cfg.ticks && grid[next] < elapsed) at_tick[next++] = current;
          if (next >= cfg.ticks) return;
          if (m == Method::pdb && values.size() % 64 != 0) return;  // cheap engine, sample the curve
          if (const auto w = running_width(m, values, cfg.level, cfg.n)) current = std::abs(*w - d) / d;
        };
        EngineSettings es;
        es.b = cfg.max_iterations;
        es.blb_resamples = cfg.blb_resamples;
        es.inflation = cfg.inflation;
        es.budget = TimeBudget{cfg.budget_seconds};
        es.level = cfg.level;
        const auto run = with_gini(cfg.impl, [&](const auto& stat) {
          return run_method(m, data, partition, blocks, est, stat, seeds.engine(m, k), es, observer);
        });
        if (run.ok) {
          // Final estimate holds from the last observed tick to the end.
          const double final_err = std::abs(run.ci.width() - d) / d;
          while (next < cfg.ticks && grid[next] < run.elapsed_seconds) at_tick[next++] = current;
          while (next < cfg.ticks) at_tick[next++] = final_err;
        }
        for (std::size_t i = 0; i < cfg.ticks; ++i) err[i].add(at_tick[i]);
      }
      for (std::size_t i = 0; i < cfg.ticks; ++i) {
        out.push_back({m, k, grid[i], err[i].value() / static_cast<double>(cfg.replications), d});
      }
    }
  }
  return out;
}

inline Report time_evolution_report(const TimeEvolutionConfig& cfg, const std::vector<TimePoint>& pts) {
  Report rep;
  rep.experiment = "time-evolution";
  rep.columns = {"scenario", "method", "K", "N", "time", "relative_error", "true_width"};
  for (const auto& p : pts) {
    rep.add({cfg.dist.name(), to_string(p.method), count(p.k), count(cfg.n), p.time, p.relative_error, p.true_width});
  }
  rep.meta["seed"] = cfg.seed;
  rep.meta["budget_seconds"] = cfg.budget_seconds;
  rep.meta["replications"] = cfg.replications;
  rep.meta["oracle_replications"] = cfg.oracle_replications;
  return rep;
}

// ---------------------------------------------------------------------------
// Size and power of the distance-covariance tests

struct DcovConfig {
  PairScenario scenario = PairScenario::I;
  std::vector<std::size_t> p_grid{5};
  std::vector<std::size_t> k_grid{20, 100};
  double rho = 0.0;
  std::size_t n = 10000;
  std::size_t replications = 500;
  double tau = 0.05;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
};

struct DcovCell {
  std::size_t p = 0;
  std::size_t k = 0;
  std::size_t replications = 0;
  std::size_t valid_var = 0;
  std::size_t valid_block = 0;
  double reject_var = 0.0;    // T_Var rejection rate over valid replications
  double reject_block = 0.0;  // T_block rejection rate
  double mean_dm = 0.0;
};

struct DcovResult {
  std::vector<DcovCell> cells;

  const DcovCell& cell(std::size_t p, std::size_t k) const {
    for (const auto& c : cells) {
      if (c.p == p && c.k == k) return c;
    }
    detail::fail(Errc::invalid_argument, "no dcov cell for p = " + std::to_string(p) + ", K = " + std::to_string(k));
  }
};

inline DcovResult simulate_dcov(const DcovConfig& cfg) {
  internal::check_grid(cfg.k_grid, cfg.n);
  for (auto k : cfg.k_grid) {
    detail::require(cfg.n / k >= 4, Errc::invalid_argument, "blocks need at least 4 rows");
  }
  const std::size_t np = cfg.p_grid.size();
  const std::size_t nk = cfg.k_grid.size();
  struct Slot {
    TestReport var;
    TestReport block;
    double dm = std::nan("");
  };
  std::vector<Slot> slots(cfg.replications * np * nk);
  std::vector<PairGenerator> gens;
  for (auto p : cfg.p_grid) gens.emplace_back(PairSpec{cfg.scenario, p, cfg.rho});

  parallel_for(cfg.replications, cfg.threads, [&](std::size_t r) {
    const auto seeds = replication_seeds(cfg.seed, r);
    for (std::size_t pi = 0; pi < np; ++pi) {
      Rng rng = derive_stream(seeds.data(), kDataLane, cfg.p_grid[pi]);
      const PairSample pair = gens[pi].draw(cfg.n, rng);
      for (std::size_t ki = 0; ki < nk; ++ki) {
        const std::size_t k = cfg.k_grid[ki];
        const auto partition = partition_random(cfg.n, k, seeds.partition(k));
        const auto summary = dcov_distributed(pair, partition);
        Slot& s = slots[(r * np + pi) * nk + ki];
        s.var = test_var(summary, cfg.tau);
        if (k >= 2) {
          s.block = test_block_var(summary, cfg.tau);
          if (s.block.valid) s.dm = summary.aggregate_yz / std::sqrt(s.block.variance);
        } else {
          s.block.valid = false;
        }
      }
    }
  });

  DcovResult out;
  for (std::size_t pi = 0; pi < np; ++pi) {
    for (std::size_t ki = 0; ki < nk; ++ki) {
      DcovCell c;
      c.p = cfg.p_grid[pi];
      c.k = cfg.k_grid[ki];
      c.replications = cfg.replications;
      double rv = 0.0;
      double rb = 0.0;
      CompensatedSum dm;
      for (std::size_t r = 0; r < cfg.replications; ++r) {
        const Slot& s = slots[(r * np + pi) * nk + ki];
        if (s.var.valid) {
          ++c.valid_var;
          rv += s.var.reject ? 1.0 : 0.0;
        }
        if (s.block.valid) {
          ++c.valid_block;
          rb += s.block.reject ? 1.0 : 0.0;
          dm.add(s.dm);
        }
      }
      c.reject_var = c.valid_var ? rv / static_cast<double>(c.valid_var) : std::nan("");
      c.reject_block = c.valid_block ? rb / static_cast<double>(c.valid_block) : std::nan("");
      c.mean_dm = c.valid_block ? dm.value() / static_cast<double>(c.valid_block) : std::nan("");
      out.cells.push_back(c);
    }
  }
  return out;
}

inline Report dcov_report(const DcovConfig& cfg, const DcovResult& res) {
  Report rep;
  rep.experiment = "dcov";
  rep.columns = {"scenario",  "p",           "K",          "N",            "rho",     "tau",
                 "replications", "valid_var", "valid_block", "reject_var", "reject_block", "mean_dm"};
  for (const auto& c : res.cells) {
    rep.add({to_string(cfg.scenario), count(c.p), count(c.k), count(cfg.n), cfg.rho, cfg.tau, count(c.replications),
             count(c.valid_var), count(c.valid_block), real_or_na(c.reject_var), real_or_na(c.reject_block),
             real_or_na(c.mean_dm)});
  }
  rep.meta["seed"] = cfg.seed;
  rep.meta["quantity"] = cfg.rho > 0.0 ? "power" : "size";
  return rep;
}

// ---------------------------------------------------------------------------
// Benchmarks

struct TimingConfig {
  Univariate dist = Univariate::normal();
  std::size_t n = 20000;
  std::vector<std::size_t> k_grid{1, 20};
  std::size_t repeats = 3;
  GiniImpl impl = GiniImpl::exact;
  double a = 2.0;  // cost exponent for the predicted ratio
  std::uint64_t seed = 1;
};

struct TimingCell {
  std::size_t k = 0;
  double seconds = 0.0;          // fastest of the repeats
  double observed_ratio = 0.0;   // against the first grid entry
  double predicted_ratio = 0.0;  // (K / K_first)^{1-a}
  double value = 0.0;
};

// Wall time of T_{N,K} with the partition and block copies prepared up front.
inline std::vector<TimingCell> bench_timing(const TimingConfig& cfg) {
  internal::check_grid(cfg.k_grid, cfg.n);
  const DataTable data = draw_table(cfg.dist, cfg.n, SeedSpec{cfg.seed}.child(kDataLane, 0));
  std::vector<TimingCell> out;
  for (std::size_t k : cfg.k_grid) {
    const auto blocks = split_blocks(data, partition_random(data, k, SeedSpec{cfg.seed}.child(1, k)));
    TimingCell c;
    c.k = k;
    c.seconds = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < std::max<std::size_t>(1, cfg.repeats); ++i) {
      const auto t0 = std::chrono::steady_clock::now();
      c.value = with_gini(cfg.impl, [&](const auto& stat) {
        return distributed_statistic(std::span<const DataTable>(blocks), stat).aggregate;
      });
      c.seconds = std::min(c.seconds, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    out.push_back(c);
  }
  for (auto& c : out) {
    c.observed_ratio = c.seconds / out.front().seconds;
    c.predicted_ratio = std::pow(static_cast<double>(c.k) / static_cast<double>(out.front().k), 1.0 - cfg.a);
  }
  return out;
}

inline Report timing_report(const TimingConfig& cfg, const std::vector<TimingCell>& cells) {
  Report rep;
  rep.experiment = "bench-timing";
  rep.columns = {"K", "N", "seconds", "observed_ratio", "predicted_ratio", "value"};
  for (const auto& c : cells) {
    rep.add({count(c.k), count(cfg.n), c.seconds, c.observed_ratio, c.predicted_ratio, c.value});
  }
  rep.meta["gini"] = cfg.impl == GiniImpl::exact ? "exact" : "sorted";
  rep.meta["a"] = cfg.a;
  return rep;
}

struct ThroughputConfig {
  Univariate dist = Univariate::normal();
  std::size_t n = 100000;
  std::vector<std::size_t> k_grid{100};
  std::vector<Method> methods{Method::db, Method::pdb, Method::blb, Method::sdb};
  double budget_seconds = 2.0;
  std::size_t max_iterations = 100000;
  std::size_t blb_resamples = 100;
  Inflation inflation = Inflation::distributed;
  GiniImpl impl = GiniImpl::exact;
  std::uint64_t seed = 1;
};

struct ThroughputCell {
  Method method = Method::db;
  std::size_t k = 0;
  std::size_t completed = 0;
  double elapsed_seconds = 0.0;
  std::string status;
};

// Iterations each engine completes within the same budget on one sample,
// single-threaded. For BLB an iteration is one subset of B resamples.
inline std::vector<ThroughputCell> bench_throughput(const ThroughputConfig& cfg) {
  internal::check_grid(cfg.k_grid, cfg.n);
  const DataTable data = draw_table(cfg.dist, cfg.n, SeedSpec{cfg.seed}.child(kDataLane, 0));
  std::vector<ThroughputCell> out;
  for (std::size_t k : cfg.k_grid) {
    const auto partition = partition_random(data, k, SeedSpec{cfg.seed}.child(1, k));
    const auto blocks = split_blocks(data, partition);
    const auto est = distributed_statistic(std::span<const DataTable>(blocks), SortedGini{});
    for (Method m : cfg.methods) {
      EngineSettings es;
      es.b = cfg.max_iterations;
      es.blb_resamples = cfg.blb_resamples;
      es.inflation = cfg.inflation;
      es.budget = TimeBudget{cfg.budget_seconds};
      const auto run = with_gini(cfg.impl, [&](const auto& stat) {
        return run_method(m, data, partition, blocks, est, stat, SeedSpec{cfg.seed}.child(2, k), es);
      });
      out.push_back({m, k, run.completed, run.elapsed_seconds, run.ok ? "ok" : run.note});
    }
  }
  return out;
}

inline Report throughput_report(const ThroughputConfig& cfg, const std::vector<ThroughputCell>& cells) {
  Report rep;
  rep.experiment = "bench-throughput";
  rep.columns = {"method", "K", "N", "budget_seconds", "completed", "elapsed_seconds", "status"};
  for (const auto& c : cells) {
    rep.add({to_string(c.method), count(c.k), count(cfg.n), cfg.budget_seconds, count(c.completed),
             c.elapsed_seconds, c.status});
  }
  rep.meta["gini"] = cfg.impl == GiniImpl::exact ? "exact" : "sorted";
  rep.meta["inflation"] = cfg.inflation == Inflation::distributed ? "distributed" : "pooled";
  return rep;
}

}  // namespace splitstat::harness
