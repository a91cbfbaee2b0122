#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "splitstat/error.hpp"
#include "splitstat/random.hpp"

namespace splitstat {

using Row = std::span<const double>;

// Non-owning view over a row-major block of observations.
class SampleView {
 public:
  SampleView() = default;
  SampleView(std::span<const double> values, std::size_t dim) : values_(values), dim_(dim) {
    detail::require(dim > 0 && values.size() % dim == 0, Errc::invalid_argument,
                    "sample view size is not a multiple of the row dimension");
  }

  std::size_t size() const noexcept { return dim_ == 0 ? 0 : values_.size() / dim_; }
  std::size_t dim() const noexcept { return dim_; }
  Row row(std::size_t i) const noexcept { return values_.subspan(i * dim_, dim_); }
  Row operator[](std::size_t i) const noexcept { return row(i); }
  std::span<const double> values() const noexcept { return values_; }

 private:
  std::span<const double> values_;
  std::size_t dim_ = 1;
};

// Immutable N x d matrix of finite observations, rows are samples.
class DataTable {
 public:
  DataTable(std::vector<double> values, std::size_t dim, std::vector<std::string> column_names = {})
      : values_(std::move(values)), dim_(dim), names_(std::move(column_names)) {
    detail::require(dim_ >= 1, Errc::invalid_argument, "data table needs d >= 1 columns");
    detail::require(!values_.empty() && values_.size() % dim_ == 0, Errc::invalid_argument,
                    "data table needs N >= 1 complete rows");
    detail::require(names_.empty() || names_.size() == dim_, Errc::invalid_argument,
                    "column name count does not match d");
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (!std::isfinite(values_[i])) {
        detail::fail(Errc::invalid_argument, "non-finite entry at row " + std::to_string(i / dim_) +
                                                 ", column " + std::to_string(i % dim_));
      }
    }
  }

  static DataTable column(std::vector<double> values, std::string name = {}) {
    std::vector<std::string> names;
    if (!name.empty()) names.push_back(std::move(name));
    return DataTable(std::move(values), 1, std::move(names));
  }

  std::size_t rows() const noexcept { return values_.size() / dim_; }
  std::size_t dim() const noexcept { return dim_; }
  Row row(std::size_t i) const noexcept { return Row(values_).subspan(i * dim_, dim_); }
  std::span<const double> values() const noexcept { return values_; }
  const std::vector<std::string>& column_names() const noexcept { return names_; }
  SampleView view() const { return SampleView(values_, dim_); }
  operator SampleView() const { return view(); }

 private:
  std::vector<double> values_;
  std::size_t dim_;
  std::vector<std::string> names_;
};

// Assignment of rows to K disjoint non-empty blocks.
class BlockPartition {
 public:
  explicit BlockPartition(std::vector<std::size_t> assignment) : assignment_(std::move(assignment)) {
    detail::require(!assignment_.empty(), Errc::invalid_argument, "partition of an empty table");
    const std::size_t k = *std::max_element(assignment_.begin(), assignment_.end()) + 1;
    sizes_.assign(k, 0);
    for (auto b : assignment_) ++sizes_[b];
    for (std::size_t b = 0; b < k; ++b) {
      if (sizes_[b] == 0) {
        detail::fail(Errc::invalid_argument,
                     "block index " + std::to_string(b) + " is empty (gap in block indices)");
      }
    }
    offsets_.assign(k + 1, 0);
    for (std::size_t b = 0; b < k; ++b) offsets_[b + 1] = offsets_[b] + sizes_[b];
    members_.resize(assignment_.size());
    std::vector<std::size_t> cursor(offsets_.begin(), offsets_.end() - 1);
    for (std::size_t i = 0; i < assignment_.size(); ++i) members_[cursor[assignment_[i]]++] = i;
  }

  std::size_t blocks() const noexcept { return sizes_.size(); }
  std::size_t total() const noexcept { return assignment_.size(); }
  const std::vector<std::size_t>& assignment() const noexcept { return assignment_; }
  const std::vector<std::size_t>& sizes() const noexcept { return sizes_; }

  // Row indices of block k in ascending order.
  std::span<const std::size_t> members(std::size_t k) const noexcept {
    return std::span<const std::size_t>(members_).subspan(offsets_[k], sizes_[k]);
  }

 private:
  std::vector<std::size_t> assignment_;
  std::vector<std::size_t> sizes_;
  std::vector<std::size_t> offsets_;
  std::vector<std::size_t> members_;
};

inline BlockPartition partition_predefined(std::vector<std::size_t> assignment) {
  return BlockPartition(std::move(assignment));
}

// Random permutation cut into K contiguous chunks; the first N mod K chunks
// take one extra row.
inline BlockPartition partition_random(std::size_t n_rows, std::size_t k, SeedSpec seed) {
  detail::require(k >= 1, Errc::invalid_argument, "K must be positive");
  detail::require(k <= n_rows, Errc::invalid_argument,
                  "K = " + std::to_string(k) + " exceeds N = " + std::to_string(n_rows));
  std::vector<std::size_t> perm(n_rows);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng = derive_stream(seed, kPartitionLane, 0);
  shuffle(std::span<std::size_t>(perm), rng);

  const std::size_t base = n_rows / k;
  const std::size_t extra = n_rows % k;
  std::vector<std::size_t> assignment(n_rows);
  std::size_t pos = 0;
  for (std::size_t b = 0; b < k; ++b) {
    const std::size_t len = base + (b < extra ? 1 : 0);
    for (std::size_t j = 0; j < len; ++j) assignment[perm[pos++]] = b;
  }
  return BlockPartition(std::move(assignment));
}

inline BlockPartition partition_random(const DataTable& table, std::size_t k, SeedSpec seed) {
  return partition_random(table.rows(), k, seed);
}

struct BalanceReport {
  bool balanced;
  double min_ratio;  // min_k n_k / max_k n_k
  double max_ratio;  // max_k n_k / min_k n_k
};

// Block-size balance check: c1 <= n_a / n_b <= c2 over all block pairs.
inline BalanceReport check_balance(const BlockPartition& p, double c1 = 0.5, double c2 = 2.0) {
  const auto [lo, hi] = std::minmax_element(p.sizes().begin(), p.sizes().end());
  const double min_ratio = static_cast<double>(*lo) / static_cast<double>(*hi);
  const double max_ratio = static_cast<double>(*hi) / static_cast<double>(*lo);
  return {c1 <= min_ratio && max_ratio <= c2, min_ratio, max_ratio};
}

// Copies each block's rows contiguously (in ascending row order).
inline std::vector<DataTable> split_blocks(const DataTable& table, const BlockPartition& p) {
  detail::require(p.total() == table.rows(), Errc::invalid_argument,
                  "partition covers " + std::to_string(p.total()) + " rows, table has " +
                      std::to_string(table.rows()));
  std::vector<DataTable> out;
  out.reserve(p.blocks());
  const std::size_t d = table.dim();
  for (std::size_t k = 0; k < p.blocks(); ++k) {
    std::vector<double> vals;
    vals.reserve(p.sizes()[k] * d);
    for (auto i : p.members(k)) {
      const Row r = table.row(i);
      vals.insert(vals.end(), r.begin(), r.end());
    }
    out.emplace_back(std::move(vals), d, table.column_names());
  }
  return out;
}

// Neumaier compensated summation.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

// Runs fn(i) for i in [0, n) on `threads` workers with static striding.
// Results must be written to per-index slots for schedule independence.
template <class Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  threads = std::min(threads, n);
  std::vector<std::exception_ptr> errors(threads);
  {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        try {
          for (std::size_t i = t; i < n; i += threads) fn(i);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace splitstat
