#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "catch_amalgamated.hpp"
#include "splitstat/dcov.hpp"

using namespace splitstat;

namespace {

using Matrix = std::vector<std::vector<double>>;

Matrix distances(const DataTable& t) {
  const std::size_t n = t.rows();
  Matrix a(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t d = 0; d < t.dim(); ++d) s += (t.row(i)[d] - t.row(j)[d]) * (t.row(i)[d] - t.row(j)[d]);
      a[i][j] = std::sqrt(s);
    }
  }
  return a;
}

// Mean over ordered distinct 4-tuples of a_ij b_ij + a_ij b_kl - 2 a_ij b_ik.
double quadruple_sum(const DataTable& y, const DataTable& z) {
  const auto a = distances(y);
  const auto b = distances(z);
  const std::size_t n = y.rows();
  long double sum = 0.0L;
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      for (std::size_t k = 0; k < n; ++k) {
        if (k == i || k == j) continue;
        for (std::size_t l = 0; l < n; ++l) {
          if (l == i || l == j || l == k) continue;
          sum += a[i][j] * b[i][j] + a[i][j] * b[k][l] - 2.0 * a[i][j] * b[i][k];
          ++count;
        }
      }
    }
  }
  return static_cast<double>(sum / static_cast<long double>(count));
}

// U-centred matrices written out entry by entry.
double u_centered(const DataTable& y, const DataTable& z) {
  const std::size_t n = y.rows();
  const double nn = static_cast<double>(n);
  const auto center = [&](const Matrix& m) {
    std::vector<double> row(n, 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) row[i] += m[i][j];
      total += row[i];
    }
    Matrix c(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i != j) c[i][j] = m[i][j] - row[i] / (nn - 2) - row[j] / (nn - 2) + total / ((nn - 1) * (nn - 2));
      }
    }
    return c;
  };
  const auto a = center(distances(y));
  const auto b = center(distances(z));
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) s += a[i][j] * b[i][j];
  }
  return s / (nn * (nn - 3));
}

DataTable gaussian(std::size_t n, std::size_t d, std::mt19937_64& gen) {
  std::normal_distribution<double> nd;
  std::vector<double> v(n * d);
  for (auto& x : v) x = nd(gen);
  return DataTable(std::move(v), d);
}

PairSample dependent(std::size_t n, std::mt19937_64& gen) {
  auto y = gaussian(n, 2, gen);
  std::normal_distribution<double> nd;
  std::vector<double> z(n);
  for (std::size_t i = 0; i < n; ++i) z[i] = y.row(i)[0] * y.row(i)[0] + 0.5 * nd(gen);
  return PairSample(std::move(y), DataTable(std::move(z), 1));
}

DcovBlockSummary summary(std::vector<double> yz, std::vector<double> yy, std::vector<double> zz,
                         std::vector<std::size_t> sizes) {
  std::vector<DcovTriple> t;
  for (std::size_t k = 0; k < yz.size(); ++k) t.push_back({yz[k], yy[k], zz[k]});
  return summarize_blocks(std::move(t), std::move(sizes));
}

}  // namespace

TEST_CASE("distance covariance matches the quadruple-sum definition") {
  std::mt19937_64 gen(17);
  for (std::size_t n = 4; n <= 12; ++n) {
    for (int rep = 0; rep < 3; ++rep) {
      const auto y = gaussian(n, 1 + static_cast<std::size_t>(rep), gen);
      const auto z = gaussian(n, 2, gen);
      const double fast = dcov_unbiased(y.view(), z.view());
      const double quad = quadruple_sum(y, z);
      CHECK(fast == Catch::Approx(quad).margin(1e-10));
      CHECK(u_centered(y, z) == Catch::Approx(quad).margin(1e-10));
      const auto t = dcov_triple(y.view(), z.view());
      CHECK(t.yz == Catch::Approx(fast).margin(1e-12));
      CHECK(t.yy == Catch::Approx(quadruple_sum(y, y)).margin(1e-10));
      CHECK(t.zz == Catch::Approx(quadruple_sum(z, z)).margin(1e-10));
    }
  }
}

TEST_CASE("distance covariance edge cases") {
  std::mt19937_64 gen(2);
  const auto y = gaussian(9, 3, gen);
  const DataTable z(std::vector<double>(18, 1.25), 2);
  CHECK(dcov_unbiased(y.view(), z.view()) == 0.0);
  CHECK(dcov_triple(y.view(), z.view()).zz == 0.0);
  CHECK_THROWS_AS(dcov_unbiased(gaussian(3, 1, gen).view(), gaussian(3, 1, gen).view()), Error);
  CHECK_THROWS_AS(PairSample(gaussian(5, 1, gen), gaussian(6, 1, gen)), Error);
}

TEST_CASE("distance covariance invariances") {
  std::mt19937_64 gen(5);
  const auto p = dependent(30, gen);
  const double base = dcov_unbiased(p);
  // Translation of either sample.
  std::vector<double> shifted(p.y.values().begin(), p.y.values().end());
  for (auto& v : shifted) v += 7.5;
  CHECK(dcov_unbiased(DataTable(shifted, 2).view(), p.z.view()) == Catch::Approx(base).epsilon(1e-10));
  // Joint permutation of the rows.
  std::vector<std::size_t> order(30);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), gen);
  std::vector<double> yp;
  std::vector<double> zp;
  for (auto i : order) {
    yp.insert(yp.end(), p.y.row(i).begin(), p.y.row(i).end());
    zp.push_back(p.z.row(i)[0]);
  }
  CHECK(dcov_unbiased(DataTable(yp, 2).view(), DataTable(zp, 1).view()) == Catch::Approx(base).epsilon(1e-10));
  // Symmetry in (Y, Z).
  CHECK(dcov_unbiased(p.z.view(), p.y.view()) == Catch::Approx(base).epsilon(1e-12));
}

TEST_CASE("distance covariance is unbiased") {
  std::mt19937_64 gen(99);
  // Independent samples: expectation zero.
  double mean0 = 0.0;
  double ss0 = 0.0;
  const int reps = 20000;
  for (int r = 0; r < reps; ++r) {
    const double v = dcov_unbiased(gaussian(10, 1, gen).view(), gaussian(10, 1, gen).view());
    mean0 += v;
    ss0 += v * v;
  }
  mean0 /= reps;
  const double se0 = std::sqrt((ss0 / reps - mean0 * mean0) / reps);
  CHECK(std::abs(mean0) < 4.0 * se0);

  // Dependent samples: the mean at n = 8 agrees with the mean at n = 60.
  const auto mean_at = [&](std::size_t n, int m, double& se) {
    double s = 0.0;
    double q = 0.0;
    for (int r = 0; r < m; ++r) {
      const double v = dcov_unbiased(dependent(n, gen));
      s += v;
      q += v * v;
    }
    se = std::sqrt((q / m - (s / m) * (s / m)) / m);
    return s / m;
  };
  double se_small = 0.0;
  double se_big = 0.0;
  const double small = mean_at(8, 40000, se_small);
  const double big = mean_at(60, 4000, se_big);
  CHECK(big > 0.0);
  CHECK(std::abs(small - big) < 4.0 * std::hypot(se_small, se_big));
}

TEST_CASE("distributed distance covariance") {
  std::mt19937_64 gen(8);
  const auto p = dependent(40, gen);
  const auto one = dcov_distributed(p, partition_random(40, 1, SeedSpec{1}));
  CHECK(one.aggregate_yz == dcov_unbiased(p));

  // Identical blocks give the single-block value.
  std::vector<double> y2;
  std::vector<double> z2;
  for (int c = 0; c < 2; ++c) {
    y2.insert(y2.end(), p.y.values().begin(), p.y.values().end());
    z2.insert(z2.end(), p.z.values().begin(), p.z.values().end());
  }
  std::vector<std::size_t> assign(80);
  for (std::size_t i = 0; i < 80; ++i) assign[i] = i / 40;
  const PairSample twice(DataTable(y2, 2), DataTable(z2, 1));
  const auto s = dcov_distributed(twice, partition_predefined(assign), 2);
  CHECK(s.aggregate_yz == Catch::Approx(dcov_unbiased(p)).epsilon(1e-13));
  CHECK(block_variance(s) == Catch::Approx(0.0).margin(1e-20));
  CHECK_THROWS_AS(dependence_measure(s), Error);

  try {
    dcov_distributed(p, partition_random(40, 11, SeedSpec{1}));
    FAIL("expected insufficient-sample");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::insufficient_sample);
  }
}

TEST_CASE("test statistics from block summaries") {
  const auto s = summary({0.0, 0.0}, {1.0, 1.0}, {2.0, 2.0}, {10, 10});
  CHECK(sigma_beta_hat(s) == 8.0);
  const auto zero = test_var(s, 0.05);
  CHECK(zero.valid);
  CHECK(zero.statistic == 0.0);
  CHECK_FALSE(zero.reject);
  CHECK(zero.critical_value == Catch::Approx(1.6448536269514722).epsilon(1e-12));

  const double v = 0.3;
  const auto b = summary({0.0, 2.0 * v}, {1.0, 1.0}, {1.0, 1.0}, {50, 50});
  const auto r = test_block_var(b, 0.05);
  CHECK(r.statistic == Catch::Approx(std::sqrt(2.0)).epsilon(1e-14));
  CHECK(dependence_measure(b) == Catch::Approx(std::sqrt(2.0)).epsilon(1e-14));

  // T_Var = sqrt(2/K) N dcov / sqrt(sigma_beta).
  const auto t = summary({0.01, 0.03}, {1.0, 1.0}, {0.5, 0.5}, {50, 50});
  CHECK(test_var(t, 0.05).statistic == Catch::Approx(1.0 * 100.0 * 0.02 / std::sqrt(2.0)).epsilon(1e-14));

  const auto bad = summary({0.1, 0.2}, {-1.0, -1.0}, {1.0, 1.0}, {5, 5});
  const auto inv = test_var(bad, 0.05);
  CHECK_FALSE(inv.valid);
  CHECK_FALSE(inv.reject);
  CHECK(std::isnan(inv.statistic));

  CHECK_NOTHROW(test_block_var(summary({0.1, 0.2}, {1, 1}, {1, 1}, {5, 6}), 0.05));
  CHECK_THROWS_AS(test_block_var(summary({0.1, 0.2}, {1, 1}, {1, 1}, {5, 7}), 0.05), Error);
  CHECK_THROWS_AS(test_block_var(summary({0.1}, {1}, {1}, {5}), 0.05), Error);
  CHECK_THROWS_AS(normal_upper_quantile(0.0), Error);
}

TEST_CASE("dependence measure under independence is standard normal scale") {
  std::mt19937_64 gen(21);
  const std::size_t n = 5000;
  const std::size_t k = 50;
  const int reps = 500;
  int inside = 0;
  for (int r = 0; r < reps; ++r) {
    const PairSample p(gaussian(n, 2, gen), gaussian(n, 2, gen));
    const auto s = dcov_distributed(p, partition_random(n, k, SeedSpec{static_cast<std::uint64_t>(r)}));
    if (std::abs(dependence_measure(s)) < 3.29) ++inside;
  }
  CHECK(inside >= static_cast<int>(0.99 * reps));
}
