#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <vector>

#include "catch_amalgamated.hpp"
#include "splitstat/symstat.hpp"

using namespace splitstat;

namespace {

// Independent reference: enumerate index subsets through a selection mask.
template <class H>
double brute_u(const std::vector<double>& x, std::size_t dim, std::size_t m, H h) {
  const std::size_t n = x.size() / dim;
  std::vector<bool> mask(n, false);
  std::fill(mask.begin(), mask.begin() + static_cast<std::ptrdiff_t>(m), true);
  double sum = 0.0;
  double count = 0.0;
  do {
    std::vector<Row> rows;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask[i]) rows.push_back(Row(x).subspan(i * dim, dim));
    }
    sum += h(rows);
    count += 1.0;
  } while (std::prev_permutation(mask.begin(), mask.end()));
  return sum / count;
}

std::vector<double> expand(const std::vector<double>& x, const std::vector<std::uint32_t>& w) {
  std::vector<double> out;
  for (std::size_t i = 0; i < w.size(); ++i) out.insert(out.end(), w[i], x[i]);
  return out;
}

double h2(std::span<const Row> r) { return std::abs(r[0][0] - r[1][0]); }
double h3(std::span<const Row> r) {
  const double a = r[0][0], b = r[1][0], c = r[2][0];
  return std::max({a, b, c}) - std::min({a, b, c}) + a * b * c;
}
double h4(std::span<const Row> r) {
  const double a = r[0][0], b = r[1][0], c = r[2][0], d = r[3][0];
  return a * b * c * d + std::max({a, b, c, d}) - 0.5 * (a + b + c + d);
}

Kernel kernel_of_degree(std::size_t m) {
  switch (m) {
    case 2: return Kernel(2, h2, "abs");
    case 3: return Kernel(3, h3, "range3");
    default: return Kernel(4, h4, "mix4");
  }
}

std::vector<double> normals(std::size_t n, std::uint64_t seed, double mean = 0.0) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd(mean, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = nd(gen);
  return v;
}

}  // namespace

TEST_CASE("gini U-statistic fixtures") {
  CHECK(u_stat(DataTable({0, 2}, 1).view(), gini_kernel()) == 2.0);
  CHECK(u_stat(DataTable({0, 1, 2}, 1).view(), gini_kernel()) == Catch::Approx(4.0 / 3.0).epsilon(1e-15));
  CHECK(u_stat(DataTable({3, 3, 3, 3}, 1).view(), gini_kernel()) == 0.0);
  const GiniKernel g;
  const std::vector<double> a{0}, b{2}, c{-1}, d{3};
  CHECK(g(a, b) == 2.0);
  CHECK(g(b, b) == 0.0);
  CHECK(g(c, d) == 4.0);
}

TEST_CASE("kernel construction and dimension errors") {
  CHECK_THROWS_AS(Kernel(5, h2, "too-big"), Error);
  CHECK_THROWS_AS(Kernel(0, h2, "empty"), Error);
  const DataTable two_d({1, 2, 3, 4}, 2);
  CHECK_THROWS_AS(u_stat(two_d.view(), gini_kernel()), Error);
  CHECK_THROWS_AS(u_stat(two_d.view(), Kernel(gini_kernel())), Error);
  try {
    u_stat(DataTable({1.0}, 1).view(), gini_kernel());
    FAIL("expected insufficient-sample");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::insufficient_sample);
  }
}

TEST_CASE("product kernel") {
  const ProductKernel k(1.0);
  const std::vector<double> one{1}, zero{0}, seven{7};
  CHECK(k(one, seven) == 0.0);
  CHECK(k(zero, zero) == 1.0);
  CHECK(product_kernel(2.0).center() == 2.0);
}

TEST_CASE("kernels are symmetric under argument permutation") {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> ud(-3, 3);
  for (std::size_t m : {2u, 3u, 4u}) {
    const Kernel k = kernel_of_degree(m);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<double> v(m);
      for (auto& x : v) x = ud(gen);
      std::vector<std::size_t> perm(m);
      std::iota(perm.begin(), perm.end(), 0);
      std::vector<Row> base;
      for (std::size_t i = 0; i < m; ++i) base.push_back(Row(v).subspan(i, 1));
      const double ref = k(base);
      while (std::next_permutation(perm.begin(), perm.end())) {
        std::vector<Row> rows;
        for (auto p : perm) rows.push_back(base[p]);
        CHECK(k(rows) == Catch::Approx(ref).epsilon(1e-14));
      }
    }
  }
  const Kernel gk = gini_kernel();
  const Kernel pk = product_kernel(0.5);
  const std::vector<double> x{1.5}, y{-2.0};
  const std::vector<Row> xy{Row(x), Row(y)}, yx{Row(y), Row(x)};
  CHECK(gk(xy) == gk(yx));
  CHECK(pk(xy) == pk(yx));
}

TEST_CASE("u_stat matches subset enumeration for degrees 1 to 4") {
  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> ud(-2, 2);
  for (std::size_t m = 2; m <= 4; ++m) {
    for (std::size_t n : {m, m + 1, 7ul, 10ul}) {
      std::vector<double> x(n);
      for (auto& v : x) v = ud(gen);
      const Kernel k = kernel_of_degree(m);
      const double ref = brute_u(x, 1, m, [&](const std::vector<Row>& r) { return k(r); });
      CHECK(u_stat(DataTable(x, 1).view(), k) == Catch::Approx(ref).epsilon(1e-12));
    }
  }
  const Kernel mean1(1, [](std::span<const Row> r) { return r[0][0]; }, "mean");
  CHECK(u_stat(DataTable({1, 2, 6}, 1).view(), mean1) == 3.0);
}

TEST_CASE("u_stat is invariant under row shuffling") {
  std::mt19937_64 gen(8);
  std::uniform_int_distribution<int> ui(-50, 50);
  std::vector<double> x(60);
  for (auto& v : x) v = ui(gen);
  const double a = u_stat(DataTable(x, 1).view(), gini_kernel());
  std::shuffle(x.begin(), x.end(), gen);
  CHECK(u_stat(DataTable(x, 1).view(), gini_kernel()) == a);
  // Real-valued data: equal up to rounding of the reordered sums.
  auto y = normals(80, 4);
  const double b = u_stat(DataTable(y, 1).view(), gini_kernel());
  std::shuffle(y.begin(), y.end(), gen);
  CHECK(u_stat(DataTable(y, 1).view(), gini_kernel()) == Catch::Approx(b).epsilon(1e-13));
}

TEST_CASE("weighted evaluation fixtures") {
  const DataTable t({0, 2}, 1);
  const std::vector<std::uint32_t> w{2, 1};
  CHECK(u_stat_weighted(t.view(), w, gini_kernel()) == Catch::Approx(4.0 / 3.0).epsilon(1e-15));
  const DataTable r({0.3, 1.7, -2.0, 5.0}, 1);
  const std::vector<std::uint32_t> single{0, 6, 0, 0};
  CHECK(u_stat_weighted(r.view(), single, gini_kernel()) == 0.0);
  const std::vector<std::uint32_t> too_few{0, 1, 0, 0};
  CHECK_THROWS_AS(u_stat_weighted(r.view(), too_few, gini_kernel()), Error);
}

TEST_CASE("weighted evaluation equals the expanded multiset") {
  std::mt19937_64 gen(99);
  std::uniform_real_distribution<double> ud(-2, 2);
  std::uniform_int_distribution<std::uint32_t> uw(0, 3);
  for (std::size_t m = 2; m <= 4; ++m) {
    const Kernel k = kernel_of_degree(m);
    for (int trial = 0; trial < 20; ++trial) {
      const std::size_t n = 2 + trial % 8;
      std::vector<double> x(n);
      for (auto& v : x) v = ud(gen);
      std::vector<std::uint32_t> w(n);
      std::uint32_t total = 0;
      do {
        total = 0;
        for (auto& v : w) total += (v = uw(gen));
      } while (total < m || total > 13);
      const auto big = expand(x, w);
      const double ref = brute_u(big, 1, m, [&](const std::vector<Row>& r) { return k(r); });
      CHECK(u_stat_weighted(DataTable(x, 1).view(), w, k) == Catch::Approx(ref).margin(1e-10));
    }
  }
}

TEST_CASE("distributed U-statistic") {
  const DataTable t({0, 2, 0, 2}, 1);
  const auto est = distributed_u_stat(t, partition_predefined({0, 0, 1, 1}), gini_kernel());
  CHECK(est.per_block == std::vector<double>{2.0, 2.0});
  CHECK(est.aggregate == 2.0);

  const DataTable g(normals(300, 2), 1);
  const auto one = distributed_u_stat(g, partition_random(g, 1, SeedSpec{1}), gini_kernel());
  CHECK(std::abs(one.aggregate - u_stat(g.view(), gini_kernel())) <= 1e-12);

  try {
    distributed_u_stat(t, partition_predefined({0, 0, 0, 1}), gini_kernel());
    FAIL("expected insufficient-sample");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::insufficient_sample);
    CHECK(std::string(e.what()).find("block 1") != std::string::npos);
  }
}

TEST_CASE("aggregate is the size-weighted block mean") {
  const DataTable t(normals(103, 12), 1);
  const auto p = partition_random(t, 4, SeedSpec{3});
  const auto est = distributed_u_stat(t, p, gini_kernel());
  double s = 0.0;
  for (std::size_t k = 0; k < 4; ++k) s += static_cast<double>(est.sizes[k]) * est.per_block[k];
  CHECK(est.aggregate == Catch::Approx(s / 103.0).epsilon(1e-15));
}

TEST_CASE("sorted gini agrees with pairwise enumeration") {
  std::mt19937_64 gen(21);
  std::uniform_int_distribution<std::uint32_t> uw(0, 4);
  const UStatistic<GiniKernel> exact{GiniKernel{}};
  const SortedGini fast;
  for (std::size_t n : {2ul, 3ul, 17ul, 200ul}) {
    const DataTable t(normals(n, n), 1);
    CHECK(fast.value(t.view()) == Catch::Approx(exact.value(t.view())).epsilon(1e-12));
    CHECK(fast.plugin(t.view()) == Catch::Approx(exact.plugin(t.view())).epsilon(1e-12));
    std::vector<std::uint32_t> w(n);
    std::uint32_t total = 0;
    do {
      total = 0;
      for (auto& v : w) total += (v = uw(gen));
    } while (total < 2);
    CHECK(fast.weighted(t.view(), w) == Catch::Approx(exact.weighted(t.view(), w)).epsilon(1e-12));
  }
  // Ties.
  const DataTable ties({1, 1, 2, 2, 2, 5}, 1);
  CHECK(fast.value(ties.view()) == Catch::Approx(exact.value(ties.view())).epsilon(1e-14));
}

TEST_CASE("product moment statistic agrees with pairwise enumeration") {
  const UStatistic<ProductKernel> exact{ProductKernel(0.3)};
  const ProductMoment fast(0.3);
  const DataTable t(normals(150, 6), 1);
  CHECK(fast.value(t.view()) == Catch::Approx(exact.value(t.view())).epsilon(1e-10));
  CHECK(fast.plugin(t.view()) == Catch::Approx(exact.plugin(t.view())).epsilon(1e-10));
  std::vector<std::uint32_t> w(150, 0);
  for (std::size_t i = 0; i < 150; i += 3) w[i] = static_cast<std::uint32_t>(1 + i % 4);
  CHECK(fast.weighted(t.view(), w) == Catch::Approx(exact.weighted(t.view(), w)).epsilon(1e-10));
}

TEST_CASE("plug-in V-statistic") {
  // (0,1,2): sum over all ordered pairs is 8, over 9 pairs.
  CHECK(v_stat(DataTable({0, 1, 2}, 1).view(), gini_kernel()) == Catch::Approx(8.0 / 9.0).epsilon(1e-15));
}

TEST_CASE("empirical first projection") {
  const auto zeros = hoeffding_alpha_hat(DataTable({4, 4, 4}, 1).view(), gini_kernel());
  for (double a : zeros) CHECK(a == 0.0);
  const auto two = hoeffding_alpha_hat(DataTable({0, 2}, 1).view(), gini_kernel());
  CHECK(two[0] == 0.0);
  CHECK(two[1] == 0.0);

  // (0,1,2): row means (3/3, 2/3, 3/3), theta = 8/9.
  const auto three = hoeffding_alpha_hat(DataTable({0, 1, 2}, 1).view(), gini_kernel());
  const std::vector<double> x{0, 1, 2};
  double theta = 0.0;
  for (double a : x) {
    for (double b : x) theta += std::abs(a - b) / 9.0;
  }
  for (std::size_t i = 0; i < 3; ++i) {
    double row = 0.0;
    for (double b : x) row += std::abs(x[i] - b) / 3.0;
    CHECK(three[i] == Catch::Approx(2.0 * (row - theta)).margin(1e-15));
  }
  CHECK(three[0] == Catch::Approx(2.0 / 9.0));
  CHECK(three[1] == Catch::Approx(-4.0 / 9.0));
  CHECK(std::abs(three[0] + three[1] + three[2]) < 1e-15);

  const auto g = normals(500, 31);
  const auto alpha = hoeffding_alpha_hat(DataTable(g, 1).view(), gini_kernel());
  CHECK(std::abs(std::accumulate(alpha.begin(), alpha.end(), 0.0)) < 1e-10 * 500);
  CHECK_THROWS_AS(hoeffding_alpha_hat(DataTable({1.0}, 1).view(), gini_kernel()), Error);
}

TEST_CASE("closed form of E|X - X'| for N(1,1) against brute-force Monte Carlo") {
  std::mt19937_64 gen(77);
  std::normal_distribution<double> nd(1.0, 1.0);
  const int pairs = 1000000;
  double s = 0.0;
  double s2 = 0.0;
  for (int i = 0; i < pairs; ++i) {
    const double d = std::abs(nd(gen) - nd(gen));
    s += d;
    s2 += d * d;
  }
  const double mean = s / pairs;
  const double se = std::sqrt((s2 / pairs - mean * mean) / pairs);
  CHECK(std::abs(mean - 2.0 / std::sqrt(std::numbers::pi)) < 3.0 * se);
}

TEST_CASE("distributed gini is unbiased for every K") {
  const double theta = 2.0 / std::sqrt(std::numbers::pi);
  const int reps = 2000;
  for (std::size_t k : {1ul, 5ul, 20ul}) {
    double s = 0.0;
    double s2 = 0.0;
    for (int r = 0; r < reps; ++r) {
      const DataTable t(normals(200, 1000 + static_cast<std::uint64_t>(r), 1.0), 1);
      const double v = distributed_u_stat(t, partition_random(t, k, SeedSpec{static_cast<std::uint64_t>(r)}),
                                          gini_kernel())
                           .aggregate;
      s += v;
      s2 += v * v;
    }
    const double mean = s / reps;
    const double se = std::sqrt((s2 / reps - mean * mean) / reps);
    CHECK(std::abs(mean - theta) <= 3.0 * se);
  }
}

TEST_CASE("degenerate kernel: variance of the full-sample statistic and inflation by K") {
  const std::size_t n = 400;
  const std::size_t k = 4;
  const int reps = 3000;
  std::vector<double> full(reps);
  std::vector<double> dist(reps);
  const ProductMoment stat(0.0);
  for (int r = 0; r < reps; ++r) {
    const DataTable t(normals(n, 5000 + static_cast<std::uint64_t>(r)), 1);
    full[static_cast<std::size_t>(r)] = stat.value(t.view());
    const auto blocks = split_blocks(t, partition_random(t, k, SeedSpec{static_cast<std::uint64_t>(r)}));
    dist[static_cast<std::size_t>(r)] = distributed_statistic(std::span<const DataTable>(blocks), stat).aggregate;
  }
  const auto var = [](const std::vector<double>& v) {
    const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
  };
  const double nn = static_cast<double>(n);
  CHECK(var(full) == Catch::Approx(2.0 / (nn * (nn - 1.0))).epsilon(0.15));
  const double ratio = var(dist) / (static_cast<double>(k) * var(full));
  CHECK(ratio >= 0.7);
  CHECK(ratio <= 1.3);
}
