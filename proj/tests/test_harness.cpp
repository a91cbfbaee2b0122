#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "catch_amalgamated.hpp"
#include "splitstat/harness.hpp"

using namespace splitstat;
using namespace splitstat::harness;

namespace {

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return Errc::invalid_argument;
}

CsvDocument doc_from(const std::string& text) {
  std::istringstream in(text);
  return parse_csv(in);
}

}  // namespace

TEST_CASE("csv parsing") {
  const auto d = doc_from("a,b,\"c d\"\r\n1,\"2,5\",\"say \"\"hi\"\"\"\r\n\r\n3,4,5\n");
  CHECK(d.header == std::vector<std::string>{"a", "b", "c d"});
  REQUIRE(d.rows.size() == 2);
  CHECK(d.rows[0][1] == "2,5");
  CHECK(d.rows[0][2] == "say \"hi\"");
  CHECK(d.rows[1][2] == "5");
  CHECK(code_of([] { doc_from("a,b\n1,\"2\n"); }) == Errc::parse);
  CHECK(code_of([] { doc_from("a,b\n1,2\"x\n"); }) == Errc::parse);
  CHECK(code_of([] { doc_from(""); }) == Errc::empty_data);
  CHECK(code_of([] { read_csv_file("/nonexistent/file.csv"); }) == Errc::empty_data);
}

TEST_CASE("numeric fields") {
  CHECK(parse_number(" 1.5 ") == 1.5);
  CHECK(parse_number("+2") == 2.0);
  CHECK(parse_number("-3e2") == -300.0);
  CHECK_FALSE(parse_number("1.5x").has_value());
  CHECK_FALSE(parse_number("inf").has_value());
  CHECK_FALSE(parse_number("").has_value());
  for (const char* s : {"", "NA", "NaN", "nan", "null", "NULL"}) CHECK(is_missing_token(s));
  CHECK_FALSE(is_missing_token("0"));
}

TEST_CASE("ingesting a table with missing values") {
  const auto doc = doc_from("x,y\n1,10\nNA,11\n3,12\n");
  const auto kept = ingest_table(doc, {"x"}, true);
  CHECK(kept.table.rows() == 2);
  CHECK(kept.report.rows_read == 3);
  CHECK(kept.report.rows_kept == 2);
  CHECK(kept.report.dropped == 1);
  CHECK(kept.table.values()[1] == 3.0);

  try {
    ingest_table(doc, {"x"}, false);
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::parse);
    const std::string msg = e.what();
    CHECK(msg.find("row 2") != std::string::npos);
    CHECK(msg.find("'x'") != std::string::npos);
  }
  // Missing values outside the selected columns are ignored.
  CHECK(ingest_table(doc, {"y"}, false).table.rows() == 3);
  CHECK(code_of([&] { ingest_table(doc, {"z"}, true); }) == Errc::schema);
  CHECK(code_of([] { ingest_table(doc_from("x\n"), {"x"}, true); }) == Errc::empty_data);
  CHECK(code_of([] { ingest_table(doc_from("x\nNA\n"), {"x"}, true); }) == Errc::empty_data);
  CHECK(code_of([] { ingest_table(doc_from("x\nabc\n"), {"x"}, false); }) == Errc::parse);

  const auto pair = ingest_pair(doc_from("y1,y2,z\n1,2,3\n4,,6\n7,8,9\n10,11,12\n13,14,15\n"), {"y1", "y2"}, {"z"}, true);
  CHECK(pair.pair.rows() == 4);
  CHECK(pair.pair.y.dim() == 2);
  CHECK(pair.pair.z.dim() == 1);
  CHECK(pair.report.dropped == 1);
}

TEST_CASE("output formatting") {
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
  CHECK(format_double(std::nan("")) == "NA");
  CHECK(csv_escape("a,b") == "\"a,b\"");
  CHECK(csv_escape("q\"") == "\"q\"\"\"");
  CHECK(csv_escape("plain") == "plain");

  Report r;
  r.experiment = "x";
  r.columns = {"name", "n", "v", "missing"};
  r.add({std::string("a,b"), count(3), 2.0 / 3.0, na()});
  CHECK_THROWS_AS(r.add({count(1)}), Error);
  std::ostringstream os;
  write_csv(os, r);
  CHECK(os.str() == "name,n,v,missing\n\"a,b\",3,0.66666666666666663,NA\n");
  const auto j = to_json(r);
  CHECK(j["records"][0]["missing"].is_null());
  CHECK(j["records"][0]["n"] == 3);
  const auto text = dump_json(j);
  CHECK(text.find("0.66666666666666663") != std::string::npos);
  CHECK(nlohmann::json::parse(text)["records"][0]["v"].get<double>() == 2.0 / 3.0);
}

TEST_CASE("true Gini values") {
  CHECK(true_gini(Univariate::normal()) == Catch::Approx(1.1283791670955126).epsilon(1e-15));
  CHECK(true_gini(Univariate::gamma()) == Catch::Approx(1.875).epsilon(1e-14));
  CHECK(true_gini(Univariate::poisson()) == Catch::Approx(2.2205942011963855).epsilon(1e-12));
  // Monte Carlo cross-check of theta and zeta_1 for every law.
  for (const auto& u : {Univariate::normal(), Univariate::gamma(), Univariate::poisson()}) {
    Rng rng(31);
    const auto x = draw(u, 400000, rng);
    const double theta = SortedGini{}.value(SampleView(x, 1));
    CHECK(theta == Catch::Approx(true_gini(u)).epsilon(0.01));
    // zeta_1 = Var g(X) with g estimated from the sorted sample.
    std::vector<double> s = x;
    std::sort(s.begin(), s.end());
    std::vector<double> prefix(s.size() + 1, 0.0);
    for (std::size_t i = 0; i < s.size(); ++i) prefix[i + 1] = prefix[i] + s[i];
    const double n = static_cast<double>(s.size());
    double m = 0.0;
    double q = 0.0;
    for (std::size_t i = 0; i < 20000; ++i) {
      const double v = x[i];
      const auto lo = static_cast<std::size_t>(std::lower_bound(s.begin(), s.end(), v) - s.begin());
      const double below = v * static_cast<double>(lo) - prefix[lo];
      const double above = (prefix.back() - prefix[lo]) - v * (n - static_cast<double>(lo));
      const double g = (below + above) / n;
      m += g;
      q += g * g;
    }
    m /= 20000.0;
    CHECK(q / 20000.0 - m * m == Catch::Approx(gini_zeta1(u)).epsilon(0.06));
  }
  CHECK(gini_zeta1(Univariate::normal()) == Catch::Approx(0.162752).epsilon(1e-4));
  CHECK(gini_zeta2(Univariate::normal()) == Catch::Approx(2.0 - 4.0 / std::numbers::pi).epsilon(1e-14));
  const std::vector<std::size_t> one{500};
  CHECK(gini_distributed_variance(Univariate::gamma(), one) == Catch::Approx(gini_u_variance(Univariate::gamma(), 500)));
  CHECK(code_of([] { scenario_by_name("cauchy"); }) == Errc::invalid_argument);
}

TEST_CASE("pair scenarios") {
  for (auto sc : {PairScenario::I, PairScenario::II, PairScenario::III}) {
    PairGenerator gen(PairSpec{sc, 3, 0.0});
    Rng rng(4);
    const auto p = gen.draw(2000, rng);
    CHECK(p.y.dim() == 3);
    CHECK(p.z.dim() == 3);
    CHECK(p.rows() == 2000);
  }
  // With rho > 0 the first Z column tracks the last Y column (correlation rho).
  PairGenerator dep(PairSpec{PairScenario::I, 2, 0.5});
  Rng rng(5);
  const auto p = dep.draw(20000, rng);
  double yz = 0.0;
  double yy = 0.0;
  double zz = 0.0;
  for (std::size_t i = 0; i < p.rows(); ++i) {
    yz += p.y.row(i)[1] * p.z.row(i)[0];
    yy += p.y.row(i)[1] * p.y.row(i)[1];
    zz += p.z.row(i)[0] * p.z.row(i)[0];
  }
  CHECK(yz / std::sqrt(yy * zz) == Catch::Approx(0.5).margin(0.03));
  CHECK_THROWS_AS(PairGenerator(PairSpec{PairScenario::I, 2, 1.0}), Error);
  CHECK(pair_scenario_by_name("II") == PairScenario::II);
}

TEST_CASE("replication seeds") {
  const auto a = replication_seeds(7, 3);
  const auto b = replication_seeds(7, 3);
  const auto c = replication_seeds(7, 4);
  CHECK(derive_stream(a.data(), 0, 0)() == derive_stream(b.data(), 0, 0)());
  CHECK(derive_stream(a.data(), 0, 0)() != derive_stream(c.data(), 0, 0)());
  CHECK(derive_stream(a.partition(10), 0, 0)() != derive_stream(a.partition(20), 0, 0)());
  CHECK(derive_stream(a.engine(Method::db, 10), 0, 0)() != derive_stream(a.engine(Method::pdb, 10), 0, 0)());
  CHECK(method_by_name("PDB") == Method::pdb);
  CHECK(code_of([] { method_by_name("jack"); }) == Errc::invalid_argument);
}

TEST_CASE("coverage experiment") {
  CoverageConfig cfg;
  cfg.n = 1000;
  cfg.k_grid = {10};
  cfg.methods = {Method::db, Method::pdb, Method::blb, Method::sdb};
  cfg.replications = 20;
  cfg.engine.b = 50;
  cfg.engine.blb_resamples = 20;
  const auto res = simulate_coverage(cfg);
  CHECK(res.cells.size() == 4);
  for (const auto& c : res.cells) {
    CHECK(c.valid == 20);
    CHECK(c.coverage >= 0.5);
    CHECK(c.mean_width > 0.0);
  }
  // Same seed, same numbers.
  const auto again = simulate_coverage(cfg);
  CHECK(again.cell(Method::db, 10).mean_width == res.cell(Method::db, 10).mean_width);
  cfg.threads = 3;
  const auto threaded = simulate_coverage(cfg);
  CHECK(threaded.cell(Method::sdb, 10).mean_width == res.cell(Method::sdb, 10).mean_width);

  const auto rep = coverage_report(cfg, res);
  CHECK(rep.columns == std::vector<std::string>{"scenario", "method", "K", "N", "B", "level", "replications", "valid",
                                                "na", "coverage", "mean_width", "mean_completed", "theta"});
  CHECK(rep.rows.size() == 4);
  CHECK(code_of([&] { res.cell(Method::db, 11); }) == Errc::invalid_argument);
}

TEST_CASE("a budget too small for any iteration gives NA cells") {
  CoverageConfig cfg;
  cfg.n = 20000;
  cfg.k_grid = {1};
  cfg.methods = {Method::db};
  cfg.replications = 2;
  cfg.impl = GiniImpl::exact;
  cfg.engine.budget = TimeBudget{1e-6};
  const auto res = simulate_coverage(cfg);
  const auto& c = res.cells.front();
  CHECK(c.valid == 0);
  CHECK(c.na == 2);
  CHECK(c.mean_completed == 0.0);
  CHECK(std::isnan(c.coverage));
  std::ostringstream os;
  write_csv(os, coverage_report(cfg, res));
  CHECK(os.str().find(",NA,NA,0,") != std::string::npos);
}

TEST_CASE("mse experiment") {
  MseConfig cfg;
  cfg.n = 400;
  cfg.k_grid = {1, 4};
  cfg.replications = 50;
  const auto res = simulate_mse_ratio(cfg);
  CHECK(res.cell(1).ratio_u == 1.0);
  CHECK(res.cell(1).ratio_var == 1.0);
  CHECK(res.cell(4).ratio_u > 0.5);
  CHECK(res.cell(4).var_target > res.var_full);
  const auto rep = mse_report(cfg, res);
  CHECK(rep.rows.size() == 2);
  CHECK(rep.column("ratio_var") == 10);
}

TEST_CASE("degenerate experiment") {
  DegenerateConfig cfg;
  cfg.n = 400;
  cfg.k_grid = {4};
  cfg.replications = 200;
  const auto cells = simulate_degenerate_variance(cfg);
  REQUIRE(cells.size() == 1);
  // Var(T_{N,K}) grows roughly like K Var(T_N).
  CHECK(cells[0].ratio_over_k > 0.4);
  CHECK(cells[0].ratio_over_k < 2.5);
  CHECK(degenerate_report(cfg, cells).rows.size() == 1);
}

TEST_CASE("dcov experiment") {
  DcovConfig cfg;
  cfg.n = 400;
  cfg.p_grid = {2};
  cfg.k_grid = {1, 10};
  cfg.replications = 30;
  const auto null = simulate_dcov(cfg);
  CHECK(null.cell(2, 1).valid_block == 0);
  CHECK(null.cell(2, 10).valid_block == 30);
  CHECK(null.cell(2, 10).reject_block <= 0.3);
  cfg.rho = 0.8;
  cfg.p_grid = {1};
  const auto power = simulate_dcov(cfg);
  CHECK(power.cell(1, 10).reject_var >= 0.9);
  const auto rep = dcov_report(cfg, power);
  CHECK(rep.meta["quantity"] == "power");
  CHECK(code_of([&] {
    DcovConfig bad = cfg;
    bad.k_grid = {200};
    simulate_dcov(bad);
  }) == Errc::invalid_argument);
}

TEST_CASE("time evolution experiment") {
  TimeEvolutionConfig cfg;
  cfg.n = 2000;
  cfg.k_grid = {10};
  cfg.methods = {Method::pdb, Method::db};
  cfg.budget_seconds = 0.2;
  cfg.ticks = 4;
  cfg.replications = 1;
  cfg.oracle_replications = 100;
  cfg.impl = GiniImpl::sorted;
  std::vector<double> widths;
  const auto pts = simulate_time_evolution(cfg, &widths);
  REQUIRE(widths.size() == 1);
  CHECK(widths[0] > 0.0);
  CHECK(pts.size() == 8);
  for (const auto& p : pts) {
    CHECK(p.relative_error >= 0.0);
    CHECK(p.time > 0.0);
  }
  CHECK(pts.back().relative_error < 1.0);
  CHECK(time_evolution_report(cfg, pts).rows.size() == 8);
}

TEST_CASE("benchmarks") {
  TimingConfig t;
  t.n = 2000;
  t.k_grid = {1, 10};
  t.repeats = 1;
  const auto cells = bench_timing(t);
  REQUIRE(cells.size() == 2);
  CHECK(cells[0].observed_ratio == 1.0);
  CHECK(cells[1].predicted_ratio == Catch::Approx(0.1));
  CHECK(cells[0].value == Catch::Approx(cells[1].value).epsilon(0.05));

  ThroughputConfig q;
  q.n = 2000;
  q.k_grid = {10};
  q.budget_seconds = 0.1;
  q.max_iterations = 1000;
  const auto tp = bench_throughput(q);
  REQUIRE(tp.size() == 4);
  for (const auto& c : tp) CHECK(c.completed >= 1);
  CHECK(throughput_report(q, tp).columns.size() == 7);
}
