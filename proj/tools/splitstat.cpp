// splitstat command-line front end.
//
// Exit codes: 0 ok, 2 usage, 3 data, 4 infeasible or empty result.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "splitstat/harness.hpp"

using namespace splitstat;
using namespace splitstat::harness;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitInfeasible = 4;

int exit_code(Errc e) {
  switch (e) {
    case Errc::invalid_argument: return kExitUsage;
    case Errc::insufficient_sample:
    case Errc::invalid_variance:
    case Errc::schema:
    case Errc::parse:
    case Errc::empty_data: return kExitData;
    case Errc::insufficient_replicates:
    case Errc::empty_result:
    case Errc::infeasible: return kExitInfeasible;
  }
  return 1;
}

struct OutputOptions {
  std::string format = "csv";
  std::string path;
};

void add_output(CLI::App* app, OutputOptions& o) {
  app->add_option("--format", o.format, "Output format")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
  app->add_option("-o,--output", o.path, "Output file (default: stdout)");
}

void emit(const Report& r, const OutputOptions& o) {
  std::ofstream file;
  if (!o.path.empty()) {
    file.open(o.path, std::ios::binary);
    detail::require(file.good(), Errc::invalid_argument, "cannot write '" + o.path + "'");
  }
  std::ostream& os = o.path.empty() ? std::cout : file;
  if (o.format == "json") {
    os << dump_json(to_json(r));
  } else {
    write_csv(os, r);
  }
}

std::vector<Method> parse_methods(const std::vector<std::string>& names) {
  std::vector<Method> out;
  for (const auto& n : names) out.push_back(method_by_name(n));
  return out;
}

Inflation parse_inflation(const std::string& s) {
  if (s == "distributed") return Inflation::distributed;
  if (s == "pooled") return Inflation::pooled;
  detail::fail(Errc::invalid_argument, "unknown inflation '" + s + "' (distributed, pooled)");
}

std::optional<TimeBudget> budget_of(double seconds) {
  if (seconds <= 0.0) return std::nullopt;
  return TimeBudget{seconds};
}

// ---------------------------------------------------------------------------
// Input tables

struct TableInput {
  std::string path;
  std::vector<std::string> columns;
  bool drop_missing = false;
};

void add_table_input(CLI::App* app, TableInput& in) {
  app->add_option("input", in.path, "CSV file with a header row")->required()->check(CLI::ExistingFile);
  app->add_option("--columns", in.columns, "Columns to read (default: the first column)")->delimiter(',');
  app->add_flag("--drop-missing", in.drop_missing, "Drop rows with missing values instead of failing");
}

TableIngest load_table(const TableInput& in) {
  const auto doc = read_csv_file(in.path);
  std::vector<std::string> cols = in.columns;
  if (cols.empty()) {
    detail::require(!doc.header.empty(), Errc::schema, "header has no columns");
    cols.push_back(doc.header.front());
  }
  auto t = ingest_table(doc, cols, in.drop_missing);
  if (t.report.dropped > 0) {
    std::cerr << "dropped " << t.report.dropped << " of " << t.report.rows_read << " rows with missing values\n";
  }
  return t;
}

struct PairInput {
  std::string path;
  std::vector<std::string> y;
  std::vector<std::string> z;
  bool drop_missing = false;
};

void add_pair_input(CLI::App* app, PairInput& in) {
  app->add_option("input", in.path, "CSV file with a header row")->required()->check(CLI::ExistingFile);
  app->add_option("--y", in.y, "Columns of Y")->required()->delimiter(',');
  app->add_option("--z", in.z, "Columns of Z")->required()->delimiter(',');
  app->add_flag("--drop-missing", in.drop_missing, "Drop rows with missing values instead of failing");
}

PairIngest load_pair(const PairInput& in) {
  auto p = ingest_pair(in.path, in.y, in.z, in.drop_missing);
  if (p.report.dropped > 0) {
    std::cerr << "dropped " << p.report.dropped << " of " << p.report.rows_read << " rows with missing values\n";
  }
  return p;
}

BlockPartition make_partition(std::size_t rows, std::size_t k, std::uint64_t seed) {
  return partition_random(rows, k, SeedSpec{seed}.child(kPartitionLane, 0));
}

// ---------------------------------------------------------------------------
// Statistic selection

struct StatOptions {
  std::string kernel = "gini";
  double c = 0.0;
  std::string impl = "sorted";
};

void add_stat(CLI::App* app, StatOptions& s) {
  app->add_option("--kernel", s.kernel, "Kernel")->check(CLI::IsMember({"gini", "product"}))->capture_default_str();
  app->add_option("--c", s.c, "Centre of the product kernel (x - c)(y - c)")->capture_default_str();
  app->add_option("--impl", s.impl, "Evaluator: exact pairwise sums or the fast closed form")
      ->check(CLI::IsMember({"exact", "sorted"}))
      ->capture_default_str();
}

template <class F>
decltype(auto) with_statistic(const StatOptions& s, F&& f) {
  if (s.kernel == "product") {
    if (s.impl == "exact") return f(UStatistic<ProductKernel>(ProductKernel(s.c)));
    return f(ProductMoment(s.c));
  }
  if (s.impl == "exact") return f(UStatistic<GiniKernel>(GiniKernel{}));
  return f(SortedGini{});
}

// ---------------------------------------------------------------------------
// partition

struct PartitionCmd {
  TableInput in;
  std::size_t k = 1;
  std::uint64_t seed = 1;
  std::string assignment;
  double c1 = 0.5;
  double c2 = 2.0;
  OutputOptions out;
};

void run_partition(const PartitionCmd& cmd) {
  const auto doc = read_csv_file(cmd.in.path);
  std::optional<BlockPartition> p;
  if (!cmd.assignment.empty()) {
    const auto t = ingest_table(doc, {cmd.assignment}, false);
    std::vector<std::size_t> a;
    for (double v : t.table.values()) {
      detail::require(v >= 0.0 && v == std::floor(v), Errc::parse, "assignment values must be nonnegative integers");
      a.push_back(static_cast<std::size_t>(v));
    }
    p = partition_predefined(std::move(a));
  } else {
    detail::require(!doc.rows.empty(), Errc::empty_data, "no data rows");
    p = make_partition(doc.rows.size(), cmd.k, cmd.seed);
  }
  const auto bal = check_balance(*p, cmd.c1, cmd.c2);
  if (!bal.balanced) {
    std::cerr << "warning: block sizes outside [" << cmd.c1 << ", " << cmd.c2 << "] x N/K (min ratio "
              << bal.min_ratio << ", max ratio " << bal.max_ratio << ")\n";
  }
  Report r;
  r.experiment = "partition";
  r.columns = {"row", "block"};
  for (std::size_t i = 0; i < p->assignment().size(); ++i) r.add({count(i + 1), count(p->assignment()[i])});
  r.meta["K"] = p->blocks();
  r.meta["sizes"] = p->sizes();
  r.meta["balanced"] = bal.balanced;
  r.meta["min_ratio"] = bal.min_ratio;
  r.meta["max_ratio"] = bal.max_ratio;
  r.meta["seed"] = cmd.seed;
  emit(r, cmd.out);
}

// ---------------------------------------------------------------------------
// estimate

struct EstimateCmd {
  TableInput in;
  StatOptions stat;
  std::size_t k = 1;
  bool full = false;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  bool blocks = false;
  OutputOptions out;
};

void run_estimate(const EstimateCmd& cmd) {
  const auto data = load_table(cmd.in);
  const std::size_t k = cmd.full ? 1 : cmd.k;
  const auto partition = make_partition(data.table.rows(), k, cmd.seed);
  const auto blocks = split_blocks(data.table, partition);
  const auto est = with_statistic(cmd.stat, [&](const auto& s) {
    return distributed_statistic(std::span<const DataTable>(blocks), s, cmd.threads);
  });
  double jack = std::nan("");
  if (cmd.stat.kernel == "gini" && data.table.dim() == 1) {
    try {
      jack = distributed_jackknife_variance(std::span<const DataTable>(blocks)).value;
    } catch (const Error& e) {
      if (e.code() != Errc::insufficient_sample) throw;
    }
  }
  Report r;
  r.experiment = "estimate";
  if (cmd.blocks) {
    r.columns = {"block", "n", "value"};
    for (std::size_t b = 0; b < est.blocks(); ++b) r.add({count(b), count(est.sizes[b]), est.per_block[b]});
  } else {
    r.columns = {"kernel", "K", "N", "estimate", "jackknife_variance"};
    r.add({cmd.stat.kernel, count(est.blocks()), count(est.total()), est.aggregate, real_or_na(jack)});
  }
  r.meta["rows_dropped"] = data.report.dropped;
  r.meta["aggregate"] = est.aggregate;
  emit(r, cmd.out);
}

// ---------------------------------------------------------------------------
// bootstrap

struct BootstrapCmd {
  TableInput in;
  StatOptions stat;
  std::string method = "db";
  std::size_t k = 1;
  std::size_t b = 200;
  double budget = 0.0;
  double level = 0.95;
  std::size_t blb_resamples = 100;
  std::size_t blb_subsets = 0;
  std::string inflation = "distributed";
  bool degenerate = false;
  std::uint64_t seed = 1;
  std::string replicates_path;
  OutputOptions out;
};

void run_bootstrap(const BootstrapCmd& cmd) {
  const auto data = load_table(cmd.in);
  const auto partition = make_partition(data.table.rows(), cmd.k, cmd.seed);
  const auto blocks = split_blocks(data.table, partition);
  const Method method = method_by_name(cmd.method);
  const SeedSpec engine_seed = SeedSpec{cmd.seed}.child(2, 0);
  const RunOptions run{budget_of(cmd.budget), {}};
  const std::size_t n = data.table.rows();

  std::vector<double> replicates;
  std::size_t completed = 0;
  std::size_t requested = 0;
  double elapsed = 0.0;
  ConfidenceInterval ci{std::nan(""), std::nan(""), cmd.level};
  std::string status = "ok";

  const auto est = with_statistic(cmd.stat, [&](const auto& s) {
    return distributed_statistic(std::span<const DataTable>(blocks), s);
  });
  const auto interval = [&](const BootstrapResult& r) {
    replicates = r.replicates;
    completed = r.completed();
    requested = r.requested;
    elapsed = r.elapsed_seconds;
    if (r.size() >= 2) {
      ci = ci_equal_tail(r, est.aggregate, cmd.level, n);
    } else {
      status = "insufficient-replicates";
    }
  };
  try {
    with_statistic(cmd.stat, [&](const auto& s) {
      switch (method) {
        case Method::db:
          interval(db_run(std::span<const DataTable>(blocks), s, cmd.b, engine_seed, run));
          break;
        case Method::pdb:
          interval(pdb_run(est, cmd.degenerate ? PdbMode::degenerate : PdbMode::nondegenerate, cmd.b, engine_seed,
                           run));
          break;
        case Method::sdb: {
          SdbOptions o;
          o.subset_size = n / cmd.k;
          o.subsets = cmd.b;
          o.inflation = parse_inflation(cmd.inflation);
          o.inflation_blocks = cmd.k;
          o.run = run;
          interval(sdb_run(data.table, s, engine_seed, o));
          break;
        }
        case Method::blb: {
          BlbOptions o;
          o.subset_mode = SubsetMode::disjoint_blocks;
          o.partition = partition;
          o.subsets = cmd.blb_subsets == 0 ? cmd.k : cmd.blb_subsets;
          o.resamples = cmd.blb_resamples;
          o.inflation = parse_inflation(cmd.inflation);
          o.inflation_blocks = cmd.k;
          o.level = cmd.level;
          o.run = run;
          const auto r = blb_run(data.table, s, engine_seed, o);
          replicates = r.per_subset;
          completed = r.completed;
          requested = r.requested;
          elapsed = r.elapsed_seconds;
          ci = ci_from_blb(r, est.aggregate, cmd.level, n);
          break;
        }
      }
      return 0;
    });
  } catch (const EmptyResultError& e) {
    std::cerr << "bootstrap: no iteration completed within the budget\n";
    Report r;
    r.experiment = "bootstrap";
    r.columns = {"method", "K", "N", "requested", "completed", "elapsed_seconds", "estimate", "lower", "upper",
                 "level", "status"};
    r.add({to_string(method), count(cmd.k), count(n), count(method == Method::blb ? cmd.k : cmd.b), count(0),
           cmd.budget, est.aggregate, na(), na(), cmd.level, std::string("empty")});
    emit(r, cmd.out);
    throw;
  }

  if (!cmd.replicates_path.empty()) {
    std::ofstream f(cmd.replicates_path, std::ios::binary);
    detail::require(f.good(), Errc::invalid_argument, "cannot write '" + cmd.replicates_path + "'");
    write_csv_record(f, {method == Method::blb ? "subset_width" : "replicate"});
    for (double v : replicates) write_csv_record(f, {format_double(v)});
  }
  Report r;
  r.experiment = "bootstrap";
  r.columns = {"method", "K", "N", "requested", "completed", "elapsed_seconds", "estimate", "lower", "upper",
               "level", "status"};
  r.add({to_string(method), count(cmd.k), count(n), count(requested), count(completed), elapsed, est.aggregate,
         real_or_na(ci.lower), real_or_na(ci.upper), cmd.level, status});
  r.meta["seed"] = cmd.seed;
  r.meta["kernel"] = cmd.stat.kernel;
  r.meta["budget_seconds"] = cmd.budget > 0.0 ? nlohmann::json(cmd.budget) : nlohmann::json();
  emit(r, cmd.out);
  if (status != "ok") detail::fail(Errc::insufficient_replicates, "fewer than 2 replicates completed");
}

// ---------------------------------------------------------------------------
// dcov-test and dm

struct DcovCmd {
  PairInput in;
  std::size_t k = 1;
  double tau = 0.05;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  OutputOptions out;
};

void run_dcov_test(const DcovCmd& cmd) {
  const auto data = load_pair(cmd.in);
  const auto s = dcov_distributed(data.pair, make_partition(data.pair.rows(), cmd.k, cmd.seed), cmd.threads);
  Report r;
  r.experiment = "dcov-test";
  r.columns = {"test", "K", "N", "dcov", "variance", "statistic", "critical_value", "p_value", "reject", "valid"};
  const auto add = [&](const std::string& name, const TestReport& t) {
    r.add({name, count(s.blocks()), count(s.total()), s.aggregate_yz, real_or_na(t.variance), real_or_na(t.statistic),
           t.critical_value, real_or_na(t.p_value), std::string(t.reject ? "true" : "false"),
           std::string(t.valid ? "true" : "false")});
    if (!t.valid) std::cerr << name << ": " << t.message << "\n";
  };
  add("T_Var", test_var(s, cmd.tau));
  if (s.blocks() >= 2) {
    add("T_block", test_block_var(s, cmd.tau));
  } else {
    std::cerr << "T_block: needs K >= 2, skipped\n";
  }
  r.meta["tau"] = cmd.tau;
  r.meta["rows_dropped"] = data.report.dropped;
  emit(r, cmd.out);
}

void run_dm(const DcovCmd& cmd) {
  const auto data = load_pair(cmd.in);
  const auto s = dcov_distributed(data.pair, make_partition(data.pair.rows(), cmd.k, cmd.seed), cmd.threads);
  const double dm = dependence_measure(s);
  Report r;
  r.experiment = "dm";
  r.columns = {"K", "N", "dcov", "block_variance", "dm"};
  r.add({count(s.blocks()), count(s.total()), s.aggregate_yz, block_variance(s), dm});
  r.meta["rows_dropped"] = data.report.dropped;
  emit(r, cmd.out);
}

// ---------------------------------------------------------------------------
// plan-k

struct PlanCmd {
  std::size_t n = 0;
  std::size_t k0 = 1;
  double budget = 0.0;
  double a = 2.0;
  double c = 1.0;
  double b = 2.0;
  double tau1 = 1.0;
  double eps = 0.1;
  OutputOptions out;
};

void run_plan(const PlanCmd& cmd) {
  const CostModel model(cmd.a, cmd.c, cmd.b);
  const std::size_t k = select_k(cmd.k0, model, cmd.n, cmd.budget);
  const double nn = static_cast<double>(cmd.n);
  const std::size_t ceiling = max_k_same_leading_mse(nn, cmd.tau1, cmd.eps);
  if (k > ceiling) {
    std::cerr << "note: K = " << k << " exceeds the advisory ceiling " << ceiling
              << " for keeping the full-sample leading MSE term\n";
  }
  Report r;
  r.experiment = "plan-k";
  r.columns = {"N", "K0", "budget", "a", "c", "K", "predicted_cost", "predicted_memory", "max_k_same_leading_mse"};
  r.add({count(cmd.n), count(cmd.k0), cmd.budget, cmd.a, cmd.c, count(k), predicted_cost(model, nn, static_cast<double>(k)),
         predicted_memory(model, nn, static_cast<double>(k)), count(ceiling)});
  emit(r, cmd.out);
}

// ---------------------------------------------------------------------------
// simulate and bench

struct SimCommon {
  std::string scenario = "gaussian";
  std::size_t n = 10000;
  std::vector<std::size_t> k_grid;
  std::size_t reps = 0;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  OutputOptions out;
};

void add_sim_common(CLI::App* app, SimCommon& s, bool scenario = true) {
  if (scenario) {
    app->add_option("--scenario", s.scenario, "gaussian, gamma or poisson")
        ->check(CLI::IsMember({"gaussian", "normal", "gamma", "poisson"}))
        ->capture_default_str();
  }
  app->add_option("--n", s.n, "Sample size N")->capture_default_str();
  app->add_option("--k", s.k_grid, "Grid of block counts K")->delimiter(',');
  app->add_option("--reps", s.reps, "Monte Carlo replications");
  app->add_option("--seed", s.seed, "Master seed")->capture_default_str();
  app->add_option("--threads", s.threads, "Worker threads (budgeted runs always use one)")->capture_default_str();
  add_output(app, s.out);
}

struct EngineCli {
  std::size_t b = 200;
  std::size_t blb_resamples = 100;
  std::size_t blb_subsets = 0;
  std::string inflation = "distributed";
  double budget = 0.0;
  double level = 0.95;
  std::vector<std::string> methods{"db", "pdb"};
  std::string impl = "sorted";
};

EngineSettings engine_of(const EngineCli& e) {
  EngineSettings s;
  s.b = e.b;
  s.blb_resamples = e.blb_resamples;
  s.blb_subsets = e.blb_subsets;
  s.inflation = parse_inflation(e.inflation);
  s.budget = budget_of(e.budget);
  s.level = e.level;
  return s;
}

struct SimCmd {
  SimCommon common;
  EngineCli engine;
  // time evolution
  double budget = 2.0;
  std::size_t ticks = 20;
  std::size_t oracle_reps = 500;
  std::size_t max_iterations = 100000;
  // dcov
  std::string pair_scenario = "I";
  std::vector<std::size_t> p_grid{5};
  double rho = 0.0;
  double tau = 0.05;
  // bench
  std::size_t repeats = 3;
  double a = 2.0;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed symmetric statistics: estimation, bootstrap inference, dcov tests and simulations"};
  app.set_config("--config", "", "TOML/INI file of option values; sections name subcommands");
  app.require_subcommand(1);
  app.fallthrough();

  PartitionCmd part;
  auto* p = app.add_subcommand("partition", "Random or predefined block assignment of a table's rows");
  p->add_option("input", part.in.path, "CSV file with a header row")->required()->check(CLI::ExistingFile);
  p->add_option("--k", part.k, "Number of blocks K")->capture_default_str();
  p->add_option("--seed", part.seed, "Seed")->capture_default_str();
  p->add_option("--assignment", part.assignment, "Column holding a predefined block index");
  p->add_option("--c1", part.c1, "Lower balance constant")->capture_default_str();
  p->add_option("--c2", part.c2, "Upper balance constant")->capture_default_str();
  add_output(p, part.out);

  EstimateCmd est;
  auto* e = app.add_subcommand("estimate", "Distributed U-statistic T_{N,K}");
  add_table_input(e, est.in);
  add_stat(e, est.stat);
  e->add_option("--k", est.k, "Number of blocks K")->capture_default_str();
  e->add_flag("--full", est.full, "Full-sample statistic (K = 1)");
  e->add_option("--seed", est.seed, "Partition seed")->capture_default_str();
  e->add_option("--threads", est.threads, "Worker threads")->capture_default_str();
  e->add_flag("--blocks", est.blocks, "Print the per-block values instead of the aggregate");
  add_output(e, est.out);

  BootstrapCmd boot;
  auto* b = app.add_subcommand("bootstrap", "DB, PDB, BLB or SDB confidence interval");
  add_table_input(b, boot.in);
  add_stat(b, boot.stat);
  b->add_option("--method", boot.method, "db, pdb, blb or sdb")->capture_default_str();
  b->add_option("--k", boot.k, "Number of blocks K")->capture_default_str();
  b->add_option("--b", boot.b, "Replicates (DB, PDB) or subsets (SDB)")->capture_default_str();
  b->add_option("--budget", boot.budget, "Wall-clock budget in seconds (0: none)")->capture_default_str();
  b->add_option("--level", boot.level, "Confidence level")->capture_default_str();
  b->add_option("--blb-resamples", boot.blb_resamples, "Resamples per BLB subset")->capture_default_str();
  b->add_option("--blb-subsets", boot.blb_subsets, "BLB subsets (0: all K blocks)")->capture_default_str();
  b->add_option("--inflation", boot.inflation, "distributed or pooled")->capture_default_str();
  b->add_flag("--degenerate", boot.degenerate, "PDB scaling for degenerate kernels");
  b->add_option("--seed", boot.seed, "Seed")->capture_default_str();
  b->add_option("--replicates", boot.replicates_path, "Also write the replicates to this CSV file");
  add_output(b, boot.out);

  DcovCmd dtest;
  auto* dt = app.add_subcommand("dcov-test", "Distributed distance-covariance independence tests");
  add_pair_input(dt, dtest.in);
  dt->add_option("--k", dtest.k, "Number of blocks K")->capture_default_str();
  dt->add_option("--tau", dtest.tau, "Significance level")->capture_default_str();
  dt->add_option("--seed", dtest.seed, "Partition seed")->capture_default_str();
  dt->add_option("--threads", dtest.threads, "Worker threads")->capture_default_str();
  add_output(dt, dtest.out);

  DcovCmd dmc;
  auto* dm = app.add_subcommand("dm", "Dependence measure DM(Y, Z)");
  add_pair_input(dm, dmc.in);
  dm->add_option("--k", dmc.k, "Number of blocks K (at least 2)")->capture_default_str();
  dm->add_option("--seed", dmc.seed, "Partition seed")->capture_default_str();
  dm->add_option("--threads", dmc.threads, "Worker threads")->capture_default_str();
  add_output(dm, dmc.out);

  PlanCmd plan;
  auto* pk = app.add_subcommand("plan-k", "Choose K under a computing budget");
  pk->add_option("--n", plan.n, "Sample size N")->required();
  pk->add_option("--k0", plan.k0, "Minimum K")->capture_default_str();
  pk->add_option("--budget", plan.budget, "Budget C0 in cost units")->required();
  pk->add_option("--a", plan.a, "Cost exponent")->capture_default_str();
  pk->add_option("--c", plan.c, "Cost constant")->capture_default_str();
  pk->add_option("--mem-exponent", plan.b, "Memory exponent")->capture_default_str();
  pk->add_option("--tau1", plan.tau1, "Moment order for the MSE ceiling")->capture_default_str();
  pk->add_option("--eps", plan.eps, "Safety margin for the MSE ceiling")->capture_default_str();
  add_output(pk, plan.out);

  SimCmd sim;
  auto* s = app.add_subcommand("simulate", "Monte Carlo experiments");
  s->require_subcommand(1);
  auto* s_cov = s->add_subcommand("coverage", "Coverage and width of bootstrap intervals");
  add_sim_common(s_cov, sim.common);
  s_cov->add_option("--methods", sim.engine.methods, "Methods")->delimiter(',');
  s_cov->add_option("--b", sim.engine.b, "Replicates")->capture_default_str();
  s_cov->add_option("--blb-resamples", sim.engine.blb_resamples, "Resamples per BLB subset")->capture_default_str();
  s_cov->add_option("--blb-subsets", sim.engine.blb_subsets, "BLB subsets (0: K)")->capture_default_str();
  s_cov->add_option("--inflation", sim.engine.inflation, "distributed or pooled")->capture_default_str();
  s_cov->add_option("--budget", sim.engine.budget, "Per-run budget in seconds (0: none)")->capture_default_str();
  s_cov->add_option("--level", sim.engine.level, "Confidence level")->capture_default_str();
  s_cov->add_option("--impl", sim.engine.impl, "exact or sorted")->capture_default_str();
  auto* s_mse = s->add_subcommand("mse", "MSE of T_{N,K} and of the jackknife variance relative to K = 1");
  add_sim_common(s_mse, sim.common);
  auto* s_deg = s->add_subcommand("degenerate", "Variance inflation for the degenerate product kernel");
  add_sim_common(s_deg, sim.common, false);
  auto* s_time = s->add_subcommand("time", "Relative error of interval widths against elapsed time");
  add_sim_common(s_time, sim.common);
  s_time->add_option("--methods", sim.engine.methods, "Methods")->delimiter(',');
  s_time->add_option("--budget", sim.budget, "Budget in seconds")->capture_default_str();
  s_time->add_option("--ticks", sim.ticks, "Time grid points")->capture_default_str();
  s_time->add_option("--oracle-reps", sim.oracle_reps, "Samples for the true width")->capture_default_str();
  s_time->add_option("--max-iterations", sim.max_iterations, "Iteration cap per run")->capture_default_str();
  s_time->add_option("--blb-resamples", sim.engine.blb_resamples, "Resamples per BLB subset")->capture_default_str();
  s_time->add_option("--inflation", sim.engine.inflation, "distributed or pooled")->capture_default_str();
  s_time->add_option("--level", sim.engine.level, "Confidence level")->capture_default_str();
  s_time->add_option("--impl", sim.engine.impl, "exact or sorted");
  auto* s_dcov = s->add_subcommand("dcov", "Size and power of the distance-covariance tests");
  add_sim_common(s_dcov, sim.common, false);
  s_dcov->add_option("--pair-scenario", sim.pair_scenario, "I, II or III")->capture_default_str();
  s_dcov->add_option("--p", sim.p_grid, "Grid of dimensions p")->delimiter(',');
  s_dcov->add_option("--rho", sim.rho, "Cross-correlation (0: size)")->capture_default_str();
  s_dcov->add_option("--tau", sim.tau, "Significance level")->capture_default_str();

  auto* bench = app.add_subcommand("bench", "Timing benchmarks");
  bench->require_subcommand(1);
  auto* b_time = bench->add_subcommand("timing", "Wall time of T_{N,K} across K");
  add_sim_common(b_time, sim.common);
  b_time->add_option("--repeats", sim.repeats, "Repeats (fastest is kept)")->capture_default_str();
  b_time->add_option("--a", sim.a, "Cost exponent for the predicted ratio")->capture_default_str();
  b_time->add_option("--impl", sim.engine.impl, "exact or sorted");
  auto* b_tp = bench->add_subcommand("throughput", "Iterations completed within a budget");
  add_sim_common(b_tp, sim.common);
  b_tp->add_option("--methods", sim.engine.methods, "Methods")->delimiter(',');
  b_tp->add_option("--budget", sim.budget, "Budget in seconds")->capture_default_str();
  b_tp->add_option("--max-iterations", sim.max_iterations, "Iteration cap")->capture_default_str();
  b_tp->add_option("--blb-resamples", sim.engine.blb_resamples, "Resamples per BLB subset")->capture_default_str();
  b_tp->add_option("--inflation", sim.engine.inflation, "distributed or pooled")->capture_default_str();
  b_tp->add_option("--impl", sim.engine.impl, "exact or sorted");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    const auto& c = sim.common;
    const auto grid_or = [&](std::vector<std::size_t> def) { return c.k_grid.empty() ? def : c.k_grid; };
    const auto reps_or = [&](std::size_t def) { return c.reps == 0 ? def : c.reps; };
    const auto all_methods = std::vector<std::string>{"db", "pdb", "blb", "sdb"};
    const auto methods_or_all = [&](CLI::App* sub) {
      return sub->count("--methods") ? parse_methods(sim.engine.methods) : parse_methods(all_methods);
    };

    if (*p) {
      run_partition(part);
    } else if (*e) {
      run_estimate(est);
    } else if (*b) {
      run_bootstrap(boot);
    } else if (*dt) {
      run_dcov_test(dtest);
    } else if (*dm) {
      run_dm(dmc);
    } else if (*pk) {
      run_plan(plan);
    } else if (*s_cov) {
      CoverageConfig cfg;
      cfg.dist = scenario_by_name(c.scenario);
      cfg.n = c.n;
      cfg.k_grid = grid_or({100});
      cfg.methods = parse_methods(sim.engine.methods);
      cfg.replications = reps_or(500);
      cfg.engine = engine_of(sim.engine);
      cfg.impl = gini_impl_by_name(sim.engine.impl);
      cfg.seed = c.seed;
      cfg.threads = c.threads;
      emit(coverage_report(cfg, simulate_coverage(cfg)), c.out);
    } else if (*s_mse) {
      MseConfig cfg;
      cfg.dist = scenario_by_name(c.scenario);
      cfg.n = c.n;
      cfg.k_grid = grid_or({1, 10, 50, 100});
      cfg.replications = reps_or(1000);
      cfg.seed = c.seed;
      cfg.threads = c.threads;
      emit(mse_report(cfg, simulate_mse_ratio(cfg)), c.out);
    } else if (*s_deg) {
      DegenerateConfig cfg;
      cfg.n = s_deg->count("--n") ? c.n : 4000;
      cfg.k_grid = grid_or({10, 40});
      cfg.replications = reps_or(1000);
      cfg.seed = c.seed;
      cfg.threads = c.threads;
      emit(degenerate_report(cfg, simulate_degenerate_variance(cfg)), c.out);
    } else if (*s_time) {
      TimeEvolutionConfig cfg;
      cfg.dist = scenario_by_name(c.scenario);
      cfg.n = c.n;
      cfg.k_grid = grid_or({20, 100});
      cfg.methods = methods_or_all(s_time);
      cfg.budget_seconds = sim.budget;
      cfg.ticks = sim.ticks;
      cfg.replications = reps_or(3);
      cfg.oracle_replications = sim.oracle_reps;
      cfg.max_iterations = sim.max_iterations;
      cfg.blb_resamples = sim.engine.blb_resamples;
      cfg.inflation = parse_inflation(sim.engine.inflation);
      cfg.level = sim.engine.level;
      cfg.impl = s_time->count("--impl") ? gini_impl_by_name(sim.engine.impl) : GiniImpl::exact;
      cfg.seed = c.seed;
      emit(time_evolution_report(cfg, simulate_time_evolution(cfg)), c.out);
    } else if (*s_dcov) {
      DcovConfig cfg;
      cfg.scenario = pair_scenario_by_name(sim.pair_scenario);
      cfg.p_grid = sim.p_grid;
      cfg.k_grid = grid_or({20, 100});
      cfg.rho = sim.rho;
      cfg.n = c.n;
      cfg.replications = reps_or(500);
      cfg.tau = sim.tau;
      cfg.seed = c.seed;
      cfg.threads = c.threads;
      emit(dcov_report(cfg, simulate_dcov(cfg)), c.out);
    } else if (*b_time) {
      TimingConfig cfg;
      cfg.dist = scenario_by_name(c.scenario);
      cfg.n = b_time->count("--n") ? c.n : 20000;
      cfg.k_grid = grid_or({1, 20});
      cfg.repeats = sim.repeats;
      cfg.impl = b_time->count("--impl") ? gini_impl_by_name(sim.engine.impl) : GiniImpl::exact;
      cfg.a = sim.a;
      cfg.seed = c.seed;
      emit(timing_report(cfg, bench_timing(cfg)), c.out);
    } else if (*b_tp) {
      ThroughputConfig cfg;
      cfg.dist = scenario_by_name(c.scenario);
      cfg.n = b_tp->count("--n") ? c.n : 100000;
      cfg.k_grid = grid_or({100});
      cfg.methods = methods_or_all(b_tp);
      cfg.budget_seconds = sim.budget;
      cfg.max_iterations = sim.max_iterations;
      cfg.blb_resamples = sim.engine.blb_resamples;
      cfg.inflation = parse_inflation(sim.engine.inflation);
      cfg.impl = b_tp->count("--impl") ? gini_impl_by_name(sim.engine.impl) : GiniImpl::exact;
      cfg.seed = c.seed;
      emit(throughput_report(cfg, bench_throughput(cfg)), c.out);
    }
  } catch (const Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return exit_code(err.code());
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return 0;
}
