// tmpc: batch experiments and significance tests.
//
//   tmpc run --config FILE [--policy ID] [--scenario ID] [--trials N] [--seed S]
//            [--out DIR] [--log-plans] [--dump-model]
//   tmpc compare --a CELL --b CELL --metric D|T [--out FILE]
//   tmpc stats --file trials.csv
//
// A CELL is FILE[:POLICY[:SCENARIO]] over a trials.csv.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tmpc/config.hpp"
#include "tmpc/io.hpp"
#include "tmpc/runner.hpp"
#include "tmpc/stats.hpp"

namespace {

constexpr int kConfigError = 2;
constexpr int kTrialFailures = 3;

std::string num(double v, int prec = 3) {
  if (!std::isfinite(v)) return tmpc::io::fmt(v);
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  return buf;
}

int cmd_run(const std::string& config_path, const std::vector<std::string>& policies,
            const std::vector<std::string>& scenarios, int trials, long long seed, const std::string& out,
            bool log_plans, bool dump_model) {
  tmpc::config::RunConfig cfg;
  try {
    cfg = tmpc::config::load(config_path);
    if (!policies.empty()) cfg.policies = policies;
    if (!scenarios.empty()) {
      std::vector<tmpc::sim::ScenarioTemplate> picked;
      for (const auto& id : scenarios) {
        auto it = std::find_if(cfg.scenarios.begin(), cfg.scenarios.end(), [&](const auto& s) { return s.id == id; });
        picked.push_back(it != cfg.scenarios.end() ? *it : tmpc::config::detail::scenario_by_id(id));
      }
      cfg.scenarios = picked;
    }
    if (trials > 0) cfg.trials = trials;
    if (seed >= 0) cfg.master_seed = static_cast<std::uint64_t>(seed);
    if (!out.empty()) cfg.out = out;
    cfg.log_plans = cfg.log_plans || log_plans;
    cfg.dump_model = cfg.dump_model || dump_model;
    cfg.validate();
  } catch (const tmpc::Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  }

  std::cerr << "running " << cfg.policies.size() * cfg.scenarios.size() * static_cast<std::size_t>(cfg.trials)
            << " trials into " << cfg.out << "\n";
  const auto result = tmpc::runner::run_batch(cfg, &std::cerr);

  std::printf("%-16s %-14s %-8s %14s %14s %5s\n", "policy", "scenario", "world", "D", "T", "n");
  for (const auto& r : result.summary) {
    std::printf("%-16s %-14s %-8s %14s %14s %5zu\n", r.policy.c_str(), r.scenario.c_str(), r.world.c_str(),
                (num(r.mean_D, 2) + " +- " + num(r.std_D, 2)).c_str(), (num(r.mean_T, 2) + " +- " + num(r.std_T, 2)).c_str(),
                r.n);
  }
  if (result.failures > 0) {
    std::cerr << result.failures << " trial(s) failed; see " << (std::filesystem::path(cfg.out) / "failures.jsonl").string()
              << "\n";
    return kTrialFailures;
  }
  return 0;
}

int cmd_compare(const std::string& a_text, const std::string& b_text, const std::string& metric, std::string out) {
  tmpc::runner::CellRef a, b;
  std::vector<double> va, vb;
  try {
    a = tmpc::runner::parse_cell(a_text);
    b = tmpc::runner::parse_cell(b_text);
    va = tmpc::runner::cell_values(a, metric);
    vb = tmpc::runner::cell_values(b, metric);
  } catch (const tmpc::Error& e) {
    std::cerr << "compare: " << e.what() << "\n";
    return kConfigError;
  }
  const auto c = tmpc::stats::compare(va, vb, metric);
  std::printf("%s  a %s: %s +- %s (n=%zu)\n", metric.c_str(), a.label().c_str(), num(c.mean_a).c_str(),
              num(c.std_a).c_str(), c.n_a);
  std::printf("%s  b %s: %s +- %s (n=%zu)\n", metric.c_str(), b.label().c_str(), num(c.mean_b).c_str(),
              num(c.std_b).c_str(), c.n_b);
  std::printf("change %s%%  U=%s  p(two-sided)=%.3g  p(a>b)=%.3g  p(a<b)=%.3g  %s%s\n", num(c.percent_change, 1).c_str(),
              tmpc::io::fmt(c.test.U_a).c_str(), c.test.p_two_sided, c.test.p_greater, c.test.p_less,
              c.test.exact ? "exact " : "", c.stars.c_str());

  if (out.empty()) out = (std::filesystem::path(a.file).parent_path() / "comparison.json").string();
  tmpc::io::write_atomic(out, tmpc::runner::comparison_json(c, a, b).dump(2) + "\n");
  return 0;
}

int cmd_stats(const std::string& file) {
  std::vector<tmpc::io::TrialRow> rows;
  try {
    rows = tmpc::io::parse_trials_csv(tmpc::io::read_file(file));
  } catch (const tmpc::Error& e) {
    std::cerr << "stats: " << e.what() << "\n";
    return kConfigError;
  }
  // Cells in first-appearance order.
  std::vector<std::pair<std::string, std::string>> order;
  std::map<std::pair<std::string, std::string>, std::vector<const tmpc::io::TrialRow*>> cells;
  for (const auto& r : rows) {
    auto key = std::make_pair(r.policy, r.scenario);
    if (!cells.count(key)) order.push_back(key);
    cells[key].push_back(&r);
  }
  std::printf("%-16s %-14s %14s %14s %5s %5s %5s\n", "policy", "scenario", "D", "T", "n", "coll", "fail");
  for (const auto& key : order) {
    std::vector<double> d, t;
    int coll = 0, fail = 0;
    for (const auto* r : cells[key]) {
      if (r->status == "failed") {
        ++fail;
        continue;
      }
      d.push_back(r->D);
      t.push_back(r->T);
      coll += r->collided;
    }
    std::string ds = "-", ts = "-";
    if (!d.empty()) {
      const auto [md, sd] = tmpc::runner::column_stats(d);
      const auto [mt, st] = tmpc::runner::column_stats(t);
      ds = num(md, 2) + " +- " + num(sd, 2);
      ts = num(mt, 2) + " +- " + num(st, 2);
    }
    std::printf("%-16s %-14s %14s %14s %5zu %5d %5d\n", key.first.c_str(), key.second.c_str(), ds.c_str(), ts.c_str(),
                d.size(), coll, fail);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Topology-informed MPC experiments"};
  app.require_subcommand(1);

  std::string config_path, out;
  std::vector<std::string> policies, scenarios;
  int trials = 0;
  long long seed = -1;
  bool log_plans = false, dump_model = false;
  auto* run = app.add_subcommand("run", "run a batch of trials");
  run->add_option("--config", config_path, "JSON run configuration")->required()->check(CLI::ExistingFile);
  run->add_option("--policy", policies, "policy id (repeatable)");
  run->add_option("--scenario", scenarios, "scenario id (repeatable)");
  run->add_option("--trials", trials, "trials per cell")->check(CLI::PositiveNumber);
  run->add_option("--seed", seed, "master seed")->check(CLI::NonNegativeNumber);
  run->add_option("--out", out, "output directory");
  run->add_flag("--log-plans", log_plans, "write per-cycle MPC costs");
  run->add_flag("--dump-model", dump_model, "write the discretized ballbot model");

  std::string cell_a, cell_b, metric = "D", cmp_out;
  auto* compare = app.add_subcommand("compare", "U test between two cells");
  compare->add_option("--a", cell_a, "FILE[:POLICY[:SCENARIO]]")->required();
  compare->add_option("--b", cell_b, "baseline FILE[:POLICY[:SCENARIO]]")->required();
  compare->add_option("--metric", metric, "D or T")->check(CLI::IsMember({"D", "T"}));
  compare->add_option("--out", cmp_out, "comparison.json path (default: next to the first file)");

  std::string stats_file;
  auto* stats = app.add_subcommand("stats", "per-cell summary of a trials.csv");
  stats->add_option("--file", stats_file, "trials.csv")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  try {
    if (*run) return cmd_run(config_path, policies, scenarios, trials, seed, out, log_plans, dump_model);
    if (*compare) return cmd_compare(cell_a, cell_b, metric, cmp_out);
    if (*stats) return cmd_stats(stats_file);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
