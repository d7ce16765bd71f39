#pragma once

// Batch runner: every (policy, scenario, trial index) job runs on a worker
// pool; results are merged in job order and written once.

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "tmpc/ballbot.hpp"
#include "tmpc/config.hpp"
#include "tmpc/external.hpp"
#include "tmpc/io.hpp"
#include "tmpc/mpc.hpp"
#include "tmpc/rollouts.hpp"
#include "tmpc/sim.hpp"
#include "tmpc/stats.hpp"

namespace tmpc::runner {

struct Job {
  std::string policy;
  std::size_t scenario = 0;
  int index = 0;
};

struct TrialRecord {
  io::TrialRow row;
  std::string error;  // nonempty when the trial failed
  double max_inclination = 0.0;
};

struct BatchResult {
  std::vector<TrialRecord> trials;  // job order
  std::vector<io::SummaryRow> summary;
  std::size_t failures = 0;
};

/// Shared, read-only resources of a batch.
struct Resources {
  std::shared_ptr<const ballbot::DiscreteModel> model;
  std::shared_ptr<external::PolicyProcess> robot_process;
  std::shared_ptr<external::PolicyProcess> human_process;
  std::shared_ptr<external::PolicyProcess> rollout_process;
};

inline Resources make_resources(const config::RunConfig& cfg) {
  Resources r;
  r.model = std::make_shared<const ballbot::DiscreteModel>(ballbot::synthesize(cfg.ballbot, cfg.controller));
  const auto uses = [&](const std::string& needle) {
    return std::any_of(cfg.policies.begin(), cfg.policies.end(), [&](const std::string& p) { return p == needle; });
  };
  if (uses("external")) r.robot_process = std::make_shared<external::PolicyProcess>(cfg.external.robot_command);
  if (uses("V-MPC-external") || uses("T-MPC-external")) {
    r.rollout_process = std::make_shared<external::PolicyProcess>(cfg.external.rollout_command);
  }
  if (cfg.world == "external") r.human_process = std::make_shared<external::PolicyProcess>(cfg.external.human_command);
  return r;
}

inline std::unique_ptr<sim::RobotController> make_controller(const std::string& policy, const config::RunConfig& cfg,
                                                             const Resources& res) {
  if (policy == "CV") return std::make_unique<sim::CvController>();
  if (policy == "ORCA") return std::make_unique<sim::OrcaController>(cfg.orca);
  if (policy == "external") return std::make_unique<sim::ExternalController>(res.robot_process);
  if (!config::is_mpc_policy(policy)) throw config::ConfigError("unknown policy id '" + policy + "'");

  mpc::MpcConfig m = cfg.mpc;
  m.variant = policy[0] == 'T' ? mpc::Variant::Topology : mpc::Variant::Vanilla;
  const std::string rollout = policy.substr(6);
  std::shared_ptr<const rollouts::RolloutPolicy> rp;
  if (rollout == "CV") {
    m.rollout_policy = rollouts::PolicyTag::CV;
    rp = std::make_shared<rollouts::CvRolloutPolicy>(m.v_pref);
  } else if (rollout == "ORCA") {
    m.rollout_policy = rollouts::PolicyTag::ORCA;
    rp = std::make_shared<rollouts::OrcaRolloutPolicy>(cfg.orca);
  } else {
    m.rollout_policy = rollouts::PolicyTag::External;
    rp = std::make_shared<rollouts::ExternalRolloutPolicy>(res.rollout_process, cfg.controller.max_reference_speed);
  }
  return std::make_unique<sim::MpcController>(m, res.model, rp);
}

inline std::unique_ptr<sim::HumanPolicy> make_human_policy(const config::RunConfig& cfg, const Resources& res) {
  if (cfg.world == "external") return std::make_unique<sim::ExternalHumanPolicy>(res.human_process, cfg.orca.max_speed);
  return std::make_unique<sim::OrcaHumanPolicy>(cfg.orca);
}

inline std::vector<Job> jobs(const config::RunConfig& cfg) {
  std::vector<Job> out;
  for (const auto& p : cfg.policies)
    for (std::size_t s = 0; s < cfg.scenarios.size(); ++s)
      for (int i = 0; i < cfg.trials; ++i) out.push_back({p, s, i});
  return out;
}

/// Runs one job and, when `out_dir` is nonempty, dumps its trajectories.
inline TrialRecord run_job(const Job& job, const config::RunConfig& cfg, const Resources& res,
                           const std::filesystem::path& out_dir) {
  const auto& tmpl = cfg.scenarios[job.scenario];
  TrialRecord rec;
  rec.row.trial_id = io::trial_id(job.policy, tmpl.id, job.index);
  rec.row.policy = job.policy;
  rec.row.scenario = tmpl.id;

  // Human endpoints depend on (master seed, trial index) only, so every
  // policy sees the same scenarios.
  const auto spec = sim::sample_scenario(tmpl, static_cast<std::uint64_t>(job.index), cfg.master_seed);
  rec.row.seed = spec.seed;
  sim::TrialResult tr;
  bool ran = false;
  try {
    auto controller = make_controller(job.policy, cfg, res);
    auto humans = make_human_policy(cfg, res);
    tr = sim::run_trial(spec, *controller, *humans, *res.model, cfg.sim, cfg.log_plans);
    ran = true;
  } catch (const std::exception& e) {
    tr.failed = true;
    tr.error = e.what();
  }
  rec.row.D = tr.safety_D;
  rec.row.T = tr.efficiency_T;
  rec.row.collided = tr.collided;
  rec.row.status = tr.failed ? "failed" : tr.collided ? "collision" : tr.timed_out ? "timeout" : "reached";
  rec.error = tr.error;
  rec.max_inclination = tr.max_inclination;

  if (!out_dir.empty() && ran) {
    std::string dump = io::trajectory_jsonl(tr.robot_traj, "robot");
    for (std::size_t i = 0; i < tr.human_trajs.size(); ++i) {
      dump += io::trajectory_jsonl(tr.human_trajs[i], "human" + std::to_string(i));
    }
    io::write_atomic(out_dir / "trajectories" / (rec.row.trial_id + ".jsonl"), dump);
  }
  if (!out_dir.empty() && cfg.log_plans && !tr.plan_log.empty()) {
    std::string log;
    for (const auto& r : tr.plan_log) log += r.dump() + "\n";
    io::write_atomic(out_dir / "plans" / (rec.row.trial_id + ".jsonl"), log);
  }
  return rec;
}

/// Mean and sample std; an all-infinite column (no humans) reports inf and 0.
inline std::pair<double, double> column_stats(const std::vector<double>& v) {
  const bool all_inf = std::all_of(v.begin(), v.end(), [](double x) { return std::isinf(x) && x > 0; });
  if (all_inf) return {std::numeric_limits<double>::infinity(), 0.0};
  return {stats::mean(v), stats::stddev(v)};
}

/// Summary rows in (policy, scenario) config order over trials that did not
/// fail.
inline std::vector<io::SummaryRow> summarize(const std::vector<io::TrialRow>& rows, const config::RunConfig& cfg) {
  std::vector<io::SummaryRow> out;
  for (const auto& p : cfg.policies) {
    for (const auto& s : cfg.scenarios) {
      std::vector<double> d, t;
      for (const auto& r : rows) {
        if (r.policy == p && r.scenario == s.id && r.status != "failed") {
          d.push_back(r.D);
          t.push_back(r.T);
        }
      }
      io::SummaryRow row{p, s.id, cfg.world};
      row.n = d.size();
      if (!d.empty()) {
        std::tie(row.mean_D, row.std_D) = column_stats(d);
        std::tie(row.mean_T, row.std_T) = column_stats(t);
      } else {
        row.mean_D = row.std_D = row.mean_T = row.std_T = std::numeric_limits<double>::quiet_NaN();
      }
      out.push_back(row);
    }
  }
  return out;
}

inline nlohmann::json model_json(const ballbot::DiscreteModel& m) {
  auto mat = [](const Eigen::MatrixXd& a) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      nlohmann::json row = nlohmann::json::array();
      for (Eigen::Index j = 0; j < a.cols(); ++j) row.push_back(a(i, j));
      rows.push_back(row);
    }
    return rows;
  };
  return {{"A", mat(m.A)},
          {"B", mat(m.B)},
          {"Ad", mat(m.Ad)},
          {"Bd", mat(m.Bd)},
          {"K", mat(m.K)},
          {"T", m.T()},
          {"spectral_radius", ballbot::spectral_radius(m.closed_loop)}};
}

/// Runs the whole batch and writes trials.csv, summary.csv and the per-trial
/// dumps under cfg.out (nothing is written when cfg.out is empty).
inline BatchResult run_batch(const config::RunConfig& cfg, std::ostream* progress = nullptr) {
  cfg.validate();
  const Resources res = make_resources(cfg);
  const auto all = jobs(cfg);
  const std::filesystem::path out_dir = cfg.out;

  BatchResult result;
  result.trials.resize(all.size());
  std::atomic<std::size_t> next{0};
  std::mutex progress_mutex;
  std::size_t done = 0;
  auto worker = [&] {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= all.size()) return;
      result.trials[k] = run_job(all[k], cfg, res, out_dir);
      if (progress) {
        std::lock_guard lock(progress_mutex);
        ++done;
        if (done % 50 == 0 || done == all.size()) *progress << "  " << done << "/" << all.size() << " trials\n";
      }
    }
  };
  unsigned n_workers = cfg.workers > 0 ? static_cast<unsigned>(cfg.workers) : std::max(1u, std::thread::hardware_concurrency());
  n_workers = std::min<unsigned>(n_workers, static_cast<unsigned>(std::max<std::size_t>(1, all.size())));
  std::vector<std::thread> pool;
  for (unsigned i = 1; i < n_workers; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::vector<io::TrialRow> rows;
  for (const auto& t : result.trials) {
    rows.push_back(t.row);
    if (t.row.status == "failed") ++result.failures;
  }
  result.summary = summarize(rows, cfg);

  if (!out_dir.empty()) {
    io::write_atomic(out_dir / "trials.csv", io::trials_csv(rows));
    io::write_atomic(out_dir / "summary.csv", io::summary_csv(result.summary));
    if (result.failures > 0) {
      std::string s;
      for (const auto& t : result.trials) {
        if (t.row.status == "failed") s += nlohmann::json{{"trial_id", t.row.trial_id}, {"error", t.error}}.dump() + "\n";
      }
      io::write_atomic(out_dir / "failures.jsonl", s);
    }
    if (cfg.dump_model) io::write_atomic(out_dir / "model.json", model_json(*res.model).dump(2) + "\n");
  }
  return result;
}

// =============================================================================
// Cells for comparisons
// =============================================================================

/// A cell reference "FILE[:POLICY[:SCENARIO]]" into a trials.csv.
struct CellRef {
  std::string file;
  std::string policy;
  std::string scenario;
  std::string label() const {
    std::string s = policy.empty() ? "*" : policy;
    return s + "/" + (scenario.empty() ? "*" : scenario);
  }
};

inline CellRef parse_cell(const std::string& text) {
  const auto parts = io::split(text, ':');
  if (parts.empty() || parts[0].empty() || parts.size() > 3) throw config::ConfigError("bad cell '" + text + "'");
  CellRef c{parts[0], parts.size() > 1 ? parts[1] : "", parts.size() > 2 ? parts[2] : ""};
  return c;
}

/// Metric values of the completed trials in a cell.
inline std::vector<double> cell_values(const CellRef& cell, const std::string& metric) {
  if (metric != "D" && metric != "T") throw config::ConfigError("metric must be D or T");
  const auto rows = io::parse_trials_csv(io::read_file(cell.file));
  std::vector<double> out;
  for (const auto& r : rows) {
    if (!cell.policy.empty() && r.policy != cell.policy) continue;
    if (!cell.scenario.empty() && r.scenario != cell.scenario) continue;
    if (r.status == "failed") continue;
    out.push_back(metric == "D" ? r.D : r.T);
  }
  if (out.empty()) throw stats::MissingCell("no completed trials for cell " + cell.file + ":" + cell.label());
  return out;
}

inline nlohmann::json comparison_json(const stats::Comparison& c, const CellRef& a, const CellRef& b) {
  return {{"metric", c.metric},
          {"a", {{"file", a.file}, {"policy", a.policy}, {"scenario", a.scenario}, {"n", c.n_a}, {"mean", c.mean_a}, {"std", c.std_a}}},
          {"b", {{"file", b.file}, {"policy", b.policy}, {"scenario", b.scenario}, {"n", c.n_b}, {"mean", c.mean_b}, {"std", c.std_b}}},
          {"percent_change", c.percent_change},
          {"U_a", c.test.U_a},
          {"U_b", c.test.U_b},
          {"exact", c.test.exact},
          {"p_two_sided", c.test.p_two_sided},
          {"p_one_sided", c.test.p_one_sided},
          {"p_greater", c.test.p_greater},
          {"p_less", c.test.p_less},
          {"stars", c.stars}};
}

}  // namespace tmpc::runner
