#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "npi/benchmarks.hpp"
#include "npi/config.hpp"
#include "npi/elm_pi.hpp"
#include "npi/parallel.hpp"
#include "npi/pinn_pi.hpp"
#include "npi/rng.hpp"
#include "npi/sim.hpp"
#include "npi/smt_export.hpp"
#include "npi/valuenet_io.hpp"
#include "npi/verify.hpp"

namespace npi {

namespace fs = std::filesystem;

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

inline nlohmann::json number_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); }

struct SolveSummary {
  std::string benchmark;
  std::string algorithm;
  int n = 0;
  int m = 0;
  int N = 0;
  double error = std::numeric_limits<double>::quiet_NaN();
  double wall_ms = 0.0;
  int iterations = 0;
  std::string status;
  std::vector<std::string> warnings;
  ValueNet net;

  nlohmann::json to_json() const {
    return {{"benchmark", benchmark}, {"algorithm", algorithm}, {"n", n},           {"m", m},
            {"N", N},                 {"final_test_error", number_or_null(error)}, {"wall_ms", wall_ms},
            {"iterations", iterations}, {"status", status},     {"warnings", warnings}};
  }
};

/// Runs ELM-PI or PINN-PI; with a non-empty out_dir writes iterations.csv,
/// net.json and summary.json there.
inline SolveSummary cmd_solve(RunConfig c, const std::string& out_dir, int threads = 1) {
  c.sync();
  const Benchmark bm = make_benchmark(c.benchmark);
  const Policy kappa0 = default_initial_policy(bm);
  SolveSummary s;
  s.benchmark = c.benchmark;
  s.algorithm = to_string(c.algorithm);
  s.n = bm.system.state_dim();
  s.m = c.width;
  if (!out_dir.empty()) fs::create_directories(out_dir);
  PiRun run;
  if (c.algorithm == Algorithm::elm) {
    c.elm.threads = threads;
    run = run_elm_pi(bm, kappa0, c.elm);
    if (!out_dir.empty()) write_elm_csv(run, (fs::path(out_dir) / "iterations.csv").string());
  } else {
    c.pinn.threads = threads;
    if (!out_dir.empty()) c.pinn.checkpoint_dir = (fs::path(out_dir) / "checkpoints").string();
    PinnRun pr = run_pinn_pi(bm, kappa0, c.pinn, c.width);
    if (!out_dir.empty()) write_pinn_csv(pr, (fs::path(out_dir) / "iterations.csv").string());
    run = std::move(pr.pi);
  }
  s.N = run.collocation_count;
  s.error = run.final_test_error();
  s.wall_ms = run.wall_ms;
  s.iterations = static_cast<int>(run.history.size());
  s.status = to_string(run.status);
  s.warnings = run.warnings;
  s.net = run.final_net();
  if (!out_dir.empty()) {
    save_value_net(s.net, (fs::path(out_dir) / "net.json").string());
    write_text(fs::path(out_dir) / "summary.json", s.to_json().dump(1) + "\n");
  }
  return s;
}

inline nlohmann::json report_to_json(const VerificationReport& r, const VerificationSpec& spec) {
  nlohmann::json j{{"outcome", to_string(r.outcome)},
                   {"mode", to_string(spec.mode)},
                   {"condition_id", r.condition_id},
                   {"boxes_processed", r.boxes_processed},
                   {"wall_ms", r.wall_ms},
                   {"mean_enclosure_width", r.mean_enclosure_width}};
  if (r.witness) {
    const Witness& w = *r.witness;
    j["witness"] = {{"point", std::vector<double>(w.point.data(), w.point.data() + w.point.size())},
                    {"point_value", w.point_value},
                    {"enclosure", {w.box_enclosure.lo(), w.box_enclosure.hi()}},
                    {"box_lo", std::vector<double>(w.box_lo.data(), w.box_lo.data() + w.box_lo.size())},
                    {"box_hi", std::vector<double>(w.box_hi.data(), w.box_hi.data() + w.box_hi.size())}};
  }
  return j;
}

inline int verify_exit_code(VerifyOutcome o) {
  switch (o) {
    case VerifyOutcome::verified: return 0;
    case VerifyOutcome::counterexample: return 1;
    case VerifyOutcome::budget_exhausted: return 2;
  }
  return 2;
}

/// Verifies `net` for the configured benchmark; writes verify_report.json.
inline VerificationReport cmd_verify(const RunConfig& c, const ValueNet& net, const std::string& out_dir) {
  const Benchmark bm = make_benchmark(c.benchmark);
  if (net.state_dim() != bm.system.state_dim()) throw ConfigError("net: state dimension does not match the benchmark");
  const VerificationSpec spec = c.verify.value_or(VerificationSpec{});
  VerificationReport rep = verify(bm.system, net, spec);
  nlohmann::json j = report_to_json(rep, spec);
  if (rep.outcome == VerifyOutcome::verified) {
    const SpotCheck sc = spot_check(bm.system, net, spec);
    j["spot_check"] = {{"checked", sc.checked}, {"violations", sc.violations}, {"worst_margin", number_or_null(sc.worst_margin)}};
  }
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_text(fs::path(out_dir) / "verify_report.json", j.dump(1) + "\n");
  }
  return rep;
}

struct SimSummary {
  int count = 0;
  int converged_count = 0;
  int diverged_count = 0;
  double mean_cost = std::numeric_limits<double>::quiet_NaN();  // over converged trajectories
  std::vector<bool> converged;
  std::vector<Eigen::VectorXd> x0;

  nlohmann::json to_json() const {
    return {{"count", count}, {"converged_count", converged_count}, {"diverged_count", diverged_count},
            {"mean_cost", number_or_null(mean_cost)}};
  }
};

/// Initial states drawn uniformly from `box` with a seeded counter stream.
inline std::vector<Eigen::VectorXd> sample_initial_states(const Box& box, int count, std::uint64_t seed) {
  const CounterRng rng = CounterRng(seed).substream(400);
  std::vector<Eigen::VectorXd> out;
  std::uint64_t counter = 0;
  for (int k = 0; k < count; ++k) {
    Eigen::VectorXd x(box.dim());
    for (int i = 0; i < box.dim(); ++i) x(i) = rng.uniform(counter++, box.lo(i), box.hi(i));
    out.push_back(x);
  }
  return out;
}

/// Closed-loop batch under the greedy policy of `net`; writes
/// traj_<k>.csv per trajectory and simulate_summary.json.
inline SimSummary cmd_simulate(const RunConfig& c, const ValueNet& net, const std::string& out_dir, int threads = 1) {
  const Benchmark bm = make_benchmark(c.benchmark);
  if (net.state_dim() != bm.system.state_dim()) throw ConfigError("net: state dimension does not match the benchmark");
  const SimBatch& b = c.simulate;
  const Box box = b.x0_box.value_or(bm.system.domain());
  SimSummary s;
  s.count = b.count;
  s.x0 = sample_initial_states(box, b.count, c.seed);
  const Policy kappa = net_policy(net, bm.system);
  std::vector<Trajectory> trajs(static_cast<std::size_t>(b.count));
  parallel_for(static_cast<std::size_t>(b.count), threads,
               [&](std::size_t k) { trajs[k] = simulate(bm.system, kappa, s.x0[k], b.T, b.h); });
  double cost = 0.0;
  for (std::size_t k = 0; k < trajs.size(); ++k) {
    const bool ok = converges(trajs[k], b.tol);
    s.converged.push_back(ok);
    if (ok) {
      ++s.converged_count;
      cost += trajs[k].final_cost();
    }
    if (trajs[k].status != SimStatus::completed) ++s.diverged_count;
  }
  if (s.converged_count > 0) s.mean_cost = cost / s.converged_count;
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    if (b.write_trajectories)
      for (std::size_t k = 0; k < trajs.size(); ++k) {
        char name[32];
        std::snprintf(name, sizeof name, "traj_%03zu.csv", k);
        write_trajectory_csv(trajs[k], (fs::path(out_dir) / name).string());
      }
    write_text(fs::path(out_dir) / "simulate_summary.json", s.to_json().dump(1) + "\n");
  }
  return s;
}

/// One CSV row per config: n, m, N, algorithm, error, time_s, error_message.
/// Rows run independently; a failing row is recorded and the table goes on.
inline std::string cmd_table(const std::vector<RunConfig>& rows, int threads = 1) {
  struct Row {
    SolveSummary s;
    std::string failure;
  };
  std::vector<Row> out(rows.size());
  parallel_for(rows.size(), threads, [&](std::size_t k) {
    try {
      out[k].s = cmd_solve(rows[k], "", 1);
    } catch (const std::exception& e) {
      out[k].failure = e.what();
      out[k].s.m = rows[k].width;
      out[k].s.algorithm = to_string(rows[k].algorithm);
    }
  });
  std::ostringstream csv;
  csv << "n,m,N,algorithm,error,time_s,error_message\n";
  for (const auto& r : out) {
    std::string msg = r.failure;
    for (char& ch : msg)
      if (ch == ',' || ch == '\n') ch = ';';
    csv << r.s.n << ',' << r.s.m << ',' << r.s.N << ',' << r.s.algorithm << ',' << std::setprecision(6)
        << r.s.error << ',' << std::setprecision(4) << r.s.wall_ms / 1000.0 << ',' << msg << '\n';
  }
  return csv.str();
}

/// Reads a table document: {"rows": [run, ...]} plus optional shared
/// fields that every row inherits.
inline std::vector<RunConfig> parse_table_config(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("rows") || !j.at("rows").is_array())
    throw ConfigError("config.rows: expected an array of run configurations");
  nlohmann::json defaults = j;
  defaults.erase("rows");
  std::vector<RunConfig> rows;
  for (std::size_t k = 0; k < j.at("rows").size(); ++k) {
    nlohmann::json merged = defaults;
    merged.merge_patch(j.at("rows")[k]);
    try {
      rows.push_back(parse_run_config(merged));
    } catch (const ConfigError& e) {
      std::string msg = e.what();
      if (msg.rfind("config.", 0) == 0) msg = "config.rows[" + std::to_string(k) + "]." + msg.substr(7);
      throw ConfigError(msg);
    }
  }
  return rows;
}

inline std::string cmd_export_smt(const RunConfig& c, const ValueNet& net, const std::string& out_dir) {
  const Benchmark bm = make_benchmark(c.benchmark);
  VerificationSpec spec = c.verify.value_or(VerificationSpec{});
  if (spec.mode != VerifyMode::decrease_only) throw ConfigError("config.verify.mode: export-smt needs decrease_only");
  std::string text = export_smt_query(bm.system, net, spec);
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_text(fs::path(out_dir) / "query.smt2", text);
  }
  return text;
}

}  // namespace npi
