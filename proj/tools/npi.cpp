// Command-line front end: solve, verify, simulate, table, export-smt.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "npi/commands.hpp"

namespace {

constexpr int kExitConfig = 3;
constexpr int kExitRuntime = 4;

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  int threads = 1;
  std::string net;
};

std::string output_dir(const Options& o, const std::string& from_config, const std::string& fallback) {
  if (!o.out.empty()) return o.out;
  if (const char* env = std::getenv("NPI_OUT_DIR"); env && *env) return env;
  if (!from_config.empty()) return from_config;
  return fallback;
}

npi::RunConfig load_run(const Options& o) {
  npi::RunConfig c = npi::parse_run_config(npi::read_json_file(o.config));
  if (o.seed) c.seed = *o.seed;
  if (!o.net.empty()) c.net = o.net;
  c.sync();
  return c;
}

npi::ValueNet load_net(const npi::RunConfig& c) {
  if (c.net.empty()) throw npi::ConfigError("config.net: no network file given (set \"net\" or pass --net)");
  try {
    return npi::load_value_net(c.net);
  } catch (const std::runtime_error& e) {
    throw npi::ConfigError(std::string("net: ") + e.what());
  }
}

std::string default_dir(const npi::RunConfig& c) {
  std::string name = c.benchmark;
  for (char& ch : name)
    if (ch == ':') ch = '_';
  return (std::filesystem::path("runs") / name).string();
}

int run_solve(const Options& o) {
  npi::RunConfig c = load_run(o);
  const std::string dir = output_dir(o, c.out, default_dir(c));
  npi::SolveSummary s = npi::cmd_solve(c, dir, o.threads);
  for (const auto& w : s.warnings) std::cerr << "warning: " << w << '\n';
  std::cout << s.to_json().dump(1) << '\n';
  return 0;
}

int run_verify(const Options& o) {
  npi::RunConfig c;
  npi::ValueNet net;
  c = load_run(o);
  net = load_net(c);
  const std::string dir = output_dir(o, c.out, default_dir(c));
  npi::VerificationReport r = npi::cmd_verify(c, net, dir);
  std::cout << npi::report_to_json(r, c.verify.value_or(npi::VerificationSpec{})).dump(1) << '\n';
  return npi::verify_exit_code(r.outcome);
}

int run_simulate(const Options& o) {
  npi::RunConfig c = load_run(o);
  npi::ValueNet net = load_net(c);
  const std::string dir = output_dir(o, c.out, default_dir(c));
  npi::SimSummary s = npi::cmd_simulate(c, net, dir, o.threads);
  std::cout << s.to_json().dump(1) << '\n';
  return 0;
}

int run_table(const Options& o) {
  nlohmann::json doc = npi::read_json_file(o.config);
  std::vector<npi::RunConfig> rows = npi::parse_table_config(doc);
  for (auto& r : rows) {
    if (o.seed) r.seed = *o.seed;
    r.sync();
  }
  const std::string dir = output_dir(o, doc.value("out", std::string()), "runs/table");
  std::string csv = npi::cmd_table(rows, o.threads);
  std::filesystem::create_directories(dir);
  npi::write_text(std::filesystem::path(dir) / "table.csv", csv);
  std::cout << csv;
  return 0;
}

int run_export(const Options& o) {
  npi::RunConfig c = load_run(o);
  npi::ValueNet net = load_net(c);
  const std::string dir = output_dir(o, c.out, default_dir(c));
  npi::cmd_export_smt(c, net, dir);
  std::cout << (std::filesystem::path(dir) / "query.smt2").string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Neural policy iteration for nonlinear optimal control, with interval verification"};
  app.require_subcommand(1);
  Options o;
  auto add_common = [&o](CLI::App* sub, bool needs_net) {
    sub->add_option("--config", o.config, "JSON configuration file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", o.out, "output directory (overrides config and NPI_OUT_DIR)");
    sub->add_option("--seed", o.seed, "seed, overrides the config");
    sub->add_option("--threads", o.threads, "worker threads")->check(CLI::PositiveNumber);
    if (needs_net) sub->add_option("--net", o.net, "serialized value network (overrides config \"net\")");
  };
  auto* solve = app.add_subcommand("solve", "train a value network by ELM-PI or PINN-PI");
  auto* ver = app.add_subcommand("verify", "interval branch-and-bound stability check; exit 0/1/2 = verified/counterexample/budget");
  auto* sim = app.add_subcommand("simulate", "closed-loop trajectories from random initial states");
  auto* table = app.add_subcommand("table", "run a list of solve configs and aggregate a CSV");
  auto* smt = app.add_subcommand("export-smt", "write the negated decrease condition as an SMT-LIB query");
  add_common(solve, false);
  add_common(ver, true);
  add_common(sim, true);
  add_common(table, false);
  add_common(smt, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*solve) return run_solve(o);
    if (*ver) return run_verify(o);
    if (*sim) return run_simulate(o);
    if (*table) return run_table(o);
    if (*smt) return run_export(o);
  } catch (const npi::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitRuntime;
}
