#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "npi/valuenet_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("npi_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write_json(const std::string& name, const json& j) {
    fs::path p = dir_ / name;
    std::ofstream(p) << j.dump(1);
    return p;
  }

  // Runs the binary; returns the exit status and keeps stderr in err_.
  int run(const std::string& args, const std::string& env = "") {
    const fs::path err = dir_ / "stderr.txt";
    std::string cmd = env + (env.empty() ? "" : " ") + "'" + std::string(NPI_BINARY) + "' " + args + " > '" +
                      (dir_ / "stdout.txt").string() + "' 2> '" + err.string() + "'";
    int status = std::system(cmd.c_str());
    std::ifstream in(err);
    std::stringstream ss;
    ss << in.rdbuf();
    err_ = ss.str();
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  static std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  // Drops the last CSV column (wall time).
  static std::string without_last_column(const std::string& csv) {
    std::istringstream in(csv);
    std::string out;
    for (std::string line; std::getline(in, line);) out += line.substr(0, line.rfind(',')) + "\n";
    return out;
  }

  fs::path dir_;
  std::string err_;
};

}  // namespace

TEST_F(Cli, InvalidBenchmarkNamesTheField) {
  fs::path cfg = write_json("bad.json", {{"benchmark", "cartpole"}});
  EXPECT_EQ(run("solve --config '" + cfg.string() + "' --out '" + (dir_ / "o").string() + "'"), 3);
  EXPECT_NE(err_.find("config.benchmark"), std::string::npos) << err_;
}

TEST_F(Cli, MissingSubcommandOrConfigIsAUsageError) {
  EXPECT_EQ(run(""), 3);
  EXPECT_EQ(run("solve"), 3);
  EXPECT_EQ(run("solve --config /nonexistent.json"), 3);
}

TEST_F(Cli, SolveBilinearWritesArtifacts) {
  fs::path cfg = write_json("c.json", {{"benchmark", "bilinear"}, {"width", 10}});
  fs::path out = dir_ / "run";
  ASSERT_EQ(run("solve --config '" + cfg.string() + "' --out '" + out.string() + "'"), 0) << err_;
  json summary = json::parse(slurp(out / "summary.json"));
  EXPECT_LE(summary["final_test_error"].get<double>(), 1e-12);
  EXPECT_EQ(summary["m"], 10);
  EXPECT_EQ(summary["N"], 10);
  EXPECT_TRUE(fs::exists(out / "net.json"));
  EXPECT_EQ(slurp(out / "iterations.csv").substr(0, 40), "iter,residual_rms,sup_change,test_error,");
}

TEST_F(Cli, SolveIsDeterministicAndSeedOverrides) {
  fs::path cfg = write_json("c.json", {{"benchmark", "synthetic:2"}, {"width", 40}});
  ASSERT_EQ(run("solve --config '" + cfg.string() + "' --out '" + (dir_ / "a").string() + "'"), 0);
  ASSERT_EQ(run("solve --config '" + cfg.string() + "' --threads 3 --out '" + (dir_ / "b").string() + "'"), 0);
  ASSERT_EQ(run("solve --config '" + cfg.string() + "' --seed 9 --out '" + (dir_ / "c").string() + "'"), 0);
  EXPECT_EQ(slurp(dir_ / "a" / "net.json"), slurp(dir_ / "b" / "net.json"));
  EXPECT_EQ(without_last_column(slurp(dir_ / "a" / "iterations.csv")),
            without_last_column(slurp(dir_ / "b" / "iterations.csv")));
  EXPECT_NE(slurp(dir_ / "a" / "net.json"), slurp(dir_ / "c" / "net.json"));
}

TEST_F(Cli, OutDirFromEnvironment) {
  fs::path cfg = write_json("c.json", {{"benchmark", "synthetic:1"}, {"width", 10}, {"out", (dir_ / "cfg").string()}});
  ASSERT_EQ(run("solve --config '" + cfg.string() + "'", "NPI_OUT_DIR='" + (dir_ / "env").string() + "'"), 0);
  EXPECT_TRUE(fs::exists(dir_ / "env" / "net.json"));
  EXPECT_FALSE(fs::exists(dir_ / "cfg"));
  ASSERT_EQ(run("solve --config '" + cfg.string() + "'"), 0);
  EXPECT_TRUE(fs::exists(dir_ / "cfg" / "net.json"));
}

TEST_F(Cli, VerifyExitCodes) {
  fs::path solve_cfg = write_json("s.json", {{"benchmark", "synthetic:1"}, {"width", 20}});
  ASSERT_EQ(run("solve --config '" + solve_cfg.string() + "' --out '" + (dir_ / "s").string() + "'"), 0);
  const std::string net = (dir_ / "s" / "net.json").string();

  fs::path ok = write_json("v.json", {{"benchmark", "synthetic:1"}, {"net", net}, {"verify", {{"mu", 1e-4}, {"epsilon", 0.1}}}});
  EXPECT_EQ(run("verify --config '" + ok.string() + "' --out '" + (dir_ / "v0").string() + "'"), 0) << err_;
  json rep = json::parse(slurp(dir_ / "v0" / "verify_report.json"));
  EXPECT_EQ(rep["outcome"], "verified");
  EXPECT_EQ(rep["spot_check"]["violations"], 0);

  npi::save_value_net(npi::init_random(4, 1, 0), (dir_ / "zero.json").string());
  EXPECT_EQ(run("verify --config '" + ok.string() + "' --net '" + (dir_ / "zero.json").string() + "' --out '" +
                (dir_ / "v1").string() + "'"),
            1);
  rep = json::parse(slurp(dir_ / "v1" / "verify_report.json"));
  EXPECT_EQ(rep["outcome"], "counterexample");
  EXPECT_TRUE(rep.contains("witness"));

  fs::path tiny = write_json("t.json", {{"benchmark", "synthetic:1"}, {"net", net}, {"verify", {{"max_boxes", 1}}}});
  EXPECT_EQ(run("verify --config '" + tiny.string() + "' --out '" + (dir_ / "v2").string() + "'"), 2);

  std::ofstream(dir_ / "garbage.json") << "[1, 2";
  EXPECT_EQ(run("verify --config '" + ok.string() + "' --net '" + (dir_ / "garbage.json").string() + "'"), 3);
  fs::path no_net = write_json("n.json", {{"benchmark", "synthetic:1"}});
  EXPECT_EQ(run("verify --config '" + no_net.string() + "'"), 3);
  fs::path wrong_dim = write_json("w.json", {{"benchmark", "pendulum"}, {"net", net}});
  EXPECT_EQ(run("verify --config '" + wrong_dim.string() + "'"), 3);
}

TEST_F(Cli, SimulateBatchAndEmptyBatch) {
  fs::path solve_cfg = write_json("s.json", {{"benchmark", "synthetic:1"}, {"width", 20}});
  ASSERT_EQ(run("solve --config '" + solve_cfg.string() + "' --out '" + (dir_ / "s").string() + "'"), 0);
  const std::string net = (dir_ / "s" / "net.json").string();
  fs::path cfg = write_json("sim.json", {{"benchmark", "synthetic:1"}, {"net", net}, {"simulate", {{"count", 3}, {"T", 10}}}});
  ASSERT_EQ(run("simulate --config '" + cfg.string() + "' --out '" + (dir_ / "sim").string() + "'"), 0) << err_;
  json s = json::parse(slurp(dir_ / "sim" / "simulate_summary.json"));
  EXPECT_EQ(s["count"], 3);
  EXPECT_EQ(s["converged_count"], 3);
  EXPECT_TRUE(fs::exists(dir_ / "sim" / "traj_002.csv"));

  fs::path empty = write_json("e.json", {{"benchmark", "synthetic:1"}, {"net", net}, {"simulate", {{"count", 0}}}});
  ASSERT_EQ(run("simulate --config '" + empty.string() + "' --out '" + (dir_ / "e").string() + "'"), 0);
  s = json::parse(slurp(dir_ / "e" / "simulate_summary.json"));
  EXPECT_EQ(s["count"], 0);
  EXPECT_EQ(s["converged_count"], 0);
  EXPECT_TRUE(s["mean_cost"].is_null());
}

TEST_F(Cli, TableRowsAndDuplicates) {
  fs::path cfg = write_json("table.json", json::parse(R"({"algorithm": "elm", "rows": [
      {"benchmark": "synthetic:1", "width": 50}, {"benchmark": "synthetic:2", "width": 200},
      {"benchmark": "synthetic:1", "width": 50}]})"));
  ASSERT_EQ(run("table --config '" + cfg.string() + "' --out '" + (dir_ / "t").string() + "'"), 0) << err_;
  std::istringstream in(slurp(dir_ / "t" / "table.csv"));
  std::string header, row;
  std::getline(in, header);
  EXPECT_EQ(header, "n,m,N,algorithm,error,time_s,error_message");
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, row)) {
    std::vector<std::string> cells;
    std::stringstream ss(row);
    for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
    rows.push_back(cells);
  }
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0][0], "1");
  EXPECT_EQ(rows[1][2], "400");
  EXPECT_LE(std::stod(rows[0][4]), 1e-6);
  EXPECT_LE(std::stod(rows[1][4]), 1e-4);
  EXPECT_EQ(rows[0][4], rows[2][4]);

  fs::path empty = write_json("empty.json", {{"rows", json::array()}});
  ASSERT_EQ(run("table --config '" + empty.string() + "' --out '" + (dir_ / "e").string() + "'"), 0);
  EXPECT_EQ(slurp(dir_ / "e" / "table.csv"), "n,m,N,algorithm,error,time_s,error_message\n");
}

TEST_F(Cli, ExportSmt) {
  npi::ValueNet net = npi::init_random(3, 2, 1);
  net.beta << 0.5, -0.25, 1.0;
  npi::save_value_net(net, (dir_ / "net.json").string());
  fs::path cfg = write_json("x.json", {{"benchmark", "pendulum"}, {"net", (dir_ / "net.json").string()}});
  ASSERT_EQ(run("export-smt --config '" + cfg.string() + "' --out '" + (dir_ / "a").string() + "'"), 0) << err_;
  ASSERT_EQ(run("export-smt --config '" + cfg.string() + "' --out '" + (dir_ / "b").string() + "'"), 0);
  const std::string q = slurp(dir_ / "a" / "query.smt2");
  EXPECT_NE(q.find("(check-sat)"), std::string::npos);
  EXPECT_EQ(q, slurp(dir_ / "b" / "query.smt2"));
  fs::path roa = write_json("r.json", {{"benchmark", "pendulum"}, {"net", (dir_ / "net.json").string()}, {"verify", {{"mode", "full_roa"}}}});
  EXPECT_EQ(run("export-smt --config '" + roa.string() + "'"), 3);
}
