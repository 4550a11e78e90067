#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "npi/commands.hpp"
#include "npi/config.hpp"

using namespace npi;
using nlohmann::json;

namespace {

std::string config_error(const json& j) {
  try {
    parse_run_config(j);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

bool starts_with(const std::string& s, const std::string& prefix) { return s.rfind(prefix, 0) == 0; }

}  // namespace

TEST(RunConfig, Defaults) {
  RunConfig c = parse_run_config(json{{"benchmark", "synthetic:2"}});
  EXPECT_EQ(c.algorithm, Algorithm::elm);
  EXPECT_EQ(c.width, 50);
  EXPECT_EQ(c.pi_iters, 10);
  EXPECT_EQ(c.elm.width, 50);
  EXPECT_EQ(c.elm.max_iters, 10);
  EXPECT_EQ(c.elm.activation, Activation::tanh);
  EXPECT_EQ(c.pinn.steps_per_iter, 10000);
  EXPECT_DOUBLE_EQ(c.pinn.learning_rate, 1e-3);
  EXPECT_DOUBLE_EQ(c.pinn.lambda_gain, 1.0);
  EXPECT_FALSE(c.verify.has_value());
  EXPECT_DOUBLE_EQ(c.simulate.T, 10.0);
  EXPECT_DOUBLE_EQ(parse_run_config(json{{"benchmark", "lorenz"}}).simulate.T, 20.0);
}

TEST(RunConfig, BilinearDefaultsToReluWithoutGainTerm) {
  RunConfig c = parse_run_config(json{{"benchmark", "bilinear"}});
  EXPECT_EQ(c.elm.activation, Activation::relu);
  EXPECT_TRUE(c.elm.zero_bias);
  EXPECT_EQ(c.pinn.lambda_gain, 0.0);
}

TEST(RunConfig, FullDocument) {
  json j = json::parse(R"({
    "benchmark": "pendulum", "algorithm": "pinn", "width": 100, "seed": 7, "pi_iters": 4,
    "elm": {"activation": "tanh", "origin": "penalty", "lambda": 2.5, "sampler": "grid", "resample": true},
    "pinn": {"steps_per_iter": 2000, "learning_rate": 0.002, "batch": 64, "lambda_gain": 0.5},
    "verify": {"mode": "full_roa", "mu": 1e-4, "c1": 0.01, "c2": 0.029, "epsilon": 0.1, "max_boxes": 1000},
    "simulate": {"count": 5, "x0_box": [-0.5, 0.5], "T": 3, "h": 0.005, "tol": 0.01},
    "out": "somewhere"
  })");
  RunConfig c = parse_run_config(j);
  EXPECT_EQ(c.algorithm, Algorithm::pinn);
  EXPECT_EQ(c.elm.width, 100);
  EXPECT_EQ(c.elm.seed, 7u);
  EXPECT_EQ(c.pinn.seed, 7u);
  EXPECT_EQ(c.pinn.pi_iters, 4);
  EXPECT_EQ(c.elm.origin, OriginMode::penalty);
  EXPECT_EQ(c.elm.sampler, Sampler::grid);
  EXPECT_TRUE(c.elm.resample);
  EXPECT_EQ(c.pinn.batch, 64);
  ASSERT_TRUE(c.verify.has_value());
  EXPECT_EQ(c.verify->mode, VerifyMode::full_roa);
  EXPECT_DOUBLE_EQ(c.verify->c2, 0.029);
  EXPECT_EQ(c.verify->max_boxes, 1000);
  ASSERT_TRUE(c.simulate.x0_box.has_value());
  EXPECT_EQ(c.simulate.x0_box->dim(), 2);
  EXPECT_DOUBLE_EQ(c.simulate.x0_box->lo(1), -0.5);
  EXPECT_DOUBLE_EQ(c.simulate.T, 3.0);
  EXPECT_EQ(c.out, "somewhere");
}

TEST(RunConfig, ErrorsNameTheField) {
  EXPECT_TRUE(starts_with(config_error(json{{"benchmark", "cartpole"}}), "config.benchmark:"));
  EXPECT_TRUE(starts_with(config_error(json::object()), "config.benchmark:"));
  EXPECT_TRUE(starts_with(config_error(json{{"benchmark", "bilinear"}, {"algorithm", "sgd"}}), "config.algorithm:"));
  EXPECT_TRUE(starts_with(config_error(json{{"benchmark", "bilinear"}, {"width", 0}}), "config.width:"));
  EXPECT_TRUE(starts_with(config_error(json{{"benchmark", "bilinear"}, {"width", "wide"}}), "config.width:"));
  EXPECT_TRUE(starts_with(config_error(json{{"benchmark", "bilinear"}, {"colour", 1}}), "config.colour:"));
  EXPECT_TRUE(starts_with(config_error(json{{"benchmark", "bilinear"}, {"elm", {{"sampler", "sobol"}}}}), "config.elm.sampler:"));
  EXPECT_TRUE(starts_with(config_error(json{{"benchmark", "bilinear"}, {"elm", {{"activation", "gelu"}}}}),
                          "config.elm.activation:"));
  EXPECT_TRUE(starts_with(config_error(json{{"benchmark", "bilinear"}, {"pinn", {{"steps_per_iter", 0}}}}), "config.pinn"));
  EXPECT_TRUE(starts_with(config_error(json{{"benchmark", "bilinear"}, {"verify", {{"mu", -1}}}}), "config.verify"));
  EXPECT_TRUE(starts_with(config_error(json{{"benchmark", "bilinear"}, {"verify", {{"mode", "all"}}}}), "config.verify.mode:"));
  EXPECT_TRUE(starts_with(config_error(json{{"benchmark", "pendulum"}, {"simulate", {{"x0_box", {1, 2, 3}}}}}),
                          "config.simulate.x0_box:"));
  EXPECT_TRUE(starts_with(config_error(json{{"benchmark", "bilinear"}, {"simulate", {{"h", 0}}}}), "config.simulate.h:"));
}

TEST(RunConfig, BoxObjectForm) {
  json j = json::parse(R"({"benchmark": "pendulum", "simulate": {"x0_box": {"lo": [-1, -0.5], "hi": [1, 0.5]}}})");
  RunConfig c = parse_run_config(j);
  EXPECT_DOUBLE_EQ(c.simulate.x0_box->hi(1), 0.5);
  j["simulate"]["x0_box"]["lo"] = {2, 0};
  EXPECT_THROW(parse_run_config(j), ConfigError);
}

TEST(TableConfig, RowsInheritSharedFields) {
  json j = json::parse(R"({"algorithm": "elm", "seed": 3, "rows": [
    {"benchmark": "synthetic:1", "width": 50}, {"benchmark": "synthetic:2", "width": 200, "seed": 5}]})");
  auto rows = parse_table_config(j);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].seed, 3u);
  EXPECT_EQ(rows[1].seed, 5u);
  EXPECT_EQ(rows[1].elm.width, 200);
  EXPECT_TRUE(parse_table_config(json{{"rows", json::array()}}).empty());
  try {
    parse_table_config(json::parse(R"({"rows": [{"benchmark": "synthetic:1"}, {"benchmark": "nope"}]})"));
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_TRUE(starts_with(e.what(), "config.rows[1].benchmark:")) << e.what();
  }
  EXPECT_THROW(parse_table_config(json{{"rows", 3}}), ConfigError);
}

TEST(Table, EmptyAndFailingRows) {
  EXPECT_EQ(cmd_table({}), "n,m,N,algorithm,error,time_s,error_message\n");
  RunConfig bad = parse_run_config(json{{"benchmark", "synthetic:1"}, {"width", 5}});
  bad.benchmark = "missing";
  RunConfig good = parse_run_config(json{{"benchmark", "synthetic:1"}, {"width", 5}});
  std::string csv = cmd_table({bad, good, good});
  std::istringstream in(csv);
  std::string header, r0, r1, r2;
  std::getline(in, header);
  std::getline(in, r0);
  std::getline(in, r1);
  std::getline(in, r2);
  EXPECT_NE(r0.find("unknown benchmark"), std::string::npos);
  EXPECT_EQ(r1.substr(0, r1.find(",elm,")), "1,5,5");
  auto strip_time = [](const std::string& row) {
    auto c = row.rfind(',');
    auto b = row.rfind(',', c - 1);
    return row.substr(0, b);
  };
  EXPECT_EQ(strip_time(r1), strip_time(r2));
}

TEST(ReadJsonFile, ReportsPath) {
  auto p = std::filesystem::temp_directory_path() / "npi_bad.json";
  {
    std::ofstream(p) << "{ not json";
  }
  try {
    read_json_file(p.string());
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("npi_bad.json"), std::string::npos);
  }
  std::filesystem::remove(p);
  EXPECT_THROW(read_json_file("/nonexistent/file.json"), ConfigError);
}
