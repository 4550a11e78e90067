#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "npi/benchmarks.hpp"
#include "npi/rng.hpp"
#include "npi/sim.hpp"

using namespace npi;

namespace {

ControlAffineSystem decay() {
  auto f = [](const auto& x, auto& out) { out[0] = -1.0 * x[0]; };
  auto g = [](const auto&, auto&) {};
  auto q = [](const auto& x) { return x[0] * x[0]; };
  return ControlAffineSystem("decay", 1, 1, f, g, q, Eigen::MatrixXd::Identity(1, 1), Box::symmetric(1, 2.0));
}

ControlAffineSystem growth() {
  auto f = [](const auto& x, auto& out) { out[0] = x[0] * x[0]; };
  auto g = [](const auto&, auto&) {};
  auto q = [](const auto& x) { return x[0] * x[0]; };
  return ControlAffineSystem("growth", 1, 1, f, g, q, Eigen::MatrixXd::Identity(1, 1), Box::symmetric(1, 2.0));
}

const Policy zero = [](const Eigen::VectorXd&) { return Eigen::VectorXd::Zero(1); };

Eigen::VectorXd x1(double v) { return Eigen::VectorXd::Constant(1, v); }

}  // namespace

TEST(Simulate, SingleRk4Step) {
  Trajectory tr = simulate(decay(), zero, x1(1.0), 0.1, 0.1);
  ASSERT_EQ(tr.states.size(), 2u);
  EXPECT_NEAR(tr.states[1](0), 0.9048375, 1e-15);
  EXPECT_NEAR(tr.states[1](0), 1 - (0.1 / 6) * (1 + 1.9 + 1.905 + 0.90475), 1e-15);
  EXPECT_DOUBLE_EQ(tr.times[1], 0.1);
}

TEST(Simulate, EquilibriumStaysPut) {
  Benchmark bm = make_pendulum();
  Policy k = [](const Eigen::VectorXd& x) { return Eigen::VectorXd::Constant(1, -x.sum()); };
  Trajectory tr = simulate(bm.system, k, Eigen::VectorXd::Zero(2), 1.0, 0.01);
  for (const auto& x : tr.states) EXPECT_TRUE(x.isZero(0.0));
  EXPECT_EQ(tr.final_cost(), 0.0);
  EXPECT_TRUE(converges(tr, 1e-3));
}

TEST(Simulate, FourthOrderConvergence) {
  auto err = [](double h) { return std::abs(simulate(decay(), zero, x1(1.0), 1.0, h).states.back()(0) - std::exp(-1.0)); };
  const double ratio = err(0.1) / err(0.05);
  EXPECT_GE(ratio, 12.0);
  EXPECT_LE(ratio, 20.0);
}

TEST(Simulate, CostMatchesReferenceValue) {
  Benchmark bm = make_synthetic(1);
  Trajectory tr = simulate(bm.system, bm.reference_policy, x1(0.5), 20.0, 0.01);
  // 0.0625/2 + 1.5625/2 - 1/2
  EXPECT_NEAR(bm.reference_value->value(x1(0.5)), 0.3125, 1e-15);
  EXPECT_NEAR(tr.final_cost(), 0.3125, 2e-2);
}

TEST(Simulate, CostIsNonDecreasing) {
  Benchmark bm = make_synthetic(2);
  Trajectory tr = simulate(bm.system, bm.reference_policy, Eigen::Vector2d(0.9, -0.6), 5.0, 0.01);
  for (std::size_t k = 1; k < tr.accumulated_cost.size(); ++k)
    EXPECT_GE(tr.accumulated_cost[k], tr.accumulated_cost[k - 1]);
  EXPECT_EQ(tr.times.size(), tr.states.size());
  EXPECT_EQ(tr.inputs.size(), tr.states.size());
}

TEST(Simulate, CostEqualsValueFromRandomStarts) {
  for (const char* name : {"synthetic:1", "synthetic:2", "synthetic:3", "bilinear"}) {
    Benchmark bm = make_benchmark(name);
    const Box& dom = bm.system.domain();
    const int n = bm.system.state_dim();
    // Under the optimal bilinear policy x decays like 1/t, so the cost tail needs a long horizon.
    const double T = bm.kind == BenchmarkKind::bilinear1d ? 2000.0 : 20.0;
    CounterRng rng(17);
    for (int s = 0; s < 20; ++s) {
      Eigen::VectorXd x0(n);
      for (int i = 0; i < n; ++i) x0(i) = rng.uniform(static_cast<std::uint64_t>(s * n + i), dom.lo(i), dom.hi(i));
      const double v = bm.reference_value->value(x0);
      Trajectory tr = simulate(bm.system, bm.reference_policy, x0, T, 0.01);
      EXPECT_LE(std::abs(tr.final_cost() - v), 0.02 * v + 1e-3) << name << " x0 = " << x0.transpose();
    }
  }
}

TEST(Simulate, DivergenceAndBlowup) {
  Trajectory tr = simulate(growth(), zero, x1(1.0), 5.0, 0.01);
  EXPECT_EQ(tr.status, SimStatus::diverged);
  EXPECT_GT(tr.states.back().cwiseAbs().maxCoeff(), kDivergenceBound);
  EXPECT_FALSE(converges(tr, 1e-3));

  Trajectory boom = simulate(growth(), zero, x1(1e200), 1.0, 0.01);
  EXPECT_EQ(boom.status, SimStatus::blowup);
  EXPECT_EQ(boom.blowup_step, 1);
  EXPECT_EQ(to_string(boom.status), "numerical_blowup");
}

TEST(Simulate, InvalidArguments) {
  EXPECT_THROW(simulate(decay(), zero, x1(1.0), 1.0, 0.0), std::invalid_argument);
  EXPECT_THROW(simulate(decay(), zero, x1(1.0), 0.001, 0.01), std::invalid_argument);
  EXPECT_THROW(simulate(decay(), zero, Eigen::VectorXd::Zero(2), 1.0, 0.1), std::invalid_argument);
}

TEST(Converges, Examples) {
  EXPECT_TRUE(converges(simulate(decay(), zero, x1(1.0), 20.0, 0.01), 1e-3));
  EXPECT_FALSE(converges(simulate(decay(), zero, x1(1.0), 2.0, 0.01), 1e-3));
}

TEST(TrajectoryCsv, HeaderAndRows) {
  Benchmark bm = make_pendulum();
  Policy k = [](const Eigen::VectorXd& x) { return Eigen::VectorXd::Constant(1, -x.sum()); };
  Trajectory tr = simulate(bm.system, k, Eigen::Vector2d(0.1, 0.0), 0.05, 0.01);
  auto path = std::filesystem::temp_directory_path() / "npi_traj.csv";
  write_trajectory_csv(tr, path.string());
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "t,x_1,x_2,u_1,cost");
  int rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  EXPECT_EQ(rows, 6);
  std::filesystem::remove(path);
}
