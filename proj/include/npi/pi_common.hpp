#pragma once

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "npi/benchmarks.hpp"
#include "npi/collocation.hpp"
#include "npi/riccati.hpp"
#include "npi/systems.hpp"
#include "npi/valuenet.hpp"

namespace npi {

/// One policy-iteration step. Fields that do not apply to an algorithm
/// stay NaN / zero.
struct PiIteration {
  int iter = 0;
  ValueNet net;
  double residual_rms = std::numeric_limits<double>::quiet_NaN();
  double sup_change = std::numeric_limits<double>::infinity();
  double max_increase = std::numeric_limits<double>::quiet_NaN();  // max(V_i - V_{i-1}) on the test grid
  double test_error = std::numeric_limits<double>::quiet_NaN();
  double min_gap = std::numeric_limits<double>::quiet_NaN();  // min(V_i - V*) on the test grid
  double wall_ms = 0.0;
  int rank = 0;
  double loss_initial = std::numeric_limits<double>::quiet_NaN();
  double loss_final = std::numeric_limits<double>::quiet_NaN();
  bool gain_active = false;
};

enum class PiStatus { converged, max_iters, diverged };

inline std::string to_string(PiStatus s) {
  switch (s) {
    case PiStatus::converged: return "converged";
    case PiStatus::max_iters: return "max_iters";
    case PiStatus::diverged: return "diverged";
  }
  return "?";
}

struct PiRun {
  std::vector<PiIteration> history;
  PiStatus status = PiStatus::max_iters;
  std::vector<std::string> warnings;
  int collocation_count = 0;
  double wall_ms = 0.0;

  const ValueNet& final_net() const { return history.back().net; }
  double final_test_error() const {
    return history.empty() ? std::numeric_limits<double>::quiet_NaN() : history.back().test_error;
  }
};

/// Greedy policy of a network, kappa = -1/2 R^{-1} g^T DV^T.
inline Policy net_policy(const ValueNet& net, const ControlAffineSystem& sys) {
  auto shared = std::make_shared<const ValueNet>(net);
  return [shared, &sys](const Eigen::VectorXd& x) { return policy(*shared, sys, x); };
}

/// Default kappa_0: LQR on the linearization, or -|x|/2 for systems whose
/// linearization is not stabilizable.
inline Policy default_initial_policy(const Benchmark& bm) {
  if (bm.uncontrollable_linearization) {
    const int m = bm.system.input_dim();
    return [m](const Eigen::VectorXd& x) { return Eigen::VectorXd::Constant(m, -0.5 * x.cwiseAbs().sum()); };
  }
  const Linearization lin = linearize(bm.system);
  Eigen::MatrixXd K = lqr(lin.A, lin.B, lin.Qhat, bm.system.R()).K;
  return [K](const Eigen::VectorXd& x) -> Eigen::VectorXd { return K * x; };
}

/// Test-grid bookkeeping shared by both PI drivers.
class TestGrid {
 public:
  TestGrid(const Benchmark& bm, int fallback_count, std::uint64_t seed)
      : points_(test_points(bm.system.domain(), fallback_count, seed)) {
    if (bm.reference_value) {
      reference_.resize(points_.rows());
      for (Eigen::Index s = 0; s < points_.rows(); ++s) reference_(s) = bm.reference_value->value(points_.row(s).transpose());
    }
  }

  const Eigen::MatrixXd& points() const { return points_; }

  /// Fills sup_change, max_increase, test_error and min_gap of `it` and
  /// remembers the values for the next call.
  void record(PiIteration& it) {
    Eigen::VectorXd v = it.net.values(points_);
    if (previous_.size() == v.size()) {
      it.sup_change = (v - previous_).cwiseAbs().maxCoeff();
      it.max_increase = (v - previous_).maxCoeff();
    }
    if (reference_.size() == v.size()) {
      it.test_error = (v - reference_).cwiseAbs().maxCoeff();
      it.min_gap = (v - reference_).minCoeff();
    }
    previous_ = std::move(v);
  }

 private:
  Eigen::MatrixXd points_;
  Eigen::VectorXd reference_;
  Eigen::VectorXd previous_;
};

inline double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

}  // namespace npi
