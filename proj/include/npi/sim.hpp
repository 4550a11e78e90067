#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <stdexcept>
#include <string>
#include <vector>

#include "npi/systems.hpp"

namespace npi {

enum class SimStatus { completed, diverged, blowup };

inline std::string to_string(SimStatus s) {
  switch (s) {
    case SimStatus::completed: return "completed";
    case SimStatus::diverged: return "diverged";
    case SimStatus::blowup: return "numerical_blowup";
  }
  return "?";
}

struct Trajectory {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;
  std::vector<Eigen::VectorXd> inputs;
  std::vector<double> accumulated_cost;
  SimStatus status = SimStatus::completed;
  long blowup_step = -1;

  double final_cost() const { return accumulated_cost.empty() ? 0.0 : accumulated_cost.back(); }
};

inline constexpr double kDivergenceBound = 1e3;

/// Fixed-step RK4 on x' = f(x) + g(x) kappa(x); the running cost is
/// integrated with the trapezoid rule on the same grid.
inline Trajectory simulate(const ControlAffineSystem& sys, const Policy& kappa, const Eigen::VectorXd& x0, double T,
                           double h) {
  if (!(h > 0) || !(T >= h)) throw std::invalid_argument("simulate: need h > 0 and T >= h");
  if (x0.size() != sys.state_dim()) throw std::invalid_argument("simulate: x0 has wrong dimension");
  auto rhs = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    Eigen::VectorXd fx;
    Eigen::MatrixXd gx;
    sys.eval_dense(x, fx, gx);
    return fx + gx * kappa(x);
  };
  const long steps = std::lround(T / h);
  Trajectory tr;
  tr.times.reserve(static_cast<std::size_t>(steps + 1));
  Eigen::VectorXd x = x0;
  Eigen::VectorXd u = kappa(x);
  double L = sys.running_cost(x, u);
  tr.times.push_back(0.0);
  tr.states.push_back(x);
  tr.inputs.push_back(u);
  tr.accumulated_cost.push_back(0.0);
  for (long k = 1; k <= steps; ++k) {
    const Eigen::VectorXd k1 = rhs(x);
    const Eigen::VectorXd k2 = rhs(x + 0.5 * h * k1);
    const Eigen::VectorXd k3 = rhs(x + 0.5 * h * k2);
    const Eigen::VectorXd k4 = rhs(x + h * k3);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!x.allFinite()) {
      tr.status = SimStatus::blowup;
      tr.blowup_step = k;
      break;
    }
    u = kappa(x);
    const double L_next = sys.running_cost(x, u);
    tr.times.push_back(static_cast<double>(k) * h);
    tr.states.push_back(x);
    tr.inputs.push_back(u);
    tr.accumulated_cost.push_back(tr.accumulated_cost.back() + 0.5 * h * (L + L_next));
    L = L_next;
    if (x.cwiseAbs().maxCoeff() > kDivergenceBound) {
      tr.status = SimStatus::diverged;
      break;
    }
  }
  return tr;
}

/// ||x(T)||_inf <= tol and the same over the final 10% of the grid.
inline bool converges(const Trajectory& tr, double tol) {
  if (tr.status != SimStatus::completed || tr.states.empty()) return false;
  const std::size_t count = tr.states.size();
  const std::size_t tail = std::max<std::size_t>(1, count / 10);
  for (std::size_t k = count - tail; k < count; ++k)
    if (tr.states[k].cwiseAbs().maxCoeff() > tol) return false;
  return true;
}

/// Columns t, x_1..x_n, u_1..u_m, cost.
inline void write_trajectory_csv(const Trajectory& tr, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  const Eigen::Index n = tr.states.empty() ? 0 : tr.states[0].size();
  const Eigen::Index m = tr.inputs.empty() ? 0 : tr.inputs[0].size();
  out << 't';
  for (Eigen::Index i = 1; i <= n; ++i) out << ",x_" << i;
  for (Eigen::Index i = 1; i <= m; ++i) out << ",u_" << i;
  out << ",cost\n" << std::setprecision(17);
  for (std::size_t k = 0; k < tr.times.size(); ++k) {
    out << tr.times[k];
    for (Eigen::Index i = 0; i < n; ++i) out << ',' << tr.states[k](i);
    for (Eigen::Index i = 0; i < m; ++i) out << ',' << tr.inputs[k](i);
    out << ',' << tr.accumulated_cost[k] << '\n';
  }
}

}  // namespace npi
