#pragma once

#include <Eigen/Dense>

#include "npi/systems.hpp"
#include "npi/valuenet.hpp"

namespace npi {

/// One evaluation of the policy-evaluation (GHJB) residual
/// G = Q(x) + kappa^T R kappa + DV(x) (f(x) + g(x) kappa(x)).
struct ResidualSample {
  Eigen::VectorXd x;
  double residual = 0.0;
  Eigen::VectorXd drift_closed;  // f(x) + g(x) kappa(x)
  double running_cost = 0.0;     // Q(x) + kappa^T R kappa
};

/// Closed-loop drift and running cost of `kappa` at x.
inline std::pair<Eigen::VectorXd, double> closed_loop(const ControlAffineSystem& sys, const Policy& kappa,
                                                      const Eigen::VectorXd& x) {
  Eigen::VectorXd fx;
  Eigen::MatrixXd gx;
  sys.eval_dense(x, fx, gx);
  Eigen::VectorXd u = kappa(x);
  return {fx + gx * u, sys.running_cost(x, u)};
}

template <ValueModel V>
ResidualSample ghjb_residual(const ControlAffineSystem& sys, const Policy& kappa, const V& model,
                             const Eigen::VectorXd& x) {
  auto [drift, cost] = closed_loop(sys, kappa, x);
  ResidualSample s{x, 0.0, std::move(drift), cost};
  s.residual = s.running_cost + model.gradient(x).dot(s.drift_closed);
  return s;
}

/// Optimal-control HJB residual
/// H = -Q - DV f + 1/4 DV g R^{-1} g^T DV^T.
template <ValueModel V>
double hjb_residual(const ControlAffineSystem& sys, const V& model, const Eigen::VectorXd& x) {
  Eigen::VectorXd fx;
  Eigen::MatrixXd gx;
  sys.eval_dense(x, fx, gx);
  Eigen::RowVectorXd dv = model.gradient(x);
  Eigen::VectorXd gtdv = gx.transpose() * dv.transpose();
  return -sys.Q(x) - dv.dot(fx) + 0.25 * gtdv.dot(sys.R_inv() * gtdv);
}

}  // namespace npi
