#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <string>

namespace npi {

class RiccatiError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// P Ahat + Ahat^T P = -M.
struct LyapunovProblem {
  Eigen::MatrixXd Ahat;
  Eigen::MatrixXd M;
};

/// Unique symmetric solution of P Ahat + Ahat^T P = -M via the Kronecker
/// system (I (x) Ahat^T + Ahat^T (x) I) vec(P) = -vec(M). Dense n^2 x n^2,
/// intended for n up to a few dozen. Throws RiccatiError("resonant
/// spectrum") when two eigenvalues of Ahat sum to zero.
inline Eigen::MatrixXd lyapunov_solve(const LyapunovProblem& p) {
  const Eigen::Index n = p.Ahat.rows();
  if (p.Ahat.cols() != n || p.M.rows() != n || p.M.cols() != n)
    throw std::invalid_argument("lyapunov_solve: dimension mismatch");
  const Eigen::MatrixXd M = 0.5 * (p.M + p.M.transpose());
  const Eigen::MatrixXd At = p.Ahat.transpose();
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd K(n * n, n * n);
  // column-major vec: vec(P A) = (A^T (x) I) vec(P), vec(A^T P) = (I (x) A^T) vec(P)
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) K.block(i * n, j * n, n, n) = At(i, j) * I + (i == j ? At : Eigen::MatrixXd::Zero(n, n));
  Eigen::FullPivLU<Eigen::MatrixXd> lu(K);
  lu.setThreshold(1e-13);
  if (!lu.isInvertible()) throw RiccatiError("lyapunov_solve: resonant spectrum (singular Kronecker system)");
  Eigen::VectorXd vecM = Eigen::Map<const Eigen::VectorXd>(M.data(), n * n);
  Eigen::VectorXd vecP = lu.solve(-vecM);
  Eigen::MatrixXd P = Eigen::Map<Eigen::MatrixXd>(vecP.data(), n, n);
  P = (0.5 * (P + P.transpose())).eval();
  const double res = (P * p.Ahat + At * P + M).norm();
  if (!(res <= 1e-10 * (P.norm() * p.Ahat.norm() + M.norm())))
    throw RiccatiError("lyapunov_solve: resonant spectrum (residual " + std::to_string(res) + ")");
  return P;
}

/// K = -R^{-1} B^T P.
inline Eigen::MatrixXd gain_update(const Eigen::MatrixXd& P, const Eigen::MatrixXd& B, const Eigen::MatrixXd& R) {
  return -R.llt().solve(B.transpose() * P);
}

/// Hurwitz test: P Ahat + Ahat^T P = -I has a positive definite solution.
inline bool is_hurwitz(const Eigen::MatrixXd& Ahat) {
  const Eigen::Index n = Ahat.rows();
  try {
    Eigen::MatrixXd P = lyapunov_solve({Ahat, Eigen::MatrixXd::Identity(n, n)});
    Eigen::LLT<Eigen::MatrixXd> llt(P);
    return llt.info() == Eigen::Success;
  } catch (const RiccatiError&) {
    return false;
  }
}

struct KleinmanResult {
  Eigen::MatrixXd P;
  Eigen::MatrixXd K;
  int iterations = 0;
  /// min eigenvalue of P_i - P_{i+1} over the run (>= -1e-10 when monotone)
  double min_decrease_eig = 0.0;
};

/// Kleinman's iteration: Lyapunov solve for the current gain, then
/// K <- -R^{-1} B^T P, until ||K_{i+1} - K_i||_F < tol.
inline KleinmanResult kleinman(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Eigen::MatrixXd& Qhat,
                               const Eigen::MatrixXd& Rhat, const Eigen::MatrixXd& K0, int max_iters = 100,
                               double tol = 1e-12) {
  KleinmanResult out;
  out.K = K0;
  out.min_decrease_eig = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd P_prev;
  for (int it = 1; it <= max_iters; ++it) {
    const Eigen::MatrixXd Ahat = A + B * out.K;
    if (!is_hurwitz(Ahat))
      throw RiccatiError("kleinman: closed loop not Hurwitz at iteration " + std::to_string(it));
    Eigen::MatrixXd P = lyapunov_solve({Ahat, Qhat + out.K.transpose() * Rhat * out.K});
    if (P_prev.size() > 0) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(P_prev - P);
      out.min_decrease_eig = std::min(out.min_decrease_eig, es.eigenvalues().minCoeff());
    }
    Eigen::MatrixXd K = gain_update(P, B, Rhat);
    const double step = (K - out.K).norm();
    out.P = P;
    out.K = K;
    out.iterations = it;
    P_prev = P;
    if (step < tol) return out;
  }
  return out;
}

/// A gain with A + B K Hurwitz for controllable (A, B) (Bass's method):
/// with c > ||A||, solve (A + cI) Z + Z (A + cI)^T = 2 B B^T and take
/// K = -B^T Z^{-1}; the closed loop satisfies (A+BK) Z + Z (A+BK)^T = -2cZ.
inline Eigen::MatrixXd stabilizing_gain(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  const Eigen::Index n = A.rows();
  const double c = A.norm() + 1.0;
  const Eigen::MatrixXd As = A + c * Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd Z = lyapunov_solve({As.transpose(), -2.0 * B * B.transpose()});
  Eigen::LLT<Eigen::MatrixXd> llt(Z);
  if (llt.info() != Eigen::Success) throw RiccatiError("stabilizing_gain: (A, B) is not controllable");
  return -llt.solve(B).transpose();
}

/// LQR gain for x^T Qhat x + u^T R u, warm-started from stabilizing_gain.
inline KleinmanResult lqr(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Eigen::MatrixXd& Qhat,
                          const Eigen::MatrixXd& R) {
  return kleinman(A, B, Qhat, R, stabilizing_gain(A, B));
}

}  // namespace npi
