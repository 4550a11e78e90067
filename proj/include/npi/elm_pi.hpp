#pragma once

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <optional>
#include <string>
#include <vector>

#include "npi/collocation.hpp"
#include "npi/ghjb.hpp"
#include "npi/parallel.hpp"
#include "npi/pi_common.hpp"
#include "npi/valuenet.hpp"

namespace npi {

/// How V(0) = 0 is enforced: subtract beta^T sigma(b) after the solve, or
/// append a weighted penalty row to the least-squares system.
enum class OriginMode { subtract, penalty };

struct ElmConfig {
  int width = 50;
  std::uint64_t seed = 0;
  Activation activation = Activation::tanh;
  bool zero_bias = false;
  OriginMode origin = OriginMode::subtract;
  double lambda = 1.0;
  int max_iters = 10;
  double tol = 1e-9;
  bool resample = false;
  int collocation = 0;  // 0: width * state_dim
  Sampler sampler = Sampler::uniform;
  double rcond = 1e-12;
  int threads = 1;
};

struct LeastSquaresProblem {
  Eigen::MatrixXd A;
  Eigen::VectorXd t;
  bool has_penalty_row = false;

  int residual_rows() const { return static_cast<int>(A.rows()) - (has_penalty_row ? 1 : 0); }
};

/// Rows A[s, j] = sigma'(w_j x_s + b_j) (w_j . drift_s), t[s] = -cost_s where
/// drift and cost belong to the closed loop under `kappa`. net.beta is ignored.
inline LeastSquaresProblem assemble(const ControlAffineSystem& sys, const Policy& kappa, const ValueNet& net,
                                    const CollocationSet& colloc, double lambda, OriginMode mode = OriginMode::subtract,
                                    int threads = 1) {
  const int N = colloc.size(), n = sys.state_dim(), m = net.width();
  Eigen::MatrixXd drift(N, n);
  LeastSquaresProblem p;
  p.t.resize(N);
  parallel_for(static_cast<std::size_t>(N), threads, [&](std::size_t s) {
    const auto i = static_cast<Eigen::Index>(s);
    auto [d, cost] = closed_loop(sys, kappa, colloc.points.row(i).transpose());
    drift.row(i) = d.transpose();
    p.t(i) = -cost;
  });
  Eigen::MatrixXd Z = (colloc.points * net.W.transpose()).rowwise() + net.b.transpose();
  Eigen::MatrixXd S1 = Z.unaryExpr([a = net.activation](double v) { return act_d1(a, v); });
  Eigen::MatrixXd A = S1.cwiseProduct(drift * net.W.transpose());
  p.has_penalty_row = lambda > 0 && mode == OriginMode::penalty;
  if (p.has_penalty_row) {
    p.A.resize(N + 1, m);
    p.A.topRows(N) = A;
    p.A.row(N) = std::sqrt(lambda) * net.b.unaryExpr([a = net.activation](double v) { return act(a, v); }).transpose();
    p.t.conservativeResize(N + 1);
    p.t(N) = 0.0;
  } else {
    p.A = std::move(A);
  }
  return p;
}

struct LsSolution {
  Eigen::VectorXd beta;
  int rank = 0;
  bool rank_deficient = false;
};

/// Minimum-norm least squares through a thin QR followed by an SVD of the
/// triangular factor; singular values below rcond * s_max are dropped.
inline LsSolution solve_ls(const LeastSquaresProblem& p, double rcond = 1e-12) {
  if (p.A.rows() < 1) throw std::invalid_argument("solve_ls: empty system");
  const Eigen::Index rows = p.A.rows(), m = p.A.cols();
  Eigen::MatrixXd R;
  Eigen::VectorXd rhs;
  if (rows > m) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(p.A);
    R = qr.matrixQR().topRows(m).triangularView<Eigen::Upper>();
    rhs = (qr.householderQ().transpose() * p.t).head(m);
  } else {
    R = p.A;
    rhs = p.t;
  }
  Eigen::BDCSVD<Eigen::MatrixXd> svd(R, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  LsSolution out;
  const double cut = sv.size() > 0 ? rcond * sv(0) : 0.0;
  Eigen::VectorXd coeff = svd.matrixU().transpose() * rhs;
  for (Eigen::Index k = 0; k < sv.size(); ++k) {
    if (sv(k) > cut && sv(k) > 0) {
      coeff(k) /= sv(k);
      ++out.rank;
    } else {
      coeff(k) = 0.0;
    }
  }
  out.beta = svd.matrixV() * coeff;
  out.rank_deficient = out.rank < m;
  return out;
}

/// Algorithm: fix random (W, b) and collocation points; per iteration solve
/// the GHJB least-squares problem for beta under the current policy, then
/// switch to the greedy policy of the new value net.
inline PiRun run_elm_pi(const Benchmark& bm, const Policy& initial_policy, const ElmConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  const ControlAffineSystem& sys = bm.system;
  const int n = sys.state_dim();
  if (cfg.width < 1 || cfg.max_iters < 1) throw std::invalid_argument("elm: width and max_iters must be >= 1");
  const int N = cfg.collocation > 0 ? cfg.collocation : cfg.width * n;

  ValueNet net = init_random(cfg.width, n, cfg.seed, cfg.activation);
  if (cfg.zero_bias) net.b.setZero();
  CollocationSet colloc = sample_collocation(sys.domain(), N, cfg.seed, cfg.sampler);
  TestGrid grid(bm, 2 * N, cfg.seed);

  PiRun run;
  run.collocation_count = colloc.size();
  Policy kappa = initial_policy;
  double prev_rms = std::numeric_limits<double>::quiet_NaN();
  for (int i = 1; i <= cfg.max_iters; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    if (cfg.resample && i > 1) colloc = sample_collocation(sys.domain(), N, cfg.seed, cfg.sampler, static_cast<std::uint64_t>(i));
    LeastSquaresProblem p = assemble(sys, kappa, net, colloc, cfg.lambda, cfg.origin, cfg.threads);
    LsSolution sol = solve_ls(p, cfg.rcond);
    PiIteration it;
    it.iter = i;
    it.rank = sol.rank;
    if (sol.rank_deficient && (run.history.empty() || run.history.back().rank != sol.rank))
      run.warnings.push_back("iteration " + std::to_string(i) + ": design matrix rank " + std::to_string(sol.rank) +
                             " < width " + std::to_string(cfg.width));
    it.net = net;
    it.net.beta = sol.beta;
    it.net.normalize_origin();
    if (cfg.origin == OriginMode::penalty && cfg.lambda > 0) it.net.bias_shift = 0.0;
    const int R = p.residual_rows();
    it.residual_rms = std::sqrt((p.A.topRows(R) * sol.beta - p.t.head(R)).squaredNorm() / R);
    if (std::isfinite(prev_rms) && (!std::isfinite(it.residual_rms) || it.residual_rms > 1e3 * prev_rms)) {
      run.status = PiStatus::diverged;
      run.warnings.push_back("iteration " + std::to_string(i) + ": policy evaluation diverged");
      break;
    }
    prev_rms = it.residual_rms;
    grid.record(it);
    it.wall_ms = elapsed_ms(t0);
    kappa = net_policy(it.net, sys);
    const bool done = it.sup_change < cfg.tol;
    run.history.push_back(std::move(it));
    if (done) {
      run.status = PiStatus::converged;
      break;
    }
  }
  if (run.history.empty()) throw std::runtime_error("elm: policy evaluation diverged in the first iteration");
  run.wall_ms = elapsed_ms(start);
  return run;
}

inline void write_elm_csv(const PiRun& run, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "iter,residual_rms,sup_change,test_error,wall_ms\n" << std::setprecision(17);
  for (const auto& it : run.history)
    out << it.iter << ',' << it.residual_rms << ',' << it.sup_change << ',' << it.test_error << ','
        << std::setprecision(6) << it.wall_ms << std::setprecision(17) << '\n';
}

}  // namespace npi
