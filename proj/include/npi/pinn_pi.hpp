#pragma once

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <string>
#include <vector>

#include "npi/collocation.hpp"
#include "npi/ghjb.hpp"
#include "npi/parallel.hpp"
#include "npi/pi_common.hpp"
#include "npi/riccati.hpp"
#include "npi/valuenet.hpp"
#include "npi/valuenet_io.hpp"

namespace npi {

struct TrainConfig {
  int steps_per_iter = 10000;
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double lambda_origin = 1.0;
  double lambda_gain = 1.0;
  int batch = 0;  // 0: full batch
  std::uint64_t seed = 0;
  int pi_iters = 10;
  int collocation = 0;  // 0: width * state_dim
  int log_every = 500;
  int threads = 1;
  std::string checkpoint_dir;  // empty: no checkpoints

  void validate() const {
    if (steps_per_iter < 1) throw std::invalid_argument("train.steps_per_iter must be >= 1");
    if (!(learning_rate > 0) || !(adam_eps > 0)) throw std::invalid_argument("train: rates must be > 0");
    if (!(adam_beta1 >= 0 && adam_beta1 < 1) || !(adam_beta2 >= 0 && adam_beta2 < 1))
      throw std::invalid_argument("train: adam betas must lie in [0, 1)");
    if (lambda_origin < 0 || lambda_gain < 0) throw std::invalid_argument("train: loss weights must be >= 0");
    if (pi_iters < 1) throw std::invalid_argument("train.pi_iters must be >= 1");
  }
};

struct LossBreakdown {
  double residual_mse = 0.0;
  double origin_penalty = 0.0;
  double gain_penalty = 0.0;
  double total = 0.0;
};

/// Everything the gain-matching term needs: the target K, B = g(0), the
/// partials dg/dx_k(0) and R^{-1}.
struct GainTarget {
  Eigen::MatrixXd K;
  Eigen::MatrixXd B;
  std::vector<Eigen::MatrixXd> dg0;
  Eigen::MatrixXd R_inv;
};

/// Closed-loop data of a fixed policy at fixed collocation points.
struct ResidualData {
  Eigen::MatrixXd X;  // N x n
  Eigen::MatrixXd D;  // N x n, f + g kappa
  Eigen::VectorXd L;  // N, Q + kappa^T R kappa
};

inline ResidualData prepare_residual_data(const ControlAffineSystem& sys, const Policy& kappa,
                                          const CollocationSet& colloc, int threads = 1) {
  const int N = colloc.size();
  if (N < 1) throw std::invalid_argument("pinn: empty collocation set");
  ResidualData d{colloc.points, Eigen::MatrixXd(N, sys.state_dim()), Eigen::VectorXd(N)};
  parallel_for(static_cast<std::size_t>(N), threads, [&](std::size_t s) {
    const auto i = static_cast<Eigen::Index>(s);
    auto [drift, cost] = closed_loop(sys, kappa, d.X.row(i).transpose());
    d.D.row(i) = drift.transpose();
    d.L(i) = cost;
  });
  return d;
}

/// Gradient of the loss with respect to (W, b, beta).
struct NetGradient {
  Eigen::MatrixXd W;
  Eigen::VectorXd b;
  Eigen::VectorXd beta;
};

namespace detail {

// tanh through exp, which Eigen vectorizes for doubles.
inline Eigen::ArrayXXd fast_tanh(const Eigen::ArrayXXd& z) { return 1.0 - 2.0 / ((2.0 * z).exp() + 1.0); }

inline Eigen::MatrixXd gain_jacobian(const ValueNet& net, const GainTarget& g) {
  const int n = net.state_dim();
  Eigen::MatrixXd inner = g.B.transpose() * net.hessian_origin();
  Eigen::RowVectorXd dv0 = net.gradient(Eigen::VectorXd::Zero(n));
  for (int k = 0; k < n; ++k) inner.col(k) += g.dg0[static_cast<std::size_t>(k)].transpose() * dv0.transpose();
  return -0.5 * g.R_inv * inner;
}

constexpr Eigen::Index kBlockRows = 512;

}  // namespace detail

/// Loss (and optionally its gradient) of a tanh net on prepared data:
/// mean squared GHJB residual + lambda_origin V(0)^2
/// + lambda_gain ||D kappa(0) - K||_F^2.
inline LossBreakdown evaluate_loss(const ResidualData& data, const ValueNet& net, const GainTarget* gain,
                                   const TrainConfig& cfg, NetGradient* grad = nullptr) {
  if (net.activation != Activation::tanh) throw std::invalid_argument("pinn: requires tanh activation");
  const Eigen::Index N = data.X.rows(), m = net.width(), n = net.state_dim();
  const Eigen::Index blocks = (N + detail::kBlockRows - 1) / detail::kBlockRows;
  struct Partial {
    double sse = 0.0;
    Eigen::VectorXd gbeta, gb;
    Eigen::MatrixXd gW;
  };
  std::vector<Partial> parts(static_cast<std::size_t>(blocks));
  const Eigen::MatrixXd Wt = net.W.transpose();
  const double scale = 2.0 / static_cast<double>(N);
  parallel_for(static_cast<std::size_t>(blocks), cfg.threads, [&](std::size_t k) {
    const Eigen::Index r0 = static_cast<Eigen::Index>(k) * detail::kBlockRows;
    const Eigen::Index rows = std::min(detail::kBlockRows, N - r0);
    const auto Xb = data.X.middleRows(r0, rows);
    const auto Db = data.D.middleRows(r0, rows);
    Eigen::ArrayXXd Z = ((Xb * Wt).rowwise() + net.b.transpose()).array();
    Eigen::ArrayXXd T = detail::fast_tanh(Z);
    Eigen::ArrayXXd S1 = 1.0 - T.square();
    Eigen::ArrayXXd Aa = (Db * Wt).array();
    Eigen::MatrixXd P = (S1 * Aa).matrix();
    Eigen::VectorXd r = data.L.segment(r0, rows) + P * net.beta;
    Partial& out = parts[k];
    out.sse = r.squaredNorm();
    if (!grad) return;
    Eigen::VectorXd e = scale * r;
    out.gbeta = P.transpose() * e;
    Eigen::MatrixXd Cpp = ((-2.0 * T * S1 * Aa).colwise() * e.array()).matrix();
    Eigen::MatrixXd Cp = (S1.colwise() * e.array()).matrix();
    out.gb = Cpp.colwise().sum().transpose();
    out.gW = Cpp.transpose() * Xb + Cp.transpose() * Db;
  });

  LossBreakdown lb;
  for (const auto& p : parts) lb.residual_mse += p.sse;
  lb.residual_mse /= static_cast<double>(N);
  const Eigen::VectorXd tb = net.b.array().tanh().matrix();
  const double v0 = net.beta.dot(tb) - net.bias_shift;
  lb.origin_penalty = v0 * v0;
  Eigen::MatrixXd delta;
  if (gain) {
    delta = detail::gain_jacobian(net, *gain) - gain->K;
    lb.gain_penalty = delta.squaredNorm();
  }
  lb.total = lb.residual_mse + cfg.lambda_origin * lb.origin_penalty + cfg.lambda_gain * lb.gain_penalty;
  if (!grad) return lb;

  grad->beta = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd colsum = Eigen::VectorXd::Zero(m);
  Eigen::MatrixXd gw = Eigen::MatrixXd::Zero(m, n);
  for (const auto& p : parts) {
    grad->beta += p.gbeta;
    colsum += p.gb;
    gw += p.gW;
  }
  grad->b = net.beta.cwiseProduct(colsum);
  grad->W = net.beta.asDiagonal() * gw;

  const Eigen::VectorXd s1b = 1.0 - tb.array().square();
  const double co = 2.0 * cfg.lambda_origin * v0;
  grad->beta += co * tb;
  grad->b += co * net.beta.cwiseProduct(s1b);

  if (gain && cfg.lambda_gain != 0.0) {
    const double lg = cfg.lambda_gain;
    const Eigen::MatrixXd Lambda = -gain->R_inv * delta;  // m_in x n
    const Eigen::MatrixXd Psi = gain->B * Lambda;         // n x n
    const Eigen::MatrixXd PsiSym = Psi + Psi.transpose();
    Eigen::VectorXd phi = Eigen::VectorXd::Zero(n);
    for (Eigen::Index k = 0; k < n; ++k) phi += gain->dg0[static_cast<std::size_t>(k)] * Lambda.col(k);
    for (Eigen::Index j = 0; j < m; ++j) {
      const Eigen::VectorXd w = net.W.row(j).transpose();
      const double bj = net.b(j), beta_j = net.beta(j);
      const double s1 = s1b(j), s2 = act_d2(Activation::tanh, bj), s3 = act_d3(Activation::tanh, bj);
      const double quad = w.dot(Psi * w), lin = w.dot(phi);
      grad->beta(j) += lg * (s2 * quad + s1 * lin);
      grad->b(j) += lg * beta_j * (s3 * quad + s2 * lin);
      grad->W.row(j) += lg * beta_j * (s2 * (PsiSym * w) + s1 * phi).transpose();
    }
  }
  return lb;
}

/// Loss for any value model: residual over the collocation set under
/// kappa, V(0)^2, and the gain term when a target is given (the model's
/// policy Jacobian at 0 is taken by central differences unless it is a
/// ValueNet).
template <ValueModel V>
LossBreakdown loss(const ControlAffineSystem& sys, const Policy& kappa, const V& model, const CollocationSet& colloc,
                   const std::optional<Eigen::MatrixXd>& target_gain, const TrainConfig& cfg) {
  if (colloc.size() < 1) throw std::invalid_argument("loss: empty collocation set");
  LossBreakdown lb;
  for (int s = 0; s < colloc.size(); ++s) {
    const double r = ghjb_residual(sys, kappa, model, colloc.points.row(s).transpose()).residual;
    lb.residual_mse += r * r;
  }
  lb.residual_mse /= colloc.size();
  const double v0 = model.value(Eigen::VectorXd::Zero(sys.state_dim()));
  lb.origin_penalty = v0 * v0;
  if (target_gain) {
    Eigen::MatrixXd J;
    if constexpr (std::is_same_v<V, ValueNet>) {
      J = policy_jacobian_origin(model, sys);
    } else {
      const int n = sys.state_dim();
      J.resize(sys.input_dim(), n);
      const double h = 1e-6;
      for (int k = 0; k < n; ++k) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
        e(k) = h;
        J.col(k) = (policy(model, sys, e) - policy(model, sys, Eigen::VectorXd(-e))) / (2 * h);
      }
    }
    lb.gain_penalty = (J - *target_gain).squaredNorm();
  }
  lb.total = lb.residual_mse + cfg.lambda_origin * lb.origin_penalty + cfg.lambda_gain * lb.gain_penalty;
  return lb;
}

inline GainTarget make_gain_target(const ControlAffineSystem& sys, const Eigen::MatrixXd& K) {
  return {K, sys.g(Eigen::VectorXd::Zero(sys.state_dim())), input_matrix_jacobian_origin(sys), sys.R_inv()};
}

/// Exact gradient of the loss of a tanh net.
inline NetGradient loss_gradient(const ControlAffineSystem& sys, const Policy& kappa, const ValueNet& net,
                                 const CollocationSet& colloc, const std::optional<Eigen::MatrixXd>& target_gain,
                                 const TrainConfig& cfg) {
  ResidualData data = prepare_residual_data(sys, kappa, colloc, cfg.threads);
  std::optional<GainTarget> gt;
  if (target_gain) gt = make_gain_target(sys, *target_gain);
  NetGradient g;
  evaluate_loss(data, net, gt ? &*gt : nullptr, cfg, &g);
  return g;
}

/// Parameters as one vector: W (column-major), b, beta.
inline Eigen::VectorXd pack(const ValueNet& net) {
  const Eigen::Index wn = net.W.size(), m = net.width();
  Eigen::VectorXd th(wn + 2 * m);
  th.head(wn) = Eigen::Map<const Eigen::VectorXd>(net.W.data(), wn);
  th.segment(wn, m) = net.b;
  th.tail(m) = net.beta;
  return th;
}

inline Eigen::VectorXd pack(const NetGradient& g) {
  const Eigen::Index wn = g.W.size(), m = g.b.size();
  Eigen::VectorXd th(wn + 2 * m);
  th.head(wn) = Eigen::Map<const Eigen::VectorXd>(g.W.data(), wn);
  th.segment(wn, m) = g.b;
  th.tail(m) = g.beta;
  return th;
}

inline void unpack(const Eigen::VectorXd& th, ValueNet& net) {
  const Eigen::Index wn = net.W.size(), m = net.width();
  net.W = Eigen::Map<const Eigen::MatrixXd>(th.data(), net.W.rows(), net.W.cols());
  net.b = th.segment(wn, m);
  net.beta = th.tail(m);
}

struct AdamState {
  Eigen::VectorXd m1, m2;
  long step = 0;

  explicit AdamState(Eigen::Index size = 0) : m1(Eigen::VectorXd::Zero(size)), m2(Eigen::VectorXd::Zero(size)) {}
};

/// One bias-corrected Adam update of theta in place.
inline void adam_step(AdamState& st, Eigen::VectorXd& theta, const Eigen::VectorXd& g, const TrainConfig& cfg) {
  if (st.m1.size() != theta.size()) st = AdamState(theta.size());
  ++st.step;
  st.m1 = cfg.adam_beta1 * st.m1 + (1.0 - cfg.adam_beta1) * g;
  st.m2 = cfg.adam_beta2 * st.m2 + (1.0 - cfg.adam_beta2) * g.cwiseAbs2();
  const double c1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(st.step));
  const double c2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(st.step));
  theta.array() -= cfg.learning_rate * (st.m1.array() / c1) / ((st.m2.array() / c2).sqrt() + cfg.adam_eps);
}

/// Central-difference Jacobian of a policy at the origin.
inline Eigen::MatrixXd policy_jacobian_fd(const Policy& kappa, int n, int m, double h = 1e-6) {
  Eigen::MatrixXd J(m, n);
  for (int k = 0; k < n; ++k) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
    e(k) = h;
    J.col(k) = (kappa(e) - kappa(-e)) / (2 * h);
  }
  return J;
}

/// Gain the linearized policy-evaluation step would produce from the
/// current gain K: solve P (A+BK) + (A+BK)^T P = -(Qhat/2 + K^T R K) and
/// return -R^{-1} B^T P. Empty when A + BK is not Hurwitz.
inline std::optional<Eigen::MatrixXd> gain_target(const Linearization& lin, const Eigen::MatrixXd& R,
                                                  const Eigen::MatrixXd& K) {
  const Eigen::MatrixXd Ahat = lin.A + lin.B * K;
  if (!is_hurwitz(Ahat)) return std::nullopt;
  const Eigen::MatrixXd P = lyapunov_solve({Ahat, 0.5 * lin.Qhat + K.transpose() * R * K});
  return gain_update(P, lin.B, R);
}

struct PinnLogRow {
  int iter = 0;
  int step = 0;
  LossBreakdown loss;
  double test_error = std::numeric_limits<double>::quiet_NaN();
};

struct PinnRun {
  PiRun pi;
  std::vector<PinnLogRow> log;
};

/// Policy iteration with gradient-trained evaluation. The same network is
/// trained across iterations; Adam restarts and collocation points are
/// redrawn at every iteration.
inline PinnRun run_pinn_pi(const Benchmark& bm, const Policy& initial_policy, const TrainConfig& cfg, int width) {
  cfg.validate();
  if (width < 1) throw std::invalid_argument("pinn: width must be >= 1");
  const auto start = std::chrono::steady_clock::now();
  const ControlAffineSystem& sys = bm.system;
  const int n = sys.state_dim(), m_in = sys.input_dim();
  const int N = cfg.collocation > 0 ? cfg.collocation : width * n;
  const bool use_gain = cfg.lambda_gain > 0 && !bm.uncontrollable_linearization;

  std::optional<Linearization> lin;
  if (use_gain) lin = linearize(sys);
  ValueNet net = init_random(width, n, cfg.seed, Activation::tanh);
  TestGrid grid(bm, 2 * N, cfg.seed);
  PinnRun out;
  out.pi.collocation_count = N;
  if (!cfg.checkpoint_dir.empty()) std::filesystem::create_directories(cfg.checkpoint_dir);

  Policy kappa = initial_policy;
  Eigen::MatrixXd K_current = policy_jacobian_fd(initial_policy, n, m_in);
  const CounterRng batch_rng = CounterRng(cfg.seed).substream(300);
  std::uint64_t batch_counter = 0;

  auto shifted_error = [&](const ValueNet& raw) {
    if (!bm.reference_value) return std::numeric_limits<double>::quiet_NaN();
    ValueNet v = raw;
    v.normalize_origin();
    PiIteration tmp;
    tmp.net = std::move(v);
    TestGrid probe = grid;
    probe.record(tmp);
    return tmp.test_error;
  };

  for (int i = 1; i <= cfg.pi_iters; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    PiIteration it;
    it.iter = i;
    CollocationSet colloc = sample_collocation(sys.domain(), N, cfg.seed, Sampler::uniform, static_cast<std::uint64_t>(i));
    ResidualData data = prepare_residual_data(sys, kappa, colloc, cfg.threads);

    std::optional<GainTarget> gt;
    if (use_gain) {
      if (auto K = gain_target(*lin, sys.R(), K_current)) {
        gt = make_gain_target(sys, *K);
      } else {
        out.pi.warnings.push_back("iteration " + std::to_string(i) +
                                  ": linearized closed loop not Hurwitz, gain term dropped");
      }
    }
    it.gain_active = gt.has_value();
    const GainTarget* gp = gt ? &*gt : nullptr;

    net.bias_shift = 0.0;
    Eigen::VectorXd theta = pack(net);
    AdamState adam(theta.size());
    NetGradient g;
    LossBreakdown lb;
    const bool minibatch = cfg.batch > 0 && cfg.batch < N;
    ResidualData sub;
    for (int step = 0; step <= cfg.steps_per_iter; ++step) {
      const bool last = step == cfg.steps_per_iter;
      const bool log = step == 0 || last || (cfg.log_every > 0 && step % cfg.log_every == 0);
      if (minibatch && !last) {
        sub.X.resize(cfg.batch, n);
        sub.D.resize(cfg.batch, n);
        sub.L.resize(cfg.batch);
        for (int s = 0; s < cfg.batch; ++s) {
          const auto idx = static_cast<Eigen::Index>(batch_rng.bits(batch_counter++) % static_cast<std::uint64_t>(N));
          sub.X.row(s) = data.X.row(idx);
          sub.D.row(s) = data.D.row(idx);
          sub.L(s) = data.L(idx);
        }
      }
      const ResidualData& use = (minibatch && !last) ? sub : data;
      lb = evaluate_loss(use, net, gp, cfg, last ? nullptr : &g);
      if (minibatch && log) lb = evaluate_loss(data, net, gp, cfg);
      if (step == 0) it.loss_initial = lb.total;
      if (log) out.log.push_back({i, step, lb, shifted_error(net)});
      if (last) break;
      adam_step(adam, theta, pack(g), cfg);
      unpack(theta, net);
    }
    it.loss_final = lb.total;
    if (it.loss_final > it.loss_initial)
      out.pi.warnings.push_back("iteration " + std::to_string(i) + ": non-decreasing loss");

    it.net = net;
    it.net.normalize_origin();
    it.residual_rms = std::sqrt(lb.residual_mse);
    grid.record(it);
    it.wall_ms = elapsed_ms(t0);
    kappa = net_policy(it.net, sys);
    if (use_gain) K_current = policy_jacobian_origin(it.net, sys, gt ? gt->B : sys.g(Eigen::VectorXd::Zero(n)),
                                                     input_matrix_jacobian_origin(sys));
    if (!cfg.checkpoint_dir.empty())
      save_value_net(it.net, (std::filesystem::path(cfg.checkpoint_dir) / ("iter_" + std::to_string(i) + ".json")).string());
    out.pi.history.push_back(std::move(it));
  }
  out.pi.wall_ms = elapsed_ms(start);
  return out;
}

inline void write_pinn_csv(const PinnRun& run, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "iter,step,residual_mse,origin_penalty,gain_penalty,test_error\n" << std::setprecision(17);
  for (const auto& r : run.log)
    out << r.iter << ',' << r.step << ',' << r.loss.residual_mse << ',' << r.loss.origin_penalty << ','
        << r.loss.gain_penalty << ',' << r.test_error << '\n';
}

}  // namespace npi
