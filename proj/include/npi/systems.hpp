#pragma once

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "npi/autodiff.hpp"
#include "npi/interval.hpp"
#include "npi/rng.hpp"
#include "npi/smt_expr.hpp"

namespace npi {

/// Axis-aligned box [lo, hi] in R^n.
struct Box {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;

  static Box symmetric(int n, double half_width) {
    return {Eigen::VectorXd::Constant(n, -half_width), Eigen::VectorXd::Constant(n, half_width)};
  }

  int dim() const { return static_cast<int>(lo.size()); }
  Eigen::VectorXd width() const { return hi - lo; }
  Eigen::VectorXd center() const { return 0.5 * (lo + hi); }
  bool contains(const Eigen::VectorXd& x) const {
    return ((x - lo).array() >= 0).all() && ((hi - x).array() >= 0).all();
  }
  bool strictly_contains(const Eigen::VectorXd& x) const {
    return ((x - lo).array() > 0).all() && ((hi - x).array() > 0).all();
  }
};

/// Scalar types every system can be evaluated on: plain values, interval
/// enclosures, interval value+gradient enclosures, and SMT-LIB terms.
template <class S>
using DynamicsFn = std::function<void(std::span<const S> x, std::span<S> f, std::span<S> g)>;

template <class S>
using CostFn = std::function<S(std::span<const S> x)>;

/// State feedback u = kappa(x).
using Policy = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// (A, B, Qhat) = (Df(0), g(0), Hessian of Q at 0).
struct Linearization {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  Eigen::MatrixXd Qhat;
};

/// x' = f(x) + g(x) u with running cost Q(x) + u^T R u on a box domain.
///
/// f, g and Q are supplied once as generic callables and instantiated for
/// each supported scalar type, so the same source of truth drives training,
/// simulation, interval verification, and SMT export. Evaluation is pure and
/// reentrant.
class ControlAffineSystem {
 public:
  /// `f(x, out)` writes n drift components; `g(x, out)` writes the n x m
  /// input matrix row-major (pre-zeroed); `q(x)` returns the state cost.
  /// Each must accept std::span over double, Interval, Grad<Interval>,
  /// Grad<double> and SmtExpr.
  template <class F, class G, class Qf>
  ControlAffineSystem(std::string name, int state_dim, int input_dim, F f, G g, Qf q, Eigen::MatrixXd R,
                      Box domain)
      : name_(std::move(name)), n_(state_dim), m_(input_dim), R_(std::move(R)), domain_(std::move(domain)) {
    if (n_ < 1 || m_ < 1) throw std::invalid_argument("system dimensions must be positive");
    if (domain_.dim() != n_) throw std::invalid_argument("domain dimension mismatch");
    if (R_.rows() != m_ || R_.cols() != m_) throw std::invalid_argument("R must be input_dim x input_dim");
    if (!R_.isApprox(R_.transpose(), 1e-14)) throw std::invalid_argument("R must be symmetric");
    Eigen::LLT<Eigen::MatrixXd> llt(R_);
    if (llt.info() != Eigen::Success) throw std::invalid_argument("R must be positive definite");
    R_inv_ = llt.solve(Eigen::MatrixXd::Identity(m_, m_));
    if (!domain_.strictly_contains(Eigen::VectorXd::Zero(n_)))
      throw std::invalid_argument("origin must be strictly interior to the domain");
    bind<double>(f, g, q);
    bind<Interval>(f, g, q);
    bind<Grad<Interval>>(f, g, q);
    bind<Grad<double>>(f, g, q);
    bind<SmtExpr>(f, g, q);
  }

  const std::string& name() const { return name_; }
  int state_dim() const { return n_; }
  int input_dim() const { return m_; }
  const Eigen::MatrixXd& R() const { return R_; }
  const Eigen::MatrixXd& R_inv() const { return R_inv_; }
  const Box& domain() const { return domain_; }

  /// Generic evaluation on any registered scalar type.
  template <class S>
  void eval(std::span<const S> x, std::span<S> f, std::span<S> g) const {
    std::get<Forms<S>>(forms_).dyn(x, f, g);
  }

  template <class S>
  S cost_as(std::span<const S> x) const {
    return std::get<Forms<S>>(forms_).cost(x);
  }

  Eigen::VectorXd f(const Eigen::VectorXd& x) const {
    Eigen::VectorXd fx(n_);
    Eigen::MatrixXd gx(n_, m_);
    eval_dense(x, fx, gx);
    return fx;
  }

  Eigen::MatrixXd g(const Eigen::VectorXd& x) const {
    Eigen::VectorXd fx(n_);
    Eigen::MatrixXd gx(n_, m_);
    eval_dense(x, fx, gx);
    return gx;
  }

  void eval_dense(const Eigen::VectorXd& x, Eigen::VectorXd& fx, Eigen::MatrixXd& gx) const {
    std::vector<double> gbuf(static_cast<std::size_t>(n_ * m_));
    fx.resize(n_);
    eval<double>(std::span<const double>(x.data(), n_), std::span<double>(fx.data(), n_), gbuf);
    gx = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(gbuf.data(), n_,
                                                                                                  m_);
  }

  double Q(const Eigen::VectorXd& x) const { return cost_as<double>(std::span<const double>(x.data(), n_)); }

  /// Running cost L(x, u) = Q(x) + u^T R u.
  double running_cost(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const { return Q(x) + u.dot(R_ * u); }

  /// Analytic linearization data, when the constructor of the benchmark
  /// knows it. linearize() cross-checks it against finite differences.
  const std::optional<Linearization>& analytic_linearization() const { return analytic_; }
  ControlAffineSystem& with_linearization(Linearization lin) {
    analytic_ = std::move(lin);
    return *this;
  }

 private:
  template <class S>
  struct Forms {
    DynamicsFn<S> dyn;
    CostFn<S> cost;
  };

  template <class S, class F, class G, class Qf>
  void bind(const F& f, const G& g, const Qf& q) {
    const int n = n_, m = m_;
    auto& forms = std::get<Forms<S>>(forms_);
    forms.dyn = [f, g, n, m](std::span<const S> x, std::span<S> fx, std::span<S> gx) {
      for (int i = 0; i < n; ++i) fx[i] = S(0.0);
      for (int i = 0; i < n * m; ++i) gx[i] = S(0.0);
      f(x, fx);
      g(x, gx);
    };
    forms.cost = [q](std::span<const S> x) { return S(q(x)); };
  }

  std::string name_;
  int n_;
  int m_;
  Eigen::MatrixXd R_;
  Eigen::MatrixXd R_inv_;
  Box domain_;
  std::optional<Linearization> analytic_;
  std::tuple<Forms<double>, Forms<Interval>, Forms<Grad<Interval>>, Forms<Grad<double>>, Forms<SmtExpr>> forms_;
};

namespace detail {

inline Eigen::MatrixXd fd_drift_jacobian(const ControlAffineSystem& sys, double h) {
  const int n = sys.state_dim();
  Eigen::MatrixXd A(n, n);
  for (int k = 0; k < n; ++k) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
    e(k) = h;
    A.col(k) = (sys.f(e) - sys.f(-e)) / (2 * h);
  }
  return A;
}

inline Eigen::MatrixXd fd_cost_hessian(const ControlAffineSystem& sys, double h) {
  const int n = sys.state_dim();
  Eigen::MatrixXd H(n, n);
  const Eigen::VectorXd z = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      Eigen::VectorXd ei = Eigen::VectorXd::Unit(n, i) * h, ej = Eigen::VectorXd::Unit(n, j) * h;
      H(i, j) = (sys.Q(z + ei + ej) - sys.Q(z + ei - ej) - sys.Q(z - ei + ej) + sys.Q(z - ei - ej)) / (4 * h * h);
    }
  }
  return 0.5 * (H + H.transpose());
}

inline bool close_rel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double tol) {
  for (Eigen::Index i = 0; i < a.size(); ++i)
    if (std::abs(a.data()[i] - b.data()[i]) > tol * std::max(1.0, std::abs(b.data()[i]))) return false;
  return true;
}

}  // namespace detail

/// Linearization at the origin. Uses the analytic data when present (after
/// checking it against central finite differences to 1e-6), otherwise
/// finite differences: step 1e-6 for Df(0), 1e-4 for the cost Hessian.
inline Linearization linearize(const ControlAffineSystem& sys) {
  const int n = sys.state_dim();
  Linearization fd{detail::fd_drift_jacobian(sys, 1e-6), sys.g(Eigen::VectorXd::Zero(n)),
                   detail::fd_cost_hessian(sys, 1e-4)};
  const auto& analytic = sys.analytic_linearization();
  if (!analytic) return fd;
  if (!detail::close_rel(fd.A, analytic->A, 1e-6))
    throw std::runtime_error("linearize: analytic A disagrees with finite differences for " + sys.name());
  if (!detail::close_rel(fd.B, analytic->B, 1e-12))
    throw std::runtime_error("linearize: analytic B disagrees with g(0) for " + sys.name());
  if (!detail::close_rel(fd.Qhat, analytic->Qhat, 1e-6))
    throw std::runtime_error("linearize: analytic Qhat disagrees with finite differences for " + sys.name());
  return *analytic;
}

/// Partial derivatives dg/dx_k at the origin (one n x m matrix per k), by
/// central differences with step 1e-5.
inline std::vector<Eigen::MatrixXd> input_matrix_jacobian_origin(const ControlAffineSystem& sys) {
  const int n = sys.state_dim();
  constexpr double h = 1e-5;
  std::vector<Eigen::MatrixXd> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    Eigen::VectorXd e = Eigen::VectorXd::Unit(n, k) * h;
    out.push_back((sys.g(e) - sys.g(-e)) / (2 * h));
  }
  return out;
}

/// Kalman rank test on [B, AB, ..., A^{n-1}B].
inline bool is_controllable(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, double tol = 1e-9) {
  const Eigen::Index n = A.rows();
  Eigen::MatrixXd C(n, n * B.cols());
  Eigen::MatrixXd blk = B;
  for (Eigen::Index k = 0; k < n; ++k) {
    C.middleCols(k * B.cols(), B.cols()) = blk;
    blk = A * blk;
  }
  if (C.norm() == 0.0) return false;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(C);
  return svd.singularValues()(n - 1) > tol * svd.singularValues()(0);
}

/// Checks f(0) = 0, Q(0) = 0 and Q > 0 on `samples` seeded points of the
/// domain. Throws std::invalid_argument naming the failed invariant.
inline void validate(const ControlAffineSystem& sys, int samples = 256, std::uint64_t seed = 7) {
  const int n = sys.state_dim();
  const Eigen::VectorXd z = Eigen::VectorXd::Zero(n);
  if (sys.f(z).cwiseAbs().maxCoeff() != 0.0) throw std::invalid_argument(sys.name() + ": f(0) != 0");
  if (sys.Q(z) != 0.0) throw std::invalid_argument(sys.name() + ": Q(0) != 0");
  CounterRng rng(seed);
  const Box& dom = sys.domain();
  for (int s = 0; s < samples; ++s) {
    Eigen::VectorXd x(n);
    for (int i = 0; i < n; ++i) x(i) = rng.uniform(static_cast<std::uint64_t>(s * n + i), dom.lo(i), dom.hi(i));
    if (x.isZero(0.0)) continue;
    if (!(sys.Q(x) > 0.0)) throw std::invalid_argument(sys.name() + ": Q is not positive away from the origin");
  }
}

}  // namespace npi
