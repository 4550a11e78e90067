#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <concepts>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "npi/autodiff.hpp"
#include "npi/interval.hpp"
#include "npi/rng.hpp"
#include "npi/systems.hpp"

namespace npi {

enum class Activation { tanh, relu };

inline std::string to_string(Activation a) { return a == Activation::tanh ? "tanh" : "relu"; }

inline Activation activation_from_string(const std::string& s) {
  if (s == "tanh") return Activation::tanh;
  if (s == "relu") return Activation::relu;
  throw std::invalid_argument("unknown activation '" + s + "'");
}

/// sigma, sigma', sigma'' on any supported scalar type. relu'(0) := 0.
template <class S>
S act(Activation a, const S& z) {
  using std::tanh;
  return a == Activation::tanh ? S(tanh(z)) : S(relu(z));
}

template <class S>
S act_d1(Activation a, const S& z) {
  return a == Activation::tanh ? S(sech2(z)) : S(relu_step(z));
}

inline double act_d2(Activation a, double z) {
  if (a == Activation::relu) return 0.0;
  double t = std::tanh(z);
  return -2.0 * t * (1.0 - t * t);
}

inline double act_d3(Activation a, double z) {
  if (a == Activation::relu) return 0.0;
  double t = std::tanh(z), s = 1.0 - t * t;
  return -2.0 * s * s + 4.0 * t * t * s;
}

/// Anything with a value and a gradient at a point.
template <class V>
concept ValueModel = requires(const V& v, const Eigen::VectorXd& x) {
  { v.value(x) } -> std::convertible_to<double>;
  { v.gradient(x) } -> std::convertible_to<Eigen::RowVectorXd>;
};

/// Value models that can also be evaluated on non-double scalars
/// (intervals, forward gradients, SMT terms).
template <class V, class S>
concept GenericValueModel = ValueModel<V> && requires(const V& v, std::span<const S> x) {
  { v.template value_as<S>(x) } -> std::convertible_to<S>;
  { v.template gradient_as<S>(x) } -> std::convertible_to<std::vector<S>>;
};

/// One-hidden-layer value network V(x) = beta^T sigma(W x + b) - bias_shift.
struct ValueNet {
  Eigen::MatrixXd W;     // width x state_dim
  Eigen::VectorXd b;     // width
  Eigen::VectorXd beta;  // width
  Activation activation = Activation::tanh;
  double bias_shift = 0.0;

  int width() const { return static_cast<int>(W.rows()); }
  int state_dim() const { return static_cast<int>(W.cols()); }

  /// Hidden-layer features sigma(W x + b).
  Eigen::VectorXd features(const Eigen::VectorXd& x) const {
    Eigen::VectorXd z = W * x + b;
    return z.unaryExpr([a = activation](double v) { return act(a, v); });
  }

  double value(const Eigen::VectorXd& x) const {
    if (x.isZero(0.0)) return raw_value_origin() - bias_shift;
    return beta.dot(features(x)) - bias_shift;
  }

  /// DV(x) = beta^T diag(sigma'(W x + b)) W.
  Eigen::RowVectorXd gradient(const Eigen::VectorXd& x) const {
    Eigen::VectorXd z = W * x + b;
    Eigen::VectorXd s1 = z.unaryExpr([a = activation](double v) { return act_d1(a, v); });
    return (beta.cwiseProduct(s1)).transpose() * W;
  }

  /// beta^T sigma(b): the value at the origin before the shift.
  double raw_value_origin() const {
    return beta.dot(b.unaryExpr([a = activation](double v) { return act(a, v); }));
  }

  /// Sets bias_shift so that value(0) = 0.
  void normalize_origin() { bias_shift = raw_value_origin(); }

  /// sum_j beta_j sigma''(b_j) w_j w_j^T. Only defined for tanh.
  Eigen::MatrixXd hessian_origin() const {
    if (activation != Activation::tanh) throw std::invalid_argument("hessian_origin: requires tanh activation");
    Eigen::VectorXd c = b.unaryExpr([](double v) { return act_d2(Activation::tanh, v); }).cwiseProduct(beta);
    return W.transpose() * c.asDiagonal() * W;
  }

  /// Values at the rows of X.
  Eigen::VectorXd values(const Eigen::MatrixXd& X) const {
    Eigen::MatrixXd Z = (X * W.transpose()).rowwise() + b.transpose();
    Eigen::MatrixXd S = Z.unaryExpr([a = activation](double v) { return act(a, v); });
    return (S * beta).array() - bias_shift;
  }

  /// Gradients at the rows of X (one row per point).
  Eigen::MatrixXd gradients(const Eigen::MatrixXd& X) const {
    Eigen::MatrixXd Z = (X * W.transpose()).rowwise() + b.transpose();
    Eigen::MatrixXd S1 = Z.unaryExpr([a = activation](double v) { return act_d1(a, v); });
    return (S1 * beta.asDiagonal()) * W;
  }

  template <class S>
  S value_as(std::span<const S> x) const {
    S acc(-bias_shift);
    for (int j = 0; j < width(); ++j) acc = acc + beta(j) * act(activation, pre_activation(x, j));
    return acc;
  }

  template <class S>
  std::vector<S> gradient_as(std::span<const S> x) const {
    const int n = state_dim();
    std::vector<S> g(static_cast<std::size_t>(n), S(0.0));
    for (int j = 0; j < width(); ++j) {
      if (beta(j) == 0.0) continue;
      S c = beta(j) * act_d1(activation, pre_activation(x, j));
      for (int i = 0; i < n; ++i)
        if (W(j, i) != 0.0) g[i] = g[i] + c * W(j, i);
    }
    return g;
  }

  template <class S>
  S pre_activation(std::span<const S> x, int j) const {
    S z(b(j));
    for (int i = 0; i < state_dim(); ++i)
      if (W(j, i) != 0.0) z = z + W(j, i) * x[i];
    return z;
  }
};

/// Hidden weights and biases i.i.d. uniform on [-1, 1] from a counter-based
/// stream keyed by `seed`; beta = 0, bias_shift = 0.
inline ValueNet init_random(int width, int state_dim, std::uint64_t seed, Activation activation = Activation::tanh) {
  if (width < 1 || state_dim < 1) throw std::invalid_argument("init_random: width and state_dim must be >= 1");
  ValueNet net;
  net.W.resize(width, state_dim);
  net.b.resize(width);
  CounterRng rw = CounterRng(seed).substream(1), rb = CounterRng(seed).substream(2);
  for (int j = 0; j < width; ++j) {
    for (int i = 0; i < state_dim; ++i)
      net.W(j, i) = rw.uniform(static_cast<std::uint64_t>(j) * static_cast<std::uint64_t>(state_dim) + i, -1.0, 1.0);
    net.b(j) = rb.uniform(static_cast<std::uint64_t>(j), -1.0, 1.0);
  }
  net.beta = Eigen::VectorXd::Zero(width);
  net.activation = activation;
  return net;
}

/// Closed-form value function adapter. `fv(span<const S>) -> S` and
/// `fg(span<const S>) -> std::vector<S>` must be generic over scalars.
template <class Fv, class Fg>
class AnalyticValue {
 public:
  AnalyticValue(int state_dim, Fv fv, Fg fg) : n_(state_dim), fv_(std::move(fv)), fg_(std::move(fg)) {}

  int state_dim() const { return n_; }

  double value(const Eigen::VectorXd& x) const { return fv_(std::span<const double>(x.data(), n_)); }

  Eigen::RowVectorXd gradient(const Eigen::VectorXd& x) const {
    std::vector<double> g = fg_(std::span<const double>(x.data(), n_));
    return Eigen::Map<const Eigen::RowVectorXd>(g.data(), n_);
  }

  template <class S>
  S value_as(std::span<const S> x) const {
    return fv_(x);
  }

  template <class S>
  std::vector<S> gradient_as(std::span<const S> x) const {
    return fg_(x);
  }

 private:
  int n_;
  Fv fv_;
  Fg fg_;
};

/// kappa(x) = -1/2 R^{-1} g(x)^T DV(x)^T for x != 0, and exactly 0 at x = 0.
template <ValueModel V>
Eigen::VectorXd policy(const V& model, const ControlAffineSystem& sys, const Eigen::VectorXd& x) {
  if (x.isZero(0.0)) return Eigen::VectorXd::Zero(sys.input_dim());
  return -0.5 * sys.R_inv() * sys.g(x).transpose() * model.gradient(x).transpose();
}

/// D kappa(0) = -1/2 R^{-1} (B^T HessV(0) + [dg/dx_k(0)^T DV(0)^T]_k).
/// `dg0` are the partials of g at 0 (input_matrix_jacobian_origin).
inline Eigen::MatrixXd policy_jacobian_origin(const ValueNet& net, const ControlAffineSystem& sys,
                                              const Eigen::MatrixXd& B, const std::vector<Eigen::MatrixXd>& dg0) {
  if (net.activation != Activation::tanh)
    throw std::invalid_argument("policy_jacobian_origin: requires tanh activation");
  const int n = sys.state_dim();
  Eigen::MatrixXd inner = B.transpose() * net.hessian_origin();
  Eigen::RowVectorXd dv0 = net.gradient(Eigen::VectorXd::Zero(n));
  if (!dv0.isZero(0.0))
    for (int k = 0; k < n; ++k) inner.col(k) += dg0[static_cast<std::size_t>(k)].transpose() * dv0.transpose();
  return -0.5 * sys.R_inv() * inner;
}

inline Eigen::MatrixXd policy_jacobian_origin(const ValueNet& net, const ControlAffineSystem& sys) {
  return policy_jacobian_origin(net, sys, sys.g(Eigen::VectorXd::Zero(sys.state_dim())),
                                input_matrix_jacobian_origin(sys));
}

}  // namespace npi
