#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>

#include "npi/systems.hpp"

namespace npi {

enum class BenchmarkKind { synthetic, bilinear1d, pendulum, lorenz };

/// Closed-form value function with gradient; models the ValueModel
/// interface so oracles flow through the same residual code as networks.
struct ReferenceValue {
  std::function<double(const Eigen::VectorXd&)> value_fn;
  std::function<Eigen::RowVectorXd(const Eigen::VectorXd&)> gradient_fn;

  double value(const Eigen::VectorXd& x) const { return value_fn(x); }
  Eigen::RowVectorXd gradient(const Eigen::VectorXd& x) const { return gradient_fn(x); }
};

struct Benchmark {
  BenchmarkKind kind;
  std::string name;
  ControlAffineSystem system;
  std::optional<ReferenceValue> reference_value;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> reference_policy;  // empty when unknown
  /// Set when (A, B) is not stabilizable; disables the gain-matching loss
  /// and the LQR warm start.
  bool uncontrollable_linearization = false;
};

/// x_i' = x_i^3 + u_i, Q = sum(x_i^2 + 2 x_i^4), R = I, domain [-1, 1]^n.
/// V*(x) = sum(x_i^4/2 + (x_i^2 + 1)^2/2 - 1/2), u* = -2x^3 - x.
inline Benchmark make_synthetic(int n) {
  if (n < 1) throw std::invalid_argument("synthetic: n must be >= 1");
  auto f = [n](const auto& x, auto& out) {
    for (int i = 0; i < n; ++i) out[i] = x[i] * x[i] * x[i];
  };
  auto g = [n](const auto&, auto& out) {
    for (int i = 0; i < n; ++i) out[i * n + i] = 1.0;
  };
  auto q = [n](const auto& x) {
    using S = std::decay_t<decltype(x[0])>;
    S acc(0.0);
    for (int i = 0; i < n; ++i) acc = acc + x[i] * x[i] + 2.0 * (x[i] * x[i] * x[i] * x[i]);
    return acc;
  };
  ControlAffineSystem sys("synthetic:" + std::to_string(n), n, n, f, g, q, Eigen::MatrixXd::Identity(n, n),
                          Box::symmetric(n, 1.0));
  sys.with_linearization({Eigen::MatrixXd::Zero(n, n), Eigen::MatrixXd::Identity(n, n),
                          2.0 * Eigen::MatrixXd::Identity(n, n)});
  validate(sys);
  ReferenceValue ref{
      [](const Eigen::VectorXd& x) {
        double v = 0;
        for (double xi : x) v += 0.5 * std::pow(xi, 4) + 0.5 * std::pow(xi * xi + 1, 2) - 0.5;
        return v;
      },
      [](const Eigen::VectorXd& x) -> Eigen::RowVectorXd {
        return (4.0 * x.array().cube() + 2.0 * x.array()).matrix().transpose();
      }};
  auto policy = [](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    return (-2.0 * x.array().cube() - x.array()).matrix();
  };
  return {BenchmarkKind::synthetic, sys.name(), std::move(sys), ref, policy, false};
}

/// x' = x u, Q = x^2, R = 1 on [-1, 1]; V* = 2|x|, u* = -|x|.
inline Benchmark make_bilinear() {
  auto f = [](const auto&, auto&) {};
  auto g = [](const auto& x, auto& out) { out[0] = x[0]; };
  auto q = [](const auto& x) { return x[0] * x[0]; };
  ControlAffineSystem sys("bilinear", 1, 1, f, g, q, Eigen::MatrixXd::Identity(1, 1), Box::symmetric(1, 1.0));
  sys.with_linearization({Eigen::MatrixXd::Zero(1, 1), Eigen::MatrixXd::Zero(1, 1), 2.0 * Eigen::MatrixXd::Identity(1, 1)});
  validate(sys);
  ReferenceValue ref{[](const Eigen::VectorXd& x) { return 2.0 * std::abs(x(0)); },
                     [](const Eigen::VectorXd& x) -> Eigen::RowVectorXd {
                       return Eigen::RowVectorXd::Constant(1, x(0) > 0 ? 2.0 : (x(0) < 0 ? -2.0 : 0.0));
                     }};
  auto policy = [](const Eigen::VectorXd& x) -> Eigen::VectorXd { return Eigen::VectorXd::Constant(1, -std::abs(x(0))); };
  return {BenchmarkKind::bilinear1d, "bilinear", std::move(sys), ref, policy, true};
}

/// Inverted pendulum theta'' = (m g l sin(theta) - mu theta' + u) / (m l^2)
/// with l = 0.5, m = 0.1, g = 9.8, mu = 0.1; Q = x^T x, R = 2; domain [-2, 2]^2.
inline Benchmark make_pendulum() {
  constexpr double len = 0.5, mass = 0.1, grav = 9.8, fric = 0.1;
  constexpr double inertia = mass * len * len;
  auto f = [](const auto& x, auto& out) {
    using std::sin;
    out[0] = x[1];
    out[1] = (mass * grav * len) / inertia * sin(x[0]) - (fric / inertia) * x[1];
  };
  auto g = [](const auto&, auto& out) { out[1] = 1.0 / inertia; };
  auto q = [](const auto& x) { return x[0] * x[0] + x[1] * x[1]; };
  ControlAffineSystem sys("pendulum", 2, 1, f, g, q, Eigen::MatrixXd::Constant(1, 1, 2.0), Box::symmetric(2, 2.0));
  Eigen::MatrixXd A(2, 2), B(2, 1);
  A << 0.0, 1.0, grav / len, -fric / inertia;
  B << 0.0, 1.0 / inertia;
  sys.with_linearization({A, B, 2.0 * Eigen::MatrixXd::Identity(2, 2)});
  validate(sys);
  return {BenchmarkKind::pendulum, "pendulum", std::move(sys), std::nullopt, {}, false};
}

/// Controlled Lorenz-type system
///   x1' = -10 x1 + 10 x2 + u,  x2' = 28 x1 - x2 - x1 x2,  x3' = -(8/3) x2 + x1 x2
/// with Q = x^T x, R = 1 on [-1, 1]^3.
inline Benchmark make_lorenz() {
  auto f = [](const auto& x, auto& out) {
    out[0] = -10.0 * x[0] + 10.0 * x[1];
    out[1] = 28.0 * x[0] - x[1] - x[0] * x[1];
    out[2] = -(8.0 / 3.0) * x[1] + x[0] * x[1];
  };
  auto g = [](const auto&, auto& out) { out[0] = 1.0; };
  auto q = [](const auto& x) { return x[0] * x[0] + x[1] * x[1] + x[2] * x[2]; };
  ControlAffineSystem sys("lorenz", 3, 1, f, g, q, Eigen::MatrixXd::Identity(1, 1), Box::symmetric(3, 1.0));
  Eigen::MatrixXd A(3, 3), B(3, 1);
  A << -10, 10, 0, 28, -1, 0, 0, -8.0 / 3.0, 0;
  B << 1, 0, 0;
  sys.with_linearization({A, B, 2.0 * Eigen::MatrixXd::Identity(3, 3)});
  validate(sys);
  return {BenchmarkKind::lorenz, "lorenz", std::move(sys), std::nullopt, {}, false};
}

/// Resolves "synthetic:N", "bilinear", "pendulum", "lorenz".
inline Benchmark make_benchmark(const std::string& name) {
  if (name == "bilinear") return make_bilinear();
  if (name == "pendulum") return make_pendulum();
  if (name == "lorenz") return make_lorenz();
  const std::string prefix = "synthetic:";
  if (name.rfind(prefix, 0) == 0) {
    std::size_t used = 0;
    int n = 0;
    try {
      n = std::stoi(name.substr(prefix.size()), &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == name.size() - prefix.size() && n >= 1) return make_synthetic(n);
  }
  throw std::invalid_argument("unknown benchmark '" + name +
                              "' (expected synthetic:N, bilinear, pendulum, or lorenz)");
}

}  // namespace npi
