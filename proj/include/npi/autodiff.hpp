#pragma once

#include <array>
#include <cassert>
#include <cmath>

#include "npi/interval.hpp"

namespace npi {

inline constexpr int kMaxGradDim = 8;

/// First-order forward-mode value: v + sum_k d[k] dx_k over up to
/// kMaxGradDim seed directions. With T = Interval this yields enclosures of
/// both a function and its gradient over a box, which is what the
/// mean-value form in the verifier consumes.
template <class T>
struct Grad {
  T v{};
  std::array<T, kMaxGradDim> d{};
  int n = 0;

  Grad() = default;
  Grad(double c) : v(c) {}  // NOLINT: constants promote implicitly
  Grad(const T& c, int dims) : v(c), n(dims) {
    for (int k = 0; k < n; ++k) d[k] = T(0.0);
  }

  /// Independent variable number `k` of `dims`.
  static Grad variable(const T& value, int k, int dims) {
    assert(dims <= kMaxGradDim);
    Grad g(value, dims);
    g.d[k] = T(1.0);
    return g;
  }
};

namespace detail {
template <class T>
int dims(const Grad<T>& a, const Grad<T>& b) {
  return a.n > b.n ? a.n : b.n;
}

// chain rule for a unary function with derivative `dv`
template <class T>
Grad<T> chain(const Grad<T>& a, const T& value, const T& dv) {
  Grad<T> r(value, a.n);
  for (int k = 0; k < a.n; ++k) r.d[k] = dv * a.d[k];
  return r;
}
}  // namespace detail

template <class T>
Grad<T> operator+(const Grad<T>& a, const Grad<T>& b) {
  Grad<T> r(a.v + b.v, detail::dims(a, b));
  for (int k = 0; k < r.n; ++k) r.d[k] = (k < a.n ? a.d[k] : T(0.0)) + (k < b.n ? b.d[k] : T(0.0));
  return r;
}

template <class T>
Grad<T> operator-(const Grad<T>& a) {
  Grad<T> r(-a.v, a.n);
  for (int k = 0; k < a.n; ++k) r.d[k] = -a.d[k];
  return r;
}

template <class T>
Grad<T> operator-(const Grad<T>& a, const Grad<T>& b) {
  return a + (-b);
}

template <class T>
Grad<T> operator*(const Grad<T>& a, const Grad<T>& b) {
  Grad<T> r(a.v * b.v, detail::dims(a, b));
  for (int k = 0; k < r.n; ++k) {
    T da = k < a.n ? a.d[k] : T(0.0);
    T db = k < b.n ? b.d[k] : T(0.0);
    r.d[k] = da * b.v + a.v * db;
  }
  return r;
}

template <class T>
Grad<T> operator/(const Grad<T>& a, const Grad<T>& b) {
  T q = a.v / b.v;
  Grad<T> r(q, detail::dims(a, b));
  for (int k = 0; k < r.n; ++k) {
    T da = k < a.n ? a.d[k] : T(0.0);
    T db = k < b.n ? b.d[k] : T(0.0);
    r.d[k] = (da - q * db) / b.v;
  }
  return r;
}

template <class T>
Grad<T>& operator+=(Grad<T>& a, const Grad<T>& b) {
  return a = a + b;
}
template <class T>
Grad<T>& operator-=(Grad<T>& a, const Grad<T>& b) {
  return a = a - b;
}
template <class T>
Grad<T>& operator*=(Grad<T>& a, const Grad<T>& b) {
  return a = a * b;
}

// Mixed-constant overloads: template deduction does not see the implicit
// double -> Grad conversion.
template <class T>
Grad<T> operator+(const Grad<T>& a, double c) {
  return a + Grad<T>(c);
}
template <class T>
Grad<T> operator+(double c, const Grad<T>& a) {
  return Grad<T>(c) + a;
}
template <class T>
Grad<T> operator-(const Grad<T>& a, double c) {
  return a - Grad<T>(c);
}
template <class T>
Grad<T> operator-(double c, const Grad<T>& a) {
  return Grad<T>(c) - a;
}
template <class T>
Grad<T> operator*(const Grad<T>& a, double c) {
  Grad<T> r(a.v * T(c), a.n);
  for (int k = 0; k < a.n; ++k) r.d[k] = a.d[k] * T(c);
  return r;
}
template <class T>
Grad<T> operator*(double c, const Grad<T>& a) {
  return a * c;
}
template <class T>
Grad<T> operator/(const Grad<T>& a, double c) {
  return a / Grad<T>(c);
}

template <class T>
Grad<T> sqr(const Grad<T>& a) {
  return detail::chain(a, sqr(a.v), T(2.0) * a.v);
}

template <class T>
Grad<T> pow(const Grad<T>& a, int k) {
  using std::pow;
  if (k == 0) return Grad<T>(T(1.0), a.n);
  if (k == 1) return a;
  return detail::chain(a, pow(a.v, k), T(static_cast<double>(k)) * pow(a.v, k - 1));
}

template <class T>
Grad<T> sin(const Grad<T>& a) {
  using std::cos;
  using std::sin;
  return detail::chain(a, sin(a.v), cos(a.v));
}

template <class T>
Grad<T> cos(const Grad<T>& a) {
  using std::cos;
  using std::sin;
  return detail::chain(a, cos(a.v), -sin(a.v));
}

template <class T>
Grad<T> exp(const Grad<T>& a) {
  using std::exp;
  T e = exp(a.v);
  return detail::chain(a, e, e);
}

template <class T>
Grad<T> tanh(const Grad<T>& a) {
  using std::tanh;
  return detail::chain(a, tanh(a.v), sech2(a.v));
}

template <class T>
Grad<T> sech2(const Grad<T>& a) {
  using std::tanh;
  T s = sech2(a.v);
  return detail::chain(a, s, T(-2.0) * tanh(a.v) * s);
}

template <class T>
Grad<T> abs(const Grad<T>& a) {
  using std::abs;
  return detail::chain(a, abs(a.v), sign(a.v));
}

template <class T>
Grad<T> relu(const Grad<T>& a) {
  return detail::chain(a, relu(a.v), relu_step(a.v));
}

/// The derivative of relu_step is zero wherever it exists; callers needing
/// a sound gradient enclosure across the kink must not use this form.
template <class T>
Grad<T> relu_step(const Grad<T>& a) {
  return Grad<T>(relu_step(a.v), a.n);
}

}  // namespace npi
