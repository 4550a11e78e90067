#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <stdexcept>

namespace npi {

/// Closed interval [lo, hi] with outward-rounded arithmetic.
///
/// Every operation rounds its result one ulp outward (two for library
/// transcendental calls), so the enclosure property holds under
/// round-to-nearest floating point: for x in X and y in Y, op(x, y) lies in
/// op(X, Y).
class Interval {
 public:
  constexpr Interval() noexcept = default;
  constexpr Interval(double v) noexcept : lo_(v), hi_(v) {}  // NOLINT: implicit by design of the scalar API
  Interval(double lo, double hi) : lo_(lo), hi_(hi) {
    if (!(lo <= hi)) throw std::invalid_argument("Interval: lo > hi or NaN bound");
  }

  constexpr double lo() const noexcept { return lo_; }
  constexpr double hi() const noexcept { return hi_; }
  constexpr double width() const noexcept { return hi_ - lo_; }
  constexpr double mid() const noexcept { return 0.5 * (lo_ + hi_); }
  constexpr double mag() const noexcept { return std::max(-lo_, hi_); }
  constexpr bool contains(double v) const noexcept { return lo_ <= v && v <= hi_; }
  constexpr bool contains(const Interval& o) const noexcept { return lo_ <= o.lo_ && o.hi_ <= hi_; }
  constexpr bool is_point() const noexcept { return lo_ == hi_; }

  static Interval entire() {
    return {-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  }

  /// Bounds that are already known to be ordered; skips the check.
  static constexpr Interval unchecked(double lo, double hi) noexcept {
    Interval r;
    r.lo_ = lo;
    r.hi_ = hi;
    return r;
  }

  Interval& operator+=(const Interval& o);
  Interval& operator-=(const Interval& o);
  Interval& operator*=(const Interval& o);
  Interval& operator/=(const Interval& o);

 private:
  double lo_ = 0.0;
  double hi_ = 0.0;
};

namespace detail {

inline double down(double v, int ulps = 1) {
  if (std::isinf(v) || std::isnan(v)) return v;
  for (int i = 0; i < ulps; ++i) v = std::nextafter(v, -std::numeric_limits<double>::infinity());
  return v;
}

inline double up(double v, int ulps = 1) {
  if (std::isinf(v) || std::isnan(v)) return v;
  for (int i = 0; i < ulps; ++i) v = std::nextafter(v, std::numeric_limits<double>::infinity());
  return v;
}

inline Interval outward(double lo, double hi, int ulps = 1) {
  return Interval::unchecked(down(lo, ulps), up(hi, ulps));
}

inline Interval clamp(Interval x, double lo, double hi) {
  return Interval::unchecked(std::max(x.lo(), lo), std::min(x.hi(), hi));
}

}  // namespace detail

inline Interval operator+(const Interval& a, const Interval& b) {
  return detail::outward(a.lo() + b.lo(), a.hi() + b.hi());
}

inline Interval operator-(const Interval& a) { return Interval::unchecked(-a.hi(), -a.lo()); }

inline Interval operator-(const Interval& a, const Interval& b) {
  return detail::outward(a.lo() - b.hi(), a.hi() - b.lo());
}

inline Interval operator*(const Interval& a, const Interval& b) {
  if (b.is_point()) {
    double s = b.lo();
    if (s == 0.0) return Interval(0.0);
    return s > 0 ? detail::outward(a.lo() * s, a.hi() * s) : detail::outward(a.hi() * s, a.lo() * s);
  }
  if (a.is_point()) return b * a;
  double p1 = a.lo() * b.lo(), p2 = a.lo() * b.hi(), p3 = a.hi() * b.lo(), p4 = a.hi() * b.hi();
  return detail::outward(std::min({p1, p2, p3, p4}), std::max({p1, p2, p3, p4}));
}

inline Interval operator/(const Interval& a, const Interval& b) {
  if (b.contains(0.0)) throw std::domain_error("Interval division by an interval containing zero");
  double q1 = a.lo() / b.lo(), q2 = a.lo() / b.hi(), q3 = a.hi() / b.lo(), q4 = a.hi() / b.hi();
  return detail::outward(std::min({q1, q2, q3, q4}), std::max({q1, q2, q3, q4}));
}

inline Interval& Interval::operator+=(const Interval& o) { return *this = *this + o; }
inline Interval& Interval::operator-=(const Interval& o) { return *this = *this - o; }
inline Interval& Interval::operator*=(const Interval& o) { return *this = *this * o; }
inline Interval& Interval::operator/=(const Interval& o) { return *this = *this / o; }

inline bool operator==(const Interval& a, const Interval& b) { return a.lo() == b.lo() && a.hi() == b.hi(); }

inline std::ostream& operator<<(std::ostream& os, const Interval& x) {
  return os << '[' << x.lo() << ", " << x.hi() << ']';
}

inline Interval hull(const Interval& a, const Interval& b) {
  return Interval::unchecked(std::min(a.lo(), b.lo()), std::max(a.hi(), b.hi()));
}

/// Intersection; the caller guarantees the inputs overlap (both enclose the
/// same true range).
inline Interval intersect(const Interval& a, const Interval& b) {
  double lo = std::max(a.lo(), b.lo()), hi = std::min(a.hi(), b.hi());
  if (lo > hi) return a.width() <= b.width() ? a : b;
  return Interval::unchecked(lo, hi);
}

inline Interval sqr(const Interval& a) {
  if (a.lo() >= 0) return detail::outward(a.lo() * a.lo(), a.hi() * a.hi());
  if (a.hi() <= 0) return detail::outward(a.hi() * a.hi(), a.lo() * a.lo());
  double m = std::max(-a.lo(), a.hi());
  return Interval::unchecked(0.0, detail::up(m * m));
}

inline Interval pow(const Interval& a, int k) {
  if (k < 0) return Interval(1.0) / pow(a, -k);
  if (k == 0) return Interval(1.0);
  if (k == 1) return a;
  if (k == 2) return sqr(a);
  double pl = std::pow(a.lo(), k), ph = std::pow(a.hi(), k);
  if (k % 2 == 1) return detail::outward(pl, ph, 2);
  if (a.lo() >= 0) return detail::outward(pl, ph, 2);
  if (a.hi() <= 0) return detail::outward(ph, pl, 2);
  return Interval::unchecked(0.0, detail::up(std::max(pl, ph), 2));
}

inline Interval abs(const Interval& a) {
  if (a.lo() >= 0) return a;
  if (a.hi() <= 0) return -a;
  return Interval::unchecked(0.0, std::max(-a.lo(), a.hi()));
}

inline Interval min(const Interval& a, const Interval& b) {
  return Interval::unchecked(std::min(a.lo(), b.lo()), std::min(a.hi(), b.hi()));
}

inline Interval max(const Interval& a, const Interval& b) {
  return Interval::unchecked(std::max(a.lo(), b.lo()), std::max(a.hi(), b.hi()));
}

inline Interval exp(const Interval& a) {
  return detail::clamp(detail::outward(std::exp(a.lo()), std::exp(a.hi()), 2), 0.0,
                       std::numeric_limits<double>::infinity());
}

inline Interval tanh(const Interval& a) {
  return detail::clamp(detail::outward(std::tanh(a.lo()), std::tanh(a.hi()), 2), -1.0, 1.0);
}

namespace detail {
inline double sech2(double z) {
  double c = std::cosh(z);
  return 1.0 / (c * c);
}
}  // namespace detail

/// sech^2 = 1 - tanh^2 = tanh'. Even, increasing on (-inf, 0], decreasing on [0, inf).
inline Interval sech2(const Interval& a) {
  double slo = detail::sech2(a.lo()), shi = detail::sech2(a.hi());
  Interval r;
  if (a.contains(0.0))
    r = detail::outward(std::min(slo, shi), 1.0, 3);
  else if (a.lo() > 0)
    r = detail::outward(shi, slo, 3);
  else
    r = detail::outward(slo, shi, 3);
  return detail::clamp(r, 0.0, 1.0);
}

namespace detail {
// Range of sin over [lo, hi] with exact critical-point detection.
inline Interval sin_range(double lo, double hi, double phase) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  if (hi - lo >= two_pi) return Interval::unchecked(-1.0, 1.0);
  double slo = std::sin(lo + phase), shi = std::sin(hi + phase);
  double rlo = std::min(slo, shi), rhi = std::max(slo, shi);
  // maxima at pi/2 + 2k pi, minima at -pi/2 + 2k pi (shifted by phase)
  auto hits = [&](double c) {
    double k = std::ceil((lo + phase - c) / two_pi);
    return c + k * two_pi <= hi + phase + 1e-15;
  };
  if (hits(std::numbers::pi / 2)) rhi = 1.0;
  if (hits(-std::numbers::pi / 2)) rlo = -1.0;
  // the phase shift rounds the argument; absorb that absolutely
  double slack = phase == 0.0 ? 0.0 : 4e-16 * (1.0 + std::abs(lo) + std::abs(hi));
  return clamp(outward(rlo - slack, rhi + slack, 2), -1.0, 1.0);
}
}  // namespace detail

inline Interval sin(const Interval& a) { return detail::sin_range(a.lo(), a.hi(), 0.0); }
inline Interval cos(const Interval& a) { return detail::sin_range(a.lo(), a.hi(), std::numbers::pi / 2); }

inline Interval relu(const Interval& a) { return Interval::unchecked(std::max(0.0, a.lo()), std::max(0.0, a.hi())); }

/// Derivative of relu with the convention relu'(0) = 0.
inline Interval relu_step(const Interval& a) {
  return Interval::unchecked(a.lo() > 0 ? 1.0 : 0.0, a.hi() > 0 ? 1.0 : 0.0);
}

/// Enclosure of sign(x), used as the derivative of |x|.
inline Interval sign(const Interval& a) {
  if (a.lo() > 0) return Interval(1.0);
  if (a.hi() < 0) return Interval(-1.0);
  return Interval::unchecked(a.lo() < 0 ? -1.0 : 0.0, a.hi() > 0 ? 1.0 : 0.0);
}

// Scalar counterparts so generic code can call the same names on double.
inline double sqr(double a) { return a * a; }
inline double sech2(double a) { return detail::sech2(a); }
inline double relu(double a) { return a > 0 ? a : 0.0; }
inline double relu_step(double a) { return a > 0 ? 1.0 : 0.0; }
inline double sign(double a) { return a > 0 ? 1.0 : (a < 0 ? -1.0 : 0.0); }

}  // namespace npi
