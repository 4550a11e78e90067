#pragma once

#include <charconv>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace npi {

/// Symbolic scalar that renders SMT-LIB 2 (QF_NRA plus the transcendental
/// extensions understood by delta-complete solvers) s-expressions. Running
/// the generic dynamics through this type yields their symbolic form.
class SmtExpr {
 public:
  SmtExpr() : text_("0.0") {}
  SmtExpr(double c) : text_(literal(c)) {}  // NOLINT: constants promote implicitly

  static SmtExpr symbol(std::string name) {
    SmtExpr e;
    e.text_ = std::move(name);
    return e;
  }
  static SmtExpr raw(std::string text) { return symbol(std::move(text)); }

  const std::string& str() const { return text_; }
  bool is_zero() const { return text_ == "0.0"; }
  bool is_one() const { return text_ == "1.0"; }

  /// Exact decimal rendering of a double: shortest round-trip digits in
  /// fixed notation, negatives as (- c).
  static std::string literal(double c) {
    if (!std::isfinite(c)) throw std::invalid_argument("SmtExpr: non-finite constant");
    if (c == 0.0) return "0.0";
    char buf[512];
    auto res = std::to_chars(buf, buf + sizeof buf, std::abs(c), std::chars_format::fixed);
    std::string digits(buf, res.ptr);
    if (digits.find('.') == std::string::npos) digits += ".0";
    return c < 0 ? "(- " + digits + ")" : digits;
  }

  SmtExpr& operator+=(const SmtExpr& o) { return *this = *this + o; }
  SmtExpr& operator-=(const SmtExpr& o) { return *this = *this - o; }
  SmtExpr& operator*=(const SmtExpr& o) { return *this = *this * o; }

  friend SmtExpr op(const char* name, const SmtExpr& a) { return raw(std::string("(") + name + " " + a.text_ + ")"); }
  friend SmtExpr op(const char* name, const SmtExpr& a, const SmtExpr& b) {
    return raw(std::string("(") + name + " " + a.text_ + " " + b.text_ + ")");
  }

  friend SmtExpr operator+(const SmtExpr& a, const SmtExpr& b) {
    if (a.is_zero()) return b;
    if (b.is_zero()) return a;
    return op("+", a, b);
  }
  friend SmtExpr operator-(const SmtExpr& a, const SmtExpr& b) {
    if (b.is_zero()) return a;
    return op("-", a, b);
  }
  friend SmtExpr operator-(const SmtExpr& a) {
    if (a.is_zero()) return a;
    return op("-", a);
  }
  friend SmtExpr operator*(const SmtExpr& a, const SmtExpr& b) {
    if (a.is_zero() || b.is_zero()) return SmtExpr(0.0);
    if (a.is_one()) return b;
    if (b.is_one()) return a;
    return op("*", a, b);
  }
  friend SmtExpr operator/(const SmtExpr& a, const SmtExpr& b) { return op("/", a, b); }

  friend SmtExpr sqr(const SmtExpr& a) { return op("*", a, a); }
  friend SmtExpr pow(const SmtExpr& a, int k) {
    if (k == 0) return SmtExpr(1.0);
    if (k < 0) return SmtExpr(1.0) / pow(a, -k);
    std::string s = "(*";
    for (int i = 0; i < k; ++i) s += " " + a.text_;
    return k == 1 ? a : raw(s + ")");
  }
  friend SmtExpr sin(const SmtExpr& a) { return op("sin", a); }
  friend SmtExpr cos(const SmtExpr& a) { return op("cos", a); }
  friend SmtExpr exp(const SmtExpr& a) { return op("exp", a); }
  /// tanh(z) = 1 - 2 / (exp(2z) + 1)
  friend SmtExpr tanh(const SmtExpr& a) {
    return SmtExpr(1.0) - SmtExpr(2.0) / (exp(SmtExpr(2.0) * a) + SmtExpr(1.0));
  }
  friend SmtExpr sech2(const SmtExpr& a) {
    SmtExpr t = tanh(a);
    return SmtExpr(1.0) - t * t;
  }
  friend SmtExpr abs(const SmtExpr& a) {
    return raw("(ite (>= " + a.text_ + " 0.0) " + a.text_ + " (- " + a.text_ + "))");
  }
  friend SmtExpr relu(const SmtExpr& a) { return raw("(ite (> " + a.text_ + " 0.0) " + a.text_ + " 0.0)"); }
  friend SmtExpr relu_step(const SmtExpr& a) { return raw("(ite (> " + a.text_ + " 0.0) 1.0 0.0)"); }
  friend SmtExpr sign(const SmtExpr& a) {
    return raw("(ite (> " + a.text_ + " 0.0) 1.0 (ite (< " + a.text_ + " 0.0) (- 1.0) 0.0))");
  }

 private:
  std::string text_;
};

}  // namespace npi
