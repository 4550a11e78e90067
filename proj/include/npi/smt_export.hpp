#pragma once

#include <Eigen/Dense>

#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "npi/smt_expr.hpp"
#include "npi/systems.hpp"
#include "npi/valuenet.hpp"
#include "npi/verify.hpp"

namespace npi {

namespace detail {
inline SmtExpr sech2_from_tanh(const SmtExpr& t) { return SmtExpr(1.0) - t * t; }
}  // namespace detail

/// SMT-LIB 2 query asserting the negation of the decrease condition over
/// the domain minus U_eps: a sat answer is a counterexample. Each neuron's
/// activation is bound once with define-fun and the gradient components
/// refer to those names.
inline std::string export_smt_query(const ControlAffineSystem& sys, const ValueNet& net, const VerificationSpec& spec) {
  if (spec.mode != VerifyMode::decrease_only) throw std::invalid_argument("export_smt_query: requires decrease_only");
  spec.validate();
  const int n = sys.state_dim(), m = net.width();
  if (net.state_dim() != n) throw std::invalid_argument("export_smt_query: net and system dimensions differ");
  std::ostringstream out;
  out << "; negated decrease condition, mu = " << SmtExpr::literal(spec.mu) << ", eps = " << SmtExpr::literal(spec.epsilon)
      << "\n(set-logic QF_NRA)\n";
  std::vector<SmtExpr> x;
  for (int i = 0; i < n; ++i) {
    x.push_back(SmtExpr::symbol("x" + std::to_string(i)));
    out << "(declare-fun " << x.back().str() << " () Real)\n";
  }
  std::vector<SmtExpr> dv(static_cast<std::size_t>(n), SmtExpr(0.0));
  for (int j = 0; j < m; ++j) {
    if (net.beta(j) == 0.0) continue;
    const SmtExpr z = net.pre_activation<SmtExpr>(std::span<const SmtExpr>(x), j);
    const std::string name = "d" + std::to_string(j);
    if (net.activation == Activation::tanh) {
      const std::string t = "t" + std::to_string(j);
      out << "(define-fun " << t << " () Real " << tanh(z).str() << ")\n";
      out << "(define-fun " << name << " () Real " << detail::sech2_from_tanh(SmtExpr::symbol(t)).str() << ")\n";
    } else {
      out << "(define-fun " << name << " () Real " << act_d1(net.activation, z).str() << ")\n";
    }
    const SmtExpr d = SmtExpr::symbol(name);
    for (int i = 0; i < n; ++i)
      if (net.W(j, i) != 0.0) dv[static_cast<std::size_t>(i)] += SmtExpr(net.beta(j) * net.W(j, i)) * d;
  }
  std::vector<SmtExpr> dvs;
  for (int i = 0; i < n; ++i) {
    const std::string name = "dv" + std::to_string(i);
    out << "(define-fun " << name << " () Real " << dv[static_cast<std::size_t>(i)].str() << ")\n";
    dvs.push_back(SmtExpr::symbol(name));
  }
  std::vector<SmtExpr> f(static_cast<std::size_t>(n)), g(static_cast<std::size_t>(n * sys.input_dim()));
  sys.eval<SmtExpr>(std::span<const SmtExpr>(x), f, g);
  const SmtExpr lhs = dvdot_combine<SmtExpr>(sys, dvs, f, g);
  const Box& dom = sys.domain();
  for (int i = 0; i < n; ++i)
    out << "(assert (<= " << SmtExpr::literal(dom.lo(i)) << ' ' << x[static_cast<std::size_t>(i)].str() << "))\n"
        << "(assert (<= " << x[static_cast<std::size_t>(i)].str() << ' ' << SmtExpr::literal(dom.hi(i)) << "))\n";
  out << "(assert (or";
  for (int i = 0; i < n; ++i)
    out << " (<= " << x[static_cast<std::size_t>(i)].str() << ' ' << SmtExpr::literal(-spec.epsilon) << ") (>= "
        << x[static_cast<std::size_t>(i)].str() << ' ' << SmtExpr::literal(spec.epsilon) << ')';
  out << "))\n(assert (>= " << lhs.str() << ' ' << SmtExpr::literal(-spec.mu) << "))\n(check-sat)\n(exit)\n";
  return out.str();
}

}  // namespace npi
