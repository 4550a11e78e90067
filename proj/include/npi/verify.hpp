#pragma once

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include "npi/autodiff.hpp"
#include "npi/interval.hpp"
#include "npi/rng.hpp"
#include "npi/systems.hpp"
#include "npi/valuenet.hpp"

namespace npi {

enum class VerifyMode { decrease_only, full_roa };

inline std::string to_string(VerifyMode m) { return m == VerifyMode::decrease_only ? "decrease_only" : "full_roa"; }

inline VerifyMode verify_mode_from_string(const std::string& s) {
  if (s == "decrease_only") return VerifyMode::decrease_only;
  if (s == "full_roa") return VerifyMode::full_roa;
  throw std::invalid_argument("unknown verification mode '" + s + "'");
}

struct VerificationSpec {
  double mu = 1e-4;
  double epsilon = 0.1;  // half-width of the excluded box U_eps around 0
  double c1 = 0.01;
  double c2 = 1.0;
  double delta = 1e-6;
  long long max_boxes = 0;  // 0: 1e7 for n <= 2, 1e8 otherwise
  VerifyMode mode = VerifyMode::decrease_only;

  void validate() const {
    if (!(mu > 0)) throw std::invalid_argument("verify.mu must be > 0");
    if (!(epsilon >= 0)) throw std::invalid_argument("verify.epsilon must be >= 0");
    if (!(delta > 0)) throw std::invalid_argument("verify.delta must be > 0");
    if (max_boxes < 0) throw std::invalid_argument("verify.max_boxes must be >= 0");
    if (mode == VerifyMode::full_roa && !(0 < c1 && c1 < c2)) throw std::invalid_argument("verify: need 0 < c1 < c2");
  }

  long long budget(int n) const { return max_boxes > 0 ? max_boxes : (n <= 2 ? 10'000'000LL : 100'000'000LL); }
};

enum class VerifyOutcome { verified, counterexample, budget_exhausted };

inline std::string to_string(VerifyOutcome o) {
  switch (o) {
    case VerifyOutcome::verified: return "verified";
    case VerifyOutcome::counterexample: return "counterexample";
    case VerifyOutcome::budget_exhausted: return "budget_exhausted";
  }
  return "?";
}

/// Conditions: "decrease" (dV/dt <= -mu on the region), and in full_roa mode
/// "1" (decrease on c1 <= V <= c2), "2" (V > c2 on the boundary of the
/// domain), "3" (V > c1 outside U_eps).
struct Witness {
  Eigen::VectorXd point;
  double point_value = 0.0;  // the checked quantity at `point`
  Interval box_enclosure;    // its enclosure over the box containing `point`
  Eigen::VectorXd box_lo, box_hi;
};

struct VerificationReport {
  VerifyOutcome outcome = VerifyOutcome::verified;
  std::optional<Witness> witness;
  std::string condition_id;
  long long boxes_processed = 0;
  double wall_ms = 0.0;
  double mean_enclosure_width = 0.0;  // of dV/dt enclosures over processed boxes
};

template <class S>
S dvdot_combine(const ControlAffineSystem& sys, const std::vector<S>& dv, const std::vector<S>& f,
                const std::vector<S>& g) {
  const int n = sys.state_dim(), m = sys.input_dim();
  const Eigen::MatrixXd& Ri = sys.R_inv();
  S acc(0.0);
  for (int i = 0; i < n; ++i) acc = acc + dv[static_cast<std::size_t>(i)] * f[static_cast<std::size_t>(i)];
  std::vector<S> y(static_cast<std::size_t>(m), S(0.0));
  for (int k = 0; k < m; ++k)
    for (int i = 0; i < n; ++i) {
      const S& gik = g[static_cast<std::size_t>(i * m + k)];
      y[static_cast<std::size_t>(k)] = y[static_cast<std::size_t>(k)] + gik * dv[static_cast<std::size_t>(i)];
    }
  S quad(0.0);
  for (int k = 0; k < m; ++k) {
    quad = quad + Ri(k, k) * sqr(y[static_cast<std::size_t>(k)]);
    for (int l = k + 1; l < m; ++l)
      quad = quad + (2.0 * Ri(k, l)) * (y[static_cast<std::size_t>(k)] * y[static_cast<std::size_t>(l)]);
  }
  return acc - 0.5 * quad;
}

/// dV/dt along x' = f + g kappa with kappa = -1/2 R^{-1} g^T DV^T expanded in
/// place: DV f - 1/2 y^T R^{-1} y, y = g^T DV^T. Generic over scalars.
template <class S, class V>
S dvdot_as(const ControlAffineSystem& sys, const V& model, std::span<const S> x) {
  const int n = sys.state_dim(), m = sys.input_dim();
  std::vector<S> dv = model.template gradient_as<S>(x);
  std::vector<S> f(static_cast<std::size_t>(n)), g(static_cast<std::size_t>(n * m));
  sys.eval<S>(x, f, g);
  return dvdot_combine<S>(sys, dv, f, g);
}

template <class V>
double dvdot_point(const ControlAffineSystem& sys, const V& model, const Eigen::VectorXd& x) {
  return dvdot_as<double>(sys, model, std::span<const double>(x.data(), x.size()));
}

namespace detail {

template <class V>
constexpr bool has_second_order = GenericValueModel<V, Grad<Interval>>;

template <class V>
bool smooth_model(const V& model) {
  if constexpr (std::is_same_v<V, ValueNet>) return model.activation == Activation::tanh;
  return true;
}

inline std::vector<Grad<Interval>> grad_box(const std::vector<Interval>& box) {
  const int n = static_cast<int>(box.size());
  std::vector<Grad<Interval>> x;
  for (int k = 0; k < n; ++k) x.push_back(Grad<Interval>::variable(box[static_cast<std::size_t>(k)], k, n));
  return x;
}

// F(c) + sum_k dF_k(X) (X_k - c_k), intersected with the natural extension.
inline Interval mean_value(const Grad<Interval>& whole, const Interval& at_center, const std::vector<Interval>& box) {
  Interval mv = at_center;
  for (std::size_t k = 0; k < box.size(); ++k) mv = mv + whole.d[k] * (box[k] - Interval(box[k].mid()));
  const Interval nat = whole.v;
  if (nat.hi() < mv.lo() || mv.hi() < nat.lo()) return nat;
  return intersect(nat, mv);
}

inline std::vector<Interval> center_box(const std::vector<Interval>& box) {
  std::vector<Interval> c;
  for (const auto& b : box) c.emplace_back(b.mid());
  return c;
}

}  // namespace detail

/// Enclosure of dV/dt over the box; mean-value form for smooth models.
template <class V>
Interval interval_eval_dVdot(const ControlAffineSystem& sys, const V& model, const std::vector<Interval>& box) {
  if constexpr (detail::has_second_order<V>) {
    if (detail::smooth_model(model)) {
      auto gx = detail::grad_box(box);
      Grad<Interval> whole = dvdot_as<Grad<Interval>>(sys, model, std::span<const Grad<Interval>>(gx));
      auto c = detail::center_box(box);
      Interval at_c = dvdot_as<Interval>(sys, model, std::span<const Interval>(c));
      return detail::mean_value(whole, at_c, box);
    }
  }
  return dvdot_as<Interval>(sys, model, std::span<const Interval>(box));
}

/// Enclosure of V over the box.
template <class V>
Interval interval_eval_value(const V& model, const std::vector<Interval>& box) {
  if constexpr (detail::has_second_order<V>) {
    if (detail::smooth_model(model)) {
      auto gx = detail::grad_box(box);
      Grad<Interval> whole = model.template value_as<Grad<Interval>>(std::span<const Grad<Interval>>(gx));
      auto c = detail::center_box(box);
      Interval at_c = model.template value_as<Interval>(std::span<const Interval>(c));
      return detail::mean_value(whole, at_c, box);
    }
  }
  return model.template value_as<Interval>(std::span<const Interval>(box));
}

inline std::vector<Interval> to_intervals(const Box& b) {
  std::vector<Interval> v;
  for (int i = 0; i < b.dim(); ++i) v.emplace_back(b.lo(i), b.hi(i));
  return v;
}

namespace detail {

inline Eigen::VectorXd midpoint(const std::vector<Interval>& box) {
  Eigen::VectorXd c(static_cast<Eigen::Index>(box.size()));
  for (std::size_t i = 0; i < box.size(); ++i) c(static_cast<Eigen::Index>(i)) = box[i].mid();
  return c;
}

inline bool inside_ball(const std::vector<Interval>& box, double eps) {
  for (const auto& b : box)
    if (b.lo() < -eps || b.hi() > eps) return false;
  return true;
}

inline bool outside_ball(const Eigen::VectorXd& x, double eps) { return x.cwiseAbs().maxCoeff() >= eps; }

/// Widest axis relative to the domain widths; degenerate axes never split.
inline int split_axis(const std::vector<Interval>& box, const Eigen::VectorXd& scale) {
  int best = -1;
  double w = 0.0;
  for (std::size_t i = 0; i < box.size(); ++i) {
    const double r = box[i].width() / scale(static_cast<Eigen::Index>(i));
    if (r > w) {
      w = r;
      best = static_cast<int>(i);
    }
  }
  return best;
}

enum class BoxVerdict { accept, discard, counterexample, split };

struct Search {
  long long processed = 0;
  long long budget = 0;
  double width_sum = 0.0;
  long long width_count = 0;
};

// Depth-first branch and bound; `judge` classifies a box and fills the
// witness on counterexample.
template <class Judge>
VerifyOutcome branch_and_bound(std::vector<Interval> root, const Eigen::VectorXd& scale, Search& s, Judge&& judge,
                               std::optional<Witness>& witness) {
  std::vector<std::vector<Interval>> stack{std::move(root)};
  while (!stack.empty()) {
    std::vector<Interval> box = std::move(stack.back());
    stack.pop_back();
    if (++s.processed > s.budget) return VerifyOutcome::budget_exhausted;
    BoxVerdict v = judge(box, witness);
    if (v == BoxVerdict::counterexample) return VerifyOutcome::counterexample;
    if (v != BoxVerdict::split) continue;
    const int k = split_axis(box, scale);
    if (k < 0 || box[static_cast<std::size_t>(k)].width() == 0.0) return VerifyOutcome::budget_exhausted;
    const double mid = box[static_cast<std::size_t>(k)].mid();
    std::vector<Interval> upper = box;
    box[static_cast<std::size_t>(k)] = Interval(box[static_cast<std::size_t>(k)].lo(), mid);
    upper[static_cast<std::size_t>(k)] = Interval(mid, upper[static_cast<std::size_t>(k)].hi());
    stack.push_back(std::move(upper));
    stack.push_back(std::move(box));
  }
  return VerifyOutcome::verified;
}

inline Witness make_witness(const std::vector<Interval>& box, const Eigen::VectorXd& x, double value, Interval enc) {
  Witness w{x, value, enc, Eigen::VectorXd(static_cast<Eigen::Index>(box.size())),
            Eigen::VectorXd(static_cast<Eigen::Index>(box.size()))};
  for (std::size_t i = 0; i < box.size(); ++i) {
    w.box_lo(static_cast<Eigen::Index>(i)) = box[i].lo();
    w.box_hi(static_cast<Eigen::Index>(i)) = box[i].hi();
  }
  return w;
}

}  // namespace detail

/// Interval branch and bound over the system domain.
template <class V>
VerificationReport verify(const ControlAffineSystem& sys, const V& model, const VerificationSpec& spec) {
  spec.validate();
  const auto start = std::chrono::steady_clock::now();
  const int n = sys.state_dim();
  const Eigen::VectorXd scale = sys.domain().width();
  detail::Search search{0, spec.budget(n), 0.0, 0};
  VerificationReport rep;

  auto decrease_judge = [&](bool level_filter) {
    return [&, level_filter](const std::vector<Interval>& box, std::optional<Witness>& w) {
      using detail::BoxVerdict;
      if (!level_filter && detail::inside_ball(box, spec.epsilon)) return BoxVerdict::discard;
      if (level_filter) {
        Interval v = interval_eval_value(model, box);
        if (v.hi() < spec.c1 || v.lo() > spec.c2) return BoxVerdict::discard;
      }
      Interval d = interval_eval_dVdot(sys, model, box);
      search.width_sum += d.width();
      ++search.width_count;
      if (d.hi() <= -spec.mu) return BoxVerdict::accept;
      Eigen::VectorXd c = detail::midpoint(box);
      bool in_region = level_filter ? true : detail::outside_ball(c, spec.epsilon);
      if (level_filter) {
        const double vc = model.value(c);
        in_region = vc >= spec.c1 - spec.delta && vc <= spec.c2 + spec.delta;
      }
      if (in_region) {
        const double dc = dvdot_point(sys, model, c);
        if (dc > -spec.mu - spec.delta) {
          w = detail::make_witness(box, c, dc, d);
          return BoxVerdict::counterexample;
        }
      }
      return BoxVerdict::split;
    };
  };

  // V > level on the searched set; `exclude_ball` drops U_eps.
  auto level_judge = [&](double level, bool exclude_ball) {
    return [&, level, exclude_ball](const std::vector<Interval>& box, std::optional<Witness>& w) {
      using detail::BoxVerdict;
      if (exclude_ball && detail::inside_ball(box, spec.epsilon)) return BoxVerdict::discard;
      Interval v = interval_eval_value(model, box);
      if (v.lo() > level) return BoxVerdict::accept;
      Eigen::VectorXd c = detail::midpoint(box);
      if (!exclude_ball || detail::outside_ball(c, spec.epsilon)) {
        const double vc = model.value(c);
        if (vc < level + spec.delta) {
          w = detail::make_witness(box, c, vc, v);
          return BoxVerdict::counterexample;
        }
      }
      return BoxVerdict::split;
    };
  };

  auto finish = [&](VerifyOutcome o, std::string cond) {
    rep.outcome = o;
    if (o != VerifyOutcome::verified) rep.condition_id = std::move(cond);
    rep.boxes_processed = std::min(search.processed, search.budget);
    rep.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    rep.mean_enclosure_width = search.width_count ? search.width_sum / static_cast<double>(search.width_count) : 0.0;
    return rep;
  };

  const std::vector<Interval> root = to_intervals(sys.domain());
  if (spec.mode == VerifyMode::decrease_only) {
    auto o = detail::branch_and_bound(root, scale, search, decrease_judge(false), rep.witness);
    return finish(o, "decrease");
  }
  // Cheap conditions first: boundary faces, then the level set c1, then decrease.
  for (int i = 0; i < n; ++i) {
    for (int side = 0; side < 2; ++side) {
      std::vector<Interval> face = root;
      const double v = side == 0 ? root[static_cast<std::size_t>(i)].lo() : root[static_cast<std::size_t>(i)].hi();
      face[static_cast<std::size_t>(i)] = Interval(v);
      auto o = detail::branch_and_bound(face, scale, search, level_judge(spec.c2, false), rep.witness);
      if (o != VerifyOutcome::verified) return finish(o, "2");
    }
  }
  auto o3 = detail::branch_and_bound(root, scale, search, level_judge(spec.c1, true), rep.witness);
  if (o3 != VerifyOutcome::verified) return finish(o3, "3");
  auto o1 = detail::branch_and_bound(root, scale, search, decrease_judge(true), rep.witness);
  return finish(o1, "1");
}

struct SpotCheck {
  int checked = 0;
  int violations = 0;
  double worst_margin = std::numeric_limits<double>::infinity();  // >= 0 means every sample satisfied
};

/// Point evaluation of the verified conditions at `samples` random points
/// of each region; used to cross-check "verified" results.
template <class V>
SpotCheck spot_check(const ControlAffineSystem& sys, const V& model, const VerificationSpec& spec, int samples = 10000,
                     std::uint64_t seed = 12345) {
  const Box& dom = sys.domain();
  const int n = dom.dim();
  const CounterRng rng = CounterRng(seed).substream(500);
  std::uint64_t counter = 0;
  SpotCheck sc;
  auto draw = [&] {
    Eigen::VectorXd x(n);
    for (int i = 0; i < n; ++i) x(i) = rng.uniform(counter++, dom.lo(i), dom.hi(i));
    return x;
  };
  auto note = [&](double margin) {
    ++sc.checked;
    if (margin < 0) ++sc.violations;
    sc.worst_margin = std::min(sc.worst_margin, margin);
  };
  for (int s = 0; s < samples; ++s) {
    Eigen::VectorXd x = draw();
    if (spec.mode == VerifyMode::decrease_only) {
      if (detail::outside_ball(x, spec.epsilon)) note(-spec.mu - dvdot_point(sys, model, x));
      continue;
    }
    const double v = model.value(x);
    if (v >= spec.c1 && v <= spec.c2) note(-spec.mu - dvdot_point(sys, model, x));
    if (detail::outside_ball(x, spec.epsilon)) note(v - spec.c1);
    const int face = s % (2 * n);
    x(face / 2) = face % 2 == 0 ? dom.lo(face / 2) : dom.hi(face / 2);
    note(model.value(x) - spec.c2);
  }
  return sc;
}

}  // namespace npi
