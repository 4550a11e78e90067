#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "npi/rng.hpp"
#include "npi/systems.hpp"

namespace npi {

enum class Sampler { uniform, grid };

/// Collocation points, one per row; strictly inside the domain and never
/// exactly at the origin.
struct CollocationSet {
  Eigen::MatrixXd points;
  std::uint64_t seed = 0;
  Sampler sampler = Sampler::uniform;

  int size() const { return static_cast<int>(points.rows()); }
};

/// `count` points. Uniform: i.i.d. on the open box from the counter stream
/// (seed, stream). Grid: cell-centred tensor grid with ceil(count^(1/n))
/// points per axis, origin removed.
inline CollocationSet sample_collocation(const Box& domain, int count, std::uint64_t seed,
                                         Sampler sampler = Sampler::uniform, std::uint64_t stream = 0) {
  if (count < 1) throw std::invalid_argument("collocation: need at least one point");
  const int n = domain.dim();
  CollocationSet set{Eigen::MatrixXd(count, n), seed, sampler};
  if (sampler == Sampler::uniform) {
    const CounterRng rng = CounterRng(seed).substream(100 + stream);
    std::uint64_t counter = 0;
    for (int s = 0; s < count; ++s) {
      for (;;) {
        bool ok = true;
        bool nonzero = false;
        for (int i = 0; i < n; ++i) {
          double u = rng.unit(counter++);
          if (u == 0.0) ok = false;
          double v = domain.lo(i) + (domain.hi(i) - domain.lo(i)) * u;
          if (!(v > domain.lo(i) && v < domain.hi(i))) ok = false;
          nonzero = nonzero || v != 0.0;
          set.points(s, i) = v;
        }
        if (ok && nonzero) break;
      }
    }
    return set;
  }
  const int per_axis = std::max(1, static_cast<int>(std::ceil(std::pow(count, 1.0 / n) - 1e-9)));
  std::vector<Eigen::VectorXd> pts;
  std::vector<int> idx(static_cast<std::size_t>(n), 0);
  for (;;) {
    Eigen::VectorXd x(n);
    for (int i = 0; i < n; ++i)
      x(i) = domain.lo(i) + (domain.hi(i) - domain.lo(i)) * (idx[static_cast<std::size_t>(i)] + 0.5) / per_axis;
    if (!x.isZero(0.0)) pts.push_back(x);
    int k = 0;
    while (k < n && ++idx[static_cast<std::size_t>(k)] == per_axis) idx[static_cast<std::size_t>(k++)] = 0;
    if (k == n) break;
  }
  set.points.resize(static_cast<Eigen::Index>(pts.size()), n);
  for (std::size_t s = 0; s < pts.size(); ++s) set.points.row(static_cast<Eigen::Index>(s)) = pts[s].transpose();
  return set;
}

/// Evaluation points for errors and sup-norm changes: the full 21^n grid
/// (boundary included) for n <= 3, otherwise `fallback_count` seeded
/// uniform points.
inline Eigen::MatrixXd test_points(const Box& domain, int fallback_count, std::uint64_t seed) {
  const int n = domain.dim();
  if (n > 3) return sample_collocation(domain, fallback_count, seed, Sampler::uniform, 7).points;
  constexpr int k = 21;
  const int total = static_cast<int>(std::pow(k, n));
  Eigen::MatrixXd pts(total, n);
  for (int s = 0; s < total; ++s) {
    int rem = s;
    for (int i = 0; i < n; ++i) {
      pts(s, i) = domain.lo(i) + (domain.hi(i) - domain.lo(i)) * (rem % k) / (k - 1);
      rem /= k;
    }
  }
  return pts;
}

}  // namespace npi
