#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "bayescount/config.hpp"
#include "bayescount/density.hpp"
#include "bayescount/errors.hpp"
#include "bayescount/numerics.hpp"
#include "bayescount/posterior.hpp"
#include "bayescount/scene.hpp"

namespace bayescount {

/// Expected count per head and (when modeled) for the entire background:
/// E[c_n] = sum_m p(y_n | x_m) D(x_m). Their total equals the density sum.
template <class Scalar>
struct ExpectedCountsT {
  Eigen::VectorX<Scalar> per_head;
  Scalar background{};

  Scalar total() const {
    KahanSum<Scalar> acc;
    for (Index n = 0; n < per_head.size(); ++n) acc.add(per_head[n]);
    acc.add(background);
    return acc.value();
  }
};

using ExpectedCounts = ExpectedCountsT<double>;

/// A loss together with its exact gradient with respect to every density
/// cell.
template <class Scalar>
struct LossValueT {
  Scalar value{};
  GridT<Scalar> gradient;
};

using LossValue = LossValueT<double>;

/// Total count of a density map: the sum over all cells, accumulated in
/// row-major order with compensated summation.
template <class Scalar>
Scalar total_count(const DensityGridT<Scalar>& density) {
  KahanSum<Scalar> acc;
  for (Index m = 0; m < density.values.size(); ++m) acc.add(density.values.data()[m]);
  return acc.value();
}

/// Streams posterior columns over the grid (never materializing more than
/// one column) and accumulates E[c_n] per label with one compensated
/// accumulator each, in row-major pixel order. The result is independent of
/// any tiling a caller might have expected.
template <class Scalar>
ExpectedCountsT<Scalar> expected_counts(const SceneT<Scalar>& scene,
                                        const DensityGridT<Scalar>& density,
                                        const LossConfig& cfg) {
  if (scene.head_count() < 1) throw validation_error("expected_counts requires at least one head");
  require_same_shape(scene, density);
  const detail::PosteriorContext<Scalar> ctx(scene, cfg);
  const Index labels = ctx.label_count();

  std::vector<KahanSum<Scalar>> acc(static_cast<std::size_t>(labels));
  Eigen::VectorX<Scalar> col(labels);
  for (Index m = 0; m < density.values.size(); ++m) {
    const Scalar d = density.values.data()[m];
    ctx.posterior_column(m, col.data());
    for (Index l = 0; l < labels; ++l) acc[static_cast<std::size_t>(l)].add(col[l] * d);
  }

  ExpectedCountsT<Scalar> out;
  out.per_head.resize(scene.head_count());
  for (Index n = 0; n < scene.head_count(); ++n) out.per_head[n] = acc[static_cast<std::size_t>(n)].value();
  out.background = cfg.background ? acc[static_cast<std::size_t>(scene.head_count())].value() : Scalar(0);
  return out;
}

namespace detail {

template <class Scalar>
Scalar distance_value(DistanceKind kind, Scalar t) {
  return kind == DistanceKind::abs ? std::abs(t) : t * t;
}

template <class Scalar>
Scalar distance_deriv(DistanceKind kind, Scalar t) {
  return kind == DistanceKind::abs ? sign0(t) : Scalar(2) * t;
}

}  // namespace detail

/// The expected-count loss. With heads present it is
///   sum_n F(1 - E[c_n])  [+ F(0 - E[c_0]) with background modeling],
/// and for an empty scene the density sum itself is driven to zero:
///   F(0 - sum_m D(x_m)).
/// The gradient is exact, with sign(0) = 0 as the subgradient at l1 kinks.
template <class Scalar>
LossValueT<Scalar> bayes_loss(const SceneT<Scalar>& scene, const DensityGridT<Scalar>& density,
                              const LossConfig& cfg) {
  require_same_shape(scene, density);
  LossValueT<Scalar> out;

  if (scene.head_count() == 0) {
    const Scalar total = total_count(density);
    out.value = detail::distance_value(cfg.distance, Scalar(0) - total);
    const Scalar g = -detail::distance_deriv(cfg.distance, Scalar(0) - total);
    out.gradient = GridT<Scalar>::Constant(density.height(), density.width(), g);
    return out;
  }

  const ExpectedCountsT<Scalar> counts = expected_counts(scene, density, cfg);
  const Index heads = scene.head_count();
  const Index labels = cfg.label_count(heads);

  // d/dE[c_n] F(1 - E[c_n]) = -F'(1 - E[c_n]); dE[c_n]/dD_m = p(y_n | x_m).
  Eigen::VectorX<Scalar> coeff(labels);
  KahanSum<Scalar> value;
  for (Index n = 0; n < heads; ++n) {
    const Scalar t = Scalar(1) - counts.per_head[n];
    value.add(detail::distance_value(cfg.distance, t));
    coeff[n] = -detail::distance_deriv(cfg.distance, t);
  }
  if (cfg.background) {
    const Scalar t = Scalar(0) - counts.background;
    value.add(detail::distance_value(cfg.distance, t));
    coeff[heads] = -detail::distance_deriv(cfg.distance, t);
  }
  out.value = value.value();

  const detail::PosteriorContext<Scalar> ctx(scene, cfg);
  out.gradient.resize(density.height(), density.width());
  Eigen::VectorX<Scalar> col(labels);
  for (Index m = 0; m < density.values.size(); ++m) {
    ctx.posterior_column(m, col.data());
    Scalar g = Scalar(0);
    for (Index l = 0; l < labels; ++l) g += coeff[l] * col[l];
    out.gradient.data()[m] = g;
  }
  return out;
}

/// Gaussian kernel selector for ground-truth density maps: either one fixed
/// sigma for every head, or a per-head sigma_n = beta * (mean distance to
/// the `neighbors` nearest other heads), clamped to
/// [0.5, shorter_side / 4] cells.
struct BaselineKernel {
  enum class Mode { fixed, adaptive };
  Mode mode = Mode::fixed;
  double sigma = 8.0;
  double beta = 0.3;
  int neighbors = 3;

  static BaselineKernel fixed(double s) { return {Mode::fixed, s, 0.3, 3}; }
  static BaselineKernel adaptive(double b = 0.3, int k = 3) {
    return {Mode::adaptive, 8.0, b, k};
  }
};

namespace detail {

/// Mean distance from head n to its k nearest other heads; +inf when the
/// scene has no other head (the sigma clamp resolves it).
template <class Scalar>
Scalar mean_neighbor_distance(const SceneT<Scalar>& scene, Index n, int k) {
  const Index heads = scene.head_count();
  if (heads <= 1 || k <= 0) return std::numeric_limits<Scalar>::infinity();
  std::vector<Scalar> d;
  d.reserve(static_cast<std::size_t>(heads - 1));
  for (Index m = 0; m < heads; ++m) {
    if (m == n) continue;
    d.push_back(std::sqrt(squared_distance(scene.points[static_cast<std::size_t>(n)],
                                           scene.points[static_cast<std::size_t>(m)])));
  }
  const std::size_t use = std::min<std::size_t>(static_cast<std::size_t>(k), d.size());
  std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(use), d.end());
  Scalar sum = Scalar(0);
  for (std::size_t i = 0; i < use; ++i) sum += d[i];
  return sum / static_cast<Scalar>(use);
}

}  // namespace detail

/// Ground-truth density map: one discrete Gaussian per head, each
/// renormalized to unit mass so the map sums to the head count. The kernel
/// is evaluated relative to its per-axis minimum distance, which keeps the
/// largest sample at exactly 1 and cannot underflow to an all-zero kernel;
/// the shift cancels in the renormalization.
template <class Scalar>
DensityGridT<Scalar> baseline_density(const SceneT<Scalar>& scene, const BaselineKernel& kernel) {
  validate(scene);
  DensityGridT<Scalar> out;
  out.stride = scene.stride;
  out.values = GridT<Scalar>::Zero(scene.height, scene.width);
  if (scene.head_count() == 0) return out;
  if (kernel.mode == BaselineKernel::Mode::fixed && !(kernel.sigma > 0.0)) {
    throw validation_error("fixed kernel sigma must be positive");
  }
  if (kernel.mode == BaselineKernel::Mode::adaptive && !(kernel.beta > 0.0)) {
    throw validation_error("adaptive kernel beta must be positive");
  }

  const Scalar sigma_lo = Scalar(0.5);
  const Scalar sigma_hi = static_cast<Scalar>(scene.shorter_side()) / Scalar(4);

  GridT<Scalar> bump(scene.height, scene.width);
  Eigen::VectorX<Scalar> row_sq(scene.height), col_sq(scene.width);
  for (Index n = 0; n < scene.head_count(); ++n) {
    Scalar sigma = static_cast<Scalar>(kernel.sigma);
    if (kernel.mode == BaselineKernel::Mode::adaptive) {
      const Scalar mean_d = detail::mean_neighbor_distance(scene, n, kernel.neighbors);
      sigma = std::clamp(static_cast<Scalar>(kernel.beta) * mean_d, sigma_lo,
                         std::max(sigma_lo, sigma_hi));
    }
    const Scalar inv_two_sigma_sq = Scalar(1) / (Scalar(2) * sigma * sigma);

    const auto& z = scene.points[static_cast<std::size_t>(n)];
    Scalar min_row = std::numeric_limits<Scalar>::infinity();
    Scalar min_col = std::numeric_limits<Scalar>::infinity();
    for (Index i = 0; i < scene.height; ++i) {
      const Scalar dr = cell_center<Scalar>(i, 0).row - z.row;
      row_sq[i] = dr * dr;
      if (row_sq[i] < min_row) min_row = row_sq[i];
    }
    for (Index j = 0; j < scene.width; ++j) {
      const Scalar dc = cell_center<Scalar>(0, j).col - z.col;
      col_sq[j] = dc * dc;
      if (col_sq[j] < min_col) min_col = col_sq[j];
    }

    KahanSum<Scalar> mass;
    for (Index i = 0; i < scene.height; ++i) {
      for (Index j = 0; j < scene.width; ++j) {
        const Scalar arg = (row_sq[i] - min_row) + (col_sq[j] - min_col);
        const Scalar v = std::exp(-(arg * inv_two_sigma_sq));
        bump(i, j) = v;
        mass.add(v);
      }
    }
    out.values += bump / mass.value();
  }
  return out;
}

/// Pixel-wise least-squares loss between a ground-truth and an estimated
/// density map; gradient is 2 (est - gt).
template <class Scalar>
LossValueT<Scalar> baseline_loss(const DensityGridT<Scalar>& density_gt,
                                 const DensityGridT<Scalar>& density_est) {
  if (density_gt.height() != density_est.height() || density_gt.width() != density_est.width()) {
    throw validation_error("baseline_loss shapes differ: " + std::to_string(density_gt.height()) +
                           "x" + std::to_string(density_gt.width()) + " vs " +
                           std::to_string(density_est.height()) + "x" +
                           std::to_string(density_est.width()));
  }
  LossValueT<Scalar> out;
  KahanSum<Scalar> value;
  for (Index m = 0; m < density_gt.values.size(); ++m) {
    const Scalar r = density_gt.values.data()[m] - density_est.values.data()[m];
    value.add(r * r);
  }
  out.value = value.value();
  out.gradient = Scalar(2) * (density_est.values - density_gt.values);
  return out;
}

}  // namespace bayescount
