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
#include "bayescount/scene.hpp"

namespace bayescount {

/// Contiguous [begin, end) range of row-major pixel indices.
struct PixelRange {
  Index begin = 0;
  Index end = 0;
  Index size() const { return end - begin; }
};

/// Posterior label probabilities for a tile of pixels. Rows are labels:
/// heads 0..N-1 in annotation order, then the background label as the last
/// row when background modeling is on. Columns are pixels of `pixels` in
/// order; each column sums to 1.
template <class Scalar>
struct PosteriorBlockT {
  PixelRange pixels;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> probs;
};

using PosteriorBlock = PosteriorBlockT<double>;

/// Index of the head closest to `pixel`; ties go to the lowest index.
template <class Scalar>
Index nearest_head(Point2T<Scalar> pixel, const SceneT<Scalar>& scene) {
  if (scene.head_count() < 1) throw validation_error("nearest_head requires at least one head");
  Index best = 0;
  Scalar best_d2 = squared_distance(pixel, scene.points[0]);
  for (Index n = 1; n < scene.head_count(); ++n) {
    const Scalar d2 = squared_distance(pixel, scene.points[static_cast<std::size_t>(n)]);
    if (d2 < best_d2) {
      best_d2 = d2;
      best = n;
    }
  }
  return best;
}

/// The virtual background point sitting `margin` cells past the pixel's
/// nearest head, along the head-to-pixel direction. Only used for
/// visualization and tests; the likelihood itself is computed from the
/// nearest-head distance and never needs this point.
///
/// Throws degenerate_direction_error when the pixel coincides with its
/// nearest head and the direction is undefined.
template <class Scalar>
Point2T<Scalar> dummy_background_point(Point2T<Scalar> pixel, const SceneT<Scalar>& scene,
                                       Scalar margin) {
  const Index n = nearest_head(pixel, scene);
  const auto& z = scene.points[static_cast<std::size_t>(n)];
  const Scalar dr = pixel.row - z.row;
  const Scalar dc = pixel.col - z.col;
  const Scalar norm = std::sqrt(dr * dr + dc * dc);
  if (norm == Scalar(0)) {
    throw degenerate_direction_error("pixel coincides with head " + std::to_string(n) +
                                     "; dummy background point direction is undefined");
  }
  return {z.row + margin * (dr / norm), z.col + margin * (dc / norm)};
}

namespace detail {

/// The two log-likelihood kernels, sharing one rounding path everywhere.
/// The Gaussian normalizer is label-independent and cancels in the
/// posterior, so logits omit it.
template <class Scalar>
struct LogitKernel {
  Scalar inv_two_sigma_sq{};
  Scalar margin{};

  Scalar head(Scalar d2) const { return -(d2 * inv_two_sigma_sq); }

  // Computed from the nearest-head distance directly; the dummy-point form
  // would be singular at d2 == 0.
  Scalar background(Scalar nearest_d2) const {
    const Scalar gap = margin - std::sqrt(nearest_d2);
    return -((gap * gap) * inv_two_sigma_sq);
  }
};

/// Precomputed per-(scene, config) state for posterior evaluation over grid
/// cells. Squared distances separate into row and column terms, so only
/// N x (H + W) values are stored. Every pixel column is produced by the same
/// scalar code path, which is what makes results independent of how callers
/// tile the pixel range.
template <class Scalar>
class PosteriorContext {
 public:
  PosteriorContext(const SceneT<Scalar>& scene, const LossConfig& cfg)
      : heads_(scene.head_count()),
        labels_(cfg.label_count(heads_)),
        width_(scene.width),
        background_(cfg.background),
        truncate_(cfg.truncate_logits ? Scalar(-700) : -std::numeric_limits<Scalar>::infinity()) {
    if (heads_ < 1) throw validation_error("posterior requires at least one head");
    if (!(cfg.sigma > 0.0)) throw validation_error("sigma must be positive");
    if (cfg.background && !(cfg.margin_cells(scene.height, scene.width) > 0.0)) {
      throw validation_error("margin d must be positive when background modeling is enabled");
    }
    const Scalar sigma = static_cast<Scalar>(cfg.sigma);
    kernel_.inv_two_sigma_sq = Scalar(1) / (Scalar(2) * sigma * sigma);
    kernel_.margin = static_cast<Scalar>(cfg.margin_cells(scene.height, scene.width));

    row_sq_.resize(heads_, scene.height);
    col_sq_.resize(heads_, scene.width);
    for (Index n = 0; n < heads_; ++n) {
      const auto& z = scene.points[static_cast<std::size_t>(n)];
      for (Index i = 0; i < scene.height; ++i) {
        const Scalar dr = cell_center<Scalar>(i, 0).row - z.row;
        row_sq_(n, i) = dr * dr;
      }
      for (Index j = 0; j < scene.width; ++j) {
        const Scalar dc = cell_center<Scalar>(0, j).col - z.col;
        col_sq_(n, j) = dc * dc;
      }
    }

    if (cfg.priors) {
      // Weights may arrive unnormalized; only their ratios matter.
      if (cfg.priors->size() != labels_) {
        throw validation_error("priors length " + std::to_string(cfg.priors->size()) +
                               " does not match label count " + std::to_string(labels_));
      }
      has_priors_ = true;
      prior_.resize(labels_);
      Scalar total = Scalar(0);
      for (Index l = 0; l < labels_; ++l) {
        prior_[l] = static_cast<Scalar>((*cfg.priors)[l]);
        if (!(prior_[l] >= Scalar(0))) throw validation_error("prior weights must be nonnegative");
        total += prior_[l];
      }
      if (!(total > Scalar(0))) throw validation_error("prior weights must not be all zero");
      prior_ /= total;
    }
  }

  Index head_count() const { return heads_; }
  Index label_count() const { return labels_; }

  /// Raw logits for row-major pixel m; out must hold label_count() values.
  void logits(Index m, Scalar* out) const {
    const Index i = m / width_;
    const Index j = m % width_;
    Scalar nearest_d2 = std::numeric_limits<Scalar>::infinity();
    for (Index n = 0; n < heads_; ++n) {
      const Scalar d2 = row_sq_(n, i) + col_sq_(n, j);
      if (d2 < nearest_d2) nearest_d2 = d2;
      out[n] = kernel_.head(d2);
    }
    if (background_) out[heads_] = kernel_.background(nearest_d2);
  }

  /// Posterior column for pixel m: softmax of the logits, weighted by the
  /// normalized priors when present, stabilized by max-logit subtraction.
  void posterior_column(Index m, Scalar* out) const {
    logits(m, out);
    Scalar max_logit = -std::numeric_limits<Scalar>::infinity();
    for (Index l = 0; l < labels_; ++l) {
      if ((!has_priors_ || prior_[l] > Scalar(0)) && out[l] > max_logit) max_logit = out[l];
    }
    Scalar sum = Scalar(0);
    for (Index l = 0; l < labels_; ++l) {
      const Scalar shifted = out[l] - max_logit;
      Scalar t = Scalar(0);
      if (shifted >= truncate_) {
        t = has_priors_ ? (prior_[l] > Scalar(0) ? prior_[l] * std::exp(shifted) : Scalar(0))
                        : std::exp(shifted);
      }
      out[l] = t;
      sum += t;
    }
    const Scalar inv = Scalar(1) / sum;
    // The min keeps a near-total term from rounding one ulp above 1.
    for (Index l = 0; l < labels_; ++l) out[l] = std::min(out[l] * inv, Scalar(1));
  }

 private:
  Index heads_;
  Index labels_;
  Index width_;
  bool background_;
  bool has_priors_ = false;
  Scalar truncate_;
  LogitKernel<Scalar> kernel_;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> row_sq_;  // N x H
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> col_sq_;  // N x W
  Eigen::VectorX<Scalar> prior_;
};

template <class Scalar>
void check_tile(const SceneT<Scalar>& scene, PixelRange tile) {
  if (tile.begin < 0 || tile.end < tile.begin || tile.end > scene.cell_count()) {
    throw validation_error("pixel range [" + std::to_string(tile.begin) + ", " +
                           std::to_string(tile.end) + ") outside grid of " +
                           std::to_string(scene.cell_count()) + " cells");
  }
}

}  // namespace detail

/// Log-likelihood of each label at an arbitrary continuous location:
/// entry n in 0..N-1 is -|x - z_n|^2 / (2 sigma^2); with background modeling
/// the last entry is -(d - |x - z_near|)^2 / (2 sigma^2). The shared
/// Gaussian normalizer is omitted (it cancels in the posterior).
template <class Scalar>
Eigen::VectorX<Scalar> label_logits(Point2T<Scalar> pixel, const SceneT<Scalar>& scene,
                                    const LossConfig& cfg) {
  if (scene.head_count() < 1) throw validation_error("label_logits requires at least one head");
  if (!(cfg.sigma > 0.0)) throw validation_error("sigma must be positive");
  if (cfg.background && !(cfg.margin_cells(scene.height, scene.width) > 0.0)) {
    throw validation_error("margin d must be positive when background modeling is enabled");
  }
  detail::LogitKernel<Scalar> kernel;
  const Scalar sigma = static_cast<Scalar>(cfg.sigma);
  kernel.inv_two_sigma_sq = Scalar(1) / (Scalar(2) * sigma * sigma);
  kernel.margin = static_cast<Scalar>(cfg.margin_cells(scene.height, scene.width));

  Eigen::VectorX<Scalar> out(cfg.label_count(scene.head_count()));
  Scalar nearest_d2 = std::numeric_limits<Scalar>::infinity();
  for (Index n = 0; n < scene.head_count(); ++n) {
    const Scalar d2 = squared_distance(pixel, scene.points[static_cast<std::size_t>(n)]);
    if (d2 < nearest_d2) nearest_d2 = d2;
    out[n] = kernel.head(d2);
  }
  if (cfg.background) out[scene.head_count()] = kernel.background(nearest_d2);
  return out;
}

/// Posterior label probabilities for a contiguous tile of grid pixels.
template <class Scalar>
PosteriorBlockT<Scalar> posterior(const SceneT<Scalar>& scene, const LossConfig& cfg,
                                  PixelRange tile) {
  detail::check_tile(scene, tile);
  const detail::PosteriorContext<Scalar> ctx(scene, cfg);
  PosteriorBlockT<Scalar> block;
  block.pixels = tile;
  block.probs.resize(ctx.label_count(), tile.size());
  for (Index m = tile.begin; m < tile.end; ++m) {
    ctx.posterior_column(m, block.probs.col(m - tile.begin).data());
  }
  return block;
}

/// Per-pixel Shannon entropy of the posterior label distribution, with the
/// 0 ln 0 = 0 convention. Values lie in [0, ln(label count)].
template <class Scalar>
GridT<Scalar> entropy_map(const SceneT<Scalar>& scene, const LossConfig& cfg) {
  const detail::PosteriorContext<Scalar> ctx(scene, cfg);
  GridT<Scalar> ent(scene.height, scene.width);
  Eigen::VectorX<Scalar> col(ctx.label_count());
  for (Index m = 0; m < scene.cell_count(); ++m) {
    ctx.posterior_column(m, col.data());
    Scalar h = Scalar(0);
    for (Index l = 0; l < ctx.label_count(); ++l) {
      const Scalar p = col[l];
      if (p > Scalar(0)) h -= p * std::log(p);
    }
    ent.data()[m] = h;
  }
  return ent;
}

}  // namespace bayescount
