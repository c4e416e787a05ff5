#pragma once

#include <Eigen/Core>
#include <cmath>
#include <optional>
#include <string>

#include "bayescount/errors.hpp"
#include "bayescount/scene.hpp"

namespace bayescount {

/// Distance function F used inside the count losses.
enum class DistanceKind { abs, squared };

inline const char* to_string(DistanceKind d) {
  return d == DistanceKind::abs ? "abs" : "squared";
}

/// Parameters of the posterior/count-loss machinery.
///
/// `margin` is the distance d separating the foreground and background
/// likelihood peaks; it may be given in cells or as a fraction of the
/// shorter grid side (the default, 15%). `priors` optionally reweights the
/// labels (heads first, background last); weights are normalized internally
/// so only their ratios matter.
struct LossConfig {
  double sigma = 8.0;
  bool background = false;
  double margin = 0.15;
  bool margin_is_fraction = true;
  DistanceKind distance = DistanceKind::abs;
  std::optional<Eigen::VectorXd> priors;
  // Off by default: every head contributes to every pixel. When set, shifted
  // logits below -700 contribute exactly zero mass.
  bool truncate_logits = false;

  double margin_cells(Index height, Index width) const {
    return margin_is_fraction ? margin * static_cast<double>(height < width ? height : width)
                              : margin;
  }

  Index label_count(Index heads) const { return heads + (background ? 1 : 0); }
};

/// Checks the config against a concrete scene. Throws validation_error.
template <class Scalar>
void validate(const LossConfig& cfg, const SceneT<Scalar>& scene) {
  if (!(cfg.sigma > 0.0)) {
    throw validation_error("sigma must be positive, got " + std::to_string(cfg.sigma));
  }
  if (cfg.background && !(cfg.margin > 0.0)) {
    throw validation_error("margin d must be positive when background modeling is enabled");
  }
  if (cfg.priors) {
    const Index want = cfg.label_count(scene.head_count());
    if (cfg.priors->size() != want) {
      throw validation_error("priors length " + std::to_string(cfg.priors->size()) +
                             " does not match label count " + std::to_string(want));
    }
    double sum = 0.0;
    for (Index i = 0; i < cfg.priors->size(); ++i) {
      const double w = (*cfg.priors)[i];
      if (!(w >= 0.0)) throw validation_error("prior weights must be nonnegative");
      sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-12) {
      throw validation_error("prior weights must sum to 1 within 1e-12, got " + std::to_string(sum));
    }
  }
}

}  // namespace bayescount
