#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "bayescount/density.hpp"
#include "bayescount/scene.hpp"

namespace bayescount {

/// Recipe for one synthetic scene: N ~ uniform in [count_min, count_max]
/// heads, rejection-sampled for pairwise separation, rendered as isotropic
/// Gaussian blobs of random radius plus uniform noise, clipped to [0, 1].
struct SynthSpec {
  Index height = 64;
  Index width = 64;
  int count_min = 1;
  int count_max = 30;
  double min_separation = 3.0;
  double radius_min = 1.0;
  double radius_max = 1.6;
  double blob_amplitude = 1.0;
  double noise_level = 0.05;
  std::uint64_t seed = 7;
};

void validate(const SynthSpec& spec);

/// One benchmark sample: the rendered input grid plus its exact point
/// annotations.
struct Sample {
  Grid input;
  Scene scene;
};

/// Deterministically generates the index-th scene of the spec's stream.
/// Throws validation_error after 10^4 separation rejections.
Sample generate_scene(const SynthSpec& spec, std::uint64_t index);

/// Offsets every head by i.i.d. per-axis uniform noise in
/// +-(deviation * height) cells (both axes scale with the grid height) and
/// clamps the result to the scene bounds. deviation = 0 is the identity.
Scene perturb_annotations(const Scene& scene, double deviation, std::uint64_t seed);

/// Count-error metrics over per-image (ground truth, estimate) pairs:
/// mae = mean |N_k - C_k|, mse = sqrt(mean |N_k - C_k|^2).
struct MetricsReport {
  std::vector<std::pair<double, double>> per_image;  // (gt count, estimated count)
  double mae = 0.0;
  double mse = 0.0;
  Index image_count() const { return static_cast<Index>(per_image.size()); }
};

MetricsReport metrics(const std::vector<std::pair<double, double>>& per_image);

}  // namespace bayescount
