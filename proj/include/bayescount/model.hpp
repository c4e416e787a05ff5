#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>

#include "bayescount/density.hpp"

namespace bayescount {

inline constexpr int kModelChannels = 8;
inline constexpr Index kModelParameterCount = 673;

/// Small trainable density estimator: 3x3 conv (1 -> 8) + ReLU, 3x3 conv
/// (8 -> 8) + ReLU, 1x1 conv (8 -> 1) + softplus. Same padding, stride 1,
/// so the output grid has the input's shape; softplus keeps it positive.
struct ToyModel {
  std::array<Eigen::Matrix3d, kModelChannels> conv1_w;
  Eigen::Matrix<double, kModelChannels, 1> conv1_b;
  std::array<std::array<Eigen::Matrix3d, kModelChannels>, kModelChannels> conv2_w;  // [out][in]
  Eigen::Matrix<double, kModelChannels, 1> conv2_b;
  Eigen::Matrix<double, kModelChannels, 1> head_w;
  double head_b = 0.0;

  /// All-zero parameters.
  static ToyModel zero();

  /// Weights uniform in +-sqrt(6 / fan_in), biases zero, drawn in flat
  /// order from the seed.
  static ToyModel init(std::uint64_t seed);

  /// Flat layout: conv1_w (per out channel, row-major 3x3), conv1_b,
  /// conv2_w (out, in, row-major), conv2_b, head_w, head_b.
  Eigen::VectorXd to_flat() const;
  static ToyModel from_flat(const Eigen::VectorXd& flat);
};

/// Intermediates of forward() that backward() reuses.
struct ForwardCache {
  Grid padded_input;
  std::array<Grid, kModelChannels> pre1;
  std::array<Grid, kModelChannels> act1_padded;
  std::array<Grid, kModelChannels> pre2;
  std::array<Grid, kModelChannels> act2;
  Grid pre3;
};

/// Runs the model on an input grid (H, W >= 3). Pass a cache to reuse the
/// intermediates in backward().
DensityGrid forward(const ToyModel& model, const Grid& input, ForwardCache* cache = nullptr);

/// Exact reverse-mode parameter gradients of the model output contracted
/// with `upstream` (d loss / d output). Returns the to_flat layout. When no
/// cache is passed the forward pass is recomputed internally.
Eigen::VectorXd backward(const ToyModel& model, const Grid& input, const Grid& upstream,
                         const ForwardCache* cache = nullptr);

}  // namespace bayescount
