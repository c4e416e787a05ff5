#pragma once

#include <Eigen/Core>
#include <string>

#include "bayescount/errors.hpp"
#include "bayescount/scene.hpp"

namespace bayescount {

/// Row-major so that the linear pixel index m = i * width + j walks the
/// underlying storage directly.
template <class Scalar>
using GridT = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Grid = GridT<double>;

/// A nonnegative H x W grid of count mass per cell (an estimated or
/// ground-truth density map). The total count of the map is the sum of all
/// cells. `stride` carries the image-pixels-per-cell metadata through file
/// round trips.
template <class Scalar>
struct DensityGridT {
  GridT<Scalar> values;
  int stride = 1;

  Index height() const { return values.rows(); }
  Index width() const { return values.cols(); }
  Index cell_count() const { return values.size(); }
};

using DensityGrid = DensityGridT<double>;

template <class Scalar>
void validate(const DensityGridT<Scalar>& grid) {
  if (grid.values.rows() <= 0 || grid.values.cols() <= 0) {
    throw validation_error("density grid dimensions must be positive");
  }
  if (grid.stride <= 0) {
    throw validation_error("density grid stride must be positive");
  }
  for (Index m = 0; m < grid.values.size(); ++m) {
    const Scalar v = grid.values.data()[m];
    if (!(v >= Scalar(0))) {  // also catches NaN
      throw validation_error("density grid holds a negative or non-finite value at linear index " +
                             std::to_string(m));
    }
  }
}

template <class Scalar>
void require_same_shape(const SceneT<Scalar>& scene, const DensityGridT<Scalar>& grid) {
  if (scene.height != grid.height() || scene.width != grid.width()) {
    throw validation_error("density grid shape " + std::to_string(grid.height()) + "x" +
                           std::to_string(grid.width()) + " does not match scene " +
                           std::to_string(scene.height) + "x" + std::to_string(scene.width));
  }
}

}  // namespace bayescount
