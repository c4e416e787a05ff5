#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "bayescount/errors.hpp"

namespace bayescount {

using Index = Eigen::Index;

/// A continuous location on the grid plane, in cell units. Row 0 / col 0 is
/// the top-left corner of the grid; cell (i, j) spans [i, i+1) x [j, j+1).
template <class Scalar>
struct Point2T {
  Scalar row{};
  Scalar col{};
};

using Point2 = Point2T<double>;

/// Center of cell (i, j). Every distance computation in the library samples
/// cells here; nothing recomputes the convention independently.
template <class Scalar>
constexpr Point2T<Scalar> cell_center(Index i, Index j) {
  return {static_cast<Scalar>(i) + Scalar(0.5), static_cast<Scalar>(j) + Scalar(0.5)};
}

template <class Scalar>
Scalar squared_distance(Point2T<Scalar> a, Point2T<Scalar> b) {
  const Scalar dr = a.row - b.row;
  const Scalar dc = a.col - b.col;
  return dr * dr + dc * dc;
}

/// An image-plane extent plus the annotated head points, all in grid-cell
/// units. `stride` records how many image pixels one cell covers; it is
/// metadata only (annotations are divided by it at load time) and none of
/// the math below depends on it. An empty point list is legal.
template <class Scalar>
struct SceneT {
  Index height = 0;
  Index width = 0;
  int stride = 1;
  std::vector<Point2T<Scalar>> points;

  Index head_count() const { return static_cast<Index>(points.size()); }
  Index cell_count() const { return height * width; }
  Index shorter_side() const { return height < width ? height : width; }
};

using Scene = SceneT<double>;

template <class Scalar>
void validate(const SceneT<Scalar>& scene) {
  if (scene.height <= 0 || scene.width <= 0) {
    throw validation_error("scene dimensions must be positive, got " + std::to_string(scene.height) +
                           "x" + std::to_string(scene.width));
  }
  if (scene.stride <= 0) {
    throw validation_error("scene stride must be positive, got " + std::to_string(scene.stride));
  }
  for (std::size_t n = 0; n < scene.points.size(); ++n) {
    const auto& p = scene.points[n];
    if (!std::isfinite(double(p.row)) || !std::isfinite(double(p.col))) {
      throw validation_error("point " + std::to_string(n) + " has non-finite coordinates");
    }
    if (p.row < Scalar(0) || p.row > Scalar(scene.height) || p.col < Scalar(0) ||
        p.col > Scalar(scene.width)) {
      throw validation_error("point " + std::to_string(n) + " at (" + std::to_string(double(p.row)) +
                             ", " + std::to_string(double(p.col)) + ") lies outside [0, " +
                             std::to_string(scene.height) + "] x [0, " + std::to_string(scene.width) +
                             "]");
    }
  }
}

}  // namespace bayescount
