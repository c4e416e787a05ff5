#include "bayescount/synth.hpp"

#include <algorithm>
#include <cmath>

#include "bayescount/errors.hpp"
#include "bayescount/numerics.hpp"
#include "bayescount/rng.hpp"

namespace bayescount {

namespace {
constexpr int kMaxRejections = 10000;
}

void validate(const SynthSpec& spec) {
  if (spec.height <= 0 || spec.width <= 0) throw validation_error("synth grid must be nonempty");
  if (spec.count_min < 0 || spec.count_max < spec.count_min) {
    throw validation_error("synth count range is empty");
  }
  if (spec.min_separation < 0.0) throw validation_error("min separation must be nonnegative");
  if (!(spec.radius_min > 0.0) || spec.radius_max < spec.radius_min) {
    throw validation_error("blob radius range is empty or nonpositive");
  }
  if (spec.noise_level < 0.0) throw validation_error("noise level must be nonnegative");
  if (spec.blob_amplitude < 0.0) throw validation_error("blob amplitude must be nonnegative");
}

Sample generate_scene(const SynthSpec& spec, std::uint64_t index) {
  validate(spec);
  Rng rng(mix_seed(spec.seed, index));

  Sample s;
  s.scene.height = spec.height;
  s.scene.width = spec.width;
  s.scene.stride = 1;

  const int count = static_cast<int>(rng.uniform_int(spec.count_min, spec.count_max));
  const double min_sep_sq = spec.min_separation * spec.min_separation;
  int rejections = 0;
  while (static_cast<int>(s.scene.points.size()) < count) {
    const Point2 cand{rng.uniform(0.0, static_cast<double>(spec.height)),
                      rng.uniform(0.0, static_cast<double>(spec.width))};
    bool ok = true;
    for (const auto& p : s.scene.points) {
      if (squared_distance(cand, p) < min_sep_sq) {
        ok = false;
        break;
      }
    }
    if (ok) {
      s.scene.points.push_back(cand);
    } else if (++rejections >= kMaxRejections) {
      throw validation_error("scene sampling failed: min separation " +
                             std::to_string(spec.min_separation) + " infeasible after " +
                             std::to_string(kMaxRejections) + " rejections");
    }
  }

  std::vector<double> radius(s.scene.points.size());
  for (auto& r : radius) r = rng.uniform(spec.radius_min, spec.radius_max);

  s.input = Grid::Zero(spec.height, spec.width);
  Eigen::VectorXd row_sq(spec.height), col_sq(spec.width);
  for (std::size_t n = 0; n < s.scene.points.size(); ++n) {
    const auto& z = s.scene.points[n];
    const double inv_two_r_sq = 1.0 / (2.0 * radius[n] * radius[n]);
    for (Index i = 0; i < spec.height; ++i) {
      const double dr = cell_center<double>(i, 0).row - z.row;
      row_sq[i] = dr * dr;
    }
    for (Index j = 0; j < spec.width; ++j) {
      const double dc = cell_center<double>(0, j).col - z.col;
      col_sq[j] = dc * dc;
    }
    for (Index i = 0; i < spec.height; ++i)
      for (Index j = 0; j < spec.width; ++j)
        s.input(i, j) += spec.blob_amplitude * std::exp(-(row_sq[i] + col_sq[j]) * inv_two_r_sq);
  }
  for (Index m = 0; m < s.input.size(); ++m) {
    const double v = s.input.data()[m] + rng.uniform(0.0, spec.noise_level);
    s.input.data()[m] = std::clamp(v, 0.0, 1.0);
  }
  return s;
}

Scene perturb_annotations(const Scene& scene, double deviation, std::uint64_t seed) {
  if (deviation < 0.0) throw validation_error("deviation must be nonnegative");
  validate(scene);
  Rng rng(seed);
  const double amp = deviation * static_cast<double>(scene.height);
  Scene out = scene;
  for (auto& p : out.points) {
    p.row = std::clamp(p.row + rng.uniform(-amp, amp), 0.0, static_cast<double>(scene.height));
    p.col = std::clamp(p.col + rng.uniform(-amp, amp), 0.0, static_cast<double>(scene.width));
  }
  return out;
}

MetricsReport metrics(const std::vector<std::pair<double, double>>& per_image) {
  if (per_image.empty()) throw validation_error("metrics require at least one image");
  MetricsReport r;
  r.per_image = per_image;
  KahanSum<double> abs_sum, sq_sum;
  for (const auto& [gt, est] : per_image) {
    const double e = std::abs(gt - est);
    abs_sum.add(e);
    sq_sum.add(e * e);
  }
  const double k = static_cast<double>(per_image.size());
  r.mae = abs_sum.value() / k;
  r.mse = std::sqrt(sq_sum.value() / k);
  return r;
}

}  // namespace bayescount
