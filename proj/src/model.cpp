#include "bayescount/model.hpp"

#include <cmath>

#include "bayescount/errors.hpp"
#include "bayescount/numerics.hpp"
#include "bayescount/rng.hpp"

namespace bayescount {

namespace {

constexpr int kC = kModelChannels;

Grid pad1(const Grid& x) {
  Grid p = Grid::Zero(x.rows() + 2, x.cols() + 2);
  p.block(1, 1, x.rows(), x.cols()) = x;
  return p;
}

}  // namespace

ToyModel ToyModel::zero() {
  ToyModel m;
  for (int co = 0; co < kC; ++co) {
    m.conv1_w[co].setZero();
    for (int ci = 0; ci < kC; ++ci) m.conv2_w[co][ci].setZero();
  }
  m.conv1_b.setZero();
  m.conv2_b.setZero();
  m.head_w.setZero();
  m.head_b = 0.0;
  return m;
}

ToyModel ToyModel::init(std::uint64_t seed) {
  ToyModel m = zero();
  Rng rng(seed);
  const double b1 = std::sqrt(6.0 / 9.0);           // conv1 fan-in: 3*3*1
  const double b2 = std::sqrt(6.0 / (9.0 * kC));    // conv2 fan-in: 3*3*8
  const double b3 = std::sqrt(6.0 / kC);            // head fan-in: 8
  // Density maps are sparse; starting the output near softplus(-5.3) ~ 0.005
  // per cell avoids a huge initial count whose correction would slam the
  // head weights through the softplus saturation.
  m.head_b = -5.3;
  for (int co = 0; co < kC; ++co)
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) m.conv1_w[co](r, c) = rng.uniform(-b1, b1);
  for (int co = 0; co < kC; ++co)
    for (int ci = 0; ci < kC; ++ci)
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) m.conv2_w[co][ci](r, c) = rng.uniform(-b2, b2);
  for (int ci = 0; ci < kC; ++ci) m.head_w[ci] = rng.uniform(-b3, b3);
  return m;
}

Eigen::VectorXd ToyModel::to_flat() const {
  Eigen::VectorXd flat(kModelParameterCount);
  Index k = 0;
  for (int co = 0; co < kC; ++co)
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) flat[k++] = conv1_w[co](r, c);
  for (int co = 0; co < kC; ++co) flat[k++] = conv1_b[co];
  for (int co = 0; co < kC; ++co)
    for (int ci = 0; ci < kC; ++ci)
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) flat[k++] = conv2_w[co][ci](r, c);
  for (int co = 0; co < kC; ++co) flat[k++] = conv2_b[co];
  for (int ci = 0; ci < kC; ++ci) flat[k++] = head_w[ci];
  flat[k++] = head_b;
  return flat;
}

ToyModel ToyModel::from_flat(const Eigen::VectorXd& flat) {
  if (flat.size() != kModelParameterCount) {
    throw validation_error("flat parameter vector must have " +
                           std::to_string(kModelParameterCount) + " entries, got " +
                           std::to_string(flat.size()));
  }
  ToyModel m = zero();
  Index k = 0;
  for (int co = 0; co < kC; ++co)
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) m.conv1_w[co](r, c) = flat[k++];
  for (int co = 0; co < kC; ++co) m.conv1_b[co] = flat[k++];
  for (int co = 0; co < kC; ++co)
    for (int ci = 0; ci < kC; ++ci)
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) m.conv2_w[co][ci](r, c) = flat[k++];
  for (int co = 0; co < kC; ++co) m.conv2_b[co] = flat[k++];
  for (int ci = 0; ci < kC; ++ci) m.head_w[ci] = flat[k++];
  m.head_b = flat[k++];
  return m;
}

DensityGrid forward(const ToyModel& model, const Grid& input, ForwardCache* cache) {
  if (input.rows() < 3 || input.cols() < 3) {
    throw validation_error("model input must be at least 3x3, got " +
                           std::to_string(input.rows()) + "x" + std::to_string(input.cols()));
  }
  if (!input.allFinite()) throw validation_error("model input holds non-finite values");
  const Index H = input.rows();
  const Index W = input.cols();

  ForwardCache local;
  ForwardCache& c = cache ? *cache : local;
  c.padded_input = pad1(input);

  for (int co = 0; co < kC; ++co) {
    Grid pre = Grid::Constant(H, W, model.conv1_b[co]);
    for (int ki = 0; ki < 3; ++ki)
      for (int kj = 0; kj < 3; ++kj)
        pre.noalias() += model.conv1_w[co](ki, kj) * c.padded_input.block(ki, kj, H, W);
    c.act1_padded[co] = pad1(pre.cwiseMax(0.0));
    c.pre1[co] = std::move(pre);
  }

  for (int co = 0; co < kC; ++co) {
    Grid pre = Grid::Constant(H, W, model.conv2_b[co]);
    for (int ci = 0; ci < kC; ++ci)
      for (int ki = 0; ki < 3; ++ki)
        for (int kj = 0; kj < 3; ++kj)
          pre.noalias() += model.conv2_w[co][ci](ki, kj) * c.act1_padded[ci].block(ki, kj, H, W);
    c.act2[co] = pre.cwiseMax(0.0);
    c.pre2[co] = std::move(pre);
  }

  Grid pre3 = Grid::Constant(H, W, model.head_b);
  for (int ci = 0; ci < kC; ++ci) pre3.noalias() += model.head_w[ci] * c.act2[ci];
  c.pre3 = std::move(pre3);

  DensityGrid out;
  out.stride = 1;
  out.values = c.pre3.unaryExpr([](double z) { return softplus(z); });
  return out;
}

Eigen::VectorXd backward(const ToyModel& model, const Grid& input, const Grid& upstream,
                         const ForwardCache* cache) {
  if (upstream.rows() != input.rows() || upstream.cols() != input.cols()) {
    throw validation_error("upstream gradient shape does not match the input grid");
  }
  ForwardCache local;
  if (!cache) {
    forward(model, input, &local);
    cache = &local;
  }
  const Index H = input.rows();
  const Index W = input.cols();
  ToyModel g = ToyModel::zero();

  const Grid dpre3 =
      upstream.binaryExpr(cache->pre3, [](double u, double z) { return u * sigmoid(z); });
  g.head_b = dpre3.sum();
  for (int ci = 0; ci < kC; ++ci) g.head_w[ci] = dpre3.cwiseProduct(cache->act2[ci]).sum();

  std::array<Grid, kC> dpre2;
  for (int co = 0; co < kC; ++co) {
    dpre2[co] = (model.head_w[co] * dpre3)
                    .cwiseProduct(cache->pre2[co].unaryExpr(
                        [](double z) { return z > 0.0 ? 1.0 : 0.0; }));
    g.conv2_b[co] = dpre2[co].sum();
  }

  std::array<Grid, kC> dact1_padded;
  for (int ci = 0; ci < kC; ++ci) dact1_padded[ci] = Grid::Zero(H + 2, W + 2);
  for (int co = 0; co < kC; ++co) {
    for (int ci = 0; ci < kC; ++ci) {
      for (int ki = 0; ki < 3; ++ki) {
        for (int kj = 0; kj < 3; ++kj) {
          g.conv2_w[co][ci](ki, kj) =
              dpre2[co].cwiseProduct(cache->act1_padded[ci].block(ki, kj, H, W)).sum();
          dact1_padded[ci].block(ki, kj, H, W).noalias() +=
              model.conv2_w[co][ci](ki, kj) * dpre2[co];
        }
      }
    }
  }

  for (int co = 0; co < kC; ++co) {
    const Grid dpre1 =
        dact1_padded[co]
            .block(1, 1, H, W)
            .cwiseProduct(cache->pre1[co].unaryExpr([](double z) { return z > 0.0 ? 1.0 : 0.0; }));
    g.conv1_b[co] = dpre1.sum();
    for (int ki = 0; ki < 3; ++ki)
      for (int kj = 0; kj < 3; ++kj)
        g.conv1_w[co](ki, kj) =
            dpre1.cwiseProduct(cache->padded_input.block(ki, kj, H, W)).sum();
  }

  return g.to_flat();
}

}  // namespace bayescount
