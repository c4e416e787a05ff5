#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <functional>
#include <fstream>

#include "bayescount/checkpoint.hpp"
#include "bayescount/loss.hpp"
#include "bayescount/rng.hpp"
#include "bayescount/train.hpp"
#include "oracle.hpp"
#include "test_util.hpp"

using namespace bayescount;

namespace {

Grid random_grid(Rng& rng, Index h, Index w) {
  Grid g(h, w);
  for (Index m = 0; m < g.size(); ++m) g.data()[m] = rng.uniform(0.0, 1.0);
  return g;
}

// d(loss o forward)/d(parameters) by central differences over every
// parameter. The relative error uses the gradient scale as a floor so dead
// directions do not divide by noise.
double max_param_fd_error(const ToyModel& model, const Grid& input,
                          const std::function<LossValue(const DensityGrid&)>& loss_fn,
                          double h = 1e-6) {
  ForwardCache cache;
  const DensityGrid est = forward(model, input, &cache);
  const Eigen::VectorXd analytic = backward(model, input, loss_fn(est).gradient, &cache);

  Eigen::VectorXd flat = model.to_flat();
  const double scale = std::max(1e-8, analytic.cwiseAbs().maxCoeff());
  double max_err = 0.0;
  for (Index k = 0; k < flat.size(); ++k) {
    const double save = flat[k];
    flat[k] = save + h;
    const double up = loss_fn(forward(ToyModel::from_flat(flat), input)).value;
    flat[k] = save - h;
    const double down = loss_fn(forward(ToyModel::from_flat(flat), input)).value;
    flat[k] = save;
    const double fd = (up - down) / (2.0 * h);
    const double err =
        std::abs(fd - analytic[k]) / std::max({1e-3 * scale, std::abs(fd), std::abs(analytic[k])});
    max_err = std::max(max_err, err);
  }
  return max_err;
}

}  // namespace

TEST_CASE("forward basics") {
  Rng rng(51);
  const Grid input = random_grid(rng, 6, 7);

  SUBCASE("all-zero parameters output softplus(0) = ln 2") {
    const DensityGrid out = forward(ToyModel::zero(), input);
    REQUIRE(out.height() == 6);
    REQUIRE(out.width() == 7);
    for (Index m = 0; m < out.values.size(); ++m) {
      CHECK(out.values.data()[m] == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    }
  }
  SUBCASE("zero head weights pass only the bias through") {
    ToyModel m = ToyModel::init(3);
    m.head_w.setZero();
    m.head_b = 1.25;
    const DensityGrid out = forward(m, input);
    for (Index k = 0; k < out.values.size(); ++k) {
      CHECK(out.values.data()[k] == doctest::Approx(softplus(1.25)).epsilon(1e-15));
    }
  }
  SUBCASE("output is positive for random parameters") {
    const DensityGrid out = forward(ToyModel::init(17), input);
    CHECK(out.values.minCoeff() > 0.0);
  }
  SUBCASE("too-small inputs are rejected") {
    CHECK_THROWS_AS(forward(ToyModel::zero(), Grid::Zero(2, 8)), validation_error);
  }
}

TEST_CASE("forward matches the six-loop convolution oracle") {
  Rng rng(52);
  double max_err = 0.0;
  for (int it = 0; it < 4; ++it) {
    const ToyModel model = ToyModel::init(100 + static_cast<std::uint64_t>(it));
    const Grid input = random_grid(rng, 8, 8);
    const DensityGrid out = forward(model, input);
    const Grid ref = oracle::forward_dense(model, input);
    max_err = std::max(max_err, (out.values - ref).cwiseAbs().maxCoeff());
  }
  CHECK(max_err < 1e-12);
}

TEST_CASE("backward basics") {
  Rng rng(53);
  const ToyModel model = ToyModel::init(7);
  const Grid input = random_grid(rng, 8, 8);

  SUBCASE("zero upstream gives zero gradients") {
    const Eigen::VectorXd g = backward(model, input, Grid::Zero(8, 8));
    CHECK(g.cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("gradients scale exactly with the upstream") {
    Grid upstream = random_grid(rng, 8, 8);
    const Eigen::VectorXd g1 = backward(model, input, upstream);
    const Eigen::VectorXd g2 = backward(model, input, (2.0 * upstream).eval());
    for (Index k = 0; k < g1.size(); ++k) CHECK(g2[k] == 2.0 * g1[k]);
  }
  SUBCASE("shape mismatch is rejected") {
    CHECK_THROWS_AS(backward(model, input, Grid::Zero(4, 4)), validation_error);
  }
}

TEST_CASE("end-to-end parameter gradients match finite differences") {
  Rng rng(54);
  double worst = 0.0;
  for (int it = 0; it < 3; ++it) {
    const ToyModel model = ToyModel::init(200 + static_cast<std::uint64_t>(it));
    const Grid input = random_grid(rng, 8, 8);
    const Scene scene = testutil::random_scene(rng, 8, 4);
    Scene sized = scene;
    sized.height = 8;
    sized.width = 8;
    for (auto& p : sized.points) {
      p.row = rng.uniform(0.0, 8.0);
      p.col = rng.uniform(0.0, 8.0);
    }
    LossConfig cfg;
    cfg.sigma = 3.0;

    const DensityGrid gt = baseline_density(sized, BaselineKernel::fixed(1.5));
    worst = std::max(worst, max_param_fd_error(model, input, [&](const DensityGrid& est) {
      return baseline_loss(gt, est);
    }));
    worst = std::max(worst, max_param_fd_error(model, input, [&](const DensityGrid& est) {
      return bayes_loss(sized, est, cfg);
    }));
    LossConfig plus = cfg;
    plus.background = true;
    worst = std::max(worst, max_param_fd_error(model, input, [&](const DensityGrid& est) {
      return bayes_loss(sized, est, plus);
    }));
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("training loop") {
  Rng rng(55);
  std::vector<Sample> data;
  for (int k = 0; k < 4; ++k) {
    SynthSpec spec;
    spec.height = 12;
    spec.width = 12;
    spec.count_min = 1;
    spec.count_max = 3;
    spec.seed = 99;
    data.push_back(generate_scene(spec, static_cast<std::uint64_t>(k)));
  }
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 2;
  cfg.seed = 5;
  cfg.loss = LossKind::bayes_plus;
  cfg.loss_cfg.sigma = 3.0;

  SUBCASE("zero epochs return the initialized model and an empty trace") {
    TrainConfig zero = cfg;
    zero.epochs = 0;
    const TrainResult r = train(data, zero);
    CHECK(r.trace.empty());
    const ToyModel fresh = initial_model(zero);
    CHECK((r.model.to_flat() - fresh.to_flat()).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("identical seeds give bitwise-identical runs") {
    const TrainResult a = train(data, cfg, &data);
    const TrainResult b = train(data, cfg, &data);
    REQUIRE(a.trace.size() == b.trace.size());
    for (std::size_t e = 0; e < a.trace.size(); ++e) {
      CHECK(a.trace[e].train_loss == b.trace[e].train_loss);
      CHECK(*a.trace[e].heldout_mae == *b.trace[e].heldout_mae);
    }
    CHECK((a.model.to_flat() - b.model.to_flat()).cwiseAbs().maxCoeff() == 0.0);
    REQUIRE(a.final_heldout.has_value());
    CHECK(a.final_heldout->mae == b.final_heldout->mae);
  }
  SUBCASE("different seeds move the parameters") {
    TrainConfig other = cfg;
    other.seed = 6;
    const TrainResult a = train(data, cfg);
    const TrainResult b = train(data, other);
    CHECK((a.model.to_flat() - b.model.to_flat()).cwiseAbs().maxCoeff() > 0.0);
  }
  SUBCASE("all loss kinds take a step") {
    for (const LossKind kind : {LossKind::baseline, LossKind::bayes, LossKind::bayes_plus}) {
      TrainConfig c = cfg;
      c.loss = kind;
      c.epochs = 1;
      const TrainResult r = train(data, c);
      CHECK(r.trace.size() == 1);
      CHECK(std::isfinite(r.trace[0].train_loss));
    }
  }
  SUBCASE("empty dataset is rejected") {
    CHECK_THROWS_AS(train({}, cfg), validation_error);
  }
}

TEST_CASE("checkpoint round trip") {
  const ToyModel model = ToyModel::init(77);
  const auto dir = std::filesystem::temp_directory_path() / "bayescount_tests";
  std::filesystem::create_directories(dir);
  const auto path = dir / "model.bckpt";
  save_checkpoint(model, path);
  const ToyModel back = load_checkpoint(path);
  CHECK((model.to_flat() - back.to_flat()).cwiseAbs().maxCoeff() == 0.0);

  // byte-identical re-save
  std::ifstream in1(path, std::ios::binary);
  std::string bytes1((std::istreambuf_iterator<char>(in1)), std::istreambuf_iterator<char>());
  save_checkpoint(back, path);
  std::ifstream in2(path, std::ios::binary);
  std::string bytes2((std::istreambuf_iterator<char>(in2)), std::istreambuf_iterator<char>());
  CHECK(bytes1 == bytes2);

  SUBCASE("corrupted manifests are rejected") {
    const auto bad = dir / "bad.bckpt";
    std::ofstream(bad, std::ios::binary) << "BCKPT 2\nwhatever\n";
    CHECK_THROWS_AS(load_checkpoint(bad), parse_error);
    const auto truncated = dir / "trunc.bckpt";
    std::ofstream(truncated, std::ios::binary) << bytes1.substr(0, bytes1.size() - 16);
    CHECK_THROWS_AS(load_checkpoint(truncated), parse_error);
  }
}
