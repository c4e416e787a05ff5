#include "bayescount/train.hpp"

#include <cmath>
#include <numeric>

#include "bayescount/errors.hpp"
#include "bayescount/loss.hpp"
#include "bayescount/numerics.hpp"
#include "bayescount/rng.hpp"

namespace bayescount {

namespace {

constexpr std::uint64_t kInitStream = 0x696e6974;      // "init"
constexpr std::uint64_t kShuffleStream = 0x73687566;   // "shuf"

struct Adam {
  Eigen::VectorXd m, v;
  double beta1, beta2, eps, lr;
  double beta1_pow = 1.0, beta2_pow = 1.0;

  Adam(Index n, const TrainConfig& cfg)
      : m(Eigen::VectorXd::Zero(n)),
        v(Eigen::VectorXd::Zero(n)),
        beta1(cfg.adam_beta1),
        beta2(cfg.adam_beta2),
        eps(cfg.adam_eps),
        lr(cfg.learning_rate) {}

  void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad) {
    beta1_pow *= beta1;
    beta2_pow *= beta2;
    m = beta1 * m + (1.0 - beta1) * grad;
    v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
    const double mcorr = 1.0 / (1.0 - beta1_pow);
    const double vcorr = 1.0 / (1.0 - beta2_pow);
    for (Index i = 0; i < params.size(); ++i) {
      params[i] -= lr * (m[i] * mcorr) / (std::sqrt(v[i] * vcorr) + eps);
    }
  }
};

}  // namespace

const char* to_string(LossKind k) {
  switch (k) {
    case LossKind::baseline: return "baseline";
    case LossKind::bayes: return "bayes";
    case LossKind::bayes_plus: return "bayes+";
  }
  return "?";
}

LossKind loss_kind_from_string(const std::string& name) {
  if (name == "baseline") return LossKind::baseline;
  if (name == "bayes") return LossKind::bayes;
  if (name == "bayes+" || name == "bayes_plus") return LossKind::bayes_plus;
  throw validation_error("unknown loss '" + name + "' (expected baseline|bayes|bayes+)");
}

ToyModel initial_model(const TrainConfig& cfg) {
  return ToyModel::init(mix_seed(cfg.seed, kInitStream));
}

MetricsReport evaluate_model(const ToyModel& model, const std::vector<Sample>& samples) {
  if (samples.empty()) throw validation_error("evaluate_model requires at least one sample");
  std::vector<std::pair<double, double>> per_image;
  per_image.reserve(samples.size());
  for (const auto& s : samples) {
    const DensityGrid est = forward(model, s.input);
    per_image.emplace_back(static_cast<double>(s.scene.head_count()), total_count(est));
  }
  return metrics(per_image);
}

TrainResult train(const std::vector<Sample>& train_set, const TrainConfig& cfg,
                  const std::vector<Sample>* heldout) {
  if (train_set.empty()) throw validation_error("train requires a nonempty dataset");
  if (cfg.epochs < 0) throw validation_error("epochs must be nonnegative");
  if (cfg.batch_size < 1) throw validation_error("batch size must be positive");
  if (!(cfg.learning_rate > 0.0)) throw validation_error("learning rate must be positive");

  LossConfig loss_cfg = cfg.loss_cfg;
  loss_cfg.background = cfg.loss == LossKind::bayes_plus;

  TrainResult result;
  result.model = initial_model(cfg);

  // Ground-truth maps for the baseline loss are fixed per run.
  std::vector<DensityGrid> gt;
  if (cfg.loss == LossKind::baseline) {
    gt.reserve(train_set.size());
    for (const auto& s : train_set) {
      gt.push_back(baseline_density(s.scene, BaselineKernel::fixed(loss_cfg.sigma)));
    }
  }

  Eigen::VectorXd params = result.model.to_flat();
  Adam adam(params.size(), cfg);
  Rng shuffle_rng(mix_seed(cfg.seed, kShuffleStream));

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    if (cfg.cosine_lr && cfg.epochs > 1) {
      const double t = static_cast<double>(epoch - 1) / static_cast<double>(cfg.epochs - 1);
      const double scale =
          cfg.lr_floor + (1.0 - cfg.lr_floor) * 0.5 * (1.0 + std::cos(t * 3.14159265358979323846));
      adam.lr = cfg.learning_rate * scale;
    }
    shuffle_rng.shuffle(order);
    KahanSum<double> epoch_loss;
    std::size_t cursor = 0;
    while (cursor < order.size()) {
      const std::size_t batch = std::min<std::size_t>(cfg.batch_size, order.size() - cursor);
      Eigen::VectorXd grad = Eigen::VectorXd::Zero(params.size());
      const ToyModel model = ToyModel::from_flat(params);
      for (std::size_t b = 0; b < batch; ++b) {
        const std::size_t idx = order[cursor + b];
        const Sample& s = train_set[idx];
        ForwardCache cache;
        const DensityGrid est = forward(model, s.input, &cache);
        LossValue lv;
        switch (cfg.loss) {
          case LossKind::baseline: lv = baseline_loss(gt[idx], est); break;
          case LossKind::bayes:
          case LossKind::bayes_plus: lv = bayes_loss(s.scene, est, loss_cfg); break;
        }
        epoch_loss.add(lv.value);
        grad += backward(model, s.input, lv.gradient, &cache);
      }
      grad /= static_cast<double>(batch);
      adam.step(params, grad);
      cursor += batch;
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = epoch_loss.value() / static_cast<double>(train_set.size());
    if (heldout && !heldout->empty()) {
      const MetricsReport r = evaluate_model(ToyModel::from_flat(params), *heldout);
      stats.heldout_mae = r.mae;
      stats.heldout_mse = r.mse;
    }
    result.trace.push_back(stats);
  }

  result.model = ToyModel::from_flat(params);
  if (heldout && !heldout->empty()) {
    result.final_heldout = evaluate_model(result.model, *heldout);
  }
  return result;
}

}  // namespace bayescount
