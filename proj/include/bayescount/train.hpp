#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bayescount/config.hpp"
#include "bayescount/model.hpp"
#include "bayescount/synth.hpp"

namespace bayescount {

enum class LossKind { baseline, bayes, bayes_plus };

const char* to_string(LossKind k);
LossKind loss_kind_from_string(const std::string& name);

/// Training hyperparameters. The loss selector decides background modeling
/// (bayes+ turns it on, bayes off); `loss_cfg.sigma` doubles as the fixed
/// ground-truth kernel width for baseline runs.
struct TrainConfig {
  double learning_rate = 1e-3;
  int epochs = 50;
  int batch_size = 8;
  std::uint64_t seed = 7;
  LossKind loss = LossKind::bayes_plus;
  LossConfig loss_cfg;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  // Cosine decay of the learning rate to lr_floor x learning_rate across the
  // run. The l1 count losses keep constant-magnitude gradients near the
  // optimum, so without decay the iterates orbit it instead of settling.
  bool cosine_lr = true;
  double lr_floor = 0.05;
};

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;  // mean per-image loss over the epoch
  std::optional<double> heldout_mae;
  std::optional<double> heldout_mse;
};

struct TrainResult {
  ToyModel model;
  std::vector<EpochStats> trace;
  std::optional<MetricsReport> final_heldout;
};

/// Per-image counts C_k = total_count(forward(model, input_k)) against the
/// annotated counts N_k.
MetricsReport evaluate_model(const ToyModel& model, const std::vector<Sample>& samples);

/// The model train() starts from for a given config (seed-derived init).
ToyModel initial_model(const TrainConfig& cfg);

/// Deterministic mini-batch training with adaptive-moment updates. Losses
/// are summed per image and averaged across each batch. With a heldout set,
/// every epoch's trace row carries its MAE/MSE and the final report is
/// returned. epochs = 0 returns the freshly initialized model and an empty
/// trace.
TrainResult train(const std::vector<Sample>& train_set, const TrainConfig& cfg,
                  const std::vector<Sample>* heldout = nullptr);

}  // namespace bayescount
