#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "bayescount/dataset.hpp"
#include "bayescount/train.hpp"

namespace bayescount {

enum class SweepKind { sigma, noise, loss_compare };

const char* to_string(SweepKind k);
SweepKind sweep_kind_from_string(const std::string& name);

/// A grid of training runs over one swept parameter:
///   sigma         — settings are kernel/likelihood widths in cells,
///   noise         — settings are annotation deviations (fraction of grid
///                   height) applied to the training split only,
///   loss_compare  — no swept parameter, one run per (loss, seed).
/// Each run trains on the benchmark's train split with the run's seed and
/// reports count MAE/MSE on the test split.
struct SweepConfig {
  SweepKind kind = SweepKind::sigma;
  std::vector<double> settings{1.0, 2.0, 4.0, 8.0, 16.0};
  std::vector<LossKind> losses{LossKind::baseline, LossKind::bayes};
  std::vector<std::uint64_t> seeds{1, 2, 3};
  BenchmarkSpec benchmark;
  TrainConfig base_train;   // loss/seed/sigma overridden per run
  double noise_sigma = 4.0; // sigma used by both losses during noise sweeps
  int threads = 0;          // 0: BAYESCOUNT_THREADS env or hardware count

  SweepConfig() {
    base_train.epochs = 12;
    base_train.learning_rate = 3e-3;
  }
};

struct SweepRow {
  std::string setting;
  LossKind loss = LossKind::baseline;
  std::uint64_t seed = 0;
  double mae = 0.0;
  double mse = 0.0;
};

/// Runs the grid (possibly on worker threads; the row order never depends
/// on scheduling) and returns rows in (setting, loss, seed) order.
std::vector<SweepRow> run_sweep(const SweepConfig& cfg);

/// CSV with header `setting,loss,seed,mae,mse`; values carry 6 significant
/// digits. Identical configs produce byte-identical files.
void write_sweep_csv(const std::vector<SweepRow>& rows, const std::filesystem::path& path);
std::vector<SweepRow> read_sweep_csv(const std::filesystem::path& path);

/// Worker cap: the explicit request if positive, else BAYESCOUNT_THREADS,
/// else the hardware concurrency.
int resolve_thread_count(int requested);

/// Formats a double with 6 significant digits (the sweep CSV convention).
std::string format_setting(double v);

}  // namespace bayescount
