// Acceptance suite: one pass/fail line per criterion, exit code = number of
// failing criteria. Heavy criteria (6-8) train real models on the synth-v1
// benchmark, so a full run takes several minutes on one core.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "bayescount/checkpoint.hpp"
#include "bayescount/io.hpp"
#include "bayescount/loss.hpp"
#include "bayescount/posterior.hpp"
#include "bayescount/rng.hpp"
#include "bayescount/sweep.hpp"
#include "bayescount/train.hpp"
#include "oracle.hpp"
#include "test_util.hpp"

using namespace bayescount;
namespace fs = std::filesystem;

namespace {

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

int g_failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
  std::printf("[%s] criterion %d: %s (%s)\n", pass ? "PASS" : "FAIL", id, name.c_str(),
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

fs::path artifacts_dir() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / "bayescount_acceptance";
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// The sweep trainer configuration shared by criteria 7 and 8.
TrainConfig sweep_trainer() {
  TrainConfig tc;
  tc.epochs = 12;
  tc.learning_rate = 3e-3;
  tc.batch_size = 8;
  return tc;
}

// ---- criterion 1: posterior normalization --------------------------------

void criterion_1() {
  Timer timer;
  Rng rng(1001);
  double max_err = 0.0;
  for (int it = 0; it < 1000; ++it) {
    const Scene s = testutil::random_scene(rng, 32, 50);
    const LossConfig cfg = testutil::random_config(rng, s, 0.1, 64.0);
    const PosteriorBlock block = posterior(s, cfg, {0, s.cell_count()});
    for (Index m = 0; m < block.probs.cols(); ++m) {
      double sum = 0.0;
      for (Index l = 0; l < block.probs.rows(); ++l) sum += block.probs(l, m);
      max_err = std::max(max_err, std::abs(sum - 1.0));
    }
  }
  const double secs = timer.seconds();
  report(1, "posterior normalization",
         max_err < 1e-12 && secs < 10.0,
         "1000 instances, max |sum - 1| = " + fmt("%.2e", max_err) + ", " + fmt("%.1f", secs) +
             " s < 10 s");
}

// ---- criterion 2: count identity ------------------------------------------

void criterion_2() {
  Timer timer;
  Rng rng(1002);
  double max_rel = 0.0;
  for (int it = 0; it < 1000; ++it) {
    const Scene s = testutil::random_scene(rng, 32, 50);
    const LossConfig cfg = testutil::random_config(rng, s, 0.1, 64.0);
    DensityGrid d = testutil::random_density(rng, s.height, s.width);
    if (it % 7 == 0) d.values.setZero();
    const ExpectedCounts counts = expected_counts(s, d, cfg);
    const double total = total_count(d);
    max_rel = std::max(max_rel, std::abs(counts.total() - total) / std::max(1.0, std::abs(total)));
  }
  const double secs = timer.seconds();
  report(2, "count identity",
         max_rel < 1e-9 && secs < 30.0,
         "1000 instances, max rel err = " + fmt("%.2e", max_rel) + ", " + fmt("%.1f", secs) +
             " s < 30 s");
}

// ---- criterion 3: oracle equivalence --------------------------------------

void criterion_3() {
  Rng rng(1003);
  double max_post = 0.0;
  double max_count = 0.0;
  for (int it = 0; it < 200; ++it) {
    const Scene s = testutil::random_scene(rng, 32, 20);
    const LossConfig cfg = testutil::random_config(rng, s, 1.0, 32.0);
    const DensityGrid d = testutil::random_density(rng, s.height, s.width);
    const oracle::DensePosterior ref = oracle::posterior_dense(s, cfg);

    // random two-way tiling of the pixel range
    const Index M = s.cell_count();
    const Index cut = rng.uniform_int(0, M);
    const PosteriorBlock left = posterior(s, cfg, {0, cut});
    const PosteriorBlock right = posterior(s, cfg, {cut, M});
    for (Index m = 0; m < M; ++m) {
      for (Index l = 0; l < ref.labels; ++l) {
        const double mine = m < cut ? left.probs(l, m) : right.probs(l, m - cut);
        max_post = std::max(max_post,
                            std::abs(mine - static_cast<double>(ref.p[l][m])));
      }
    }

    const ExpectedCounts counts = expected_counts(s, d, cfg);
    const auto ref_counts = oracle::expected_counts_dense(s, d, cfg);
    for (Index n = 0; n < s.head_count(); ++n) {
      const double r = static_cast<double>(ref_counts[static_cast<std::size_t>(n)]);
      max_count = std::max(max_count, std::abs(counts.per_head[n] - r) / std::max(1.0, std::abs(r)));
    }
    if (cfg.background) {
      const double r = static_cast<double>(ref_counts[static_cast<std::size_t>(s.head_count())]);
      max_count = std::max(max_count, std::abs(counts.background - r) / std::max(1.0, std::abs(r)));
    }
  }
  report(3, "oracle equivalence",
         max_post < 1e-12 && max_count < 1e-12,
         "200 instances, max posterior err = " + fmt("%.2e", max_post) +
             ", max count err = " + fmt("%.2e", max_count));
}

// ---- criterion 4: gradient checks -----------------------------------------

bool near_l1_kink(const Scene& s, const DensityGrid& d, const LossConfig& cfg, double eps) {
  const ExpectedCounts counts = expected_counts(s, d, cfg);
  for (Index n = 0; n < counts.per_head.size(); ++n) {
    if (std::abs(1.0 - counts.per_head[n]) < eps) return true;
  }
  return cfg.background && std::abs(counts.background) < eps;
}

template <class LossFn>
double grid_fd_error(const LossFn& loss_fn, DensityGrid d, double h = 1e-6) {
  const LossValue analytic = loss_fn(d);
  double worst = 0.0;
  for (Index m = 0; m < d.values.size(); ++m) {
    const double save = d.values.data()[m];
    d.values.data()[m] = save + h;
    const double up = loss_fn(d).value;
    d.values.data()[m] = save - h;
    const double down = loss_fn(d).value;
    d.values.data()[m] = save;
    const double fd = (up - down) / (2.0 * h);
    const double an = analytic.gradient.data()[m];
    worst = std::max(worst, std::abs(fd - an) / std::max({1.0, std::abs(fd), std::abs(an)}));
  }
  return worst;
}

void criterion_4() {
  Rng rng(1004);

  // (a) loss gradients w.r.t. the density grid
  double worst_grid = 0.0;
  int checked = 0;
  while (checked < 30) {
    const Scene s = testutil::random_scene(rng, 8, 6);
    DensityGrid d = testutil::random_density(rng, s.height, s.width);
    d.values.array() += 0.05;
    LossConfig cfg;
    cfg.sigma = rng.uniform(2.0, 16.0);
    cfg.background = checked % 2 == 1;
    if (near_l1_kink(s, d, cfg, 1e-5)) continue;
    worst_grid = std::max(
        worst_grid, grid_fd_error([&](const DensityGrid& g) { return bayes_loss(s, g, cfg); }, d));
    const DensityGrid gt = baseline_density(s, BaselineKernel::fixed(rng.uniform(0.5, 2.0)));
    worst_grid = std::max(
        worst_grid, grid_fd_error([&](const DensityGrid& g) { return baseline_loss(gt, g); }, d));
    ++checked;
  }

  // (b) end-to-end parameter gradients through the model
  double worst_param = 0.0;
  for (int it = 0; it < 21; ++it) {
    const ToyModel model = ToyModel::init(300 + static_cast<std::uint64_t>(it));
    Grid input(8, 8);
    for (Index m = 0; m < input.size(); ++m) input.data()[m] = rng.uniform(0.0, 1.0);
    Scene s;
    s.height = 8;
    s.width = 8;
    const Index n = rng.uniform_int(1, 4);
    for (Index k = 0; k < n; ++k) {
      s.points.push_back({rng.uniform(0.0, 8.0), rng.uniform(0.0, 8.0)});
    }
    LossConfig cfg;
    cfg.sigma = 3.0;
    cfg.background = it % 3 == 2;
    const DensityGrid gt = baseline_density(s, BaselineKernel::fixed(1.0));
    const auto loss_fn = [&](const DensityGrid& est) {
      switch (it % 3) {
        case 0: return baseline_loss(gt, est);
        default: return bayes_loss(s, est, cfg);
      }
    };

    ForwardCache cache;
    const DensityGrid est = forward(model, input, &cache);
    const Eigen::VectorXd analytic = backward(model, input, loss_fn(est).gradient, &cache);
    const double scale = std::max(1e-8, analytic.cwiseAbs().maxCoeff());
    Eigen::VectorXd flat = model.to_flat();
    const double h = 1e-6;
    for (Index k = 0; k < flat.size(); ++k) {
      const double save = flat[k];
      flat[k] = save + h;
      const double up = loss_fn(forward(ToyModel::from_flat(flat), input)).value;
      flat[k] = save - h;
      const double down = loss_fn(forward(ToyModel::from_flat(flat), input)).value;
      flat[k] = save;
      const double fd = (up - down) / (2.0 * h);
      const double err = std::abs(fd - analytic[k]) /
                         std::max({1e-3 * scale, std::abs(fd), std::abs(analytic[k])});
      worst_param = std::max(worst_param, err);
    }
  }

  report(4, "gradient checks",
         worst_grid < 1e-6 && worst_param < 1e-4,
         "grid losses max rel err = " + fmt("%.2e", worst_grid) +
             " < 1e-6; end-to-end (21 instances) max rel err = " + fmt("%.2e", worst_param) +
             " < 1e-4");
}

// ---- criterion 5: pinned worked values ------------------------------------

void criterion_5() {
  bool pass = true;
  std::string detail;

  {
    LossConfig cfg;
    cfg.sigma = 8.0;
    Scene s;
    s.height = 1;
    s.width = 9;
    s.points = {{0.5, 0.5}, {0.5, 8.5}};  // cell (0,0) sees logits (0, -0.5)
    const PosteriorBlock block = posterior(s, cfg, {0, 1});
    pass = pass && std::abs(block.probs(0, 0) - 0.622459) < 1e-5 &&
           std::abs(block.probs(1, 0) - 0.377541) < 1e-5;
    detail += "posterior (" + fmt("%.6f", block.probs(0, 0)) + ", " +
              fmt("%.6f", block.probs(1, 0)) + ")";
  }
  {
    LossConfig cfg;
    cfg.sigma = 8.0;
    cfg.background = true;
    cfg.margin = 16.0;
    cfg.margin_is_fraction = false;
    Scene s;
    s.height = 1;
    s.width = 17;
    s.points = {{0.5, 0.5}};  // cell (0,16) sees logits (-2, 0)
    const PosteriorBlock block = posterior(s, cfg, {16, 17});
    pass = pass && std::abs(block.probs(1, 0) - 0.880797) < 1e-5 &&
           std::abs(block.probs(0, 0) - 0.119203) < 1e-5;
    detail += "; background (" + fmt("%.6f", block.probs(1, 0)) + ", " +
              fmt("%.6f", block.probs(0, 0)) + ")";
  }
  {
    LossConfig cfg;
    cfg.sigma = 8.0;
    cfg.background = true;
    cfg.margin = 4.0;
    cfg.margin_is_fraction = false;
    Scene s;
    s.height = 1;
    s.width = 3;
    s.points = {{0.5, 1.5}};
    DensityGrid d;
    d.values.resize(1, 3);
    d.values << 0.2, 0.5, 0.1;
    const LossValue lv = bayes_loss(s, d, cfg);
    pass = pass && std::abs(lv.value - 0.95942) < 1e-5;
    detail += "; 1x3 loss " + fmt("%.5f", lv.value);
  }
  report(5, "pinned worked values", pass, detail + "; tolerance 1e-5");
}

// ---- criterion 6: desk-scale learning -------------------------------------

Dataset g_benchmark;  // generated once, reused by criteria 6-8

void criterion_6() {
  Timer timer;
  g_benchmark = make_benchmark(BenchmarkSpec::synth_v1());
  TrainConfig tc;
  tc.loss = LossKind::bayes_plus;
  tc.loss_cfg.sigma = 8.0;
  tc.loss_cfg.margin = 0.15;
  tc.loss_cfg.margin_is_fraction = true;
  tc.epochs = 50;
  tc.learning_rate = 3e-3;
  tc.batch_size = 8;
  tc.seed = 7;
  const TrainResult result = train(g_benchmark.train, tc, nullptr);
  const MetricsReport report_metrics = evaluate_model(result.model, g_benchmark.test);
  const double secs = timer.seconds();
  const bool pass =
      report_metrics.mae <= 1.5 && report_metrics.mse <= 2.5 && secs <= 300.0;
  report(6, "desk-scale learning (bayes+, sigma=8, d-frac 0.15, seed 7)", pass,
         "heldout mae = " + fmt("%.3f", report_metrics.mae) + " (target <= 1.5), mse = " +
             fmt("%.3f", report_metrics.mse) + " (target <= 2.5), " + fmt("%.0f", secs) +
             " s <= 300 s");
}

// ---- criteria 7/8: trend sweeps -------------------------------------------

std::map<std::pair<std::string, LossKind>, double> mean_mae_by_setting(
    const std::vector<SweepRow>& rows) {
  std::map<std::pair<std::string, LossKind>, std::pair<double, int>> acc;
  for (const auto& r : rows) {
    auto& slot = acc[{r.setting, r.loss}];
    slot.first += r.mae;
    slot.second += 1;
  }
  std::map<std::pair<std::string, LossKind>, double> out;
  for (const auto& [key, slot] : acc) out[key] = slot.first / slot.second;
  return out;
}

std::vector<SweepRow> g_sigma_rows;

void criterion_7() {
  Timer timer;
  SweepConfig cfg;
  cfg.kind = SweepKind::sigma;
  cfg.settings = {1.0, 2.0, 4.0, 8.0, 16.0};
  cfg.losses = {LossKind::baseline, LossKind::bayes};
  cfg.seeds = {1, 2, 3};
  cfg.base_train = sweep_trainer();
  g_sigma_rows = run_sweep(cfg);
  write_sweep_csv(g_sigma_rows, artifacts_dir() / "sigma_sweep.csv");

  const auto means = mean_mae_by_setting(g_sigma_rows);
  double lo_base = 1e300, hi_base = 0.0, lo_bayes = 1e300, hi_bayes = 0.0;
  for (const auto& [key, mae] : means) {
    if (key.second == LossKind::baseline) {
      lo_base = std::min(lo_base, mae);
      hi_base = std::max(hi_base, mae);
    } else {
      lo_bayes = std::min(lo_bayes, mae);
      hi_bayes = std::max(hi_bayes, mae);
    }
  }
  const double spread_base = (hi_base - lo_base) / lo_base;
  const double spread_bayes = (hi_bayes - lo_bayes) / lo_bayes;
  const double secs = timer.seconds();
  report(7, "sigma-robustness trend (sigma in {1,2,4,8,16}, 3 seeds)",
         spread_bayes <= spread_base && secs <= 1800.0,
         "mean-MAE spread: bayes " + fmt("%.3f", spread_bayes) + " <= baseline " +
             fmt("%.3f", spread_base) + "; " + fmt("%.0f", secs) + " s <= 1800 s");
}

void criterion_8() {
  SweepConfig cfg;
  cfg.kind = SweepKind::noise;
  cfg.settings = {0.0, 0.02, 0.04};
  cfg.losses = {LossKind::baseline, LossKind::bayes};
  cfg.seeds = {1, 2, 3};
  cfg.base_train = sweep_trainer();
  cfg.noise_sigma = 4.0;
  const auto rows = run_sweep(cfg);
  write_sweep_csv(rows, artifacts_dir() / "noise_sweep.csv");

  const auto means = mean_mae_by_setting(rows);
  const double base_deg = means.at({"0.04", LossKind::baseline}) - means.at({"0", LossKind::baseline});
  const double bayes_deg = means.at({"0.04", LossKind::bayes}) - means.at({"0", LossKind::bayes});
  report(8, "noise-robustness trend (deviations {0%,2%,4%}, 3 seeds)",
         bayes_deg <= base_deg,
         "mean-MAE degradation 0% -> 4%: bayes " + fmt("%+.3f", bayes_deg) + " <= baseline " +
             fmt("%+.3f", base_deg));
}

// ---- criterion 9: empty-image rule ----------------------------------------

void criterion_9() {
  Rng rng(1009);
  bool pass = true;
  double checked_total = 0.0;
  for (int it = 0; it < 50; ++it) {
    Scene s;
    s.height = rng.uniform_int(1, 16);
    s.width = rng.uniform_int(1, 16);
    DensityGrid d = testutil::random_density(rng, s.height, s.width);
    if (it % 5 == 0) d.values.setZero();
    const LossConfig cfg = testutil::random_config(rng, s, 0.5, 32.0, false);
    const LossValue lv = bayes_loss(s, d, cfg);
    const double total = total_count(d);
    checked_total += total;
    if (lv.value != total) pass = false;  // exact equality
    const double want_g = total > 0.0 ? 1.0 : 0.0;
    for (Index m = 0; m < lv.gradient.size(); ++m) {
      if (lv.gradient.data()[m] != want_g) pass = false;
    }
  }
  report(9, "empty-image rule", pass,
         "50 N=0 scenes: loss == total count exactly, gradient == sign grid");
}

// ---- criterion 10: format round trips --------------------------------------

void criterion_10() {
  Rng rng(1010);
  bool pass = true;
  std::string why;
  const fs::path dir = artifacts_dir();

  {
    const Scene s = testutil::random_scene(rng, 40, 15, 0);
    const fs::path p = dir / "scene.json";
    write_scene(s, p);
    const std::string a = slurp(p);
    write_scene(read_scene(p), p);
    if (slurp(p) != a) {
      pass = false;
      why += " scene-json;";
    }
  }
  {
    DensityGrid d = testutil::random_density(rng, 9, 6, 4.0);
    d.stride = 2;
    const fs::path p = dir / "grid.pdens";
    write_density(d, p);
    const std::string a = slurp(p);
    const DensityGrid back = read_density(p);
    write_density(back, p);
    bool ok = slurp(p) == a && back.stride == 2;
    for (Index m = 0; ok && m < d.values.size(); ++m) {
      ok = back.values.data()[m] == d.values.data()[m];
    }
    if (!ok) {
      pass = false;
      why += " density;";
    }
  }
  {
    const ToyModel m = ToyModel::init(4242);
    const fs::path p = dir / "model.bckpt";
    save_checkpoint(m, p);
    const std::string a = slurp(p);
    const ToyModel back = load_checkpoint(p);
    save_checkpoint(back, p);
    if (slurp(p) != a || (m.to_flat() - back.to_flat()).cwiseAbs().maxCoeff() != 0.0) {
      pass = false;
      why += " checkpoint;";
    }
  }
  {
    const fs::path p = dir / "sigma_sweep.csv";  // written by criterion 7
    const std::string a = slurp(p);
    const fs::path q = dir / "sweep_rt.csv";
    write_sweep_csv(read_sweep_csv(p), q);
    if (slurp(q) != a || a.empty()) {
      pass = false;
      why += " sweep-csv;";
    }
  }
  {
    Scene s;
    s.height = 24;
    s.width = 32;
    s.points = {{6.0, 8.0}, {15.0, 20.0}, {18.5, 9.0}};
    LossConfig cfg;
    cfg.sigma = 4.0;
    cfg.background = true;
    const Grid ent = entropy_map(s, cfg);
    const fs::path p = dir / "entropy.pgm";
    write_pgm_normalized(ent, p);
    const std::string bytes = slurp(p);
    const std::string header = "P5\n32 24\n255\n";
    const PgmBounds b = read_pgm_bounds(p);
    const double cap = std::log(double(s.head_count() + 1));
    if (bytes.substr(0, header.size()) != header ||
        bytes.size() != header.size() + static_cast<std::size_t>(s.cell_count()) || b.min < 0.0 ||
        b.max > cap + 1e-12 || !(b.max > b.min)) {
      pass = false;
      why += " pgm;";
    }
  }
  report(10, "format round trips", pass,
         pass ? "scene json, density, checkpoint, sweep csv byte-identical; pgm valid P5 with bounds"
              : ("failed:" + why));
}

}  // namespace

int main() {
  std::printf("acceptance artifacts: %s\n", artifacts_dir().c_str());
  Timer total;
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  criterion_9();
  criterion_10();
  std::printf("%d/10 criteria passed in %.0f s\n", 10 - g_failures, total.seconds());
  return g_failures;
}
