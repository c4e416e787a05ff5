// Command-line front end: data generation, training, evaluation,
// visualization, and parameter sweeps for point-supervised density counting.

#include <CLI11.hpp>
#include <cinttypes>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "bayescount/checkpoint.hpp"
#include "bayescount/dataset.hpp"
#include "bayescount/errors.hpp"
#include "bayescount/io.hpp"
#include "bayescount/loss.hpp"
#include "bayescount/posterior.hpp"
#include "bayescount/sweep.hpp"
#include "bayescount/train.hpp"

namespace bc = bayescount;

namespace {

// distinct exit codes per failure class
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitParse = 4;
constexpr int kExitValidation = 5;

struct MarginFlags {
  double d_abs = -1.0;    // < 0: unset
  double d_frac = 0.15;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--d", d_abs, "background margin d in cells (overrides --d-frac)");
    cmd->add_option("--d-frac", d_frac, "margin d as a fraction of the shorter side")
        ->capture_default_str();
  }

  void apply(bc::LossConfig& cfg) const {
    if (d_abs > 0.0) {
      if (d_frac != 0.15) {
        std::cerr << "warning: both --d and --d-frac given; using absolute --d=" << d_abs << "\n";
      }
      cfg.margin = d_abs;
      cfg.margin_is_fraction = false;
    } else {
      cfg.margin = d_frac;
      cfg.margin_is_fraction = true;
    }
  }
};

void print_kv(const char* key, const std::string& value) {
  std::printf("  %s = %s\n", key, value.c_str());
}

std::string fmt_g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

void print_loss_config(const bc::LossConfig& cfg) {
  print_kv("sigma", fmt_g(cfg.sigma));
  print_kv("background", cfg.background ? "on" : "off");
  print_kv("margin", fmt_g(cfg.margin) +
                         (cfg.margin_is_fraction ? " (fraction of shorter side)" : " (cells)"));
  print_kv("distance", bc::to_string(cfg.distance));
}

std::string fmt_u64(std::uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%" PRIu64, v);
  return buf;
}

void write_trace_csv(const std::vector<bc::EpochStats>& trace, const std::string& path) {
  std::string out = "epoch,train_loss,heldout_mae,heldout_mse\n";
  for (const auto& row : trace) {
    out += std::to_string(row.epoch);
    out += ',';
    out += bc::format_exact(row.train_loss);
    out += ',';
    out += row.heldout_mae ? bc::format_exact(*row.heldout_mae) : "nan";
    out += ',';
    out += row.heldout_mse ? bc::format_exact(*row.heldout_mse) : "nan";
    out += '\n';
  }
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw bc::io_error("cannot open " + path + " for writing");
  std::fwrite(out.data(), 1, out.size(), f);
  std::fclose(f);
}

bc::DistanceKind parse_distance(const std::string& name) {
  if (name == "abs") return bc::DistanceKind::abs;
  if (name == "squared") return bc::DistanceKind::squared;
  throw bc::validation_error("unknown distance '" + name + "' (expected abs|squared)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"point-supervised density counting toolkit"};
  app.require_subcommand(1);

  // ---- gen ----------------------------------------------------------------
  auto* gen = app.add_subcommand("gen", "generate a synthetic benchmark dataset");
  struct {
    std::string out;
    std::string spec_name = "synth-v1";
    bc::BenchmarkSpec spec;
  } gen_opt;
  gen->add_option("--out", gen_opt.out, "output directory")->required();
  gen->add_option("--spec", gen_opt.spec_name, "benchmark preset name")->capture_default_str();
  gen->add_option("--seed", gen_opt.spec.scene_spec.seed, "scene stream seed");
  gen->add_option("--height", gen_opt.spec.scene_spec.height, "grid height in cells");
  gen->add_option("--width", gen_opt.spec.scene_spec.width, "grid width in cells");
  gen->add_option("--count-min", gen_opt.spec.scene_spec.count_min, "minimum head count");
  gen->add_option("--count-max", gen_opt.spec.scene_spec.count_max, "maximum head count");
  gen->add_option("--min-sep", gen_opt.spec.scene_spec.min_separation, "minimum head separation");
  gen->add_option("--radius-min", gen_opt.spec.scene_spec.radius_min, "minimum blob radius");
  gen->add_option("--radius-max", gen_opt.spec.scene_spec.radius_max, "maximum blob radius");
  gen->add_option("--noise", gen_opt.spec.scene_spec.noise_level, "additive uniform noise level");
  gen->add_option("--train-count", gen_opt.spec.train_count, "training pair count");
  gen->add_option("--test-count", gen_opt.spec.test_count, "test pair count");
  gen->callback([&] {
    if (gen_opt.spec_name != "synth-v1") {
      throw bc::validation_error("unknown benchmark preset '" + gen_opt.spec_name + "'");
    }
    gen_opt.spec.name = gen_opt.spec_name;
    std::printf("config: gen\n");
    print_kv("out", gen_opt.out);
    print_kv("spec", gen_opt.spec.name);
    print_kv("grid", std::to_string(gen_opt.spec.scene_spec.height) + "x" +
                         std::to_string(gen_opt.spec.scene_spec.width));
    print_kv("counts", std::to_string(gen_opt.spec.scene_spec.count_min) + ".." +
                           std::to_string(gen_opt.spec.scene_spec.count_max));
    print_kv("min_separation", fmt_g(gen_opt.spec.scene_spec.min_separation));
    print_kv("radius", fmt_g(gen_opt.spec.scene_spec.radius_min) + ".." +
                           fmt_g(gen_opt.spec.scene_spec.radius_max));
    print_kv("noise", fmt_g(gen_opt.spec.scene_spec.noise_level));
    print_kv("split", std::to_string(gen_opt.spec.train_count) + " train + " +
                          std::to_string(gen_opt.spec.test_count) + " test");
    print_kv("seed", fmt_u64(gen_opt.spec.scene_spec.seed));
    bc::write_dataset(gen_opt.spec, gen_opt.out);
    std::printf("wrote %d train and %d test pairs under %s\n", gen_opt.spec.train_count,
                gen_opt.spec.test_count, gen_opt.out.c_str());
  });

  // ---- train --------------------------------------------------------------
  auto* train_cmd = app.add_subcommand("train", "train the toy estimator on a dataset");
  struct {
    std::string data;
    std::string out = "model.bckpt";
    std::string trace = "trace.csv";
    std::string loss = "bayes+";
    std::string distance = "abs";
    MarginFlags margin;
    bc::TrainConfig cfg;
  } train_opt;
  train_cmd->add_option("--data", train_opt.data, "dataset directory (from gen)")->required();
  train_cmd->add_option("--out", train_opt.out, "checkpoint output path")->capture_default_str();
  train_cmd->add_option("--trace", train_opt.trace, "loss-trace CSV path")->capture_default_str();
  train_cmd->add_option("--loss", train_opt.loss, "training loss: baseline|bayes|bayes+")
      ->capture_default_str();
  train_cmd->add_option("--sigma", train_opt.cfg.loss_cfg.sigma, "Gaussian width in cells")
      ->capture_default_str();
  train_cmd->add_option("--distance", train_opt.distance, "count distance: abs|squared")
      ->capture_default_str();
  train_opt.margin.add_to(train_cmd);
  train_cmd->add_option("--epochs", train_opt.cfg.epochs, "training epochs")->capture_default_str();
  train_cmd->add_option("--lr", train_opt.cfg.learning_rate, "learning rate")->capture_default_str();
  train_cmd->add_option("--batch", train_opt.cfg.batch_size, "batch size")->capture_default_str();
  train_cmd->add_option("--seed", train_opt.cfg.seed, "training seed")->capture_default_str();
  train_cmd->callback([&] {
    train_opt.cfg.loss = bc::loss_kind_from_string(train_opt.loss);
    train_opt.cfg.loss_cfg.distance = parse_distance(train_opt.distance);
    train_opt.margin.apply(train_opt.cfg.loss_cfg);
    std::printf("config: train\n");
    print_kv("data", train_opt.data);
    print_kv("out", train_opt.out);
    print_kv("trace", train_opt.trace);
    print_kv("loss", bc::to_string(train_opt.cfg.loss));
    print_loss_config(train_opt.cfg.loss_cfg);
    print_kv("epochs", std::to_string(train_opt.cfg.epochs));
    print_kv("lr", fmt_g(train_opt.cfg.learning_rate));
    print_kv("batch", std::to_string(train_opt.cfg.batch_size));
    print_kv("seed", fmt_u64(train_opt.cfg.seed));

    const bc::Dataset data = bc::load_dataset(train_opt.data);
    const bc::TrainResult result = bc::train(data.train, train_opt.cfg, &data.test);
    bc::save_checkpoint(result.model, train_opt.out);
    write_trace_csv(result.trace, train_opt.trace);
    if (result.final_heldout) {
      std::printf("final heldout mae=%s mse=%s\n", bc::format_exact(result.final_heldout->mae).c_str(),
                  bc::format_exact(result.final_heldout->mse).c_str());
    }
    std::printf("checkpoint written to %s\n", train_opt.out.c_str());
  });

  // ---- eval ---------------------------------------------------------------
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a dataset split");
  struct {
    std::string checkpoint;
    std::string data;
    std::string out;
    std::string split = "test";
  } eval_opt;
  eval_cmd->add_option("--checkpoint", eval_opt.checkpoint, "model checkpoint")->required();
  eval_cmd->add_option("--data", eval_opt.data, "dataset directory")->required();
  eval_cmd->add_option("--out", eval_opt.out, "optional per-image CSV path");
  eval_cmd->add_option("--split", eval_opt.split, "dataset split: test|train")->capture_default_str();
  eval_cmd->callback([&] {
    std::printf("config: eval\n");
    print_kv("checkpoint", eval_opt.checkpoint);
    print_kv("data", eval_opt.data);
    print_kv("split", eval_opt.split);
    if (eval_opt.split != "test" && eval_opt.split != "train") {
      throw bc::validation_error("unknown split '" + eval_opt.split + "'");
    }
    const bc::ToyModel model = bc::load_checkpoint(eval_opt.checkpoint);
    const bc::Dataset data = bc::load_dataset(eval_opt.data);
    const auto& samples = eval_opt.split == "test" ? data.test : data.train;
    const bc::MetricsReport report = bc::evaluate_model(model, samples);
    if (!eval_opt.out.empty()) {
      std::string csv = "index,gt_count,est_count\n";
      for (std::size_t k = 0; k < report.per_image.size(); ++k) {
        csv += std::to_string(k) + ',' + bc::format_exact(report.per_image[k].first) + ',' +
               bc::format_exact(report.per_image[k].second) + '\n';
      }
      std::FILE* f = std::fopen(eval_opt.out.c_str(), "wb");
      if (!f) throw bc::io_error("cannot open " + eval_opt.out + " for writing");
      std::fwrite(csv.data(), 1, csv.size(), f);
      std::fclose(f);
    }
    std::printf("images=%lld mae=%s mse=%s\n", static_cast<long long>(report.image_count()),
                bc::format_exact(report.mae).c_str(), bc::format_exact(report.mse).c_str());
  });

  // ---- entropy ------------------------------------------------------------
  auto* ent_cmd = app.add_subcommand("entropy", "render the posterior entropy map of a scene");
  struct {
    std::string scene;
    std::string out;
    MarginFlags margin;
    bc::LossConfig cfg;
  } ent_opt;
  ent_cmd->add_option("--scene", ent_opt.scene, "scene JSON file")->required();
  ent_cmd->add_option("--out", ent_opt.out, "output PGM path")->required();
  ent_cmd->add_option("--sigma", ent_opt.cfg.sigma, "Gaussian width in cells")->capture_default_str();
  ent_cmd->add_flag("--background", ent_opt.cfg.background, "model a background label");
  ent_opt.margin.add_to(ent_cmd);
  ent_cmd->callback([&] {
    ent_opt.margin.apply(ent_opt.cfg);
    std::printf("config: entropy\n");
    print_kv("scene", ent_opt.scene);
    print_kv("out", ent_opt.out);
    print_loss_config(ent_opt.cfg);
    const bc::Scene scene = bc::read_scene(ent_opt.scene);
    const bc::Grid ent = bc::entropy_map(scene, ent_opt.cfg);
    bc::write_pgm_normalized(ent, ent_opt.out);
    std::printf("entropy map written to %s (bounds sidecar alongside)\n", ent_opt.out.c_str());
  });

  // ---- density ------------------------------------------------------------
  auto* dens_cmd = app.add_subcommand("density", "emit an estimated or ground-truth density map");
  struct {
    std::string mode = "estimate";
    std::string checkpoint;
    std::string input;
    std::string scene;
    std::string out;
    std::string pgm;
    double sigma = 8.0;
    bool adaptive = false;
    double beta = 0.3;
  } dens_opt;
  dens_cmd->add_option("--mode", dens_opt.mode, "estimate|baseline-gt")->capture_default_str();
  dens_cmd->add_option("--checkpoint", dens_opt.checkpoint, "model checkpoint (estimate mode)");
  dens_cmd->add_option("--input", dens_opt.input, "input grid file (estimate mode)");
  dens_cmd->add_option("--scene", dens_opt.scene, "scene JSON file (baseline-gt mode)");
  dens_cmd->add_option("--out", dens_opt.out, "output density file")->required();
  dens_cmd->add_option("--pgm", dens_opt.pgm, "optional PGM rendering path");
  dens_cmd->add_option("--sigma", dens_opt.sigma, "fixed kernel width (baseline-gt mode)")
      ->capture_default_str();
  dens_cmd->add_flag("--adaptive", dens_opt.adaptive, "geometry-adaptive kernel (baseline-gt mode)");
  dens_cmd->add_option("--beta", dens_opt.beta, "adaptive kernel scale")->capture_default_str();
  dens_cmd->callback([&] {
    std::printf("config: density\n");
    print_kv("mode", dens_opt.mode);
    print_kv("out", dens_opt.out);
    bc::DensityGrid result;
    if (dens_opt.mode == "estimate") {
      if (dens_opt.checkpoint.empty() || dens_opt.input.empty()) {
        throw bc::validation_error("estimate mode needs --checkpoint and --input");
      }
      print_kv("checkpoint", dens_opt.checkpoint);
      print_kv("input", dens_opt.input);
      const bc::ToyModel model = bc::load_checkpoint(dens_opt.checkpoint);
      const bc::DensityGrid input = bc::read_density(dens_opt.input);
      result = bc::forward(model, input.values);
      result.stride = input.stride;
    } else if (dens_opt.mode == "baseline-gt") {
      if (dens_opt.scene.empty()) throw bc::validation_error("baseline-gt mode needs --scene");
      print_kv("scene", dens_opt.scene);
      print_kv("kernel", dens_opt.adaptive
                             ? "adaptive beta=" + fmt_g(dens_opt.beta)
                             : "fixed sigma=" + fmt_g(dens_opt.sigma));
      const bc::Scene scene = bc::read_scene(dens_opt.scene);
      const bc::BaselineKernel kernel = dens_opt.adaptive
                                            ? bc::BaselineKernel::adaptive(dens_opt.beta)
                                            : bc::BaselineKernel::fixed(dens_opt.sigma);
      result = bc::baseline_density(scene, kernel);
    } else {
      throw bc::validation_error("unknown density mode '" + dens_opt.mode + "'");
    }
    bc::write_density(result, dens_opt.out);
    std::printf("total count %s written to %s\n", bc::format_exact(bc::total_count(result)).c_str(),
                dens_opt.out.c_str());
    if (!dens_opt.pgm.empty()) bc::write_pgm_normalized(result.values, dens_opt.pgm);
  });

  // ---- sweep --------------------------------------------------------------
  auto* sweep_cmd = app.add_subcommand("sweep", "run a parameter sweep of training runs");
  struct {
    std::string kind = "sigma";
    std::string out;
    std::vector<double> sigmas{1.0, 2.0, 4.0, 8.0, 16.0};
    std::vector<double> deviations{0.0, 0.02, 0.04};
    std::vector<std::string> losses{"baseline", "bayes"};
    std::vector<std::uint64_t> seeds{1, 2, 3};
    std::string distance = "abs";
    MarginFlags margin;
    bc::SweepConfig cfg;
  } sweep_opt;
  sweep_cmd->add_option("--kind", sweep_opt.kind, "sigma|noise|loss-compare")->capture_default_str();
  sweep_cmd->add_option("--out", sweep_opt.out, "output CSV path")->required();
  sweep_cmd->add_option("--sigmas", sweep_opt.sigmas, "sigma grid (sigma sweeps)")
      ->delimiter(',')
      ->capture_default_str();
  sweep_cmd->add_option("--deviations", sweep_opt.deviations, "deviation grid (noise sweeps)")
      ->delimiter(',')
      ->capture_default_str();
  sweep_cmd->add_option("--losses", sweep_opt.losses, "losses to train")
      ->delimiter(',')
      ->capture_default_str();
  sweep_cmd->add_option("--seeds", sweep_opt.seeds, "training seeds")
      ->delimiter(',')
      ->capture_default_str();
  sweep_cmd->add_option("--epochs", sweep_opt.cfg.base_train.epochs, "epochs per run")
      ->capture_default_str();
  sweep_cmd->add_option("--lr", sweep_opt.cfg.base_train.learning_rate, "learning rate")
      ->capture_default_str();
  sweep_cmd->add_option("--batch", sweep_opt.cfg.base_train.batch_size, "batch size")
      ->capture_default_str();
  sweep_cmd->add_option("--sigma", sweep_opt.cfg.base_train.loss_cfg.sigma,
                        "sigma for loss-compare sweeps")
      ->capture_default_str();
  sweep_cmd->add_option("--noise-sigma", sweep_opt.cfg.noise_sigma, "sigma for noise sweeps")
      ->capture_default_str();
  sweep_cmd->add_option("--distance", sweep_opt.distance, "count distance: abs|squared")
      ->capture_default_str();
  sweep_opt.margin.add_to(sweep_cmd);
  sweep_cmd->add_option("--threads", sweep_opt.cfg.threads,
                        "worker cap (0: BAYESCOUNT_THREADS or hardware)");
  sweep_cmd->callback([&] {
    sweep_opt.cfg.kind = bc::sweep_kind_from_string(sweep_opt.kind);
    sweep_opt.cfg.settings =
        sweep_opt.cfg.kind == bc::SweepKind::noise ? sweep_opt.deviations : sweep_opt.sigmas;
    sweep_opt.cfg.losses.clear();
    for (const auto& name : sweep_opt.losses) {
      sweep_opt.cfg.losses.push_back(bc::loss_kind_from_string(name));
    }
    sweep_opt.cfg.seeds = sweep_opt.seeds;
    sweep_opt.cfg.base_train.loss_cfg.distance = parse_distance(sweep_opt.distance);
    sweep_opt.margin.apply(sweep_opt.cfg.base_train.loss_cfg);

    std::printf("config: sweep\n");
    print_kv("kind", bc::to_string(sweep_opt.cfg.kind));
    print_kv("out", sweep_opt.out);
    std::string settings;
    for (double s : sweep_opt.cfg.settings) {
      if (!settings.empty()) settings += ",";
      settings += bc::format_setting(s);
    }
    print_kv("settings", sweep_opt.cfg.kind == bc::SweepKind::loss_compare ? "-" : settings);
    std::string losses;
    for (const bc::LossKind l : sweep_opt.cfg.losses) {
      if (!losses.empty()) losses += ",";
      losses += bc::to_string(l);
    }
    print_kv("losses", losses);
    std::string seeds;
    for (const std::uint64_t s : sweep_opt.cfg.seeds) {
      if (!seeds.empty()) seeds += ",";
      seeds += fmt_u64(s);
    }
    print_kv("seeds", seeds);
    print_kv("epochs", std::to_string(sweep_opt.cfg.base_train.epochs));
    print_kv("lr", fmt_g(sweep_opt.cfg.base_train.learning_rate));
    print_kv("batch", std::to_string(sweep_opt.cfg.base_train.batch_size));
    print_kv("noise_sigma", fmt_g(sweep_opt.cfg.noise_sigma));
    print_kv("threads", std::to_string(bc::resolve_thread_count(sweep_opt.cfg.threads)));

    const std::vector<bc::SweepRow> rows = bc::run_sweep(sweep_opt.cfg);
    bc::write_sweep_csv(rows, sweep_opt.out);
    std::printf("%zu sweep rows written to %s\n", rows.size(), sweep_opt.out.c_str());
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  } catch (const bc::parse_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitParse;
  } catch (const bc::io_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const bc::validation_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
