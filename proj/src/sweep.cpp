#include "bayescount/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "bayescount/errors.hpp"
#include "bayescount/rng.hpp"

namespace bayescount {

namespace {

constexpr std::uint64_t kPerturbStream = 0x6e6f6973;  // "nois"

struct RunSpec {
  std::size_t row_index;
  double setting;
  LossKind loss;
  std::uint64_t seed;
};

}  // namespace

const char* to_string(SweepKind k) {
  switch (k) {
    case SweepKind::sigma: return "sigma";
    case SweepKind::noise: return "noise";
    case SweepKind::loss_compare: return "loss-compare";
  }
  return "?";
}

SweepKind sweep_kind_from_string(const std::string& name) {
  if (name == "sigma") return SweepKind::sigma;
  if (name == "noise") return SweepKind::noise;
  if (name == "loss-compare" || name == "loss_compare") return SweepKind::loss_compare;
  throw validation_error("unknown sweep kind '" + name + "' (expected sigma|noise|loss-compare)");
}

std::string format_setting(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

int resolve_thread_count(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("BAYESCOUNT_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

std::vector<SweepRow> run_sweep(const SweepConfig& cfg) {
  if (cfg.losses.empty()) throw validation_error("sweep needs at least one loss");
  if (cfg.seeds.empty()) throw validation_error("sweep needs at least one seed");
  const bool has_settings = cfg.kind != SweepKind::loss_compare;
  if (has_settings && cfg.settings.empty()) {
    throw validation_error("sweep needs at least one setting");
  }

  const Dataset data = make_benchmark(cfg.benchmark);

  std::vector<RunSpec> runs;
  const std::size_t n_settings = has_settings ? cfg.settings.size() : 1;
  runs.reserve(n_settings * cfg.losses.size() * cfg.seeds.size());
  for (std::size_t si = 0; si < n_settings; ++si) {
    for (const LossKind loss : cfg.losses) {
      for (const std::uint64_t seed : cfg.seeds) {
        runs.push_back({runs.size(), has_settings ? cfg.settings[si] : 0.0, loss, seed});
      }
    }
  }

  std::vector<SweepRow> rows(runs.size());
  std::atomic<std::size_t> next{0};

  const auto worker = [&]() {
    for (;;) {
      const std::size_t r = next.fetch_add(1);
      if (r >= runs.size()) return;
      const RunSpec& run = runs[r];

      TrainConfig tc = cfg.base_train;
      tc.seed = run.seed;
      tc.loss = run.loss;
      switch (cfg.kind) {
        case SweepKind::sigma: tc.loss_cfg.sigma = run.setting; break;
        case SweepKind::noise: tc.loss_cfg.sigma = cfg.noise_sigma; break;
        case SweepKind::loss_compare: break;
      }

      const std::vector<Sample>* train_set = &data.train;
      std::vector<Sample> perturbed;
      if (cfg.kind == SweepKind::noise && run.setting > 0.0) {
        perturbed.reserve(data.train.size());
        for (std::size_t k = 0; k < data.train.size(); ++k) {
          Sample s;
          s.input = data.train[k].input;
          s.scene = perturb_annotations(data.train[k].scene, run.setting,
                                        mix_seed(mix_seed(run.seed, kPerturbStream), k));
          perturbed.push_back(std::move(s));
        }
        train_set = &perturbed;
      }

      const TrainResult result = train(*train_set, tc, nullptr);
      const MetricsReport report = evaluate_model(result.model, data.test);

      SweepRow& row = rows[run.row_index];
      row.setting = has_settings ? format_setting(run.setting) : cfg.benchmark.name;
      row.loss = run.loss;
      row.seed = run.seed;
      row.mae = report.mae;
      row.mse = report.mse;
    }
  };

  const int threads = std::min<int>(resolve_thread_count(cfg.threads),
                                    static_cast<int>(runs.size()));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return rows;
}

void write_sweep_csv(const std::vector<SweepRow>& rows, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("cannot open " + path.string() + " for writing");
  out << "setting,loss,seed,mae,mse\n";
  for (const auto& r : rows) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%s,%s,%llu,%.6g,%.6g\n", r.setting.c_str(), to_string(r.loss),
                  static_cast<unsigned long long>(r.seed), r.mae, r.mse);
    out << buf;
  }
  if (!out) throw io_error("failed writing " + path.string());
}

std::vector<SweepRow> read_sweep_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "setting,loss,seed,mae,mse") {
    throw parse_error(path.string() + ": missing sweep CSV header");
  }
  std::vector<SweepRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string setting, loss, seed, mae, mse;
    if (!std::getline(ss, setting, ',') || !std::getline(ss, loss, ',') ||
        !std::getline(ss, seed, ',') || !std::getline(ss, mae, ',') || !std::getline(ss, mse)) {
      throw parse_error(path.string() + ": malformed row '" + line + "'");
    }
    SweepRow row;
    row.setting = setting;
    row.loss = loss_kind_from_string(loss);
    try {
      row.seed = std::stoull(seed);
      row.mae = std::stod(mae);
      row.mse = std::stod(mse);
    } catch (const std::exception&) {
      throw parse_error(path.string() + ": malformed numbers in row '" + line + "'");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace bayescount
