#include "bayescount/dataset.hpp"

#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>

#include "bayescount/errors.hpp"
#include "bayescount/io.hpp"

namespace bayescount {

namespace {

using nlohmann::json;

std::string pair_name(const char* split, int k, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s/%s_%04d.%s", split, ext[0] == 'j' ? "scene" : "input", k, ext);
  return buf;
}

void write_split(const BenchmarkSpec& spec, const std::filesystem::path& dir, const char* split,
                 int count, std::uint64_t index_base, json& entries) {
  std::filesystem::create_directories(dir / split);
  for (int k = 0; k < count; ++k) {
    const Sample s = generate_scene(spec.scene_spec, index_base + static_cast<std::uint64_t>(k));
    const std::string scene_rel = pair_name(split, k, "json");
    const std::string input_rel = pair_name(split, k, "pdens");
    write_scene(s.scene, dir / scene_rel);
    DensityGrid in;
    in.values = s.input;
    in.stride = s.scene.stride;
    write_density(in, dir / input_rel);
    entries.push_back({{"scene", scene_rel}, {"input", input_rel}});
  }
}

std::vector<Sample> load_split(const std::filesystem::path& dir, const json& entries) {
  std::vector<Sample> out;
  out.reserve(entries.size());
  for (const auto& e : entries) {
    Sample s;
    s.scene = read_scene(dir / e.at("scene").get<std::string>());
    const DensityGrid in = read_density(dir / e.at("input").get<std::string>());
    s.input = in.values;
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

Dataset make_benchmark(const BenchmarkSpec& spec) {
  if (spec.train_count < 0 || spec.test_count < 0) {
    throw validation_error("benchmark split sizes must be nonnegative");
  }
  Dataset d;
  d.train.reserve(static_cast<std::size_t>(spec.train_count));
  d.test.reserve(static_cast<std::size_t>(spec.test_count));
  for (int k = 0; k < spec.train_count; ++k) {
    d.train.push_back(generate_scene(spec.scene_spec, static_cast<std::uint64_t>(k)));
  }
  for (int k = 0; k < spec.test_count; ++k) {
    d.test.push_back(generate_scene(
        spec.scene_spec, static_cast<std::uint64_t>(spec.train_count) + static_cast<std::uint64_t>(k)));
  }
  return d;
}

void write_dataset(const BenchmarkSpec& spec, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  json train_entries = json::array();
  json test_entries = json::array();
  write_split(spec, dir, "train", spec.train_count, 0, train_entries);
  write_split(spec, dir, "test", spec.test_count, static_cast<std::uint64_t>(spec.train_count),
              test_entries);
  const json manifest = {
      {"benchmark", spec.name},
      {"spec",
       {{"height", spec.scene_spec.height},
        {"width", spec.scene_spec.width},
        {"count_min", spec.scene_spec.count_min},
        {"count_max", spec.scene_spec.count_max},
        {"min_separation", spec.scene_spec.min_separation},
        {"radius_min", spec.scene_spec.radius_min},
        {"radius_max", spec.scene_spec.radius_max},
        {"blob_amplitude", spec.scene_spec.blob_amplitude},
        {"noise_level", spec.scene_spec.noise_level},
        {"seed", spec.scene_spec.seed}}},
      {"train", train_entries},
      {"test", test_entries}};
  std::ofstream out(dir / "manifest.json", std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("cannot write " + (dir / "manifest.json").string());
  out << manifest.dump(2) << "\n";
  if (!out) throw io_error("failed writing " + (dir / "manifest.json").string());
}

Dataset load_dataset(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw io_error("cannot open " + (dir / "manifest.json").string());
  json manifest;
  try {
    in >> manifest;
  } catch (const json::exception& e) {
    throw parse_error("manifest.json: " + std::string(e.what()));
  }
  Dataset d;
  try {
    d.train = load_split(dir, manifest.at("train"));
    d.test = load_split(dir, manifest.at("test"));
  } catch (const json::exception& e) {
    throw parse_error("manifest.json: " + std::string(e.what()));
  }
  return d;
}

}  // namespace bayescount
