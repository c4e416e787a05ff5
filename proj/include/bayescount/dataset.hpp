#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "bayescount/synth.hpp"

namespace bayescount {

/// A named, frozen benchmark: a scene recipe plus the train/test split
/// sizes. Scene k of the stream is generate_scene(scene_spec, k); the train
/// split takes indices 0..train_count-1, the test split the following
/// test_count indices.
struct BenchmarkSpec {
  std::string name = "synth-v1";
  SynthSpec scene_spec;
  int train_count = 200;
  int test_count = 50;

  static BenchmarkSpec synth_v1() { return {}; }
};

struct Dataset {
  std::vector<Sample> train;
  std::vector<Sample> test;
};

/// Generates the full benchmark in memory.
Dataset make_benchmark(const BenchmarkSpec& spec);

/// Writes scene/input pairs under dir/train and dir/test plus a
/// dir/manifest.json describing the spec and listing every pair.
void write_dataset(const BenchmarkSpec& spec, const std::filesystem::path& dir);

/// Loads a dataset previously written by write_dataset (or anything with a
/// compatible manifest).
Dataset load_dataset(const std::filesystem::path& dir);

}  // namespace bayescount
