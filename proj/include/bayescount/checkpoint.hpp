#pragma once

#include <filesystem>

#include "bayescount/model.hpp"

namespace bayescount {

/// Checkpoint file: a text shape manifest followed by the flat parameter
/// vector as little-endian binary doubles.
///
///   BCKPT 1
///   conv1_w 8 1 3 3
///   conv1_b 8
///   conv2_w 8 8 3 3
///   conv2_b 8
///   head_w 1 8 1 1
///   head_b 1
///   DATA
///   <673 x float64>
void save_checkpoint(const ToyModel& model, const std::filesystem::path& path);
ToyModel load_checkpoint(const std::filesystem::path& path);

}  // namespace bayescount
