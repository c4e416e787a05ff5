#pragma once

#include <filesystem>
#include <string>

#include "bayescount/density.hpp"
#include "bayescount/scene.hpp"

namespace bayescount {

/// Scene file: a JSON object
///   {"width": W, "height": H, "stride": s, "points": [[row, col], ...]}
/// in grid-cell units. `stride` defaults to 1 when absent. Writing is
/// canonical, so write(read(write(s))) is byte-identical.
Scene read_scene(const std::filesystem::path& path);
void write_scene(const Scene& scene, const std::filesystem::path& path);

std::string scene_to_json(const Scene& scene);
Scene scene_from_json(const std::string& text);

/// Density file: a text header line `PDENS 1 <H> <W> <stride>` followed by
/// H lines of W space-separated decimals at 17 significant digits, which
/// round-trips doubles exactly.
DensityGrid read_density(const std::filesystem::path& path);
void write_density(const DensityGrid& grid, const std::filesystem::path& path);

/// Binary PGM (P5, maxval 255) of a grid, min-max normalized to 0..255.
/// The normalization bounds land in a `<path>.bounds.txt` sidecar so the
/// image stays quantitatively interpretable.
void write_pgm_normalized(const Grid& values, const std::filesystem::path& path);

/// Reads back the sidecar written by write_pgm_normalized.
struct PgmBounds {
  double min = 0.0;
  double max = 0.0;
};
PgmBounds read_pgm_bounds(const std::filesystem::path& pgm_path);

/// Formats a double with 17 significant digits (exact round trip).
std::string format_exact(double v);

}  // namespace bayescount
