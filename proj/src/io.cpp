#include "bayescount/io.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <vector>

#include "bayescount/errors.hpp"

namespace bayescount {

namespace {

using nlohmann::json;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (!in.good() && !in.eof()) throw io_error("failed reading " + path.string());
  return buf.str();
}

void write_file(const std::filesystem::path& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("cannot open " + path.string() + " for writing");
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw io_error("failed writing " + path.string());
}

}  // namespace

std::string format_exact(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

Scene scene_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw parse_error(std::string("scene JSON: ") + e.what());
  }
  if (!j.is_object()) throw parse_error("scene JSON: top level must be an object");
  Scene scene;
  try {
    scene.width = j.at("width").get<Index>();
    scene.height = j.at("height").get<Index>();
    scene.stride = j.contains("stride") ? j.at("stride").get<int>() : 1;
    for (const auto& p : j.at("points")) {
      if (!p.is_array() || p.size() != 2) {
        throw parse_error("scene JSON: each point must be a [row, col] pair");
      }
      scene.points.push_back({p[0].get<double>(), p[1].get<double>()});
    }
  } catch (const json::exception& e) {
    throw parse_error(std::string("scene JSON: ") + e.what());
  }
  validate(scene);
  return scene;
}

std::string scene_to_json(const Scene& scene) {
  validate(scene);
  json points = json::array();
  for (const auto& p : scene.points) points.push_back({p.row, p.col});
  const json j = {{"width", scene.width},
                  {"height", scene.height},
                  {"stride", scene.stride},
                  {"points", points}};
  return j.dump() + "\n";
}

Scene read_scene(const std::filesystem::path& path) { return scene_from_json(read_file(path)); }

void write_scene(const Scene& scene, const std::filesystem::path& path) {
  write_file(path, scene_to_json(scene));
}

DensityGrid read_density(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open " + path.string());
  std::string magic;
  int version = 0;
  Index height = 0, width = 0;
  int stride = 0;
  if (!(in >> magic >> version >> height >> width >> stride) || magic != "PDENS" || version != 1) {
    throw parse_error(path.string() + ": expected header 'PDENS 1 <H> <W> <stride>'");
  }
  if (height <= 0 || width <= 0 || stride <= 0) {
    throw validation_error(path.string() + ": nonpositive dimensions in header");
  }
  DensityGrid grid;
  grid.stride = stride;
  grid.values.resize(height, width);
  for (Index m = 0; m < grid.values.size(); ++m) {
    double v;
    if (!(in >> v)) throw parse_error(path.string() + ": truncated value section");
    grid.values.data()[m] = v;
  }
  std::string extra;
  if (in >> extra) throw parse_error(path.string() + ": trailing data after value section");
  validate(grid);
  return grid;
}

void write_density(const DensityGrid& grid, const std::filesystem::path& path) {
  validate(grid);
  std::string out;
  out.reserve(static_cast<std::size_t>(grid.values.size()) * 10 + 64);
  char header[64];
  std::snprintf(header, sizeof(header), "PDENS 1 %" PRIdPTR " %" PRIdPTR " %d\n",
                static_cast<intptr_t>(grid.height()), static_cast<intptr_t>(grid.width()),
                grid.stride);
  out += header;
  for (Index i = 0; i < grid.height(); ++i) {
    for (Index j = 0; j < grid.width(); ++j) {
      if (j) out += ' ';
      out += format_exact(grid.values(i, j));
    }
    out += '\n';
  }
  write_file(path, out);
}

void write_pgm_normalized(const Grid& values, const std::filesystem::path& path) {
  if (values.size() == 0) throw validation_error("cannot write an empty PGM");
  const double lo = values.minCoeff();
  const double hi = values.maxCoeff();
  if (!std::isfinite(lo) || !std::isfinite(hi)) {
    throw validation_error("PGM input holds non-finite values");
  }
  const double scale = hi > lo ? 255.0 / (hi - lo) : 0.0;

  std::string out;
  char header[64];
  std::snprintf(header, sizeof(header), "P5\n%" PRIdPTR " %" PRIdPTR "\n255\n",
                static_cast<intptr_t>(values.cols()), static_cast<intptr_t>(values.rows()));
  out += header;
  out.reserve(out.size() + static_cast<std::size_t>(values.size()));
  for (Index m = 0; m < values.size(); ++m) {
    const double v = (values.data()[m] - lo) * scale;
    const long q = std::lround(std::min(255.0, std::max(0.0, v)));
    out += static_cast<char>(static_cast<unsigned char>(q));
  }
  write_file(path, out);

  std::string sidecar = "min " + format_exact(lo) + "\nmax " + format_exact(hi) + "\n";
  write_file(path.string() + ".bounds.txt", sidecar);
}

PgmBounds read_pgm_bounds(const std::filesystem::path& pgm_path) {
  std::ifstream in(pgm_path.string() + ".bounds.txt");
  if (!in) throw io_error("cannot open bounds sidecar for " + pgm_path.string());
  std::string key_min, key_max;
  PgmBounds b;
  if (!(in >> key_min >> b.min >> key_max >> b.max) || key_min != "min" || key_max != "max") {
    throw parse_error("malformed bounds sidecar for " + pgm_path.string());
  }
  return b;
}

}  // namespace bayescount
