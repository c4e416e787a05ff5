#include "bayescount/checkpoint.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <string>

#include "bayescount/errors.hpp"

namespace bayescount {

namespace {

const char* kManifest =
    "BCKPT 1\n"
    "conv1_w 8 1 3 3\n"
    "conv1_b 8\n"
    "conv2_w 8 8 3 3\n"
    "conv2_b 8\n"
    "head_w 1 8 1 1\n"
    "head_b 1\n"
    "DATA\n";

}  // namespace

void save_checkpoint(const ToyModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("cannot open " + path.string() + " for writing");
  out << kManifest;
  const Eigen::VectorXd flat = model.to_flat();
  out.write(reinterpret_cast<const char*>(flat.data()),
            static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(flat.size())));
  if (!out) throw io_error("failed writing " + path.string());
}

ToyModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open " + path.string());
  const std::size_t manifest_len = std::strlen(kManifest);
  std::string header(manifest_len, '\0');
  in.read(header.data(), static_cast<std::streamsize>(manifest_len));
  if (!in || header != kManifest) {
    throw parse_error(path.string() + ": checkpoint manifest mismatch");
  }
  Eigen::VectorXd flat(kModelParameterCount);
  in.read(reinterpret_cast<char*>(flat.data()),
          static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(flat.size())));
  if (!in) throw parse_error(path.string() + ": truncated parameter data");
  char extra;
  if (in.read(&extra, 1)) throw parse_error(path.string() + ": trailing data");
  for (Index i = 0; i < flat.size(); ++i) {
    if (!std::isfinite(flat[i])) {
      throw validation_error(path.string() + ": non-finite parameter at index " + std::to_string(i));
    }
  }
  return ToyModel::from_flat(flat);
}

}  // namespace bayescount
