#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "llql/nn.hpp"

namespace llql {

/// A set of named networks sharing one state normalizer, plus free-form
/// metadata (environment, step size, seed, run id, role).
///
/// On-disk layout (all integers little-endian):
///   bytes 0..7   magic "LLQLMDL1"
///   bytes 8..15  uint64 length N of the JSON header
///   next N bytes UTF-8 JSON header
///   remainder    float64 parameters, little-endian, in header order
/// The header lists {"name", "layer_sizes", "offset", "count"} per network,
/// with offset/count in doubles relative to the start of the blob, and the
/// normalizer mean/std as JSON arrays. See docs/model_format.md.
struct ModelBundle {
  nlohmann::json metadata = nlohmann::json::object();
  Normalizer normalizer;
  std::vector<std::pair<std::string, Mlp>> nets;

  [[nodiscard]] const Mlp& net(const std::string& name) const;
  [[nodiscard]] bool has(const std::string& name) const;
};

void save_bundle(const ModelBundle& bundle, const std::filesystem::path& path);
[[nodiscard]] ModelBundle load_bundle(const std::filesystem::path& path);

}  // namespace llql
