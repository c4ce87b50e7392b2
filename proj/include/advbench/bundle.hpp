#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "advbench/model.hpp"

namespace advbench {

/// A model on disk: `manifest.json` plus one raw float32 little-endian,
/// row-major payload per tensor. The manifest names the architecture,
/// activation, input dimension, class count, and for every layer its shape
/// and the weight/bias payload file names, in order.
struct ModelBundle {
  std::string manifest;
  std::map<std::string, std::vector<unsigned char>> payloads;
};

inline constexpr const char* kManifestName = "manifest.json";

ModelBundle save_model(const Model& model);
/// Throws LoadError on malformed manifests, unknown architectures, payload
/// byte lengths that disagree with the manifest, or inconsistent shapes.
Model load_model(const ModelBundle& bundle);

void write_bundle(const ModelBundle& bundle, const std::filesystem::path& dir);
ModelBundle read_bundle(const std::filesystem::path& dir);

inline void save_model(const Model& model, const std::filesystem::path& dir) { write_bundle(save_model(model), dir); }
inline Model load_model(const std::filesystem::path& dir) { return load_model(read_bundle(dir)); }

}  // namespace advbench
