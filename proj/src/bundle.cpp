#include "advbench/bundle.hpp"

#include "advbench/dataset_io.hpp"
#include "advbench/errors.hpp"
#include "json.hpp"

namespace advbench {

namespace {

using nlohmann::json;

std::vector<unsigned char> encode_floats(const std::vector<double>& values) {
  std::vector<unsigned char> out;
  out.reserve(values.size() * 4);
  for (double v : values) le::put_f32(out, static_cast<float>(v));
  return out;
}

std::vector<double> decode_floats(const ModelBundle& bundle, const std::string& name, std::size_t count) {
  const auto it = bundle.payloads.find(name);
  if (it == bundle.payloads.end()) throw LoadError("missing payload '" + name + "'");
  if (it->second.size() != count * 4) {
    throw LoadError("payload '" + name + "' has " + std::to_string(it->second.size()) + " bytes, expected " +
                    std::to_string(count * 4));
  }
  std::vector<double> values(count);
  for (std::size_t k = 0; k < count; ++k) values[k] = le::get_f32(it->second.data() + 4 * k);
  return values;
}

}  // namespace

ModelBundle save_model(const Model& model) {
  ModelBundle bundle;
  json manifest;
  manifest["format"] = "advbench-model";
  manifest["version"] = 1;
  manifest["architecture"] = to_string(model.architecture());
  manifest["activation"] = to_string(model.activation());
  manifest["input_dim"] = model.input_dim();
  manifest["num_classes"] = model.num_classes();
  json layers = json::array();
  for (std::size_t l = 0; l < model.layers().size(); ++l) {
    const auto& layer = model.layers()[l];
    const std::string wname = "layer" + std::to_string(l) + "_weight.f32";
    const std::string bname = "layer" + std::to_string(l) + "_bias.f32";
    bundle.payloads[wname] = encode_floats(layer.weight);
    bundle.payloads[bname] = encode_floats(layer.bias);
    layers.push_back({{"inputs", layer.inputs}, {"outputs", layer.outputs}, {"weight", wname}, {"bias", bname}});
  }
  manifest["layers"] = layers;
  bundle.manifest = manifest.dump(2) + "\n";
  return bundle;
}

Model load_model(const ModelBundle& bundle) {
  json manifest;
  try {
    manifest = json::parse(bundle.manifest);
  } catch (const json::exception& e) {
    throw LoadError(std::string("manifest is not valid JSON: ") + e.what());
  }
  try {
    const auto arch_name = manifest.at("architecture").get<std::string>();
    Architecture arch;
    Activation act;
    try {
      arch = architecture_from_string(arch_name);
      act = activation_from_string(manifest.value("activation", std::string("none")));
    } catch (const ConfigError& e) {
      throw LoadError(e.what());
    }
    const auto input_dim = manifest.at("input_dim").get<std::size_t>();
    const auto num_classes = manifest.at("num_classes").get<std::size_t>();
    std::vector<DenseLayer> layers;
    for (const auto& entry : manifest.at("layers")) {
      DenseLayer layer;
      layer.inputs = entry.at("inputs").get<std::size_t>();
      layer.outputs = entry.at("outputs").get<std::size_t>();
      layer.weight = decode_floats(bundle, entry.at("weight").get<std::string>(), layer.inputs * layer.outputs);
      layer.bias = decode_floats(bundle, entry.at("bias").get<std::string>(), layer.outputs);
      layers.push_back(std::move(layer));
    }
    if (layers.empty()) throw LoadError("manifest lists no layers");
    if (layers.front().inputs != input_dim) throw LoadError("first layer width does not match input_dim");
    if (layers.back().outputs != num_classes) {
      throw LoadError("manifest declares " + std::to_string(num_classes) + " classes but the output layer has " +
                      std::to_string(layers.back().outputs) + " rows");
    }
    try {
      return Model(arch, act, std::move(layers));
    } catch (const ConfigError& e) {
      throw LoadError(e.what());
    }
  } catch (const json::exception& e) {
    throw LoadError(std::string("malformed manifest: ") + e.what());
  }
}

void write_bundle(const ModelBundle& bundle, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  write_text(dir / kManifestName, bundle.manifest);
  for (const auto& [name, bytes] : bundle.payloads) write_file(dir / name, bytes);
}

ModelBundle read_bundle(const std::filesystem::path& dir) {
  ModelBundle bundle;
  try {
    bundle.manifest = read_text(dir / kManifestName);
    const auto manifest = json::parse(bundle.manifest);
    for (const auto& entry : manifest.at("layers")) {
      for (const char* key : {"weight", "bias"}) {
        const auto name = entry.at(key).get<std::string>();
        bundle.payloads[name] = read_file(dir / name);
      }
    }
  } catch (const IoError& e) {
    throw LoadError(e.what());
  } catch (const json::exception& e) {
    throw LoadError(std::string("malformed manifest: ") + e.what());
  }
  return bundle;
}

}  // namespace advbench
