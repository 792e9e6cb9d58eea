#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "nwc/errors.hpp"
#include "nwc/models.hpp"

namespace nwc {

// Trained parameters on disk: a flat little-endian float32 blob plus a JSON
// manifest listing (name, shape, offset) per parameter. Offsets count floats.
inline void save_params(Model& model, const std::string& blob_path,
                        const std::string& manifest_path) {
  std::vector<float> blob;
  nlohmann::json manifest;
  manifest["dtype"] = "f32le";
  manifest["params"] = nlohmann::json::array();
  for (Param* p : model.params()) {
    nlohmann::json entry;
    entry["name"] = p->name;
    entry["shape"] = p->shape;
    entry["offset"] = blob.size();
    manifest["params"].push_back(entry);
    for (double v : p->value) blob.push_back(static_cast<float>(v));
  }
  manifest["total"] = blob.size();

  std::ofstream out(blob_path, std::ios::binary);
  if (!out) throw ConfigError("save_params: cannot write " + blob_path);
  out.write(reinterpret_cast<const char*>(blob.data()),
            static_cast<std::streamsize>(blob.size() * sizeof(float)));

  std::ofstream mout(manifest_path);
  if (!mout) throw ConfigError("save_params: cannot write " + manifest_path);
  mout << manifest.dump(2) << "\n";
}

inline void load_params(Model& model, const std::string& blob_path,
                        const std::string& manifest_path) {
  std::ifstream min(manifest_path);
  if (!min) throw ConfigError("load_params: cannot read " + manifest_path);
  nlohmann::json manifest = nlohmann::json::parse(min);

  std::ifstream in(blob_path, std::ios::binary);
  if (!in) throw ConfigError("load_params: cannot read " + blob_path);
  std::vector<char> raw((std::istreambuf_iterator<char>(in)),
                        std::istreambuf_iterator<char>());
  const std::size_t n_floats = raw.size() / sizeof(float);
  if (manifest["total"].get<std::size_t>() != n_floats)
    throw DecodeError(DecodeError::Code::truncated,
                      "load_params: blob size does not match manifest");
  std::vector<float> blob(n_floats);
  std::memcpy(blob.data(), raw.data(), raw.size());

  auto params = model.params();
  if (manifest["params"].size() != params.size())
    throw DecodeError(DecodeError::Code::bad_value,
                      "load_params: parameter count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& entry = manifest["params"][i];
    if (entry["name"].get<std::string>() != params[i]->name)
      throw DecodeError(DecodeError::Code::bad_value,
                        "load_params: parameter name mismatch at index " +
                            std::to_string(i));
    const std::size_t offset = entry["offset"].get<std::size_t>();
    if (offset + params[i]->size() > blob.size())
      throw DecodeError(DecodeError::Code::truncated,
                        "load_params: blob too short for " + params[i]->name);
    for (std::size_t j = 0; j < params[i]->size(); ++j)
      params[i]->value[j] = static_cast<double>(blob[offset + j]);
  }
}

}  // namespace nwc
