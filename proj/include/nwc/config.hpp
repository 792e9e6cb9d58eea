#pragma once

#include <string>

#include <json.hpp>

#include "nwc/models.hpp"
#include "nwc/train.hpp"

namespace nwc {

inline nlohmann::json to_json(const ModelSpec& spec) {
  nlohmann::json j;
  j["family"] = to_string(spec.family);
  j["t_in"] = spec.t_in;
  j["t_out"] = spec.t_out;
  j["seed"] = spec.seed;
  j["stacked"] = {{"kernels", spec.stacked.kernels},
                  {"hidden_channels", spec.stacked.hidden_channels}};
  j["unet"] = {{"depth", spec.unet.depth},
               {"base_channels", spec.unet.base_channels},
               {"use_residual", spec.unet.use_residual},
               {"activation", to_string(spec.unet.activation)},
               {"bottleneck_dense", spec.unet.bottleneck_dense}};
  j["rec"] = {{"hidden_channels", spec.rec.hidden_channels},
              {"state_channels", spec.rec.state_channels}};
  j["reduce"] = {{"lstm_hidden", spec.reduce.lstm_hidden}};
  return j;
}

inline ModelSpec model_spec_from_json(const nlohmann::json& j) {
  ModelSpec spec;
  spec.family = family_from_string(j.at("family").get<std::string>());
  spec.t_in = j.value("t_in", spec.t_in);
  spec.t_out = j.value("t_out", spec.t_out);
  spec.seed = j.value("seed", spec.seed);
  if (j.contains("stacked")) {
    spec.stacked.kernels =
        j["stacked"].value("kernels", spec.stacked.kernels);
    spec.stacked.hidden_channels =
        j["stacked"].value("hidden_channels", spec.stacked.hidden_channels);
  }
  if (j.contains("unet")) {
    spec.unet.depth = j["unet"].value("depth", spec.unet.depth);
    spec.unet.base_channels =
        j["unet"].value("base_channels", spec.unet.base_channels);
    spec.unet.use_residual =
        j["unet"].value("use_residual", spec.unet.use_residual);
    spec.unet.activation = activation_from_string(
        j["unet"].value("activation", to_string(spec.unet.activation)));
    spec.unet.bottleneck_dense =
        j["unet"].value("bottleneck_dense", spec.unet.bottleneck_dense);
  }
  if (j.contains("rec")) {
    spec.rec.hidden_channels =
        j["rec"].value("hidden_channels", spec.rec.hidden_channels);
    spec.rec.state_channels =
        j["rec"].value("state_channels", spec.rec.state_channels);
  }
  if (j.contains("reduce"))
    spec.reduce.lstm_hidden =
        j["reduce"].value("lstm_hidden", spec.reduce.lstm_hidden);
  return spec;
}

inline nlohmann::json to_json(const TrainConfig& config) {
  return {{"epochs", config.epochs},
          {"runs", config.runs},
          {"batch_size", config.batch_size},
          {"learning_rate", config.learning_rate},
          {"loss", to_string(config.loss)},
          {"seed", config.seed},
          {"max_steps", config.max_steps}};
}

inline TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig config;
  config.epochs = j.value("epochs", config.epochs);
  config.runs = j.value("runs", config.runs);
  config.batch_size = j.value("batch_size", config.batch_size);
  config.learning_rate = j.value("learning_rate", config.learning_rate);
  config.loss = loss_from_string(j.value("loss", to_string(config.loss)));
  config.seed = j.value("seed", config.seed);
  config.max_steps = j.value("max_steps", config.max_steps);
  return config;
}

}  // namespace nwc
