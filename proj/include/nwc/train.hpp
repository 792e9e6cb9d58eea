#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include <json.hpp>

#include "nwc/errors.hpp"
#include "nwc/grid.hpp"
#include "nwc/models.hpp"
#include "nwc/nwc1.hpp"
#include "nwc/params_io.hpp"
#include "nwc/rng.hpp"
#include "nwc/synthetic.hpp"

namespace nwc {

enum class LossKind { mse, bce };

inline LossKind loss_from_string(const std::string& s) {
  if (s == "mse") return LossKind::mse;
  if (s == "bce") return LossKind::bce;
  throw ConfigError("unknown loss: " + s);
}

inline std::string to_string(LossKind k) {
  return k == LossKind::mse ? "mse" : "bce";
}

struct TrainConfig {
  int epochs = 20;
  int runs = 3;
  int batch_size = 8;
  double learning_rate = 1e-3;
  LossKind loss = LossKind::mse;
  std::uint64_t seed = 0;
  int max_steps = 0;  // 0 = no cap; used by short probes

  void validate() const {
    if (epochs < 1) throw ConfigError("TrainConfig: epochs must be >= 1");
    if (runs < 1) throw ConfigError("TrainConfig: runs must be >= 1");
    if (batch_size < 1) throw ConfigError("TrainConfig: batch_size must be >= 1");
    if (learning_rate <= 0) throw ConfigError("TrainConfig: learning_rate must be > 0");
  }
};

struct RunRecord {
  int run_index = 0;
  std::uint64_t seed = 0;
  std::vector<double> epoch_loss;
  std::string params_blob;      // path, empty if not persisted
  std::string params_manifest;
  double wall_seconds = 0;
  bool aborted = false;
  std::string abort_reason;
};

// Mean loss over all output values plus the matching gradient tensor.
inline double loss_and_grad(LossKind kind, const Tensor& output,
                            const Tensor& target, Tensor& grad) {
  const double n = static_cast<double>(output.size());
  grad = Tensor(output.shape());
  double loss = 0;
  if (kind == LossKind::mse) {
    for (std::size_t i = 0; i < output.size(); ++i) {
      const double d = output[i] - target[i];
      loss += d * d;
      grad[i] = 2.0 * d / n;
    }
  } else {
    constexpr double eps = 1e-12;
    for (std::size_t i = 0; i < output.size(); ++i) {
      const double y = std::clamp(output[i], eps, 1.0 - eps);
      const double t = target[i];
      loss += -(t * std::log(y) + (1.0 - t) * std::log(1.0 - y));
      grad[i] = (y - t) / (y * (1.0 - y)) / n;
    }
  }
  return loss / n;
}

class Adam {
 public:
  Adam(std::vector<Param*> params, double lr, double beta1 = 0.9,
       double beta2 = 0.999, double eps = 1e-8)
      : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (Param* p : params_) {
      m_.emplace_back(p->size(), 0.0);
      v_.emplace_back(p->size(), 0.0);
    }
  }

  void step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);
    for (std::size_t i = 0; i < params_.size(); ++i) {
      Param& p = *params_[i];
      for (std::size_t j = 0; j < p.size(); ++j) {
        const double g = p.grad[j];
        m_[i][j] = beta1_ * m_[i][j] + (1.0 - beta1_) * g;
        v_[i][j] = beta2_ * v_[i][j] + (1.0 - beta2_) * g * g;
        p.value[j] -= lr_ * (m_[i][j] / bc1) / (std::sqrt(v_[i][j] / bc2) + eps_);
      }
    }
  }

 private:
  std::vector<Param*> params_;
  double lr_, beta1_, beta2_, eps_;
  int t_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

namespace detail {

// Fisher-Yates with our own Rng so the permutation is toolchain-stable.
inline void shuffle_indices(std::vector<std::size_t>& idx, Rng& rng) {
  for (std::size_t i = idx.size(); i > 1; --i)
    std::swap(idx[i - 1],
              idx[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);
}

}  // namespace detail

// One seeded run: every epoch visits every sample exactly once in a seeded
// shuffle. Returns the trained model through `model`.
inline RunRecord train_run(Model& model, const Dataset& data,
                           const TrainConfig& config, int run_index) {
  config.validate();
  if (data.samples.empty()) throw ConfigError("train: dataset is empty");

  RunRecord record;
  record.run_index = run_index;
  record.seed = config.seed + static_cast<std::uint64_t>(run_index);
  const auto start = std::chrono::steady_clock::now();

  std::vector<Tensor> inputs, targets;
  inputs.reserve(data.samples.size());
  targets.reserve(data.samples.size());
  for (const SequenceSample& sample : data.samples) {
    inputs.push_back(input_stack(sample));
    targets.push_back(target_stack(sample));
  }

  Adam optimizer(model.params(), config.learning_rate);
  std::vector<std::size_t> order(data.samples.size());
  std::iota(order.begin(), order.end(), 0);
  Rng shuffle_rng(Rng::split(record.seed, 0x51u));

  int steps = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    detail::shuffle_indices(order, shuffle_rng);
    double epoch_loss = 0;
    std::size_t seen = 0;
    for (std::size_t pos = 0; pos < order.size();) {
      const std::size_t batch_end =
          std::min(order.size(), pos + static_cast<std::size_t>(config.batch_size));
      model.zero_grad();
      double batch_loss = 0;
      for (std::size_t b = pos; b < batch_end; ++b) {
        const std::size_t i = order[b];
        Tensor output = model.forward(inputs[i]);
        Tensor grad;
        const double sample_loss =
            loss_and_grad(config.loss, output, targets[i], grad);
        // average over the batch
        const double scale = 1.0 / static_cast<double>(batch_end - pos);
        for (std::size_t g = 0; g < grad.size(); ++g) grad[g] *= scale;
        model.backward(grad);
        batch_loss += sample_loss;
        epoch_loss += sample_loss;
        ++seen;
      }
      batch_loss /= static_cast<double>(batch_end - pos);
      if (!std::isfinite(batch_loss)) {
        record.aborted = true;
        record.abort_reason = "non-finite loss at epoch " + std::to_string(epoch) +
                              ", step " + std::to_string(steps);
        record.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        return record;
      }
      optimizer.step();
      ++steps;
      pos = batch_end;
      if (config.max_steps > 0 && steps >= config.max_steps) break;
    }
    record.epoch_loss.push_back(epoch_loss / static_cast<double>(seen));
    if (config.max_steps > 0 && steps >= config.max_steps) break;
  }
  record.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return record;
}

// `runs` independent trainings differing only by seed. When out_dir is given,
// parameter blobs and a manifest are written there; wall-clock timings go to
// a separate file so reruns stay byte-identical.
inline std::vector<RunRecord> train(const ModelSpec& spec, const Dataset& data,
                                    const TrainConfig& config,
                                    const std::string& out_dir = "") {
  config.validate();
  spec.validate();
  if (!data.samples.empty()) {
    const GridShape& shape = data.shape;
    shape.validate();
  }

  namespace fs = std::filesystem;
  if (!out_dir.empty()) fs::create_directories(out_dir);

  std::vector<RunRecord> records;
  for (int run = 0; run < config.runs; ++run) {
    ModelSpec run_spec = spec;
    run_spec.seed = config.seed + static_cast<std::uint64_t>(run);
    auto model = build(run_spec, data.shape);
    RunRecord record = train_run(*model, data, config, run);
    if (!out_dir.empty() && !record.aborted) {
      const std::string run_dir = out_dir + "/run" + std::to_string(run);
      fs::create_directories(run_dir);
      record.params_blob = run_dir + "/params.bin";
      record.params_manifest = run_dir + "/params.json";
      save_params(*model, record.params_blob, record.params_manifest);
    }
    records.push_back(std::move(record));
  }

  if (!out_dir.empty()) {
    nlohmann::json manifest;
    manifest["family"] = to_string(spec.family);
    manifest["t_in"] = spec.t_in;
    manifest["t_out"] = spec.t_out;
    manifest["grid"] = {{"height", data.shape.height},
                        {"width", data.shape.width},
                        {"cell_size_km", data.shape.cell_size_km}};
    manifest["config"] = {{"epochs", config.epochs},
                          {"runs", config.runs},
                          {"batch_size", config.batch_size},
                          {"learning_rate", config.learning_rate},
                          {"loss", to_string(config.loss)},
                          {"seed", config.seed}};
    const std::vector<std::uint8_t> encoded = nwc1::encode(data);
    manifest["dataset_checksum"] = static_cast<std::uint32_t>(
        crc32(0L, encoded.data(), static_cast<uInt>(encoded.size())));
    manifest["runs_detail"] = nlohmann::json::array();
    nlohmann::json timing;
    timing["runs"] = nlohmann::json::array();
    for (const RunRecord& r : records) {
      manifest["runs_detail"].push_back({{"run", r.run_index},
                                         {"seed", r.seed},
                                         {"epoch_loss", r.epoch_loss},
                                         {"aborted", r.aborted},
                                         {"abort_reason", r.abort_reason}});
      timing["runs"].push_back({{"run", r.run_index},
                                {"wall_seconds", r.wall_seconds}});
    }
    std::ofstream mout(out_dir + "/manifest.json");
    mout << manifest.dump(2) << "\n";
    std::ofstream tout(out_dir + "/timing.json");
    tout << timing.dump(2) << "\n";
  }
  return records;
}

// Re-slice every sample to its last `t_in_new` input frames (targets unchanged).
inline Dataset reslice_depth(const Dataset& data, int t_in_new) {
  if (t_in_new < 1 || t_in_new > data.spec.t_in)
    throw ConfigError("reslice_depth: depth " + std::to_string(t_in_new) +
                      " exceeds available input frames (" +
                      std::to_string(data.spec.t_in) + ")");
  Dataset out;
  out.shape = data.shape;
  out.spec = data.spec;
  out.spec.t_in = t_in_new;
  out.samples.reserve(data.samples.size());
  for (const SequenceSample& sample : data.samples) {
    SequenceSample s;
    s.inputs.assign(sample.inputs.end() - t_in_new, sample.inputs.end());
    s.targets = sample.targets;
    out.samples.push_back(std::move(s));
  }
  return out;
}

}  // namespace nwc
