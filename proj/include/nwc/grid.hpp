#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nwc/errors.hpp"
#include "nwc/tensor.hpp"

namespace nwc {

struct GridShape {
  int height = 0;
  int width = 0;
  double cell_size_km = 4.5;

  void validate() const {
    if (height < 1 || width < 1)
      throw ValidationError("GridShape: height and width must be >= 1");
    if (cell_size_km <= 0)
      throw ValidationError("GridShape: cell_size_km must be > 0");
  }

  std::size_t cells() const {
    return static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
  }

  bool operator==(const GridShape&) const = default;
};

// One timestamped binary cloud mask. Cells are one byte each, value 0 or 1.
struct CloudGrid {
  GridShape shape;
  std::int64_t timestamp = 0;  // UTC epoch seconds
  std::vector<std::uint8_t> mask;

  CloudGrid() = default;

  CloudGrid(GridShape s, std::int64_t ts, std::vector<std::uint8_t> m)
      : shape(s), timestamp(ts), mask(std::move(m)) {
    shape.validate();
    if (mask.size() != shape.cells())
      throw ValidationError("CloudGrid: mask size does not match shape");
    for (std::size_t i = 0; i < mask.size(); ++i)
      if (mask[i] > 1)
        throw ValidationError("CloudGrid: non-binary cell at index " +
                              std::to_string(i));
  }

  std::uint8_t at(int r, int c) const {
    return mask[static_cast<std::size_t>(r) * shape.width + c];
  }
};

struct SequenceSpec {
  int t_in = 4;
  int t_out = 6;
  std::int64_t cadence_s = 900;

  void validate() const {
    if (t_in < 1) throw ValidationError("SequenceSpec: t_in must be >= 1");
    if (t_out < 1) throw ValidationError("SequenceSpec: t_out must be >= 1");
    if (cadence_s <= 0)
      throw ValidationError("SequenceSpec: cadence_s must be > 0");
  }

  int total_frames() const { return t_in + t_out; }

  bool operator==(const SequenceSpec&) const = default;
};

// A gap-free input window plus target window at fixed cadence.
struct SequenceSample {
  std::vector<CloudGrid> inputs;
  std::vector<CloudGrid> targets;

  const GridShape& grid_shape() const { return inputs.front().shape; }
  std::int64_t base_timestamp() const { return inputs.back().timestamp; }
  std::int64_t first_timestamp() const { return inputs.front().timestamp; }
  std::int64_t last_timestamp() const { return targets.back().timestamp; }
};

// t_out probability fields, one per horizon k = 1..t_out.
struct ForecastVolume {
  GridShape shape;
  std::int64_t base_timestamp = 0;  // timestamp of last input frame
  std::int64_t cadence_s = 900;
  Tensor horizons;  // (t_out, H, W), all values in [0,1]

  int t_out() const { return horizons.rank() == 3 ? horizons.dim(0) : 0; }

  void validate() const {
    shape.validate();
    if (horizons.rank() != 3 || horizons.dim(1) != shape.height ||
        horizons.dim(2) != shape.width)
      throw ValidationError("ForecastVolume: horizon dims do not match shape");
    for (std::size_t i = 0; i < horizons.size(); ++i)
      if (!(horizons[i] >= 0.0 && horizons[i] <= 1.0))
        throw ValidationError("ForecastVolume: value outside [0,1] at index " +
                              std::to_string(i));
  }
};

// Threshold convention: a value exactly equal to the threshold maps to 1.
inline std::vector<std::uint8_t> binarize(const Tensor& field,
                                          double threshold = 0.5) {
  std::vector<std::uint8_t> out(field.size());
  for (std::size_t i = 0; i < field.size(); ++i) {
    double v = field[i];
    if (!(v >= 0.0 && v <= 1.0))
      throw ValidationError("binarize: value " + std::to_string(v) +
                            " outside [0,1] at cell " + std::to_string(i));
    out[i] = v >= threshold ? 1 : 0;
  }
  return out;
}

inline ForecastVolume persistence_forecast(const SequenceSample& sample,
                                           int t_out = 0,
                                           std::int64_t cadence_s = 900) {
  if (sample.inputs.empty())
    throw ValidationError("persistence_forecast: sample has no input frames");
  if (t_out == 0) t_out = static_cast<int>(sample.targets.size());
  if (t_out < 1)
    throw ValidationError("persistence_forecast: t_out must be >= 1");
  const CloudGrid& last = sample.inputs.back();
  if (sample.inputs.size() >= 2)
    cadence_s = last.timestamp - sample.inputs[sample.inputs.size() - 2].timestamp;

  ForecastVolume volume;
  volume.shape = last.shape;
  volume.base_timestamp = last.timestamp;
  volume.cadence_s = cadence_s;
  volume.horizons = Tensor({t_out, last.shape.height, last.shape.width});
  const std::size_t cells = last.shape.cells();
  for (int k = 0; k < t_out; ++k)
    for (std::size_t i = 0; i < cells; ++i)
      volume.horizons[static_cast<std::size_t>(k) * cells + i] =
          static_cast<double>(last.mask[i]);
  return volume;
}

struct SequenceValidation {
  std::optional<SequenceSample> sample;
  std::string rejection;  // empty iff sample is set

  bool ok() const { return sample.has_value(); }
};

// Accepts exactly t_in + t_out frames of one shape at uniform cadence.
// Rejections state the first violated constraint.
inline SequenceValidation validate_sequence(const std::vector<CloudGrid>& grids,
                                            const SequenceSpec& spec) {
  spec.validate();
  SequenceValidation result;
  if (static_cast<int>(grids.size()) != spec.total_frames()) {
    result.rejection = "wrong frame count: expected " +
                       std::to_string(spec.total_frames()) + ", got " +
                       std::to_string(grids.size());
    return result;
  }
  for (std::size_t i = 1; i < grids.size(); ++i) {
    if (!(grids[i].shape == grids[0].shape)) {
      result.rejection = "shape mismatch at frame " + std::to_string(i);
      return result;
    }
  }
  for (std::size_t i = 1; i < grids.size(); ++i) {
    std::int64_t dt = grids[i].timestamp - grids[i - 1].timestamp;
    if (dt != spec.cadence_s) {
      result.rejection = "cadence gap between frames " + std::to_string(i - 1) +
                         " and " + std::to_string(i) + " (dt=" +
                         std::to_string(dt) + "s, expected " +
                         std::to_string(spec.cadence_s) + "s)";
      return result;
    }
  }
  SequenceSample sample;
  sample.inputs.assign(grids.begin(), grids.begin() + spec.t_in);
  sample.targets.assign(grids.begin() + spec.t_in, grids.end());
  result.sample = std::move(sample);
  return result;
}

// Input stack (t_in, H, W) as {0,1} doubles, ready for a model forward pass.
inline Tensor input_stack(const SequenceSample& sample) {
  const GridShape& shape = sample.grid_shape();
  const int t_in = static_cast<int>(sample.inputs.size());
  Tensor x({t_in, shape.height, shape.width});
  const std::size_t cells = shape.cells();
  for (int t = 0; t < t_in; ++t)
    for (std::size_t i = 0; i < cells; ++i)
      x[static_cast<std::size_t>(t) * cells + i] =
          static_cast<double>(sample.inputs[t].mask[i]);
  return x;
}

inline Tensor target_stack(const SequenceSample& sample) {
  const GridShape& shape = sample.grid_shape();
  const int t_out = static_cast<int>(sample.targets.size());
  Tensor y({t_out, shape.height, shape.width});
  const std::size_t cells = shape.cells();
  for (int t = 0; t < t_out; ++t)
    for (std::size_t i = 0; i < cells; ++i)
      y[static_cast<std::size_t>(t) * cells + i] =
          static_cast<double>(sample.targets[t].mask[i]);
  return y;
}

}  // namespace nwc
