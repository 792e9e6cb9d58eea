#pragma once

#include <algorithm>
#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "nwc/errors.hpp"
#include "nwc/grid.hpp"

namespace nwc {

// A 16-class cloud-type classification raster, pre-gridded.
struct CloudTypeRaster {
  int height = 0;
  int width = 0;
  std::int64_t timestamp = 0;
  std::vector<std::uint8_t> classes;  // values in [0,15]

  void validate() const {
    if (height < 1 || width < 1)
      throw ValidationError("CloudTypeRaster: height and width must be >= 1");
    if (classes.size() != static_cast<std::size_t>(height) * width)
      throw ValidationError("CloudTypeRaster: class array size mismatch");
    for (std::uint8_t v : classes)
      if (v > 15)
        throw DecodeError(DecodeError::Code::bad_value,
                          "CloudTypeRaster: class value " + std::to_string(v) +
                              " > 15 at timestamp " + std::to_string(timestamp));
  }
};

// Which of the 16 classes map to "cloud". Default: everything but class 0.
struct BinarizationRule {
  std::set<int> cloud_classes = {1, 2,  3,  4,  5,  6,  7, 8,
                                 9, 10, 11, 12, 13, 14, 15};

  void validate() const {
    if (cloud_classes.empty())
      throw ValidationError("BinarizationRule: cloud class set must be non-empty");
    for (int c : cloud_classes)
      if (c < 0 || c > 15)
        throw ValidationError("BinarizationRule: class " + std::to_string(c) +
                              " outside [0,15]");
  }

  bool is_cloud(std::uint8_t cls) const { return cloud_classes.count(cls) > 0; }
};

struct CropRect {
  int row0 = 0;
  int col0 = 0;
  int height = 0;
  int width = 0;
};

struct SplitSpec {
  std::int64_t train_end = 0;   // last timestamp allowed in train
  std::int64_t val_start = 0;   // first timestamp allowed in validation

  void validate() const {
    if (train_end > val_start)
      throw ValidationError("SplitSpec: train_end must be <= val_start");
  }
};

inline std::vector<CloudGrid> rasters_to_masks(
    const std::vector<CloudTypeRaster>& rasters, const BinarizationRule& rule,
    const CropRect& crop, double cell_size_km = 4.5) {
  rule.validate();
  std::vector<CloudGrid> masks;
  masks.reserve(rasters.size());
  for (const CloudTypeRaster& raster : rasters) {
    raster.validate();
    if (crop.row0 < 0 || crop.col0 < 0 || crop.height < 1 || crop.width < 1 ||
        crop.row0 + crop.height > raster.height ||
        crop.col0 + crop.width > raster.width)
      throw ValidationError("rasters_to_masks: crop out of bounds for raster at timestamp " +
                            std::to_string(raster.timestamp));
    GridShape shape{crop.height, crop.width, cell_size_km};
    std::vector<std::uint8_t> mask(shape.cells());
    for (int r = 0; r < crop.height; ++r)
      for (int c = 0; c < crop.width; ++c) {
        const std::uint8_t cls =
            raster.classes[static_cast<std::size_t>(crop.row0 + r) * raster.width +
                           crop.col0 + c];
        mask[static_cast<std::size_t>(r) * crop.width + c] =
            rule.is_cloud(cls) ? 1 : 0;
      }
    masks.emplace_back(shape, raster.timestamp, std::move(mask));
  }
  return masks;
}

struct AssemblyResult {
  std::vector<SequenceSample> samples;
  std::size_t skipped_windows = 0;  // candidate windows rejected for any reason
};

// Every sliding window of t_in + t_out consecutive frames whose timestamps
// are uniformly spaced by cadence_s. Windows straddling a gap are skipped.
inline AssemblyResult assemble_sequences(const std::vector<CloudGrid>& masks,
                                         const SequenceSpec& spec) {
  spec.validate();
  for (std::size_t i = 1; i < masks.size(); ++i)
    if (masks[i].timestamp <= masks[i - 1].timestamp)
      throw ValidationError(
          "assemble_sequences: masks must be sorted with unique timestamps");

  AssemblyResult result;
  const int window = spec.total_frames();
  if (static_cast<int>(masks.size()) < window) return result;
  for (std::size_t start = 0; start + window <= masks.size(); ++start) {
    std::vector<CloudGrid> frames(masks.begin() + start,
                                  masks.begin() + start + window);
    SequenceValidation v = validate_sequence(frames, spec);
    if (v.ok())
      result.samples.push_back(std::move(*v.sample));
    else
      ++result.skipped_windows;
  }
  return result;
}

// Train iff the last target timestamp <= train_end; validation iff the first
// input timestamp >= val_start; straddlers are discarded.
inline std::pair<std::vector<SequenceSample>, std::vector<SequenceSample>>
split_by_time(const std::vector<SequenceSample>& samples, const SplitSpec& split) {
  split.validate();
  std::vector<SequenceSample> train;
  std::vector<SequenceSample> validation;
  for (const SequenceSample& sample : samples) {
    if (sample.last_timestamp() <= split.train_end)
      train.push_back(sample);
    else if (sample.first_timestamp() >= split.val_start)
      validation.push_back(sample);
  }
  return {std::move(train), std::move(validation)};
}

}  // namespace nwc
