#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "nwc/errors.hpp"
#include "nwc/grid.hpp"
#include "nwc/rng.hpp"

namespace nwc {

enum class ShapeKind { disc, rectangle };
enum class Boundary { clip, wrap };

struct ShapeSpec {
  ShapeKind kind = ShapeKind::disc;
  double center_row = 0;
  double center_col = 0;
  double size = 1;      // radius (disc) or half-extent (rectangle), pixels
  double vel_row = 0;   // rows per frame
  double vel_col = 0;   // cols per frame
  double growth = 0;    // size delta per frame
};

struct SceneSpec {
  GridShape grid;
  std::vector<ShapeSpec> shapes;
  Boundary boundary = Boundary::clip;
  std::uint64_t seed = 0;
};

namespace detail {

// Signed delta from cell coordinate to center, folded for wrap boundaries.
inline double wrapped_delta(double cell, double center, int extent,
                            Boundary boundary) {
  double d = cell - center;
  if (boundary == Boundary::wrap) {
    d = std::fmod(d, static_cast<double>(extent));
    if (d > extent / 2.0) d -= extent;
    if (d < -extent / 2.0) d += extent;
  }
  return d;
}

inline bool inside_shape(const ShapeSpec& shape, int frame, int r, int c,
                         const GridShape& grid, Boundary boundary) {
  const double cr = shape.center_row + frame * shape.vel_row;
  const double cc = shape.center_col + frame * shape.vel_col;
  const double size = shape.size + frame * shape.growth;
  const double dr = wrapped_delta(r, cr, grid.height, boundary);
  const double dc = wrapped_delta(c, cc, grid.width, boundary);
  if (shape.kind == ShapeKind::disc)
    return dr * dr + dc * dc <= size * size;
  return std::abs(dr) <= size && std::abs(dc) <= size;
}

}  // namespace detail

// Frame k of the scene: every shape advanced analytically by k steps.
inline CloudGrid render_frame(const SceneSpec& scene, int k,
                              std::int64_t timestamp) {
  scene.grid.validate();
  if (scene.shapes.empty())
    throw GenerationError("render_frame: scene has no shapes");
  for (const ShapeSpec& shape : scene.shapes) {
    if (shape.size + k * shape.growth <= 0)
      throw GenerationError("render_frame: degenerate shape (size <= 0) at frame " +
                            std::to_string(k));
  }
  std::vector<std::uint8_t> mask(scene.grid.cells(), 0);
  for (int r = 0; r < scene.grid.height; ++r) {
    for (int c = 0; c < scene.grid.width; ++c) {
      for (const ShapeSpec& shape : scene.shapes) {
        if (detail::inside_shape(shape, k, r, c, scene.grid, scene.boundary)) {
          mask[static_cast<std::size_t>(r) * scene.grid.width + c] = 1;
          break;
        }
      }
    }
  }
  return CloudGrid(scene.grid, timestamp, std::move(mask));
}

inline CloudGrid render_frame(const SceneSpec& scene, int k) {
  return render_frame(scene, k, static_cast<std::int64_t>(k) * 900);
}

struct Dataset {
  GridShape shape;
  SequenceSpec spec;
  std::vector<SequenceSample> samples;
};

struct SceneGenOptions {
  int min_shapes = 1;
  int max_shapes = 3;
  double speed_min = 0.0;
  double speed_max = 2.0;
  double size_min = 2.0;
  double size_max = 0.0;  // 0 -> height / 8
  double growth_max = 0.0;
  Boundary boundary = Boundary::clip;
};

// One scene per draw; the RNG is split per scene index so render order
// cannot affect the result.
inline SceneSpec draw_scene(const GridShape& grid, std::uint64_t seed,
                            std::uint64_t scene_index,
                            const SceneGenOptions& opt = {}) {
  grid.validate();
  double size_max = opt.size_max > 0 ? opt.size_max : grid.height / 8.0;
  if (size_max < opt.size_min)
    throw ConfigError("draw_scene: grid too small to contain the smallest shape (size_max=" +
                      std::to_string(size_max) + " < size_min=" +
                      std::to_string(opt.size_min) + ")");

  Rng rng(Rng::split(seed, scene_index));
  SceneSpec scene;
  scene.grid = grid;
  scene.boundary = opt.boundary;
  scene.seed = seed;
  const int n_shapes =
      static_cast<int>(rng.uniform_int(opt.min_shapes, opt.max_shapes));
  for (int i = 0; i < n_shapes; ++i) {
    ShapeSpec shape;
    shape.kind = rng.coin() ? ShapeKind::disc : ShapeKind::rectangle;
    shape.center_row = rng.uniform(0, grid.height);
    shape.center_col = rng.uniform(0, grid.width);
    shape.size = rng.uniform(opt.size_min, size_max);
    const double speed = rng.uniform(opt.speed_min, opt.speed_max);
    const double angle = rng.uniform(0, 6.283185307179586);
    shape.vel_row = speed * std::cos(angle);
    shape.vel_col = speed * std::sin(angle);
    shape.growth = opt.growth_max > 0
                       ? rng.uniform(-opt.growth_max, opt.growth_max)
                       : 0.0;
    scene.shapes.push_back(shape);
  }
  return scene;
}

inline Dataset generate_dataset(int n_scenes, const SequenceSpec& spec,
                                const GridShape& grid, std::uint64_t seed,
                                const SceneGenOptions& opt = {}) {
  spec.validate();
  if (n_scenes < 1)
    throw ConfigError("generate_dataset: n_scenes must be >= 1");
  Dataset dataset;
  dataset.shape = grid;
  dataset.spec = spec;
  dataset.samples.reserve(static_cast<std::size_t>(n_scenes));
  for (int s = 0; s < n_scenes; ++s) {
    SceneSpec scene = draw_scene(grid, seed, static_cast<std::uint64_t>(s), opt);
    // Scenes are spaced a day apart so sample windows never collide in time.
    const std::int64_t base = static_cast<std::int64_t>(s) * 86400;
    SequenceSample sample;
    for (int k = 0; k < spec.total_frames(); ++k) {
      CloudGrid frame = render_frame(scene, k, base + k * spec.cadence_s);
      if (k < spec.t_in)
        sample.inputs.push_back(std::move(frame));
      else
        sample.targets.push_back(std::move(frame));
    }
    dataset.samples.push_back(std::move(sample));
  }
  return dataset;
}

// Exact per-horizon persistence MSE for a single-shape, clip, zero-growth
// scene: |A \ B_k| + |B_k \ A| over the cell count, counted from the shape
// membership predicate directly (no forecast pipeline involved).
inline std::vector<double> analytic_persistence_mse(const SceneSpec& scene,
                                                    const SequenceSpec& spec) {
  spec.validate();
  if (scene.shapes.size() != 1 || scene.boundary != Boundary::clip ||
      scene.shapes[0].growth != 0)
    throw ConfigError(
        "analytic_persistence_mse: only single-shape, clip, zero-growth "
        "scenes are supported");
  const ShapeSpec& shape = scene.shapes[0];
  const int last_input = spec.t_in - 1;
  std::vector<double> mse(static_cast<std::size_t>(spec.t_out), 0.0);
  for (int k = 1; k <= spec.t_out; ++k) {
    std::int64_t differing = 0;
    for (int r = 0; r < scene.grid.height; ++r)
      for (int c = 0; c < scene.grid.width; ++c) {
        const bool in_a = detail::inside_shape(shape, last_input, r, c,
                                               scene.grid, scene.boundary);
        const bool in_b = detail::inside_shape(shape, last_input + k, r, c,
                                               scene.grid, scene.boundary);
        if (in_a != in_b) ++differing;
      }
    mse[static_cast<std::size_t>(k - 1)] =
        static_cast<double>(differing) / static_cast<double>(scene.grid.cells());
  }
  return mse;
}

}  // namespace nwc
