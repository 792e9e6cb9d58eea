#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "nwc/errors.hpp"
#include "nwc/grid.hpp"

namespace nwc {

// Ratios with a zero denominator are surfaced as NaN ("undefined"), never
// coerced to 0 or 1.
inline constexpr double kUndefined = std::numeric_limits<double>::quiet_NaN();

inline bool is_undefined(double v) { return std::isnan(v); }

struct Contingency {
  std::uint64_t hits = 0;
  std::uint64_t misses = 0;
  std::uint64_t false_alarms = 0;
  std::uint64_t correct_negatives = 0;

  std::uint64_t total() const {
    return hits + misses + false_alarms + correct_negatives;
  }

  Contingency& operator+=(const Contingency& o) {
    hits += o.hits;
    misses += o.misses;
    false_alarms += o.false_alarms;
    correct_negatives += o.correct_negatives;
    return *this;
  }

  double accuracy() const {
    return total() == 0 ? kUndefined
                        : static_cast<double>(hits + correct_negatives) / total();
  }
  double precision() const {
    const std::uint64_t d = hits + false_alarms;
    return d == 0 ? kUndefined : static_cast<double>(hits) / d;
  }
  double recall() const {
    const std::uint64_t d = hits + misses;
    return d == 0 ? kUndefined : static_cast<double>(hits) / d;
  }
  double f1() const {
    const double p = precision(), r = recall();
    if (is_undefined(p) || is_undefined(r) || p + r == 0) return kUndefined;
    return 2 * p * r / (p + r);
  }
  double csi() const {
    const std::uint64_t d = hits + misses + false_alarms;
    return d == 0 ? kUndefined : static_cast<double>(hits) / d;
  }
  double bias_ratio() const {
    const std::uint64_t d = hits + misses;
    return d == 0 ? kUndefined : static_cast<double>(hits + false_alarms) / d;
  }
};

struct HorizonMetrics {
  int horizon = 0;  // 1..t_out
  double mse = 0;
  double binarized_mse = 0;
  Contingency contingency;
  double skill_vs_persistence = kUndefined;
};

struct ShapeDiagnostics {
  // one entry per horizon
  std::vector<double> cloud_fraction;
  std::vector<double> component_count;
  std::vector<double> mean_component_area;
};

namespace detail {

inline void check_pairing(const std::vector<Tensor>& forecasts,
                          const std::vector<Tensor>& targets) {
  if (forecasts.size() != targets.size())
    throw ValidationError("metrics: forecast/target sample counts differ");
  if (forecasts.empty()) throw ValidationError("metrics: no samples");
  for (std::size_t i = 0; i < forecasts.size(); ++i)
    if (!forecasts[i].same_shape(targets[i]) || forecasts[i].rank() != 3)
      throw ValidationError("metrics: shape mismatch at sample " + std::to_string(i));
}

}  // namespace detail

// Mean over samples and cells of squared difference, separately per horizon.
inline std::vector<double> mse_per_horizon(const std::vector<Tensor>& forecasts,
                                           const std::vector<Tensor>& targets) {
  detail::check_pairing(forecasts, targets);
  const int t_out = forecasts[0].dim(0);
  const std::size_t cells =
      static_cast<std::size_t>(forecasts[0].dim(1)) * forecasts[0].dim(2);
  std::vector<double> mse(static_cast<std::size_t>(t_out), 0.0);
  for (std::size_t s = 0; s < forecasts.size(); ++s)
    for (int k = 0; k < t_out; ++k) {
      double sum = 0;
      const std::size_t base = static_cast<std::size_t>(k) * cells;
      for (std::size_t i = 0; i < cells; ++i) {
        const double d = forecasts[s][base + i] - targets[s][base + i];
        sum += d * d;
      }
      mse[static_cast<std::size_t>(k)] += sum / static_cast<double>(cells);
    }
  for (double& v : mse) v /= static_cast<double>(forecasts.size());
  return mse;
}

inline std::vector<double> binarized_mse_per_horizon(
    const std::vector<Tensor>& forecasts, const std::vector<Tensor>& targets,
    double threshold = 0.5) {
  detail::check_pairing(forecasts, targets);
  std::vector<Tensor> binarized;
  binarized.reserve(forecasts.size());
  for (const Tensor& f : forecasts) {
    std::vector<std::uint8_t> bits = binarize(f, threshold);
    Tensor b(f.shape());
    for (std::size_t i = 0; i < bits.size(); ++i) b[i] = bits[i];
    binarized.push_back(std::move(b));
  }
  return mse_per_horizon(binarized, targets);
}

inline Contingency contingency_scores(const std::vector<std::uint8_t>& pred,
                                      const std::vector<std::uint8_t>& obs) {
  if (pred.size() != obs.size())
    throw ValidationError("contingency_scores: size mismatch");
  Contingency c;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] && obs[i])
      ++c.hits;
    else if (pred[i] && !obs[i])
      ++c.false_alarms;
    else if (!pred[i] && obs[i])
      ++c.misses;
    else
      ++c.correct_negatives;
  }
  return c;
}

// 1 - model/persistence; undefined when the persistence error is zero.
inline double skill_vs_persistence(double model_mse, double persistence_mse) {
  if (persistence_mse <= 0) return kUndefined;
  return 1.0 - model_mse / persistence_mse;
}

struct Components {
  int count = 0;
  std::vector<int> areas;
  std::vector<int> labels;  // 0 = background, 1..count = component id
};

// Union-find labeling of maximal connected 1-regions.
inline Components connected_components(const std::vector<std::uint8_t>& mask,
                                       int height, int width,
                                       int connectivity = 8) {
  if (connectivity != 4 && connectivity != 8)
    throw ValidationError("connected_components: connectivity must be 4 or 8");
  if (mask.size() != static_cast<std::size_t>(height) * width)
    throw ValidationError("connected_components: mask size mismatch");

  std::vector<int> parent(mask.size());
  for (std::size_t i = 0; i < parent.size(); ++i) parent[i] = static_cast<int>(i);
  auto find = [&](int x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] =
          parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  };
  auto unite = [&](int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[static_cast<std::size_t>(a)] = b;
  };

  for (int r = 0; r < height; ++r)
    for (int c = 0; c < width; ++c) {
      const int idx = r * width + c;
      if (!mask[static_cast<std::size_t>(idx)]) continue;
      if (c > 0 && mask[static_cast<std::size_t>(idx - 1)]) unite(idx, idx - 1);
      if (r > 0) {
        const int up = idx - width;
        if (mask[static_cast<std::size_t>(up)]) unite(idx, up);
        if (connectivity == 8) {
          if (c > 0 && mask[static_cast<std::size_t>(up - 1)]) unite(idx, up - 1);
          if (c < width - 1 && mask[static_cast<std::size_t>(up + 1)])
            unite(idx, up + 1);
        }
      }
    }

  Components result;
  result.labels.assign(mask.size(), 0);
  std::vector<int> root_to_label(mask.size(), 0);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    const int root = find(static_cast<int>(i));
    int& label = root_to_label[static_cast<std::size_t>(root)];
    if (label == 0) {
      label = ++result.count;
      result.areas.push_back(0);
    }
    result.labels[i] = label;
    ++result.areas[static_cast<std::size_t>(label - 1)];
  }
  return result;
}

// Per-horizon mean cloud fraction, component count and component area of the
// binarized fields; quantifies blurring/shrinking across horizons.
inline ShapeDiagnostics shape_evolution(const std::vector<Tensor>& fields,
                                        double threshold = 0.5,
                                        int connectivity = 8) {
  if (fields.empty()) throw ValidationError("shape_evolution: no samples");
  const int t_out = fields[0].dim(0);
  const int h = fields[0].dim(1), w = fields[0].dim(2);
  const std::size_t cells = static_cast<std::size_t>(h) * w;

  ShapeDiagnostics diag;
  diag.cloud_fraction.assign(static_cast<std::size_t>(t_out), 0.0);
  diag.component_count.assign(static_cast<std::size_t>(t_out), 0.0);
  diag.mean_component_area.assign(static_cast<std::size_t>(t_out), 0.0);
  std::vector<std::size_t> area_samples(static_cast<std::size_t>(t_out), 0);

  for (const Tensor& field : fields) {
    if (field.dim(0) != t_out || field.dim(1) != h || field.dim(2) != w)
      throw ValidationError("shape_evolution: shape mismatch");
    const std::vector<std::uint8_t> bits = binarize(field, threshold);
    for (int k = 0; k < t_out; ++k) {
      std::vector<std::uint8_t> frame(bits.begin() + static_cast<long>(k) * static_cast<long>(cells),
                                      bits.begin() + static_cast<long>(k + 1) * static_cast<long>(cells));
      std::size_t ones = 0;
      for (std::uint8_t b : frame) ones += b;
      diag.cloud_fraction[static_cast<std::size_t>(k)] +=
          static_cast<double>(ones) / static_cast<double>(cells);
      Components comp = connected_components(frame, h, w, connectivity);
      diag.component_count[static_cast<std::size_t>(k)] += comp.count;
      if (comp.count > 0) {
        double mean_area = 0;
        for (int a : comp.areas) mean_area += a;
        diag.mean_component_area[static_cast<std::size_t>(k)] +=
            mean_area / comp.count;
        ++area_samples[static_cast<std::size_t>(k)];
      }
    }
  }
  const double n = static_cast<double>(fields.size());
  for (int k = 0; k < t_out; ++k) {
    diag.cloud_fraction[static_cast<std::size_t>(k)] /= n;
    diag.component_count[static_cast<std::size_t>(k)] /= n;
    diag.mean_component_area[static_cast<std::size_t>(k)] =
        area_samples[static_cast<std::size_t>(k)] == 0
            ? 0.0
            : diag.mean_component_area[static_cast<std::size_t>(k)] /
                  static_cast<double>(area_samples[static_cast<std::size_t>(k)]);
  }
  return diag;
}

// Full per-horizon metric set for one forecast source against targets, with
// skill computed against the supplied persistence errors.
inline std::vector<HorizonMetrics> evaluate_horizons(
    const std::vector<Tensor>& forecasts, const std::vector<Tensor>& targets,
    const std::vector<double>& persistence_mse, double threshold = 0.5) {
  detail::check_pairing(forecasts, targets);
  const int t_out = forecasts[0].dim(0);
  const std::size_t cells =
      static_cast<std::size_t>(forecasts[0].dim(1)) * forecasts[0].dim(2);

  const std::vector<double> mse = mse_per_horizon(forecasts, targets);
  const std::vector<double> bmse =
      binarized_mse_per_horizon(forecasts, targets, threshold);

  std::vector<HorizonMetrics> metrics(static_cast<std::size_t>(t_out));
  for (int k = 0; k < t_out; ++k) {
    HorizonMetrics& m = metrics[static_cast<std::size_t>(k)];
    m.horizon = k + 1;
    m.mse = mse[static_cast<std::size_t>(k)];
    m.binarized_mse = bmse[static_cast<std::size_t>(k)];
    m.skill_vs_persistence =
        persistence_mse.empty()
            ? kUndefined
            : skill_vs_persistence(m.mse, persistence_mse[static_cast<std::size_t>(k)]);
  }

  for (std::size_t s = 0; s < forecasts.size(); ++s) {
    const std::vector<std::uint8_t> pred_bits = binarize(forecasts[s], threshold);
    const std::vector<std::uint8_t> obs_bits = binarize(targets[s], threshold);
    for (int k = 0; k < t_out; ++k) {
      std::vector<std::uint8_t> p(pred_bits.begin() + static_cast<long>(k) * static_cast<long>(cells),
                                  pred_bits.begin() + static_cast<long>(k + 1) * static_cast<long>(cells));
      std::vector<std::uint8_t> o(obs_bits.begin() + static_cast<long>(k) * static_cast<long>(cells),
                                  obs_bits.begin() + static_cast<long>(k + 1) * static_cast<long>(cells));
      metrics[static_cast<std::size_t>(k)].contingency += contingency_scores(p, o);
    }
  }
  return metrics;
}

}  // namespace nwc
