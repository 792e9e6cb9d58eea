#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "nwc/errors.hpp"
#include "nwc/grid.hpp"
#include "nwc/metrics.hpp"
#include "nwc/models.hpp"
#include "nwc/pgm.hpp"
#include "nwc/synthetic.hpp"
#include "nwc/train.hpp"

namespace nwc {

struct EvalReport {
  std::string model_name;
  std::vector<std::vector<HorizonMetrics>> per_run;  // [run][horizon]
  std::vector<HorizonMetrics> mean_over_runs;
  std::vector<double> mse_std_over_runs;             // per horizon
  std::vector<HorizonMetrics> persistence;
  ShapeDiagnostics model_shape;
  ShapeDiagnostics persistence_shape;
  ShapeDiagnostics truth_shape;
};

inline std::vector<Tensor> target_tensors(const std::vector<SequenceSample>& samples) {
  std::vector<Tensor> out;
  out.reserve(samples.size());
  for (const SequenceSample& s : samples) out.push_back(target_stack(s));
  return out;
}

inline std::vector<Tensor> persistence_tensors(const std::vector<SequenceSample>& samples) {
  std::vector<Tensor> out;
  out.reserve(samples.size());
  for (const SequenceSample& s : samples)
    out.push_back(persistence_forecast(s).horizons);
  return out;
}

inline std::vector<Tensor> model_forecasts(Model& model,
                                           const std::vector<SequenceSample>& samples) {
  std::vector<Tensor> out;
  out.reserve(samples.size());
  for (const SequenceSample& s : samples) out.push_back(model.forward(input_stack(s)));
  return out;
}

namespace detail {

// Arithmetic mean over runs; any undefined value makes the mean undefined.
inline std::vector<HorizonMetrics> mean_metrics(
    const std::vector<std::vector<HorizonMetrics>>& per_run) {
  std::vector<HorizonMetrics> mean;
  if (per_run.empty()) return mean;
  const std::size_t t_out = per_run[0].size();
  mean.resize(t_out);
  const double n = static_cast<double>(per_run.size());
  for (std::size_t k = 0; k < t_out; ++k) {
    HorizonMetrics& m = mean[k];
    m.horizon = per_run[0][k].horizon;
    double skill = 0;
    bool skill_defined = true;
    for (const auto& run : per_run) {
      m.mse += run[k].mse / n;
      m.binarized_mse += run[k].binarized_mse / n;
      m.contingency += run[k].contingency;
      if (is_undefined(run[k].skill_vs_persistence))
        skill_defined = false;
      else
        skill += run[k].skill_vs_persistence / n;
    }
    m.skill_vs_persistence = skill_defined ? skill : kUndefined;
  }
  return mean;
}

inline std::vector<double> mse_std(
    const std::vector<std::vector<HorizonMetrics>>& per_run,
    const std::vector<HorizonMetrics>& mean) {
  std::vector<double> out(mean.size(), 0.0);
  if (per_run.size() < 2) return out;
  for (std::size_t k = 0; k < mean.size(); ++k) {
    double ss = 0;
    for (const auto& run : per_run) {
      const double d = run[k].mse - mean[k].mse;
      ss += d * d;
    }
    out[k] = std::sqrt(ss / static_cast<double>(per_run.size()));
  }
  return out;
}

}  // namespace detail

// Assembles the full report for one model given its per-run forecasts.
inline EvalReport evaluate_runs(const std::string& name,
                                const std::vector<std::vector<Tensor>>& run_forecasts,
                                const std::vector<SequenceSample>& samples,
                                double threshold = 0.5) {
  if (samples.empty()) throw ValidationError("evaluate_runs: no samples");
  EvalReport report;
  report.model_name = name;

  const std::vector<Tensor> targets = target_tensors(samples);
  const std::vector<Tensor> persistence = persistence_tensors(samples);
  const std::vector<double> persistence_mse = mse_per_horizon(persistence, targets);

  report.persistence =
      evaluate_horizons(persistence, targets, persistence_mse, threshold);
  for (const std::vector<Tensor>& forecasts : run_forecasts)
    report.per_run.push_back(
        evaluate_horizons(forecasts, targets, persistence_mse, threshold));
  report.mean_over_runs = detail::mean_metrics(report.per_run);
  report.mse_std_over_runs =
      detail::mse_std(report.per_run, report.mean_over_runs);

  if (!run_forecasts.empty())
    report.model_shape = shape_evolution(run_forecasts[0], threshold);
  report.persistence_shape = shape_evolution(persistence, threshold);
  report.truth_shape = shape_evolution(targets, threshold);
  return report;
}

struct ExternalScore {
  EvalReport report;
  std::vector<std::int64_t> unmatched_external;  // base timestamps
  std::vector<std::int64_t> unmatched_targets;
};

// Pairs external forecast volumes (the target frames of an NWC1 dataset,
// read as {0,1} probabilities) with evaluation samples by base timestamp,
// tolerance +/-60 s. Unmatched entries on either side are listed as orphans.
inline ExternalScore score_external_forecast(const Dataset& external,
                                             const std::vector<SequenceSample>& samples,
                                             double threshold = 0.5) {
  constexpr std::int64_t tolerance_s = 60;
  std::vector<SequenceSample> matched_targets;
  std::vector<Tensor> matched_forecasts;
  std::vector<bool> target_used(samples.size(), false);
  ExternalScore score;

  for (const SequenceSample& ext : external.samples) {
    const std::int64_t base = ext.base_timestamp();
    bool found = false;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      if (target_used[i]) continue;
      if (std::llabs(samples[i].base_timestamp() - base) <= tolerance_s) {
        target_used[i] = true;
        matched_targets.push_back(samples[i]);
        matched_forecasts.push_back(target_stack(ext));
        found = true;
        break;
      }
    }
    if (!found) score.unmatched_external.push_back(base);
  }
  for (std::size_t i = 0; i < samples.size(); ++i)
    if (!target_used[i]) score.unmatched_targets.push_back(samples[i].base_timestamp());

  if (!matched_targets.empty())
    score.report = evaluate_runs("external", {matched_forecasts}, matched_targets,
                                 threshold);
  else
    score.report.model_name = "external";
  return score;
}

inline std::string format_metric(double v) {
  if (is_undefined(v)) return "undefined";
  std::ostringstream os;
  os << std::setprecision(9) << v;
  return os.str();
}

// Delimited metric table, one row per model x run x horizon. Fixed column
// order: model, run, horizon, mse, binarized_mse, accuracy, precision,
// recall, f1, csi, bias, skill.
inline void write_metric_table(std::ostream& out,
                               const std::vector<EvalReport>& reports) {
  out << "model\trun\thorizon\tmse\tbinarized_mse\taccuracy\tprecision\trecall"
         "\tf1\tcsi\tbias\tskill\n";
  auto row = [&out](const std::string& model, const std::string& run,
                    const HorizonMetrics& m) {
    const Contingency& c = m.contingency;
    out << model << "\t" << run << "\t" << m.horizon << "\t"
        << format_metric(m.mse) << "\t" << format_metric(m.binarized_mse) << "\t"
        << format_metric(c.accuracy()) << "\t" << format_metric(c.precision())
        << "\t" << format_metric(c.recall()) << "\t" << format_metric(c.f1())
        << "\t" << format_metric(c.csi()) << "\t" << format_metric(c.bias_ratio())
        << "\t" << format_metric(m.skill_vs_persistence) << "\n";
  };
  bool persistence_written = false;
  for (const EvalReport& report : reports) {
    for (std::size_t r = 0; r < report.per_run.size(); ++r)
      for (const HorizonMetrics& m : report.per_run[r])
        row(report.model_name, std::to_string(r), m);
    for (const HorizonMetrics& m : report.mean_over_runs)
      row(report.model_name, "mean", m);
    if (!persistence_written && !report.persistence.empty()) {
      for (const HorizonMetrics& m : report.persistence)
        row("persistence", "-", m);
      persistence_written = true;
    }
  }
}

inline nlohmann::json shape_diag_json(const ShapeDiagnostics& diag) {
  return {{"cloud_fraction", diag.cloud_fraction},
          {"component_count", diag.component_count},
          {"mean_component_area", diag.mean_component_area}};
}

inline nlohmann::json summary_json(const EvalReport& report) {
  nlohmann::json j;
  j["model"] = report.model_name;
  auto metrics_json = [](const std::vector<HorizonMetrics>& metrics) {
    nlohmann::json arr = nlohmann::json::array();
    for (const HorizonMetrics& m : metrics) {
      nlohmann::json e;
      e["horizon"] = m.horizon;
      e["mse"] = m.mse;
      e["binarized_mse"] = m.binarized_mse;
      e["hits"] = m.contingency.hits;
      e["misses"] = m.contingency.misses;
      e["false_alarms"] = m.contingency.false_alarms;
      e["correct_negatives"] = m.contingency.correct_negatives;
      e["csi"] = is_undefined(m.contingency.csi())
                     ? nlohmann::json()
                     : nlohmann::json(m.contingency.csi());
      e["skill_vs_persistence"] = is_undefined(m.skill_vs_persistence)
                                      ? nlohmann::json()
                                      : nlohmann::json(m.skill_vs_persistence);
      arr.push_back(e);
    }
    return arr;
  };
  nlohmann::json runs = nlohmann::json::array();
  for (const auto& run : report.per_run) runs.push_back(metrics_json(run));
  j["per_run"] = runs;
  j["mean_over_runs"] = metrics_json(report.mean_over_runs);
  j["mse_std_over_runs"] = report.mse_std_over_runs;
  j["persistence"] = metrics_json(report.persistence);
  j["shape_diagnostics"] = {{"model", shape_diag_json(report.model_shape)},
                            {"persistence", shape_diag_json(report.persistence_shape)},
                            {"truth", shape_diag_json(report.truth_shape)}};
  return j;
}

// Minimal SVG line chart: one polyline per series over horizons 1..t_out.
inline void write_svg_chart(const std::string& path, const std::string& title,
                            const std::vector<std::pair<std::string, std::vector<double>>>& series) {
  const int width = 640, height = 420, margin = 60;
  double y_max = 1e-9;
  std::size_t n = 0;
  for (const auto& [name, values] : series) {
    n = std::max(n, values.size());
    for (double v : values)
      if (std::isfinite(v)) y_max = std::max(y_max, v);
  }
  y_max *= 1.1;

  std::ofstream out(path);
  if (!out) throw ConfigError("write_svg_chart: cannot open " + path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" "
         "font-size=\"16\">" << title << "</text>\n";
  out << "<line x1=\"" << margin << "\" y1=\"" << height - margin << "\" x2=\""
      << width - margin << "\" y2=\"" << height - margin
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << margin << "\" y1=\"" << margin << "\" x2=\"" << margin
      << "\" y2=\"" << height - margin << "\" stroke=\"black\"/>\n";

  const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
  int color_idx = 0;
  int legend_y = margin;
  for (const auto& [name, values] : series) {
    const char* color = colors[color_idx++ % 5];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t k = 0; k < values.size(); ++k) {
      if (!std::isfinite(values[k])) continue;
      const double x = margin + (width - 2.0 * margin) * (n > 1 ? static_cast<double>(k) / (n - 1) : 0.5);
      const double y = height - margin - (height - 2.0 * margin) * (values[k] / y_max);
      out << x << "," << y << " ";
    }
    out << "\"/>\n";
    out << "<text x=\"" << width - margin + 4 << "\" y=\"" << legend_y
        << "\" font-size=\"12\" fill=\"" << color << "\">" << name << "</text>\n";
    legend_y += 16;
  }
  // axis labels: horizons on x, metric on y
  for (std::size_t k = 0; k < n; ++k) {
    const double x = margin + (width - 2.0 * margin) * (n > 1 ? static_cast<double>(k) / (n - 1) : 0.5);
    out << "<text x=\"" << x << "\" y=\"" << height - margin + 18
        << "\" text-anchor=\"middle\" font-size=\"11\">" << k + 1 << "</text>\n";
  }
  out << "<text x=\"" << margin - 8 << "\" y=\"" << margin - 8
      << "\" text-anchor=\"end\" font-size=\"11\">" << format_metric(y_max)
      << "</text>\n";
  out << "</svg>\n";
}

// Probability field -> 8-bit graymap frame.
inline PgmImage field_to_pgm(const Tensor& volume, int horizon) {
  const int h = volume.dim(1), w = volume.dim(2);
  PgmImage img;
  img.height = h;
  img.width = w;
  img.pixels.resize(static_cast<std::size_t>(h) * w);
  const std::size_t base = static_cast<std::size_t>(horizon) * h * w;
  for (std::size_t i = 0; i < img.pixels.size(); ++i)
    img.pixels[i] = static_cast<std::uint8_t>(
        std::clamp(volume[base + i], 0.0, 1.0) * 255.0 + 0.5);
  return img;
}

struct TrainEval {
  std::vector<RunRecord> records;
  EvalReport report;
};

// Train per config then score every run on the validation set.
inline TrainEval train_and_evaluate(const ModelSpec& spec, const Dataset& train_data,
                                    const Dataset& val_data, const TrainConfig& config,
                                    const std::string& out_dir = "") {
  TrainEval result;
  std::vector<std::vector<Tensor>> run_forecasts;
  namespace fs = std::filesystem;
  if (!out_dir.empty()) fs::create_directories(out_dir);

  for (int run = 0; run < config.runs; ++run) {
    ModelSpec run_spec = spec;
    run_spec.seed = config.seed + static_cast<std::uint64_t>(run);
    auto model = build(run_spec, train_data.shape);
    RunRecord record = train_run(*model, train_data, config, run);
    if (!out_dir.empty() && !record.aborted) {
      const std::string run_dir = out_dir + "/run" + std::to_string(run);
      fs::create_directories(run_dir);
      record.params_blob = run_dir + "/params.bin";
      record.params_manifest = run_dir + "/params.json";
      save_params(*model, record.params_blob, record.params_manifest);
    }
    if (!record.aborted)
      run_forecasts.push_back(model_forecasts(*model, val_data.samples));
    result.records.push_back(std::move(record));
  }
  result.report = evaluate_runs(to_string(spec.family), run_forecasts,
                                val_data.samples);
  return result;
}

struct DepthSweepEntry {
  int depth = 0;
  TrainEval result;
};

// Re-slices samples to each requested input depth, trains and evaluates.
inline std::vector<DepthSweepEntry> temporal_depth_sweep(
    const ModelSpec& base_spec, const Dataset& train_data, const Dataset& val_data,
    const std::vector<int>& depths, const TrainConfig& config,
    const std::string& out_dir = "") {
  std::vector<DepthSweepEntry> entries;
  for (int depth : depths) {
    Dataset train_d = reslice_depth(train_data, depth);
    Dataset val_d = reslice_depth(val_data, depth);
    ModelSpec spec = base_spec;
    spec.t_in = depth;
    DepthSweepEntry entry;
    entry.depth = depth;
    entry.result = train_and_evaluate(
        spec, train_d, val_d, config,
        out_dir.empty() ? "" : out_dir + "/depth" + std::to_string(depth));
    entries.push_back(std::move(entry));
  }
  return entries;
}

}  // namespace nwc
