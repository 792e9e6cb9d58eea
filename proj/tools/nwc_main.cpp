// nwc: cloud-cover nowcasting benchmark toolkit.
// Subcommands: synth, ingest, train, eval, sweep.

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "nwc/nwc.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

bool g_quiet = false;

void info(const std::string& msg) {
  if (!g_quiet) std::cout << msg << "\n";
}

// Exclusive lock on an output directory; two concurrent writers are an error.
class DirLock {
 public:
  explicit DirLock(const std::string& dir) {
    fs::create_directories(dir);
    path_ = dir + "/.nwc.lock";
    std::FILE* f = std::fopen(path_.c_str(), "wx");
    if (!f)
      throw nwc::ConfigError("output directory is locked by another command: " + dir);
    std::fclose(f);
  }
  ~DirLock() {
    std::error_code ec;
    fs::remove(path_, ec);
  }

 private:
  std::string path_;
};

// Layered configuration: built-in defaults < --config file < command-line
// flags < NWC_* environment variables.
class Layers {
 public:
  void load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw nwc::ConfigError("cannot open config file: " + path);
    file_ = json::parse(in, nullptr, /*allow_exceptions=*/false);
    if (file_.is_discarded())
      throw nwc::ConfigError("config file is not valid JSON: " + path);
  }

  // Applies a file-config value when present and the flag was not given.
  template <typename T>
  void apply(const CLI::App& cmd, const std::string& flag, T& value) const {
    if (file_.is_null()) return;
    const CLI::Option* opt = cmd.get_option_no_throw("--" + flag);
    if (opt && opt->count() > 0) return;  // explicit flag wins over file
    const json* section = file_.contains(cmd.get_name())
                              ? &file_.at(cmd.get_name())
                              : nullptr;
    if (section && section->contains(flag))
      value = section->at(flag).get<T>();
    else if (file_.contains(flag))
      value = file_.at(flag).get<T>();
  }

 private:
  json file_;
};

std::uint64_t env_seed(std::uint64_t fallback) {
  const char* v = std::getenv("NWC_SEED");
  return v ? std::stoull(v) : fallback;
}

// NWC_DATA_DIR prefixes relative dataset paths.
std::string resolve_data_path(const std::string& path) {
  const char* dir = std::getenv("NWC_DATA_DIR");
  if (!dir || path.empty() || fs::path(path).is_absolute()) return path;
  return (fs::path(dir) / path).string();
}

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stoi(item));
  if (out.empty()) throw nwc::ConfigError("empty integer list: " + s);
  return out;
}

std::set<int> parse_class_set(const std::string& s) {
  std::set<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto dash = item.find('-');
    if (dash != std::string::npos) {
      const int lo = std::stoi(item.substr(0, dash));
      const int hi = std::stoi(item.substr(dash + 1));
      for (int c = lo; c <= hi; ++c) out.insert(c);
    } else {
      out.insert(std::stoi(item));
    }
  }
  return out;
}

struct FamilyFlags {
  std::string family = "unet";
  int depth = 3;
  int base_channels = 8;
  bool residual = false;
  std::string activation = "relu";
  bool dense_bottleneck = false;
  std::string kernels = "5,5,5";
  int hidden_channels = 16;
  int state_channels = 32;
  int lstm_hidden = 128;

  void add_flags(CLI::App* cmd) {
    cmd->add_option("--family", family,
                    "Model family: stacked_conv|unet|rec_encdec|reduce_lstm")
        ->capture_default_str();
    cmd->add_option("--depth", depth, "UNet pooling stages")->capture_default_str();
    cmd->add_option("--base-channels", base_channels, "UNet channels at stage 0")
        ->capture_default_str();
    cmd->add_flag("--residual", residual, "UNet residual blocks");
    cmd->add_option("--activation", activation, "UNet activation: relu|leaky_relu|elu")
        ->capture_default_str();
    cmd->add_flag("--dense-bottleneck", dense_bottleneck,
                  "UNet dense layer at the bottleneck");
    cmd->add_option("--kernels", kernels,
                    "stacked_conv per-layer kernel sizes, comma separated")
        ->capture_default_str();
    cmd->add_option("--hidden-channels", hidden_channels,
                    "stacked_conv/rec_encdec hidden channels")
        ->capture_default_str();
    cmd->add_option("--state-channels", state_channels, "rec_encdec state channels")
        ->capture_default_str();
    cmd->add_option("--lstm-hidden", lstm_hidden, "reduce_lstm hidden units")
        ->capture_default_str();
  }

  nwc::ModelSpec to_spec(int t_in, int t_out, std::uint64_t seed) const {
    nwc::ModelSpec spec;
    spec.family = nwc::family_from_string(family);
    spec.t_in = t_in;
    spec.t_out = t_out;
    spec.seed = seed;
    spec.unet.depth = depth;
    spec.unet.base_channels = base_channels;
    spec.unet.use_residual = residual;
    spec.unet.activation = nwc::activation_from_string(activation);
    spec.unet.bottleneck_dense = dense_bottleneck;
    spec.stacked.kernels = parse_int_list(kernels);
    spec.stacked.hidden_channels = hidden_channels;
    spec.rec.hidden_channels = hidden_channels;
    spec.rec.state_channels = state_channels;
    spec.reduce.lstm_hidden = lstm_hidden;
    return spec;
  }
};

struct TrainFlags {
  int runs = 3;
  int epochs = 20;
  int batch = 8;
  double lr = 1e-3;
  std::string loss = "mse";

  void add_flags(CLI::App* cmd) {
    cmd->add_option("--runs", runs, "Independent training runs")->capture_default_str();
    cmd->add_option("--epochs", epochs, "Epochs per run")->capture_default_str();
    cmd->add_option("--batch", batch, "Batch size")->capture_default_str();
    cmd->add_option("--lr", lr, "Learning rate")->capture_default_str();
    cmd->add_option("--loss", loss, "Training loss: mse|bce")->capture_default_str();
  }

  nwc::TrainConfig to_config(std::uint64_t seed) const {
    nwc::TrainConfig config;
    config.runs = runs;
    config.epochs = epochs;
    config.batch_size = batch;
    config.learning_rate = lr;
    config.loss = nwc::loss_from_string(loss);
    config.seed = seed;
    return config;
  }
};

void write_eval_outputs(const std::string& out_dir,
                        const std::vector<nwc::EvalReport>& reports,
                        const std::vector<nwc::Tensor>& example_forecast,
                        const nwc::SequenceSample* example_sample, bool plots) {
  fs::create_directories(out_dir);
  std::ofstream table(out_dir + "/metrics.tsv");
  nwc::write_metric_table(table, reports);

  json summary = json::array();
  for (const nwc::EvalReport& report : reports)
    summary.push_back(nwc::summary_json(report));
  std::ofstream sout(out_dir + "/summary.json");
  sout << summary.dump(2) << "\n";

  if (!plots || reports.empty()) return;
  const nwc::EvalReport& main = reports.front();
  std::vector<std::pair<std::string, std::vector<double>>> series;
  std::vector<double> model_mse, persistence_mse;
  for (const nwc::HorizonMetrics& m : main.mean_over_runs) model_mse.push_back(m.mse);
  for (const nwc::HorizonMetrics& m : main.persistence)
    persistence_mse.push_back(m.mse);
  if (!model_mse.empty()) series.emplace_back(main.model_name, model_mse);
  series.emplace_back("persistence", persistence_mse);
  nwc::write_svg_chart(out_dir + "/mse_per_horizon.svg", "MSE per horizon", series);

  if (!example_forecast.empty() && example_sample) {
    const nwc::Tensor& volume = example_forecast.front();
    const nwc::Tensor truth = nwc::target_stack(*example_sample);
    for (int k = 0; k < volume.dim(0); ++k) {
      std::ostringstream name;
      name << out_dir << "/example_h" << k + 1;
      nwc::write_pgm(nwc::field_to_pgm(volume, k), name.str() + "_model.pgm");
      nwc::write_pgm(nwc::field_to_pgm(truth, k), name.str() + "_truth.pgm");
    }
  }
}

// Builds each run's model from the experiment directory and forecasts the
// validation samples.
std::vector<std::vector<nwc::Tensor>> load_run_forecasts(
    const std::string& exp_dir, const nwc::Dataset& val,
    nwc::ModelSpec& spec_out) {
  std::ifstream sin(exp_dir + "/spec.json");
  if (!sin) throw nwc::ConfigError("missing spec.json in experiment dir: " + exp_dir);
  spec_out = nwc::model_spec_from_json(json::parse(sin));

  std::vector<std::vector<nwc::Tensor>> forecasts;
  for (int run = 0;; ++run) {
    const std::string run_dir = exp_dir + "/run" + std::to_string(run);
    if (!fs::exists(run_dir)) break;
    if (!fs::exists(run_dir + "/params.bin"))
      throw nwc::ConfigError("missing parameter blob: " + run_dir + "/params.bin");
    nwc::ModelSpec run_spec = spec_out;
    run_spec.seed = spec_out.seed + static_cast<std::uint64_t>(run);
    auto model = nwc::build(run_spec, val.shape);
    nwc::load_params(*model, run_dir + "/params.bin", run_dir + "/params.json");
    forecasts.push_back(nwc::model_forecasts(*model, val.samples));
  }
  if (forecasts.empty())
    throw nwc::ConfigError("no trained runs found in " + exp_dir);
  return forecasts;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Cloud cover nowcasting benchmark toolkit"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "JSON config file with default flag values")
      ->expected(1);
  app.add_flag("--quiet", g_quiet, "Suppress progress output");

  Layers layers;

  // ---- synth ----
  auto* synth = app.add_subcommand("synth", "Generate a moving-shapes dataset");
  int sy_size = 64, sy_scenes = 100, sy_t_in = 4, sy_t_out = 6;
  std::int64_t sy_cadence = 900;
  std::uint64_t sy_seed = 0;
  double sy_shape_min = 2, sy_shape_max = 0, sy_speed_min = 0, sy_speed_max = 2,
         sy_growth_max = 0;
  int sy_shapes_min = 1, sy_shapes_max = 3;
  std::string sy_boundary = "clip", sy_out;
  synth->add_option("--size", sy_size, "Grid side length")->capture_default_str();
  synth->add_option("--scenes", sy_scenes, "Number of scenes")->capture_default_str();
  synth->add_option("--seed", sy_seed, "Generator seed")->capture_default_str();
  synth->add_option("--out", sy_out, "Output NWC1 file")->required();
  synth->add_option("--t-in", sy_t_in, "Input frames")->capture_default_str();
  synth->add_option("--t-out", sy_t_out, "Target frames")->capture_default_str();
  synth->add_option("--cadence", sy_cadence, "Seconds between frames")
      ->capture_default_str();
  synth->add_option("--boundary", sy_boundary, "Boundary: clip|wrap")
      ->capture_default_str();
  synth->add_option("--shape-min", sy_shape_min, "Min shape size, pixels")
      ->capture_default_str();
  synth->add_option("--shape-max", sy_shape_max, "Max shape size, pixels (0 = height/8)")
      ->capture_default_str();
  synth->add_option("--speed-min", sy_speed_min, "Min speed, px/frame")
      ->capture_default_str();
  synth->add_option("--speed-max", sy_speed_max, "Max speed, px/frame")
      ->capture_default_str();
  synth->add_option("--shapes-min", sy_shapes_min, "Min shapes per scene")
      ->capture_default_str();
  synth->add_option("--shapes-max", sy_shapes_max, "Max shapes per scene")
      ->capture_default_str();
  synth->add_option("--growth-max", sy_growth_max, "Max |size delta| per frame")
      ->capture_default_str();

  // ---- ingest ----
  auto* ingest = app.add_subcommand(
      "ingest", "Decode cloud-type rasters (P5 PGM, <epoch>.pgm) into NWC1 datasets");
  std::string in_dir, ing_out, ing_crop, ing_classes = "1-15";
  std::int64_t ing_train_end = 0, ing_val_start = 0;
  int ing_t_in = 4, ing_t_out = 6;
  std::int64_t ing_cadence = 900;
  double ing_cell_km = 4.5;
  ingest->add_option("--in", in_dir, "Directory of raster PGM files")->required();
  ingest->add_option("--out", ing_out, "Output directory")->required();
  ingest->add_option("--crop", ing_crop, "Crop rectangle row0,col0,height,width");
  ingest->add_option("--cloud-classes", ing_classes,
                     "Classes mapped to cloud, e.g. 1-15 or 2,3,7")
      ->capture_default_str();
  ingest->add_option("--train-end", ing_train_end, "Last train timestamp (epoch s)")
      ->required();
  ingest->add_option("--val-start", ing_val_start, "First validation timestamp")
      ->required();
  ingest->add_option("--t-in", ing_t_in)->capture_default_str();
  ingest->add_option("--t-out", ing_t_out)->capture_default_str();
  ingest->add_option("--cadence", ing_cadence)->capture_default_str();
  ingest->add_option("--cell-km", ing_cell_km)->capture_default_str();

  // ---- train ----
  auto* train = app.add_subcommand("train", "Train one model spec");
  std::string tr_data, tr_out;
  std::uint64_t tr_seed = 0;
  FamilyFlags tr_family;
  TrainFlags tr_cfg;
  train->add_option("--data", tr_data, "Training NWC1 dataset")->required();
  train->add_option("--out", tr_out, "Experiment directory")->required();
  train->add_option("--seed", tr_seed, "Base seed")->capture_default_str();
  tr_family.add_flags(train);
  tr_cfg.add_flags(train);

  // ---- eval ----
  auto* eval = app.add_subcommand("eval", "Evaluate a trained experiment");
  std::string ev_exp, ev_data, ev_out, ev_compare;
  bool ev_plots = true;
  eval->add_option("--exp", ev_exp, "Experiment directory from `train`")->required();
  eval->add_option("--data", ev_data, "Validation NWC1 dataset")->required();
  eval->add_option("--out", ev_out, "Output directory (default: <exp>/eval)");
  eval->add_option("--compare", ev_compare, "External forecast NWC1 file");
  eval->add_flag("--plots,!--no-plots", ev_plots, "Emit SVG/PGM plots");

  // ---- sweep ----
  auto* sweep = app.add_subcommand("sweep", "Temporal-depth sweep");
  std::string sw_data, sw_val, sw_out, sw_depths = "1,2,4";
  std::uint64_t sw_seed = 0;
  FamilyFlags sw_family;
  TrainFlags sw_cfg;
  sweep->add_option("--data", sw_data, "Training NWC1 dataset")->required();
  sweep->add_option("--val", sw_val, "Validation NWC1 dataset")->required();
  sweep->add_option("--out", sw_out, "Output directory")->required();
  sweep->add_option("--depths", sw_depths, "Comma-separated t_in depths")
      ->capture_default_str();
  sweep->add_option("--seed", sw_seed, "Base seed")->capture_default_str();
  sw_family.add_flags(sweep);
  sw_cfg.add_flags(sweep);

  CLI11_PARSE(app, argc, argv);

  if (!config_path.empty()) layers.load_file(config_path);

  if (synth->parsed()) {
    layers.apply(*synth, "size", sy_size);
    layers.apply(*synth, "scenes", sy_scenes);
    layers.apply(*synth, "seed", sy_seed);
    sy_seed = env_seed(sy_seed);

    nwc::GridShape grid{sy_size, sy_size, 4.5};
    nwc::SequenceSpec spec{sy_t_in, sy_t_out, sy_cadence};
    nwc::SceneGenOptions opt;
    opt.min_shapes = sy_shapes_min;
    opt.max_shapes = sy_shapes_max;
    opt.size_min = sy_shape_min;
    opt.size_max = sy_shape_max;
    opt.speed_min = sy_speed_min;
    opt.speed_max = sy_speed_max;
    opt.growth_max = sy_growth_max;
    opt.boundary = sy_boundary == "wrap" ? nwc::Boundary::wrap : nwc::Boundary::clip;

    nwc::Dataset dataset = nwc::generate_dataset(sy_scenes, spec, grid, sy_seed, opt);
    nwc::nwc1::write_file(dataset, sy_out);
    std::cout << "samples=" << dataset.samples.size() << " checksum=" << std::hex
              << std::setw(8) << std::setfill('0')
              << nwc::nwc1::file_checksum(sy_out) << std::dec << " path=" << sy_out
              << "\n";
    return 0;
  }

  if (ingest->parsed()) {
    DirLock lock(ing_out);
    std::vector<nwc::CloudTypeRaster> rasters;
    for (const auto& entry : fs::directory_iterator(in_dir)) {
      if (entry.path().extension() != ".pgm") continue;
      nwc::PgmImage img = nwc::read_pgm(entry.path().string());
      nwc::CloudTypeRaster raster;
      raster.height = img.height;
      raster.width = img.width;
      raster.timestamp = std::stoll(entry.path().stem().string());
      raster.classes = std::move(img.pixels);
      rasters.push_back(std::move(raster));
    }
    if (rasters.empty())
      throw nwc::ConfigError("no .pgm rasters found in " + in_dir);
    std::sort(rasters.begin(), rasters.end(),
              [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });

    nwc::CropRect crop{0, 0, rasters[0].height, rasters[0].width};
    if (!ing_crop.empty()) {
      const std::vector<int> v = parse_int_list(ing_crop);
      if (v.size() != 4)
        throw nwc::ConfigError("--crop expects row0,col0,height,width");
      crop = {v[0], v[1], v[2], v[3]};
    }
    nwc::BinarizationRule rule;
    rule.cloud_classes = parse_class_set(ing_classes);

    const std::vector<nwc::CloudGrid> masks =
        nwc::rasters_to_masks(rasters, rule, crop, ing_cell_km);
    nwc::SequenceSpec spec{ing_t_in, ing_t_out, ing_cadence};
    nwc::AssemblyResult assembled = nwc::assemble_sequences(masks, spec);
    auto [train_samples, val_samples] = nwc::split_by_time(
        assembled.samples, nwc::SplitSpec{ing_train_end, ing_val_start});

    nwc::GridShape shape{crop.height, crop.width, ing_cell_km};
    nwc::Dataset train_set{shape, spec, std::move(train_samples)};
    nwc::Dataset val_set{shape, spec, std::move(val_samples)};
    nwc::nwc1::write_file(train_set, ing_out + "/train.nwc1");
    nwc::nwc1::write_file(val_set, ing_out + "/val.nwc1");

    json summary;
    summary["rasters"] = rasters.size();
    summary["windows_emitted"] = assembled.samples.size();
    summary["windows_skipped"] = assembled.skipped_windows;
    summary["train_samples"] = train_set.samples.size();
    summary["val_samples"] = val_set.samples.size();
    std::ofstream sout(ing_out + "/ingest_summary.json");
    sout << summary.dump(2) << "\n";
    info("train=" + std::to_string(train_set.samples.size()) +
         " val=" + std::to_string(val_set.samples.size()) +
         " skipped=" + std::to_string(assembled.skipped_windows));
    return 0;
  }

  if (train->parsed()) {
    layers.apply(*train, "data", tr_data);
    layers.apply(*train, "seed", tr_seed);
    layers.apply(*train, "runs", tr_cfg.runs);
    layers.apply(*train, "epochs", tr_cfg.epochs);
    layers.apply(*train, "family", tr_family.family);
    tr_seed = env_seed(tr_seed);

    DirLock lock(tr_out);
    nwc::Dataset data = nwc::nwc1::read_file(resolve_data_path(tr_data));
    nwc::ModelSpec spec = tr_family.to_spec(data.spec.t_in, data.spec.t_out, tr_seed);
    nwc::TrainConfig config = tr_cfg.to_config(tr_seed);

    std::ofstream sout(tr_out + "/spec.json");
    sout << nwc::to_json(spec).dump(2) << "\n";
    const std::vector<nwc::RunRecord> records =
        nwc::train(spec, data, config, tr_out);
    for (const nwc::RunRecord& r : records)
      info("run " + std::to_string(r.run_index) + ": " +
           (r.aborted ? "aborted (" + r.abort_reason + ")"
                      : "final loss " + std::to_string(r.epoch_loss.back())));
    return 0;
  }

  if (eval->parsed()) {
    if (ev_out.empty()) ev_out = ev_exp + "/eval";
    DirLock lock(ev_out);
    nwc::Dataset val = nwc::nwc1::read_file(resolve_data_path(ev_data));
    nwc::ModelSpec spec;
    const std::vector<std::vector<nwc::Tensor>> forecasts =
        load_run_forecasts(ev_exp, val, spec);

    std::vector<nwc::EvalReport> reports;
    reports.push_back(nwc::evaluate_runs(nwc::to_string(spec.family), forecasts,
                                         val.samples));
    if (!ev_compare.empty()) {
      nwc::Dataset external = nwc::nwc1::read_file(resolve_data_path(ev_compare));
      nwc::ExternalScore score = nwc::score_external_forecast(external, val.samples);
      reports.push_back(score.report);
      json orphans;
      orphans["unmatched_external"] = score.unmatched_external;
      orphans["unmatched_targets"] = score.unmatched_targets;
      std::ofstream oout(ev_out + "/orphans.json");
      oout << orphans.dump(2) << "\n";
    }
    write_eval_outputs(ev_out, reports, forecasts.front(), &val.samples.front(),
                       ev_plots);
    info("wrote " + ev_out + "/metrics.tsv");
    return 0;
  }

  if (sweep->parsed()) {
    sw_seed = env_seed(sw_seed);
    DirLock lock(sw_out);
    nwc::Dataset train_data = nwc::nwc1::read_file(resolve_data_path(sw_data));
    nwc::Dataset val_data = nwc::nwc1::read_file(resolve_data_path(sw_val));
    const std::vector<int> depths = parse_int_list(sw_depths);
    nwc::ModelSpec spec =
        sw_family.to_spec(train_data.spec.t_in, train_data.spec.t_out, sw_seed);
    nwc::TrainConfig config = sw_cfg.to_config(sw_seed);

    const std::vector<nwc::DepthSweepEntry> entries = nwc::temporal_depth_sweep(
        spec, train_data, val_data, depths, config, sw_out);

    std::ofstream table(sw_out + "/sweep.tsv");
    table << "depth\t";
    {
      std::ostringstream buf;
      nwc::write_metric_table(buf, {});
      table << buf.str();  // header row
    }
    for (const nwc::DepthSweepEntry& entry : entries) {
      std::ostringstream buf;
      nwc::write_metric_table(buf, {entry.result.report});
      std::istringstream lines(buf.str());
      std::string line;
      std::getline(lines, line);  // skip header
      while (std::getline(lines, line))
        table << entry.depth << "\t" << line << "\n";
    }
    info("wrote " + sw_out + "/sweep.tsv");
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_cli(argc, argv);
  } catch (const nwc::ValidationError& e) {
    std::cerr << "error code=validation msg=\"" << e.what() << "\"\n";
  } catch (const nwc::ConfigError& e) {
    std::cerr << "error code=config msg=\"" << e.what() << "\"\n";
  } catch (const nwc::BuildError& e) {
    std::cerr << "error code=build msg=\"" << e.what() << "\"\n";
  } catch (const nwc::GenerationError& e) {
    std::cerr << "error code=generation msg=\"" << e.what() << "\"\n";
  } catch (const nwc::DecodeError& e) {
    std::cerr << "error code=decode msg=\"" << e.what() << "\"\n";
  } catch (const nwc::PairingError& e) {
    std::cerr << "error code=pairing msg=\"" << e.what() << "\"\n";
  } catch (const std::exception& e) {
    std::cerr << "error code=internal msg=\"" << e.what() << "\"\n";
  }
  return 1;
}
