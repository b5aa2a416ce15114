// emanprint: synthesize, featurize, train and evaluate acoustic movement
// fingerprints from the command line.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>

#include "emanprint/dataset.hpp"
#include "emanprint/features.hpp"
#include "emanprint/filter.hpp"
#include "emanprint/nn.hpp"
#include "emanprint/pipeline.hpp"
#include "emanprint/report.hpp"
#include "emanprint/synth.hpp"
#include "emanprint/voip.hpp"

namespace fs = std::filesystem;
using namespace emanprint;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kAdapter = 3 };

int exit_code_for(ErrorKind kind) {
  switch (kind) {
  case ErrorKind::InvalidArgument: return kUsage;
  case ErrorKind::AdapterUnavailable:
  case ErrorKind::Codec: return kAdapter;
  default: return kData;
  }
}

std::string number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

void ensure_dir(const fs::path &dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir))
    throw Error(ErrorKind::Io, "cannot create output directory " + dir.string());
}

struct SynthOverrides {
  double noise_snr_db = synth::SynthConfig{}.noise_snr_db;
  double hum_level = synth::SynthConfig{}.hum_level;
  double speed_slope = synth::SynthConfig{}.speed_pitch_slope;
  double attenuation = synth::SynthConfig{}.attenuation_exponent;
  int harmonics = synth::SynthConfig{}.harmonics;
  double pad_seconds = synth::SynthConfig{}.pad_seconds;

  void attach(CLI::App *cmd) {
    cmd->add_option("--noise-snr", noise_snr_db, "Noise floor below one axis tone (dB)")
        ->capture_default_str();
    cmd->add_option("--hum-level", hum_level, "60 Hz hum amplitude")->capture_default_str();
    cmd->add_option("--speed-slope", speed_slope, "Pitch rise in Hz per mm/s")
        ->capture_default_str();
    cmd->add_option("--attenuation", attenuation, "Microphone distance exponent")
        ->capture_default_str();
    cmd->add_option("--harmonics", harmonics, "Harmonics per axis")->capture_default_str();
    cmd->add_option("--pad", pad_seconds, "Silence before and after (s)")->capture_default_str();
  }

  synth::SynthConfig config() const {
    synth::SynthConfig c;
    c.noise_snr_db = noise_snr_db;
    c.hum_level = hum_level;
    c.speed_pitch_slope = speed_slope;
    c.attenuation_exponent = attenuation;
    c.harmonics = harmonics;
    c.pad_seconds = pad_seconds;
    return c;
  }
};

struct TrainOverrides {
  int epochs = 200;
  int batch = 32;
  double learning_rate = 0.001;
  std::vector<int> hidden{290, 350};
  double dropout = 0.05;

  void attach(CLI::App *cmd) {
    cmd->add_option("--epochs", epochs, "Training epochs")->capture_default_str()
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--batch", batch, "Mini-batch size")->capture_default_str()
        ->check(CLI::PositiveNumber);
    cmd->add_option("--lr", learning_rate, "Adam learning rate")->capture_default_str();
    cmd->add_option("--hidden", hidden, "Hidden layer widths")->delimiter(',')
        ->capture_default_str();
    cmd->add_option("--dropout", dropout, "Dropout after each hidden layer")
        ->capture_default_str();
  }

  nn::TrainConfig config(std::uint64_t seed) const {
    nn::TrainConfig c;
    c.epochs = epochs;
    c.batch_size = batch;
    c.learning_rate = learning_rate;
    c.seed = seed;
    return c;
  }

  nn::MlpArchitecture architecture(int classes) const {
    nn::MlpArchitecture a;
    a.output_dim = classes;
    a.hidden.clear();
    for (int u : hidden)
      a.hidden.push_back({u, nn::Activation::ReLU, dropout});
    return a;
  }
};


// ---------------------------------------------------------------- synth

struct SynthArgs {
  std::string task = "movement";
  int per_cell = 1;
  bool baseline = false;
  std::vector<double> distances, speeds, mics;
  SynthOverrides synth;
};

int cmd_synth(const SynthArgs &a, std::uint64_t seed, const fs::path &out) {
  synth::ExperimentGrid grid;
  if (dataset::parse_task(a.task) == dataset::Task::Workflow)
    grid = synth::ExperimentGrid::workflows(a.per_cell, seed);
  else if (a.baseline)
    grid = synth::ExperimentGrid::baseline_movements(a.per_cell, seed);
  else
    grid = synth::ExperimentGrid::standard_movements(a.per_cell, seed);
  if (!a.distances.empty())
    grid.distances_mm = a.distances;
  if (!a.speeds.empty())
    grid.speeds_mm_s = a.speeds;
  if (!a.mics.empty())
    grid.mics_cm = a.mics;
  const auto manifest = synth::corpus_generate(grid, a.synth.config(), out);
  std::cout << "wrote " << manifest.records.size() << " files and "
            << (out / synth::kManifestFileName).string() << "\n";
  return kOk;
}

// -------------------------------------------------------------- extract

int cmd_extract(const fs::path &manifest_path, bool filter_hum, const fs::path &out) {
  const auto manifest = dataset::read_manifest(manifest_path);
  pipeline::ExtractOptions opt;
  opt.filter_hum = filter_hum;
  const auto vectors = pipeline::extract_manifest(manifest, manifest_path.parent_path(), opt);
  ensure_dir(out);
  const fs::path csv = out / "features.csv";
  dataset::export_feature_table(manifest, vectors, csv);
  std::cout << "wrote " << vectors.size() << " feature rows to " << csv.string() << "\n";
  return kOk;
}

// ---------------------------------------------------------- train / eval

int cmd_train(const fs::path &features_path, const TrainOverrides &t, std::uint64_t seed,
              std::uint64_t split_seed, const fs::path &out) {
  const auto table = dataset::import_feature_table(features_path);
  const auto ev = pipeline::train_and_evaluate(
      table, t.architecture(dataset::class_count(table.task)), t.config(seed), split_seed);
  ensure_dir(out);
  nn::save_checkpoint(ev.trained.classifier, out / "model.bin");
  nn::write_history(ev.trained.history, out / "history.csv");
  std::cout << "trained " << ev.trained.classifier.model.architecture().describe() << " on "
            << ev.split.train.size() << " rows; test accuracy "
            << number(100.0 * ev.metrics.accuracy) << "%\n"
            << "wrote " << (out / "model.bin").string() << " and "
            << (out / "history.csv").string() << "\n";
  return kOk;
}

int cmd_eval(const fs::path &model_path, const fs::path &features_path, bool all_rows,
             const std::string &title, const fs::path &out) {
  auto clf = nn::load_checkpoint(model_path);
  const auto table = dataset::import_feature_table(features_path);
  const int classes = dataset::class_count(table.task);
  if (clf.model.architecture().output_dim != classes)
    throw Error(ErrorKind::DimensionMismatch, "model and feature table disagree on class count");
  std::vector<Eigen::Index> rows;
  if (all_rows) {
    for (std::size_t i = 0; i < table.rows.size(); ++i)
      rows.push_back(static_cast<Eigen::Index>(i));
  } else {
    rows = dataset::split_dataset(table.labels(), classes, clf.split_seed).test;
  }
  const auto metrics = nn::evaluate_metrics(clf, pipeline::rows_of(table, rows),
                                            pipeline::labels_of(table, rows));
  report::Report r{title, table.task, {{all_rows ? "All rows" : "Test split", metrics}}};
  ensure_dir(out);
  report::write_report(r, out / "report");
  std::cout << report::render_text(r);
  return kOk;
}

// -------------------------------------------------------------- degrade

struct DegradeArgs {
  fs::path manifest;
  std::vector<double> losses{1, 5, 10, 25, 50};
  std::string codec = "opus";
  std::string bitrate = "vbr";
  double frame_ms = 20.0;
};

int cmd_degrade(const DegradeArgs &a, std::uint64_t seed, const fs::path &out) {
  const auto manifest = dataset::read_manifest(a.manifest);
  const fs::path base = a.manifest.parent_path();
  dataset::Manifest degraded;
  degraded.task = manifest.task;
  degraded.split_seed = manifest.split_seed;
  voip::ChannelConfig channel;
  channel.codec = voip::parse_codec(a.codec);
  channel.bitrate_mode =
      a.bitrate == "cbr" ? voip::BitrateMode::Constant : voip::BitrateMode::Variable;
  channel.frame_ms = a.frame_ms;
  channel.seed = seed;
  if (channel.codec == voip::Codec::Opus && !voip::opus_available())
    throw Error(ErrorKind::AdapterUnavailable,
                "this build has no Opus codec; rerun with --codec null");
  for (double loss : a.losses) {
    const std::string sub = "L" + number(loss);
    ensure_dir(out / sub);
    channel.loss_pct = loss;
    for (const auto &r : manifest.records) {
      const fs::path src(r.audio_path);
      const auto audio = load_wav(src.is_absolute() ? src : base / src);
      dataset::SampleRecord rec = r;
      rec.loss_pct = loss;
      rec.audio_path = (fs::path(sub) / src.filename()).generic_string();
      save_wav(voip::degrade_signal(audio, pipeline::record_channel(channel, r.seed)),
               out / rec.audio_path);
      degraded.records.push_back(std::move(rec));
    }
  }
  dataset::write_manifest(degraded, out / synth::kManifestFileName);
  std::cout << "wrote " << degraded.records.size() << " degraded files ("
            << a.codec << ") and " << (out / synth::kManifestFileName).string()
            << "\n";
  return kOk;
}

// ----------------------------------------------------------- experiment

struct ExperimentArgs {
  std::string axis = "baseline";
  int per_cell = 50;
  std::vector<double> values;
  std::string codec = "opus";
  SynthOverrides synth;
  TrainOverrides train;
};

struct AxisColumn {
  std::string heading;
  synth::ExperimentGrid grid;
  std::optional<voip::ChannelConfig> channel;
  bool filter_hum = false;
};

std::vector<AxisColumn> axis_columns(const ExperimentArgs &a, std::uint64_t seed,
                                     std::string &title) {
  const auto base = synth::ExperimentGrid::baseline_movements(a.per_cell, seed);
  const auto pick = [&](std::vector<double> defaults) {
    return a.values.empty() ? defaults : a.values;
  };
  std::vector<AxisColumn> cols;
  if (a.axis == "baseline") {
    title = "Baseline movement classification (P = precision, R = recall)";
    cols.push_back({"Baseline", base, {}, false});
  } else if (a.axis == "distance") {
    title = "Movement classification by distance (D = distance in mm, P = precision, R = recall)";
    for (double d : pick({1, 2, 5, 10, 25, 50})) {
      auto g = base;
      g.distances_mm = {d};
      cols.push_back({"D=" + number(d), g, {}, false});
    }
  } else if (a.axis == "speed") {
    title = "Movement classification by speed (S = speed in mm/s, P = precision, R = recall)";
    for (double s : pick({12.5, 25, 50, 75, 100})) {
      auto g = base;
      g.speeds_mm_s = {s};
      cols.push_back({"S=" + number(s), g, {}, false});
    }
  } else if (a.axis == "mic-distance") {
    title = "Movement classification by microphone distance (MD in cm, P = precision, R = "
            "recall)";
    for (double m : pick({30, 50, 100})) {
      auto g = base;
      g.mics_cm = {m};
      cols.push_back({"MD=" + number(m), g, {}, false});
    }
  } else if (a.axis == "workflow") {
    title = "Workflow classification (P = precision, R = recall)";
    cols.push_back({"Workflow", synth::ExperimentGrid::workflows(a.per_cell, seed), {}, false});
  } else if (a.axis == "loss") {
    title = "Movement classification after VoIP transmission (L = packet loss in %, P = "
            "precision, R = recall)";
    for (double l : pick({1, 5, 10, 25, 50})) {
      voip::ChannelConfig ch;
      ch.codec = voip::parse_codec(a.codec);
      ch.loss_pct = l;
      ch.seed = seed;
      cols.push_back({"L=" + number(l), base, ch, false});
    }
  } else if (a.axis == "filter") {
    title = "Movement classification with and without the hum filter (P = precision, R = recall)";
    cols.push_back({"Unfiltered", base, {}, false});
    cols.push_back({"Filtered", base, {}, true});
  }
  return cols;
}

int cmd_experiment(const ExperimentArgs &a, std::uint64_t seed, const fs::path &out) {
  std::string title;
  const auto cols = axis_columns(a, seed, title);
  ensure_dir(out);
  report::Report r;
  r.title = title;
  r.task = cols.front().grid.task;
  for (const auto &c : cols) {
    pipeline::ExtractOptions opt;
    opt.filter_hum = c.filter_hum;
    const auto table = pipeline::synth_feature_table(c.grid, a.synth.config(), c.channel, opt);
    dataset::write_feature_table(table, out / (a.axis + "_" + c.heading + "_features.csv"));
    const auto ev = pipeline::train_and_evaluate(
        table, a.train.architecture(dataset::class_count(table.task)), a.train.config(seed), seed);
    std::cerr << c.heading << ": test accuracy " << number(100.0 * ev.metrics.accuracy) << "%\n";
    r.columns.push_back({c.heading, ev.metrics});
  }
  report::write_report(r, out / (a.axis + "_report"));
  std::cout << report::render_text(r);
  return kOk;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Acoustic movement fingerprinting toolkit"};
  app.set_config("--config", "", "key=value file with option defaults");
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  fs::path out = ".";
  const auto common = [&](CLI::App *cmd, const std::string &out_help) {
    cmd->add_option("--seed", seed, "Master seed")->envname("EMANPRINT_SEED")
        ->capture_default_str();
    cmd->add_option("--out", out, out_help)->capture_default_str();
  };

  SynthArgs synth_args;
  auto *synth_cmd = app.add_subcommand("synth", "Generate a labelled synthetic corpus");
  common(synth_cmd, "Output directory");
  synth_cmd->add_option("--task", synth_args.task, "movement or workflow")
      ->check(CLI::IsMember({"movement", "workflow"}))->capture_default_str();
  synth_cmd->add_option("--per-cell", synth_args.per_cell, "Samples per grid cell")
      ->check(CLI::PositiveNumber)->capture_default_str();
  synth_cmd->add_flag("--baseline", synth_args.baseline,
                      "Only the 1 mm, 12.5 mm/s, 30 cm cell");
  synth_cmd->add_option("--distances", synth_args.distances, "Distances (mm)")->delimiter(',');
  synth_cmd->add_option("--speeds", synth_args.speeds, "Speeds (mm/s)")->delimiter(',');
  synth_cmd->add_option("--mics", synth_args.mics, "Microphone distances (cm)")->delimiter(',');
  synth_args.synth.attach(synth_cmd);

  fs::path manifest_path;
  bool filter_hum = false;
  auto *extract_cmd = app.add_subcommand("extract", "Compute the 21 features for a manifest");
  common(extract_cmd, "Directory for features.csv");
  extract_cmd->add_option("--manifest", manifest_path, "Manifest file")->required();
  extract_cmd->add_flag("--filter-hum", filter_hum, "Remove 55-65 Hz and out-of-hearing bins");

  fs::path features_path;
  TrainOverrides train_args;
  std::optional<std::uint64_t> split_seed;
  auto *train_cmd = app.add_subcommand("train", "Train a classifier on a feature CSV");
  common(train_cmd, "Directory for model.bin and history.csv");
  train_cmd->add_option("--features", features_path, "Feature CSV")->required();
  train_cmd->add_option("--split-seed", split_seed, "Split seed (defaults to --seed)");
  train_args.attach(train_cmd);

  fs::path model_path;
  bool all_rows = false;
  std::string title;
  auto *eval_cmd = app.add_subcommand("eval", "Score a trained model and print the report");
  common(eval_cmd, "Directory for report.txt and report.csv");
  eval_cmd->add_option("--model", model_path, "Checkpoint from train")->required();
  eval_cmd->add_option("--features", features_path, "Feature CSV")->required();
  eval_cmd->add_flag("--all", all_rows, "Score every row instead of the held-out test split");
  eval_cmd->add_option("--title", title, "Report title");

  DegradeArgs degrade_args;
  auto *degrade_cmd = app.add_subcommand("degrade", "Pass a corpus through a lossy VoIP channel");
  common(degrade_cmd, "Output directory");
  degrade_cmd->add_option("--manifest", degrade_args.manifest, "Manifest file")->required();
  degrade_cmd->add_option("--loss", degrade_args.losses, "Packet loss rates (%)")
      ->delimiter(',')->check(CLI::Range(0.0, 100.0))->capture_default_str();
  degrade_cmd->add_option("--codec", degrade_args.codec, "Channel codec")
      ->check(CLI::IsMember({"opus", "null"}))->capture_default_str();
  degrade_cmd->add_option("--bitrate-mode", degrade_args.bitrate, "Variable or constant bitrate")
      ->check(CLI::IsMember({"vbr", "cbr"}))->capture_default_str();
  degrade_cmd->add_option("--frame-ms", degrade_args.frame_ms, "Packet duration")
      ->capture_default_str();

  ExperimentArgs exp_args;
  auto *exp_cmd = app.add_subcommand("experiment", "Synthesize, train and report along one axis");
  common(exp_cmd, "Directory for reports and feature tables");
  exp_cmd->add_option("--axis", exp_args.axis, "Grid axis")
      ->check(CLI::IsMember(
          {"baseline", "distance", "speed", "mic-distance", "workflow", "loss", "filter"}))
      ->capture_default_str();
  exp_cmd->add_option("--per-cell", exp_args.per_cell, "Samples per class and column")
      ->check(CLI::PositiveNumber)->capture_default_str();
  exp_cmd->add_option("--values", exp_args.values, "Override the axis values")->delimiter(',');
  exp_cmd->add_option("--codec", exp_args.codec, "Codec for the loss axis")
      ->check(CLI::IsMember({"opus", "null"}))->capture_default_str();
  exp_args.synth.attach(exp_cmd);
  exp_args.train.attach(exp_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*synth_cmd)
      return cmd_synth(synth_args, seed, out);
    if (*extract_cmd)
      return cmd_extract(manifest_path, filter_hum, out);
    if (*train_cmd)
      return cmd_train(features_path, train_args, seed, split_seed.value_or(seed), out);
    if (*eval_cmd)
      return cmd_eval(model_path, features_path, all_rows, title, out);
    if (*degrade_cmd)
      return cmd_degrade(degrade_args, seed, out);
    if (*exp_cmd)
      return cmd_experiment(exp_args, seed, out);
  } catch (const Error &e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  }
  return kUsage;
}
