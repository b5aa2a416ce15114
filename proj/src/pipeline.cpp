#include "emanprint/pipeline.hpp"

#include "emanprint/filter.hpp"
#include "emanprint/random.hpp"

namespace emanprint::pipeline {

namespace {

features::FeatureVector featurize(AudioSignal signal, const ExtractOptions &options) {
  if (options.filter_hum)
    signal = dsp::amplitude_filter(signal);
  return features::extract_feature_vector(signal, options.features);
}

} // namespace

std::vector<features::FeatureVector> extract_manifest(const dataset::Manifest &manifest,
                                                      const std::filesystem::path &base_dir,
                                                      const ExtractOptions &options) {
  dataset::validate(manifest);
  std::vector<features::FeatureVector> out;
  out.reserve(manifest.records.size());
  for (const auto &r : manifest.records) {
    const std::filesystem::path p(r.audio_path);
    out.push_back(featurize(load_wav(p.is_absolute() ? p : base_dir / p), options));
  }
  return out;
}

voip::ChannelConfig record_channel(const voip::ChannelConfig &channel, std::uint64_t record_seed) {
  voip::ChannelConfig c = channel;
  c.seed = derive_seed(channel.seed, record_seed);
  return c;
}

dataset::FeatureTable synth_feature_table(const synth::ExperimentGrid &grid,
                                          const synth::SynthConfig &synth_config,
                                          const std::optional<voip::ChannelConfig> &channel,
                                          const ExtractOptions &options) {
  dataset::Manifest manifest = synth::enumerate_corpus(grid);
  std::vector<features::FeatureVector> vectors;
  vectors.reserve(manifest.records.size());
  for (auto &r : manifest.records) {
    AudioSignal audio = synth::render_record(grid.task, r, synth_config);
    if (channel) {
      audio = voip::degrade_signal(audio, record_channel(*channel, r.seed));
      r.loss_pct = channel->loss_pct;
    }
    vectors.push_back(featurize(std::move(audio), options));
  }
  return dataset::make_feature_table(manifest, vectors);
}

Eigen::MatrixXd rows_of(const dataset::FeatureTable &table, std::span<const Eigen::Index> rows) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), features::kFeatureDim);
  for (std::size_t i = 0; i < rows.size(); ++i)
    x.row(static_cast<Eigen::Index>(i)) =
        table.rows.at(static_cast<std::size_t>(rows[i])).values.transpose();
  return x;
}

std::vector<int> labels_of(const dataset::FeatureTable &table,
                           std::span<const Eigen::Index> rows) {
  std::vector<int> y;
  y.reserve(rows.size());
  for (Eigen::Index r : rows)
    y.push_back(table.rows.at(static_cast<std::size_t>(r)).label);
  return y;
}

Evaluation train_and_evaluate(const dataset::FeatureTable &table, const nn::MlpArchitecture &arch,
                              const nn::TrainConfig &config, std::uint64_t split_seed) {
  const auto labels = table.labels();
  Evaluation ev;
  ev.split = dataset::split_dataset(labels, dataset::class_count(table.task), split_seed);
  ev.trained = nn::train(arch, rows_of(table, ev.split.train), labels_of(table, ev.split.train),
                         rows_of(table, ev.split.validation),
                         labels_of(table, ev.split.validation), config);
  ev.trained.classifier.split_seed = split_seed;
  ev.metrics = nn::evaluate_metrics(ev.trained.classifier, rows_of(table, ev.split.test),
                                    labels_of(table, ev.split.test));
  return ev;
}

} // namespace emanprint::pipeline
