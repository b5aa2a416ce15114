#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "emanprint/dataset.hpp"
#include "emanprint/features.hpp"
#include "emanprint/nn.hpp"
#include "emanprint/synth.hpp"
#include "emanprint/voip.hpp"

namespace emanprint::pipeline {

struct ExtractOptions {
  bool filter_hum = false;
  features::FeatureConfig features;
};

/// Audio paths are resolved against base_dir unless absolute.
std::vector<features::FeatureVector> extract_manifest(const dataset::Manifest &manifest,
                                                      const std::filesystem::path &base_dir,
                                                      const ExtractOptions &options = {});

/// Features straight from synthesized audio, optionally pushed through a
/// channel first. Each record gets its own channel seed derived from
/// (channel.seed, record seed).
dataset::FeatureTable synth_feature_table(const synth::ExperimentGrid &grid,
                                          const synth::SynthConfig &synth_config,
                                          const std::optional<voip::ChannelConfig> &channel = {},
                                          const ExtractOptions &options = {});

/// Channel settings actually applied to one record.
voip::ChannelConfig record_channel(const voip::ChannelConfig &channel, std::uint64_t record_seed);

struct Evaluation {
  nn::TrainResult trained;
  dataset::SplitSpec split;
  nn::Metrics metrics; ///< on the test split
};

/// 60/20/20 stratified split, train on the first part with the second for
/// validation history, score on the third.
Evaluation train_and_evaluate(const dataset::FeatureTable &table, const nn::MlpArchitecture &arch,
                              const nn::TrainConfig &config, std::uint64_t split_seed);

Eigen::MatrixXd rows_of(const dataset::FeatureTable &table, std::span<const Eigen::Index> rows);
std::vector<int> labels_of(const dataset::FeatureTable &table, std::span<const Eigen::Index> rows);

} // namespace emanprint::pipeline
