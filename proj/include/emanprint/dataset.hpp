#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "emanprint/features.hpp"

namespace emanprint::dataset {

enum class Task { Movement, Workflow };

/// Integer codes follow declaration order.
enum class MovementLabel : int { X, Y, Z, XY, XZ, YZ, XYZ };
enum class WorkflowLabel : int { Push, Pull, PickAndPlace, Packing };

inline constexpr int kMovementClasses = 7;
inline constexpr int kWorkflowClasses = 4;

int class_count(Task task);
std::string_view task_name(Task task);
Task parse_task(std::string_view token);
std::string_view label_name(Task task, int label);
std::optional<int> parse_label(Task task, std::string_view token);
/// Task whose vocabulary contains the token, if any.
std::optional<Task> task_of_label(std::string_view token);

struct SampleRecord {
  std::string audio_path;
  int label = 0;
  double speed_mm_s = 12.5;
  double distance_mm = 1.0;
  double mic_cm = 30.0;
  double loss_pct = 0.0; ///< 0 means the clean (no VoIP) subset
  std::uint64_t seed = 0;
};

/// Grid membership for replication runs: mic in {30, 50, 100} and loss in
/// {0, 1, 5, 10, 25, 50}. Free values are legal elsewhere.
bool on_standard_grid(const SampleRecord &record);

struct Manifest {
  Task task = Task::Movement;
  std::vector<SampleRecord> records;
  std::uint64_t split_seed = 0;

  std::vector<int> labels() const;
};

void validate(const Manifest &manifest);

/// Line-oriented file: `task=<movement|workflow>` then one
/// `path,label,speed,distance,mic_cm,loss_pct,seed` line per record.
void write_manifest(const Manifest &manifest, const std::filesystem::path &path);
Manifest read_manifest(const std::filesystem::path &path);

struct SplitSpec {
  std::vector<Eigen::Index> train;
  std::vector<Eigen::Index> validation;
  std::vector<Eigen::Index> test;
};

/// Stratified 60/20/20 split. Within each class the indices are shuffled
/// with a seeded generator; validation and test each take round(0.2 n).
SplitSpec split_dataset(std::span<const int> labels, int classes, std::uint64_t seed);
SplitSpec split_dataset(const Manifest &manifest, std::uint64_t seed);

struct FeatureRow {
  int label = 0;
  double speed_mm_s = 0.0;
  double distance_mm = 0.0;
  double mic_cm = 0.0;
  double loss_pct = 0.0;
  features::FeatureValues values = features::FeatureValues::Zero();
};

struct FeatureTable {
  Task task = Task::Movement;
  std::vector<FeatureRow> rows;

  Eigen::MatrixXd matrix() const;  ///< rows x 21
  std::vector<int> labels() const;
};

FeatureTable make_feature_table(const Manifest &manifest,
                                std::span<const features::FeatureVector> vectors);

/// CSV with header `label,speed_mm_s,distance_mm,mic_cm,loss_pct,f0..f20`,
/// 17 significant digits, LF line endings.
void write_feature_table(const FeatureTable &table, const std::filesystem::path &path);
void export_feature_table(const Manifest &manifest,
                          std::span<const features::FeatureVector> vectors,
                          const std::filesystem::path &path);
FeatureTable import_feature_table(const std::filesystem::path &path);

std::string feature_table_header();

} // namespace emanprint::dataset
