#include "emanprint/dataset.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "emanprint/random.hpp"

namespace emanprint::dataset {

namespace {

constexpr std::array<std::string_view, kMovementClasses> kMovementNames{"X",  "Y",  "Z",  "XY",
                                                                        "XZ", "YZ", "XYZ"};
constexpr std::array<std::string_view, kWorkflowClasses> kWorkflowNames{"Push", "Pull",
                                                                        "PickAndPlace", "Packing"};
constexpr std::string_view kMetaHeader = "label,speed_mm_s,distance_mm,mic_cm,loss_pct";
constexpr std::size_t kFeatureColumns = 5 + static_cast<std::size_t>(features::kFeatureDim);

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    cells.push_back(line.substr(start, comma == std::string_view::npos ? comma : comma - start));
    if (comma == std::string_view::npos)
      return cells;
    start = comma + 1;
  }
}

std::string_view strip_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r')
    line.remove_suffix(1);
  return line;
}

template <typename T> T parse_number(std::string_view cell, const std::string &where) {
  T value{};
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc() || ptr != cell.data() + cell.size() || cell.empty())
    throw Error(ErrorKind::Parse, where + ": not a number: '" + std::string(cell) + "'");
  if constexpr (std::is_floating_point_v<T>)
    if (!std::isfinite(value))
      throw Error(ErrorKind::Parse, where + ": non-finite value");
  return value;
}

std::string shortest(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string full_precision(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_for_write(const std::filesystem::path &path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw Error(ErrorKind::Io, "cannot write " + path.string());
  return out;
}

std::ifstream open_for_read(const std::filesystem::path &path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec))
    throw Error(ErrorKind::FileNotFound, "no such file: " + path.string());
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error(ErrorKind::Io, "cannot open " + path.string());
  return in;
}

void check_label(Task task, int label) {
  if (label < 0 || label >= class_count(task))
    throw Error(ErrorKind::LabelOutOfRange, "label " + std::to_string(label) + " out of range for " +
                                                std::string(task_name(task)) + " task");
}

} // namespace

int class_count(Task task) {
  return task == Task::Movement ? kMovementClasses : kWorkflowClasses;
}

std::string_view task_name(Task task) {
  return task == Task::Movement ? "movement" : "workflow";
}

Task parse_task(std::string_view token) {
  if (token == "movement")
    return Task::Movement;
  if (token == "workflow")
    return Task::Workflow;
  throw Error(ErrorKind::Parse, "unknown task '" + std::string(token) + "'");
}

std::string_view label_name(Task task, int label) {
  check_label(task, label);
  return task == Task::Movement ? kMovementNames[static_cast<std::size_t>(label)]
                                : kWorkflowNames[static_cast<std::size_t>(label)];
}

std::optional<int> parse_label(Task task, std::string_view token) {
  const auto search = [token](const auto &names) -> std::optional<int> {
    const auto it = std::find(names.begin(), names.end(), token);
    if (it == names.end())
      return std::nullopt;
    return static_cast<int>(it - names.begin());
  };
  return task == Task::Movement ? search(kMovementNames) : search(kWorkflowNames);
}

std::optional<Task> task_of_label(std::string_view token) {
  if (parse_label(Task::Movement, token))
    return Task::Movement;
  if (parse_label(Task::Workflow, token))
    return Task::Workflow;
  return std::nullopt;
}

bool on_standard_grid(const SampleRecord &r) {
  constexpr std::array mics{30.0, 50.0, 100.0};
  constexpr std::array losses{0.0, 1.0, 5.0, 10.0, 25.0, 50.0};
  return std::find(mics.begin(), mics.end(), r.mic_cm) != mics.end() &&
         std::find(losses.begin(), losses.end(), r.loss_pct) != losses.end();
}

std::vector<int> Manifest::labels() const {
  std::vector<int> out;
  out.reserve(records.size());
  for (const auto &r : records)
    out.push_back(r.label);
  return out;
}

void validate(const Manifest &manifest) {
  if (manifest.records.empty())
    throw Error(ErrorKind::InvalidArgument, "manifest has no records");
  for (const auto &r : manifest.records) {
    check_label(manifest.task, r.label);
    if (!(r.speed_mm_s > 0.0) || !(r.distance_mm > 0.0) || !(r.mic_cm > 0.0))
      throw Error(ErrorKind::InvalidArgument, r.audio_path + ": speed, distance and mic must be positive");
    if (!(r.loss_pct >= 0.0 && r.loss_pct <= 100.0))
      throw Error(ErrorKind::InvalidArgument, r.audio_path + ": loss_pct outside [0, 100]");
  }
}

void write_manifest(const Manifest &manifest, const std::filesystem::path &path) {
  validate(manifest);
  std::ofstream out = open_for_write(path);
  out << "task=" << task_name(manifest.task) << '\n';
  for (const auto &r : manifest.records) {
    if (r.audio_path.find_first_of(",\n") != std::string::npos)
      throw Error(ErrorKind::InvalidArgument, "audio path may not contain ',' or newline: " + r.audio_path);
    out << r.audio_path << ',' << label_name(manifest.task, r.label) << ',' << shortest(r.speed_mm_s)
        << ',' << shortest(r.distance_mm) << ',' << shortest(r.mic_cm) << ','
        << shortest(r.loss_pct) << ',' << r.seed << '\n';
  }
  if (!out)
    throw Error(ErrorKind::Io, "short write to " + path.string());
}

Manifest read_manifest(const std::filesystem::path &path) {
  std::ifstream in = open_for_read(path);
  std::string line;
  if (!std::getline(in, line))
    throw Error(ErrorKind::Parse, path.string() + ": empty manifest");
  std::string_view header = strip_cr(line);
  if (!header.starts_with("task="))
    throw Error(ErrorKind::Parse, path.string() + ": first line must be task=<movement|workflow>");
  Manifest manifest;
  manifest.task = parse_task(header.substr(5));

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view text = strip_cr(line);
    if (text.empty())
      continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    const auto cells = split_commas(text);
    if (cells.size() != 7)
      throw Error(ErrorKind::Parse, where + ": expected 7 columns, found " + std::to_string(cells.size()));
    SampleRecord r;
    r.audio_path = std::string(cells[0]);
    const auto label = parse_label(manifest.task, cells[1]);
    if (!label)
      throw Error(ErrorKind::LabelOutOfRange, where + ": unknown label '" + std::string(cells[1]) + "'");
    r.label = *label;
    r.speed_mm_s = parse_number<double>(cells[2], where);
    r.distance_mm = parse_number<double>(cells[3], where);
    r.mic_cm = parse_number<double>(cells[4], where);
    r.loss_pct = parse_number<double>(cells[5], where);
    r.seed = parse_number<std::uint64_t>(cells[6], where);
    manifest.records.push_back(std::move(r));
  }
  validate(manifest);
  return manifest;
}

SplitSpec split_dataset(std::span<const int> labels, int classes, std::uint64_t seed) {
  std::vector<std::vector<Eigen::Index>> members(static_cast<std::size_t>(classes));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= classes)
      throw Error(ErrorKind::LabelOutOfRange, "label " + std::to_string(labels[i]) + " out of range");
    members[static_cast<std::size_t>(labels[i])].push_back(static_cast<Eigen::Index>(i));
  }
  SplitSpec split;
  for (int c = 0; c < classes; ++c) {
    auto &idx = members[static_cast<std::size_t>(c)];
    if (idx.size() < 5)
      throw Error(ErrorKind::InvalidArgument,
                  "class " + std::to_string(c) + " has " + std::to_string(idx.size()) +
                      " samples; splitting needs at least 5");
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(c)));
    shuffle(std::span<Eigen::Index>(idx), rng);
    const auto fifth = static_cast<std::size_t>(std::lround(0.2 * static_cast<double>(idx.size())));
    split.test.insert(split.test.end(), idx.begin(), idx.begin() + static_cast<long>(fifth));
    split.validation.insert(split.validation.end(), idx.begin() + static_cast<long>(fifth),
                            idx.begin() + static_cast<long>(2 * fifth));
    split.train.insert(split.train.end(), idx.begin() + static_cast<long>(2 * fifth), idx.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.validation.begin(), split.validation.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

SplitSpec split_dataset(const Manifest &manifest, std::uint64_t seed) {
  const std::vector<int> labels = manifest.labels();
  return split_dataset(labels, class_count(manifest.task), seed);
}

Eigen::MatrixXd FeatureTable::matrix() const {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), features::kFeatureDim);
  for (std::size_t i = 0; i < rows.size(); ++i)
    m.row(static_cast<Eigen::Index>(i)) = rows[i].values.transpose();
  return m;
}

std::vector<int> FeatureTable::labels() const {
  std::vector<int> out;
  out.reserve(rows.size());
  for (const auto &r : rows)
    out.push_back(r.label);
  return out;
}

FeatureTable make_feature_table(const Manifest &manifest,
                                std::span<const features::FeatureVector> vectors) {
  if (vectors.size() != manifest.records.size())
    throw Error(ErrorKind::DimensionMismatch,
                "feature count " + std::to_string(vectors.size()) + " does not match " +
                    std::to_string(manifest.records.size()) + " manifest records");
  FeatureTable table;
  table.task = manifest.task;
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    const SampleRecord &r = manifest.records[i];
    table.rows.push_back({r.label, r.speed_mm_s, r.distance_mm, r.mic_cm, r.loss_pct, vectors[i].values});
  }
  return table;
}

std::string feature_table_header() {
  std::string header(kMetaHeader);
  for (int i = 0; i < features::kFeatureDim; ++i)
    header += ",f" + std::to_string(i);
  return header;
}

void write_feature_table(const FeatureTable &table, const std::filesystem::path &path) {
  std::ofstream out = open_for_write(path);
  out << feature_table_header() << '\n';
  for (const auto &row : table.rows) {
    out << label_name(table.task, row.label) << ',' << full_precision(row.speed_mm_s) << ','
        << full_precision(row.distance_mm) << ',' << full_precision(row.mic_cm) << ','
        << full_precision(row.loss_pct);
    for (Eigen::Index i = 0; i < features::kFeatureDim; ++i)
      out << ',' << full_precision(row.values[i]);
    out << '\n';
  }
  if (!out)
    throw Error(ErrorKind::Io, "short write to " + path.string());
}

void export_feature_table(const Manifest &manifest,
                          std::span<const features::FeatureVector> vectors,
                          const std::filesystem::path &path) {
  write_feature_table(make_feature_table(manifest, vectors), path);
}

FeatureTable import_feature_table(const std::filesystem::path &path) {
  std::ifstream in = open_for_read(path);
  std::string line;
  if (!std::getline(in, line) || strip_cr(line) != feature_table_header())
    throw Error(ErrorKind::Parse, path.string() + ": header does not match " + feature_table_header());

  FeatureTable table;
  std::optional<Task> task;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view text = strip_cr(line);
    if (text.empty())
      continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    const auto cells = split_commas(text);
    if (cells.size() != kFeatureColumns)
      throw Error(ErrorKind::Parse, where + ": expected " + std::to_string(kFeatureColumns) +
                                        " columns, found " + std::to_string(cells.size()));
    const auto row_task = task_of_label(cells[0]);
    if (!row_task)
      throw Error(ErrorKind::LabelOutOfRange, where + ": unknown label '" + std::string(cells[0]) + "'");
    if (task && *task != *row_task)
      throw Error(ErrorKind::LabelOutOfRange, where + ": label '" + std::string(cells[0]) +
                                                  "' mixes movement and workflow tasks");
    task = row_task;
    FeatureRow row;
    row.label = *parse_label(*task, cells[0]);
    row.speed_mm_s = parse_number<double>(cells[1], where);
    row.distance_mm = parse_number<double>(cells[2], where);
    row.mic_cm = parse_number<double>(cells[3], where);
    row.loss_pct = parse_number<double>(cells[4], where);
    if (row.speed_mm_s <= 0.0 || row.distance_mm <= 0.0 || row.mic_cm <= 0.0 ||
        row.loss_pct < 0.0 || row.loss_pct > 100.0)
      throw Error(ErrorKind::Parse, where + ": metadata out of range");
    for (Eigen::Index i = 0; i < features::kFeatureDim; ++i)
      row.values[i] = parse_number<double>(cells[static_cast<std::size_t>(5 + i)], where);
    table.rows.push_back(row);
  }
  if (table.rows.empty())
    throw Error(ErrorKind::Parse, path.string() + ": no data rows");
  table.task = *task;
  return table;
}

} // namespace emanprint::dataset
