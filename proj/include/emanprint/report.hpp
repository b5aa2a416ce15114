#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "emanprint/dataset.hpp"
#include "emanprint/nn.hpp"

namespace emanprint::report {

struct Column {
  std::string heading; ///< grid value, e.g. "D=5" or "L=25"
  nn::Metrics metrics;
};

/// Per-class precision/recall with one column group per grid value and a
/// closing accuracy row.
struct Report {
  std::string title;
  dataset::Task task = dataset::Task::Movement;
  std::vector<Column> columns;
};

std::string render_text(const Report &report);
/// Header `class,<h> P,<h> R,...`; values are fractions with 6 decimals.
std::string render_csv(const Report &report);

/// Writes <stem>.txt and <stem>.csv.
void write_report(const Report &report, const std::filesystem::path &stem);

} // namespace emanprint::report
