#include "emanprint/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

namespace emanprint::report {

namespace {

std::string percent(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f%%", 100.0 * v);
  return buf;
}

std::string fraction(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string pad_left(const std::string &s, std::size_t width) {
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

std::string pad_right(const std::string &s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

std::string centre(const std::string &s, std::size_t width) {
  if (s.size() >= width)
    return s;
  const std::size_t left = (width - s.size()) / 2;
  return std::string(left, ' ') + s + std::string(width - s.size() - left, ' ');
}

void check_columns(const Report &r) {
  const int classes = dataset::class_count(r.task);
  if (r.columns.empty())
    throw Error(ErrorKind::InvalidArgument, "report has no columns");
  for (const auto &c : r.columns)
    if (c.metrics.precision.size() != classes || c.metrics.recall.size() != classes)
      throw Error(ErrorKind::DimensionMismatch, "metrics do not match the task's classes");
}

} // namespace

std::string render_text(const Report &r) {
  check_columns(r);
  const int classes = dataset::class_count(r.task);
  std::size_t label_w = std::string("Accuracy").size();
  for (int c = 0; c < classes; ++c)
    label_w = std::max(label_w, dataset::label_name(r.task, c).size());
  constexpr std::size_t cell_w = 7;
  std::size_t group_w = 2 * cell_w + 1;
  for (const auto &col : r.columns)
    group_w = std::max(group_w, col.heading.size());

  std::string out;
  if (!r.title.empty())
    out += r.title + "\n";
  const std::string rule = std::string(label_w, '-') +
                           [&] {
                             std::string s;
                             for (std::size_t i = 0; i < r.columns.size(); ++i)
                               s += "-+-" + std::string(group_w, '-');
                             return s;
                           }() +
                           "\n";
  std::string line = pad_right("", label_w);
  for (const auto &col : r.columns)
    line += " | " + centre(col.heading, group_w);
  out += line + "\n";
  line = pad_right("Class", label_w);
  for (std::size_t i = 0; i < r.columns.size(); ++i)
    line += " | " + pad_left(pad_left("P", cell_w) + " " + pad_left("R", cell_w), group_w);
  out += line + "\n" + rule;
  for (int c = 0; c < classes; ++c) {
    line = pad_right(std::string(dataset::label_name(r.task, c)), label_w);
    for (const auto &col : r.columns)
      line += " | " + pad_left(pad_left(percent(col.metrics.precision[c]), cell_w) + " " +
                                   pad_left(percent(col.metrics.recall[c]), cell_w),
                               group_w);
    out += line + "\n";
  }
  out += rule;
  line = pad_right("Accuracy", label_w);
  for (const auto &col : r.columns)
    line += " | " + centre(percent(col.metrics.accuracy), group_w);
  return out + line + "\n";
}

std::string render_csv(const Report &r) {
  check_columns(r);
  std::string out = "class";
  for (const auto &col : r.columns)
    out += "," + col.heading + " P," + col.heading + " R";
  out += "\n";
  for (int c = 0; c < dataset::class_count(r.task); ++c) {
    out += dataset::label_name(r.task, c);
    for (const auto &col : r.columns)
      out += "," + fraction(col.metrics.precision[c]) + "," + fraction(col.metrics.recall[c]);
    out += "\n";
  }
  out += "Accuracy";
  for (const auto &col : r.columns)
    out += "," + fraction(col.metrics.accuracy) + ",";
  return out + "\n";
}

void write_report(const Report &r, const std::filesystem::path &stem) {
  for (const auto &[ext, body] : {std::pair{".txt", render_text(r)}, {".csv", render_csv(r)}}) {
    auto path = stem;
    path += ext;
    std::ofstream out(path);
    out << body;
    if (!out)
      throw Error(ErrorKind::Io, "cannot write " + path.string());
  }
}

} // namespace emanprint::report
