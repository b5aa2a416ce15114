#include <doctest.h>

#include <fstream>
#include <set>

#include "emanprint/dataset.hpp"
#include "test_util.hpp"

using namespace emanprint;
using namespace emanprint::dataset;

namespace {

std::vector<int> balanced_labels(int classes, int per_class) {
  std::vector<int> labels;
  for (int i = 0; i < per_class; ++i)
    for (int c = 0; c < classes; ++c)
      labels.push_back(c);
  return labels;
}

int count_class(const std::vector<Eigen::Index> &idx, const std::vector<int> &labels, int c) {
  return static_cast<int>(std::count_if(idx.begin(), idx.end(), [&](Eigen::Index i) {
    return labels[static_cast<std::size_t>(i)] == c;
  }));
}

Manifest small_manifest(std::size_t n) {
  Manifest m;
  m.task = Task::Movement;
  for (std::size_t i = 0; i < n; ++i)
    m.records.push_back({"a" + std::to_string(i) + ".wav", static_cast<int>(i % 7), 12.5, 1.0, 30.0, 0.0, i});
  return m;
}

std::vector<features::FeatureVector> random_vectors(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<features::FeatureVector> out(n);
  for (auto &v : out)
    for (Eigen::Index i = 0; i < features::kFeatureDim; ++i)
      v.values[i] = standard_normal(rng) * std::pow(10.0, static_cast<double>(uniform_index(rng, 12)) - 6.0);
  return out;
}

void write_text(const std::filesystem::path &p, const std::string &text) {
  std::ofstream(p, std::ios::binary) << text;
}

} // namespace

TEST_CASE("label vocabularies") {
  CHECK(class_count(Task::Movement) == 7);
  CHECK(class_count(Task::Workflow) == 4);
  CHECK(label_name(Task::Movement, static_cast<int>(MovementLabel::XZ)) == "XZ");
  CHECK(label_name(Task::Workflow, 2) == "PickAndPlace");
  CHECK(parse_label(Task::Movement, "XYZ") == 6);
  CHECK(!parse_label(Task::Movement, "Push"));
  CHECK(task_of_label("Packing") == Task::Workflow);
  CHECK(!task_of_label("W"));
  CHECK_THROWS_AS(label_name(Task::Workflow, 4), Error);
  CHECK(on_standard_grid({"x", 0, 12.5, 1.0, 50.0, 25.0, 0}));
  CHECK_FALSE(on_standard_grid({"x", 0, 12.5, 1.0, 40.0, 0.0, 0}));
}

TEST_CASE("split_dataset divisible counts are exact") {
  const auto labels = balanced_labels(7, 100);
  const SplitSpec s = split_dataset(labels, 7, 3);
  for (int c = 0; c < 7; ++c) {
    CHECK(count_class(s.train, labels, c) == 60);
    CHECK(count_class(s.validation, labels, c) == 20);
    CHECK(count_class(s.test, labels, c) == 20);
  }
  const SplitSpec again = split_dataset(labels, 7, 3);
  CHECK(again.train == s.train);
  CHECK(again.test == s.test);
  CHECK(split_dataset(labels, 7, 4).test != s.test);
}

TEST_CASE("split_dataset stratified rounding") {
  const auto labels = balanced_labels(7, 101);
  const SplitSpec s = split_dataset(labels, 7, 9);
  for (int c = 0; c < 7; ++c) {
    const int t = count_class(s.test, labels, c);
    CHECK((t == 20 || t == 21));
  }
  CHECK(std::abs(static_cast<double>(s.test.size()) - 0.2 * 707) <= 7.0);
  CHECK(std::abs(static_cast<double>(s.validation.size()) - 0.2 * 707) <= 7.0);
}

TEST_CASE("split_dataset invariants over random class sizes") {
  Rng rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    const int classes = 2 + static_cast<int>(uniform_index(rng, 6));
    std::vector<int> labels;
    std::vector<int> sizes(static_cast<std::size_t>(classes));
    for (int c = 0; c < classes; ++c) {
      sizes[static_cast<std::size_t>(c)] = 5 + static_cast<int>(uniform_index(rng, 60));
      for (int i = 0; i < sizes[static_cast<std::size_t>(c)]; ++i)
        labels.push_back(c);
    }
    shuffle(std::span<int>(labels), rng);
    const SplitSpec s = split_dataset(labels, classes, static_cast<std::uint64_t>(trial));
    std::vector<int> seen(labels.size(), 0);
    for (const auto *part : {&s.train, &s.validation, &s.test})
      for (Eigen::Index i : *part)
        ++seen[static_cast<std::size_t>(i)];
    CHECK(std::all_of(seen.begin(), seen.end(), [](int v) { return v == 1; }));
    for (int c = 0; c < classes; ++c) {
      const double n = sizes[static_cast<std::size_t>(c)];
      for (const auto *part : {&s.validation, &s.test}) {
        const double frac = count_class(*part, labels, c) / n;
        CHECK(frac >= 0.2 - 1.0 / n);
        CHECK(frac <= 0.2 + 1.0 / n);
      }
    }
  }
}

TEST_CASE("split_dataset rejects sparse classes") {
  const std::vector<int> labels{0, 0, 0, 0, 0, 1, 1, 1, 1};
  CHECK_THROWS_AS(split_dataset(labels, 2, 0), Error);
  CHECK_THROWS_AS(split_dataset(std::vector<int>{0, 0, 0, 0, 0, 5}, 2, 0), Error);
}

TEST_CASE("manifest file round trip") {
  testutil::TempDir dir("manifest");
  Manifest m = small_manifest(14);
  m.records[3].speed_mm_s = 75.0;
  m.records[3].loss_pct = 25.0;
  m.records[3].seed = 18446744073709551615ULL;
  write_manifest(m, dir / "m.csv");
  const Manifest back = read_manifest(dir / "m.csv");
  REQUIRE(back.records.size() == 14);
  CHECK(back.task == Task::Movement);
  CHECK(back.records[3].speed_mm_s == 75.0);
  CHECK(back.records[3].loss_pct == 25.0);
  CHECK(back.records[3].seed == m.records[3].seed);
  CHECK(back.records[5].audio_path == "a5.wav");

  std::ifstream in(dir / "m.csv");
  std::string first, second;
  std::getline(in, first);
  std::getline(in, second);
  CHECK(first == "task=movement");
  CHECK(second == "a0.wav,X,12.5,1,30,0,0");

  write_text(dir / "bad_task.csv", "task=dance\n");
  CHECK_THROWS_AS(read_manifest(dir / "bad_task.csv"), Error);
  write_text(dir / "bad_label.csv", "task=workflow\nx.wav,X,1,1,30,0,0\n");
  CHECK_THROWS_AS(read_manifest(dir / "bad_label.csv"), Error);
  write_text(dir / "bad_speed.csv", "task=movement\nx.wav,X,0,1,30,0,0\n");
  CHECK_THROWS_AS(read_manifest(dir / "bad_speed.csv"), Error);
}

TEST_CASE("feature table export and import") {
  testutil::TempDir dir("ftable");
  const Manifest m = small_manifest(3);
  const auto vectors = random_vectors(3, 1);
  export_feature_table(m, vectors, dir / "f.csv");

  std::ifstream in(dir / "f.csv");
  std::vector<std::string> lines;
  for (std::string l; std::getline(in, l);)
    lines.push_back(l);
  CHECK(lines.size() == 4);
  CHECK(lines[0] == "label,speed_mm_s,distance_mm,mic_cm,loss_pct,f0,f1,f2,f3,f4,f5,f6,f7,f8,f9,"
                    "f10,f11,f12,f13,f14,f15,f16,f17,f18,f19,f20");

  const FeatureTable t = import_feature_table(dir / "f.csv");
  REQUIRE(t.rows.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(t.rows[i].label == m.records[i].label);
    CHECK(t.rows[i].values == vectors[i].values);
  }

  CHECK_THROWS_AS(export_feature_table(m, random_vectors(2, 1), dir / "g.csv"), Error);
}

TEST_CASE("feature table round trip on 1000 random rows") {
  testutil::TempDir dir("ftable_big");
  Manifest m;
  m.task = Task::Workflow;
  Rng rng(5);
  for (int i = 0; i < 1000; ++i)
    m.records.push_back({"w.wav", static_cast<int>(uniform_index(rng, 4)), 1.0 + uniform01(rng),
                         1.0 + 100.0 * uniform01(rng), 30.0, 50.0 * uniform01(rng), 0});
  const auto vectors = random_vectors(1000, 2);
  export_feature_table(m, vectors, dir / "f.csv");
  const FeatureTable t = import_feature_table(dir / "f.csv");
  REQUIRE(t.rows.size() == 1000);
  CHECK(t.task == Task::Workflow);
  for (std::size_t i = 0; i < 1000; ++i) {
    CHECK(t.rows[i].label == m.records[i].label);
    CHECK(t.rows[i].speed_mm_s == m.records[i].speed_mm_s);
    CHECK(((t.rows[i].values - vectors[i].values).cwiseAbs().array() <=
           1e-9 * vectors[i].values.cwiseAbs().array().max(1e-300)).all());
  }
  CHECK(t.matrix().rows() == 1000);
  CHECK(t.matrix().cols() == 21);
}

TEST_CASE("feature table import errors") {
  testutil::TempDir dir("ftable_bad");
  const std::string header = feature_table_header() + "\n";
  std::string twenty = "X,12.5,1,30,0";
  for (int i = 0; i < 20; ++i)
    twenty += ",0.5";
  write_text(dir / "short.csv", header + twenty + "\n");
  CHECK_THROWS_AS(import_feature_table(dir / "short.csv"), Error);

  write_text(dir / "label.csv", header + "Q" + twenty.substr(1) + ",0.5\n");
  try {
    import_feature_table(dir / "label.csv");
    FAIL("expected label error");
  } catch (const Error &e) {
    CHECK(e.kind() == ErrorKind::LabelOutOfRange);
  }

  write_text(dir / "nan.csv", header + twenty + ",abc\n");
  try {
    import_feature_table(dir / "nan.csv");
    FAIL("expected parse error");
  } catch (const Error &e) {
    CHECK(e.kind() == ErrorKind::Parse);
  }

  write_text(dir / "header.csv", "label,f0\n");
  CHECK_THROWS_AS(import_feature_table(dir / "header.csv"), Error);
}
