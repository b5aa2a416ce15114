#include <doctest.h>

#include <fstream>
#include <iterator>
#include <limits>
#include <set>

#include "emanprint/features.hpp"
#include "emanprint/filter.hpp"
#include "emanprint/synth.hpp"
#include "test_util.hpp"

using namespace emanprint;
using namespace emanprint::synth;
using dataset::MovementLabel;
using dataset::Task;
using dataset::WorkflowLabel;

namespace {

SynthConfig quiet_config() {
  SynthConfig c;
  c.hum_level = 0.0;
  c.noise_snr_db = std::numeric_limits<double>::infinity();
  return c;
}

double magnitude_near(const dsp::MagnitudeSpectrum &s, double hz) {
  double best = 0.0;
  for (Eigen::Index i = 0; i < s.frequencies.size(); ++i)
    if (std::abs(s.frequencies[i] - hz) <= 2.0)
      best = std::max(best, s.magnitudes[i]);
  return best;
}

std::string slurp(const std::filesystem::path &p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

} // namespace

TEST_CASE("baseline movement has an 80 ms tone between the pads") {
  const auto cfg = quiet_config();
  const auto sig = synth_movement(baseline_movement({Axis::X}), cfg);
  const Eigen::Index pad = 11025, tone = 3528; // 0.25 s and 1 / 12.5 s at 44.1 kHz
  REQUIRE(sig.size() == 2 * pad + tone);
  CHECK(sig.samples.head(pad).abs().maxCoeff() == 0.0);
  CHECK(sig.samples.tail(pad).abs().maxCoeff() == 0.0);
  CHECK(sig.samples[pad] != 0.0);
  CHECK(sig.samples[pad + tone - 1] != 0.0);
  CHECK(sig.duration() == doctest::Approx(0.58));
}

TEST_CASE("axis sets map one-to-one onto movement labels") {
  std::set<std::uint8_t> seen;
  for (int c = 0; c < dataset::kMovementClasses; ++c) {
    const auto label = static_cast<MovementLabel>(c);
    const AxisSet axes = axes_of(label);
    CHECK(label_of(axes) == label);
    seen.insert(axes.bits());
  }
  CHECK(seen.size() == 7);
  CHECK_THROWS_AS(label_of(AxisSet{}), Error);
}

TEST_CASE("XYZ movement shows all three fundamentals") {
  const auto cfg = quiet_config();
  const MovementSpec xyz{{Axis::X, Axis::Y, Axis::Z}, 10.0, 12.5, 30.0};
  const auto s = dsp::fft_magnitude(synth_movement(xyz, cfg));
  const double median = [&] {
    std::vector<double> m(s.magnitudes.begin(), s.magnitudes.end());
    std::nth_element(m.begin(), m.begin() + m.size() / 2, m.end());
    return m[m.size() / 2];
  }();
  for (double f : {150.0, 175.0, 200.0})
    CHECK(magnitude_near(s, f) > 100.0 * median);

  const auto x_only = dsp::fft_magnitude(synth_movement({{Axis::X}, 10.0, 12.5, 30.0}, cfg));
  CHECK(magnitude_near(x_only, 150.0) > 20.0 * magnitude_near(x_only, 200.0));
  CHECK(magnitude_near(x_only, 150.0) > 20.0 * magnitude_near(x_only, 175.0));
}

TEST_CASE("speed raises the pitch linearly") {
  const auto cfg = quiet_config();
  CHECK(axis_frequency(Axis::X, 12.5, cfg) == 150.0);
  CHECK(axis_frequency(Axis::Y, 100.0, cfg) == doctest::Approx(287.5));
  const auto s = dsp::fft_magnitude(synth_movement({{Axis::X}, 50.0, 100.0, 30.0}, cfg));
  CHECK(magnitude_near(s, 237.5) > 20.0 * magnitude_near(s, 150.0));

  SynthConfig flat = cfg;
  flat.speed_pitch_slope = 0.0;
  CHECK(axis_frequency(Axis::Z, 100.0, flat) == 175.0);
}

TEST_CASE("fundamentals pushed out of the audible band are rejected") {
  SynthConfig cfg = quiet_config();
  cfg.speed_pitch_slope = -10.0;
  CHECK_THROWS_AS(synth_movement({{Axis::X}, 10.0, 100.0, 30.0}, cfg), Error);
  cfg.speed_pitch_slope = 1000.0;
  CHECK_THROWS_AS(axis_frequency(Axis::Y, 100.0, cfg), Error);

  SynthConfig bad = quiet_config();
  bad.axis_fundamentals[2] = 15.0;
  CHECK_THROWS_AS(synth_movement(baseline_movement({Axis::X}), bad), Error);
  bad = quiet_config();
  bad.pad_seconds = -0.1;
  CHECK_THROWS_AS(synth_movement(baseline_movement({Axis::X}), bad), Error);
  CHECK_THROWS_AS(synth_movement({AxisSet{}, 1.0, 12.5, 30.0}, quiet_config()), Error);
  CHECK_THROWS_AS(synth_movement({{Axis::X}, 0.0, 12.5, 30.0}, quiet_config()), Error);
  CHECK_THROWS_AS(synth_movement({{Axis::X}, 1.0, -1.0, 30.0}, quiet_config()), Error);
}

TEST_CASE("doubling the microphone distance halves the tone") {
  const auto cfg = quiet_config();
  const auto near = synth_movement({{Axis::X, Axis::Z}, 5.0, 12.5, 30.0}, cfg);
  const auto far = synth_movement({{Axis::X, Axis::Z}, 5.0, 12.5, 60.0}, cfg);
  CHECK(testutil::rms(near.samples) / testutil::rms(far.samples) ==
        doctest::Approx(2.0).epsilon(0.01));

  SynthConfig square = cfg;
  square.attenuation_exponent = 2.0;
  const auto far2 = synth_movement({{Axis::X, Axis::Z}, 5.0, 12.5, 60.0}, square);
  CHECK(testutil::rms(near.samples) / testutil::rms(far2.samples) ==
        doctest::Approx(4.0).epsilon(0.01));
}

TEST_CASE("noise floor sits the configured SNR below one axis tone") {
  CHECK(noise_sigma(SynthConfig{}) == doctest::Approx(0.003201562118716424).epsilon(1e-12));
  SynthConfig off;
  off.noise_snr_db = std::numeric_limits<double>::infinity();
  CHECK(noise_sigma(off) == 0.0);

  SynthConfig cfg;
  cfg.hum_level = 0.0;
  cfg.pad_seconds = 1.0;
  const auto sig = synth_movement(baseline_movement({Axis::Y}), cfg);
  CHECK(testutil::rms(sig.samples.head(44100)) ==
        doctest::Approx(noise_sigma(cfg)).epsilon(0.03));
}

TEST_CASE("hum adds a 60 Hz line") {
  SynthConfig cfg = quiet_config();
  cfg.hum_level = 0.01;
  const auto sig = synth_movement({{Axis::X}, 10.0, 12.5, 30.0}, cfg);
  const auto s = dsp::fft_magnitude(sig);
  const auto q = dsp::fft_magnitude(synth_movement({{Axis::X}, 10.0, 12.5, 30.0}, quiet_config()));
  CHECK(magnitude_near(s, 60.0) > 10.0 * magnitude_near(q, 60.0));
}

TEST_CASE("synthesis is deterministic per seed and clamped") {
  SynthConfig cfg;
  cfg.seed = 42;
  const auto spec = MovementSpec{{Axis::X, Axis::Y}, 2.0, 25.0, 50.0};
  const auto a = synth_movement(spec, cfg);
  const auto b = synth_movement(spec, cfg);
  CHECK((a.samples == b.samples).all());
  cfg.seed = 43;
  CHECK(!(synth_movement(spec, cfg).samples == a.samples).all());

  SynthConfig loud = quiet_config();
  loud.tone_amplitude = 3.0;
  const auto clipped = synth_movement({{Axis::X, Axis::Y, Axis::Z}, 5.0, 12.5, 30.0}, loud);
  CHECK(clipped.samples.abs().maxCoeff() == 1.0);
}

TEST_CASE("push and pull share one sound model") {
  SynthConfig cfg;
  cfg.seed = 7;
  const auto push = synth_workflow(workflow_preset(WorkflowLabel::Push), cfg);
  const auto pull = synth_workflow(workflow_preset(WorkflowLabel::Pull), cfg);
  CHECK((push.samples == pull.samples).all());
  CHECK(workflow_preset(WorkflowLabel::Push).label != workflow_preset(WorkflowLabel::Pull).label);
}

TEST_CASE("pick-and-place concatenates six segments and five gaps") {
  const auto script = workflow_preset(WorkflowLabel::PickAndPlace);
  REQUIRE(script.segments.size() == 6);
  CHECK(label_of(script.segments[0].axes) == MovementLabel::XY);
  CHECK(label_of(script.segments[1].axes) == MovementLabel::Z);

  SynthConfig cfg = quiet_config();
  WorkflowScript exact = script;
  exact.jitter = 0.0;
  // 2 x 0.6 s + 4 x 0.8 s tones, 5 x 0.1 s gaps, 2 x 0.25 s pads
  CHECK(synth_workflow(exact, cfg).size() == 44100 * 49 / 10 + 22050);

  for (std::uint64_t seed : {1u, 2u, 3u}) {
    cfg.seed = seed;
    const auto plan = plan_workflow(script, cfg);
    Eigen::Index tones = 0;
    for (const auto &seg : plan) {
      tones += seg.length;
      CHECK(std::abs(seg.spec.distance_mm / seg.spec.tone_seconds() -
                     seg.spec.speed_mm_s) < 1e-9);
    }
    CHECK(synth_workflow(script, cfg).size() == tones + 5 * 4410 + 2 * 11025);
    for (std::size_t i = 1; i < plan.size(); ++i)
      CHECK(plan[i].start == plan[i - 1].start + plan[i - 1].length + 4410);
  }
}

TEST_CASE("workflow jitter stays within bounds and follows the seed") {
  const auto script = workflow_preset(WorkflowLabel::Packing);
  SynthConfig cfg;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    cfg.seed = seed;
    const auto plan = plan_workflow(script, cfg);
    for (std::size_t i = 0; i < plan.size(); ++i) {
      CHECK(std::abs(plan[i].spec.distance_mm / script.segments[i].distance_mm - 1.0) <= 0.05);
      CHECK(std::abs(plan[i].spec.speed_mm_s / script.segments[i].speed_mm_s - 1.0) <= 0.05);
    }
  }
  cfg.seed = 5;
  const auto a = synth_workflow(script, cfg);
  CHECK((a.samples == synth_workflow(script, cfg).samples).all());
  cfg.seed = 6;
  const auto b = synth_workflow(script, cfg);
  CHECK((a.size() != b.size() || !(a.samples == b.samples).all()));

  WorkflowScript empty;
  CHECK_THROWS_AS(synth_workflow(empty, cfg), Error);
}

TEST_CASE("standard movement grid enumerates 1260 files for two per cell") {
  const auto manifest = enumerate_corpus(ExperimentGrid::standard_movements(2, 11));
  CHECK(manifest.records.size() == 1260);
  CHECK(manifest.task == Task::Movement);
  std::set<std::string> names;
  std::set<std::uint64_t> seeds;
  for (const auto &r : manifest.records) {
    names.insert(r.audio_path);
    seeds.insert(r.seed);
    CHECK(dataset::on_standard_grid(r));
  }
  CHECK(names.size() == 1260);
  CHECK(seeds.size() == 1260);
  CHECK(manifest.records[0].seed == derive_seed(11, 0));
  CHECK(manifest.records[1259].seed == derive_seed(11, 1259));

  const auto wf = enumerate_corpus(ExperimentGrid::workflows(50, 3));
  CHECK(wf.records.size() == 200);
  CHECK(wf.task == Task::Workflow);
  const auto labels = wf.labels();
  for (int c = 0; c < 4; ++c)
    CHECK(std::count(labels.begin(), labels.end(), c) == 50);
}

TEST_CASE("corpus file names carry the cell parameters") {
  dataset::SampleRecord r;
  r.label = static_cast<int>(MovementLabel::XY);
  r.distance_mm = 1;
  r.speed_mm_s = 12.5;
  r.mic_cm = 30;
  r.seed = 123;
  CHECK(corpus_file_name(Task::Movement, r) == "movement_XY_d1_s12.5_m30_123.wav");
  r.label = static_cast<int>(WorkflowLabel::PickAndPlace);
  r.distance_mm = 150;
  r.speed_mm_s = 34.090909090909093;
  CHECK(corpus_file_name(Task::Workflow, r) ==
        "workflow_PickAndPlace_d150_s34.09090909090909_m30_123.wav");
}

TEST_CASE("generated corpus reloads within one quantization step and is reproducible") {
  testutil::TempDir dir_a("synth_a"), dir_b("synth_b");
  ExperimentGrid grid = ExperimentGrid::standard_movements(1, 5);
  grid.labels = {0, 6};
  grid.distances_mm = {1, 50};
  grid.speeds_mm_s = {12.5, 100};
  grid.mics_cm = {30};
  SynthConfig cfg;
  const auto manifest = corpus_generate(grid, cfg, dir_a.path);
  corpus_generate(grid, cfg, dir_b.path);
  REQUIRE(manifest.records.size() == 8);

  const auto reread = dataset::read_manifest(dir_a / kManifestFileName);
  CHECK(reread.records.size() == 8);
  for (const auto &r : manifest.records) {
    const auto loaded = load_wav(dir_a.path / r.audio_path);
    const auto rendered = render_record(grid.task, r, cfg);
    REQUIRE(loaded.size() == rendered.size());
    CHECK((loaded.samples - rendered.samples).abs().maxCoeff() <= 1.0 / 32768.0);
    CHECK(slurp(dir_a.path / r.audio_path) == slurp(dir_b.path / r.audio_path));
  }
  CHECK(slurp(dir_a / kManifestFileName) == slurp(dir_b / kManifestFileName));

  const auto wf = corpus_generate(ExperimentGrid::workflows(1, 2), cfg, dir_a / "wf");
  CHECK(wf.records.size() == 4);
  CHECK(dataset::read_manifest(dir_a / "wf" / kManifestFileName).task == Task::Workflow);
}

TEST_CASE("feature rms falls strictly with microphone distance") {
  SynthConfig cfg;
  cfg.seed = 9;
  for (int c = 0; c < dataset::kMovementClasses; ++c) {
    double last = std::numeric_limits<double>::infinity();
    for (double mic : {30.0, 50.0, 100.0, 200.0}) {
      const MovementSpec spec{axes_of(static_cast<MovementLabel>(c)), 1.0, 12.5, mic};
      const double rms = features::extract_feature_vector(synth_movement(spec, cfg)).rms();
      CHECK(rms < last);
      last = rms;
    }
  }
}
