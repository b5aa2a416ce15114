#include "emanprint/synth.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>

#include "emanprint/random.hpp"

namespace emanprint::synth {

using dataset::MovementLabel;
using dataset::Task;
using dataset::WorkflowLabel;

namespace {

constexpr std::array<Axis, 3> kAxes{Axis::X, Axis::Y, Axis::Z};

std::string shortest(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

void validate(const MovementSpec &spec) {
  if (spec.axes.empty())
    throw Error(ErrorKind::InvalidArgument, "movement has no axes");
  if (!(spec.distance_mm > 0.0) || !std::isfinite(spec.distance_mm))
    throw Error(ErrorKind::InvalidArgument, "movement distance must be positive");
  if (!(spec.speed_mm_s > 0.0) || !std::isfinite(spec.speed_mm_s))
    throw Error(ErrorKind::InvalidArgument, "movement speed must be positive");
  if (!(spec.mic_cm > 0.0) || !std::isfinite(spec.mic_cm))
    throw Error(ErrorKind::InvalidArgument, "microphone distance must be positive");
}

Eigen::Index to_samples(double seconds, double sample_rate) {
  return static_cast<Eigen::Index>(std::llround(seconds * sample_rate));
}

// Adds the harmonic stacks of every active axis to out[start, start + n).
// Phases are drawn for all three axes so the draw count is fixed.
void add_tone(Eigen::ArrayXd &out, Eigen::Index start, Eigen::Index n, const MovementSpec &spec,
              const SynthConfig &config, Rng &rng) {
  const double sr = config.sample_rate;
  const double gain = config.tone_amplitude *
                      std::pow(config.reference_mic_cm / spec.mic_cm, config.attenuation_exponent);
  const double ramp = std::min(config.ramp_seconds * sr, 0.5 * static_cast<double>(n));

  Eigen::ArrayXd envelope(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) + 0.5;
    const double edge = std::min(t, static_cast<double>(n) - t);
    envelope[i] = ramp > 0.0 ? std::min(1.0, edge / ramp) : 1.0;
  }

  const Eigen::ArrayXd t = Eigen::ArrayXd::LinSpaced(n, 0.0, static_cast<double>(n - 1)) / sr;
  for (Axis axis : kAxes) {
    const double f0 = axis_frequency(axis, spec.speed_mm_s, config);
    for (int k = 1; k <= config.harmonics; ++k) {
      const double phase = 2.0 * std::numbers::pi * uniform01(rng);
      const double f = f0 * k;
      if (!spec.axes.contains(axis) || f >= 0.5 * sr)
        continue;
      out.segment(start, n) +=
          (gain / k) * envelope * (2.0 * std::numbers::pi * f * t + phase).cos();
    }
  }
}

void add_background(Eigen::ArrayXd &out, const SynthConfig &config, Rng &rng) {
  const double sr = config.sample_rate;
  const double hum_phase = 2.0 * std::numbers::pi * uniform01(rng);
  if (config.hum_level > 0.0)
    for (Eigen::Index i = 0; i < out.size(); ++i)
      out[i] += config.hum_level *
                std::sin(2.0 * std::numbers::pi * config.hum_hz * static_cast<double>(i) / sr +
                         hum_phase);
  const double sigma = noise_sigma(config);
  if (sigma > 0.0)
    for (Eigen::Index i = 0; i < out.size(); ++i)
      out[i] += sigma * standard_normal(rng);
}

AudioSignal finish(Eigen::ArrayXd samples, const SynthConfig &config) {
  return make_signal(samples.cwiseMax(-1.0).cwiseMin(1.0), config.sample_rate, 16);
}

} // namespace

AxisSet axes_of(MovementLabel label) {
  switch (label) {
  case MovementLabel::X: return {Axis::X};
  case MovementLabel::Y: return {Axis::Y};
  case MovementLabel::Z: return {Axis::Z};
  case MovementLabel::XY: return {Axis::X, Axis::Y};
  case MovementLabel::XZ: return {Axis::X, Axis::Z};
  case MovementLabel::YZ: return {Axis::Y, Axis::Z};
  case MovementLabel::XYZ: return {Axis::X, Axis::Y, Axis::Z};
  }
  throw Error(ErrorKind::LabelOutOfRange, "unknown movement label");
}

MovementLabel label_of(AxisSet axes) {
  for (int c = 0; c < dataset::kMovementClasses; ++c)
    if (axes_of(static_cast<MovementLabel>(c)) == axes)
      return static_cast<MovementLabel>(c);
  throw Error(ErrorKind::InvalidArgument, "empty axis set");
}

MovementSpec baseline_movement(AxisSet axes) {
  return MovementSpec{axes, 1.0, 12.5, 30.0};
}

void validate(const SynthConfig &config) {
  for (double f : config.axis_fundamentals)
    if (!(f > 20.0 && f < 20000.0))
      throw Error(ErrorKind::InvalidArgument, "axis fundamental outside (20 Hz, 20 kHz)");
  if (config.harmonics < 1)
    throw Error(ErrorKind::InvalidArgument, "harmonics must be >= 1");
  if (!(config.pad_seconds >= 0.0) || !(config.ramp_seconds >= 0.0))
    throw Error(ErrorKind::InvalidArgument, "padding and ramp must be >= 0");
  if (!(config.sample_rate > 0.0))
    throw Error(ErrorKind::InvalidArgument, "sample rate must be positive");
  if (!(config.hum_level >= 0.0) || !(config.tone_amplitude >= 0.0))
    throw Error(ErrorKind::InvalidArgument, "levels must be >= 0");
  if (!(config.reference_mic_cm > 0.0) || !std::isfinite(config.attenuation_exponent))
    throw Error(ErrorKind::InvalidArgument, "bad attenuation parameters");
  if (std::isnan(config.noise_snr_db))
    throw Error(ErrorKind::InvalidArgument, "noise SNR is NaN");
}

double axis_frequency(Axis axis, double speed_mm_s, const SynthConfig &config) {
  const std::size_t index = axis == Axis::X ? 0 : axis == Axis::Y ? 1 : 2;
  const double f = config.axis_fundamentals[index] +
                   config.speed_pitch_slope * (speed_mm_s - config.reference_speed);
  if (!(f > 20.0 && f < 20000.0))
    throw Error(ErrorKind::InvalidArgument,
                "axis fundamental " + shortest(f) + " Hz outside (20 Hz, 20 kHz)");
  return f;
}

double noise_sigma(const SynthConfig &config) {
  if (config.noise_snr_db == std::numeric_limits<double>::infinity())
    return 0.0;
  double power = 0.0;
  for (int k = 1; k <= config.harmonics; ++k)
    power += 0.5 / (static_cast<double>(k) * k);
  const double tone_rms = config.tone_amplitude * std::sqrt(power);
  return tone_rms * std::pow(10.0, -config.noise_snr_db / 20.0);
}

AudioSignal synth_movement(const MovementSpec &spec, const SynthConfig &config) {
  validate(config);
  validate(spec);
  const Eigen::Index pad = to_samples(config.pad_seconds, config.sample_rate);
  const Eigen::Index tone = std::max<Eigen::Index>(1, to_samples(spec.tone_seconds(),
                                                                 config.sample_rate));
  Eigen::ArrayXd out = Eigen::ArrayXd::Zero(2 * pad + tone);
  Rng rng(config.seed);
  add_tone(out, pad, tone, spec, config, rng);
  add_background(out, config, rng);
  return finish(std::move(out), config);
}

double WorkflowScript::nominal_distance_mm() const {
  double total = 0.0;
  for (const auto &s : segments)
    total += s.distance_mm;
  return total;
}

double WorkflowScript::nominal_tone_seconds() const {
  double total = 0.0;
  for (const auto &s : segments)
    total += s.tone_seconds();
  return total;
}

WorkflowScript workflow_preset(WorkflowLabel label, double mic_cm) {
  const auto seg = [mic_cm](AxisSet axes, double d, double v) {
    return MovementSpec{axes, d, v, mic_cm};
  };
  WorkflowScript script;
  script.label = label;
  switch (label) {
  case WorkflowLabel::Push:
  case WorkflowLabel::Pull:
    script.segments = {seg({Axis::X}, 40.0, 50.0)};
    break;
  case WorkflowLabel::PickAndPlace: {
    const auto xy = seg({Axis::X, Axis::Y}, 30.0, 50.0);
    const auto z = seg({Axis::Z}, 20.0, 25.0);
    script.segments = {xy, z, z, xy, z, z};
    break;
  }
  case WorkflowLabel::Packing:
    script.segments = {seg({Axis::Y}, 25.0, 50.0), seg({Axis::X, Axis::Z}, 15.0, 25.0),
                       seg({Axis::Y, Axis::Z}, 15.0, 25.0),
                       seg({Axis::X, Axis::Y, Axis::Z}, 10.0, 25.0), seg({Axis::Y}, 25.0, 50.0)};
    break;
  default:
    throw Error(ErrorKind::LabelOutOfRange, "unknown workflow label");
  }
  return script;
}

std::vector<SegmentPlan> plan_workflow(const WorkflowScript &script, const SynthConfig &config,
                                       Rng &rng) {
  if (script.segments.empty())
    throw Error(ErrorKind::InvalidArgument, "workflow has no segments");
  if (!(script.gap_seconds >= 0.0) || !(script.jitter >= 0.0 && script.jitter < 1.0))
    throw Error(ErrorKind::InvalidArgument, "bad workflow gap or jitter");
  const double sr = config.sample_rate;
  std::vector<SegmentPlan> plan;
  Eigen::Index at = to_samples(config.pad_seconds, sr);
  const Eigen::Index gap = to_samples(script.gap_seconds, sr);
  for (std::size_t i = 0; i < script.segments.size(); ++i) {
    MovementSpec spec = script.segments[i];
    validate(spec);
    spec.distance_mm *= 1.0 + script.jitter * (2.0 * uniform01(rng) - 1.0);
    spec.speed_mm_s *= 1.0 + script.jitter * (2.0 * uniform01(rng) - 1.0);
    const Eigen::Index n = std::max<Eigen::Index>(1, to_samples(spec.tone_seconds(), sr));
    if (i > 0)
      at += gap;
    plan.push_back({spec, at, n});
    at += n;
  }
  return plan;
}

std::vector<SegmentPlan> plan_workflow(const WorkflowScript &script, const SynthConfig &config) {
  Rng rng(config.seed);
  return plan_workflow(script, config, rng);
}

AudioSignal synth_workflow(const WorkflowScript &script, const SynthConfig &config) {
  validate(config);
  Rng rng(config.seed);
  const auto plan = plan_workflow(script, config, rng);
  const Eigen::Index pad = to_samples(config.pad_seconds, config.sample_rate);
  Eigen::ArrayXd out = Eigen::ArrayXd::Zero(plan.back().start + plan.back().length + pad);
  for (const auto &seg : plan)
    add_tone(out, seg.start, seg.length, seg.spec, config, rng);
  add_background(out, config, rng);
  return finish(std::move(out), config);
}

ExperimentGrid ExperimentGrid::standard_movements(int per_cell, std::uint64_t seed) {
  return {Task::Movement, {}, {1, 2, 5, 10, 25, 50}, {12.5, 25, 50, 75, 100}, {30, 50, 100},
          per_cell, seed};
}

ExperimentGrid ExperimentGrid::baseline_movements(int per_cell, std::uint64_t seed) {
  return {Task::Movement, {}, {1}, {12.5}, {30}, per_cell, seed};
}

ExperimentGrid ExperimentGrid::workflows(int per_label, std::uint64_t seed) {
  return {Task::Workflow, {}, {}, {}, {30}, per_label, seed};
}

dataset::Manifest enumerate_corpus(const ExperimentGrid &grid) {
  if (grid.per_cell < 1)
    throw Error(ErrorKind::InvalidArgument, "samples per cell must be >= 1");
  if (grid.mics_cm.empty())
    throw Error(ErrorKind::InvalidArgument, "grid has no microphone distances");
  std::vector<int> labels = grid.labels;
  if (labels.empty())
    for (int c = 0; c < dataset::class_count(grid.task); ++c)
      labels.push_back(c);
  for (int c : labels)
    if (c < 0 || c >= dataset::class_count(grid.task))
      throw Error(ErrorKind::LabelOutOfRange, "grid label out of range");

  dataset::Manifest manifest;
  manifest.task = grid.task;
  manifest.split_seed = grid.master_seed;
  std::uint64_t index = 0;
  const auto push = [&](int label, double distance, double speed, double mic) {
    for (int r = 0; r < grid.per_cell; ++r) {
      dataset::SampleRecord rec;
      rec.label = label;
      rec.distance_mm = distance;
      rec.speed_mm_s = speed;
      rec.mic_cm = mic;
      rec.seed = derive_seed(grid.master_seed, index++);
      rec.audio_path = corpus_file_name(grid.task, rec);
      manifest.records.push_back(std::move(rec));
    }
  };

  if (grid.task == Task::Movement) {
    if (grid.distances_mm.empty() || grid.speeds_mm_s.empty())
      throw Error(ErrorKind::InvalidArgument, "movement grid needs distances and speeds");
    for (int c : labels)
      for (double d : grid.distances_mm)
        for (double v : grid.speeds_mm_s)
          for (double m : grid.mics_cm)
            push(c, d, v, m);
  } else {
    for (int c : labels)
      for (double m : grid.mics_cm) {
        const auto script = workflow_preset(static_cast<WorkflowLabel>(c), m);
        const double distance = script.nominal_distance_mm();
        push(c, distance, distance / script.nominal_tone_seconds(), m);
      }
  }
  return manifest;
}

AudioSignal render_record(Task task, const dataset::SampleRecord &record,
                          const SynthConfig &config) {
  SynthConfig cfg = config;
  cfg.seed = record.seed;
  if (task == Task::Movement) {
    if (record.label < 0 || record.label >= dataset::kMovementClasses)
      throw Error(ErrorKind::LabelOutOfRange, "movement label out of range");
    const MovementSpec spec{axes_of(static_cast<MovementLabel>(record.label)),
                            record.distance_mm, record.speed_mm_s, record.mic_cm};
    return synth_movement(spec, cfg);
  }
  if (record.label < 0 || record.label >= dataset::kWorkflowClasses)
    throw Error(ErrorKind::LabelOutOfRange, "workflow label out of range");
  return synth_workflow(workflow_preset(static_cast<WorkflowLabel>(record.label), record.mic_cm),
                        cfg);
}

std::string corpus_file_name(Task task, const dataset::SampleRecord &record) {
  return std::string(dataset::task_name(task)) + '_' +
         std::string(dataset::label_name(task, record.label)) + "_d" +
         shortest(record.distance_mm) + "_s" + shortest(record.speed_mm_s) + "_m" +
         shortest(record.mic_cm) + '_' + std::to_string(record.seed) + ".wav";
}

dataset::Manifest corpus_generate(const ExperimentGrid &grid, const SynthConfig &config,
                                  const std::filesystem::path &out_dir) {
  validate(config);
  dataset::Manifest manifest = enumerate_corpus(grid);
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec)
    throw Error(ErrorKind::Io, "cannot create " + out_dir.string() + ": " + ec.message());
  for (const auto &rec : manifest.records)
    save_wav(render_record(grid.task, rec, config), out_dir / rec.audio_path);
  dataset::write_manifest(manifest, out_dir / kManifestFileName);
  return manifest;
}

} // namespace emanprint::synth
