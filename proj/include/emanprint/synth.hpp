#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "emanprint/dataset.hpp"
#include "emanprint/signal.hpp"

namespace emanprint::synth {

enum class Axis : std::uint8_t { X = 1, Y = 2, Z = 4 };

/// Non-empty subset of {X, Y, Z}.
class AxisSet {
public:
  constexpr AxisSet() = default;
  constexpr AxisSet(std::initializer_list<Axis> axes) {
    for (Axis a : axes)
      bits_ |= static_cast<std::uint8_t>(a);
  }
  constexpr bool contains(Axis a) const { return (bits_ & static_cast<std::uint8_t>(a)) != 0; }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr std::uint8_t bits() const { return bits_; }
  constexpr bool operator==(const AxisSet &) const = default;

private:
  std::uint8_t bits_ = 0;
};

AxisSet axes_of(dataset::MovementLabel label);
dataset::MovementLabel label_of(AxisSet axes);

struct MovementSpec {
  AxisSet axes{Axis::X};
  double distance_mm = 1.0;
  double speed_mm_s = 12.5;
  double mic_cm = 30.0;

  double tone_seconds() const { return distance_mm / speed_mm_s; }
};

/// Baseline movement: 1 mm at 12.5 mm/s, microphone at 30 cm.
MovementSpec baseline_movement(AxisSet axes);

struct SynthConfig {
  /// Fundamental per axis, indexed X, Y, Z.
  std::array<double, 3> axis_fundamentals{150.0, 200.0, 175.0};
  int harmonics = 4;                 ///< k-th harmonic has amplitude 1/k
  double speed_pitch_slope = 1.0;    ///< Hz per mm/s above reference_speed
  double reference_speed = 12.5;
  double hum_level = 0.01;           ///< 60 Hz mains component, linear amplitude
  double hum_hz = 60.0;
  /// Broadband noise floor below a single-axis tone heard at
  /// reference_mic_cm. The floor is absolute: it does not move with the
  /// microphone. Infinity disables noise.
  double noise_snr_db = 30.0;
  double attenuation_exponent = 1.0; ///< amplitude ~ (reference_mic_cm / mic)^exponent
  double reference_mic_cm = 30.0;
  double tone_amplitude = 0.12;      ///< peak of one axis fundamental at the reference distance
  double pad_seconds = 0.25;
  double ramp_seconds = 0.005;
  double sample_rate = 44100.0;
  std::uint64_t seed = 0;
};

void validate(const SynthConfig &config);

/// Fundamental of one axis at the given speed. Throws InvalidArgument when
/// it leaves (20 Hz, 20 kHz).
double axis_frequency(Axis axis, double speed_mm_s, const SynthConfig &config);

/// Standard deviation of the background noise.
double noise_sigma(const SynthConfig &config);

/// pad | tone (distance / speed seconds) | pad, plus hum and noise.
AudioSignal synth_movement(const MovementSpec &spec, const SynthConfig &config);

struct WorkflowScript {
  dataset::WorkflowLabel label = dataset::WorkflowLabel::Push;
  std::vector<MovementSpec> segments;
  double gap_seconds = 0.1;
  double jitter = 0.05; ///< relative, uniform in [-jitter, +jitter] on distance and speed

  double nominal_distance_mm() const;
  double nominal_tone_seconds() const;
};

/// Built-in catalogue. Push and Pull share one sound model.
WorkflowScript workflow_preset(dataset::WorkflowLabel label, double mic_cm = 30.0);

struct SegmentPlan {
  MovementSpec spec; ///< after jitter
  Eigen::Index start = 0;
  Eigen::Index length = 0;
};

/// Segment placement for a given config.seed (same draws as synth_workflow).
std::vector<SegmentPlan> plan_workflow(const WorkflowScript &script, const SynthConfig &config);

/// pad | seg | gap | seg | ... | pad with per-segment jitter drawn from
/// config.seed.
AudioSignal synth_workflow(const WorkflowScript &script, const SynthConfig &config);

struct ExperimentGrid {
  dataset::Task task = dataset::Task::Movement;
  std::vector<int> labels;          ///< empty means every class of the task
  std::vector<double> distances_mm; ///< movement only
  std::vector<double> speeds_mm_s;  ///< movement only
  std::vector<double> mics_cm;
  int per_cell = 1;
  std::uint64_t master_seed = 0;

  /// 7 labels x distances {1,2,5,10,25,50} x speeds {12.5,25,50,75,100} x mics {30,50,100}.
  static ExperimentGrid standard_movements(int per_cell, std::uint64_t seed);
  /// One cell per label at 1 mm, 12.5 mm/s, 30 cm.
  static ExperimentGrid baseline_movements(int per_cell, std::uint64_t seed);
  static ExperimentGrid workflows(int per_label, std::uint64_t seed);
};

/// Records in generation order; seeds derive from (master_seed, cell index).
/// Audio paths are the canonical file names.
dataset::Manifest enumerate_corpus(const ExperimentGrid &grid);

/// Audio for one record (label, distance, speed, mic and seed are read
/// from the record).
AudioSignal render_record(dataset::Task task, const dataset::SampleRecord &record,
                          const SynthConfig &config);

/// `<task>_<label>_d<mm>_s<mmps>_m<cm>_<seed>.wav`
std::string corpus_file_name(dataset::Task task, const dataset::SampleRecord &record);

/// Renders every record to out_dir and writes out_dir/manifest.csv.
dataset::Manifest corpus_generate(const ExperimentGrid &grid, const SynthConfig &config,
                                  const std::filesystem::path &out_dir);

inline constexpr const char *kManifestFileName = "manifest.csv";

} // namespace emanprint::synth
