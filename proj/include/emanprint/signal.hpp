#pragma once

#include <Eigen/Core>
#include <filesystem>

#include "emanprint/error.hpp"

namespace emanprint {

/// Mono PCM observation, samples normalized to [-1, 1].
struct AudioSignal {
  Eigen::ArrayXd samples;
  double sample_rate = 44100.0;
  int source_bit_depth = 16;

  Eigen::Index size() const { return samples.size(); }
  double duration() const { return static_cast<double>(samples.size()) / sample_rate; }
};

/// Builds a signal and checks the type invariants (non-empty, rate > 0,
/// every sample within [-1, 1]).
AudioSignal make_signal(Eigen::ArrayXd samples, double sample_rate = 44100.0,
                        int source_bit_depth = 16);

/// Throws Error(InvalidArgument / EmptySignal) when the invariants do not hold.
void validate(const AudioSignal &signal);

/// Reads integer PCM (8/16/24/32-bit) or 32-bit float WAV. Channels are
/// averaged down to mono.
AudioSignal load_wav(const std::filesystem::path &path);

/// Writes 16-bit little-endian mono PCM.
void save_wav(const AudioSignal &signal, const std::filesystem::path &path);

/// Full-scale 16-bit code for a normalized sample (round half away, clamped).
std::int16_t quantize_pcm16(double sample);

} // namespace emanprint
