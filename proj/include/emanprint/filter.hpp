#pragma once

#include <Eigen/Core>
#include <utility>
#include <vector>

#include "emanprint/signal.hpp"

namespace emanprint::dsp {

struct FrequencyBand {
  double low_hz = 0.0;
  double high_hz = 0.0;

  bool contains(double f) const { return f >= low_hz && f <= high_hz; }
};

/// Bins inside any stop band, or outside the pass band, are zeroed.
/// A stop band wins over the pass band where they overlap.
struct FilterSpec {
  std::vector<FrequencyBand> stop_bands{{55.0, 65.0}};
  FrequencyBand pass_band{20.0, 20000.0};

  /// Mains hum at 60 Hz plus everything outside 20 Hz - 20 kHz.
  static FilterSpec hum_and_hearing_range() { return {}; }
  bool keeps(double f) const;
};

/// Throws InvalidArgument when a band is inverted or leaves [0, nyquist].
void validate(const FilterSpec &spec, double sample_rate);

struct MagnitudeSpectrum {
  Eigen::ArrayXd frequencies;
  Eigen::ArrayXd magnitudes;
};

/// One-sided |X[k]| of the whole signal, frequencies 0 .. sample_rate / 2.
MagnitudeSpectrum fft_magnitude(const AudioSignal &signal);

/// Zeroes rejected bins of the full-signal FFT (both complex parts) and
/// resynthesizes with the inverse FFT. Output has the input length and is
/// clamped to [-1, 1].
AudioSignal amplitude_filter(const AudioSignal &signal,
                             const FilterSpec &spec = FilterSpec::hum_and_hearing_range());

} // namespace emanprint::dsp
