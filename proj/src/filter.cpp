#include "emanprint/filter.hpp"

#include <algorithm>
#include <complex>

#include "emanprint/fft.hpp"

namespace emanprint::dsp {

bool FilterSpec::keeps(double f) const {
  if (!pass_band.contains(f))
    return false;
  return std::none_of(stop_bands.begin(), stop_bands.end(),
                      [f](const FrequencyBand &b) { return b.contains(f); });
}

void validate(const FilterSpec &spec, double sample_rate) {
  const double nyquist = sample_rate / 2.0;
  const auto check = [nyquist](const FrequencyBand &b) {
    if (!(b.low_hz >= 0.0 && b.low_hz <= b.high_hz && b.high_hz <= nyquist))
      throw Error(ErrorKind::InvalidArgument, "filter band outside [0, nyquist] or inverted");
  };
  check(spec.pass_band);
  std::for_each(spec.stop_bands.begin(), spec.stop_bands.end(), check);
}

MagnitudeSpectrum fft_magnitude(const AudioSignal &signal) {
  if (signal.samples.size() == 0)
    throw Error(ErrorKind::EmptySignal, "fft_magnitude of empty signal");
  const Eigen::Index n = signal.samples.size();
  MagnitudeSpectrum out;
  out.magnitudes = rfft(signal.samples).abs();
  out.frequencies = Eigen::ArrayXd::LinSpaced(n / 2 + 1, 0.0, static_cast<double>(n / 2)) *
                    (signal.sample_rate / static_cast<double>(n));
  return out;
}

AudioSignal amplitude_filter(const AudioSignal &signal, const FilterSpec &spec) {
  validate(signal);
  validate(spec, signal.sample_rate);
  const Eigen::Index n = signal.samples.size();
  Eigen::ArrayXcd spectrum = fft(signal.samples.cast<std::complex<double>>());
  const double bin_hz = signal.sample_rate / static_cast<double>(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    // Negative-frequency bins mirror their positive partner so the
    // spectrum stays Hermitian.
    const double f = static_cast<double>(std::min(k, n - k)) * bin_hz;
    if (!spec.keeps(f))
      spectrum[k] = 0.0;
  }
  AudioSignal out = signal;
  out.samples = ifft(spectrum).real().cwiseMax(-1.0).cwiseMin(1.0);
  return out;
}

} // namespace emanprint::dsp
