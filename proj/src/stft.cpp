#include "emanprint/stft.hpp"

#include "emanprint/fft.hpp"

namespace emanprint::dsp {

namespace {

// Mirror index into [0, n) without repeating the edge sample (numpy
// "reflect"); handles pads longer than the signal.
Eigen::Index reflect_index(Eigen::Index i, Eigen::Index n) {
  if (n == 1)
    return 0;
  const Eigen::Index period = 2 * (n - 1);
  i %= period;
  if (i < 0)
    i += period;
  return i < n ? i : period - i;
}

bool is_pow2(Eigen::Index n) { return n > 0 && (n & (n - 1)) == 0; }

} // namespace

Eigen::ArrayXd make_window(WindowKind kind, Eigen::Index n) {
  switch (kind) {
  case WindowKind::Hann:
    return hann_window<double>(n);
  case WindowKind::Rectangular:
    return Eigen::ArrayXd::Ones(n);
  }
  return Eigen::ArrayXd::Ones(n);
}

Eigen::ArrayXd Spectrogram::bin_frequencies() const {
  return Eigen::ArrayXd::LinSpaced(num_bins(), 0.0, static_cast<double>(num_bins() - 1)) *
         (sample_rate / static_cast<double>(fft_length));
}

Eigen::ArrayXd pad_signal(const Eigen::ArrayXd &samples, Eigen::Index fft_length,
                          Padding padding) {
  const Eigen::Index n = samples.size();
  if (padding == Padding::Reflect) {
    const Eigen::Index half = fft_length / 2;
    Eigen::ArrayXd out(n + 2 * half);
    for (Eigen::Index i = 0; i < out.size(); ++i)
      out[i] = samples[reflect_index(i - half, n)];
    return out;
  }
  if (n < fft_length) {
    Eigen::ArrayXd out = Eigen::ArrayXd::Zero(fft_length);
    out.head(n) = samples;
    return out;
  }
  return samples;
}

Eigen::Index frame_count(Eigen::Index len, Eigen::Index fft_length,
                         Eigen::Index hop_length, Padding padding) {
  const Eigen::Index padded =
      padding == Padding::Reflect ? len + 2 * (fft_length / 2) : std::max(len, fft_length);
  return (padded - fft_length) / hop_length + 1;
}

Eigen::ArrayXXd frame_signal(const Eigen::ArrayXd &samples, Eigen::Index fft_length,
                             Eigen::Index hop_length, Padding padding) {
  if (samples.size() == 0)
    throw Error(ErrorKind::EmptySignal, "cannot frame an empty signal");
  if (fft_length < 1 || hop_length < 1)
    throw Error(ErrorKind::InvalidArgument, "frame and hop lengths must be positive");
  const Eigen::ArrayXd padded = pad_signal(samples, fft_length, padding);
  const Eigen::Index count = frame_count(samples.size(), fft_length, hop_length, padding);
  Eigen::ArrayXXd frames(count, fft_length);
  for (Eigen::Index t = 0; t < count; ++t)
    frames.row(t) = padded.segment(t * hop_length, fft_length).transpose();
  return frames;
}

Spectrogram stft(const AudioSignal &signal, Eigen::Index fft_length,
                 Eigen::Index hop_length, Padding padding, WindowKind window) {
  if (!is_pow2(fft_length))
    throw Error(ErrorKind::InvalidArgument, "fft length must be a power of two");
  if (hop_length < 1)
    throw Error(ErrorKind::InvalidArgument, "hop length must be >= 1");
  const Eigen::ArrayXXd segments =
      frame_signal(signal.samples, fft_length, hop_length, padding);
  const Eigen::ArrayXd w = make_window(window, fft_length);

  Spectrogram spec;
  spec.fft_length = fft_length;
  spec.hop_length = hop_length;
  spec.window = window;
  spec.padding = padding;
  spec.sample_rate = signal.sample_rate;
  spec.frames.resize(segments.rows(), fft_length / 2 + 1);
  for (Eigen::Index t = 0; t < segments.rows(); ++t) {
    const Eigen::ArrayXd windowed = segments.row(t).transpose() * w;
    spec.frames.row(t) = rfft(windowed).matrix().transpose();
  }
  return spec;
}

Eigen::ArrayXd istft(const Spectrogram &spec, Eigen::Index length) {
  const Eigen::Index n_fft = spec.fft_length;
  const Eigen::Index offset = spec.padding == Padding::Reflect ? n_fft / 2 : 0;
  const Eigen::Index total = (spec.num_frames() - 1) * spec.hop_length + n_fft;
  const Eigen::ArrayXd w = make_window(spec.window, n_fft);

  Eigen::ArrayXd acc = Eigen::ArrayXd::Zero(total);
  Eigen::ArrayXd norm = Eigen::ArrayXd::Zero(total);
  for (Eigen::Index t = 0; t < spec.num_frames(); ++t) {
    const Eigen::ArrayXd frame = irfft(spec.frames.row(t).transpose().array(), n_fft);
    acc.segment(t * spec.hop_length, n_fft) += frame * w;
    norm.segment(t * spec.hop_length, n_fft) += w.square();
  }
  Eigen::ArrayXd out = Eigen::ArrayXd::Zero(length);
  for (Eigen::Index i = 0; i < length && i + offset < total; ++i) {
    const double d = norm[i + offset];
    out[i] = d > 1e-10 ? acc[i + offset] / d : 0.0;
  }
  return out;
}

} // namespace emanprint::dsp
