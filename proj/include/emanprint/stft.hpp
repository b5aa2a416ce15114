#pragma once

#include <Eigen/Core>
#include <cmath>
#include <numbers>

#include "emanprint/error.hpp"
#include "emanprint/signal.hpp"

namespace emanprint::dsp {

enum class WindowKind { Hann, Rectangular };

/// How the signal is extended before framing.
///   None:    frames start at sample 0; a signal shorter than one frame is
///            zero-padded to a single frame.
///   Reflect: fft_length/2 mirrored samples on each side so frame t is
///            centred on sample t * hop.
enum class Padding { None, Reflect };

/// Symmetric Hann window, w[k] = 0.5 - 0.5 cos(2 pi k / (n - 1)).
template <typename Scalar = double>
Eigen::Array<Scalar, Eigen::Dynamic, 1> hann_window(Eigen::Index n) {
  if (n < 2)
    throw Error(ErrorKind::InvalidArgument, "hann window needs n >= 2");
  Eigen::Array<Scalar, Eigen::Dynamic, 1> w(n);
  const Scalar denom = static_cast<Scalar>(n - 1);
  for (Eigen::Index k = 0; k < n; ++k)
    w[k] = Scalar(0.5) -
           Scalar(0.5) * std::cos(Scalar(2) * std::numbers::pi_v<Scalar> *
                                  static_cast<Scalar>(k) / denom);
  return w;
}

Eigen::ArrayXd make_window(WindowKind kind, Eigen::Index n);

/// Complex STFT; rows are frames, columns the fft_length/2 + 1 bins.
struct Spectrogram {
  Eigen::MatrixXcd frames;
  Eigen::Index fft_length = 0;
  Eigen::Index hop_length = 0;
  WindowKind window = WindowKind::Hann;
  Padding padding = Padding::None;
  double sample_rate = 44100.0;

  Eigen::Index num_frames() const { return frames.rows(); }
  Eigen::Index num_bins() const { return frames.cols(); }
  /// Centre frequency of every bin, k * sample_rate / fft_length.
  Eigen::ArrayXd bin_frequencies() const;
  Eigen::ArrayXXd magnitude() const { return frames.array().abs2().sqrt(); }
};

/// Signal extended according to the padding policy (before framing).
Eigen::ArrayXd pad_signal(const Eigen::ArrayXd &samples, Eigen::Index fft_length,
                          Padding padding);

/// Number of frames the given policy yields for a signal of length len.
Eigen::Index frame_count(Eigen::Index len, Eigen::Index fft_length,
                         Eigen::Index hop_length, Padding padding);

/// Unwindowed time-domain frames (frames x fft_length) of the padded signal,
/// aligned with the STFT frames.
Eigen::ArrayXXd frame_signal(const Eigen::ArrayXd &samples, Eigen::Index fft_length,
                             Eigen::Index hop_length, Padding padding);

Spectrogram stft(const AudioSignal &signal, Eigen::Index fft_length,
                 Eigen::Index hop_length, Padding padding = Padding::None,
                 WindowKind window = WindowKind::Hann);

/// Weighted overlap-add inverse: sum(w * frame) / sum(w^2) per sample.
/// Returns a signal of the given length (the unpadded original length).
Eigen::ArrayXd istft(const Spectrogram &spec, Eigen::Index length);

} // namespace emanprint::dsp
