#pragma once

#include <Eigen/Core>
#include <array>
#include <string>
#include <string_view>

#include "emanprint/signal.hpp"
#include "emanprint/stft.hpp"

namespace emanprint::features {

inline constexpr Eigen::Index kFeatureDim = 21;
inline constexpr int kChromaClasses = 12;

using FeatureValues = Eigen::Matrix<double, kFeatureDim, 1>;

struct FeatureConfig {
  Eigen::Index fft_length = 8192;
  Eigen::Index hop_length = 2048;
  int mfcc_count = 14;
  int mel_bands = 128;
  double rolloff_fraction = 0.85;
  int contrast_bands = 6;          ///< octave bands above contrast_fmin; one more below it
  double contrast_fmin = 200.0;
  double contrast_quantile = 0.02;
  int chroma_classes = kChromaClasses;
  double chroma_fmin = 32.70319566; ///< C1
  double reference_power = 1e-10;  ///< floor under every log
  dsp::Padding padding = dsp::Padding::Reflect;
};

/// Throws InvalidArgument when a field is out of range.
void validate(const FeatureConfig &config);

/// Stable 16-hex-digit identifier of a configuration.
std::string config_hash(const FeatureConfig &config);

/// Per-signal means in fixed order:
/// rms, zcr, centroid, bandwidth, rolloff, contrast, chroma, mfcc0..mfcc13.
struct FeatureVector {
  FeatureValues values = FeatureValues::Zero();
  std::string config_hash;

  double rms() const { return values[0]; }
  double zcr() const { return values[1]; }
  double centroid() const { return values[2]; }
  double bandwidth() const { return values[3]; }
  double rolloff() const { return values[4]; }
  double contrast() const { return values[5]; }
  double chroma() const { return values[6]; }
  auto mfcc() const { return values.tail<14>(); }
};

const std::array<std::string_view, kFeatureDim> &feature_names();

// Per-frame descriptors. Time-domain ones take the (frames x length)
// matrix from dsp::frame_signal; spectral ones take an STFT.

Eigen::ArrayXd rms_frames(const Eigen::ArrayXXd &frames);
Eigen::ArrayXd zcr_frames(const Eigen::ArrayXXd &frames);
Eigen::ArrayXd centroid_frames(const dsp::Spectrogram &spec);
Eigen::ArrayXd bandwidth_frames(const dsp::Spectrogram &spec);
Eigen::ArrayXd rolloff_frames(const dsp::Spectrogram &spec, double fraction);
/// (frames x (bands + 1)) peak-minus-valley contrast in dB.
Eigen::ArrayXXd contrast_frames(const dsp::Spectrogram &spec, int bands, double fmin,
                                double quantile, double floor);
/// (frames x 12) max-normalized pitch-class profile, C = 0 ... B = 11.
Eigen::ArrayXXd chroma_frames(const dsp::Spectrogram &spec, double fmin, double floor);
/// (frames x mfcc_count) cepstra.
Eigen::ArrayXXd mfcc_frames(const dsp::Spectrogram &spec, const FeatureConfig &config);

// Signal-level means.

double rms_energy(const Eigen::ArrayXXd &frames);
double zero_crossing_rate(const Eigen::ArrayXXd &frames);
double zero_crossing_rate(const AudioSignal &signal, Eigen::Index frame_length,
                          Eigen::Index hop_length, dsp::Padding padding = dsp::Padding::Reflect);
double spectral_centroid(const dsp::Spectrogram &spec);
double spectral_bandwidth(const dsp::Spectrogram &spec);
double spectral_rolloff(const dsp::Spectrogram &spec, double fraction = 0.85);
double spectral_contrast(const dsp::Spectrogram &spec, int bands = 6, double fmin = 200.0,
                         double quantile = 0.02, double floor = 1e-10);
double chroma_mean(const dsp::Spectrogram &spec, double fmin = 32.70319566,
                   double floor = 1e-10);
Eigen::VectorXd mfcc(const dsp::Spectrogram &spec, const FeatureConfig &config = {});

/// Pitch class (C = 0) of a frequency, by nearest equal-tempered semitone.
int pitch_class(double hz);

// Mel machinery (Slaney scale, area-normalized triangles).
double hz_to_mel(double hz);
double mel_to_hz(double mel);
/// (n_mels x (n_fft/2 + 1)) filterbank spanning fmin .. fmax.
Eigen::MatrixXd mel_filterbank(double sample_rate, Eigen::Index n_fft, int n_mels,
                               double fmin, double fmax);
/// Orthonormal DCT-II matrix (n_out x n_in).
Eigen::MatrixXd dct_ii(int n_out, int n_in);

/// All families from one shared STFT.
FeatureVector extract_feature_vector(const AudioSignal &signal,
                                     const FeatureConfig &config = {});

} // namespace emanprint::features
