#include "emanprint/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <numbers>
#include <sstream>
#include <vector>

namespace emanprint::features {

namespace {

constexpr double kMelLinearStep = 200.0 / 3.0;
constexpr double kMelLogStartHz = 1000.0;
constexpr double kMelLogStartMel = kMelLogStartHz / kMelLinearStep;
const double kMelLogStep = std::log(6.4) / 27.0;

double safe_db(double value, double floor) {
  return 10.0 * std::log10(std::max(value, floor));
}

} // namespace

void validate(const FeatureConfig &c) {
  const auto require = [](bool ok, const char *what) {
    if (!ok)
      throw Error(ErrorKind::InvalidArgument, std::string("feature config: ") + what);
  };
  require(c.fft_length >= 2 && (c.fft_length & (c.fft_length - 1)) == 0,
          "fft_length must be a power of two");
  require(c.hop_length >= 1, "hop_length must be >= 1");
  require(c.mfcc_count == 14, "the feature vector carries exactly 14 MFCCs");
  require(c.mel_bands >= c.mfcc_count, "mel_bands must be >= mfcc_count");
  require(c.rolloff_fraction > 0.0 && c.rolloff_fraction < 1.0, "rolloff_fraction in (0, 1)");
  require(c.contrast_bands >= 1, "contrast_bands must be >= 1");
  require(c.contrast_fmin > 0.0, "contrast_fmin must be positive");
  require(c.contrast_quantile > 0.0 && c.contrast_quantile < 0.5, "contrast_quantile in (0, 0.5)");
  require(c.chroma_classes == kChromaClasses, "chroma_classes is fixed at 12");
  require(c.chroma_fmin > 0.0, "chroma_fmin must be positive");
  require(c.reference_power > 0.0, "reference_power must be positive");
}

std::string config_hash(const FeatureConfig &c) {
  std::ostringstream canon;
  canon.precision(17);
  canon << "fft=" << c.fft_length << ";hop=" << c.hop_length << ";mfcc=" << c.mfcc_count
        << ";mel=" << c.mel_bands << ";rolloff=" << c.rolloff_fraction
        << ";cbands=" << c.contrast_bands << ";cfmin=" << c.contrast_fmin
        << ";cq=" << c.contrast_quantile << ";chroma=" << c.chroma_classes
        << ";chfmin=" << c.chroma_fmin << ";ref=" << c.reference_power
        << ";pad=" << static_cast<int>(c.padding);
  // FNV-1a, 64-bit.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char ch : canon.str()) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

const std::array<std::string_view, kFeatureDim> &feature_names() {
  static const std::array<std::string_view, kFeatureDim> names{
      "rms",   "zcr",   "centroid", "bandwidth", "rolloff", "contrast", "chroma",
      "mfcc0", "mfcc1", "mfcc2",    "mfcc3",     "mfcc4",   "mfcc5",    "mfcc6",
      "mfcc7", "mfcc8", "mfcc9",    "mfcc10",    "mfcc11",  "mfcc12",   "mfcc13"};
  return names;
}

Eigen::ArrayXd rms_frames(const Eigen::ArrayXXd &frames) {
  return frames.square().rowwise().mean().sqrt();
}

Eigen::ArrayXd zcr_frames(const Eigen::ArrayXXd &frames) {
  const Eigen::Index len = frames.cols();
  Eigen::ArrayXd out = Eigen::ArrayXd::Zero(frames.rows());
  if (len < 2)
    return out;
  for (Eigen::Index t = 0; t < frames.rows(); ++t) {
    Eigen::Index crossings = 0;
    // Zero counts as non-negative.
    for (Eigen::Index i = 1; i < len; ++i)
      crossings += (frames(t, i - 1) >= 0.0) != (frames(t, i) >= 0.0);
    out[t] = static_cast<double>(crossings) / static_cast<double>(len - 1);
  }
  return out;
}

Eigen::ArrayXd centroid_frames(const dsp::Spectrogram &spec) {
  const Eigen::ArrayXXd mag = spec.magnitude();
  const Eigen::ArrayXd freqs = spec.bin_frequencies();
  Eigen::ArrayXd out(mag.rows());
  for (Eigen::Index t = 0; t < mag.rows(); ++t) {
    const double total = mag.row(t).sum();
    out[t] = total > 0.0 ? (mag.row(t).transpose() * freqs).sum() / total : 0.0;
  }
  return out;
}

Eigen::ArrayXd bandwidth_frames(const dsp::Spectrogram &spec) {
  const Eigen::ArrayXXd mag = spec.magnitude();
  const Eigen::ArrayXd freqs = spec.bin_frequencies();
  const Eigen::ArrayXd centroids = centroid_frames(spec);
  Eigen::ArrayXd out(mag.rows());
  for (Eigen::Index t = 0; t < mag.rows(); ++t) {
    const double total = mag.row(t).sum();
    out[t] = total > 0.0
                 ? std::sqrt((mag.row(t).transpose() * (freqs - centroids[t]).square()).sum() / total)
                 : 0.0;
  }
  return out;
}

Eigen::ArrayXd rolloff_frames(const dsp::Spectrogram &spec, double fraction) {
  if (!(fraction > 0.0 && fraction < 1.0))
    throw Error(ErrorKind::InvalidArgument, "rolloff fraction must lie in (0, 1)");
  const Eigen::ArrayXXd mag = spec.magnitude();
  const Eigen::ArrayXd freqs = spec.bin_frequencies();
  Eigen::ArrayXd out = Eigen::ArrayXd::Zero(mag.rows());
  for (Eigen::Index t = 0; t < mag.rows(); ++t) {
    const double total = mag.row(t).sum();
    if (!(total > 0.0))
      continue;
    const double threshold = fraction * total;
    double cumulative = 0.0;
    for (Eigen::Index k = 0; k < mag.cols(); ++k) {
      cumulative += mag(t, k);
      if (cumulative >= threshold) {
        out[t] = freqs[k];
        break;
      }
    }
  }
  return out;
}

Eigen::ArrayXXd contrast_frames(const dsp::Spectrogram &spec, int bands, double fmin,
                                double quantile, double floor) {
  const double nyquist = spec.sample_rate / 2.0;
  if (fmin * std::pow(2.0, bands - 1) >= nyquist)
    throw Error(ErrorKind::InvalidArgument, "contrast bands extend past nyquist");
  // Edges 0, fmin, 2 fmin, ..., fmin 2^(bands-1), then the top band runs to
  // nyquist.
  std::vector<double> edges{0.0};
  for (int b = 0; b < bands; ++b)
    edges.push_back(fmin * std::pow(2.0, b));
  edges.push_back(std::numeric_limits<double>::infinity());

  const Eigen::ArrayXXd mag = spec.magnitude();
  const Eigen::ArrayXd freqs = spec.bin_frequencies();
  const int n_rows = bands + 1;
  std::vector<std::vector<Eigen::Index>> members(static_cast<std::size_t>(n_rows));
  for (Eigen::Index k = 0; k < freqs.size(); ++k)
    for (int b = 0; b < n_rows; ++b)
      if (freqs[k] >= edges[static_cast<std::size_t>(b)] &&
          freqs[k] < edges[static_cast<std::size_t>(b) + 1]) {
        members[static_cast<std::size_t>(b)].push_back(k);
        break;
      }
  for (const auto &m : members)
    if (m.empty())
      throw Error(ErrorKind::InvalidArgument, "contrast band without bins; increase fft length");

  Eigen::ArrayXXd out(mag.rows(), n_rows);
  std::vector<double> values;
  for (Eigen::Index t = 0; t < mag.rows(); ++t) {
    for (int b = 0; b < n_rows; ++b) {
      const auto &idx = members[static_cast<std::size_t>(b)];
      values.resize(idx.size());
      for (std::size_t i = 0; i < idx.size(); ++i)
        values[i] = mag(t, idx[i]);
      std::sort(values.begin(), values.end());
      const auto n_q = std::max<std::size_t>(
          1, static_cast<std::size_t>(std::lround(quantile * static_cast<double>(values.size()))));
      double valley = 0.0, peak = 0.0;
      for (std::size_t i = 0; i < n_q; ++i) {
        valley += values[i];
        peak += values[values.size() - 1 - i];
      }
      valley /= static_cast<double>(n_q);
      peak /= static_cast<double>(n_q);
      out(t, b) = safe_db(peak, floor) - safe_db(valley, floor);
    }
  }
  return out;
}

int pitch_class(double hz) {
  const long semitones = std::lround(12.0 * std::log2(hz / 440.0));
  // A = 9 with C as class 0.
  return static_cast<int>(((semitones + 9) % 12 + 12) % 12);
}

Eigen::ArrayXXd chroma_frames(const dsp::Spectrogram &spec, double fmin, double floor) {
  const Eigen::ArrayXXd mag = spec.magnitude();
  const Eigen::ArrayXd freqs = spec.bin_frequencies();
  Eigen::MatrixXd fold = Eigen::MatrixXd::Zero(freqs.size(), kChromaClasses);
  for (Eigen::Index k = 0; k < freqs.size(); ++k)
    if (freqs[k] >= fmin)
      fold(k, pitch_class(freqs[k])) = 1.0;
  Eigen::ArrayXXd chroma = (mag.matrix() * fold).array();
  for (Eigen::Index t = 0; t < chroma.rows(); ++t) {
    const double peak = chroma.row(t).maxCoeff();
    if (peak > floor)
      chroma.row(t) /= peak;
    else
      chroma.row(t).setZero();
  }
  return chroma;
}

double hz_to_mel(double hz) {
  if (hz < kMelLogStartHz)
    return hz / kMelLinearStep;
  return kMelLogStartMel + std::log(hz / kMelLogStartHz) / kMelLogStep;
}

double mel_to_hz(double mel) {
  if (mel < kMelLogStartMel)
    return mel * kMelLinearStep;
  return kMelLogStartHz * std::exp(kMelLogStep * (mel - kMelLogStartMel));
}

Eigen::MatrixXd mel_filterbank(double sample_rate, Eigen::Index n_fft, int n_mels,
                               double fmin, double fmax) {
  const Eigen::Index bins = n_fft / 2 + 1;
  const Eigen::ArrayXd fft_freqs =
      Eigen::ArrayXd::LinSpaced(bins, 0.0, static_cast<double>(bins - 1)) *
      (sample_rate / static_cast<double>(n_fft));
  const Eigen::ArrayXd mel_points =
      Eigen::ArrayXd::LinSpaced(n_mels + 2, hz_to_mel(fmin), hz_to_mel(fmax));
  const Eigen::ArrayXd hz = mel_points.unaryExpr([](double m) { return mel_to_hz(m); });

  Eigen::MatrixXd weights(n_mels, bins);
  for (int i = 0; i < n_mels; ++i) {
    const double lo = hz[i], centre = hz[i + 1], hi = hz[i + 2];
    const Eigen::ArrayXd rising = (fft_freqs - lo) / (centre - lo);
    const Eigen::ArrayXd falling = (hi - fft_freqs) / (hi - centre);
    weights.row(i) = (rising.min(falling).max(0.0) * (2.0 / (hi - lo))).matrix().transpose();
  }
  return weights;
}

Eigen::MatrixXd dct_ii(int n_out, int n_in) {
  Eigen::MatrixXd basis(n_out, n_in);
  for (int k = 0; k < n_out; ++k) {
    const double scale = std::sqrt((k == 0 ? 1.0 : 2.0) / n_in);
    for (int n = 0; n < n_in; ++n)
      basis(k, n) = scale * std::cos(std::numbers::pi * k * (2.0 * n + 1.0) / (2.0 * n_in));
  }
  return basis;
}

Eigen::ArrayXXd mfcc_frames(const dsp::Spectrogram &spec, const FeatureConfig &config) {
  if (config.mel_bands < config.mfcc_count)
    throw Error(ErrorKind::InvalidArgument, "mel_bands must be >= mfcc_count");
  // Building the bank costs more than applying it; keep the last one.
  thread_local struct {
    double sample_rate = 0.0;
    Eigen::Index fft_length = 0;
    int mel_bands = 0;
    Eigen::MatrixXd bank;
  } cache;
  if (cache.sample_rate != spec.sample_rate || cache.fft_length != spec.fft_length ||
      cache.mel_bands != config.mel_bands) {
    cache.bank = mel_filterbank(spec.sample_rate, spec.fft_length, config.mel_bands, 0.0,
                                spec.sample_rate / 2.0);
    cache.sample_rate = spec.sample_rate;
    cache.fft_length = spec.fft_length;
    cache.mel_bands = config.mel_bands;
  }
  const Eigen::MatrixXd &bank = cache.bank;
  const Eigen::MatrixXd power = spec.frames.cwiseAbs2();
  const Eigen::MatrixXd mel = power * bank.transpose();
  const double floor = config.reference_power;
  const Eigen::MatrixXd log_mel = mel.unaryExpr([floor](double v) { return safe_db(v, floor); });
  return (log_mel * dct_ii(config.mfcc_count, config.mel_bands).transpose()).array();
}

double rms_energy(const Eigen::ArrayXXd &frames) { return rms_frames(frames).mean(); }

double zero_crossing_rate(const Eigen::ArrayXXd &frames) { return zcr_frames(frames).mean(); }

double zero_crossing_rate(const AudioSignal &signal, Eigen::Index frame_length,
                          Eigen::Index hop_length, dsp::Padding padding) {
  if (signal.samples.size() < 2)
    throw Error(ErrorKind::InvalidArgument, "zero crossing rate needs >= 2 samples");
  return zero_crossing_rate(dsp::frame_signal(signal.samples, frame_length, hop_length, padding));
}

double spectral_centroid(const dsp::Spectrogram &spec) { return centroid_frames(spec).mean(); }

double spectral_bandwidth(const dsp::Spectrogram &spec) { return bandwidth_frames(spec).mean(); }

double spectral_rolloff(const dsp::Spectrogram &spec, double fraction) {
  return rolloff_frames(spec, fraction).mean();
}

double spectral_contrast(const dsp::Spectrogram &spec, int bands, double fmin, double quantile,
                         double floor) {
  return contrast_frames(spec, bands, fmin, quantile, floor).mean();
}

double chroma_mean(const dsp::Spectrogram &spec, double fmin, double floor) {
  return chroma_frames(spec, fmin, floor).mean();
}

Eigen::VectorXd mfcc(const dsp::Spectrogram &spec, const FeatureConfig &config) {
  return mfcc_frames(spec, config).colwise().mean().transpose().matrix();
}

FeatureVector extract_feature_vector(const AudioSignal &signal, const FeatureConfig &config) {
  validate(signal);
  validate(config);
  const dsp::Spectrogram spec =
      dsp::stft(signal, config.fft_length, config.hop_length, config.padding);
  const Eigen::ArrayXXd frames =
      dsp::frame_signal(signal.samples, config.fft_length, config.hop_length, config.padding);

  FeatureVector fv;
  fv.config_hash = config_hash(config);
  fv.values[0] = rms_energy(frames);
  fv.values[1] = zero_crossing_rate(frames);
  fv.values[2] = spectral_centroid(spec);
  fv.values[3] = spectral_bandwidth(spec);
  fv.values[4] = spectral_rolloff(spec, config.rolloff_fraction);
  fv.values[5] = spectral_contrast(spec, config.contrast_bands, config.contrast_fmin,
                                   config.contrast_quantile, config.reference_power);
  fv.values[6] = chroma_mean(spec, config.chroma_fmin, config.reference_power);
  fv.values.tail<14>() = mfcc(spec, config);
  if (!fv.values.allFinite())
    throw Error(ErrorKind::InvalidArgument, "feature extraction produced a non-finite value");
  return fv;
}

} // namespace emanprint::features
