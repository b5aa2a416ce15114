#include <doctest.h>

#include "emanprint/features.hpp"
#include "feature_oracle.hpp"
#include "test_util.hpp"

using namespace emanprint;
using namespace emanprint::features;
using testutil::signal_of;

namespace {

constexpr double kRate = 44100.0;
const FeatureConfig kDefault{};

// Cosines over a whole number of periods with n = 44101: the waveform is
// flat at both ends, so mirrored padding adds no slope discontinuity.
Eigen::ArrayXd smooth_tone(double freq, double amplitude = 0.5) {
  Eigen::ArrayXd x(44101);
  for (Eigen::Index i = 0; i < x.size(); ++i)
    x[i] = amplitude * std::cos(2.0 * std::numbers::pi * freq * i / kRate);
  return x;
}

dsp::Spectrogram spectrogram(const Eigen::ArrayXd &x) {
  return dsp::stft(signal_of(x), kDefault.fft_length, kDefault.hop_length, dsp::Padding::Reflect);
}

Eigen::ArrayXXd frames_of(const Eigen::ArrayXd &x) {
  return dsp::frame_signal(x, kDefault.fft_length, kDefault.hop_length, dsp::Padding::Reflect);
}

const Eigen::ArrayXd &noise() {
  static const Eigen::ArrayXd x = testutil::white_noise(88200, 99, 0.2);
  return x;
}

} // namespace

TEST_CASE("rms energy") {
  CHECK(rms_energy(frames_of(Eigen::ArrayXd::Constant(30000, 0.5))) == doctest::Approx(0.5));
  CHECK(rms_energy(frames_of(smooth_tone(1000.0, 1.0))) == doctest::Approx(std::sqrt(0.5)).epsilon(0.01));
  CHECK(rms_energy(frames_of(Eigen::ArrayXd::Zero(30000))) == 0.0);
}

TEST_CASE("zero crossing rate") {
  CHECK(zero_crossing_rate(signal_of(Eigen::ArrayXd::Constant(20000, 0.3)), 8192, 2048) == 0.0);
  Eigen::ArrayXd alternating(20000);
  for (Eigen::Index i = 0; i < alternating.size(); ++i)
    alternating[i] = i % 2 == 0 ? 1.0 : -1.0;
  CHECK(zero_crossing_rate(signal_of(alternating), 8192, 2048) == doctest::Approx(1.0));

  // Brute-force sign-change count over the raw signal.
  const Eigen::ArrayXd sine = testutil::tone(100.0, 44100, kRate, 1.0, 0.1);
  int crossings = 0;
  for (Eigen::Index i = 1; i < sine.size(); ++i)
    crossings += (sine[i - 1] >= 0) != (sine[i] >= 0);
  const double expected = crossings / static_cast<double>(sine.size() - 1);
  CHECK(expected == doctest::Approx(200.0 / 44100.0).epsilon(0.02));
  CHECK(zero_crossing_rate(signal_of(sine), 8192, 2048) == doctest::Approx(expected).epsilon(0.02));
  CHECK_THROWS_AS(zero_crossing_rate(signal_of(Eigen::ArrayXd::Zero(1)), 8192, 2048), Error);
}

TEST_CASE("spectral centroid") {
  CHECK(spectral_centroid(spectrogram(smooth_tone(1000.0))) == doctest::Approx(1000.0).epsilon(0.01));
  const Eigen::ArrayXd pair = smooth_tone(500.0, 0.3) + smooth_tone(1500.0, 0.3);
  CHECK(std::abs(spectral_centroid(spectrogram(pair)) - 1000.0) <= 15.0);
  CHECK(spectral_centroid(spectrogram(noise())) == doctest::Approx(11025.0).epsilon(0.05));
  CHECK(spectral_centroid(spectrogram(Eigen::ArrayXd::Zero(20000))) == 0.0);
}

TEST_CASE("spectral bandwidth") {
  const double bin = kRate / 8192.0;
  CHECK(spectral_bandwidth(spectrogram(smooth_tone(1000.0))) <= 2.0 * bin);
  const Eigen::ArrayXd pair = smooth_tone(500.0, 0.3) + smooth_tone(1500.0, 0.3);
  CHECK(spectral_bandwidth(spectrogram(pair)) == doctest::Approx(500.0).epsilon(0.05));
  CHECK(spectral_bandwidth(spectrogram(noise())) == doctest::Approx(22050.0 / std::sqrt(12.0)).epsilon(0.05));
}

TEST_CASE("spectral rolloff") {
  CHECK(std::abs(spectral_rolloff(spectrogram(smooth_tone(1000.0)), 0.85) - 1000.0) <= 15.0);
  CHECK(spectral_rolloff(spectrogram(noise()), 0.85) == doctest::Approx(0.85 * 22050.0).epsilon(0.05));
  CHECK(spectral_rolloff(spectrogram(Eigen::ArrayXd::Zero(20000)), 0.85) == 0.0);
  CHECK_THROWS_AS(spectral_rolloff(spectrogram(noise()), 1.0), Error);
}

TEST_CASE("spectral contrast") {
  const double c_noise = spectral_contrast(spectrogram(noise()));
  // Regression fixture: white noise, seed 99, default bands (value
  // computed by the brute-force oracle at fft 8192).
  CHECK(c_noise == doctest::Approx(13.747238307691).epsilon(1e-9));
  Eigen::ArrayXd stack = Eigen::ArrayXd::Zero(44101);
  for (int h = 1; h <= 6; ++h)
    stack += smooth_tone(1000.0 * h, 0.1 / h);
  CHECK(spectral_contrast(spectrogram(stack)) > c_noise);
  CHECK(spectral_contrast(spectrogram(Eigen::ArrayXd::Zero(20000))) == 0.0);
  CHECK(contrast_frames(spectrogram(noise()), 6, 200.0, 0.02, 1e-10).cols() == 7);
}

TEST_CASE("chroma") {
  CHECK(pitch_class(440.0) == 9);
  CHECK(pitch_class(261.63) == 0);
  CHECK(pitch_class(880.0) == 9);
  const Eigen::ArrayXXd a440 = chroma_frames(spectrogram(testutil::tone(440.0, 44100, kRate, 0.5)), 32.7, 1e-10);
  const Eigen::ArrayXXd a880 = chroma_frames(spectrogram(testutil::tone(880.0, 44100, kRate, 0.5)), 32.7, 1e-10);
  for (Eigen::Index t = 0; t < a440.rows(); ++t) {
    Eigen::Index c440, c880;
    a440.row(t).maxCoeff(&c440);
    a880.row(t).maxCoeff(&c880);
    CHECK(c440 == 9);
    CHECK(c880 == 9);
    CHECK(a440(t, 9) == 1.0);
  }
  const double mean = a440.mean();
  CHECK(mean > 0.08);
  CHECK(mean < 0.25);
  CHECK(chroma_mean(spectrogram(Eigen::ArrayXd::Zero(20000))) == 0.0);
}

TEST_CASE("mfcc") {
  const Eigen::VectorXd silent = mfcc(spectrogram(Eigen::ArrayXd::Zero(20000)));
  REQUIRE(silent.size() == 14);
  CHECK(silent[0] == doctest::Approx(-100.0 * std::sqrt(128.0)));
  CHECK(silent.tail(13).cwiseAbs().maxCoeff() <= 1e-6);

  const Eigen::ArrayXd base = 0.3 * noise() + smooth_tone(700.0, 0.2).head(noise().size()).cwiseMin(1.0);
  const Eigen::VectorXd c1 = mfcc(spectrogram(0.5 * base));
  const Eigen::VectorXd c2 = mfcc(spectrogram(base));
  CHECK(c2[0] > c1[0]);
  for (int k = 1; k < 14; ++k)
    CHECK(std::abs(c2[k] - c1[k]) < 0.01 * std::max(std::abs(c1[k]), 1e-6));

  const Eigen::VectorXd tone_c = mfcc(spectrogram(smooth_tone(1000.0)));
  const Eigen::VectorXd noise_c = mfcc(spectrogram(noise()));
  CHECK((tone_c - noise_c).norm() > 1.0);

  FeatureConfig bad;
  bad.mel_bands = 10;
  CHECK_THROWS_AS(mfcc(spectrogram(noise()), bad), Error);
}

TEST_CASE("mel and dct helpers") {
  CHECK(hz_to_mel(1000.0) == doctest::Approx(15.0));
  CHECK(mel_to_hz(hz_to_mel(3210.0)) == doctest::Approx(3210.0));
  const Eigen::MatrixXd d = dct_ii(16, 16);
  CHECK((d * d.transpose() - Eigen::MatrixXd::Identity(16, 16)).cwiseAbs().maxCoeff() < 1e-12);
  const Eigen::MatrixXd bank = mel_filterbank(44100.0, 8192, 128, 0.0, 22050.0);
  CHECK(bank.rows() == 128);
  CHECK(bank.cols() == 4097);
  CHECK(bank.minCoeff() >= 0.0);
  for (Eigen::Index m = 0; m < bank.rows(); ++m)
    CHECK(bank.row(m).maxCoeff() > 0.0);
}

TEST_CASE("extract_feature_vector") {
  const AudioSignal s = signal_of(0.5 * noise() + smooth_tone(300.0, 0.3).head(noise().size()));
  const FeatureVector a = extract_feature_vector(s);
  const FeatureVector b = extract_feature_vector(s);
  CHECK(a.values.size() == 21);
  CHECK(a.values.allFinite());
  CHECK(a.values == b.values);
  CHECK(a.config_hash == config_hash(kDefault));
  CHECK(a.config_hash.size() == 16);

  FeatureConfig other;
  other.rolloff_fraction = 0.9;
  CHECK(config_hash(other) != a.config_hash);

  AudioSignal quiet = s;
  quiet.samples *= 1e-3;
  const FeatureVector q = extract_feature_vector(quiet);
  CHECK(q.zcr() == a.zcr());
  CHECK(q.rms() == doctest::Approx(1e-3 * a.rms()).epsilon(0.01));

  CHECK(a.rms() >= 0.0);
  CHECK(a.zcr() >= 0.0);
  CHECK(a.zcr() <= 1.0);
  for (double f : {a.centroid(), a.bandwidth(), a.rolloff()}) {
    CHECK(f >= 0.0);
    CHECK(f <= 22050.0);
  }
  CHECK_THROWS_AS(extract_feature_vector(AudioSignal{}), Error);
}

TEST_CASE("scale covariance") {
  const Eigen::ArrayXd x = 0.8 * testutil::white_noise(30000, 17, 0.3).cwiseMin(1.0).cwiseMax(-1.0);
  const FeatureVector ref = extract_feature_vector(signal_of(x));
  Rng rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    const double scale = std::pow(10.0, -3.0 * uniform01(rng));
    const FeatureVector v = extract_feature_vector(signal_of(scale * x));
    CHECK(v.rms() == doctest::Approx(scale * ref.rms()).epsilon(1e-6));
    for (int i : {1, 2, 4, 6})
      CHECK(oracle::close(v.values[i], ref.values[i], 1e-6));
  }
}

TEST_CASE("features stay finite") {
  const FeatureVector z = extract_feature_vector(signal_of(Eigen::ArrayXd::Zero(5000)));
  CHECK(z.values.allFinite());
  CHECK(extract_feature_vector(signal_of(Eigen::ArrayXd::Constant(3, 1.0))).values.allFinite());
  CHECK(extract_feature_vector(signal_of(Eigen::ArrayXd::Constant(1, -1.0))).values.allFinite());
  Rng rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const auto n = static_cast<Eigen::Index>(1 + uniform_index(rng, 30000));
    Eigen::ArrayXd x(n);
    for (auto &v : x)
      v = 2.0 * uniform01(rng) - 1.0;
    if (trial % 3 == 0)
      x = x.sign();
    CHECK(extract_feature_vector(signal_of(x)).values.allFinite());
  }
}

TEST_CASE("centroid never exceeds the 99% rolloff by more than a bin") {
  Rng rng(12);
  const double bin = kRate / 8192.0;
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::ArrayXd x = testutil::white_noise(20000 + static_cast<Eigen::Index>(uniform_index(rng, 20000)),
                                                   100 + static_cast<std::uint64_t>(trial), 0.1 + 0.2 * uniform01(rng));
    const dsp::Spectrogram spec = spectrogram(x);
    const Eigen::ArrayXd c = centroid_frames(spec);
    const Eigen::ArrayXd r = rolloff_frames(spec, 0.99);
    CHECK(((c - r) <= bin).all());
  }
}

TEST_CASE("spectral features match the brute-force DFT oracle") {
  oracle::Config oc;
  FeatureConfig fc;
  fc.fft_length = oc.fft_length;
  fc.hop_length = oc.hop_length;
  fc.mel_bands = oc.mel_bands;
  Rng rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const auto n = static_cast<Eigen::Index>(1500 + uniform_index(rng, 2500));
    Eigen::ArrayXd x = testutil::white_noise(n, 7000 + static_cast<std::uint64_t>(trial), 0.05 + 0.2 * uniform01(rng));
    x += testutil::tone(100.0 + 3000.0 * uniform01(rng), n, kRate, 0.3 * uniform01(rng));
    x = x.cwiseMin(1.0).cwiseMax(-1.0);
    const FeatureVector fv = extract_feature_vector(signal_of(x), fc);
    const oracle::Features ref =
        oracle::compute(std::vector<double>(x.begin(), x.end()), kRate, oc);
    CHECK(oracle::close(fv.rms(), ref.rms, 0.01));
    CHECK(oracle::close(fv.zcr(), ref.zcr, 0.01));
    CHECK(oracle::close(fv.centroid(), ref.centroid, 0.01));
    CHECK(oracle::close(fv.bandwidth(), ref.bandwidth, 0.01));
    CHECK(oracle::close(fv.rolloff(), ref.rolloff, 0.01));
    CHECK(oracle::close(fv.contrast(), ref.contrast, 0.01));
    CHECK(oracle::close(fv.chroma(), ref.chroma, 0.01));
    const Eigen::VectorXd ref_mfcc = Eigen::Map<const Eigen::VectorXd>(ref.mfcc.data(), 14);
    CHECK((fv.mfcc() - ref_mfcc).norm() <= 0.01 * ref_mfcc.norm());
  }
}
