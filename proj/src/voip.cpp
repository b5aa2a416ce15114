#include "emanprint/voip.hpp"

#include <cmath>
#include <memory>

#include "emanprint/random.hpp"
#include "emanprint/resample.hpp"

#ifdef EMANPRINT_HAVE_OPUS
#include <opus.h>
#endif

namespace emanprint::voip {

namespace {

AudioSignal concat(const PacketStream &stream, std::vector<Eigen::ArrayXd> frames) {
  Eigen::ArrayXd out(static_cast<Eigen::Index>(frames.size()) * stream.frame_samples);
  for (std::size_t i = 0; i < frames.size(); ++i)
    out.segment(static_cast<Eigen::Index>(i) * stream.frame_samples, stream.frame_samples) =
        frames[i];
  return make_signal(out.cwiseMax(-1.0).cwiseMin(1.0), stream.sample_rate, 16);
}

AudioSignal null_roundtrip(const PacketStream &stream) {
  const Eigen::Index n = stream.frame_samples;
  const double fade = std::max(1.0, std::round(kPlcFadeSeconds * stream.sample_rate));
  Eigen::ArrayXd envelope(n);
  for (Eigen::Index i = 0; i < n; ++i)
    envelope[i] = std::min({1.0, static_cast<double>(i) / fade,
                            static_cast<double>(n - 1 - i) / fade});

  std::vector<Eigen::ArrayXd> frames;
  frames.reserve(stream.packets.size());
  for (const auto &p : stream.packets) {
    if (!p.lost) {
      frames.push_back(p.pcm.unaryExpr([](double s) { return quantize_pcm16(s) / 32768.0; }));
    } else if (frames.empty()) {
      frames.push_back(Eigen::ArrayXd::Zero(n));
    } else {
      frames.push_back(frames.back() * envelope);
    }
  }
  return concat(stream, std::move(frames));
}

#ifdef EMANPRINT_HAVE_OPUS

constexpr int kOpusRate = 48000;

struct EncoderDeleter {
  void operator()(OpusEncoder *e) const { opus_encoder_destroy(e); }
};
struct DecoderDeleter {
  void operator()(OpusDecoder *d) const { opus_decoder_destroy(d); }
};

void check(int rc, const char *what) {
  if (rc < 0)
    throw Error(ErrorKind::Codec, std::string(what) + ": " + opus_strerror(rc));
}

AudioSignal opus_roundtrip(const PacketStream &stream, const ChannelConfig &config) {
  const double sr = stream.sample_rate;
  const auto rate = static_cast<int>(std::llround(sr));
  if (std::abs(sr - rate) > 1e-9)
    throw Error(ErrorKind::InvalidArgument, "Opus adapter needs an integer sample rate");
  const double frame48 = config.frame_ms * kOpusRate / 1000.0;
  const auto n48 = static_cast<int>(std::llround(frame48));
  if (std::abs(frame48 - n48) > 1e-9 || (n48 != 120 && n48 != 240 && n48 != 480 && n48 != 960 &&
                                         n48 != 1920 && n48 != 2880))
    throw Error(ErrorKind::InvalidArgument,
                "Opus frames must be 2.5, 5, 10, 20, 40 or 60 ms");
  if (static_cast<double>(stream.frame_samples) * kOpusRate != static_cast<double>(n48) * sr)
    throw Error(ErrorKind::InvalidArgument, "frame length does not map onto 48 kHz frames");

  const int app = config.opus.application == OpusApplication::Voip     ? OPUS_APPLICATION_VOIP
                  : config.opus.application == OpusApplication::Audio  ? OPUS_APPLICATION_AUDIO
                                                                       : OPUS_APPLICATION_RESTRICTED_LOWDELAY;
  int rc = 0;
  std::unique_ptr<OpusEncoder, EncoderDeleter> enc(opus_encoder_create(kOpusRate, 1, app, &rc));
  check(rc, "opus_encoder_create");
  std::unique_ptr<OpusDecoder, DecoderDeleter> dec(opus_decoder_create(kOpusRate, 1, &rc));
  check(rc, "opus_decoder_create");
  check(opus_encoder_ctl(enc.get(), OPUS_SET_VBR(config.bitrate_mode == BitrateMode::Variable)),
        "OPUS_SET_VBR");
  check(opus_encoder_ctl(enc.get(), OPUS_SET_BITRATE(config.opus.bitrate_bps > 0
                                                         ? config.opus.bitrate_bps
                                                         : OPUS_AUTO)),
        "OPUS_SET_BITRATE");
  check(opus_encoder_ctl(enc.get(), OPUS_SET_COMPLEXITY(config.opus.complexity)),
        "OPUS_SET_COMPLEXITY");
  opus_int32 lookahead = 0;
  check(opus_encoder_ctl(enc.get(), OPUS_GET_LOOKAHEAD(&lookahead)), "OPUS_GET_LOOKAHEAD");

  const auto packets = static_cast<Eigen::Index>(stream.packets.size());
  Eigen::ArrayXd pcm(packets * stream.frame_samples);
  for (const auto &p : stream.packets)
    pcm.segment(static_cast<Eigen::Index>(p.index) * stream.frame_samples, stream.frame_samples) =
        p.pcm;
  const dsp::Resampler up(kOpusRate, rate), down(rate, kOpusRate);
  Eigen::ArrayXd at48 = up(pcm);
  // One trailing frame flushes the encoder lookahead; it is never dropped.
  const Eigen::Index total48 = (packets + 1) * n48;
  at48.conservativeResize(total48);
  at48.tail(total48 - packets * n48).setZero();

  std::vector<float> in(static_cast<std::size_t>(n48)), out(static_cast<std::size_t>(n48));
  std::vector<unsigned char> payload(4000);
  Eigen::ArrayXd decoded(total48);
  for (Eigen::Index f = 0; f <= packets; ++f) {
    for (int i = 0; i < n48; ++i)
      in[static_cast<std::size_t>(i)] = static_cast<float>(at48[f * n48 + i]);
    const opus_int32 bytes = opus_encode_float(enc.get(), in.data(), n48, payload.data(),
                                               static_cast<opus_int32>(payload.size()));
    check(bytes, "opus_encode_float");
    const bool lost = f < packets && stream.packets[static_cast<std::size_t>(f)].lost;
    const int got = lost ? opus_decode_float(dec.get(), nullptr, 0, out.data(), n48, 0)
                         : opus_decode_float(dec.get(), payload.data(), bytes, out.data(), n48, 0);
    check(got, "opus_decode_float");
    if (got != n48)
      throw Error(ErrorKind::Codec, "decoder returned a short frame");
    for (int i = 0; i < n48; ++i)
      decoded[f * n48 + i] = out[static_cast<std::size_t>(i)];
  }
  Eigen::ArrayXd aligned = down(decoded.segment(lookahead, packets * n48));
  aligned.conservativeResize(packets * stream.frame_samples);
  std::vector<Eigen::ArrayXd> frames;
  for (Eigen::Index f = 0; f < packets; ++f)
    frames.push_back(aligned.segment(f * stream.frame_samples, stream.frame_samples));
  return concat(stream, std::move(frames));
}

#endif

} // namespace

void validate(const ChannelConfig &config) {
  if (!(config.frame_ms > 0.0) || !std::isfinite(config.frame_ms))
    throw Error(ErrorKind::InvalidArgument, "frame_ms must be positive");
  if (!(config.loss_pct >= 0.0 && config.loss_pct <= 100.0))
    throw Error(ErrorKind::InvalidArgument, "loss_pct must be within [0, 100]");
  if (config.opus.complexity < 0 || config.opus.complexity > 10)
    throw Error(ErrorKind::InvalidArgument, "Opus complexity must be within [0, 10]");
  if (config.opus.bitrate_bps < 0)
    throw Error(ErrorKind::InvalidArgument, "bitrate must be >= 0");
}

std::string_view codec_name(Codec codec) { return codec == Codec::Opus ? "opus" : "null"; }

Codec parse_codec(std::string_view token) {
  if (token == "opus")
    return Codec::Opus;
  if (token == "null")
    return Codec::Null;
  throw Error(ErrorKind::InvalidArgument, "unknown codec '" + std::string(token) + "'");
}

std::size_t PacketStream::lost_count() const {
  std::size_t n = 0;
  for (const auto &p : packets)
    n += p.lost;
  return n;
}

PacketStream packetize(const AudioSignal &signal, const ChannelConfig &config) {
  validate(config);
  if (signal.size() == 0)
    throw Error(ErrorKind::EmptySignal, "cannot packetize an empty signal");
  const double exact = config.frame_ms * signal.sample_rate / 1000.0;
  const auto frame = static_cast<Eigen::Index>(std::llround(exact));
  if (frame < 1 || std::abs(exact - static_cast<double>(frame)) > 1e-6)
    throw Error(ErrorKind::InvalidArgument, "frame_ms does not give a whole number of samples");
  PacketStream stream;
  stream.frame_samples = frame;
  stream.sample_rate = signal.sample_rate;
  const Eigen::Index count = (signal.size() + frame - 1) / frame;
  for (Eigen::Index i = 0; i < count; ++i) {
    Packet p;
    p.index = static_cast<std::size_t>(i);
    p.pcm = Eigen::ArrayXd::Zero(frame);
    const Eigen::Index len = std::min(frame, signal.size() - i * frame);
    p.pcm.head(len) = signal.samples.segment(i * frame, len);
    stream.packets.push_back(std::move(p));
  }
  return stream;
}

std::vector<double> loss_draws(std::size_t packets, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> u(packets);
  for (auto &v : u)
    v = uniform01(rng);
  return u;
}

PacketStream apply_loss(PacketStream stream, double loss_pct, std::uint64_t seed) {
  if (!(loss_pct >= 0.0 && loss_pct <= 100.0))
    throw Error(ErrorKind::InvalidArgument, "loss_pct must be within [0, 100]");
  const auto u = loss_draws(stream.packets.size(), seed);
  for (std::size_t i = 0; i < u.size(); ++i)
    stream.packets[i].lost = u[i] < loss_pct / 100.0;
  return stream;
}

bool opus_available() {
#ifdef EMANPRINT_HAVE_OPUS
  return true;
#else
  return false;
#endif
}

AudioSignal codec_roundtrip(const PacketStream &stream, const ChannelConfig &config) {
  validate(config);
  if (stream.packets.empty())
    throw Error(ErrorKind::EmptySignal, "empty packet stream");
  if (config.codec == Codec::Null)
    return null_roundtrip(stream);
#ifdef EMANPRINT_HAVE_OPUS
  return opus_roundtrip(stream, config);
#else
  throw Error(ErrorKind::AdapterUnavailable,
              "this build has no Opus codec; rebuild with libopus or use the null codec");
#endif
}

AudioSignal degrade_signal(const AudioSignal &signal, const ChannelConfig &config) {
  return codec_roundtrip(apply_loss(packetize(signal, config), config.loss_pct, config.seed),
                         config);
}

} // namespace emanprint::voip
