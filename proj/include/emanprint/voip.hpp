#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string_view>
#include <vector>

#include "emanprint/signal.hpp"

namespace emanprint::voip {

enum class Codec { Opus, Null };
enum class BitrateMode { Variable, Constant };
enum class OpusApplication { Voip, Audio, LowDelay };

/// Pass-through encoder settings for the Opus adapter.
struct OpusOptions {
  OpusApplication application = OpusApplication::Audio;
  int bitrate_bps = 0; ///< 0 lets the encoder choose
  int complexity = 10;
};

struct ChannelConfig {
  Codec codec = Codec::Opus;
  double frame_ms = 20.0;
  double loss_pct = 0.0;
  BitrateMode bitrate_mode = BitrateMode::Variable;
  std::uint64_t seed = 0;
  OpusOptions opus;
};

void validate(const ChannelConfig &config);
std::string_view codec_name(Codec codec);
Codec parse_codec(std::string_view token);

struct Packet {
  std::size_t index = 0;
  Eigen::ArrayXd pcm; ///< frame_samples long, kept for lost packets too
  bool lost = false;
};

struct PacketStream {
  std::vector<Packet> packets;
  Eigen::Index frame_samples = 0;
  double sample_rate = 44100.0;

  std::size_t lost_count() const;
};

/// ceil(len / frame) packets; the last one is zero-padded.
PacketStream packetize(const AudioSignal &signal, const ChannelConfig &config);

/// One uniform draw per packet from a generator seeded with `seed`.
std::vector<double> loss_draws(std::size_t packets, std::uint64_t seed);

/// Packet i is lost iff draw_i < loss_pct / 100, so lost sets are nested
/// across loss rates for a fixed seed.
PacketStream apply_loss(PacketStream stream, double loss_pct, std::uint64_t seed);

bool opus_available();

/// Length of the null-codec concealment fade at each end of a repeated frame.
inline constexpr double kPlcFadeSeconds = 0.003;

/// Decodes the stream with the configured codec; lost packets are concealed.
/// Output has packets * frame_samples samples.
AudioSignal codec_roundtrip(const PacketStream &stream, const ChannelConfig &config);

/// packetize -> apply_loss -> codec_roundtrip
AudioSignal degrade_signal(const AudioSignal &signal, const ChannelConfig &config);

} // namespace emanprint::voip
