#include "emanprint/signal.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <optional>
#include <string>
#include <vector>

namespace emanprint {

static_assert(std::endian::native == std::endian::little,
              "WAV codec assumes a little-endian host");

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

template <typename T> T read_le(const std::uint8_t *p) {
  T value;
  std::memcpy(&value, p, sizeof(T));
  return value;
}

template <typename T> void write_le(std::ostream &out, T value) {
  out.write(reinterpret_cast<const char *>(&value), sizeof(T));
}

struct FormatChunk {
  std::uint16_t format = 0;
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  std::uint16_t block_align = 0;
  std::uint16_t bits = 0;
};

double decode_sample(const std::uint8_t *p, const FormatChunk &fmt) {
  if (fmt.format == kFormatFloat) {
    const double v = read_le<float>(p);
    return std::clamp(std::isfinite(v) ? v : 0.0, -1.0, 1.0);
  }
  switch (fmt.bits) {
  case 8:
    return (static_cast<double>(p[0]) - 128.0) / 128.0;
  case 16:
    return read_le<std::int16_t>(p) / 32768.0;
  case 24: {
    std::int32_t v = p[0] | (p[1] << 8) | (p[2] << 16);
    if (v & 0x800000)
      v -= 0x1000000;
    return v / 8388608.0;
  }
  case 32:
    return read_le<std::int32_t>(p) / 2147483648.0;
  default:
    return 0.0;
  }
}

} // namespace

void validate(const AudioSignal &signal) {
  if (signal.samples.size() == 0)
    throw Error(ErrorKind::EmptySignal, "signal has no samples");
  if (!(signal.sample_rate > 0.0))
    throw Error(ErrorKind::InvalidArgument, "sample rate must be positive");
  if (!signal.samples.isFinite().all() || signal.samples.abs().maxCoeff() > 1.0)
    throw Error(ErrorKind::InvalidArgument, "samples must lie in [-1, 1]");
}

AudioSignal make_signal(Eigen::ArrayXd samples, double sample_rate,
                        int source_bit_depth) {
  AudioSignal signal{std::move(samples), sample_rate, source_bit_depth};
  validate(signal);
  return signal;
}

std::int16_t quantize_pcm16(double sample) {
  const double scaled = std::round(sample * 32768.0);
  return static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
}

AudioSignal load_wav(const std::filesystem::path &path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec))
    throw Error(ErrorKind::FileNotFound, "no such file: " + path.string());
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error(ErrorKind::Io, "cannot open " + path.string());
  const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in),
                                        std::istreambuf_iterator<char>()};

  const auto malformed = [&](const std::string &why) {
    return Error(ErrorKind::MalformedHeader, path.string() + ": " + why);
  };
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw malformed("not a RIFF/WAVE file");

  std::optional<FormatChunk> fmt;
  const std::uint8_t *data = nullptr;
  std::size_t data_size = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint8_t *chunk = bytes.data() + pos;
    const auto size = read_le<std::uint32_t>(chunk + 4);
    const std::size_t body = pos + 8;
    const std::size_t available = bytes.size() - body;
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16 || available < 16)
        throw malformed("truncated fmt chunk");
      const std::uint8_t *p = bytes.data() + body;
      FormatChunk f;
      f.format = read_le<std::uint16_t>(p);
      f.channels = read_le<std::uint16_t>(p + 2);
      f.sample_rate = read_le<std::uint32_t>(p + 4);
      f.block_align = read_le<std::uint16_t>(p + 12);
      f.bits = read_le<std::uint16_t>(p + 14);
      if (f.format == kFormatExtensible) {
        if (size < 40 || available < 40)
          throw malformed("truncated extensible fmt chunk");
        f.format = read_le<std::uint16_t>(p + 24);
      }
      fmt = f;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = bytes.data() + body;
      // Streamed writers may leave the size field unset; take what exists.
      data_size = std::min<std::size_t>(size, available);
      break;
    }
    pos = body + size + (size & 1u);
  }
  if (!fmt)
    throw malformed("missing fmt chunk");
  if (!data)
    throw malformed("missing data chunk");

  const bool pcm_ok = fmt->format == kFormatPcm &&
                      (fmt->bits == 8 || fmt->bits == 16 || fmt->bits == 24 ||
                       fmt->bits == 32);
  const bool float_ok = fmt->format == kFormatFloat && fmt->bits == 32;
  if (!pcm_ok && !float_ok)
    throw Error(ErrorKind::UnsupportedEncoding,
                path.string() + ": format tag " + std::to_string(fmt->format) +
                    " with " + std::to_string(fmt->bits) + " bits");
  if (fmt->channels == 0 || fmt->sample_rate == 0)
    throw malformed("zero channels or sample rate");

  const std::size_t bytes_per_sample = fmt->bits / 8;
  const std::size_t frame_bytes = bytes_per_sample * fmt->channels;
  if (fmt->block_align != frame_bytes)
    throw malformed("block alignment does not match channel layout");
  const std::size_t frames = data_size / frame_bytes;
  if (frames == 0)
    throw Error(ErrorKind::EmptySignal, path.string() + ": no sample frames");

  Eigen::ArrayXd samples(static_cast<Eigen::Index>(frames));
  for (std::size_t i = 0; i < frames; ++i) {
    double sum = 0.0;
    for (std::size_t c = 0; c < fmt->channels; ++c)
      sum += decode_sample(data + i * frame_bytes + c * bytes_per_sample, *fmt);
    samples[static_cast<Eigen::Index>(i)] = sum / fmt->channels;
  }
  return AudioSignal{std::move(samples), static_cast<double>(fmt->sample_rate),
                     fmt->bits};
}

void save_wav(const AudioSignal &signal, const std::filesystem::path &path) {
  if (signal.samples.size() == 0)
    throw Error(ErrorKind::EmptySignal, "refusing to write an empty signal");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw Error(ErrorKind::Io, "cannot write " + path.string());

  const auto rate = static_cast<std::uint32_t>(std::lround(signal.sample_rate));
  const auto data_bytes = static_cast<std::uint32_t>(signal.samples.size() * 2);
  out.write("RIFF", 4);
  write_le<std::uint32_t>(out, 36 + data_bytes);
  out.write("WAVEfmt ", 8);
  write_le<std::uint32_t>(out, 16);
  write_le<std::uint16_t>(out, kFormatPcm);
  write_le<std::uint16_t>(out, 1);
  write_le<std::uint32_t>(out, rate);
  write_le<std::uint32_t>(out, rate * 2);
  write_le<std::uint16_t>(out, 2);
  write_le<std::uint16_t>(out, 16);
  out.write("data", 4);
  write_le<std::uint32_t>(out, data_bytes);

  std::vector<std::int16_t> pcm(static_cast<std::size_t>(signal.samples.size()));
  std::transform(signal.samples.begin(), signal.samples.end(), pcm.begin(),
                 quantize_pcm16);
  out.write(reinterpret_cast<const char *>(pcm.data()),
            static_cast<std::streamsize>(pcm.size() * sizeof(std::int16_t)));
  if (!out)
    throw Error(ErrorKind::Io, "short write to " + path.string());
}

} // namespace emanprint
