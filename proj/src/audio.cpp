#include "sba/audio.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "sba/error.hpp"

namespace sba {

namespace {

static_assert(std::endian::native == std::endian::little, "WAV I/O assumes a little-endian host");

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

template <class T>
T read_le(const std::vector<char>& bytes, std::size_t offset) {
  T value{};
  std::memcpy(&value, bytes.data() + offset, sizeof(T));
  return value;
}

template <class T>
void put_le(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

void write_header(std::ostream& out, std::uint16_t format, std::uint16_t channels,
                  std::uint32_t sample_rate, std::uint16_t bits, std::uint32_t data_bytes) {
  const std::uint16_t block_align = static_cast<std::uint16_t>(channels * bits / 8);
  out.write("RIFF", 4);
  put_le<std::uint32_t>(out, 36 + data_bytes);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  put_le<std::uint32_t>(out, 16);
  put_le<std::uint16_t>(out, format);
  put_le<std::uint16_t>(out, channels);
  put_le<std::uint32_t>(out, sample_rate);
  put_le<std::uint32_t>(out, sample_rate * block_align);
  put_le<std::uint16_t>(out, block_align);
  put_le<std::uint16_t>(out, bits);
  out.write("data", 4);
  put_le<std::uint32_t>(out, data_bytes);
}

}  // namespace

AudioBuffer load_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  const std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::string name = path.string();

  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw DataError(name + ": not a RIFF/WAVE file");
  }

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t sample_rate = 0;
  bool have_fmt = false;
  std::size_t data_offset = 0, data_size = 0;
  bool have_data = false;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint32_t chunk_size = read_le<std::uint32_t>(bytes, pos + 4);
    const std::size_t body = pos + 8;
    if (std::memcmp(bytes.data() + pos, "fmt ", 4) == 0) {
      if (chunk_size < 16 || body + 16 > bytes.size()) throw DataError(name + ": short fmt chunk");
      format = read_le<std::uint16_t>(bytes, body);
      channels = read_le<std::uint16_t>(bytes, body + 2);
      sample_rate = read_le<std::uint32_t>(bytes, body + 4);
      bits = read_le<std::uint16_t>(bytes, body + 14);
      if (format == kFormatExtensible) {
        if (chunk_size < 40 || body + 26 > bytes.size()) throw DataError(name + ": short extensible fmt chunk");
        format = read_le<std::uint16_t>(bytes, body + 24);
      }
      have_fmt = true;
    } else if (std::memcmp(bytes.data() + pos, "data", 4) == 0) {
      data_offset = body;
      data_size = std::min<std::size_t>(chunk_size, bytes.size() - body);
      have_data = true;
    }
    pos = body + chunk_size + (chunk_size & 1U);
  }
  if (!have_fmt || !have_data) throw DataError(name + ": missing fmt or data chunk");
  if (channels == 0) throw DataError(name + ": zero channels");

  const bool pcm16 = format == kFormatPcm && bits == 16;
  const bool float32 = format == kFormatFloat && bits == 32;
  if (!pcm16 && !float32) {
    throw DataError(name + ": unsupported encoding (need PCM 16-bit or float 32-bit)");
  }
  if (sample_rate != static_cast<std::uint32_t>(kRequiredSampleRate)) {
    throw DataError(name + ": unsupported sample rate " + std::to_string(sample_rate) + " Hz (expected 16000)");
  }

  const std::size_t bytes_per_sample = bits / 8;
  const std::size_t n_frames = data_size / (bytes_per_sample * channels);
  if (n_frames == 0) throw DataError(name + ": no audio samples");
  if (channels > 1) {
    spdlog::warn("{}: {} channels averaged down to mono", name, channels);
  }

  AudioBuffer buffer;
  buffer.sample_rate = kRequiredSampleRate;
  buffer.samples.resize(n_frames);
  for (std::size_t f = 0; f < n_frames; ++f) {
    double acc = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      const std::size_t off = data_offset + (f * channels + c) * bytes_per_sample;
      if (pcm16) {
        acc += read_le<std::int16_t>(bytes, off) / 32768.0;
      } else {
        acc += static_cast<double>(read_le<float>(bytes, off));
      }
    }
    const double v = acc / channels;
    if (!std::isfinite(v)) throw DataError(name + ": non-finite sample at frame " + std::to_string(f));
    buffer.samples[f] = v;
  }
  return buffer;
}

void write_wav_pcm16(const std::filesystem::path& path, std::span<const double> samples, int sample_rate) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  const auto data_bytes = static_cast<std::uint32_t>(samples.size() * 2);
  write_header(out, kFormatPcm, 1, static_cast<std::uint32_t>(sample_rate), 16, data_bytes);
  for (double s : samples) {
    if (!std::isfinite(s)) throw NumericError("non-finite sample passed to WAV writer");
    const double q = std::round(std::clamp(s, -1.0, 1.0) * 32768.0);
    put_le<std::int16_t>(out, static_cast<std::int16_t>(std::clamp(q, -32768.0, 32767.0)));
  }
}

void write_wav_float32(const std::filesystem::path& path, std::span<const float> interleaved, int channels,
                       int sample_rate) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  const auto data_bytes = static_cast<std::uint32_t>(interleaved.size() * 4);
  write_header(out, kFormatFloat, static_cast<std::uint16_t>(channels), static_cast<std::uint32_t>(sample_rate),
               32, data_bytes);
  for (float s : interleaved) put_le<float>(out, s);
}

}  // namespace sba
