#pragma once

#include <filesystem>
#include <span>
#include <vector>

namespace sba {

inline constexpr int kRequiredSampleRate = 16000;

/// Mono audio with samples in [-1, 1].
struct AudioBuffer {
  std::vector<double> samples;
  int sample_rate = kRequiredSampleRate;
};

/// Reads a PCM-16 or IEEE float-32 RIFF/WAVE file. Multi-channel audio is
/// averaged down to mono (with a logged warning). No resampling: anything
/// other than 16 kHz is rejected with DataError("unsupported sample rate").
AudioBuffer load_wav(const std::filesystem::path& path);

/// Writes 16-bit PCM mono. Samples are clamped to [-1, 1] and quantised as
/// round(x * 32768), saturating at 32767.
void write_wav_pcm16(const std::filesystem::path& path, std::span<const double> samples,
                     int sample_rate = kRequiredSampleRate);

/// Writes 32-bit IEEE float, `channels` interleaved channels.
void write_wav_float32(const std::filesystem::path& path, std::span<const float> interleaved,
                       int channels = 1, int sample_rate = kRequiredSampleRate);

}  // namespace sba
