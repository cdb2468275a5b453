#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dscn/errors.hpp"

namespace dscn {

// Decoded mono sample stream. Samples are PCM16 normalized by 32768, so the
// domain is exactly [-1.0, 1.0).
struct AudioBuffer {
  std::vector<double> samples;
  int sample_rate_hz = 0;
  std::string source_id;

  double duration_s() const {
    return sample_rate_hz > 0 ? static_cast<double>(samples.size()) / sample_rate_hz : 0.0;
  }
};

struct WavHeader {
  int sample_rate_hz = 0;
  int bits_per_sample = 0;
  int num_channels = 0;
  int64_t num_frames = 0;
};

// Decodes a RIFF/WAV byte string. PCM format code 1, 16-bit only; mono kept
// as-is, stereo averaged to mono before normalization. Unknown chunks (LIST,
// fact, ...) are skipped. Throws MalformedContainer on structural damage and
// UnsupportedFormat on out-of-scope encodings.
std::pair<WavHeader, AudioBuffer> parse_wav(std::span<const uint8_t> bytes,
                                            std::string source_id = "");

// Emits a canonical 44-byte-header PCM16 mono WAV. Samples are quantized with
// round-to-nearest and clamped to the int16 range.
std::vector<uint8_t> encode_wav(const AudioBuffer& buffer);

AudioBuffer read_wav_file(const std::string& path);
void write_wav_file(const AudioBuffer& buffer, const std::string& path);

// Header-only peek (sample rate, frame count) without decoding samples.
WavHeader read_wav_header_file(const std::string& path);

}  // namespace dscn
