#include "dscn/wav.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

namespace dscn {

namespace {

constexpr uint32_t kFourCcRiff = 0x46464952;  // "RIFF"
constexpr uint32_t kFourCcWave = 0x45564157;  // "WAVE"
constexpr uint32_t kFourCcFmt = 0x20746d66;   // "fmt "
constexpr uint32_t kFourCcData = 0x61746164;  // "data"

uint16_t read_u16(const uint8_t* p) {
  return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

uint32_t read_u32(const uint8_t* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

void put_u16(std::vector<uint8_t>& out, uint16_t v) {
  out.push_back(static_cast<uint8_t>(v & 0xff));
  out.push_back(static_cast<uint8_t>(v >> 8));
}

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
  out.push_back(static_cast<uint8_t>(v & 0xff));
  out.push_back(static_cast<uint8_t>((v >> 8) & 0xff));
  out.push_back(static_cast<uint8_t>((v >> 16) & 0xff));
  out.push_back(static_cast<uint8_t>((v >> 24) & 0xff));
}

struct FmtChunk {
  uint16_t format_code = 0;
  uint16_t num_channels = 0;
  uint32_t sample_rate = 0;
  uint16_t block_align = 0;
  uint16_t bits_per_sample = 0;
};

struct ParsedChunks {
  FmtChunk fmt;
  const uint8_t* data = nullptr;
  size_t data_len = 0;
};

// Walks the chunk list, validating that every declared length fits. The file
// must be consumed exactly: leftover or overrunning bytes mean a damaged
// length field somewhere.
ParsedChunks scan_chunks(std::span<const uint8_t> bytes) {
  if (bytes.size() < 12) throw MalformedContainer("file too small for RIFF header");
  if (read_u32(bytes.data()) != kFourCcRiff) throw MalformedContainer("missing RIFF magic");
  uint64_t riff_size = read_u32(bytes.data() + 4);
  if (riff_size != bytes.size() - 8)
    throw MalformedContainer("RIFF size field does not match file size");
  if (read_u32(bytes.data() + 8) != kFourCcWave) throw MalformedContainer("missing WAVE tag");

  ParsedChunks out;
  bool have_fmt = false;
  bool have_data = false;
  size_t pos = 12;
  while (pos < bytes.size()) {
    if (bytes.size() - pos < 8) throw MalformedContainer("truncated chunk header");
    uint32_t id = read_u32(bytes.data() + pos);
    uint64_t len = read_u32(bytes.data() + pos + 4);
    pos += 8;
    if (len > bytes.size() - pos) throw MalformedContainer("chunk length exceeds file");
    const uint8_t* body = bytes.data() + pos;
    if (id == kFourCcFmt) {
      if (len < 16) throw MalformedContainer("fmt chunk too small");
      out.fmt.format_code = read_u16(body);
      out.fmt.num_channels = read_u16(body + 2);
      out.fmt.sample_rate = read_u32(body + 4);
      out.fmt.block_align = read_u16(body + 12);
      out.fmt.bits_per_sample = read_u16(body + 14);
      have_fmt = true;
    } else if (id == kFourCcData) {
      if (!have_fmt) throw MalformedContainer("data chunk precedes fmt chunk");
      out.data = body;
      out.data_len = len;
      have_data = true;
    }
    // other chunk types are skipped
    pos += len;
    if (len % 2 == 1) {
      // RIFF chunks are word-aligned; odd payloads carry one pad byte
      if (pos >= bytes.size()) throw MalformedContainer("missing chunk pad byte");
      pos += 1;
    }
  }
  if (!have_fmt) throw MalformedContainer("no fmt chunk");
  if (!have_data) throw MalformedContainer("no data chunk");
  return out;
}

}  // namespace

std::pair<WavHeader, AudioBuffer> parse_wav(std::span<const uint8_t> bytes,
                                            std::string source_id) {
  ParsedChunks chunks = scan_chunks(bytes);
  const FmtChunk& fmt = chunks.fmt;

  if (fmt.format_code != 1)
    throw UnsupportedFormat("format code " + std::to_string(fmt.format_code) + " (want PCM=1)");
  if (fmt.bits_per_sample != 16)
    throw UnsupportedFormat("bit depth " + std::to_string(fmt.bits_per_sample) + " (want 16)");
  if (fmt.num_channels == 0) throw MalformedContainer("zero channel count");
  if (fmt.num_channels > 2)
    throw UnsupportedFormat("channel count " + std::to_string(fmt.num_channels) + " (want 1-2)");
  if (fmt.sample_rate == 0) throw MalformedContainer("zero sample rate");

  size_t bytes_per_frame = static_cast<size_t>(fmt.num_channels) * 2;
  if (fmt.block_align != bytes_per_frame) throw MalformedContainer("bad block align");
  if (chunks.data_len % bytes_per_frame != 0)
    throw MalformedContainer("data chunk not a whole number of frames");

  int64_t num_frames = static_cast<int64_t>(chunks.data_len / bytes_per_frame);
  WavHeader header;
  header.sample_rate_hz = static_cast<int>(fmt.sample_rate);
  header.bits_per_sample = 16;
  header.num_channels = fmt.num_channels;
  header.num_frames = num_frames;

  AudioBuffer buf;
  buf.sample_rate_hz = header.sample_rate_hz;
  buf.source_id = std::move(source_id);
  buf.samples.resize(static_cast<size_t>(num_frames));
  const uint8_t* p = chunks.data;
  if (fmt.num_channels == 1) {
    for (int64_t i = 0; i < num_frames; ++i, p += 2) {
      int16_t raw = static_cast<int16_t>(read_u16(p));
      buf.samples[static_cast<size_t>(i)] = raw / 32768.0;
    }
  } else {
    for (int64_t i = 0; i < num_frames; ++i, p += 4) {
      int16_t l = static_cast<int16_t>(read_u16(p));
      int16_t r = static_cast<int16_t>(read_u16(p + 2));
      // channel average happens in the raw domain, then one normalization
      buf.samples[static_cast<size_t>(i)] = (static_cast<double>(l) + r) * 0.5 / 32768.0;
    }
  }
  return {header, std::move(buf)};
}

std::vector<uint8_t> encode_wav(const AudioBuffer& buffer) {
  const uint32_t rate = static_cast<uint32_t>(buffer.sample_rate_hz);
  const uint32_t data_len = static_cast<uint32_t>(buffer.samples.size() * 2);
  std::vector<uint8_t> out;
  out.reserve(44 + data_len);
  put_u32(out, kFourCcRiff);
  put_u32(out, 36 + data_len);
  put_u32(out, kFourCcWave);
  put_u32(out, kFourCcFmt);
  put_u32(out, 16);
  put_u16(out, 1);  // PCM
  put_u16(out, 1);  // mono
  put_u32(out, rate);
  put_u32(out, rate * 2);  // byte rate
  put_u16(out, 2);         // block align
  put_u16(out, 16);
  put_u32(out, kFourCcData);
  put_u32(out, data_len);
  for (double s : buffer.samples) {
    long q = std::lround(s * 32768.0);
    if (q > 32767) q = 32767;
    if (q < -32768) q = -32768;
    put_u16(out, static_cast<uint16_t>(static_cast<int16_t>(q)));
  }
  return out;
}

AudioBuffer read_wav_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                             std::istreambuf_iterator<char>());
  return parse_wav(bytes, path).second;
}

void write_wav_file(const AudioBuffer& buffer, const std::string& path) {
  std::vector<uint8_t> bytes = encode_wav(buffer);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open " + path + " for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()),
          static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("short write to " + path);
}

WavHeader read_wav_header_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                             std::istreambuf_iterator<char>());
  return parse_wav(bytes, path).first;
}

}  // namespace dscn
