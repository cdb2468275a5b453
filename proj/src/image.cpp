#include "dscn/image.hpp"

#include <zlib.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace dscn {

std::array<float, 3> ColormapSpec::map(float v) const {
  if (v < 0.0f) v = 0.0f;
  if (v > 1.0f) v = 1.0f;
  if (!use_lut) return {v, v, v};
  int idx = static_cast<int>(std::lround(v * 255.0f));
  return lut[static_cast<size_t>(idx)];
}

ColormapSpec ColormapSpec::from_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open colormap " + path);
  ColormapSpec spec;
  spec.use_lut = true;
  spec.lut.reserve(256);
  std::string line;
  int line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    int r, g, b;
    if (!(ss >> r >> g >> b) || r < 0 || r > 255 || g < 0 || g > 255 || b < 0 || b > 255)
      throw IoError("colormap " + path + ": bad entry at line " + std::to_string(line_no));
    spec.lut.push_back({r / 255.0f, g / 255.0f, b / 255.0f});
  }
  if (spec.lut.size() != 256)
    throw IoError("colormap " + path + ": want 256 entries, got " +
                  std::to_string(spec.lut.size()));
  return spec;
}

namespace {

void put_u32_be(std::vector<uint8_t>& out, uint32_t v) {
  out.push_back(static_cast<uint8_t>(v >> 24));
  out.push_back(static_cast<uint8_t>((v >> 16) & 0xff));
  out.push_back(static_cast<uint8_t>((v >> 8) & 0xff));
  out.push_back(static_cast<uint8_t>(v & 0xff));
}

uint32_t read_u32_be(const uint8_t* p) {
  return (static_cast<uint32_t>(p[0]) << 24) | (static_cast<uint32_t>(p[1]) << 16) |
         (static_cast<uint32_t>(p[2]) << 8) | static_cast<uint32_t>(p[3]);
}

void append_chunk(std::vector<uint8_t>& out, const char type[4],
                  const std::vector<uint8_t>& payload) {
  put_u32_be(out, static_cast<uint32_t>(payload.size()));
  size_t crc_start = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), payload.begin(), payload.end());
  uint32_t crc = static_cast<uint32_t>(
      crc32(0, out.data() + crc_start, static_cast<uInt>(out.size() - crc_start)));
  put_u32_be(out, crc);
}

const uint8_t kPngSig[8] = {137, 80, 78, 71, 13, 10, 26, 10};

int paeth(int a, int b, int c) {
  int p = a + b - c;
  int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  if (pb <= pc) return b;
  return c;
}

}  // namespace

std::vector<uint8_t> encode_png(const ImageTensor& image) {
  const int h = image.height, w = image.width;
  if (h <= 0 || w <= 0) throw IoError("cannot encode empty image");

  // raw scanlines, filter type 0 per row
  std::vector<uint8_t> raw;
  raw.reserve(static_cast<size_t>(h) * (1 + static_cast<size_t>(w) * 3));
  for (int y = 0; y < h; ++y) {
    raw.push_back(0);
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) {
        float v = image.at(y, x, c);
        if (v < 0.0f) v = 0.0f;
        if (v > 1.0f) v = 1.0f;
        raw.push_back(static_cast<uint8_t>(std::lround(v * 255.0f)));
      }
  }

  uLongf bound = compressBound(static_cast<uLong>(raw.size()));
  std::vector<uint8_t> compressed(bound);
  if (compress2(compressed.data(), &bound, raw.data(), static_cast<uLong>(raw.size()), 6) != Z_OK)
    throw IoError("png deflate failed");
  compressed.resize(bound);

  std::vector<uint8_t> out(kPngSig, kPngSig + 8);
  std::vector<uint8_t> ihdr;
  put_u32_be(ihdr, static_cast<uint32_t>(w));
  put_u32_be(ihdr, static_cast<uint32_t>(h));
  ihdr.push_back(8);  // bit depth
  ihdr.push_back(2);  // color type: truecolor
  ihdr.push_back(0);  // compression
  ihdr.push_back(0);  // filter
  ihdr.push_back(0);  // no interlace
  append_chunk(out, "IHDR", ihdr);
  append_chunk(out, "IDAT", compressed);
  append_chunk(out, "IEND", {});
  return out;
}

ImageTensor decode_png(const std::vector<uint8_t>& bytes) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kPngSig, 8) != 0)
    throw IoError("not a PNG file");

  uint32_t w = 0, h = 0;
  int bit_depth = 0, color_type = 0, interlace = 0;
  std::vector<uint8_t> idat;
  size_t pos = 8;
  while (pos + 8 <= bytes.size()) {
    uint32_t len = read_u32_be(bytes.data() + pos);
    if (pos + 12 + len > bytes.size()) throw IoError("truncated PNG chunk");
    const char* type = reinterpret_cast<const char*>(bytes.data() + pos + 4);
    const uint8_t* body = bytes.data() + pos + 8;
    if (std::memcmp(type, "IHDR", 4) == 0) {
      if (len != 13) throw IoError("bad IHDR");
      w = read_u32_be(body);
      h = read_u32_be(body + 4);
      bit_depth = body[8];
      color_type = body[9];
      interlace = body[12];
    } else if (std::memcmp(type, "IDAT", 4) == 0) {
      idat.insert(idat.end(), body, body + len);
    } else if (std::memcmp(type, "IEND", 4) == 0) {
      break;
    }
    pos += 12 + len;
  }
  if (w == 0 || h == 0 || idat.empty()) throw IoError("PNG missing IHDR/IDAT");
  if (bit_depth != 8) throw IoError("unsupported PNG bit depth");
  if (interlace != 0) throw IoError("interlaced PNG not supported");
  int channels;
  switch (color_type) {
    case 0: channels = 1; break;
    case 2: channels = 3; break;
    case 6: channels = 4; break;
    default: throw IoError("unsupported PNG color type");
  }

  size_t stride = static_cast<size_t>(w) * static_cast<size_t>(channels);
  size_t raw_len = static_cast<size_t>(h) * (stride + 1);
  std::vector<uint8_t> raw(raw_len);
  uLongf dst_len = static_cast<uLongf>(raw_len);
  int rc = uncompress(raw.data(), &dst_len, idat.data(), static_cast<uLong>(idat.size()));
  if (rc != Z_OK || dst_len != raw_len) throw IoError("png inflate failed");

  // undo per-row filters in place
  std::vector<uint8_t> pixels(static_cast<size_t>(h) * stride);
  const int bpp = channels;
  for (uint32_t y = 0; y < h; ++y) {
    uint8_t filter = raw[y * (stride + 1)];
    const uint8_t* src = raw.data() + y * (stride + 1) + 1;
    uint8_t* dst = pixels.data() + y * stride;
    const uint8_t* up = y > 0 ? pixels.data() + (y - 1) * stride : nullptr;
    for (size_t i = 0; i < stride; ++i) {
      int a = i >= static_cast<size_t>(bpp) ? dst[i - bpp] : 0;
      int b = up ? up[i] : 0;
      int c = (up && i >= static_cast<size_t>(bpp)) ? up[i - bpp] : 0;
      int v = src[i];
      switch (filter) {
        case 0: break;
        case 1: v += a; break;
        case 2: v += b; break;
        case 3: v += (a + b) / 2; break;
        case 4: v += paeth(a, b, c); break;
        default: throw IoError("bad PNG filter type");
      }
      dst[i] = static_cast<uint8_t>(v & 0xff);
    }
  }

  ImageTensor img = ImageTensor::zeros(static_cast<int>(h), static_cast<int>(w));
  for (uint32_t y = 0; y < h; ++y)
    for (uint32_t x = 0; x < w; ++x) {
      const uint8_t* p = pixels.data() + y * stride + x * static_cast<size_t>(channels);
      float r, g, b;
      if (channels == 1) {
        r = g = b = p[0] / 255.0f;
      } else {
        r = p[0] / 255.0f;
        g = p[1] / 255.0f;
        b = p[2] / 255.0f;
      }
      img.at(static_cast<int>(y), static_cast<int>(x), 0) = r;
      img.at(static_cast<int>(y), static_cast<int>(x), 1) = g;
      img.at(static_cast<int>(y), static_cast<int>(x), 2) = b;
    }
  return img;
}

void write_png(const ImageTensor& image, const std::string& path) {
  std::vector<uint8_t> bytes = encode_png(image);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open " + path + " for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()),
          static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("short write to " + path);
}

ImageTensor read_png(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                             std::istreambuf_iterator<char>());
  return decode_png(bytes);
}

}  // namespace dscn
