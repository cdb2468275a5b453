#pragma once

#include <array>
#include <string>
#include <vector>

#include "dscn/errors.hpp"

namespace dscn {

// H x W x 3 raster with unit-interval channels, interleaved (HWC).
struct ImageTensor {
  int height = 0;
  int width = 0;
  std::vector<float> pixels;  // height * width * 3

  static ImageTensor zeros(int h, int w) {
    ImageTensor t;
    t.height = h;
    t.width = w;
    t.pixels.assign(static_cast<size_t>(h) * w * 3, 0.0f);
    return t;
  }
  float& at(int y, int x, int c) {
    return pixels[(static_cast<size_t>(y) * width + x) * 3 + c];
  }
  float at(int y, int x, int c) const {
    return pixels[(static_cast<size_t>(y) * width + x) * 3 + c];
  }
};

// Scalar-to-RGB mapping. The default replicates the scalar into all three
// channels without quantization; a 256-entry lookup table can be loaded from
// a text file of "r g b" lines (integers 0-255).
struct ColormapSpec {
  bool use_lut = false;
  std::vector<std::array<float, 3>> lut;

  static ColormapSpec grayscale() { return {}; }
  static ColormapSpec from_file(const std::string& path);

  std::array<float, 3> map(float v) const;
};

// Minimal PNG codec (8-bit RGB out; 8-bit gray/RGB/RGBA in, no interlacing).
void write_png(const ImageTensor& image, const std::string& path);
ImageTensor read_png(const std::string& path);

std::vector<uint8_t> encode_png(const ImageTensor& image);
ImageTensor decode_png(const std::vector<uint8_t>& bytes);

}  // namespace dscn
